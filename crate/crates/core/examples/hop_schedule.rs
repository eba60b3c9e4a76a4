//! Derive a hop schedule from a shared seed and show that both ends agree.

use hopshare::hopping::{build_schedule, build_schedule_in, LfsrState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0x1ACE);

    let lfsr = LfsrState::new(seed)?;
    let first: Vec<u32> = lfsr.take(8).collect();
    println!("lfsr({seed}) -> {first:?}");

    let sender = build_schedule(seed, 8)?;
    let receiver = build_schedule(seed, 8)?;
    assert_eq!(sender, receiver);
    for (i, ch) in sender.channels().iter().enumerate() {
        println!("part {i}: channel {:>6}  {} Hz", ch.get(), ch.frequency_hz());
    }
    println!("{} register steps", sender.draw_count());

    // a narrow band forces rejections and duplicate re-draws
    let narrow = build_schedule_in(seed, 10, 16)?;
    let picks: Vec<u32> = narrow.channels().iter().map(|c| c.get()).collect();
    println!("16-channel band: {picks:?} after {} steps", narrow.draw_count());
    Ok(())
}
