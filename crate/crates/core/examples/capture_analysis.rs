//! Exact capture probabilities and subset counts.

use hopshare::analysis::{report, ways_at_most, ways_exact};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for row in report(100_000, &[5, 8, 10])? {
        println!(
            "N={} k={:>2}  P1={}  P2={}  bits {:.3} / {:.3}",
            row.channels, row.k, row.p1_exact, row.p2_exact, row.bits_p1, row.bits_p2
        );
    }
    println!();
    for n in [5u32, 10, 20] {
        for k in [1, n / 2, n] {
            println!("n={n:>2} k={k:>2}  exactly k: {:>7}  at most k: {:>7}", ways_exact(n, k)?, ways_at_most(n, k)?);
        }
    }
    Ok(())
}
