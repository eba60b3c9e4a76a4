//! Split a message into byte-wise threshold shares and rebuild it from a subset.

use hopshare::gfshare::{reconstruct_message, share_message};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let msg = b"meet at the north gate";
    let (n, k) = (7, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let streams = share_message(msg, n, k, &mut rng)?;

    for s in &streams {
        let head: Vec<u16> = s.values().iter().take(6).map(|v| v.value()).collect();
        println!("x={:<3} {:?} ...", s.x().value(), head);
    }

    let subset = [streams[1].clone(), streams[3].clone(), streams[4].clone(), streams[6].clone()];
    let back = reconstruct_message(&subset, k)?;
    println!("from 4 shares: {}", String::from_utf8_lossy(&back));

    let err = reconstruct_message(&subset[..3], k).unwrap_err();
    println!("from 3 shares: {err}");
    Ok(())
}
