//! Hex digest followed by ROT13, and back.

use hopshare::codec::{from_hex_digest, rot13, to_hex_digest, RotText};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("HELLO -> {}", rot13("HELLO"));

    let plain = b"HELLO";
    let digest = to_hex_digest(plain);
    let rotated = RotText::from_digest(&digest);
    println!("hex:   {}", digest.as_str());
    println!("rot13: {}", rotated.as_str());

    let back = from_hex_digest(&RotText::parse(rotated.as_str())?.to_digest());
    println!("back:  {}", String::from_utf8_lossy(&back));
    Ok(())
}
