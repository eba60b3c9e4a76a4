//! Encode and decode data and SYNC frames.

use hopshare::packet::{classify, decode_data, decode_sync, encode_data, encode_sync, DataPacket, SyncPacket};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = DataPacket::new(3, 0xDEAD_BEEF, b"0123456789")?;
    let raw = encode_data(&data);
    println!("data  {}", hex(&raw));
    println!("      {:?} countdown={}", classify(&raw)?, decode_data(&raw)?.countdown());

    let sync = SyncPacket { node_id: 7, clock_count: 1_000_123 };
    let raw = encode_sync(&sync);
    println!("sync  {}", hex(&raw));
    println!("      {:?} {:?}", classify(&raw)?, decode_sync(&raw)?);

    let mut bad = encode_data(&data);
    bad[15] |= 1;
    println!("dirty padding: {}", decode_data(&bad).unwrap_err());
    Ok(())
}
