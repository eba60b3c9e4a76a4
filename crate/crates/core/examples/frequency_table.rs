//! Print the first rows of the channel-to-frequency table as CSV.

use hopshare::hopping::write_frequency_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    write_frequency_table(std::io::stdout().lock(), count)?;
    Ok(())
}
