//! Monte Carlo capture rates for a passive listener, next to their predictions.

use hopshare::analysis::{monte_carlo, to_f64, Scenario};
use hopshare::medium::AdversaryMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let modes = [
        AdversaryMode::IndependentPerPacket { q: 0.25 },
        AdversaryMode::FixedChannelSet { m: 4 },
    ];
    for mode in modes {
        let st = monte_carlo(&Scenario::new(16, 2, mode, 50_000, 2024))?;
        println!("{mode:?}");
        println!("  any share:  {:.4} (predicted {:.4})", st.rate_without_sharing(), to_f64(&st.analytic_p1));
        println!("  >= k shares: {:.4} (predicted {:.4})", st.rate_with_sharing(), to_f64(&st.analytic_p2));
    }
    Ok(())
}
