//! How much of the perfect-knowledge rate each tier keeps when the small cells learn
//! their channels from pilots, at the best training length on the grid.

use muvfdm::experiments::recipes::csit_scenario;
use muvfdm::experiments::{run_sweep, Scheme, Tier};

fn main() -> muvfdm::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    println!("K  beta snr_db  tier   best_tau  ratio");
    for (k, beta) in [(3, 1), (3, 2), (3, 3), (1, 1), (6, 1)] {
        let mut cfg = csit_scenario(k, beta)?;
        cfg.trials = trials;
        let res = run_sweep(&cfg, None)?;
        for &snr in &cfg.snr_db {
            for tier in [Tier::Macro, Tier::Small] {
                let (tau, _) = res.best_tau(Scheme::Ribf, tier, snr).unwrap();
                let ratio = res.best_tau_ratio(Scheme::Ribf, tier, snr).unwrap();
                println!("{k:<2} {beta:<4} {snr:<7} {tier:<6} {tau:<9.2} {ratio:.3}");
            }
        }
    }
    Ok(())
}
