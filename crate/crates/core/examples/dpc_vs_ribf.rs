//! Small-cell sum rate of the log-det bound, the regularized inverse and the matched
//! filter over SNR, for load rates 1, 2 and 3.
//!
//! cargo run --release --example dpc_vs_ribf -- [trials]

use muvfdm::experiments::recipes::sum_rate_scenario;
use muvfdm::experiments::{run_sweep, Scheme, Tier};

fn main() -> muvfdm::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    println!("beta snr_db    dpc[Mb/s]  ribf[Mb/s]  mf[Mb/s]");
    for beta in [1, 2, 3] {
        let mut cfg = sum_rate_scenario(beta)?;
        cfg.trials = trials;
        let res = run_sweep(&cfg, None)?;
        for &snr in &cfg.snr_db {
            let rate = |s| res.mean(s, Tier::Small, snr, 0.0).unwrap() / 1e6;
            println!(
                "{beta:<4} {snr:<8} {:>10.3} {:>11.3} {:>9.3}",
                rate(Scheme::Dpc),
                rate(Scheme::Ribf),
                rate(Scheme::Mf)
            );
        }
    }
    Ok(())
}
