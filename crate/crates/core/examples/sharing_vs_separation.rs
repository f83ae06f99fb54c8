//! Total two-tier rate of spectrum sharing against giving the small cells their own
//! slice of the band. Pass `imperfect` to train the small-cell channels first.
//!
//! cargo run --release --example sharing_vs_separation -- [perfect|imperfect] [trials]

use muvfdm::experiments::recipes::separation_scenario;
use muvfdm::experiments::{run_sweep, CsitMode, Scheme, Tier};

fn main() -> muvfdm::Result<()> {
    let mut args = std::env::args().skip(1);
    let csit = match args.next().as_deref() {
        Some("imperfect") => CsitMode::Imperfect,
        _ => CsitMode::Perfect,
    };
    let mut cfg = separation_scenario(csit)?;
    cfg.trials = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    let res = run_sweep(&cfg, None)?;

    println!("snr_db  sharing[Mb/s]  separation[Mb/s]");
    for &snr in &cfg.snr_db {
        let total = |s| match csit {
            CsitMode::Perfect => res.mean(s, Tier::Total, snr, 0.0).unwrap(),
            CsitMode::Imperfect => res.best_tau(s, Tier::Total, snr).unwrap().1,
        };
        println!("{snr:<7} {:>13.3} {:>17.3}", total(Scheme::Ribf) / 1e6, total(Scheme::Separation) / 1e6);
    }
    Ok(())
}
