//! Empirical error of the pilot-based tap estimator against its predicted variance.

use muvfdm::channel::{complex_gaussian, estimate_csit, ChannelTaps, Link, LinkKind, TrainingBudget};
use muvfdm::experiments::trial::substream;

fn main() -> muvfdm::Result<()> {
    let noise = 1.0;
    let link = Link { kind: LinkKind::SmallToMacroUser, tx: 0, rx: 0 };
    println!("pilot_snr  training  predicted_mse  empirical_mse");
    for (i, pilot_snr) in [0.1, 1.0, 10.0, 100.0].into_iter().enumerate() {
        for training in [1, 10, 50] {
            let budget = TrainingBudget::new(1000, training, pilot_snr * noise / training as f64)?;
            let mut rng = substream(2, i, training as u32, 0);
            let draws = 20_000;
            let mut sq = 0.0;
            let mut predicted = 0.0;
            for _ in 0..draws {
                let taps = ChannelTaps { link, taps: vec![complex_gaussian(&mut rng, 1.0)] };
                let est = estimate_csit(&taps, &budget, noise, &mut rng);
                predicted = est.error_variance;
                sq += (est.estimate.taps[0] - taps.taps[0]).norm_sqr();
            }
            println!("{pilot_snr:<10} {training:<9} {predicted:<14.5} {:.5}", sq / draws as f64);
        }
    }
    Ok(())
}
