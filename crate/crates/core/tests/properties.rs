use faer::{c64, Mat};
use muvfdm::channel::complex_gaussian;
use muvfdm::experiments::trial::substream;
use muvfdm::experiments::{run_sweep, run_trial, CsitMode, ScenarioConfig, Scheme, Tier};
use muvfdm::matrix::{distance, identity, null_space_basis, subcarrier_masks};
use muvfdm::metrics::sue_effective_sinr;
use muvfdm::precoder::{normalize_cascade, InnerPrecoder};
use proptest::prelude::*;

fn gaussian(rows: usize, cols: usize, seed: u64) -> Mat<c64> {
    let mut rng = substream(seed, 0, 0, 7);
    Mat::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, 1.0))
}

fn tiny(seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.n = 8;
    c.l = 2;
    c.m = 2;
    c.k = 2;
    c.gamma_tx = 4;
    c.snr_db = vec![0.0, 15.0, 30.0];
    c.seed = seed;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_basis_is_orthonormal_and_annihilated(rows in 1usize..12, extra in 1usize..8, seed in any::<u64>()) {
        let h = gaussian(rows, rows + extra, seed);
        let e = null_space_basis(h.as_ref()).unwrap();
        prop_assert_eq!((e.nrows(), e.ncols()), (rows + extra, extra));
        prop_assert!((&h * &e).norm_l2() <= 1e-12 * h.norm_l2());
        prop_assert!(distance((e.adjoint() * &e).as_ref(), identity(extra).as_ref()) <= 1e-12);
    }

    #[test]
    fn masks_partition_the_band(m in 1usize..9, per_user in 1usize..9) {
        let n = m * per_user;
        let masks = subcarrier_masks(n, m).unwrap();
        let mut seen = vec![0; n];
        for mask in &masks {
            prop_assert_eq!(mask.len(), per_user);
            for &k in mask.indices() {
                seen[k] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn transmit_precoder_ignores_outer_scale(scale in 1e-6f64..1e6, seed in any::<u64>()) {
        let cross: Vec<_> = (0..3).map(|i| gaussian(4, 6, seed ^ i)).collect();
        let inner = InnerPrecoder::from_cross_blocks(&cross).unwrap();
        let phi = gaussian(inner.cols(), 5, seed.wrapping_add(1));
        let a = normalize_cascade(&inner, phi.as_ref()).unwrap();
        let scaled = &phi * faer::Scale(c64::new(scale, 0.0));
        let b = normalize_cascade(&inner, scaled.as_ref()).unwrap();
        prop_assert!(distance(a.transmit.as_ref(), b.transmit.as_ref()) <= 1e-12);
        prop_assert!((a.transmit.squared_norm_l2() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn training_never_helps_a_link(x in 1e-6f64..1e6, training in 1usize..1000) {
        let eff = sue_effective_sinr(x, training);
        prop_assert!(eff > 0.0 && eff < x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bound_dominates_regularized_inverse_per_trial(seed in any::<u64>(), trial in 0usize..1000, gamma in 4usize..9) {
        let mut cfg = tiny(seed);
        cfg.gamma_tx = gamma;
        cfg.schemes = vec![Scheme::Dpc, Scheme::Ribf, Scheme::Mf];
        let rec = run_trial(&cfg, trial).unwrap();
        for si in 0..cfg.snr_db.len() {
            let dpc = rec.get(Scheme::Dpc, si, None).unwrap().small_bps;
            let ribf = rec.get(Scheme::Ribf, si, None).unwrap().small_bps;
            let mf = rec.get(Scheme::Mf, si, None).unwrap().small_bps;
            prop_assert!(dpc >= ribf, "dpc {} < ribf {}", dpc, ribf);
            prop_assert!(dpc >= mf, "dpc {} < mf {}", dpc, mf);
        }
    }
}

#[test]
fn trained_knowledge_costs_rate_on_both_tiers() {
    let mut cfg = tiny(5);
    cfg.csit = CsitMode::Imperfect;
    cfg.mbs_interference = true;
    cfg.trials = 20;
    cfg.tau_fractions = vec![0.01, 0.1, 0.3];
    cfg.schemes = vec![Scheme::Ribf, Scheme::Mf, Scheme::Separation];
    let res = run_sweep(&cfg, Some(1)).unwrap();
    for &snr in &cfg.snr_db {
        for &scheme in &cfg.schemes {
            let tiers: &[Tier] = if scheme == Scheme::Separation { &[Tier::Small] } else { &Tier::ALL };
            for &tier in tiers {
                let perfect = res.mean(scheme, tier, snr, 0.0).unwrap();
                for &f in &cfg.tau_fractions {
                    let trained = res.mean(scheme, tier, snr, f).unwrap();
                    assert!(trained < perfect, "{scheme} {tier} at {snr} dB, tau {f}: {trained} >= {perfect}");
                }
            }
        }
    }
}
