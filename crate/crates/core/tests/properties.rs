mod common;

use obliv_relay::channel::ChannelKind;
use obliv_relay::frontier::dirichlet_sample;
use obliv_relay::sim::Typicality;
use obliv_relay::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn random_joint(seed: u64) -> JointDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = (0..4).map(|_| rng.random_range(1..=3)).collect();
    let total = sizes.iter().product();
    let mut probs = dirichlet_sample(total, &mut rng);
    // sparse tables exercise zero-probability cells
    if rng.random_bool(0.3) {
        let zero = rng.random_range(0..total);
        let mass = probs[zero];
        probs[zero] = 0.0;
        let live = probs.iter().filter(|&&p| p > 0.0).count().max(1) as f64;
        probs.iter_mut().filter(|p| **p > 0.0).for_each(|p| *p += mass / live);
    }
    let vars = ["A", "B", "C", "D"].iter().zip(&sizes).map(|(n, &s)| (n.to_string(), s)).collect();
    JointDistribution::new(vars, probs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn information_is_nonnegative(seed in any::<u64>()) {
        let j = random_joint(seed);
        prop_assert!(j.mutual_info(&["A"], &["B", "C"]).unwrap() >= 0.0);
        prop_assert!(j.cond_mutual_info(&["A"], &["B"], &["C", "D"]).unwrap() >= 0.0);
        prop_assert!(j.entropy(&["A", "B", "C", "D"]).unwrap() >= j.entropy(&["A", "B"]).unwrap() - 1e-12);
    }

    #[test]
    fn chain_rule(seed in any::<u64>()) {
        let j = random_joint(seed);
        let whole = j.cond_mutual_info(&["A"], &["B", "C"], &["D"]).unwrap();
        let parts = j.cond_mutual_info(&["A"], &["B"], &["D"]).unwrap()
            + j.cond_mutual_info(&["A"], &["C"], &["B", "D"]).unwrap();
        prop_assert!((whole - parts).abs() < 1e-10);
        let h = |s: &[&str]| j.entropy(s).unwrap();
        let mi = j.mutual_info(&["A"], &["B"]).unwrap();
        prop_assert!((mi - (h(&["A"]) + h(&["B"]) - h(&["A", "B"]))).abs() < 1e-10);
    }

    #[test]
    fn marginalization_commutes(seed in any::<u64>()) {
        let j = random_joint(seed);
        let two_step = j.marginalize(&["A", "C", "D"]).unwrap().marginalize(&["C", "A"]).unwrap();
        let one_step = j.marginalize(&["A", "C"]).unwrap();
        prop_assert_eq!(two_step.names(), one_step.names());
        for (a, b) in two_step.probs().iter().zip(one_step.probs()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
        prop_assert!((one_step.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compressions_depend_on_relay_output_only(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, ChannelKind::Multicast, vec![2, 2], vec![2, 2], 3, vec![1.0, 1.0]);
        let pol = random_policy(&ch, 2, &[2, 3], &mut rng);
        let j = build_joint(&ch, &pol).unwrap();
        prop_assert!(j.cond_mutual_info(&["YH1"], &["YH2"], &["YR", "Q"]).unwrap().abs() < 1e-10);
        prop_assert!(j.cond_mutual_info(&["YH1", "YH2"], &["X1", "X2", "Y1", "Y2"], &["YR", "Q"]).unwrap().abs() < 1e-10);
        prop_assert!(j.cond_mutual_info(&["X1"], &["X2"], &["Q"]).unwrap().abs() < 1e-10);
    }

    #[test]
    fn gcf_matches_nnc(seed in any::<u64>(), c in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_pmarc(&mut rng, None, c);
        let yh = rng.random_range(1..=3);
        let pol = random_policy(&ch, rng.random_range(1..=2), &[yh], &mut rng);
        let g = gcf_region_pmarc(&ch, &pol).unwrap();
        let n = nnc_region_pmarc(&ch, &pol).unwrap();
        for (a, b) in g.effective_bounds().iter().zip(n.effective_bounds()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert_eq!(region_compare(&g, &n, 1e-9).unwrap().verdict, Verdict::Equal);
    }

    #[test]
    fn bounds_grow_with_capacity(seed in any::<u64>(), c in 0.0f64..2.0, extra in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_pmarc(&mut rng, None, c);
        let pol = random_policy(&ch, 1, &[2], &mut rng);
        let lo = gcf_region_pmarc(&ch, &pol).unwrap();
        let hi = gcf_region_pmarc(&ch.with_link_capacities(vec![c + extra]).unwrap(), &pol).unwrap();
        for (a, b) in lo.effective_bounds().iter().zip(hi.effective_bounds()) {
            prop_assert!(b >= a - 1e-12);
        }
        prop_assert!(matches!(region_compare(&lo, &hi, 1e-12).unwrap().verdict, Verdict::Equal | Verdict::ASubsetB));
    }

    #[test]
    fn cf_never_beats_gcf(seed in any::<u64>(), c in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_pmarc(&mut rng, None, c);
        let pol = random_policy(&ch, 1, &[2], &mut rng);
        let cf = cf_region_pmarc(&ch, &pol).unwrap();
        let gcf = gcf_region_pmarc(&ch, &pol).unwrap();
        if cf.feasible {
            for (a, b) in cf.effective_bounds().iter().zip(gcf.effective_bounds()) {
                prop_assert!(*a <= b + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_events_partition_failures(seed in any::<u64>(), n in 2usize..6, conditional in any::<bool>()) {
        let ch = fixture("bsc_pmarc", &[("p", 0.2)]);
        let pol = uniform_policy(&ch, 1, &[2]).unwrap();
        let cfg = SimConfig {
            trials: 60,
            seed,
            typicality: if conditional { Typicality::Conditional } else { Typicality::Joint },
            ..SimConfig::new(Topology::Pmarc, n, vec![0.3, 0.3], vec![0.8])
        };
        let r = simulate(&ch, &pol, &cfg).unwrap();
        let d = &r.destinations[0];
        prop_assert_eq!(d.events.iter().sum::<u64>(), d.failures);
        prop_assert_eq!(d.failures, r.failures);
        prop_assert!(r.failures <= r.trials);
        prop_assert!((r.error_rate - r.failures as f64 / r.trials as f64).abs() < 1e-15);
        prop_assert_eq!(r, simulate(&ch, &pol, &cfg).unwrap());
    }
}
