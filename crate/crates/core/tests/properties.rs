use proptest::prelude::*;
use tailasym::copula::{alpha_population, Copula, Permuted, Survival};
use tailasym::estimation::{
    alpha_hat, alpha_star, ci_asymptotic, ci_band_bonferroni, jump_set, pseudo_observations, TailCounter,
};
use tailasym::margins::{to_uniform, MarginSpec};
use tailasym::measures::beta;
use tailasym::{CopulaModel, PairedSample, Scale};

fn dyadic_sample(max_n: usize) -> impl Strategy<Value = PairedSample> {
    (1..=max_n).prop_flat_map(|n| {
        let col = || proptest::collection::vec(1u32..(1 << 12), n);
        (col(), col()).prop_map(|(a, b)| {
            let f = |v: Vec<u32>| v.into_iter().map(|k| k as f64 / 4096.0).collect();
            PairedSample::new(f(a), f(b), Scale::Uniform).unwrap()
        })
    })
}

fn model() -> impl Strategy<Value = CopulaModel> {
    prop_oneof![
        (-0.99f64..0.99).prop_map(|r| CopulaModel::gaussian(r).unwrap()),
        (-1.0f64..=1.0).prop_map(|t| CopulaModel::fgm(t).unwrap()),
        (0.05f64..20.0).prop_map(|t| CopulaModel::plackett(t).unwrap()),
        (-15.0f64..15.0).prop_filter("nonzero", |t| t.abs() > 1e-3).prop_map(|t| CopulaModel::frank(t).unwrap()),
        (-0.99f64..15.0).prop_filter("nonzero", |t| t.abs() > 1e-3).prop_map(|t| CopulaModel::clayton(t).unwrap()),
        (1.0f64..10.0).prop_map(|t| CopulaModel::gumbel(t).unwrap()),
        (-1.0f64..=1.0).prop_map(|t| CopulaModel::amh(t).unwrap()),
        ((0.1f64..5.0), (1.0f64..8.0)).prop_map(|(d, t)| CopulaModel::bb7(d, t).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn alpha_hat_swap_and_reflection(s in dyadic_sample(150), k in 1u32..=2048) {
        let u = k as f64 / 4096.0;
        let a = alpha_hat(&s, u).unwrap();
        prop_assert_eq!(alpha_hat(&s.swapped(), u).unwrap(), a);
        prop_assert_eq!(alpha_hat(&s.reflected(), u).unwrap(), a.neg());
    }

    #[test]
    fn alpha_hat_is_a_step_function_on_jumps(s in dyadic_sample(80), k in 1u32..=2048) {
        let u = k as f64 / 4096.0;
        let c = TailCounter::new(&s).unwrap();
        let jumps = jump_set(&s).unwrap();
        // Between consecutive jumps the counts equal those at the last jump.
        if let Some(&j) = jumps.iter().rev().find(|&&j| j <= u) {
            prop_assert_eq!((c.counts(u).lower, c.counts(u).upper), (c.counts(j).lower, c.counts(j).upper));
        } else {
            prop_assert_eq!((c.counts(u).lower, c.counts(u).upper), (0, 0));
        }
    }

    #[test]
    fn counts_are_monotone(s in dyadic_sample(100), a in 1u32..=2048, b in 1u32..=2048) {
        let (lo, hi) = (a.min(b) as f64 / 4096.0, a.max(b) as f64 / 4096.0);
        let c = TailCounter::new(&s).unwrap();
        prop_assert!(c.counts(lo).lower <= c.counts(hi).lower);
        prop_assert!(c.counts(lo).upper <= c.counts(hi).upper);
    }

    #[test]
    fn alpha_star_ignores_monotone_transforms(
        x in proptest::collection::vec(-50.0f64..50.0, 2..100),
        seed in any::<u64>(),
        k in 1u32..=50,
    ) {
        let n = x.len();
        let y: Vec<f64> = (0..n).map(|i| ((seed >> (i % 64)) & 0xff) as f64 + i as f64 * 1e-3).collect();
        let raw = PairedSample::new(x.clone(), y.clone(), Scale::Raw).unwrap();
        let moved = PairedSample::new(
            x.iter().map(|v| v * 8.0).collect(),
            y.iter().map(|v| 3.0 * v - 7.0).collect(),
            Scale::Raw,
        ).unwrap();
        let u = k as f64 / 100.0;
        prop_assert_eq!(alpha_star(&raw, u).unwrap(), alpha_star(&moved, u).unwrap());
        prop_assert_eq!(pseudo_observations(&raw).unwrap(), pseudo_observations(&moved).unwrap());
    }

    #[test]
    fn bonferroni_band_contains_pointwise(s in dyadic_sample(120)) {
        let band = ci_band_bonferroni(&s, 0.9).unwrap();
        let point = ci_asymptotic(&s, &band.u_grid, 0.9).unwrap();
        for i in 0..band.len() {
            prop_assert_eq!(band.estimate[i], point.estimate[i]);
            prop_assert!(band.lower[i] <= point.lower[i]);
            prop_assert!(band.upper[i] >= point.upper[i]);
        }
    }

    #[test]
    fn beta_is_bounded_for_kappa_one(m in model(), k in 1u32..=50) {
        let u = k as f64 / 100.0;
        let b = beta(&m, u, 1.0).unwrap();
        prop_assert!((-1.0..=1.0).contains(&b), "{} at {}: {}", m, u, b);
    }

    #[test]
    fn population_alpha_symmetries(m in model(), k in 1u32..=50) {
        let u = k as f64 / 100.0;
        let a = alpha_population(&m, u).unwrap();
        let p = alpha_population(&Permuted(&m), u).unwrap();
        let r = alpha_population(&Survival(&m), u).unwrap();
        match (a.finite(), p.finite(), r.finite()) {
            (Some(a), Some(p), Some(r)) => {
                prop_assert!((a - p).abs() <= 1e-12 * (1.0 + a.abs()));
                prop_assert!((a + r).abs() <= 1e-9 * (1.0 + a.abs()));
            }
            _ => {
                prop_assert_eq!(a, p);
                prop_assert_eq!(a, r.neg());
            }
        }
    }

    #[test]
    fn diagonals_are_probabilities(m in model(), k in 1u32..=50) {
        let u = k as f64 / 100.0;
        let (d, s) = (m.diagonal(u), m.survival_diagonal(u));
        prop_assert!((0.0..=u).contains(&d));
        prop_assert!((0.0..=u).contains(&s));
        prop_assert!(d >= (2.0 * u - 1.0).max(0.0) - 1e-15);
    }

    #[test]
    fn known_margins_map_into_the_open_unit_square(
        x in proptest::collection::vec(-30.0f64..30.0, 1..60),
        loc in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let raw = PairedSample::new(x.clone(), x.iter().map(|v| -v).collect(), Scale::Raw).unwrap();
        let m = MarginSpec::cauchy(loc, scale).unwrap();
        let u = to_uniform(&raw, &m, &MarginSpec::cauchy(-loc, scale * 2.0).unwrap()).unwrap();
        prop_assert!(u.x1.iter().chain(&u.x2).all(|&v| v > 0.0 && v < 1.0));
        let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(u.x1.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
