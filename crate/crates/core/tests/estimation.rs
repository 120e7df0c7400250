use tailasym::copula::alpha_population;
use tailasym::estimation::{alpha_hat, alpha_star, u_min_rule};
use tailasym::margins::{to_uniform, MarginSpec};
use tailasym::sampling::sample_clayton_cauchy;
use tailasym::{CopulaModel, SeedSpec};

const GRID: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Mean over replications of `max_u |alpha_hat(u) - alpha_star(u)|`.
fn mean_gap(n: usize, reps: u64) -> f64 {
    let cauchy = MarginSpec::cauchy(0.0, 1.0).unwrap();
    let total: f64 = (0..reps)
        .map(|r| {
            let raw = sample_clayton_cauchy(3.0, n, SeedSpec::new(21, r)).unwrap();
            let uni = to_uniform(&raw, &cauchy, &cauchy).unwrap();
            GRID.iter()
                .map(|&u| (alpha_hat(&uni, u).unwrap().to_f64() - alpha_star(&raw, u).unwrap().to_f64()).abs())
                .fold(0.0, f64::max)
        })
        .sum();
    total / reps as f64
}

#[test]
fn known_margin_and_rank_estimators_converge_together() {
    let small = mean_gap(1_000, 20);
    let large = mean_gap(10_000, 20);
    assert!(small.is_finite() && large.is_finite());
    // The gap is O(n^-1/2): a tenfold n should shrink it by about sqrt(10).
    assert!(large < small / 2.0, "gap {small} at n=1e3, {large} at n=1e4");
}

#[test]
fn known_margin_estimates_track_the_population_curve() {
    let model = CopulaModel::clayton(3.0).unwrap();
    let cauchy = MarginSpec::cauchy(0.0, 1.0).unwrap();
    let raw = sample_clayton_cauchy(3.0, 50_000, SeedSpec::new(22, 0)).unwrap();
    let uni = to_uniform(&raw, &cauchy, &cauchy).unwrap();
    for u in GRID {
        let truth = alpha_population(&model, u).unwrap().to_f64();
        let est = alpha_hat(&uni, u).unwrap().to_f64();
        // Five asymptotic standard errors.
        let c = model_counts(&model, u);
        let se = ((c.0 + c.1) / (c.0 * c.1) / 50_000.0).sqrt();
        assert!((est - truth).abs() < 5.0 * se, "u={u}: {est} vs {truth}");
    }
    let lo = u_min_rule(&[&uni], 30).unwrap().unwrap();
    assert!(lo > 0.0 && lo < 0.1);
}

fn model_counts(model: &CopulaModel, u: f64) -> (f64, f64) {
    use tailasym::copula::Copula;
    (model.diagonal(u), model.survival_diagonal(u))
}
