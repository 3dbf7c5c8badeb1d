//! Structural invariants of the distributions, procedures, and asymptotics
//! modules: round trips, dominance and monotonicity relations, permutation
//! equivariance, and identity checks on tuning functions.

use proptest::prelude::*;

use tsmt_core::asymptotics::{
    a, c_star, detection_threshold, g, g_inverse, optimal_gamma, AsymptoticRegime,
    ThresholdMethod,
};
use tsmt_core::dist::{cdf, quantile, DistSpec};
use tsmt_core::procedures::{
    classic_procedure, split_sample_procedure, two_stage_bonferroni, two_stage_holm,
    ClassicMethod, SelectionRule, Sigma2Estimator, SigmaMode, SplitCutoff,
};
use tsmt_core::Dataset;

const P_GRID: [f64; 13] = [
    1e-8,
    1e-6,
    1e-4,
    0.01,
    0.1,
    0.25,
    0.5,
    0.75,
    0.9,
    0.99,
    1.0 - 1e-4,
    1.0 - 1e-6,
    1.0 - 1e-8,
];

#[test]
fn quantile_cdf_round_trip_over_df_range() {
    let mut worst = 0.0f64;
    for df in 1..=200u32 {
        for &p in &P_GRID {
            for dist in [DistSpec::ChiSquare { df }, DistSpec::StudentT { df }] {
                let x = quantile(dist, p).unwrap();
                let err = (cdf(dist, x).unwrap() - p).abs();
                worst = worst.max(err);
                assert!(err <= 1e-10, "{dist:?} p={p}: err={err:e}");
            }
        }
    }
    for &p in &P_GRID {
        let x = quantile(DistSpec::Normal, p).unwrap();
        let err = (cdf(DistSpec::Normal, x).unwrap() - p).abs();
        assert!(err <= 1e-10, "normal p={p}: err={err:e}");
    }
    println!("round-trip worst |cdf(quantile(p)) - p| = {worst:e}");
}

#[test]
fn quantile_strictly_increasing_in_p() {
    for dist in [
        DistSpec::Normal,
        DistSpec::ChiSquare { df: 7 },
        DistSpec::StudentT { df: 3 },
    ] {
        let mut last = f64::NEG_INFINITY;
        for &p in &P_GRID {
            let x = quantile(dist, p).unwrap();
            assert!(x > last, "{dist:?}: quantile not increasing at p={p}");
            last = x;
        }
    }
}

#[test]
fn g_round_trip_identity() {
    // g(g_inverse(y)) = y to 1e-9 relative on [1/2, 1e3]
    let mut y = 0.5f64;
    while y <= 1e3 {
        let x = g_inverse(y).unwrap();
        let back = g(x).unwrap();
        assert!(
            (back - y).abs() <= 1e-9 * y.max(1.0),
            "y={y}: back={back}"
        );
        y = if y < 0.51 { y + 0.001 } else { y * 1.17 };
    }
}

#[test]
fn c_star_solves_a_on_grid() {
    for gi in 1..=9 {
        let gamma = gi as f64 / 10.0;
        for di in 1..=10 {
            let d = di as f64 / 10.0;
            let v = (1.0 - gamma) * d;
            let c = c_star(gamma, d).unwrap();
            let err = (a(c).unwrap() - v).abs();
            assert!(err <= 1e-9, "gamma={gamma} d={d}: |a(c*)-v|={err:e}");
            // crude constants bracket the cutoff
            assert!((0.25..=2.0).contains(&c), "c*={c}");
        }
    }
}

#[test]
fn detection_threshold_continuous_under_grid_refinement() {
    // adjacent grid values differ by O(grid step)
    for method in [ThresholdMethod::TwoStage, ThresholdMethod::BonferroniT] {
        for &step in &[0.02f64, 0.005] {
            let n = (1.0 / step) as usize;
            let mut prev: Option<f64> = None;
            let mut max_jump = 0.0f64;
            for i in 1..=n {
                let d = i as f64 * step;
                let t = detection_threshold(method, &AsymptoticRegime::new(d, 0.6))
                    .unwrap()
                    .mu_squared_threshold;
                if let Some(p) = prev {
                    max_jump = max_jump.max((t - p).abs());
                }
                prev = Some(t);
            }
            // the threshold's d-derivative stays below 2 e^2 < 15 on [0, 1]
            assert!(
                max_jump <= 16.0 * step,
                "{method:?} step {step}: max jump {max_jump}"
            );
        }
        // and in gamma
        let mut prev: Option<f64> = None;
        for i in 1..=99 {
            let gamma = i as f64 / 100.0;
            let t = detection_threshold(method, &AsymptoticRegime::new(0.5, gamma))
                .unwrap()
                .mu_squared_threshold;
            if let Some(p) = prev {
                assert!((t - p).abs() < 0.1, "{method:?} gamma={gamma}");
            }
            prev = Some(t);
        }
    }
}

#[test]
fn optimal_gamma_nonincreasing_in_d() {
    let mut last = f64::INFINITY;
    for i in 1..=10 {
        let d = i as f64 / 10.0;
        let opt = optimal_gamma(d).unwrap();
        assert!(
            opt.gamma <= last + 1e-4,
            "gamma* increased at d={d}: {} > {last}",
            opt.gamma
        );
        last = opt.gamma;
    }
}

// ---------------------------------------------------------------------------
// Procedure invariants on randomized datasets
// ---------------------------------------------------------------------------

fn dataset_strategy(
    max_m: usize,
    n_range: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Dataset> {
    (2..=max_m, n_range).prop_flat_map(|(m, n)| {
        proptest::collection::vec(
            proptest::collection::vec(-3.0f64..3.0, n..=n),
            m..=m,
        )
        .prop_map(|rows| Dataset::from_rows(&rows).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holm_dominates_bonferroni(
        ds in dataset_strategy(12, 3..=6),
        gamma in 0.05f64..1.0,
        alpha in 0.01f64..0.3,
    ) {
        let rule = SelectionRule::for_dataset(&ds, gamma, SigmaMode::KnownUnit, Sigma2Estimator::Mean).unwrap();
        let bonf = two_stage_bonferroni(&ds, alpha, &rule).unwrap();
        let holm = two_stage_holm(&ds, alpha, &rule).unwrap();
        for idx in &bonf.rejected {
            prop_assert!(holm.rejected.contains(idx), "bonferroni rejected {idx} but holm did not");
        }
        // rejected always within selected
        for idx in &holm.rejected {
            prop_assert!(holm.selected.contains(idx));
        }
    }

    #[test]
    fn selection_monotone_in_threshold(
        ds in dataset_strategy(10, 3..=6),
        lo in 0.0f64..5.0,
        bump in 0.0f64..5.0,
    ) {
        let rule_low = SelectionRule { gamma: 0.5, sigma_mode: SigmaMode::KnownUnit, threshold_u: lo, sigma2_hat: None };
        let rule_high = SelectionRule { threshold_u: lo + bump, ..rule_low.clone() };
        let low = two_stage_bonferroni(&ds, 0.1, &rule_low).unwrap();
        let high = two_stage_bonferroni(&ds, 0.1, &rule_high).unwrap();
        // lowering the threshold never shrinks the selected set
        for idx in &high.selected {
            prop_assert!(low.selected.contains(idx));
        }
    }

    #[test]
    fn rejections_monotone_in_alpha(
        ds in dataset_strategy(10, 3..=6),
        gamma in 0.05f64..1.0,
        alpha in 0.01f64..0.2,
        step in 0.01f64..0.5,
    ) {
        let alpha_hi = (alpha + step).min(0.95);
        let rule = SelectionRule::for_dataset(&ds, gamma, SigmaMode::KnownUnit, Sigma2Estimator::Mean).unwrap();
        for proc_fn in [two_stage_bonferroni, two_stage_holm] {
            let small = proc_fn(&ds, alpha, &rule).unwrap();
            let big = proc_fn(&ds, alpha_hi, &rule).unwrap();
            for idx in &small.rejected {
                prop_assert!(big.rejected.contains(idx), "raising alpha lost rejection {idx}");
            }
        }
        let p: Vec<f64> = (0..ds.n_hypotheses()).map(|i| (i as f64 + 0.5) / ds.n_hypotheses() as f64).collect();
        for method in [ClassicMethod::Bonferroni, ClassicMethod::Holm, ClassicMethod::Hochberg, ClassicMethod::BenjaminiHochberg] {
            let small = classic_procedure(&p, alpha, method).unwrap();
            let big = classic_procedure(&p, alpha_hi, method).unwrap();
            for idx in &small {
                prop_assert!(big.contains(idx));
            }
        }
    }

    #[test]
    fn permutation_equivariance(
        ds in dataset_strategy(8, 4..=8),
        alpha in 0.01f64..0.3,
        seed in 0u64..1000,
    ) {
        // deterministic permutation from the seed
        let m = ds.n_hypotheses();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        for i in (1..m).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            perm.swap(i, (state as usize) % (i + 1));
        }
        let permuted = ds.permuted(&perm).unwrap();

        let rule = SelectionRule::for_dataset(&ds, 0.6, SigmaMode::Estimated, Sigma2Estimator::Mean).unwrap();
        let rule_p = SelectionRule::for_dataset(&permuted, 0.6, SigmaMode::Estimated, Sigma2Estimator::Mean).unwrap();
        prop_assert!((rule.threshold_u - rule_p.threshold_u).abs() < 1e-9 * rule.threshold_u.max(1.0));

        let base = two_stage_holm(&ds, alpha, &rule).unwrap();
        let moved = two_stage_holm(&permuted, alpha, &rule_p).unwrap();
        // new index i corresponds to old index perm[i]
        let mut expect_selected: Vec<usize> = (0..m).filter(|&i| base.selected.contains(&perm[i])).collect();
        expect_selected.sort_unstable();
        prop_assert_eq!(&moved.selected, &expect_selected);
        let mut expect_rejected: Vec<usize> = (0..m).filter(|&i| base.rejected.contains(&perm[i])).collect();
        expect_rejected.sort_unstable();
        prop_assert_eq!(&moved.rejected, &expect_rejected);
    }

    #[test]
    fn split_sample_rejects_within_selected(
        ds in dataset_strategy(8, 4..=8),
        gamma in 0.05f64..1.0,
        alpha in 0.01f64..0.3,
    ) {
        let res = split_sample_procedure(&ds, alpha, gamma, 0.5, SplitCutoff::Gamma).unwrap();
        for idx in &res.rejected {
            prop_assert!(res.selected.contains(idx));
        }
        prop_assert_eq!(res.per_hypothesis.len(), ds.n_hypotheses());
    }

    #[test]
    fn cdf_monotone_in_x(x1 in -30.0f64..30.0, x2 in -30.0f64..30.0, df in 1u32..200) {
        let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        for dist in [DistSpec::Normal, DistSpec::StudentT { df }, DistSpec::ChiSquare { df }] {
            let a = cdf(dist, lo).unwrap();
            let b = cdf(dist, hi).unwrap();
            prop_assert!(a <= b + 1e-15, "{:?}: cdf({}) = {} > cdf({}) = {}", dist, lo, a, hi, b);
        }
    }
}
