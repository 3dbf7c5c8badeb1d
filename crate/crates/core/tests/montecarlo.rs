//! Seeded Monte Carlo checks: independence of the selection and test
//! statistics, finite-sample FWER control, selected-count laws, dependence
//! robustness, and parallel determinism. All runs are deterministic given
//! the seeds fixed here.

use rayon::ThreadPoolBuilder;

use tsmt_core::procedures::{
    estimate_sigma2, gamma_for_beta, summary_stats, two_stage_bonferroni, SelectionRule,
    Sigma2Estimator, SigmaMode,
};
use tsmt_core::sim::presets::{scenario_preset, Preset, PresetOptions, PresetPlan};
use tsmt_core::sim::{
    estimate_metrics, generate_dataset, run_replication, Dependence, MeanMode, MethodSpec,
    MetricsReport, ScenarioConfig, VarianceMode,
};

fn null_config(m: usize, n: usize, seed: u64, reps: usize) -> ScenarioConfig {
    ScenarioConfig {
        m,
        n,
        dependence: Dependence::Independent,
        variance: VarianceMode::Unit,
        means: MeanMode::Constant(0.0),
        signal_count: 0,
        method: MethodSpec::TwoStageBonferroni {
            gamma: 0.5,
            sigma: SigmaMode::KnownUnit,
            estimator: Sigma2Estimator::Mean,
        },
        alpha: 0.05,
        replications: reps,
        base_seed: seed,
    }
}

#[test]
fn selection_and_test_statistics_are_uncorrelated_under_null() {
    // surrogate for Basu independence: empirical corr(S, T) over 1e5 draws
    let reps = 100_000u64;
    let cfg = null_config(1, 15, 2_718, 1);
    let mut s_sum = 0.0;
    let mut t_sum = 0.0;
    let mut ss = 0.0;
    let mut tt = 0.0;
    let mut st = 0.0;
    for rep in 0..reps {
        let (ds, _) = generate_dataset(&cfg, rep).unwrap();
        let h = &summary_stats(&ds).unwrap()[0];
        s_sum += h.s_stat;
        t_sum += h.t_stat;
        ss += h.s_stat * h.s_stat;
        tt += h.t_stat * h.t_stat;
        st += h.s_stat * h.t_stat;
    }
    let nf = reps as f64;
    let cov = st / nf - (s_sum / nf) * (t_sum / nf);
    let vs = ss / nf - (s_sum / nf) * (s_sum / nf);
    let vt = tt / nf - (t_sum / nf) * (t_sum / nf);
    let corr = cov / (vs * vt).sqrt();
    let bound = 3.0 / nf.sqrt();
    assert!(corr.abs() <= bound, "corr = {corr}, bound = {bound}");
}

#[test]
fn fwer_controlled_for_any_fixed_threshold() {
    // all nulls, independent, known sigma: any threshold u keeps FWER <= alpha
    let reps = 2000usize;
    let alpha = 0.05;
    for (u, seed) in [(10.0, 41u64), (22.0, 42), (30.0, 43)] {
        let cfg = null_config(200, 15, seed, reps);
        let rule = SelectionRule {
            gamma: 0.5,
            sigma_mode: SigmaMode::KnownUnit,
            threshold_u: u,
            sigma2_hat: None,
        };
        let mut hits = 0usize;
        for rep in 0..reps as u64 {
            let (ds, _) = generate_dataset(&cfg, rep).unwrap();
            let res = two_stage_bonferroni(&ds, alpha, &rule).unwrap();
            if !res.rejected.is_empty() {
                hits += 1;
            }
        }
        let fwer = hits as f64 / reps as f64;
        let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt();
        assert!(fwer <= bound, "u = {u}: fwer = {fwer} > {bound}");
    }
}

#[test]
fn sigma2_estimate_converges_at_root_mn_rate() {
    // sigma^2 = 1: |sigma2_hat - 1| <= 5/sqrt(mn) in at least 99% of reps
    let reps = 300u64;
    let cfg = null_config(1000, 15, 7_777, 1);
    let tol = 5.0 / (1000.0f64 * 15.0).sqrt();
    let mut within = 0usize;
    for rep in 0..reps {
        let (ds, _) = generate_dataset(&cfg, rep).unwrap();
        let s2 = estimate_sigma2(&ds, Sigma2Estimator::Mean).unwrap();
        if (s2 - 1.0).abs() <= tol {
            within += 1;
        }
    }
    let frac = within as f64 / reps as f64;
    assert!(frac >= 0.99, "within-rate {frac}");
}

#[test]
fn expected_selected_count_at_least_m_gamma() {
    // global null: E|S_hat| = m * m^{gamma-1} = m^gamma exactly; estimate it
    let (m, gamma, reps) = (2000usize, 0.6f64, 300usize);
    let mut cfg = null_config(m, 15, 1_234, reps);
    cfg.method = MethodSpec::TwoStageBonferroni {
        gamma,
        sigma: SigmaMode::KnownUnit,
        estimator: Sigma2Estimator::Mean,
    };
    let report = estimate_metrics(&cfg).unwrap();
    let sel = report.mean_selected.unwrap();
    let target = (m as f64).powf(gamma);
    assert!(
        sel.value >= target - 3.0 * sel.se,
        "mean selected {} < {} - 3*{}",
        sel.value,
        target,
        sel.se
    );
}

// The concentration claim "|S_hat|/m^gamma within 10% of 1 in >= 95% of
// replications at m = 1e4, gamma = 0.6, one signal" is not attainable: under
// the global null |S_hat| is Binomial(m, m^{-0.4}), so the ratio has standard
// deviation sqrt((1-beta)/m^gamma) = 0.062 and P(within 10%) = 89.7% by
// exact binomial arithmetic. The mean-based form of the law (see the
// acceptance suite) is the attainable statement and passes.
#[test]
#[ignore = "within-10%-in-95%-of-reps exceeds what Binomial(m, m^{gamma-1}) concentration gives at m = 1e4"]
fn selected_count_ratio_concentrates_literal() {
    let (m, gamma, reps) = (10_000usize, 0.6f64, 500usize);
    let mut cfg = null_config(m, 15, 5_150, reps);
    cfg.signal_count = 1;
    cfg.means = MeanMode::UniformPm1;
    cfg.method = MethodSpec::TwoStageBonferroni {
        gamma,
        sigma: SigmaMode::KnownUnit,
        estimator: Sigma2Estimator::Mean,
    };
    let target = (m as f64).powf(gamma);
    let mut within = 0usize;
    for rep in 0..reps as u64 {
        let out = run_replication(&cfg, rep).unwrap();
        let ratio = out.selected_count.unwrap() as f64 / target;
        if (ratio - 1.0).abs() <= 0.10 {
            within += 1;
        }
    }
    let frac = within as f64 / reps as f64;
    assert!(frac >= 0.95, "within-10% fraction = {frac}");
}

#[test]
fn block_dependent_selection_ratio_concentrates() {
    // blocks of 10 at rho = 0.5, all nulls: sd of |S_hat|/m^gamma stays small
    let (m, gamma, reps) = (10_000usize, 0.6f64, 500usize);
    let cfg = ScenarioConfig {
        dependence: Dependence::Block {
            rho: 0.5,
            block_size: 10,
        },
        method: MethodSpec::TwoStageBonferroni {
            gamma,
            sigma: SigmaMode::KnownUnit,
            estimator: Sigma2Estimator::Mean,
        },
        ..null_config(m, 15, 6_060, reps)
    };
    let target = (m as f64).powf(gamma);
    let ratios: Vec<f64> = (0..reps as u64)
        .map(|rep| {
            let out = run_replication(&cfg, rep).unwrap();
            out.selected_count.unwrap() as f64 / target
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
        / (ratios.len() - 1) as f64;
    let sd = var.sqrt();
    assert!(sd <= 0.15, "sd of |S_hat|/m^gamma = {sd}");
    assert!((mean - 1.0).abs() < 0.05, "mean ratio = {mean}");
}

#[test]
fn independent_rows_show_no_cross_correlation() {
    // mean absolute empirical cross-correlation over 200 row pairs
    let (m, n, reps) = (20usize, 15usize, 50u64);
    let cfg = null_config(m, n, 9_009, 1);
    let total = reps as usize * n;
    let mut rows: Vec<Vec<f64>> = vec![Vec::with_capacity(total); m];
    for rep in 0..reps {
        let (ds, _) = generate_dataset(&cfg, rep).unwrap();
        for (i, row) in rows.iter_mut().enumerate() {
            row.extend_from_slice(ds.row(i));
        }
    }
    let corr = |a: &[f64], b: &[f64]| {
        let nf = a.len() as f64;
        let (ma, mb) = (
            a.iter().sum::<f64>() / nf,
            b.iter().sum::<f64>() / nf,
        );
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for i in 0..a.len() {
            cov += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
        }
        cov / (va * vb).sqrt()
    };
    let mut sum_abs = 0.0;
    let mut pairs = 0usize;
    'outer: for i in 0..m {
        for j in (i + 1)..m {
            sum_abs += corr(&rows[i], &rows[j]).abs();
            pairs += 1;
            if pairs == 200 {
                break 'outer;
            }
        }
    }
    let mean_abs = sum_abs / pairs as f64;
    let bound = 3.0 / (total as f64).sqrt();
    assert!(mean_abs <= bound, "mean |corr| = {mean_abs}, bound = {bound}");
}

#[test]
fn half_selection_rule_selects_about_fifty_of_hundred() {
    // selection tuned to beta = 0.5 with estimated sigma^2
    let gamma = gamma_for_beta(100, 0.5).unwrap();
    let cfg = ScenarioConfig {
        variance: VarianceMode::CommonUniform { lo: 0.5, hi: 1.5 },
        method: MethodSpec::TwoStageBonferroni {
            gamma,
            sigma: SigmaMode::Estimated,
            estimator: Sigma2Estimator::Mean,
        },
        ..null_config(100, 15, 808, 300)
    };
    let report = estimate_metrics(&cfg).unwrap();
    let sel = report.mean_selected.unwrap().value;
    assert!((47.0..53.0).contains(&sel), "mean selected = {sel}");
}

fn report_bits(r: &MetricsReport) -> Vec<(String, u64, u64)> {
    r.named()
        .into_iter()
        .map(|(name, e)| (name.to_string(), e.value.to_bits(), e.se.to_bits()))
        .collect()
}

#[test]
fn metrics_identical_across_worker_counts() {
    let cfg = ScenarioConfig {
        signal_count: 5,
        means: MeanMode::UniformPm1,
        method: MethodSpec::TwoStageHolm {
            gamma: 0.5,
            sigma: SigmaMode::Estimated,
            estimator: Sigma2Estimator::Mean,
        },
        variance: VarianceMode::CommonUniform { lo: 0.5, hi: 1.5 },
        ..null_config(150, 15, 31_337, 400)
    };
    let mut reports = Vec::new();
    for threads in [1usize, 2, 8] {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let report = pool.install(|| estimate_metrics(&cfg)).unwrap();
        reports.push(report_bits(&report));
    }
    assert_eq!(reports[0], reports[1], "1 vs 2 workers");
    assert_eq!(reports[0], reports[2], "1 vs 8 workers");
}

#[test]
fn all_null_preset_cells_control_fwer() {
    // estimated FWER of the two-stage procedure stays below alpha + 3 SE in
    // every all-null cell of every preset (reduced replication count; the
    // tolerance adapts)
    let reps = 300usize;
    let alpha = 0.05f64;
    let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt();
    let options = PresetOptions {
        replications: reps,
        base_seed: 777,
        mean_mode_override: None,
    };
    let mut checked = 0usize;
    for preset in [Preset::Fig8_1, Preset::Fig8_2, Preset::Fig8_3, Preset::Fig8_4] {
        let plan = scenario_preset(preset, &options).unwrap();
        let cells = match plan {
            PresetPlan::Simulation(cells) => cells,
            PresetPlan::ThresholdGrid(_) => continue,
        };
        for cell in cells {
            if cell.config.signal_count != 0 || cell.method_label != "ts-bonf" {
                continue;
            }
            let report = estimate_metrics(&cell.config).unwrap();
            let fwer = report.fwer.unwrap().value;
            assert!(fwer <= bound, "{}: fwer = {fwer} > {bound}", cell.id);
            checked += 1;
        }
    }
    // fig8_1 type1 panel (20 cells) + fig8_3 pi1 = 0 (2 cells)
    assert_eq!(checked, 22);
}

#[test]
fn average_power_flat_in_correlation() {
    // fig8_4 grid: two-stage average power varies across rho by no more than
    // 4 pooled standard errors
    let options = PresetOptions {
        replications: 2000,
        base_seed: 4_004,
        mean_mode_override: None,
    };
    let plan = scenario_preset(Preset::Fig8_4, &options).unwrap();
    let cells = match plan {
        PresetPlan::Simulation(cells) => cells,
        _ => unreachable!(),
    };
    let mut estimates = Vec::new();
    for cell in cells.iter().filter(|c| c.method_label == "ts-bonf") {
        let report = estimate_metrics(&cell.config).unwrap();
        estimates.push(report.avg_power.unwrap());
    }
    assert_eq!(estimates.len(), 20);
    let max = estimates
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    let min = estimates
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    let spread = max.value - min.value;
    let pooled_se = (max.se * max.se + min.se * min.se).sqrt();
    assert!(
        spread <= 4.0 * pooled_se,
        "avg power spread {spread} > 4 * pooled SE {pooled_se}"
    );
}
