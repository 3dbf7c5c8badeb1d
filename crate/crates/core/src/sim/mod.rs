//! Scenario-driven data generation and Monte Carlo execution.
//!
//! Reproducibility contract: every replication draws from its own RNG stream
//! keyed by (base_seed, replication_index), generation consumes randomness in
//! a fixed documented order, and aggregation runs in replication order.
//! Results are therefore bitwise identical under any parallel schedule, and
//! two configs sharing generative parameters and seed see identical data
//! (common random numbers across methods).

pub mod presets;

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::procedures::{
    classic_procedure, higher_criticism_global, simes_global, split_sample_procedure,
    summary_stats, two_stage_bonferroni, two_stage_holm, ClassicMethod, HcCalibration,
    ProcedureResult, SelectionRule, Sigma2Estimator, SigmaMode, SplitCutoff,
};

/// Dependence structure across the m coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dependence {
    Independent,
    /// All pairs share correlation rho through a common per-observation factor.
    EqualCorrelation { rho: f64 },
    /// Correlation rho confined to disjoint blocks of `block_size` rows.
    Block { rho: f64, block_size: usize },
}

/// How per-hypothesis standard deviations are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode {
    Unit,
    /// One sigma^2 ~ U(lo, hi) shared by every hypothesis (redrawn per
    /// replication).
    CommonUniform { lo: f64, hi: f64 },
    /// Independent sigma_i^2 ~ U(lo, hi) per hypothesis.
    PerHypothesisUniform { lo: f64, hi: f64 },
}

/// How nonzero means are assigned to the first `signal_count` hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanMode {
    /// Drawn from U(-1, 1), redrawn each replication.
    UniformPm1,
    /// All equal to the given constant.
    Constant(f64),
}

/// The procedure a scenario runs each replication.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    TwoStageBonferroni {
        gamma: f64,
        sigma: SigmaMode,
        estimator: Sigma2Estimator,
    },
    TwoStageHolm {
        gamma: f64,
        sigma: SigmaMode,
        estimator: Sigma2Estimator,
    },
    Classic(ClassicMethod),
    SplitBonferroni {
        gamma: f64,
        split_fraction: f64,
        cutoff: SplitCutoff,
    },
    Simes,
    HigherCriticism {
        calibration_seed: u64,
        calibration_replications: usize,
    },
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            MethodSpec::TwoStageBonferroni { .. } => "ts-bonf",
            MethodSpec::TwoStageHolm { .. } => "ts-holm",
            MethodSpec::Classic(ClassicMethod::Bonferroni) => "bonferroni",
            MethodSpec::Classic(ClassicMethod::Holm) => "holm",
            MethodSpec::Classic(ClassicMethod::Hochberg) => "hochberg",
            MethodSpec::Classic(ClassicMethod::BenjaminiHochberg) => "bh",
            MethodSpec::SplitBonferroni { .. } => "ss-bonf",
            MethodSpec::Simes => "simes",
            MethodSpec::HigherCriticism { .. } => "hc",
        }
    }
}

/// Full generative + procedure + replication specification for one
/// simulation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub dependence: Dependence,
    pub variance: VarianceMode,
    pub means: MeanMode,
    /// Number of false nulls; rows 0..signal_count receive the nonzero means.
    pub signal_count: usize,
    pub method: MethodSpec,
    pub alpha: f64,
    pub replications: usize,
    pub base_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config("m must be >= 1"));
        }
        if self.n < 2 {
            return Err(Error::config("n must be >= 2"));
        }
        if self.signal_count > self.m {
            return Err(Error::config(format!(
                "signal count {} exceeds m = {}",
                self.signal_count, self.m
            )));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(Error::config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be >= 1"));
        }
        match self.dependence {
            Dependence::Independent => {}
            Dependence::EqualCorrelation { rho } => check_rho(rho)?,
            Dependence::Block { rho, block_size } => {
                check_rho(rho)?;
                if block_size == 0 || block_size > self.m {
                    return Err(Error::config(format!(
                        "block size must lie in [1, m], got {block_size}"
                    )));
                }
            }
        }
        match self.variance {
            VarianceMode::Unit => {}
            VarianceMode::CommonUniform { lo, hi }
            | VarianceMode::PerHypothesisUniform { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || lo < 0.0 || hi <= lo {
                    return Err(Error::config(format!(
                        "variance range must satisfy 0 <= lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::config(format!("rho must lie in [0, 1), got {rho}")))
    }
}

/// The independent RNG stream of one replication.
fn replication_rng(base_seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replication);
    rng
}

/// Generates one replication's dataset and its truth labels (true = false
/// null, i.e. mu_i != 0).
///
/// Draw order is fixed: variances, then means, then (for correlated modes)
/// the shared factors observation-by-observation, then the noise matrix
/// row-major.
pub fn generate_dataset(config: &ScenarioConfig, replication: u64) -> Result<(Dataset, Vec<bool>)> {
    config.validate()?;
    let mut rng = replication_rng(config.base_seed, replication);
    Ok(generate_with_rng(config, &mut rng))
}

fn generate_with_rng(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> (Dataset, Vec<bool>) {
    let (m, n) = (config.m, config.n);

    let sds: Vec<f64> = match config.variance {
        VarianceMode::Unit => vec![1.0; m],
        VarianceMode::CommonUniform { lo, hi } => {
            let sd = rng.random_range(lo..hi).sqrt();
            vec![sd; m]
        }
        VarianceMode::PerHypothesisUniform { lo, hi } => {
            (0..m).map(|_| rng.random_range(lo..hi).sqrt()).collect()
        }
    };

    let mut means = vec![0.0f64; m];
    match config.means {
        MeanMode::UniformPm1 => {
            for mu in means.iter_mut().take(config.signal_count) {
                *mu = rng.random_range(-1.0..1.0);
            }
        }
        MeanMode::Constant(v) => {
            for mu in means.iter_mut().take(config.signal_count) {
                *mu = v;
            }
        }
    }

    let mut values = vec![0.0f64; m * n];
    match config.dependence {
        Dependence::Independent => {
            for i in 0..m {
                for j in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    values[i * n + j] = means[i] + sds[i] * z;
                }
            }
        }
        Dependence::EqualCorrelation { rho } => {
            let shared: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let (sr, sz) = (rho.sqrt(), (1.0 - rho).sqrt());
            for i in 0..m {
                for j in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    values[i * n + j] = means[i] + sds[i] * (sr * shared[j] + sz * z);
                }
            }
        }
        Dependence::Block { rho, block_size } => {
            let blocks = m.div_ceil(block_size);
            let shared: Vec<f64> = (0..blocks * n).map(|_| rng.sample(StandardNormal)).collect();
            let (sr, sz) = (rho.sqrt(), (1.0 - rho).sqrt());
            for i in 0..m {
                let b = i / block_size;
                for j in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    values[i * n + j] = means[i] + sds[i] * (sr * shared[b * n + j] + sz * z);
                }
            }
        }
    }

    let truth: Vec<bool> = means.iter().map(|&mu| mu != 0.0).collect();
    (Dataset::from_flat(m, n, values), truth)
}

/// Method state that is shared across replications (currently the Higher
/// Criticism critical value, which is expensive to calibrate).
#[derive(Debug, Clone)]
pub struct ResolvedMethod {
    spec: MethodSpec,
    hc_critical: Option<f64>,
}

/// Calibration cache key: (m, alpha bits, seed, replications).
type HcCacheKey = (usize, u64, u64, usize);

/// Process-wide cache of simulated HC critical values; the value is a pure
/// function of the key, so caching cannot change any result.
fn hc_critical_cached(m: usize, alpha: f64, seed: u64, replications: usize) -> Result<f64> {
    static CACHE: OnceLock<Mutex<BTreeMap<HcCacheKey, f64>>> = OnceLock::new();
    let key = (m, alpha.to_bits(), seed, replications);
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&key) {
        return Ok(v);
    }
    let v = HcCalibration::simulate_critical_value(m, alpha, seed, replications)?;
    cache.lock().unwrap().insert(key, v);
    Ok(v)
}

/// Prepares a method for repeated application: validates its parameters and
/// runs the Higher Criticism calibration once if needed.
pub fn resolve_method(config: &ScenarioConfig) -> Result<ResolvedMethod> {
    config.validate()?;
    let hc_critical = match config.method {
        MethodSpec::HigherCriticism {
            calibration_seed,
            calibration_replications,
        } => Some(hc_critical_cached(
            config.m,
            config.alpha,
            calibration_seed,
            calibration_replications,
        )?),
        _ => None,
    };
    Ok(ResolvedMethod {
        spec: config.method.clone(),
        hc_critical,
    })
}

/// The decisions of one method application, in both detailed and compact form.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedOutcome {
    /// Per-hypothesis detail for selection/testing procedures; None for the
    /// pure global tests (Simes, Higher Criticism).
    pub detail: Option<ProcedureResult>,
    pub rejected: Vec<usize>,
    pub selected_count: Option<usize>,
    pub global_reject: bool,
}

/// Applies the resolved method to one dataset.
pub fn apply_method(
    resolved: &ResolvedMethod,
    dataset: &Dataset,
    alpha: f64,
) -> Result<AppliedOutcome> {
    match &resolved.spec {
        MethodSpec::TwoStageBonferroni {
            gamma,
            sigma,
            estimator,
        } => {
            let rule = SelectionRule::for_dataset(dataset, *gamma, *sigma, *estimator)?;
            let res = two_stage_bonferroni(dataset, alpha, &rule)?;
            Ok(outcome_from_result(res))
        }
        MethodSpec::TwoStageHolm {
            gamma,
            sigma,
            estimator,
        } => {
            let rule = SelectionRule::for_dataset(dataset, *gamma, *sigma, *estimator)?;
            let res = two_stage_holm(dataset, alpha, &rule)?;
            Ok(outcome_from_result(res))
        }
        MethodSpec::Classic(method) => {
            let stats = summary_stats(dataset)?;
            let p_values: Vec<f64> = stats.iter().map(|h| h.p_value).collect();
            let rejected = classic_procedure(&p_values, alpha, *method)?;
            let global_reject = !rejected.is_empty();
            Ok(AppliedOutcome {
                detail: None,
                rejected,
                selected_count: None,
                global_reject,
            })
        }
        MethodSpec::SplitBonferroni {
            gamma,
            split_fraction,
            cutoff,
        } => {
            let res = split_sample_procedure(dataset, alpha, *gamma, *split_fraction, *cutoff)?;
            Ok(outcome_from_result(res))
        }
        MethodSpec::Simes => {
            let stats = summary_stats(dataset)?;
            let p_values: Vec<f64> = stats.iter().map(|h| h.p_value).collect();
            let global_reject = simes_global(&p_values, alpha)?;
            Ok(AppliedOutcome {
                detail: None,
                rejected: Vec::new(),
                selected_count: None,
                global_reject,
            })
        }
        MethodSpec::HigherCriticism { .. } => {
            let critical = resolved
                .hc_critical
                .ok_or_else(|| Error::config("higher criticism method was not calibrated"))?;
            let stats = summary_stats(dataset)?;
            let p_values: Vec<f64> = stats.iter().map(|h| h.p_value).collect();
            let mut cal = HcCalibration::new();
            cal.insert(p_values.len(), alpha, critical);
            let global_reject = higher_criticism_global(&p_values, alpha, &cal)?;
            Ok(AppliedOutcome {
                detail: None,
                rejected: Vec::new(),
                selected_count: None,
                global_reject,
            })
        }
    }
}

fn outcome_from_result(res: ProcedureResult) -> AppliedOutcome {
    let global_reject = !res.rejected.is_empty();
    let selected_count = Some(res.selected.len());
    let rejected = res.rejected.clone();
    AppliedOutcome {
        detail: Some(res),
        rejected,
        selected_count,
        global_reject,
    }
}

/// Compact result of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepOutcome {
    pub replication: u64,
    /// Stage-one count for selection procedures, absent for global tests and
    /// single-stage corrections.
    pub selected_count: Option<usize>,
    pub rejected_count: usize,
    /// Rejections of true nulls.
    pub false_rejections: usize,
    /// Rejections of false nulls.
    pub true_rejections: usize,
    /// Number of false nulls in this replication's truth labels.
    pub false_null_count: usize,
    pub global_reject: bool,
}

fn run_with_resolved(
    config: &ScenarioConfig,
    resolved: &ResolvedMethod,
    replication: u64,
) -> Result<RepOutcome> {
    let mut rng = replication_rng(config.base_seed, replication);
    let (dataset, truth) = generate_with_rng(config, &mut rng);
    let outcome = apply_method(resolved, &dataset, config.alpha)?;
    let false_null_count = truth.iter().filter(|&&t| t).count();
    let mut false_rejections = 0usize;
    let mut true_rejections = 0usize;
    for &idx in &outcome.rejected {
        if truth[idx] {
            true_rejections += 1;
        } else {
            false_rejections += 1;
        }
    }
    Ok(RepOutcome {
        replication,
        selected_count: outcome.selected_count,
        rejected_count: outcome.rejected.len(),
        false_rejections,
        true_rejections,
        false_null_count,
        global_reject: outcome.global_reject,
    })
}

/// Runs one replication: a deterministic function of
/// (base_seed, replication_index, config).
pub fn run_replication(config: &ScenarioConfig, replication: u64) -> Result<RepOutcome> {
    let resolved = resolve_method(config)?;
    run_with_resolved(config, &resolved, replication)
}

/// A point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Estimated error rates and powers for one scenario cell. Estimates that
/// are undefined for the cell (e.g. average power with no false nulls, or
/// FWER for a pure global test) are absent rather than zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// P(at least one true null rejected).
    pub fwer: Option<Estimate>,
    /// P(global rejection) when every null is true.
    pub global_type1: Option<Estimate>,
    /// Mean proportion of false nulls rejected.
    pub avg_power: Option<Estimate>,
    /// P(global rejection) when false nulls exist.
    pub global_power: Option<Estimate>,
    /// Mean stage-one selection count.
    pub mean_selected: Option<Estimate>,
    pub replications: usize,
}

impl MetricsReport {
    /// (name, estimate) pairs in a fixed emission order.
    pub fn named(&self) -> Vec<(&'static str, Estimate)> {
        let mut out = Vec::new();
        if let Some(e) = self.fwer {
            out.push(("fwer", e));
        }
        if let Some(e) = self.global_type1 {
            out.push(("global_type1", e));
        }
        if let Some(e) = self.avg_power {
            out.push(("avg_power", e));
        }
        if let Some(e) = self.global_power {
            out.push(("global_power", e));
        }
        if let Some(e) = self.mean_selected {
            out.push(("mean_selected", e));
        }
        out
    }
}

fn proportion_estimate(hits: usize, total: usize) -> Estimate {
    let p = hits as f64 / total as f64;
    Estimate {
        value: p,
        se: (p * (1.0 - p) / total as f64).sqrt(),
    }
}

fn mean_estimate(values: &[f64]) -> Estimate {
    let r = values.len();
    let mean = values.iter().sum::<f64>() / r as f64;
    let se = if r > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1) as f64;
        (var / r as f64).sqrt()
    } else {
        0.0
    };
    Estimate { value: mean, se }
}

/// Runs every replication of the scenario (in parallel over the current
/// rayon pool) and aggregates in replication order, so the report does not
/// depend on the worker count.
pub fn estimate_metrics(config: &ScenarioConfig) -> Result<MetricsReport> {
    let resolved = resolve_method(config)?;
    let outcomes: Vec<RepOutcome> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| run_with_resolved(config, &resolved, rep))
        .collect::<Result<_>>()?;

    let r = outcomes.len();
    let has_rejection_sets = !matches!(
        config.method,
        MethodSpec::Simes | MethodSpec::HigherCriticism { .. }
    );
    let all_null = config.signal_count == 0;

    let fwer = (has_rejection_sets && config.signal_count < config.m).then(|| {
        proportion_estimate(outcomes.iter().filter(|o| o.false_rejections > 0).count(), r)
    });
    let global_type1 = all_null
        .then(|| proportion_estimate(outcomes.iter().filter(|o| o.global_reject).count(), r));
    let global_power = (!all_null)
        .then(|| proportion_estimate(outcomes.iter().filter(|o| o.global_reject).count(), r));
    let avg_power = if !all_null && has_rejection_sets {
        let proportions: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.false_null_count > 0)
            .map(|o| o.true_rejections as f64 / o.false_null_count as f64)
            .collect();
        (!proportions.is_empty()).then(|| mean_estimate(&proportions))
    } else {
        None
    };
    let counts: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.selected_count.map(|c| c as f64))
        .collect();
    let mean_selected = (counts.len() == r).then(|| mean_estimate(&counts));

    Ok(MetricsReport {
        fwer,
        global_type1,
        avg_power,
        global_power,
        mean_selected,
        replications: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ScenarioConfig {
        ScenarioConfig {
            m: 20,
            n: 6,
            dependence: Dependence::Independent,
            variance: VarianceMode::Unit,
            means: MeanMode::Constant(1.0),
            signal_count: 3,
            method: MethodSpec::TwoStageBonferroni {
                gamma: 0.5,
                sigma: SigmaMode::KnownUnit,
                estimator: Sigma2Estimator::Mean,
            },
            alpha: 0.05,
            replications: 8,
            base_seed: 7,
        }
    }

    #[test]
    fn generation_is_deterministic_per_stream() {
        let cfg = base_config();
        let (a, ta) = generate_dataset(&cfg, 3).unwrap();
        let (b, tb) = generate_dataset(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate_dataset(&cfg, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn truth_labels_mark_leading_signal_rows() {
        let cfg = base_config();
        let (_, truth) = generate_dataset(&cfg, 0).unwrap();
        assert_eq!(truth.iter().filter(|&&t| t).count(), 3);
        assert!(truth[0] && truth[1] && truth[2]);
        assert!(truth[3..].iter().all(|&t| !t));
    }

    #[test]
    fn replication_outcome_is_deterministic() {
        let cfg = base_config();
        let a = run_replication(&cfg, 5).unwrap();
        let b = run_replication(&cfg, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_correlation_structure_holds_empirically() {
        let cfg = ScenarioConfig {
            m: 2,
            n: 400,
            dependence: Dependence::EqualCorrelation { rho: 0.5 },
            variance: VarianceMode::Unit,
            means: MeanMode::Constant(0.0),
            signal_count: 0,
            replications: 50,
            ..base_config()
        };
        // pooled empirical correlation between the two rows
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        let mut sxy = 0.0;
        let mut count = 0.0;
        for rep in 0..50 {
            let (ds, _) = generate_dataset(&cfg, rep).unwrap();
            let (r0, r1) = (ds.row(0), ds.row(1));
            for j in 0..ds.n_obs() {
                sx += r0[j];
                sy += r1[j];
                sxx += r0[j] * r0[j];
                syy += r1[j] * r1[j];
                sxy += r0[j] * r1[j];
                count += 1.0;
            }
        }
        let cov = sxy / count - (sx / count) * (sy / count);
        let vx = sxx / count - (sx / count) * (sx / count);
        let vy = syy / count - (sy / count) * (sy / count);
        let corr = cov / (vx * vy).sqrt();
        assert!((corr - 0.5).abs() < 0.05, "corr = {corr}");
    }

    #[test]
    fn single_replication_proportions_are_degenerate() {
        let cfg = ScenarioConfig {
            replications: 1,
            signal_count: 0,
            ..base_config()
        };
        let report = estimate_metrics(&cfg).unwrap();
        let t1 = report.global_type1.unwrap();
        assert!(t1.value == 0.0 || t1.value == 1.0);
        assert_eq!(t1.se, 0.0);
        assert!(report.avg_power.is_none());
        assert!(report.global_power.is_none());
    }

    #[test]
    fn global_tests_report_no_rejection_sets() {
        let cfg = ScenarioConfig {
            method: MethodSpec::Simes,
            ..base_config()
        };
        let report = estimate_metrics(&cfg).unwrap();
        assert!(report.fwer.is_none());
        assert!(report.avg_power.is_none());
        assert!(report.mean_selected.is_none());
        assert!(report.global_power.is_some());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = base_config();
        cfg.signal_count = 21;
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.dependence = Dependence::EqualCorrelation { rho: 1.0 };
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.dependence = Dependence::Block {
            rho: 0.5,
            block_size: 0,
        };
        assert!(cfg.validate().is_err());
        let mut cfg = base_config();
        cfg.n = 1;
        assert!(cfg.validate().is_err());
    }
}
