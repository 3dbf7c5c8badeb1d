//! Finite-sample testing procedures: the two-stage Bonferroni/Holm
//! procedures (known and estimated variance), classic stepwise corrections,
//! global tests, and the split-sample competitor.
//!
//! Stage one selects hypotheses whose sum-of-squares statistic exceeds a
//! threshold; stage two applies a multiplicity correction over the selected
//! set only. Under the null the selection statistic is independent of the t
//! statistic (Basu), so selection does not distort second-stage p-values.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::dist::{chi_square_quantile, student_t_quantile, student_t_two_sided_p};
use crate::error::{Error, Result};

/// Per-hypothesis statistics: S (sum of squares, the selection statistic),
/// T (one-sample t statistic), and the two-sided p-value from t with n-1 df.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisStats {
    pub index: usize,
    pub s_stat: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

/// Whether the per-observation variance is known to be one or estimated
/// from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    KnownUnit,
    Estimated,
}

/// Estimator pooling the m per-sample variances into one overall variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma2Estimator {
    #[default]
    Mean,
    Median,
}

/// First-stage selection rule: select hypothesis i iff S_i > `threshold_u`
/// (strict; ties have probability zero for continuous data).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRule {
    pub gamma: f64,
    pub sigma_mode: SigmaMode,
    pub threshold_u: f64,
    pub sigma2_hat: Option<f64>,
}

impl SelectionRule {
    /// Rule for unit variance: threshold chi^2_n(1 - m^{gamma-1}).
    pub fn known_unit(n: usize, m: usize, gamma: f64) -> Result<Self> {
        let threshold = selection_threshold(n, m, gamma, SigmaMode::KnownUnit, None)?;
        Ok(SelectionRule {
            gamma,
            sigma_mode: SigmaMode::KnownUnit,
            threshold_u: threshold,
            sigma2_hat: None,
        })
    }

    /// Rule with the chi-square threshold scaled by an externally supplied
    /// overall variance estimate.
    pub fn estimated(n: usize, m: usize, gamma: f64, sigma2_hat: f64) -> Result<Self> {
        let threshold =
            selection_threshold(n, m, gamma, SigmaMode::Estimated, Some(sigma2_hat))?;
        Ok(SelectionRule {
            gamma,
            sigma_mode: SigmaMode::Estimated,
            threshold_u: threshold,
            sigma2_hat: Some(sigma2_hat),
        })
    }

    /// Builds the rule from the dataset itself, estimating sigma^2 when the
    /// mode asks for it.
    pub fn for_dataset(
        dataset: &Dataset,
        gamma: f64,
        sigma_mode: SigmaMode,
        estimator: Sigma2Estimator,
    ) -> Result<Self> {
        let (m, n) = (dataset.n_hypotheses(), dataset.n_obs());
        match sigma_mode {
            SigmaMode::KnownUnit => SelectionRule::known_unit(n, m, gamma),
            SigmaMode::Estimated => {
                let s2 = estimate_sigma2(dataset, estimator)?;
                SelectionRule::estimated(n, m, gamma, s2)
            }
        }
    }
}

/// Outcome of a selection-then-test procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureResult {
    /// Indices passing stage one, ascending.
    pub selected: Vec<usize>,
    /// Indices rejected at stage two, ascending; always a subset of `selected`.
    pub rejected: Vec<usize>,
    pub per_hypothesis: Vec<HypothesisDecision>,
    /// The overall variance estimate when the rule used one.
    pub sigma2_hat: Option<f64>,
    /// The stage-one threshold actually applied.
    pub selection_threshold: f64,
    /// |T| critical value of the stage-two Bonferroni test (None when the
    /// stage-two rule is stepwise or nothing was selected).
    pub stage2_critical_t: Option<f64>,
}

/// One row of a procedure's decision table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisDecision {
    pub index: usize,
    /// Stage-one statistic (S for two-stage rules, first-subsample T for the
    /// split-sample rule).
    pub selection_stat: f64,
    /// Stage-two statistic (full-sample T, or second-subsample T).
    pub test_stat: f64,
    /// Two-sided p-value of `test_stat`.
    pub p_value: f64,
    pub selected: bool,
    pub rejected: bool,
    /// p-value threshold this hypothesis was compared against (selected only).
    pub critical_p: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Mean, unbiased variance, and sum of squares of one sample.
fn moments(row: &[f64]) -> (f64, f64, f64) {
    let n = row.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &x in row {
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / n;
    let mut dev_sq = 0.0;
    for &x in row {
        let d = x - mean;
        dev_sq += d * d;
    }
    (mean, dev_sq / (n - 1.0), sum_sq)
}

/// t statistic and two-sided p-value for one sample of length >= 2.
///
/// A zero sample variance yields the signed-infinity sentinel with p = 0
/// when the mean is nonzero, and t = 0 with p = 1 otherwise, keeping the
/// pipeline total on degenerate inputs.
fn t_and_p(row: &[f64]) -> (f64, f64) {
    let n = row.len() as f64;
    let (mean, var, _) = moments(row);
    if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = n.sqrt() * mean / var.sqrt();
        (t, student_t_two_sided_p(row.len() as u32 - 1, t))
    }
}

/// Computes (S, T, p) for every hypothesis. Requires n >= 2 observations.
pub fn summary_stats(dataset: &Dataset) -> Result<Vec<HypothesisStats>> {
    if dataset.n_obs() < 2 {
        return Err(Error::config(
            "summary statistics require at least 2 observations per sample",
        ));
    }
    Ok(dataset
        .rows()
        .enumerate()
        .map(|(index, row)| {
            let (_, _, s_stat) = moments(row);
            let (t_stat, p_value) = t_and_p(row);
            HypothesisStats {
                index,
                s_stat,
                t_stat,
                p_value,
            }
        })
        .collect())
}

/// Overall variance estimate: the mean (or median) of the m per-sample
/// unbiased variances.
pub fn estimate_sigma2(dataset: &Dataset, estimator: Sigma2Estimator) -> Result<f64> {
    if dataset.n_obs() < 2 {
        return Err(Error::config(
            "variance estimation requires at least 2 observations per sample",
        ));
    }
    let mut vars: Vec<f64> = dataset.rows().map(|row| moments(row).1).collect();
    Ok(match estimator {
        Sigma2Estimator::Mean => vars.iter().sum::<f64>() / vars.len() as f64,
        Sigma2Estimator::Median => {
            vars.sort_by(f64::total_cmp);
            let k = vars.len();
            if k % 2 == 1 {
                vars[k / 2]
            } else {
                0.5 * (vars[k / 2 - 1] + vars[k / 2])
            }
        }
    })
}

/// gamma such that m^{gamma-1} equals the requested selection fraction beta.
pub fn gamma_for_beta(m: usize, beta: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::config("m must be >= 2 to solve for gamma"));
    }
    if beta.is_nan() || beta <= 0.0 || beta > 1.0 {
        return Err(Error::config(format!(
            "selection fraction must lie in (0, 1], got {beta}"
        )));
    }
    let gamma = 1.0 + beta.ln() / (m as f64).ln();
    if gamma <= 0.0 {
        return Err(Error::config(format!(
            "beta = {beta} needs gamma <= 0 at m = {m}"
        )));
    }
    Ok(gamma)
}

/// Stage-one threshold: chi^2_n(1 - m^{gamma-1}), scaled by sigma2_hat when
/// the variance is estimated. gamma = 1 selects everything (threshold 0).
pub fn selection_threshold(
    n: usize,
    m: usize,
    gamma: f64,
    sigma_mode: SigmaMode,
    sigma2_hat: Option<f64>,
) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 || gamma > 1.0 {
        return Err(Error::config(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if n < 1 {
        return Err(Error::config("n must be >= 1"));
    }
    if m < 1 {
        return Err(Error::config("m must be >= 1"));
    }
    let scale = match sigma_mode {
        SigmaMode::KnownUnit => 1.0,
        SigmaMode::Estimated => {
            let s2 = sigma2_hat.ok_or_else(|| {
                Error::config("estimated sigma mode requires a sigma^2 estimate")
            })?;
            if s2.is_nan() || s2 < 0.0 {
                return Err(Error::config(format!(
                    "sigma^2 estimate must be nonnegative, got {s2}"
                )));
            }
            s2
        }
    };
    let beta = (m as f64).powf(gamma - 1.0);
    if beta >= 1.0 {
        return Ok(0.0);
    }
    Ok(scale * chi_square_quantile(n as u32, 1.0 - beta)?)
}

fn decisions_from(
    stats: &[HypothesisStats],
    selected: &[bool],
    rejected: &[bool],
    critical_p: &[Option<f64>],
) -> Vec<HypothesisDecision> {
    stats
        .iter()
        .map(|h| HypothesisDecision {
            index: h.index,
            selection_stat: h.s_stat,
            test_stat: h.t_stat,
            p_value: h.p_value,
            selected: selected[h.index],
            rejected: rejected[h.index],
            critical_p: critical_p[h.index],
        })
        .collect()
}

fn indices(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect()
}

/// Two-stage Bonferroni: select {i : S_i > u}, then reject every selected i
/// with p_i <= alpha / |selected| (equivalently |T_i| at least the
/// t_{n-1}(1 - alpha/(2|selected|)) quantile; the rejection region is closed).
pub fn two_stage_bonferroni(
    dataset: &Dataset,
    alpha: f64,
    rule: &SelectionRule,
) -> Result<ProcedureResult> {
    check_alpha(alpha)?;
    let stats = summary_stats(dataset)?;
    let m = stats.len();
    let selected: Vec<bool> = stats.iter().map(|h| h.s_stat > rule.threshold_u).collect();
    let k = selected.iter().filter(|&&s| s).count();

    let mut rejected = vec![false; m];
    let mut critical_p = vec![None; m];
    let mut stage2_critical_t = None;
    if k > 0 {
        let crit = alpha / k as f64;
        stage2_critical_t = Some(student_t_quantile(
            dataset.n_obs() as u32 - 1,
            1.0 - alpha / (2.0 * k as f64),
        )?);
        for h in &stats {
            if selected[h.index] {
                critical_p[h.index] = Some(crit);
                rejected[h.index] = h.p_value <= crit;
            }
        }
    }

    Ok(ProcedureResult {
        selected: indices(&selected),
        rejected: indices(&rejected),
        per_hypothesis: decisions_from(&stats, &selected, &rejected, &critical_p),
        sigma2_hat: rule.sigma2_hat,
        selection_threshold: rule.threshold_u,
        stage2_critical_t,
    })
}

/// Two-stage Holm: p-values of unselected hypotheses are set to one, then
/// the Holm stepdown runs over the |selected| smallest ordered p-values with
/// critical values alpha / (|selected| - j + 1).
pub fn two_stage_holm(
    dataset: &Dataset,
    alpha: f64,
    rule: &SelectionRule,
) -> Result<ProcedureResult> {
    check_alpha(alpha)?;
    let stats = summary_stats(dataset)?;
    let m = stats.len();
    let selected: Vec<bool> = stats.iter().map(|h| h.s_stat > rule.threshold_u).collect();
    let k = selected.iter().filter(|&&s| s).count();

    // p~ = p for selected, 1 otherwise
    let p_tilde: Vec<f64> = stats
        .iter()
        .map(|h| if selected[h.index] { h.p_value } else { 1.0 })
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_tilde[a].total_cmp(&p_tilde[b]).then(a.cmp(&b)));

    let mut rejected = vec![false; m];
    let mut critical_p = vec![None; m];
    let mut alive = true;
    for (j, &idx) in order.iter().take(k).enumerate() {
        let crit = alpha / (k - j) as f64;
        if selected[idx] {
            critical_p[idx] = Some(crit);
        }
        if alive && p_tilde[idx] <= crit {
            rejected[idx] = true;
        } else {
            alive = false;
        }
    }

    Ok(ProcedureResult {
        selected: indices(&selected),
        rejected: indices(&rejected),
        per_hypothesis: decisions_from(&stats, &selected, &rejected, &critical_p),
        sigma2_hat: rule.sigma2_hat,
        selection_threshold: rule.threshold_u,
        stage2_critical_t: None,
    })
}

/// Classic single-stage multiple-testing corrections over a p-value list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicMethod {
    Bonferroni,
    Holm,
    Hochberg,
    BenjaminiHochberg,
}

fn validate_p_values(p_values: &[f64]) -> Result<()> {
    for (i, &p) in p_values.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "p-value at index {i} is outside [0, 1]: {p}"
            )));
        }
    }
    Ok(())
}

/// Rejection set (ascending indices) of the chosen classic procedure.
/// An empty input yields an empty set.
pub fn classic_procedure(
    p_values: &[f64],
    alpha: f64,
    method: ClassicMethod,
) -> Result<Vec<usize>> {
    check_alpha(alpha)?;
    validate_p_values(p_values)?;
    let k = p_values.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let kf = k as f64;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));

    let mut rejected = Vec::new();
    match method {
        ClassicMethod::Bonferroni => {
            let crit = alpha / kf;
            rejected.extend((0..k).filter(|&i| p_values[i] <= crit));
        }
        ClassicMethod::Holm => {
            for (j, &idx) in order.iter().enumerate() {
                if p_values[idx] <= alpha / (k - j) as f64 {
                    rejected.push(idx);
                } else {
                    break;
                }
            }
        }
        ClassicMethod::Hochberg => {
            let cut = (0..k)
                .rev()
                .find(|&j| p_values[order[j]] <= alpha / (k - j) as f64);
            if let Some(j) = cut {
                rejected.extend(order[..=j].iter().copied());
            }
        }
        ClassicMethod::BenjaminiHochberg => {
            let cut = (0..k)
                .rev()
                .find(|&j| p_values[order[j]] <= (j + 1) as f64 * alpha / kf);
            if let Some(j) = cut {
                rejected.extend(order[..=j].iter().copied());
            }
        }
    }
    rejected.sort_unstable();
    Ok(rejected)
}

/// Simes global test: reject the intersection null iff
/// min_i k p_(i) / i <= alpha. An empty list does not reject.
pub fn simes_global(p_values: &[f64], alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    validate_p_values(p_values)?;
    let k = p_values.len();
    if k == 0 {
        return Ok(false);
    }
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kf = k as f64;
    let min = sorted
        .iter()
        .enumerate()
        .map(|(i, &p)| kf * p / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(min <= alpha)
}

/// The Higher Criticism statistic
/// HC* = max_{1 <= i <= m/2} sqrt(m) (i/m - p_(i)) / sqrt(p_(i)(1 - p_(i))),
/// maximized over the lower half of the order statistics.
pub fn hc_statistic(p_values: &[f64]) -> Result<f64> {
    validate_p_values(p_values)?;
    let m = p_values.len();
    if m < 2 {
        return Err(Error::config(
            "higher criticism requires at least 2 p-values",
        ));
    }
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mf = m as f64;
    let mut best = f64::NEG_INFINITY;
    for (i, &p) in sorted.iter().take(m / 2).enumerate() {
        let rank = (i + 1) as f64;
        if p == 0.0 {
            return Ok(f64::INFINITY);
        }
        if p >= 1.0 {
            continue;
        }
        let term = mf.sqrt() * (rank / mf - p) / (p * (1.0 - p)).sqrt();
        best = best.max(term);
    }
    Ok(best)
}

/// Level-alpha Higher Criticism critical values, simulated under the uniform
/// null for the exact m in use and cached keyed by (m, alpha).
#[derive(Debug, Clone, Default)]
pub struct HcCalibration {
    entries: BTreeMap<(usize, u64), f64>,
}

impl HcCalibration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, m: usize, alpha: f64, critical_value: f64) {
        self.entries.insert((m, alpha.to_bits()), critical_value);
    }

    /// The stored critical value; absent entries are a configuration error.
    pub fn critical_value(&self, m: usize, alpha: f64) -> Result<f64> {
        self.entries
            .get(&(m, alpha.to_bits()))
            .copied()
            .ok_or_else(|| {
                Error::config(format!(
                    "no higher-criticism calibration for m = {m}, alpha = {alpha}"
                ))
            })
    }

    /// Simulates the null distribution of HC* from `replications` draws of m
    /// iid uniform p-values and returns the empirical (1-alpha) quantile.
    /// Deterministic in (m, alpha, seed, replications) and independent of the
    /// executing thread count.
    pub fn simulate_critical_value(
        m: usize,
        alpha: f64,
        seed: u64,
        replications: usize,
    ) -> Result<f64> {
        check_alpha(alpha)?;
        if m < 2 {
            return Err(Error::config("higher criticism requires m >= 2"));
        }
        if replications == 0 {
            return Err(Error::config("calibration needs at least 1 replication"));
        }
        let mut values: Vec<f64> = (0..replications as u64)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rep);
                let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
                hc_statistic(&p).expect("uniform draws are valid p-values")
            })
            .collect();
        values.sort_by(f64::total_cmp);
        let k = ((1.0 - alpha) * replications as f64).ceil() as usize;
        let k = k.clamp(1, replications);
        Ok(values[k - 1])
    }

    /// Convenience constructor caching one simulated entry.
    pub fn simulated(m: usize, alpha: f64, seed: u64, replications: usize) -> Result<Self> {
        let mut cal = HcCalibration::new();
        cal.insert(
            m,
            alpha,
            Self::simulate_critical_value(m, alpha, seed, replications)?,
        );
        Ok(cal)
    }
}

/// Higher Criticism global test against a calibrated critical value.
pub fn higher_criticism_global(
    p_values: &[f64],
    alpha: f64,
    calibration: &HcCalibration,
) -> Result<bool> {
    check_alpha(alpha)?;
    let crit = calibration.critical_value(p_values.len(), alpha)?;
    Ok(hc_statistic(p_values)? > crit)
}

/// First-stage cutoff of the split-sample procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitCutoff {
    /// t_{n1-1}(1 - m^{gamma-1}/2), tying the selected count to m^gamma.
    Gamma,
    /// t_{n1-1}(level) for a fixed level in (0, 1) (e.g. 0.75 selects about
    /// half the hypotheses).
    ConstantLevel(f64),
}

/// Subsample sizes (n1, n2) for a split fraction r: n1 = floor(r n).
pub fn split_sizes(n: usize, split_fraction: f64) -> Result<(usize, usize)> {
    if split_fraction.is_nan() || split_fraction <= 0.0 || split_fraction >= 1.0 {
        return Err(Error::config(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let n1 = (split_fraction * n as f64).floor() as usize;
    let n2 = n - n1;
    if n1 < 2 || n2 < 2 {
        return Err(Error::config(format!(
            "split subsamples too small: n1 = {n1}, n2 = {n2} (need >= 2 each)"
        )));
    }
    Ok((n1, n2))
}

/// Split-sample procedure: select on first-subsample t statistics, test the
/// selected set with second-subsample t statistics under Bonferroni.
pub fn split_sample_procedure(
    dataset: &Dataset,
    alpha: f64,
    gamma: f64,
    split_fraction: f64,
    cutoff: SplitCutoff,
) -> Result<ProcedureResult> {
    check_alpha(alpha)?;
    let m = dataset.n_hypotheses();
    let (n1, n2) = split_sizes(dataset.n_obs(), split_fraction)?;

    let level = match cutoff {
        SplitCutoff::Gamma => {
            if gamma.is_nan() || gamma <= 0.0 || gamma > 1.0 {
                return Err(Error::config(format!(
                    "gamma must lie in (0, 1], got {gamma}"
                )));
            }
            let beta = (m as f64).powf(gamma - 1.0);
            1.0 - 0.5 * beta.min(1.0)
        }
        SplitCutoff::ConstantLevel(level) => {
            if level.is_nan() || level <= 0.0 || level >= 1.0 {
                return Err(Error::config(format!(
                    "cutoff level must lie in (0, 1), got {level}"
                )));
            }
            level
        }
    };
    let u = if level == 0.5 {
        0.0
    } else {
        student_t_quantile(n1 as u32 - 1, level)?
    };

    let stats: Vec<(f64, f64, f64)> = (0..m)
        .map(|i| {
            let row = dataset.row(i);
            let (t1, _) = t_and_p(&row[..n1]);
            let (t2, p2) = t_and_p(&row[n1..]);
            (t1, t2, p2)
        })
        .collect();

    let selected: Vec<bool> = stats.iter().map(|&(t1, _, _)| t1.abs() > u).collect();
    let k = selected.iter().filter(|&&s| s).count();

    let mut rejected = vec![false; m];
    let mut critical_p = vec![None; m];
    let mut stage2_critical_t = None;
    if k > 0 {
        let crit = alpha / k as f64;
        stage2_critical_t = Some(student_t_quantile(
            n2 as u32 - 1,
            1.0 - alpha / (2.0 * k as f64),
        )?);
        for (i, &(_, _, p2)) in stats.iter().enumerate() {
            if selected[i] {
                critical_p[i] = Some(crit);
                rejected[i] = p2 <= crit;
            }
        }
    }

    let per_hypothesis = stats
        .iter()
        .enumerate()
        .map(|(i, &(t1, t2, p2))| HypothesisDecision {
            index: i,
            selection_stat: t1,
            test_stat: t2,
            p_value: p2,
            selected: selected[i],
            rejected: rejected[i],
            critical_p: critical_p[i],
        })
        .collect();

    Ok(ProcedureResult {
        selected: indices(&selected),
        rejected: indices(&rejected),
        per_hypothesis,
        sigma2_hat: None,
        selection_threshold: u,
        stage2_critical_t,
    })
}
