//! Detection-boundary calculators and tuning machinery: the function g, its
//! inverse, a(c), the cutoff constant c*, per-method mu^2 detection
//! thresholds, and the optimal selection exponent gamma*.
//!
//! The asymptotic regime couples dimension and sample size through
//! d = lim log(m)/n; finite (m, n) pairs map in via d := log(m)/n.

use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, golden_section_min};

/// g(x) = (e^x - 1 - x) / x^2, strictly increasing on (0, inf), extended
/// continuously with g(0) = 1/2.
pub fn g(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("g requires x >= 0, got {x}")));
    }
    Ok(g_raw(x))
}

fn g_raw(x: f64) -> f64 {
    if x < 1e-2 {
        // series sum_{k>=0} x^k / (k+2)!; truncation error < 1e-13 here
        0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0 + x * x * x * x / 720.0
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

/// Inverse of g on [1/2, inf): the unique x >= 0 with g(x) = y, to 1e-12.
pub fn g_inverse(y: f64) -> Result<f64> {
    if y.is_nan() || y < 0.5 {
        return Err(Error::domain(format!("g_inverse requires y >= 1/2, got {y}")));
    }
    if y == 0.5 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while g_raw(hi) < y {
        hi *= 2.0;
    }
    Ok(bisect_increasing(g_raw, y, 0.0, hi, 1e-13, 0.0))
}

/// a(c) = [g^{-1}(2/c^2) / c]^2, decreasing in c on (0, 2), extended with
/// a(c) = 0 for c >= 2 (where 2/c^2 <= 1/2).
pub fn a(c: f64) -> Result<f64> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::domain(format!("a requires c > 0, got {c}")));
    }
    if c >= 2.0 {
        return Ok(0.0);
    }
    let x = g_inverse(2.0 / (c * c))?;
    Ok((x / c) * (x / c))
}

/// The cutoff constant c*(gamma, d) in (0, 2] solving a(c) = (1 - gamma) d.
/// Returns the boundary value 2 when (1 - gamma) d = 0.
pub fn c_star(gamma: f64, d: f64) -> Result<f64> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::domain(format!("c_star requires d >= 0, got {d}")));
    }
    if gamma.is_nan() || gamma <= 0.0 || gamma > 1.0 {
        return Err(Error::domain(format!(
            "c_star requires gamma in (0, 1], got {gamma}"
        )));
    }
    let v = (1.0 - gamma) * d;
    if v == 0.0 {
        return Ok(2.0);
    }
    // a is decreasing: bisect -a upward to -v; 5e-11 relative on (0,2)
    // keeps the result within 1e-10 absolute in c.
    Ok(bisect_increasing(
        |c| -a(c).expect("c in (0,2)"),
        -v,
        1e-12,
        2.0,
        5e-11,
        0.0,
    ))
}

/// Method whose asymptotic mu^2 detection threshold is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMethod {
    /// Two-stage procedure (selection by sum of squares, Bonferroni on the
    /// selected set).
    TwoStage,
    /// Conventional Bonferroni with t statistics.
    BonferroniT,
    /// Bonferroni with z statistics (known variance).
    BonferroniZ,
    /// Split-sample selection/testing.
    SplitSample,
}

impl ThresholdMethod {
    pub fn label(&self) -> &'static str {
        match self {
            ThresholdMethod::TwoStage => "two_stage",
            ThresholdMethod::BonferroniT => "bonferroni_t",
            ThresholdMethod::BonferroniZ => "bonferroni_z",
            ThresholdMethod::SplitSample => "split_sample",
        }
    }
}

/// Asymptotic regime parameters. `d` is the limit of log(m)/n, `gamma` the
/// selection exponent, `split_fraction` the share of observations used for
/// selection (split method only), and `sparsity_epsilon` the exponent with
/// m^{1-epsilon} false nulls (carried for regime checks; the thresholds
/// themselves do not depend on it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRegime {
    pub d: f64,
    pub gamma: f64,
    pub split_fraction: Option<f64>,
    pub sparsity_epsilon: Option<f64>,
}

impl AsymptoticRegime {
    pub fn new(d: f64, gamma: f64) -> Self {
        AsymptoticRegime {
            d,
            gamma,
            split_fraction: None,
            sparsity_epsilon: None,
        }
    }

    pub fn with_split_fraction(mut self, r: f64) -> Self {
        self.split_fraction = Some(r);
        self
    }

    pub fn with_sparsity(mut self, epsilon: f64) -> Self {
        self.sparsity_epsilon = Some(epsilon);
        self
    }

    /// Whether epsilon + gamma > 1, the condition under which the selected
    /// count concentrates at m^gamma. None when no sparsity exponent is set.
    pub fn selection_concentrates(&self) -> Option<bool> {
        self.sparsity_epsilon
            .map(|eps| eps + self.gamma > 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !self.d.is_finite() || self.d < 0.0 {
            return Err(Error::domain(format!("d must be >= 0, got {}", self.d)));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 || self.gamma > 1.0 {
            return Err(Error::domain(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if let Some(r) = self.split_fraction {
            if r.is_nan() || r <= 0.0 || r >= 1.0 {
                return Err(Error::config(format!(
                    "split fraction must lie in (0, 1), got {r}"
                )));
            }
        }
        if let Some(eps) = self.sparsity_epsilon {
            if eps.is_nan() || eps <= 0.0 || eps > 1.0 {
                return Err(Error::domain(format!(
                    "sparsity exponent must lie in (0, 1], got {eps}"
                )));
            }
        }
        Ok(())
    }
}

/// A mu^2 detection threshold, with the two-stage method's detection and
/// selection branches when applicable (the threshold is their maximum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub method: ThresholdMethod,
    pub mu_squared_threshold: f64,
    pub detection_branch: Option<f64>,
    pub selection_branch: Option<f64>,
}

/// mu^2 detection threshold of `method` in regime `regime`: above it the
/// method rejects a false null with probability tending to one, below it
/// with probability tending to zero.
pub fn detection_threshold(
    method: ThresholdMethod,
    regime: &AsymptoticRegime,
) -> Result<ThresholdReport> {
    regime.validate()?;
    let d = regime.d;
    let gamma = regime.gamma;
    let report = match method {
        ThresholdMethod::TwoStage => {
            let detection = (2.0 * gamma * d).exp_m1();
            let v = (1.0 - gamma) * d;
            let selection = 2.0 * v + c_star(gamma, d)? * v.sqrt();
            ThresholdReport {
                method,
                mu_squared_threshold: detection.max(selection),
                detection_branch: Some(detection),
                selection_branch: Some(selection),
            }
        }
        ThresholdMethod::BonferroniT => ThresholdReport {
            method,
            mu_squared_threshold: (2.0 * d).exp_m1(),
            detection_branch: None,
            selection_branch: None,
        },
        ThresholdMethod::BonferroniZ => ThresholdReport {
            method,
            mu_squared_threshold: 2.0 * d,
            detection_branch: None,
            selection_branch: None,
        },
        ThresholdMethod::SplitSample => {
            let r = regime.split_fraction.ok_or_else(|| {
                Error::config("split-sample threshold requires a split fraction r")
            })?;
            let first = (2.0 * (1.0 - gamma) * d / r).exp_m1();
            let second = (2.0 * gamma * d / (1.0 - r)).exp_m1();
            ThresholdReport {
                method,
                mu_squared_threshold: first.max(second),
                detection_branch: None,
                selection_branch: None,
            }
        }
    };
    Ok(report)
}

/// The optimal selection exponent and the threshold it attains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalGamma {
    pub gamma: f64,
    pub threshold: f64,
}

const GAMMA_SEARCH_LO: f64 = 0.01;

/// Minimizes the two-stage threshold over gamma in [0.01, 1] by
/// golden-section search. d = 0 returns gamma* = 1 with threshold 0 (every
/// gamma attains 0 there); d < 0 is a domain error.
pub fn optimal_gamma(d: f64) -> Result<OptimalGamma> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::domain(format!("optimal_gamma requires d >= 0, got {d}")));
    }
    if d == 0.0 {
        return Ok(OptimalGamma {
            gamma: 1.0,
            threshold: 0.0,
        });
    }
    let objective = |gamma: f64| {
        detection_threshold(ThresholdMethod::TwoStage, &AsymptoticRegime::new(d, gamma))
            .expect("interior gamma is valid")
            .mu_squared_threshold
    };
    let (gamma, threshold) = golden_section_min(objective, GAMMA_SEARCH_LO, 1.0, 1e-6);
    Ok(OptimalGamma { gamma, threshold })
}
