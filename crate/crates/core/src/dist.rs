//! Normal, chi-square, and Student t CDFs/quantiles, plus the closed-form
//! quantile bounds used for analysis and cross-validation.
//!
//! Quantiles are solved by bracketed bisection on the CDF (or survival
//! function, whichever tail is smaller) with a 1e-12 relative stopping
//! tolerance in x or 1e-14 in probability. The chi-square bracket comes for
//! free from the Laurent-Massart bound, which is a guaranteed upper bound at
//! every level.

use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, FTOL, XTOL_REL};
use crate::special::{gamma_p, gamma_q, inc_beta, ln_gamma_q};

/// A distribution family with its degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistSpec {
    Normal,
    ChiSquare { df: u32 },
    StudentT { df: u32 },
}

impl DistSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            DistSpec::Normal => Ok(()),
            DistSpec::ChiSquare { df } | DistSpec::StudentT { df } => {
                if df >= 1 {
                    Ok(())
                } else {
                    Err(Error::domain("degrees of freedom must be >= 1"))
                }
            }
        }
    }
}

/// Closed-form lower/upper pair enclosing a quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileBracket {
    pub lower: f64,
    pub upper: f64,
}

impl QuantileBracket {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// CDF of `dist` at `x`.
pub fn cdf(dist: DistSpec, x: f64) -> Result<f64> {
    dist.validate()?;
    if x.is_nan() {
        return Err(Error::domain("cdf argument must not be NaN"));
    }
    Ok(match dist {
        DistSpec::Normal => normal_cdf(x),
        DistSpec::ChiSquare { df } => chi_square_cdf(df, x),
        DistSpec::StudentT { df } => student_t_cdf(df, x),
    })
}

/// Survival function 1 - CDF, computed without cancellation in the upper tail.
pub fn sf(dist: DistSpec, x: f64) -> Result<f64> {
    dist.validate()?;
    if x.is_nan() {
        return Err(Error::domain("sf argument must not be NaN"));
    }
    Ok(match dist {
        DistSpec::Normal => normal_sf(x),
        DistSpec::ChiSquare { df } => chi_square_sf(df, x),
        DistSpec::StudentT { df } => student_t_sf(df, x),
    })
}

/// Quantile (inverse CDF) of `dist` at probability `p` in (0, 1).
pub fn quantile(dist: DistSpec, p: f64) -> Result<f64> {
    dist.validate()?;
    check_open_unit(p, "quantile probability")?;
    Ok(match dist {
        DistSpec::Normal => normal_quantile_unchecked(p),
        DistSpec::ChiSquare { df } => chi_square_quantile_unchecked(df, p),
        DistSpec::StudentT { df } => student_t_quantile_unchecked(df, p),
    })
}

fn check_open_unit(p: f64, what: &str) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must lie in (0, 1), got {p}")))
    }
}

// ---------------------------------------------------------------------------
// Normal
// ---------------------------------------------------------------------------

/// Standard normal CDF via the incomplete-gamma form of erfc:
/// Phi(-|z|) = Q(1/2, z^2/2) / 2.
pub fn normal_cdf(z: f64) -> f64 {
    if z == 0.0 {
        return 0.5;
    }
    let tail = 0.5 * gamma_q(0.5, 0.5 * z * z);
    if z < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Standard normal survival function, exact mirror of `normal_cdf`.
pub fn normal_sf(z: f64) -> f64 {
    normal_cdf(-z)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_open_unit(p, "quantile probability")?;
    Ok(normal_quantile_unchecked(p))
}

fn normal_quantile_unchecked(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -normal_quantile_unchecked(1.0 - p);
    }
    // lower tail: cdf is increasing and evaluated precisely for z < 0
    bisect_increasing(normal_cdf, p, -40.0, 0.0, XTOL_REL, FTOL)
}

// ---------------------------------------------------------------------------
// Chi-square
// ---------------------------------------------------------------------------

pub fn chi_square_cdf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_p(0.5 * df as f64, 0.5 * x)
}

pub fn chi_square_sf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(0.5 * df as f64, 0.5 * x)
}

/// Chi-square quantile at probability `p`.
pub fn chi_square_quantile(df: u32, p: f64) -> Result<f64> {
    DistSpec::ChiSquare { df }.validate()?;
    check_open_unit(p, "quantile probability")?;
    Ok(chi_square_quantile_unchecked(df, p))
}

fn chi_square_quantile_unchecked(df: u32, p: f64) -> f64 {
    let n = df as f64;
    let beta = 1.0 - p;
    // Laurent-Massart: chi^2_n(1-beta) <= n + 2 log(1/beta) + 2 sqrt(n log(1/beta))
    let log_inv = -beta.ln();
    let hi = n + 2.0 * log_inv + 2.0 * (n * log_inv).sqrt() + 1.0;
    if p <= 0.5 {
        bisect_increasing(|x| chi_square_cdf(df, x), p, 0.0, hi, XTOL_REL, FTOL)
    } else {
        // solve in the upper tail for absolute accuracy in probability
        bisect_increasing(|x| -chi_square_sf(df, x), -beta, 0.0, hi, XTOL_REL, FTOL)
    }
}

/// Chi-square upper-tail quantile from the log tail probability: returns x
/// with ln P(chi^2_df > x) = `ln_beta`.
///
/// Usable far beyond f64 probability range (e.g. ln_beta = -4500), where the
/// ordinary quantile's `p` argument would round to 1.
pub fn chi_square_quantile_ln_upper(df: u32, ln_beta: f64) -> Result<f64> {
    DistSpec::ChiSquare { df }.validate()?;
    if !ln_beta.is_finite() || ln_beta >= 0.0 {
        return Err(Error::domain(format!(
            "log tail probability must be finite and negative, got {ln_beta}"
        )));
    }
    let n = df as f64;
    let a = 0.5 * n;
    let t = -ln_beta;
    let hi = n + 2.0 * t + 2.0 * (n * t).sqrt() + 1.0;
    Ok(bisect_increasing(
        |x| -ln_gamma_q(a, 0.5 * x),
        t,
        0.0,
        hi,
        XTOL_REL,
        1e-11,
    ))
}

// ---------------------------------------------------------------------------
// Student t
// ---------------------------------------------------------------------------

pub fn student_t_cdf(df: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let tail = 0.5 * t_tail_mass(df, x);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn student_t_sf(df: u32, x: f64) -> f64 {
    student_t_cdf(df, -x)
}

/// Two-sided p-value P(|T_df| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
pub fn student_t_two_sided_p(df: u32, t: f64) -> f64 {
    t_tail_mass(df, t)
}

/// P(|T_df| >= |x|); one continued-fraction evaluation, no cancellation.
fn t_tail_mass(df: u32, x: f64) -> f64 {
    let n = df as f64;
    let x2 = x * x;
    if x2.is_infinite() {
        return 0.0;
    }
    inc_beta(0.5 * n, 0.5, n / (n + x2))
}

/// Student t quantile at probability `p`.
pub fn student_t_quantile(df: u32, p: f64) -> Result<f64> {
    DistSpec::StudentT { df }.validate()?;
    check_open_unit(p, "quantile probability")?;
    Ok(student_t_quantile_unchecked(df, p))
}

fn student_t_quantile_unchecked(df: u32, p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile_unchecked(df, 1.0 - p);
    }
    let q = 1.0 - p;
    let mut hi = 1.0;
    while student_t_sf(df, hi) > q && hi < 1e300 {
        hi *= 2.0;
    }
    bisect_increasing(|x| -student_t_sf(df, x), -q, 0.0, hi, XTOL_REL, FTOL)
}

// ---------------------------------------------------------------------------
// Closed-form quantile bounds
// ---------------------------------------------------------------------------

/// The chi-square quantile bound family
/// `n + 2 log(1/beta) + c sqrt(n log(1/beta))`.
///
/// c = 2 is the Laurent-Massart upper bound (valid for every n >= 1 and
/// beta in (0,1)); c = 1/4 is the Inglot lower bound (valid for n >= 17 and
/// beta in [e^{-560 n}, 1/17]). The formula is evaluated for any admissible
/// (n, beta, c); validity ranges are enforced by the callers' tests, not here.
pub fn chi2_quantile_bound(n: u32, beta: f64, c: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("n must be >= 1"));
    }
    check_open_unit(beta, "beta")?;
    if c.is_nan() || c <= 0.0 {
        return Err(Error::domain(format!("c must be positive, got {c}")));
    }
    let n = n as f64;
    let log_inv = -beta.ln();
    Ok(n + 2.0 * log_inv + c * (n * log_inv).sqrt())
}

/// Fujikoshi-Mukaihata bracket for the t quantile x_n(u) solving
/// F_n(x) = Phi(u):
/// `sqrt(n) (e^{u^2/n} - 1)^{1/2} <= x_n(u) <= sqrt(n) (e^{u^2/(n-0.5)} - 1)^{1/2}`.
pub fn t_quantile_bracket(n: u32, u: f64) -> Result<QuantileBracket> {
    if n < 1 {
        return Err(Error::domain("n must be >= 1"));
    }
    if !u.is_finite() || u <= 0.0 {
        return Err(Error::domain(format!("u must be positive, got {u}")));
    }
    let nf = n as f64;
    let lower = nf.sqrt() * ((u * u / nf).exp_m1()).sqrt();
    let upper = nf.sqrt() * ((u * u / (nf - 0.5)).exp_m1()).sqrt();
    Ok(QuantileBracket { lower, upper })
}

/// Normal-tail bracket `sqrt((1-delta) 2 log m) <= z_{1-alpha/m} <= sqrt(2 log m)`.
///
/// The bracket itself does not depend on `alpha`; alpha names the bracketed
/// quantile and is validated so the pair stays tied to a meaningful level.
/// Containment holds for all large enough m (how large depends on alpha and
/// delta).
pub fn normal_tail_bracket(m: u64, alpha: f64, delta: f64) -> Result<QuantileBracket> {
    if m < 2 {
        return Err(Error::domain("m must be >= 2"));
    }
    check_open_unit(alpha, "alpha")?;
    check_open_unit(delta, "delta")?;
    let two_log_m = 2.0 * (m as f64).ln();
    Ok(QuantileBracket {
        lower: ((1.0 - delta) * two_log_m).sqrt(),
        upper: two_log_m.sqrt(),
    })
}
