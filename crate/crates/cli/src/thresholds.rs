//! `tsmt thresholds`: mu^2 detection-threshold grid CSV, optionally with the
//! tuned selection exponent gamma*.

use tsmt_core::asymptotics::{
    detection_threshold, optimal_gamma, AsymptoticRegime, ThresholdMethod,
};
use tsmt_core::{Error, Result};

use crate::out;
use crate::ThresholdsArgs;

pub const HEADER: &str = "d,method,gamma,mu2_threshold,detection_branch,selection_branch";

pub fn run(args: &ThresholdsArgs) -> Result<()> {
    if let Some(d) = args.d {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::config(format!("--d must be >= 0, got {d}")));
        }
    }
    let ds: Vec<f64> = match args.d {
        Some(d) => vec![d],
        None => (1..=20).map(|i| i as f64 * 0.05).collect(),
    };
    let csv = render_grid(&ds, args.gamma, args.optimize, args.split_r)?;
    out::write_output(&args.out, &csv)
}

/// Builds the thresholds CSV for a d grid. When `optimize` is set the
/// two-stage row carries gamma* (and its threshold); otherwise the fixed
/// gamma (default 0.5) is used.
pub fn render_grid(
    ds: &[f64],
    gamma: Option<f64>,
    optimize: bool,
    split_r: Option<f64>,
) -> Result<String> {
    let mut csv = String::from(HEADER);
    csv.push('\n');
    for &d in ds {
        let (ts_gamma, ts_report) = if optimize {
            let opt = optimal_gamma(d)?;
            let report = detection_threshold(
                ThresholdMethod::TwoStage,
                &AsymptoticRegime::new(d, opt.gamma),
            )?;
            (opt.gamma, report)
        } else {
            let g = gamma.unwrap_or(0.5);
            let report =
                detection_threshold(ThresholdMethod::TwoStage, &AsymptoticRegime::new(d, g))?;
            (g, report)
        };
        csv.push_str(&format!(
            "{},two_stage,{},{},{},{}\n",
            out::f(d),
            out::f(ts_gamma),
            out::f(ts_report.mu_squared_threshold),
            out::f(ts_report.detection_branch.unwrap_or(f64::NAN)),
            out::f(ts_report.selection_branch.unwrap_or(f64::NAN)),
        ));
        for method in [ThresholdMethod::BonferroniT, ThresholdMethod::BonferroniZ] {
            let report = detection_threshold(method, &AsymptoticRegime::new(d, 0.5))?;
            csv.push_str(&format!(
                "{},{},,{},,\n",
                out::f(d),
                method.label(),
                out::f(report.mu_squared_threshold),
            ));
        }
        if let Some(r) = split_r {
            let regime = AsymptoticRegime::new(d, ts_gamma).with_split_fraction(r);
            let report = detection_threshold(ThresholdMethod::SplitSample, &regime)?;
            csv.push_str(&format!(
                "{},split_sample,{},{},,\n",
                out::f(d),
                out::f(ts_gamma),
                out::f(report.mu_squared_threshold),
            ));
        }
    }
    Ok(csv)
}
