//! `tsmt run`: apply one procedure to a CSV dataset, write the per-hypothesis
//! decision table, and print a one-line summary.

use tsmt_core::procedures::{
    classic_procedure, hc_statistic, simes_global, split_sample_procedure, summary_stats,
    two_stage_bonferroni, two_stage_holm, ClassicMethod, HcCalibration, HypothesisDecision,
    ProcedureResult, SelectionRule, Sigma2Estimator, SigmaMode, SplitCutoff,
};
use tsmt_core::sim::presets::HC_CALIBRATION_REPLICATIONS;
use tsmt_core::{Dataset, Result};

use crate::out;
use crate::{EstimatorArg, MethodArg, RunArgs, SigmaArg};

pub fn run(args: &RunArgs) -> Result<()> {
    let dataset = Dataset::from_csv_path(&args.data, args.header)?;
    let (m, n) = (dataset.n_hypotheses(), dataset.n_obs());

    let sigma_mode = match args.sigma {
        SigmaArg::Known => SigmaMode::KnownUnit,
        SigmaArg::Estimated => SigmaMode::Estimated,
    };
    let estimator = match args.sigma_estimator {
        EstimatorArg::Mean => Sigma2Estimator::Mean,
        EstimatorArg::Median => Sigma2Estimator::Median,
    };
    let split_cutoff = match args.split_level {
        Some(level) => SplitCutoff::ConstantLevel(level),
        None => SplitCutoff::Gamma,
    };

    let mut summary_extra = String::new();
    let (rows, selected, rejected, threshold, sigma2_hat) = match args.method {
        MethodArg::TsBonf | MethodArg::TsHolm => {
            let rule = SelectionRule::for_dataset(&dataset, args.gamma, sigma_mode, estimator)?;
            let res = if args.method == MethodArg::TsBonf {
                two_stage_bonferroni(&dataset, args.alpha, &rule)?
            } else {
                two_stage_holm(&dataset, args.alpha, &rule)?
            };
            if let Some(t) = res.stage2_critical_t {
                summary_extra = format!(" stage2_critical_t={}", out::f(t));
            }
            unpack(res)
        }
        MethodArg::SsBonf => {
            let res = split_sample_procedure(
                &dataset,
                args.alpha,
                args.gamma,
                args.split_r,
                split_cutoff,
            )?;
            if let Some(t) = res.stage2_critical_t {
                summary_extra = format!(" stage2_critical_t={}", out::f(t));
            }
            unpack(res)
        }
        MethodArg::Bonferroni | MethodArg::Holm | MethodArg::Hochberg | MethodArg::Bh => {
            let method = match args.method {
                MethodArg::Bonferroni => ClassicMethod::Bonferroni,
                MethodArg::Holm => ClassicMethod::Holm,
                MethodArg::Hochberg => ClassicMethod::Hochberg,
                _ => ClassicMethod::BenjaminiHochberg,
            };
            let stats = summary_stats(&dataset)?;
            let p_values: Vec<f64> = stats.iter().map(|h| h.p_value).collect();
            let rejected = classic_procedure(&p_values, args.alpha, method)?;
            let rows: Vec<Row> = stats
                .iter()
                .map(|h| Row {
                    index: h.index,
                    selection_stat: h.s_stat,
                    test_stat: h.t_stat,
                    p_value: h.p_value,
                    selected: true,
                    rejected: rejected.contains(&h.index),
                })
                .collect();
            (rows, m, rejected.len(), None, None)
        }
        MethodArg::Simes | MethodArg::Hc => {
            let stats = summary_stats(&dataset)?;
            let p_values: Vec<f64> = stats.iter().map(|h| h.p_value).collect();
            let reject = if args.method == MethodArg::Simes {
                simes_global(&p_values, args.alpha)?
            } else {
                let cal = HcCalibration::simulated(
                    m,
                    args.alpha,
                    args.seed,
                    HC_CALIBRATION_REPLICATIONS,
                )?;
                let crit = cal.critical_value(m, args.alpha)?;
                summary_extra = format!(
                    " hc_statistic={} hc_critical={}",
                    out::f(hc_statistic(&p_values)?),
                    out::f(crit)
                );
                hc_statistic(&p_values)? > crit
            };
            summary_extra.push_str(&format!(" global_reject={reject}"));
            let rows: Vec<Row> = stats
                .iter()
                .map(|h| Row {
                    index: h.index,
                    selection_stat: h.s_stat,
                    test_stat: h.t_stat,
                    p_value: h.p_value,
                    selected: false,
                    rejected: false,
                })
                .collect();
            (rows, 0, 0, None, None)
        }
    };

    let mut csv = String::from("index,selection_stat,test_stat,p_value,selected,rejected\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.index,
            out::f(row.selection_stat),
            out::f(row.test_stat),
            out::f(row.p_value),
            row.selected,
            row.rejected
        ));
    }
    out::write_output(&args.out, &csv)?;

    let mut summary = format!(
        "summary method={} m={} n={} alpha={} selected={} rejected={}",
        method_name(args.method),
        m,
        n,
        out::f(args.alpha),
        selected,
        rejected
    );
    if let Some(t) = threshold {
        summary.push_str(&format!(" selection_threshold={}", out::f(t)));
    }
    if let Some(s2) = sigma2_hat {
        summary.push_str(&format!(" sigma2_hat={}", out::f(s2)));
    }
    summary.push_str(&summary_extra);
    out::emit_summary(&args.out, &summary);
    Ok(())
}

struct Row {
    index: usize,
    selection_stat: f64,
    test_stat: f64,
    p_value: f64,
    selected: bool,
    rejected: bool,
}

fn unpack(res: ProcedureResult) -> (Vec<Row>, usize, usize, Option<f64>, Option<f64>) {
    let rows = res
        .per_hypothesis
        .iter()
        .map(|d: &HypothesisDecision| Row {
            index: d.index,
            selection_stat: d.selection_stat,
            test_stat: d.test_stat,
            p_value: d.p_value,
            selected: d.selected,
            rejected: d.rejected,
        })
        .collect();
    (
        rows,
        res.selected.len(),
        res.rejected.len(),
        Some(res.selection_threshold),
        res.sigma2_hat,
    )
}

pub fn method_name(method: MethodArg) -> &'static str {
    match method {
        MethodArg::TsBonf => "ts-bonf",
        MethodArg::TsHolm => "ts-holm",
        MethodArg::Bonferroni => "bonferroni",
        MethodArg::Holm => "holm",
        MethodArg::Hochberg => "hochberg",
        MethodArg::Bh => "bh",
        MethodArg::Simes => "simes",
        MethodArg::Hc => "hc",
        MethodArg::SsBonf => "ss-bonf",
    }
}
