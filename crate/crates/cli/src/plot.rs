//! `tsmt plot-data`: reshape a `simulate` or `thresholds` CSV into
//! long-format rows keyed (figure, panel, x, series, y, se), one row per
//! plotted point, deterministically sorted.

use std::cmp::Ordering;
use std::path::Path;

use tsmt_core::{Error, Result};

use crate::out;
use crate::PlotDataArgs;

pub const HEADER: &str = "figure,panel,x,series,y,se";

struct PlotRow {
    figure: String,
    panel: String,
    x: f64,
    series: String,
    y: String,
    se: String,
}

pub fn run(args: &PlotDataArgs) -> Result<()> {
    let content = read_to_string(&args.input)?;
    let csv = reshape(&content)?;
    out::write_output(&args.out, &csv)
}

fn read_to_string(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn reshape(content: &str) -> Result<String> {
    let mut lines = content.lines();
    let header = lines.next().unwrap_or("").trim_end_matches('\r');
    let rows: Vec<Vec<&str>> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim_end_matches('\r').split(',').collect())
        .collect();

    let plot_rows = if header == crate::simulate::HEADER {
        from_simulate(&rows)?
    } else if header == crate::thresholds::HEADER {
        from_thresholds(&rows)?
    } else {
        return Err(Error::Data {
            row: 1,
            column: 1,
            message: format!("unrecognized results schema: {header:?}"),
        });
    };

    let mut plot_rows = plot_rows;
    plot_rows.sort_by(|a, b| {
        a.figure
            .cmp(&b.figure)
            .then_with(|| a.panel.cmp(&b.panel))
            .then_with(|| a.series.cmp(&b.series))
            .then_with(|| a.x.total_cmp(&b.x))
            .then(Ordering::Equal)
    });

    let mut csv = String::from(HEADER);
    csv.push('\n');
    for r in &plot_rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.figure,
            r.panel,
            out::f(r.x),
            r.series,
            r.y,
            r.se
        ));
    }
    Ok(csv)
}

fn parse_x(cell: &str, row: usize, column: usize) -> Result<f64> {
    cell.parse().map_err(|_| Error::Data {
        row,
        column,
        message: format!("cannot parse {cell:?} as a number"),
    })
}

/// simulate schema:
/// scenario_id,figure,panel,x_name,x_value,method,estimate,value,se,replications
fn from_simulate(rows: &[Vec<&str>]) -> Result<Vec<PlotRow>> {
    rows.iter()
        .enumerate()
        .map(|(i, cells)| {
            if cells.len() != 10 {
                return Err(Error::Data {
                    row: i + 2,
                    column: cells.len(),
                    message: "expected 10 columns".to_string(),
                });
            }
            Ok(PlotRow {
                figure: cells[1].to_string(),
                panel: format!("{}:{}", cells[2], cells[6]),
                x: parse_x(cells[4], i + 2, 5)?,
                series: cells[5].to_string(),
                y: cells[7].to_string(),
                se: cells[8].to_string(),
            })
        })
        .collect()
}

/// thresholds schema:
/// d,method,gamma,mu2_threshold,detection_branch,selection_branch
fn from_thresholds(rows: &[Vec<&str>]) -> Result<Vec<PlotRow>> {
    let mut out = Vec::new();
    for (i, cells) in rows.iter().enumerate() {
        if cells.len() != 6 {
            return Err(Error::Data {
                row: i + 2,
                column: cells.len(),
                message: "expected 6 columns".to_string(),
            });
        }
        let d = parse_x(cells[0], i + 2, 1)?;
        if cells[1] == "two_stage" && !cells[2].is_empty() {
            out.push(PlotRow {
                figure: "fig4_1".to_string(),
                panel: "gamma_star".to_string(),
                x: d,
                series: "two_stage".to_string(),
                y: cells[2].to_string(),
                se: String::new(),
            });
        }
        out.push(PlotRow {
            figure: "fig4_1".to_string(),
            panel: "threshold".to_string(),
            x: d,
            series: cells[1].to_string(),
            y: cells[3].to_string(),
            se: String::new(),
        });
    }
    Ok(out)
}
