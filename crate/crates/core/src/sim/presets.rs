//! Named scenario grids matching the simulation designs the figures report,
//! with every competitor method attached and common random numbers across
//! methods within a cell.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::procedures::{gamma_for_beta, ClassicMethod, Sigma2Estimator, SigmaMode, SplitCutoff};
use crate::sim::{Dependence, MeanMode, MethodSpec, ScenarioConfig, VarianceMode};

/// Fixed seed of the Higher Criticism calibration streams; independent of
/// the data seed so calibration tables are stable across runs.
pub const HC_CALIBRATION_SEED: u64 = 0x4863_7269_7469_6373;
pub const HC_CALIBRATION_REPLICATIONS: usize = 10_000;

/// Epsilon used for the power panel of the fig8_1 grid (the sparsity level
/// is not part of that grid's axes).
const FIG8_1_POWER_EPSILON: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig4_1,
    Fig8_1,
    Fig8_2,
    Fig8_3,
    Fig8_4,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig4_1,
        Preset::Fig8_1,
        Preset::Fig8_2,
        Preset::Fig8_3,
        Preset::Fig8_4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig4_1 => "fig4_1",
            Preset::Fig8_1 => "fig8_1",
            Preset::Fig8_2 => "fig8_2",
            Preset::Fig8_3 => "fig8_3",
            Preset::Fig8_4 => "fig8_4",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4_1" => Ok(Preset::Fig4_1),
            "fig8_1" => Ok(Preset::Fig8_1),
            "fig8_2" => Ok(Preset::Fig8_2),
            "fig8_3" => Ok(Preset::Fig8_3),
            "fig8_4" => Ok(Preset::Fig8_4),
            other => Err(Error::config(format!(
                "unknown preset {other:?} (expected one of fig4_1, fig8_1, fig8_2, fig8_3, fig8_4)"
            ))),
        }
    }
}

/// Options shared by every preset build.
#[derive(Debug, Clone, Copy)]
pub struct PresetOptions {
    pub replications: usize,
    pub base_seed: u64,
    /// Overrides the mean mode of the fig8_3/fig8_4 grids (their default is
    /// all signal means equal to one; the alternative draws them U(-1,1)).
    pub mean_mode_override: Option<MeanMode>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions {
            replications: 2000,
            base_seed: 0,
            mean_mode_override: None,
        }
    }
}

/// One simulation cell with plotting metadata. Cells that differ only in
/// method share `config.base_seed`, so methods are compared on identical
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCell {
    pub id: String,
    pub figure: &'static str,
    pub panel: String,
    pub x_name: &'static str,
    pub x_value: f64,
    pub method_label: &'static str,
    pub config: ScenarioConfig,
}

/// What a preset expands to: simulation cells, or a pure calculator grid
/// over d for the tuning figure.
#[derive(Debug, Clone, PartialEq)]
pub enum PresetPlan {
    Simulation(Vec<ScenarioCell>),
    ThresholdGrid(Vec<f64>),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one grid cell; methods within the cell reuse it.
pub fn derive_cell_seed(base_seed: u64, cell_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(cell_index))
}

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

/// The five global-test methods of the high-dimensional comparison.
fn global_methods(gamma: f64, split_gamma: f64) -> Vec<MethodSpec> {
    vec![
        MethodSpec::TwoStageBonferroni {
            gamma,
            sigma: SigmaMode::Estimated,
            estimator: Sigma2Estimator::Mean,
        },
        MethodSpec::Classic(ClassicMethod::Bonferroni),
        MethodSpec::Simes,
        MethodSpec::SplitBonferroni {
            gamma: split_gamma,
            split_fraction: 0.5,
            cutoff: SplitCutoff::Gamma,
        },
        MethodSpec::HigherCriticism {
            calibration_seed: HC_CALIBRATION_SEED,
            calibration_replications: HC_CALIBRATION_REPLICATIONS,
        },
    ]
}

/// The four FWER-comparison procedures (selection tuned to about half the
/// hypotheses).
fn fwer_methods(m: usize) -> Result<Vec<MethodSpec>> {
    let gamma_half = gamma_for_beta(m, 0.5)?;
    Ok(vec![
        MethodSpec::TwoStageBonferroni {
            gamma: gamma_half,
            sigma: SigmaMode::Estimated,
            estimator: Sigma2Estimator::Mean,
        },
        MethodSpec::Classic(ClassicMethod::Bonferroni),
        MethodSpec::Classic(ClassicMethod::Hochberg),
        MethodSpec::SplitBonferroni {
            gamma: gamma_half,
            split_fraction: 0.5,
            cutoff: SplitCutoff::ConstantLevel(0.75),
        },
    ])
}

/// Expands a preset into its scenario cells (or the d grid for fig4_1).
pub fn scenario_preset(preset: Preset, options: &PresetOptions) -> Result<PresetPlan> {
    match preset {
        Preset::Fig4_1 => Ok(PresetPlan::ThresholdGrid(grid(0.05, 0.05, 20))),
        Preset::Fig8_1 => fig8_1(options),
        Preset::Fig8_2 => fig8_2(options),
        Preset::Fig8_3 => fig8_3(options),
        Preset::Fig8_4 => fig8_4(options),
    }
}

struct CellBuilder {
    figure: &'static str,
    options: PresetOptions,
    cells: Vec<ScenarioCell>,
    cell_index: u64,
}

impl CellBuilder {
    fn new(figure: &'static str, options: &PresetOptions) -> Self {
        CellBuilder {
            figure,
            options: *options,
            cells: Vec::new(),
            cell_index: 0,
        }
    }

    /// Adds one grid cell: every method shares the derived seed.
    fn push(
        &mut self,
        panel: &str,
        x_name: &'static str,
        x_value: f64,
        methods: &[MethodSpec],
        template: &ScenarioConfig,
    ) {
        let seed = derive_cell_seed(self.options.base_seed, self.cell_index);
        self.cell_index += 1;
        for method in methods {
            let mut config = template.clone();
            config.method = method.clone();
            config.base_seed = seed;
            config.replications = self.options.replications;
            self.cells.push(ScenarioCell {
                id: format!(
                    "{}:{}:{}={:.2}:{}",
                    self.figure,
                    panel,
                    x_name,
                    x_value,
                    method.label()
                ),
                figure: self.figure,
                panel: panel.to_string(),
                x_name,
                x_value,
                method_label: method.label(),
                config,
            });
        }
    }
}

fn fig8_1(options: &PresetOptions) -> Result<PresetPlan> {
    let (m, n, alpha, gamma) = (1000usize, 15usize, 0.05, 0.5);
    let methods = global_methods(gamma, gamma);
    let signal_count = (m as f64).powf(1.0 - FIG8_1_POWER_EPSILON).floor() as usize;
    let mut b = CellBuilder::new("fig8_1", options);
    let template = ScenarioConfig {
        m,
        n,
        dependence: Dependence::Independent, // cell-specific below
        variance: VarianceMode::CommonUniform { lo: 0.5, hi: 1.5 },
        means: MeanMode::UniformPm1,
        signal_count: 0,
        method: methods[0].clone(),
        alpha,
        replications: options.replications,
        base_seed: 0,
    };
    for (panel, signals) in [("type1", 0usize), ("power", signal_count)] {
        for rho in grid(0.0, 0.05, 20) {
            let cell = ScenarioConfig {
                dependence: Dependence::EqualCorrelation { rho },
                signal_count: signals,
                ..template.clone()
            };
            b.push(panel, "rho", rho, &methods, &cell);
        }
    }
    Ok(PresetPlan::Simulation(b.cells))
}

fn fig8_2(options: &PresetOptions) -> Result<PresetPlan> {
    let (m, n, alpha, gamma) = (1000usize, 15usize, 0.05, 0.5);
    let methods = global_methods(gamma, gamma);
    let panels: [(&str, VarianceMode); 3] = [
        ("equal_var", VarianceMode::CommonUniform { lo: 0.5, hi: 1.5 }),
        (
            "unequal_var_mild",
            VarianceMode::PerHypothesisUniform { lo: 0.8, hi: 1.2 },
        ),
        (
            "unequal_var_wide",
            VarianceMode::PerHypothesisUniform { lo: 0.5, hi: 1.5 },
        ),
    ];
    let mut b = CellBuilder::new("fig8_2", options);
    for (panel, variance) in panels {
        for epsilon in grid(0.5, 0.1, 6) {
            let signal_count = (m as f64).powf(1.0 - epsilon).floor() as usize;
            let cell = ScenarioConfig {
                m,
                n,
                dependence: Dependence::Independent,
                variance,
                means: MeanMode::UniformPm1,
                signal_count,
                method: methods[0].clone(),
                alpha,
                replications: options.replications,
                base_seed: 0,
            };
            b.push(panel, "epsilon", epsilon, &methods, &cell);
        }
    }
    Ok(PresetPlan::Simulation(b.cells))
}

fn fig8_3(options: &PresetOptions) -> Result<PresetPlan> {
    let (m, n, alpha) = (100usize, 15usize, 0.05);
    let methods = fwer_methods(m)?;
    let means = options
        .mean_mode_override
        .unwrap_or(MeanMode::Constant(1.0));
    let mut b = CellBuilder::new("fig8_3", options);
    for rho in [0.0, 0.5] {
        let panel = format!("rho={rho:.2}");
        for pi1 in grid(0.0, 0.05, 11) {
            let signal_count = (pi1 * m as f64).round() as usize;
            let cell = ScenarioConfig {
                m,
                n,
                dependence: Dependence::EqualCorrelation { rho },
                variance: VarianceMode::CommonUniform { lo: 0.5, hi: 1.5 },
                means,
                signal_count,
                method: methods[0].clone(),
                alpha,
                replications: options.replications,
                base_seed: 0,
            };
            b.push(&panel, "pi1", pi1, &methods, &cell);
        }
    }
    Ok(PresetPlan::Simulation(b.cells))
}

fn fig8_4(options: &PresetOptions) -> Result<PresetPlan> {
    let (m, n, alpha) = (100usize, 15usize, 0.05);
    let methods = fwer_methods(m)?;
    let means = options
        .mean_mode_override
        .unwrap_or(MeanMode::Constant(1.0));
    let signal_count = m / 5; // pi1 = 0.2
    let mut b = CellBuilder::new("fig8_4", options);
    for rho in grid(0.0, 0.05, 20) {
        let cell = ScenarioConfig {
            m,
            n,
            dependence: Dependence::EqualCorrelation { rho },
            variance: VarianceMode::CommonUniform { lo: 0.5, hi: 1.5 },
            means,
            signal_count,
            method: methods[0].clone(),
            alpha,
            replications: options.replications,
            base_seed: 0,
        };
        b.push("pi1=0.20", "rho", rho, &methods, &cell);
    }
    Ok(PresetPlan::Simulation(b.cells))
}
