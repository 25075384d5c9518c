//! Parameter sweeps over validated configurations: document parsing,
//! figure presets, serial or data-parallel execution and table output.

mod document;
mod presets;
mod run;
mod svg;
mod table;

pub use document::{parse_document, parse_run_config, spec_from_document, ConfigDocument, OutputsSection, SeriesSection, SweepSection};
pub use presets::{figure_preset, FIGURE_IDS};
pub use run::{config_hash, initial_state, run_sweep, run_sweep_with, Execution};
pub use svg::emit_svg;
pub use table::{emit, parse_csv, Format, ResultTable, STEADY_COLUMNS, TIME_COLUMNS};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{AuxConfig, DiodeConfig};
use crate::solver::{AuxPreparation, SubspaceWeights};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid run configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("unknown figure '{0}'")]
    UnknownFigure(String),
    #[error("sweep value {value} (series {series}): {message}")]
    Point {
        value: f64,
        series: usize,
        message: String,
    },
    #[error("unsupported output format '{0}'")]
    UnsupportedFormat(String),
    #[error("result table has no rows")]
    EmptyTable,
    #[error("malformed table: {0}")]
    Table(String),
}

/// The swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    TempLeft,
    OmegaRight,
    /// Excited probability of the single auxiliary atom.
    P1,
    NAux,
    Time,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::TempLeft => "temp_left",
            SweepParameter::OmegaRight => "omega_right",
            SweepParameter::P1 => "p_1",
            SweepParameter::NAux => "n_aux",
            SweepParameter::Time => "time",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "temp_left" => SweepParameter::TempLeft,
            "omega_right" => SweepParameter::OmegaRight,
            "p_1" => SweepParameter::P1,
            "n_aux" => SweepParameter::NAux,
            "time" => SweepParameter::Time,
            other => {
                return Err(format!(
                    "unknown sweep parameter '{other}' (expected temp_left, omega_right, p_1, n_aux or time)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Range { min: f64, max: f64, count: usize },
    Values(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Range { min, max, count } => {
                let n = *count;
                (0..n)
                    .map(|k| {
                        if k + 1 == n {
                            *max
                        } else {
                            min + (max - min) * k as f64 / (n - 1) as f64
                        }
                    })
                    .collect()
            }
            Grid::Values(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Range { count, .. } => *count,
            Grid::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a series prepares, or couples, the auxiliary atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesKind {
    Prepared(AuxPreparation),
    /// The auxiliary atom has its own bath; the steady state is unique.
    AuxBath,
    /// Bath-free device weighted by what a vanishing auxiliary bath induces.
    WeakAuxBathLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub config: DiodeConfig,
    pub kind: SeriesKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outputs {
    /// Append the weighted cycle rate and the solver residual to each row.
    pub detail: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Grid,
    pub series: Vec<Series>,
    pub outputs: Outputs,
    pub preset: Option<String>,
    /// Assumptions worth flagging in the output header.
    pub notes: Vec<String>,
    /// Canonical document this spec was parsed from.
    pub document: ConfigDocument,
}

/// Parse a preparation such as `excited`, `ground`, `mask:eeg`,
/// `p:0.2,0.8` (subspace weights), `mixed:0.3,0.5` (per-atom excited
/// probabilities) or `pure:0.5` (per-atom `|α|²`, real amplitudes).
pub fn parse_preparation(text: &str) -> Result<AuxPreparation, String> {
    let list = |body: &str| -> Result<Vec<f64>, String> {
        body.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad number '{x}': {e}")))
            .collect()
    };
    let (head, body) = text.split_once(':').unwrap_or((text, ""));
    match head.trim() {
        "excited" if body.is_empty() => Ok(AuxPreparation::AllExcited),
        "ground" if body.is_empty() => Ok(AuxPreparation::AllGround),
        "mask" => AuxConfig::from_label(body.trim())
            .map(AuxPreparation::definite)
            .ok_or_else(|| format!("mask '{body}' must use only 'e' and 'g'")),
        "p" => SubspaceWeights::new(list(body)?)
            .map(AuxPreparation::ClassicalWeights)
            .map_err(|e| e.to_string()),
        "mixed" => AuxPreparation::product_mixed(&list(body)?).map_err(|e| e.to_string()),
        "pure" => {
            let amps = list(body)?
                .into_iter()
                .map(|a| {
                    if (0.0..=1.0).contains(&a) {
                        Ok((Complex64::new(a.sqrt(), 0.0), Complex64::new((1.0 - a).sqrt(), 0.0)))
                    } else {
                        Err(format!("|alpha|^2 = {a} outside [0, 1]"))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(AuxPreparation::ProductPure(amps))
        }
        _ => Err(format!(
            "unknown preparation '{text}' (expected excited, ground, mask:.., p:.., mixed:.. or pure:..)"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = Grid::Range {
            min: 0.525,
            max: 1.0,
            count: 20,
        };
        let v = g.values();
        assert_eq!(v.len(), 20);
        assert_eq!(v[0], 0.525);
        assert_eq!(v[19], 1.0);
        assert!((v[1] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn preparations_parse() {
        assert_eq!(parse_preparation("excited").unwrap(), AuxPreparation::AllExcited);
        assert_eq!(parse_preparation("mask:eg").unwrap().label(), "mask:eg");
        let w = parse_preparation("p:0.25,0.75").unwrap().weights(1).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
        let m = parse_preparation("mixed:0.3").unwrap().weights(1).unwrap();
        assert!((m.get(1) - 0.3).abs() < 1e-15);
        let p = parse_preparation("pure:0.2").unwrap().weights(1).unwrap();
        assert!((p.get(1) - 0.2).abs() < 1e-15);
        assert!(parse_preparation("mask:exg").is_err());
        assert!(parse_preparation("p:0.5,0.6").is_err());
        assert!(parse_preparation("pure:1.5").is_err());
        assert!(parse_preparation("hot").is_err());
    }
}
