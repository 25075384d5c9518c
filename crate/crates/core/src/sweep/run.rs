use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::{ResultTable, Series, SeriesKind, SweepError, SweepParameter, SweepSpec, STEADY_COLUMNS, TIME_COLUMNS};
use crate::model::{spectrum, validate_config, AuxConfig, DiodeConfig, MAX_AUX_ATOMS};
use crate::observables::{
    heat_current_dynamic, induced_aux_weights, rectification_factor, zero_current_threshold, ObservableError,
};
use crate::solver::{evolve, steady_state, AuxPreparation, DensityState, SteadyReport, SubspaceWeights};

/// Serial or data-parallel evaluation of the grid points. Both give the same
/// table; without the `parallel` feature `Parallel` runs serially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// On the global rayon pool.
    #[default]
    Parallel,
    /// On a dedicated pool of `threads` workers.
    ParallelWith { threads: usize },
}

/// One grid point of one series, ready to solve.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub config: DiodeConfig,
    pub kind: SeriesKind,
}

/// Apply a swept value to a series.
pub(crate) fn point_setup(series: &Series, parameter: SweepParameter, value: f64) -> Result<Point, String> {
    let config = &series.config;
    let mut kind = series.kind.clone();
    let config = match parameter {
        SweepParameter::TempLeft => config.with_temperatures(value, config.temp_right()).map_err(|e| e.to_string())?,
        SweepParameter::OmegaRight => config.with_omega_right(value).map_err(|e| e.to_string())?,
        SweepParameter::P1 => {
            if !(0.0..=1.0).contains(&value) {
                return Err(format!("p_1 = {value} outside [0, 1]"));
            }
            if config.n_aux() == 1 {
                if !matches!(kind, SeriesKind::Prepared(_)) {
                    return Err("p_1 sweeps need a prepared auxiliary atom".into());
                }
                kind = SeriesKind::Prepared(AuxPreparation::product_mixed(&[value]).map_err(|e| e.to_string())?);
            }
            config.clone()
        }
        SweepParameter::NAux => {
            if value < 0.0 || value.fract() != 0.0 || value > MAX_AUX_ATOMS as f64 {
                return Err(format!("n_aux = {value} is not an integer in 0..={MAX_AUX_ATOMS}"));
            }
            let n = value as usize;
            let mut raw = config.raw().clone();
            if n > 0 && raw.omega_aux.is_empty() {
                return Err("n_aux sweeps need omega_aux and g_la".into());
            }
            let (w, g) = (raw.omega_aux.first().copied(), raw.g_la.first().copied());
            raw.n_aux = n;
            raw.omega_aux = vec![w.unwrap_or(0.0); n];
            raw.g_la = vec![g.unwrap_or(0.0); n];
            validate_config(raw).map_err(|e| e.to_string())?
        }
        SweepParameter::Time => config.clone(),
    };
    if let SeriesKind::Prepared(p) = &kind {
        p.weights(config.n_aux()).map_err(|e| e.to_string())?;
    }
    Ok(Point { config, kind })
}

/// SHA-256 of the canonical configuration document.
pub fn config_hash(spec: &SweepSpec) -> String {
    Sha256::digest(spec.document.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Run a sweep with the default execution.
pub fn run_sweep(spec: &SweepSpec) -> Result<ResultTable, SweepError> {
    run_sweep_with(spec, Execution::default())
}

pub fn run_sweep_with(spec: &SweepSpec, execution: Execution) -> Result<ResultTable, SweepError> {
    let values = spec.grid.values();
    let (columns, blocks) = match spec.parameter {
        SweepParameter::Time => {
            let jobs: Vec<usize> = (0..spec.series.len()).collect();
            let blocks = map_ordered(&jobs, execution, |&s| time_rows(spec, s, &values))?;
            (TIME_COLUMNS.iter().map(|c| c.to_string()).collect::<Vec<_>>(), blocks)
        }
        _ => {
            let jobs: Vec<(usize, usize)> = (0..spec.series.len())
                .flat_map(|s| (0..values.len()).map(move |k| (s, k)))
                .collect();
            let rows = map_ordered(&jobs, execution, |&(s, k)| steady_row(spec, s, values[k]).map(|r| vec![r]))?;
            let mut columns: Vec<String> = STEADY_COLUMNS.iter().map(|c| c.to_string()).collect();
            if spec.outputs.detail {
                columns.extend(["cycle_rate_forward", "cycle_rate_reverse", "residual"].map(String::from));
            }
            (columns, rows)
        }
    };
    let rows = blocks.into_iter().flatten().collect();
    ResultTable::new(provenance(spec), columns, rows)
}

fn map_ordered<J, T, F>(jobs: &[J], execution: Execution, f: F) -> Result<Vec<T>, SweepError>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T, SweepError> + Sync + Send,
{
    match execution {
        Execution::Serial => jobs.iter().map(&f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            jobs.par_iter().map(&f).collect()
        }
        #[cfg(feature = "parallel")]
        Execution::ParallelWith { threads } => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| SweepError::Table(format!("thread pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(&f).collect())
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel | Execution::ParallelWith { .. } => {
            log::debug!("built without the parallel feature, running serially");
            jobs.iter().map(&f).collect()
        }
    }
}

fn point_error(value: f64, series: usize, e: impl ToString) -> SweepError {
    SweepError::Point {
        value,
        series,
        message: e.to_string(),
    }
}

/// Mean `ω′_L` under subspace weights.
fn mean_effective_frequency(config: &DiodeConfig, weights: &SubspaceWeights) -> f64 {
    AuxConfig::all(config.n_aux())
        .map(|aux| weights.get(aux.subspace()) * config.effective_left_frequency(aux))
        .sum()
}

fn steady_row(spec: &SweepSpec, s: usize, value: f64) -> Result<Vec<f64>, SweepError> {
    let series = &spec.series[s];
    let err = |e: &dyn std::fmt::Display| point_error(value, s, e);
    let point = point_setup(series, spec.parameter, value).map_err(|e| err(&e))?;
    let config = &point.config;
    let reversed = config.swapped_temperatures();

    let (forward, reverse, omega_eff): (SteadyReport, SteadyReport, f64) = match &point.kind {
        SeriesKind::Prepared(prep) => {
            let w = prep.weights(config.n_aux()).map_err(|e| err(&e))?;
            (
                steady_state(config, Some(prep)).map_err(|e| err(&e))?,
                steady_state(&reversed, Some(prep)).map_err(|e| err(&e))?,
                mean_effective_frequency(config, &w),
            )
        }
        SeriesKind::AuxBath => {
            let (p_e, _) = induced_aux_weights(config).map_err(|e| err(&e))?;
            let w = AuxPreparation::product_mixed(&[p_e])
                .and_then(|p| p.weights(1))
                .map_err(|e| err(&e))?;
            (
                steady_state(config, None).map_err(|e| err(&e))?,
                steady_state(&reversed, None).map_err(|e| err(&e))?,
                mean_effective_frequency(config, &w),
            )
        }
        SeriesKind::WeakAuxBathLimit => {
            let solve = |c: &DiodeConfig| -> Result<(SteadyReport, SubspaceWeights), SweepError> {
                let (p_e, _) = induced_aux_weights(c).map_err(|e| err(&e))?;
                let prep = AuxPreparation::product_mixed(&[p_e]).map_err(|e| err(&e))?;
                let bare = c.with_aux_bath(None).map_err(|e| err(&e))?;
                let report = steady_state(&bare, Some(&prep)).map_err(|e| err(&e))?;
                Ok((report, prep.weights(1).map_err(|e| err(&e))?))
            };
            let (f, w) = solve(config)?;
            let (r, _) = solve(&reversed)?;
            (f, r, mean_effective_frequency(config, &w))
        }
    };

    let rectification = match rectification_factor(forward.heat_left, reverse.heat_left, zero_current_threshold(config)) {
        Ok(r) => r,
        Err(ObservableError::BothCurrentsZero { .. }) => 0.0,
        Err(e) => return Err(err(&e)),
    };
    let mut row = vec![
        value,
        s as f64,
        forward.heat_left,
        reverse.heat_left,
        forward.heat_right,
        rectification,
        omega_eff,
    ];
    if spec.outputs.detail {
        let cycle = |q: f64| if config.g_lr() == 0.0 { 0.0 } else { -q / (4.0 * config.g_lr()) };
        row.extend([
            cycle(forward.heat_left),
            cycle(reverse.heat_left),
            forward.residual.max(reverse.residual),
        ]);
    }
    Ok(row)
}

/// Left and right atoms excited, auxiliary atoms as prepared.
pub fn initial_state(config: &DiodeConfig, preparation: &AuxPreparation) -> Result<DensityState, SweepError> {
    let one = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let result = match preparation {
        AuxPreparation::ProductPure(amps) => {
            let mut atoms = vec![one, one];
            atoms.extend_from_slice(amps);
            DensityState::product_pure(&atoms)
        }
        other => other.weights(config.n_aux()).and_then(|w| {
            let layout = config.layout();
            let mut pops = vec![0.0; layout.dim()];
            for m in 1..=layout.subspace_count() {
                pops[layout.subspace_levels(m)[0].zero_based()] = w.get(m);
            }
            DensityState::from_populations(&pops)
        }),
    };
    result.map_err(|e| SweepError::Validation(vec![e.to_string()]))
}

fn time_rows(spec: &SweepSpec, s: usize, times: &[f64]) -> Result<Vec<Vec<f64>>, SweepError> {
    let series = &spec.series[s];
    let config = &series.config;
    let SeriesKind::Prepared(prep) = &series.kind else {
        return Err(point_error(times[0], s, "time evolution needs an explicit preparation"));
    };
    let rho0 = initial_state(config, prep).map_err(|e| point_error(times[0], s, e))?;
    let trajectory = evolve(config, &rho0, times).map_err(|e| point_error(times[0], s, e))?;
    let spec_e = spectrum(config);
    Ok(trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, rho)| {
            let q = heat_current_dynamic(config, rho);
            vec![t, s as f64, q.left, q.right, rho.max_coherence(), rho.energy(&spec_e)]
        })
        .collect())
}

fn provenance(spec: &SweepSpec) -> Vec<(String, String)> {
    let mut h = vec![
        ("tool".to_string(), format!("qdiode {}", env!("CARGO_PKG_VERSION"))),
        ("preset".to_string(), spec.preset.clone().unwrap_or_else(|| "none".into())),
        ("parameter".to_string(), spec.parameter.to_string()),
        ("config_sha256".to_string(), config_hash(spec)),
        ("plot".to_string(), plot_column(spec).to_string()),
    ];
    for (k, s) in spec.series.iter().enumerate() {
        h.push(("series".into(), format!("{k} {}", s.label)));
    }
    if spec.parameter == SweepParameter::OmegaRight {
        // R vanishes where ω_R meets ω′_L of a definite preparation.
        for (k, s) in spec.series.iter().enumerate() {
            if let SeriesKind::Prepared(p) = &s.kind {
                if let Ok(w) = p.weights(s.config.n_aux()) {
                    if w.as_slice().iter().filter(|&&x| x > 0.0).count() == 1 {
                        let x = mean_effective_frequency(&s.config, &w);
                        h.push(("marker".into(), format!("{k} {x:.16e}")));
                    }
                }
            }
        }
    }
    for n in &spec.notes {
        h.push(("note".into(), n.clone()));
    }
    for line in spec.document.to_toml().lines() {
        h.push(("config".into(), line.to_string()));
    }
    h
}

fn plot_column(spec: &SweepSpec) -> &'static str {
    match spec.parameter {
        SweepParameter::Time => "q_l",
        SweepParameter::P1 => "q_l_forward",
        _ => match spec.preset.as_deref() {
            Some(id) if id.starts_with('2') => "q_l_forward",
            _ => "rectification",
        },
    }
}
