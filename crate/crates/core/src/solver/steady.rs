use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use super::{AuxPreparation, SolverError, SubspaceWeights};
use crate::model::{DiodeConfig, Layout};
use crate::observables::{cycle_flux_scale, heat_currents_steady, net_flows, subspace_cycle_rate};
use crate::rates::{full_generator, RateGenerator, SubspaceRates};

/// Residual tolerance relative to the generator's largest entry.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Allowed gap between the population-based and the closed-form cycle rate,
/// relative to the largest one-way flux of the subspace.
pub const CYCLE_CHECK_TOLERANCE: f64 = 1e-10;

/// Steady state of one configuration and preparation.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    /// Full population vector in basis order.
    pub populations: Vec<f64>,
    /// Conserved subspace weights; `None` when an auxiliary bath mixes them.
    pub weights: Option<SubspaceWeights>,
    /// Normalized `(ρ̃_11, ρ̃_22, ρ̃_33, ρ̃_44)` of every subspace.
    pub subspace_populations: Vec<[f64; 4]>,
    /// Net left-bath flow `m → m+2^(N+1)` in each subspace.
    pub cycle_rates: Vec<f64>,
    /// The same flows evaluated from the numeric populations.
    pub population_cycle_rates: Vec<f64>,
    pub heat_left: f64,
    pub heat_right: f64,
    /// Current from the auxiliary bath, when present.
    pub heat_aux: Option<f64>,
    /// `‖M ρ‖∞` of the returned populations.
    pub residual: f64,
    /// Largest absolute generator entry.
    pub generator_norm: f64,
}

/// Closed-form subspace populations from the spanning-tree expansion of the
/// four-level cycle.
#[allow(non_snake_case)]
pub fn steady_subspace_analytic(config: &DiodeConfig, m: usize) -> Result<[f64; 4], SolverError> {
    if config.aux_bath().is_some() {
        return Err(SolverError::AuxBathPresent);
    }
    let r = SubspaceRates::new(config, m)?;
    let (a, A) = (r.left_r_excited.absorption, r.left_r_excited.emission);
    let (b, B) = (r.left_r_ground.absorption, r.left_r_ground.emission);
    let (c, C) = (r.right_l_excited.absorption, r.right_l_excited.emission);
    let (d, D) = (r.right_l_ground.absorption, r.right_l_ground.emission);
    let raw = [
        a * b * c + b * c * D + a * d * B + a * c * d,
        a * b * C + a * C * d + A * b * D + b * C * D,
        A * b * c + A * c * d + A * B * d + B * C * d,
        A * B * D + A * c * D + a * B * C + B * C * D,
    ];
    let norm: f64 = raw.iter().sum();
    Ok(raw.map(|x| x / norm))
}

fn solve_normalized(mut m: DMatrix<f64>, mass: f64) -> Result<DVector<f64>, SolverError> {
    let n = m.nrows();
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    m.row_mut(n - 1).fill(scale);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = scale * mass;
    m.lu().solve(&rhs).ok_or(SolverError::Singular)
}

fn solve_subspace(matrix: &Matrix4<f64>) -> Result<[f64; 4], SolverError> {
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    let mut m = *matrix;
    m.row_mut(3).fill(scale);
    let rhs = Vector4::new(0.0, 0.0, 0.0, scale);
    let x = m.lu().solve(&rhs).ok_or(SolverError::Singular)?;
    Ok([x[0], x[1], x[2], x[3]])
}

/// Numeric subspace populations: the kernel of `M_L^m + M_R` normalized to 1.
pub fn steady_subspace_numeric(config: &DiodeConfig, m: usize) -> Result<[f64; 4], SolverError> {
    if config.aux_bath().is_some() {
        return Err(SolverError::AuxBathPresent);
    }
    solve_subspace(&SubspaceRates::new(config, m)?.matrix())
}

/// Kernel vector of `generator`. Each irreducible block is solved densely
/// with one balance row replaced by the normalization row. Blocks must map
/// one-to-one onto auxiliary subspaces when `weights` is given.
pub fn steady_numeric(
    generator: &RateGenerator,
    weights: Option<&SubspaceWeights>,
) -> Result<Vec<f64>, SolverError> {
    let dim = generator.dim();
    if dim < 4 || !dim.is_power_of_two() {
        return Err(SolverError::KernelDimensionMismatch(format!(
            "generator dimension {dim} is not 2^(N+2)"
        )));
    }
    let layout = Layout::new(dim.trailing_zeros() as usize - 2);
    let components = generator.components();

    let masses: Vec<f64> = match (components.len(), weights) {
        (1, None) => vec![1.0],
        (1, Some(w)) if w.as_slice().len() == 1 => vec![1.0],
        (1, Some(_)) => {
            return Err(SolverError::KernelDimensionMismatch(
                "weights supplied but the steady state is unique".into(),
            ))
        }
        (k, None) => {
            return Err(SolverError::KernelDimensionMismatch(format!(
                "{k} conserved blocks need subspace weights"
            )))
        }
        (k, Some(w)) => {
            if w.as_slice().len() != k {
                return Err(SolverError::KernelDimensionMismatch(format!(
                    "{k} conserved blocks but {} weights",
                    w.as_slice().len()
                )));
            }
            let mut masses = Vec::with_capacity(k);
            for comp in &components {
                let aux = |i: usize| layout.aux_of(crate::model::BasisIndex::from_zero_based(i));
                let first = aux(comp[0]);
                if comp.iter().any(|&i| aux(i) != first) {
                    return Err(SolverError::KernelDimensionMismatch(
                        "a conserved block spans several auxiliary configurations".into(),
                    ));
                }
                masses.push(w.get(first.subspace()));
            }
            masses
        }
    };

    let mut populations = vec![0.0; dim];
    for (comp, &mass) in components.iter().zip(&masses) {
        if mass == 0.0 {
            continue;
        }
        let block = DMatrix::from_fn(comp.len(), comp.len(), |r, c| generator.matrix()[(comp[r], comp[c])]);
        let x = solve_normalized(block, mass)?;
        for (k, &i) in comp.iter().enumerate() {
            populations[i] = x[k];
        }
    }

    let residual = max_abs(&generator.apply(&populations));
    let tolerance = RESIDUAL_TOLERANCE * generator.max_norm();
    if !(residual <= tolerance) {
        return Err(SolverError::NonConvergence { residual, tolerance });
    }
    Ok(populations)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Steady state with heat currents and cycle rates.
///
/// Without an auxiliary bath the subspaces are solved one at a time and
/// weighted by the preparation, which defaults to all-ground. Currents come
/// from the cycle rates, which are checked against the numeric populations.
/// With an auxiliary bath the steady state is unique and `preparation` must
/// be `None`.
pub fn steady_state(
    config: &DiodeConfig,
    preparation: Option<&AuxPreparation>,
) -> Result<SteadyReport, SolverError> {
    if config.aux_bath().is_some() {
        if preparation.is_some() {
            return Err(SolverError::KernelDimensionMismatch(
                "the auxiliary bath fixes a unique steady state; no preparation allowed".into(),
            ));
        }
        let generator = full_generator(config);
        let populations = steady_numeric(&generator, None)?;
        let residual = max_abs(&generator.apply(&populations));
        let q = heat_currents_steady(config, &populations);
        return Ok(SteadyReport {
            populations,
            weights: None,
            subspace_populations: Vec::new(),
            cycle_rates: Vec::new(),
            population_cycle_rates: Vec::new(),
            heat_left: q.left,
            heat_right: q.right,
            heat_aux: Some(q.aux),
            residual,
            generator_norm: generator.max_norm(),
        });
    }

    let n = config.n_aux();
    let weights = match preparation {
        Some(p) => p.weights(n)?,
        None => {
            log::info!("no auxiliary preparation given, defaulting to all-ground");
            AuxPreparation::AllGround.weights(n)?
        }
    };
    let layout = config.layout();
    let count = layout.subspace_count();
    let mut populations = vec![0.0; layout.dim()];
    let mut subspace_populations = Vec::with_capacity(count);
    let mut cycle_rates = Vec::with_capacity(count);
    let mut population_cycle_rates = Vec::with_capacity(count);
    let mut cycle_gap: f64 = 0.0;
    let mut residual: f64 = 0.0;
    let mut generator_norm: f64 = 0.0;
    for m in 1..=count {
        let rates = SubspaceRates::new(config, m)?;
        let matrix = rates.matrix();
        // Sums of positive products keep tiny populations relatively accurate.
        let rho = steady_subspace_analytic(config, m)?;
        let p = weights.get(m);
        let r = matrix * Vector4::from(rho);
        residual = residual.max(p * r.amax());
        generator_norm = generator_norm.max(matrix.amax());
        for (level, x) in layout.subspace_levels(m).iter().zip(rho) {
            populations[level.zero_based()] = p * x;
        }
        let f = subspace_cycle_rate(&rates, config);
        let f_pop = net_flows(&rates, &rho)[0];
        cycle_gap = cycle_gap.max((f - f_pop).abs() / cycle_flux_scale(&rates, &rho));
        cycle_rates.push(f);
        population_cycle_rates.push(f_pop);
        subspace_populations.push(rho);
    }
    let tolerance = RESIDUAL_TOLERANCE * generator_norm;
    if !(residual <= tolerance) {
        return Err(SolverError::NonConvergence { residual, tolerance });
    }
    if !(cycle_gap <= CYCLE_CHECK_TOLERANCE) {
        return Err(SolverError::NonConvergence {
            residual: cycle_gap,
            tolerance: CYCLE_CHECK_TOLERANCE,
        });
    }
    // Σ_m p_m 4 g_LR F_m; population fluxes would cancel to ~1e-7 relative.
    let heat_left: f64 = -4.0
        * config.g_lr()
        * cycle_rates.iter().zip(weights.as_slice()).map(|(f, p)| p * f).sum::<f64>();
    Ok(SteadyReport {
        populations,
        weights: Some(weights),
        subspace_populations,
        cycle_rates,
        population_cycle_rates,
        heat_left,
        heat_right: -heat_left,
        heat_aux: None,
        residual,
        generator_norm,
    })
}
