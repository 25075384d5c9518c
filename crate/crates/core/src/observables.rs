//! Heat currents, cycle rates and rectification factors.
//!
//! Currents are positive when energy flows from a bath into the system.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AuxConfig, ConfigError, DiodeConfig, Reservoir};
use crate::rates::{population_edges, spectral_rate, RateError, SubspaceRates};
use crate::solver::{steady_state, steady_subspace_analytic, AuxPreparation, DensityState, SolverError};

/// Both currents at or below `ZERO_CURRENT_TOLERANCE · 4 |g_LR| γ` count
/// as zero, leaving the rectification factor undefined.
pub const ZERO_CURRENT_TOLERANCE: f64 = 1e-12;
/// Agreement required between the four net rates of a subspace cycle,
/// relative to its largest one-way flux.
pub const CYCLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("net rates around the cycle disagree: {flows:?}")]
    RateMismatch { flows: [f64; 4] },
    #[error("both currents vanish (forward {forward:e}, reverse {reverse:e}); rectification undefined")]
    BothCurrentsZero { forward: f64, reverse: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("no sign change of the net current on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatCurrents {
    pub left: f64,
    pub right: f64,
    /// Zero unless the auxiliary atom has its own bath.
    pub aux: f64,
}

impl HeatCurrents {
    pub fn total(&self) -> f64 {
        self.left + self.right + self.aux
    }
}

/// Currents `Σ ω (up · p_lower − down · p_upper)` per bath. Valid for any
/// population vector; only populations enter because every dissipator is
/// secular and `H_S` is diagonal.
pub fn heat_currents_steady(config: &DiodeConfig, populations: &[f64]) -> HeatCurrents {
    let mut q = HeatCurrents::default();
    for e in population_edges(config) {
        let flow = -e.bohr_frequency * e.net_flow(populations);
        match e.reservoir {
            Reservoir::Left => q.left += flow,
            Reservoir::Right => q.right += flow,
            Reservoir::Aux => q.aux += flow,
        }
    }
    q
}

/// Instantaneous `tr{H_S L_μ[ρ]}`.
pub fn heat_current_dynamic(config: &DiodeConfig, state: &DensityState) -> HeatCurrents {
    heat_currents_steady(config, &state.populations())
}

/// Net rates `[Γ^L_{1→3}, Γ^L_{2→4}, Γ^R_{1→2}, Γ^R_{3→4}]` in subspace-level
/// labels. At stationarity they equal `[F, −F, −F, F]`.
pub fn net_flows(rates: &SubspaceRates, rho: &[f64; 4]) -> [f64; 4] {
    let net = |down: f64, up: f64, pu: f64, pl: f64| 2.0 * (down * pu - up * pl);
    let (a, b) = (rates.left_r_excited, rates.left_r_ground);
    let (c, d) = (rates.right_l_excited, rates.right_l_ground);
    [
        net(a.emission, a.absorption, rho[0], rho[2]),
        net(b.emission, b.absorption, rho[1], rho[3]),
        net(c.emission, c.absorption, rho[0], rho[1]),
        net(d.emission, d.absorption, rho[2], rho[3]),
    ]
}

fn max_one_way_flux(rates: &SubspaceRates, rho: &[f64; 4]) -> f64 {
    let (a, b) = (rates.left_r_excited, rates.left_r_ground);
    let (c, d) = (rates.right_l_excited, rates.right_l_ground);
    [
        a.emission * rho[0],
        a.absorption * rho[2],
        b.emission * rho[1],
        b.absorption * rho[3],
        c.emission * rho[0],
        c.absorption * rho[1],
        d.emission * rho[2],
        d.absorption * rho[3],
    ]
    .into_iter()
    .fold(0.0, f64::max)
        * 2.0
}

/// Net rate `F` of the four-level cycle of subspace `m`, from its normalized
/// populations. Each completed cycle carries `4 g_LR` from one bath to the
/// other, so the subspace currents are `Q_L = −4 g_LR F`, `Q_R = +4 g_LR F`.
pub fn cycle_rate(config: &DiodeConfig, rho: &[f64; 4], m: usize) -> Result<f64, ObservableError> {
    let rates = SubspaceRates::new(config, m)?;
    let flows = net_flows(&rates, rho);
    let f = flows[0];
    let tol = CYCLE_TOLERANCE * max_one_way_flux(&rates, rho);
    let consistent =
        (flows[1] + f).abs() <= tol && (flows[2] + f).abs() <= tol && (flows[3] - f).abs() <= tol;
    if consistent {
        Ok(f)
    } else {
        Err(ObservableError::RateMismatch { flows })
    }
}

/// `F = 2 (A b c D − a B C d) / Σ ρ̃` straight from the rates, with the
/// difference written as `a B C d · expm1(4 g_LR (1/T_L − 1/T_R))` so that
/// nearly balanced cycles keep full relative precision.
#[allow(non_snake_case)]
pub fn subspace_cycle_rate(rates: &SubspaceRates, config: &DiodeConfig) -> f64 {
    let r = rates;
    let (a, A) = (r.left_r_excited.absorption, r.left_r_excited.emission);
    let (b, B) = (r.left_r_ground.absorption, r.left_r_ground.emission);
    let (c, C) = (r.right_l_excited.absorption, r.right_l_excited.emission);
    let (d, D) = (r.right_l_ground.absorption, r.right_l_ground.emission);
    let norm = a * b * c + b * c * D + a * d * B + a * c * d
        + a * b * C + a * C * d + A * b * D + b * C * D
        + A * b * c + A * c * d + A * B * d + B * C * d
        + A * B * D + A * c * D + a * B * C + B * C * D;
    let bias = 4.0 * config.g_lr() * (1.0 / config.temp_left() - 1.0 / config.temp_right());
    2.0 * a * B * C * d * bias.exp_m1() / norm
}

/// Closed-form cycle rate of subspace `m`.
pub fn cycle_rate_closed_form(config: &DiodeConfig, m: usize) -> Result<f64, ObservableError> {
    if config.aux_bath().is_some() {
        return Err(SolverError::AuxBathPresent.into());
    }
    Ok(subspace_cycle_rate(&SubspaceRates::new(config, m)?, config))
}

/// Flux scale for judging net rates computed from populations.
pub fn cycle_flux_scale(rates: &SubspaceRates, rho: &[f64; 4]) -> f64 {
    max_one_way_flux(rates, rho)
}

/// Left current of the bare pair at the same frequencies and temperatures.
pub fn baseline_current(config: &DiodeConfig) -> Result<f64, ObservableError> {
    Ok(steady_state(&config.without_aux(), Some(&AuxPreparation::AllGround))?.heat_left)
}

fn require_single_aux(config: &DiodeConfig) -> Result<(), ObservableError> {
    if config.n_aux() != 1 || config.aux_bath().is_some() {
        return Err(ObservableError::Domain(format!(
            "needs exactly one bath-free auxiliary atom, config has n_aux = {}",
            config.n_aux()
        )));
    }
    Ok(())
}

/// `(Q_{L,1}, Q_{L,2})`: left currents with the single auxiliary atom
/// excited and in the ground state.
pub fn branch_currents(config: &DiodeConfig) -> Result<(f64, f64), ObservableError> {
    require_single_aux(config)?;
    let excited = steady_state(config, Some(&AuxPreparation::AllExcited))?.heat_left;
    let ground = steady_state(config, Some(&AuxPreparation::AllGround))?.heat_left;
    Ok((excited, ground))
}

/// `p_1 Q_{L,1} + (1 − p_1) Q_{L,2}`.
pub fn mixed_current(config: &DiodeConfig, p_1: f64) -> Result<f64, ObservableError> {
    if !(0.0..=1.0).contains(&p_1) {
        return Err(ObservableError::Domain(format!("p_1 = {p_1} outside [0, 1]")));
    }
    let (q1, q2) = branch_currents(config)?;
    Ok(p_1 * q1 + (1.0 - p_1) * q2)
}

/// Excited fraction at which the mixed current equals the bare-pair current.
/// The result may lie outside `[0, 1]`, meaning no preparation reaches the
/// baseline.
pub fn critical_fraction(config: &DiodeConfig) -> Result<f64, ObservableError> {
    let (q1, q2) = branch_currents(config)?;
    if q1 == q2 {
        return Err(ObservableError::Domain("branch currents coincide".into()));
    }
    Ok((baseline_current(config)? - q2) / (q1 - q2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Numeric,
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Numeric => "numeric",
            Method::ClosedForm => "closed_form",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectificationResult {
    /// `Q̇_L` at `(T_L, T_R)`.
    pub forward: f64,
    /// `Q̇_L` with the bath temperatures exchanged.
    pub reverse: f64,
    pub factor: f64,
    pub method: Method,
}

/// Currents at or below this magnitude count as zero.
pub fn zero_current_threshold(config: &DiodeConfig) -> f64 {
    ZERO_CURRENT_TOLERANCE * 4.0 * config.g_lr().abs() * config.gamma()
}

/// `|Q^f + Q^r| / max(|Q^f|, |Q^r|)`.
pub fn rectification_factor(forward: f64, reverse: f64, zero: f64) -> Result<f64, ObservableError> {
    let max = forward.abs().max(reverse.abs());
    if max <= zero {
        return Err(ObservableError::BothCurrentsZero { forward, reverse });
    }
    Ok(((forward + reverse).abs() / max).min(1.0))
}

/// Forward and reverse steady currents and their rectification factor.
/// `preparation` must be `None` when the auxiliary atom has a bath.
pub fn rectification_numeric(
    config: &DiodeConfig,
    preparation: Option<&AuxPreparation>,
) -> Result<RectificationResult, ObservableError> {
    let forward = steady_state(config, preparation)?.heat_left;
    let reverse = steady_state(&config.swapped_temperatures(), preparation)?.heat_left;
    Ok(RectificationResult {
        forward,
        reverse,
        factor: rectification_factor(forward, reverse, zero_current_threshold(config))?,
        method: Method::Numeric,
    })
}

/// `ω′_L = ω_L + Σ_a z_a 2 g_La`.
pub fn effective_left_frequency(config: &DiodeConfig, aux: AuxConfig) -> f64 {
    config.effective_left_frequency(aux)
}

/// `ln A(T_a, T_b)` with `A = sinh x (cosh y + e^q) + sinh y (cosh x + e^p)`,
/// `x = ω′_L/T_a`, `y = ω_R/T_b`, `p = 2g/T_a`, `q = 2g/T_b`, evaluated
/// without overflow.
pub fn log_amplitude_a(config: &DiodeConfig, t_a: f64, t_b: f64, aux: AuxConfig) -> f64 {
    let g = config.g_lr();
    let x = effective_left_frequency(config, aux) / t_a;
    let y = config.omega_right() / t_b;
    let (p, q) = (2.0 * g / t_a, 2.0 * g / t_b);
    // sinh z e^{-z} and cosh z e^{-z}
    let s = |z: f64| -0.5 * (-2.0 * z).exp_m1();
    let c = |z: f64| 0.5 * (1.0 + (-2.0 * z).exp());
    let scaled = s(x) * (c(y) + (q - y).exp()) + s(y) * (c(x) + (p - x).exp());
    scaled.ln() + x + y
}

/// `A(T_a, T_b)` for a definite auxiliary configuration.
pub fn amplitude_a(config: &DiodeConfig, t_a: f64, t_b: f64, aux: AuxConfig) -> f64 {
    log_amplitude_a(config, t_a, t_b, aux).exp()
}

/// Closed-form left currents `(Q^f, Q^r)` for the left bath at `t_a` and the
/// right bath at `t_b`, and then exchanged:
/// `Q^f = 4 g γ sinh(2g/T_b − 2g/T_a) / A(T_a, T_b)`.
pub fn closed_form_currents(config: &DiodeConfig, aux: AuxConfig, t_a: f64, t_b: f64) -> (f64, f64) {
    let g = config.g_lr();
    let gamma = config.gamma();
    let current = |ta: f64, tb: f64| {
        let s = (2.0 * g / tb - 2.0 * g / ta).sinh();
        4.0 * g * gamma * s * (-log_amplitude_a(config, ta, tb, aux)).exp()
    };
    (current(t_a, t_b), current(t_b, t_a))
}

/// `1 − min(A_f, A_r) / max(A_f, A_r)` for a definite auxiliary configuration
/// at the configured temperatures.
pub fn rectification_closed_form(
    config: &DiodeConfig,
    aux: AuxConfig,
) -> Result<RectificationResult, ObservableError> {
    let (tl, tr) = (config.temp_left(), config.temp_right());
    let (forward, reverse) = closed_form_currents(config, aux, tl, tr);
    if forward.abs().max(reverse.abs()) <= zero_current_threshold(config) {
        return Err(ObservableError::BothCurrentsZero { forward, reverse });
    }
    let gap = (log_amplitude_a(config, tl, tr, aux) - log_amplitude_a(config, tr, tl, aux)).abs();
    Ok(RectificationResult {
        forward,
        reverse,
        factor: -(-gap).exp_m1(),
        method: Method::ClosedForm,
    })
}

/// `(𝓡_all_ground, 𝓡_all_excited)`.
pub fn rectification_bounds(config: &DiodeConfig) -> Result<(f64, f64), ObservableError> {
    let ground = rectification_numeric(config, Some(&AuxPreparation::AllGround))?.factor;
    let excited = rectification_numeric(config, Some(&AuxPreparation::AllExcited))?.factor;
    Ok((ground, excited))
}

/// Weights `(p_e, p_g)` that a weak auxiliary bath imposes on the single
/// auxiliary atom: the balance of its up and down rates averaged over the
/// bath-free steady states of the two subspaces. Independent of `γ_1`.
pub fn induced_aux_weights(config: &DiodeConfig) -> Result<(f64, f64), ObservableError> {
    let bath = config.aux_bath().ok_or_else(|| {
        ObservableError::Domain("induced weights need an auxiliary bath".into())
    })?;
    let bare = config.with_aux_bath(None)?;
    let layout = bare.layout();
    let rate = |rho: &[f64; 4], m: usize, sign: f64| -> Result<f64, ObservableError> {
        let mut total = 0.0;
        for (level, p) in layout.subspace_levels(m).iter().zip(rho) {
            let w = bare.aux_frequency(0, layout.left_excited(*level));
            total += p * 2.0 * spectral_rate(sign * w, bath.temp_aux, bath.gamma_aux)?;
        }
        Ok(total)
    };
    let excited = steady_subspace_analytic(&bare, 1)?;
    let ground = steady_subspace_analytic(&bare, 2)?;
    let down = rate(&excited, 1, -1.0)?;
    let up = rate(&ground, 2, 1.0)?;
    let p_e = up / (down + up);
    Ok((p_e, 1.0 - p_e))
}

/// Rectification of the bath-free device with the auxiliary weights a
/// vanishing auxiliary bath would induce, evaluated separately for the
/// forward and the reverse bias.
pub fn rectification_weak_aux_bath(config: &DiodeConfig) -> Result<RectificationResult, ObservableError> {
    let current = |c: &DiodeConfig| -> Result<f64, ObservableError> {
        let (p_e, _) = induced_aux_weights(c)?;
        let prep = AuxPreparation::product_mixed(&[p_e])?;
        Ok(steady_state(&c.with_aux_bath(None)?, Some(&prep))?.heat_left)
    };
    let forward = current(config)?;
    let reverse = current(&config.swapped_temperatures())?;
    Ok(RectificationResult {
        forward,
        reverse,
        factor: rectification_factor(forward, reverse, zero_current_threshold(config))?,
        method: Method::Numeric,
    })
}

/// `Q^f + Q^r` as a function of `ω_R` for a definite auxiliary state.
pub fn net_rectified_current(
    config: &DiodeConfig,
    aux: AuxConfig,
    omega_right: f64,
) -> Result<f64, ObservableError> {
    let c = config.with_omega_right(omega_right)?;
    let r = rectification_numeric_unchecked(&c, &AuxPreparation::definite(aux))?;
    Ok(r.0 + r.1)
}

fn rectification_numeric_unchecked(
    config: &DiodeConfig,
    preparation: &AuxPreparation,
) -> Result<(f64, f64), ObservableError> {
    let forward = steady_state(config, Some(preparation))?.heat_left;
    let reverse = steady_state(&config.swapped_temperatures(), Some(preparation))?.heat_left;
    Ok((forward, reverse))
}

/// Bisection for the `ω_R` where `Q^f + Q^r` changes sign within `[lo, hi]`.
pub fn zero_rectification_frequency(
    config: &DiodeConfig,
    aux: AuxConfig,
    lo: f64,
    hi: f64,
    tolerance: f64,
) -> Result<f64, ObservableError> {
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = net_rectified_current(config, aux, lo)?;
    let f_hi = net_rectified_current(config, aux, hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(ObservableError::NoBracket { lo, hi });
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        let f_mid = net_rectified_current(config, aux, mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
