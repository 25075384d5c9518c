//! Steady states (closed form and numeric) and density-matrix dynamics.

mod dynamics;
mod integrator;
mod steady;

pub use dynamics::{
    energy_series, evolve, evolve_with, DensityState, Trajectory, INVARIANT_TOLERANCE,
    MAX_EVOLVE_AUX_ATOMS,
};
pub use integrator::IntegratorOptions;
pub use steady::{
    steady_numeric, steady_state, steady_subspace_analytic, steady_subspace_numeric, SteadyReport,
};

use num_complex::Complex64;
use thiserror::Error;

use crate::model::AuxConfig;
use crate::rates::RateError;

/// Normalization tolerance for preparations and density states.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("kernel dimension mismatch: {0}")]
    KernelDimensionMismatch(String),
    #[error("steady-state residual {residual:e} exceeds {tolerance:e}")]
    NonConvergence { residual: f64, tolerance: f64 },
    #[error("step size {step:e} underflowed at t = {time}")]
    StepSizeUnderflow { time: f64, step: f64 },
    #[error("step budget of {steps} exhausted at t = {time}")]
    StepBudgetExhausted { time: f64, steps: usize },
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("invariant violated at t = {time}: {detail}")]
    InvariantViolation { time: f64, detail: String },
    #[error("invalid preparation: {0}")]
    InvalidPreparation(String),
    #[error("invalid density state: {0}")]
    InvalidState(String),
    #[error("dynamics support at most {max} auxiliary atoms, got {n_aux}")]
    TooManyAuxAtoms { n_aux: usize, max: usize },
    #[error("the four-level subspace solution ignores the auxiliary bath")]
    AuxBathPresent,
    #[error("singular linear system while solving for the steady state")]
    Singular,
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Conserved probability `p_m` of every subspace `m = 1..=2^N`, stored at
/// position `m − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceWeights {
    weights: Vec<f64>,
}

impl SubspaceWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, SolverError> {
        let n = weights.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(SolverError::InvalidPreparation(format!(
                "need 2^N subspace weights, got {n}"
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SolverError::InvalidPreparation(format!(
                "weights must be finite and nonnegative, found {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORM_TOLERANCE {
            return Err(SolverError::InvalidPreparation(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(SubspaceWeights { weights })
    }

    /// All mass on one definite auxiliary configuration.
    pub fn definite(aux: AuxConfig) -> Self {
        let mut weights = vec![0.0; 1 << aux.n_aux()];
        weights[aux.bits()] = 1.0;
        SubspaceWeights { weights }
    }

    pub fn n_aux(&self) -> usize {
        self.weights.len().trailing_zeros() as usize
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
    /// `p_m` for 1-based `m`.
    pub fn get(&self, m: usize) -> f64 {
        self.weights[m - 1]
    }
}

/// State of the auxiliary atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum AuxPreparation {
    AllExcited,
    AllGround,
    ClassicalWeights(SubspaceWeights),
    /// Per-atom amplitudes `(α_a, β_a)` on `(|e⟩, |g⟩)`, atom 1 first.
    ProductPure(Vec<(Complex64, Complex64)>),
}

impl AuxPreparation {
    pub fn definite(aux: AuxConfig) -> Self {
        AuxPreparation::ClassicalWeights(SubspaceWeights::definite(aux))
    }

    /// Independent atoms with excited probabilities `p_excited[a]`.
    pub fn product_mixed(p_excited: &[f64]) -> Result<Self, SolverError> {
        let n = p_excited.len();
        if let Some(p) = p_excited.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(SolverError::InvalidPreparation(format!(
                "excited probability {p} outside [0, 1]"
            )));
        }
        let weights = AuxConfig::all(n)
            .map(|aux| {
                (0..n)
                    .map(|a| if aux.is_excited(a) { p_excited[a] } else { 1.0 - p_excited[a] })
                    .product()
            })
            .collect();
        Ok(AuxPreparation::ClassicalWeights(SubspaceWeights { weights }))
    }

    /// Subspace weights seen by the population dynamics.
    pub fn weights(&self, n_aux: usize) -> Result<SubspaceWeights, SolverError> {
        match self {
            AuxPreparation::AllExcited => Ok(SubspaceWeights::definite(AuxConfig::all_excited(n_aux))),
            AuxPreparation::AllGround => Ok(SubspaceWeights::definite(AuxConfig::all_ground(n_aux))),
            AuxPreparation::ClassicalWeights(w) => {
                if w.n_aux() != n_aux {
                    return Err(SolverError::InvalidPreparation(format!(
                        "weights cover {} auxiliary atoms, config has {n_aux}",
                        w.n_aux()
                    )));
                }
                Ok(w.clone())
            }
            AuxPreparation::ProductPure(amps) => {
                if amps.len() != n_aux {
                    return Err(SolverError::InvalidPreparation(format!(
                        "{} amplitude pairs for {n_aux} auxiliary atoms",
                        amps.len()
                    )));
                }
                let mut p = Vec::with_capacity(n_aux);
                for (a, (alpha, beta)) in amps.iter().enumerate() {
                    let norm = alpha.norm_sqr() + beta.norm_sqr();
                    if (norm - 1.0).abs() > NORM_TOLERANCE {
                        return Err(SolverError::InvalidPreparation(format!(
                            "atom {} amplitudes have norm {norm}",
                            a + 1
                        )));
                    }
                    p.push(alpha.norm_sqr());
                }
                Self::product_mixed(&p)?.weights(n_aux)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            AuxPreparation::AllExcited => "excited".into(),
            AuxPreparation::AllGround => "ground".into(),
            AuxPreparation::ClassicalWeights(w) => {
                let nonzero: Vec<usize> = (0..w.weights.len()).filter(|&i| w.weights[i] > 0.0).collect();
                if let [only] = nonzero[..] {
                    format!("mask:{}", AuxConfig::from_bits(w.n_aux(), only).label())
                } else {
                    "weights".into()
                }
            }
            AuxPreparation::ProductPure(_) => "pure".into(),
        }
    }
}
