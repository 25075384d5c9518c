use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::integrator::{Dopri5, IntegratorOptions};
use super::{SolverError, NORM_TOLERANCE};
use crate::model::{spectrum, DiodeConfig, Layout, Spectrum};
use crate::rates::{full_generator, offdiagonal_blocks};

/// Dynamics keep the full coherence bookkeeping, so the size is capped.
pub const MAX_EVOLVE_AUX_ATOMS: usize = 6;
/// Trace drift or negativity beyond this aborts a trajectory.
pub const INVARIANT_TOLERANCE: f64 = 1e-8;

/// Hermitian, unit-trace density matrix in the product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: DMatrix<Complex64>,
}

impl DensityState {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self, SolverError> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || dim < 4 || !dim.is_power_of_two() {
            return Err(SolverError::InvalidState(format!(
                "density matrix must be 2^(N+2) square, got {dim}x{}",
                matrix.ncols()
            )));
        }
        let state = DensityState { matrix };
        let herm = state.hermiticity_error();
        if herm > NORM_TOLERANCE {
            return Err(SolverError::InvalidState(format!("not Hermitian ({herm:e})")));
        }
        let trace = state.trace();
        if (trace - 1.0).abs() > NORM_TOLERANCE {
            return Err(SolverError::InvalidState(format!("trace {trace} differs from 1")));
        }
        if let Some(p) = state.populations().into_iter().find(|p| *p < -NORM_TOLERANCE) {
            return Err(SolverError::InvalidState(format!("negative population {p}")));
        }
        Ok(state)
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(populations: &[f64]) -> Result<Self, SolverError> {
        let diag = DVector::from_iterator(
            populations.len(),
            populations.iter().map(|&p| Complex64::new(p, 0.0)),
        );
        Self::from_matrix(DMatrix::from_diagonal(&diag))
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, SolverError> {
        let psi = DVector::from_column_slice(amplitudes);
        Self::from_matrix(&psi * psi.adjoint())
    }

    /// Product of single-atom pure states `(α, β)` on `(|e⟩, |g⟩)`, ordered
    /// left atom, right atom, auxiliary atoms.
    pub fn product_pure(atoms: &[(Complex64, Complex64)]) -> Result<Self, SolverError> {
        let n = atoms.len();
        let amplitudes: Vec<Complex64> = (0..1usize << n)
            .map(|i| {
                atoms
                    .iter()
                    .enumerate()
                    .map(|(k, &(alpha, beta))| if i >> (n - 1 - k) & 1 == 0 { alpha } else { beta })
                    .product()
            })
            .collect();
        Self::pure(&amplitudes)
    }

    pub fn maximally_mixed(layout: Layout) -> Self {
        let dim = layout.dim();
        DensityState {
            matrix: DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest off-diagonal magnitude.
    pub fn max_coherence(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// `tr(H_S ρ)`.
    pub fn energy(&self, spectrum: &Spectrum) -> f64 {
        spectrum.energies().iter().zip(self.populations()).map(|(e, p)| e * p).sum()
    }

    /// Population mass of every auxiliary subspace.
    pub fn subspace_masses(&self, layout: Layout) -> Vec<f64> {
        let pops = self.populations();
        (1..=layout.subspace_count())
            .map(|m| layout.subspace_levels(m).iter().map(|i| pops[i.zero_based()]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityState>,
}

/// Evolve under the secular master equation with default tolerances.
pub fn evolve(
    config: &DiodeConfig,
    initial: &DensityState,
    times: &[f64],
) -> Result<Trajectory, SolverError> {
    evolve_with(config, initial, times, &IntegratorOptions::default())
}

/// Evolve `initial`, given at `times[0]`, and record the state at every
/// grid time.
///
/// Populations follow the rate generator. Coherences follow their decay
/// blocks in the frame rotating with `E_i − E_j`; the phase is applied
/// exactly so the step size is set by dissipation alone.
pub fn evolve_with(
    config: &DiodeConfig,
    initial: &DensityState,
    times: &[f64],
    options: &IntegratorOptions,
) -> Result<Trajectory, SolverError> {
    let n_aux = config.n_aux();
    if n_aux > MAX_EVOLVE_AUX_ATOMS {
        return Err(SolverError::TooManyAuxAtoms {
            n_aux,
            max: MAX_EVOLVE_AUX_ATOMS,
        });
    }
    let dim = config.layout().dim();
    if initial.dim() != dim {
        return Err(SolverError::InvalidState(format!(
            "state dimension {} does not match the configuration ({dim})",
            initial.dim()
        )));
    }
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(SolverError::InvalidTimeGrid("times must be finite and nonempty".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(SolverError::InvalidTimeGrid("times must be nondecreasing".into()));
    }

    let generator = full_generator(config);
    let blocks = offdiagonal_blocks(config);
    let t0 = times[0];

    // State layout: populations, then (re, im) of every block element.
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut len = dim;
    for b in &blocks {
        offsets.push(len);
        len += 2 * b.size();
    }
    let mut y = vec![0.0; len];
    y[..dim].copy_from_slice(&initial.populations());
    for (b, &off) in blocks.iter().zip(&offsets) {
        for (k, (i, j)) in b.elements.iter().enumerate() {
            let z = initial.matrix[(i.zero_based(), j.zero_based())];
            y[off + 2 * k] = z.re;
            y[off + 2 * k + 1] = z.im;
        }
    }

    let m = generator.matrix();
    let rhs = |y: &[f64], dy: &mut [f64]| {
        for i in 0..dim {
            dy[i] = (0..dim).map(|j| m[(i, j)] * y[j]).sum();
        }
        for (b, &off) in blocks.iter().zip(&offsets) {
            let n = b.size();
            for r in 0..n {
                let (mut re, mut im) = (0.0, 0.0);
                for c in 0..n {
                    let d = b.decay[(r, c)];
                    re += d * y[off + 2 * c];
                    im += d * y[off + 2 * c + 1];
                }
                dy[off + 2 * r] = re;
                dy[off + 2 * r + 1] = im;
            }
        }
    };
    let mut ode = Dopri5::new(rhs, len, *options);

    let mut states = Vec::with_capacity(times.len());
    let mut t = t0;
    for &target in times {
        ode.advance(&mut y, t, target)?;
        t = target;

        let mut matrix = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for i in 0..dim {
            matrix[(i, i)] = Complex64::new(y[i], 0.0);
        }
        for (b, &off) in blocks.iter().zip(&offsets) {
            let phase = Complex64::from_polar(1.0, -b.phase_frequency * (t - t0));
            for (k, (i, j)) in b.elements.iter().enumerate() {
                let z = phase * Complex64::new(y[off + 2 * k], y[off + 2 * k + 1]);
                matrix[(i.zero_based(), j.zero_based())] = z;
                matrix[(j.zero_based(), i.zero_based())] = z.conj();
            }
        }
        let state = DensityState { matrix };
        let drift = (state.trace() - 1.0).abs();
        if drift > INVARIANT_TOLERANCE {
            return Err(SolverError::InvariantViolation {
                time: t,
                detail: format!("trace drift {drift:e}"),
            });
        }
        if let Some(p) = state.populations().into_iter().find(|p| *p < -INVARIANT_TOLERANCE) {
            return Err(SolverError::InvariantViolation {
                time: t,
                detail: format!("negative population {p:e}"),
            });
        }
        states.push(state);
    }
    log::debug!("evolved {} grid points in {} steps", times.len(), ode.steps());
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}

/// `⟨H_S⟩` along a trajectory.
pub fn energy_series(config: &DiodeConfig, trajectory: &Trajectory) -> Vec<f64> {
    let spec = spectrum(config);
    trajectory.states.iter().map(|s| s.energy(&spec)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_config, RawConfig};
    use crate::solver::{steady_state, AuxPreparation};

    fn fig3() -> DiodeConfig {
        validate_config(RawConfig::pair(5.0, 3.0, 1.0, 0.001, 2.0, 1.0).with_uniform_aux(1, 2.0, 0.5))
            .unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn product_state_layout() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let state = DensityState::product_pure(&[(c(1.0), c(0.0)), (c(1.0), c(0.0)), (c(s), c(s))]).unwrap();
        let pops = state.populations();
        assert!((pops[0] - 0.5).abs() < 1e-15 && (pops[1] - 0.5).abs() < 1e-15);
        assert!((state.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
        assert!(DensityState::from_populations(&[0.5, 0.5, 0.1, 0.0]).is_err());
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let config = fig3();
        let report = steady_state(&config, Some(&AuxPreparation::AllExcited)).unwrap();
        let initial = DensityState::from_populations(&report.populations).unwrap();
        let traj = evolve(&config, &initial, &[0.0, 100.0, 1000.0]).unwrap();
        for s in &traj.states {
            for (a, b) in s.populations().iter().zip(&report.populations) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trace_and_subspace_mass_are_conserved() {
        let config = fig3();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let initial = DensityState::product_pure(&[(c(s), c(s)), (c(1.0), c(0.0)), (c(0.6), c(0.8))]).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| 50.0 * k as f64).collect();
        let traj = evolve(&config, &initial, &times).unwrap();
        let layout = config.layout();
        for state in &traj.states {
            assert!((state.trace() - 1.0).abs() < 1e-10);
            assert!(state.hermiticity_error() < 1e-10);
            let masses = state.subspace_masses(layout);
            assert!((masses[0] - 0.36).abs() < 1e-10, "{masses:?}");
            assert!((masses[1] - 0.64).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_oversized_and_bad_grids() {
        let config = fig3();
        let state = DensityState::maximally_mixed(config.layout());
        assert!(matches!(
            evolve(&config, &state, &[1.0, 0.5]),
            Err(SolverError::InvalidTimeGrid(_))
        ));
        let big = validate_config(RawConfig::pair(5.0, 3.0, 0.1, 0.001, 2.0, 1.0).with_uniform_aux(7, 2.0, 0.01))
            .unwrap();
        let state = DensityState::maximally_mixed(big.layout());
        assert!(matches!(
            evolve(&big, &state, &[0.0]),
            Err(SolverError::TooManyAuxAtoms { .. })
        ));
    }
}
