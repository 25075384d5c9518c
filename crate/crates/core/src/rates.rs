//! Thermal rates, population-rate generators and coherence decay blocks.
//!
//! Every generator entry is a full physical rate: an edge driven by a bath
//! at Bohr frequency ω moves population downward at `2 J(−ω)` and upward at
//! `2 J(+ω)`, with `J(+ω) = γ n(ω)` and `J(−ω) = γ (n(ω) + 1)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{all_transitions, spectrum, BasisIndex, DiodeConfig, Reservoir, Transition};

/// Above this ratio ω/T the Bose factor is replaced by `exp(−ω/T)`.
pub const BOSE_ASYMPTOTIC_RATIO: f64 = 700.0;
/// Below this ratio ω/T the Bose factor is treated as out of domain.
pub const BOSE_MIN_RATIO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("{0}")]
    Domain(String),
    #[error("subspace index {m} outside 1..={count}")]
    IndexOutOfRange { m: usize, count: usize },
}

/// Mean thermal occupation `1/(exp(ω/T) − 1)`.
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64, RateError> {
    if !(omega > 0.0) || !(temperature > 0.0) {
        return Err(RateError::Domain(format!(
            "Bose occupation needs omega > 0 and T > 0, got omega = {omega}, T = {temperature}"
        )));
    }
    let x = omega / temperature;
    if x > BOSE_ASYMPTOTIC_RATIO {
        Ok((-x).exp())
    } else if x < BOSE_MIN_RATIO {
        Err(RateError::Domain(format!(
            "omega/T = {x:e} is too small for a finite occupation"
        )))
    } else {
        Ok(1.0 / x.exp_m1())
    }
}

/// Flat-spectrum bath correlation `J(±ω)`: absorption for positive
/// `signed_omega`, emission for negative.
pub fn spectral_rate(signed_omega: f64, temperature: f64, gamma: f64) -> Result<f64, RateError> {
    if signed_omega == 0.0 || !signed_omega.is_finite() {
        return Err(RateError::Domain(format!(
            "spectral rate needs a nonzero frequency, got {signed_omega}"
        )));
    }
    let n = bose_occupation(signed_omega.abs(), temperature)?;
    Ok(if signed_omega > 0.0 {
        gamma * n
    } else {
        gamma * (n + 1.0)
    })
}

/// `J(+ω)` and `J(−ω)` of one Bohr frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub absorption: f64,
    pub emission: f64,
}

impl RatePair {
    pub fn new(omega: f64, temperature: f64, gamma: f64) -> Result<Self, RateError> {
        let n = bose_occupation(omega, temperature)?;
        Ok(RatePair {
            absorption: gamma * n,
            emission: gamma * (n + 1.0),
        })
    }
}

/// One bath-driven edge of the population network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub reservoir: Reservoir,
    pub upper: BasisIndex,
    pub lower: BasisIndex,
    pub bohr_frequency: f64,
    /// Upper → lower, `2 J(−ω)`.
    pub down: f64,
    /// Lower → upper, `2 J(+ω)`.
    pub up: f64,
    /// Position of the owning transition in [`all_transitions`] order.
    pub transition: usize,
}

impl Edge {
    /// Net probability flow upper → lower.
    pub fn net_flow(&self, populations: &[f64]) -> f64 {
        self.down * populations[self.upper.zero_based()] - self.up * populations[self.lower.zero_based()]
    }
}

fn bath_of(config: &DiodeConfig, reservoir: Reservoir) -> (f64, f64) {
    match reservoir {
        Reservoir::Left => (config.temp_left(), config.gamma()),
        Reservoir::Right => (config.temp_right(), config.gamma()),
        Reservoir::Aux => {
            let bath = config.aux_bath().expect("aux transitions need an aux bath");
            (bath.temp_aux, bath.gamma_aux)
        }
    }
}

/// Every population edge of the configuration with its thermal rates.
pub fn population_edges(config: &DiodeConfig) -> Vec<Edge> {
    edges_of(config, &all_transitions(config))
}

pub(crate) fn edges_of(config: &DiodeConfig, transitions: &[Transition]) -> Vec<Edge> {
    let mut edges = Vec::new();
    for (k, t) in transitions.iter().enumerate() {
        let (temperature, gamma) = bath_of(config, t.reservoir);
        // Valid configurations keep every Bohr frequency and temperature positive.
        let rates = RatePair::new(t.bohr_frequency, temperature, gamma)
            .expect("validated configuration has finite rates");
        for &(upper, lower) in &t.pairs {
            edges.push(Edge {
                reservoir: t.reservoir,
                upper,
                lower,
                bohr_frequency: t.bohr_frequency,
                down: 2.0 * rates.emission,
                up: 2.0 * rates.absorption,
                transition: k,
            });
        }
    }
    edges
}

/// Column-stochastic rate matrix: `d|ρ⟩/dt = M |ρ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGenerator {
    matrix: DMatrix<f64>,
}

impl RateGenerator {
    pub fn zeros(dim: usize) -> Self {
        RateGenerator {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn from_edges<'a>(dim: usize, edges: impl IntoIterator<Item = &'a Edge>) -> Self {
        let mut g = Self::zeros(dim);
        for e in edges {
            g.add_edge(e.upper.zero_based(), e.lower.zero_based(), e.down, e.up);
        }
        g
    }

    fn add_edge(&mut self, upper: usize, lower: usize, down: f64, up: f64) {
        let m = &mut self.matrix;
        m[(lower, upper)] += down;
        m[(upper, upper)] -= down;
        m[(upper, lower)] += up;
        m[(lower, lower)] -= up;
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Largest absolute entry.
    pub fn max_norm(&self) -> f64 {
        self.matrix.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    /// Largest absolute column sum; zero for an exact generator.
    pub fn max_column_sum(&self) -> f64 {
        self.matrix
            .column_iter()
            .map(|c| c.sum().abs())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, populations: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(populations);
        (&self.matrix * v).iter().copied().collect()
    }

    /// Dimension of the kernel, from singular values below
    /// `rel_tol · max_norm`.
    pub fn kernel_dimension(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.max_norm();
        let svd = self.matrix.clone().svd(false, false);
        svd.singular_values.iter().filter(|&&s| s <= cutoff).count()
    }

    /// Connected components of the transition graph, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for j in 0..n {
            for i in 0..n {
                if i != j && self.matrix[(i, j)] != 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            let k = *slot.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[k].push(i);
        }
        groups
    }
}

impl std::ops::Add for &RateGenerator {
    type Output = RateGenerator;
    fn add(self, rhs: Self) -> RateGenerator {
        RateGenerator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

/// Per-bath parts of the full population generator.
#[derive(Debug, Clone, PartialEq)]
pub struct BathGenerators {
    pub left: RateGenerator,
    pub right: RateGenerator,
    pub aux: Option<RateGenerator>,
}

impl BathGenerators {
    pub fn total(&self) -> RateGenerator {
        let mut total = &self.left + &self.right;
        if let Some(aux) = &self.aux {
            total = &total + aux;
        }
        total
    }
}

/// Dense per-bath generators over all `2^(N+2)` basis states.
pub fn bath_generators(config: &DiodeConfig) -> BathGenerators {
    let dim = config.layout().dim();
    let edges = population_edges(config);
    let of = |r: Reservoir| RateGenerator::from_edges(dim, edges.iter().filter(|e| e.reservoir == r));
    BathGenerators {
        left: of(Reservoir::Left),
        right: of(Reservoir::Right),
        aux: config.aux_bath().map(|_| of(Reservoir::Aux)),
    }
}

/// Full population generator `M_L + M_R (+ M_1)`.
pub fn full_generator(config: &DiodeConfig) -> RateGenerator {
    bath_generators(config).total()
}

/// Rates of one independent subspace. `left_r_excited` drives
/// `ρ̃_11 ↔ ρ̃_33`, `left_r_ground` drives `ρ̃_22 ↔ ρ̃_44`, `right_l_excited`
/// drives `ρ̃_11 ↔ ρ̃_22` and `right_l_ground` drives `ρ̃_33 ↔ ρ̃_44`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceRates {
    pub m: usize,
    pub left_r_excited: RatePair,
    pub left_r_ground: RatePair,
    pub right_l_excited: RatePair,
    pub right_l_ground: RatePair,
    /// `[ω_{L,m}, ω_{L,m+2^N}]`
    pub left_frequencies: [f64; 2],
    /// `[ω_{R,1}, ω_{R,2}]`
    pub right_frequencies: [f64; 2],
}

impl SubspaceRates {
    pub fn new(config: &DiodeConfig, m: usize) -> Result<Self, RateError> {
        let count = config.layout().subspace_count();
        if m == 0 || m > count {
            return Err(RateError::IndexOutOfRange { m, count });
        }
        let aux = crate::model::AuxConfig::from_subspace(config.n_aux(), m);
        let left_frequencies = [config.left_frequency(true, aux), config.left_frequency(false, aux)];
        let right_frequencies = [config.right_frequency(true), config.right_frequency(false)];
        let (tl, tr, gamma) = (config.temp_left(), config.temp_right(), config.gamma());
        Ok(SubspaceRates {
            m,
            left_r_excited: RatePair::new(left_frequencies[0], tl, gamma)?,
            left_r_ground: RatePair::new(left_frequencies[1], tl, gamma)?,
            right_l_excited: RatePair::new(right_frequencies[0], tr, gamma)?,
            right_l_ground: RatePair::new(right_frequencies[1], tr, gamma)?,
            left_frequencies,
            right_frequencies,
        })
    }

    /// `M_L^m` over `(ρ̃_11, ρ̃_22, ρ̃_33, ρ̃_44)`.
    pub fn left_matrix(&self) -> Matrix4<f64> {
        let (a, b) = (self.left_r_excited, self.left_r_ground);
        2.0 * Matrix4::new(
            -a.emission, 0.0, a.absorption, 0.0,
            0.0, -b.emission, 0.0, b.absorption,
            a.emission, 0.0, -a.absorption, 0.0,
            0.0, b.emission, 0.0, -b.absorption,
        )
    }

    /// `M_R` over `(ρ̃_11, ρ̃_22, ρ̃_33, ρ̃_44)`.
    pub fn right_matrix(&self) -> Matrix4<f64> {
        let (c, d) = (self.right_l_excited, self.right_l_ground);
        2.0 * Matrix4::new(
            -c.emission, c.absorption, 0.0, 0.0,
            c.emission, -c.absorption, 0.0, 0.0,
            0.0, 0.0, -d.emission, d.absorption,
            0.0, 0.0, d.emission, -d.absorption,
        )
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        self.left_matrix() + self.right_matrix()
    }
}

/// `M_L^m + M_R` for subspace `m` (1-based).
pub fn subspace_generator(config: &DiodeConfig, m: usize) -> Result<RateGenerator, RateError> {
    let rates = SubspaceRates::new(config, m)?;
    let mat = rates.matrix();
    Ok(RateGenerator {
        matrix: DMatrix::from_fn(4, 4, |i, j| mat[(i, j)]),
    })
}

/// Coupled coherences `ρ_ij` (`i < j`) that evolve together:
/// `d/dt ρ = (decay − i ω_ij) ρ` over `elements`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffDiagonalBlock {
    pub elements: Vec<(BasisIndex, BasisIndex)>,
    /// `E_i − E_j`, shared by every element of the block.
    pub phase_frequency: f64,
    pub decay: DMatrix<f64>,
}

impl OffDiagonalBlock {
    pub fn size(&self) -> usize {
        self.elements.len()
    }

    /// `Λ = decay − i (E_i − E_j) 𝟙`.
    pub fn coefficient_matrix(&self) -> DMatrix<Complex64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |r, c| {
            let phase = if r == c { self.phase_frequency } else { 0.0 };
            Complex64::new(self.decay[(r, c)], -phase)
        })
    }

    /// Eigenvalues of the real decay part, ascending. Blocks have at most
    /// two elements and non-negative couplings, so these are real.
    pub fn decay_eigenvalues(&self) -> Vec<f64> {
        let d = &self.decay;
        match self.size() {
            1 => vec![d[(0, 0)]],
            2 => {
                let (a, b, c, e) = (d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]);
                let mean = 0.5 * (a + e);
                let disc = (0.25 * (a - e) * (a - e) + b * c).max(0.0).sqrt();
                vec![mean - disc, mean + disc]
            }
            _ => {
                let mut ev: Vec<f64> = d.clone().complex_eigenvalues().iter().map(|z| z.re).collect();
                ev.sort_by(f64::total_cmp);
                ev
            }
        }
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.decay_eigenvalues()
            .into_iter()
            .map(|re| Complex64::new(re, -self.phase_frequency))
            .collect()
    }

    pub fn determinant(&self) -> Complex64 {
        self.eigenvalues().into_iter().product()
    }
}

/// Coherence blocks of the secular master equation.
///
/// Each element decays at half the summed outflow of its two states. A
/// transition holding several pairs couples `ρ_{u1,u2}` with `ρ_{l1,l2}` for
/// any two of its pairs; all other coherences decay independently. Blocks
/// cover every `i < j`, so the count grows as `dim²/2`.
pub fn offdiagonal_blocks(config: &DiodeConfig) -> Vec<OffDiagonalBlock> {
    let dim = config.layout().dim();
    let transitions = all_transitions(config);
    let edges = edges_of(config, &transitions);
    let energies = spectrum(config);

    let mut outflow = vec![0.0; dim];
    for e in &edges {
        outflow[e.upper.zero_based()] += e.down;
        outflow[e.lower.zero_based()] += e.up;
    }

    // Coherence (u1,u2) ↔ (l1,l2) links from multi-pair transitions.
    let mut partner: HashMap<(usize, usize), ((usize, usize), f64, f64)> = HashMap::new();
    for (k, t) in transitions.iter().enumerate() {
        if t.pairs.len() < 2 {
            continue;
        }
        let edge = edges.iter().find(|e| e.transition == k).expect("edge per transition");
        for (p, &(u1, l1)) in t.pairs.iter().enumerate() {
            for &(u2, l2) in &t.pairs[p + 1..] {
                let (u1, u2, l1, l2) = (u1.zero_based(), u2.zero_based(), l1.zero_based(), l2.zero_based());
                debug_assert!(u1 < u2 && l1 < l2);
                // ρ̇_{l1,l2} += down · ρ_{u1,u2};  ρ̇_{u1,u2} += up · ρ_{l1,l2}
                partner.insert((u1, u2), ((l1, l2), edge.up, edge.down));
            }
        }
    }

    let mut blocks = Vec::with_capacity(dim * (dim - 1) / 2);
    let mut covered = std::collections::HashSet::new();
    for i in 0..dim {
        for j in i + 1..dim {
            if covered.contains(&(i, j)) {
                continue;
            }
            let diag = |a: usize, b: usize| -0.5 * (outflow[a] + outflow[b]);
            let phase_frequency = energies.energies()[i] - energies.energies()[j];
            let idx = |a: usize, b: usize| (BasisIndex::from_zero_based(a), BasisIndex::from_zero_based(b));
            if let Some(&((l1, l2), up, down)) = partner.get(&(i, j)) {
                covered.insert((l1, l2));
                blocks.push(OffDiagonalBlock {
                    elements: vec![idx(i, j), idx(l1, l2)],
                    phase_frequency,
                    decay: DMatrix::from_row_slice(2, 2, &[diag(i, j), up, down, diag(l1, l2)]),
                });
            } else {
                blocks.push(OffDiagonalBlock {
                    elements: vec![idx(i, j)],
                    phase_frequency,
                    decay: DMatrix::from_element(1, 1, diag(i, j)),
                });
            }
        }
    }
    blocks
}
