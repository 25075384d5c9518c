//! Physical configuration, computational basis, diagonal spectrum and the
//! secular transitions each reservoir drives.
//!
//! Units are ħ = k_B = 1 throughout. The basis is the product basis of the
//! left atom, the right atom and auxiliary atoms `1..=N`, with the left atom
//! in the most significant bit and bit value `0` meaning excited. Index `1`
//! is therefore `|ee…e⟩` and index `2^(N+2)` is `|gg…g⟩`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest auxiliary-atom count accepted by [`DiodeConfig`].
pub const MAX_AUX_ATOMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: String, value: f64 },
    #[error("temperature {field} must be positive, got {value}")]
    NonPositiveTemperature { field: String, value: f64 },
    #[error("rate {field} must be positive, got {value}")]
    NonPositiveRate { field: String, value: f64 },
    #[error("frequency {field} must be positive, got {value}")]
    NonPositiveFrequency { field: String, value: f64 },
    #[error("{field} has {found} entries but n_aux = {expected}")]
    LengthMismatch {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("Bohr frequency {label} = {value} is not strictly positive")]
    NonPositiveBohrFrequency { label: String, value: f64 },
    #[error("a dissipative auxiliary atom requires n_aux = 1, got {n_aux}")]
    AuxBathUnsupported { n_aux: usize },
    #[error("n_aux = {n_aux} exceeds the supported maximum of {max}")]
    TooManyAuxAtoms { n_aux: usize, max: usize },
}

/// Bath attached to the single auxiliary atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxBath {
    pub gamma_aux: f64,
    pub temp_aux: f64,
}

/// Unvalidated parameters. Turn into a [`DiodeConfig`] with
/// [`validate_config`] or `DiodeConfig::try_from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n_aux: usize,
    pub omega_left: f64,
    pub omega_right: f64,
    #[serde(default)]
    pub omega_aux: Vec<f64>,
    pub g_lr: f64,
    #[serde(default)]
    pub g_la: Vec<f64>,
    pub gamma: f64,
    pub temp_left: f64,
    pub temp_right: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_bath: Option<AuxBath>,
}

impl RawConfig {
    /// Two atoms, no auxiliaries.
    pub fn pair(
        omega_left: f64,
        omega_right: f64,
        g_lr: f64,
        gamma: f64,
        temp_left: f64,
        temp_right: f64,
    ) -> Self {
        RawConfig {
            n_aux: 0,
            omega_left,
            omega_right,
            omega_aux: Vec::new(),
            g_lr,
            g_la: Vec::new(),
            gamma,
            temp_left,
            temp_right,
            aux_bath: None,
        }
    }

    /// Replace the auxiliary atoms by `n` identical copies.
    pub fn with_uniform_aux(mut self, n: usize, omega_aux: f64, g_la: f64) -> Self {
        self.n_aux = n;
        self.omega_aux = vec![omega_aux; n];
        self.g_la = vec![g_la; n];
        self
    }
}

/// A validated parameter set. Every Bohr frequency of the model is strictly
/// positive, so all thermal rates are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct DiodeConfig {
    raw: RawConfig,
}

impl TryFrom<RawConfig> for DiodeConfig {
    type Error = ConfigError;

    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        validate_config(raw)
    }
}

impl From<DiodeConfig> for RawConfig {
    fn from(config: DiodeConfig) -> Self {
        config.raw
    }
}

fn check_finite(field: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NonFinite {
            field: field.to_string(),
            value,
        })
    }
}

/// Check every invariant of a parameter set.
pub fn validate_config(raw: RawConfig) -> Result<DiodeConfig, ConfigError> {
    let n = raw.n_aux;
    if n > MAX_AUX_ATOMS {
        return Err(ConfigError::TooManyAuxAtoms {
            n_aux: n,
            max: MAX_AUX_ATOMS,
        });
    }
    for (field, len) in [("omega_aux", raw.omega_aux.len()), ("g_la", raw.g_la.len())] {
        if len != n {
            return Err(ConfigError::LengthMismatch {
                field: field.to_string(),
                expected: n,
                found: len,
            });
        }
    }

    let scalars = [
        ("omega_left", raw.omega_left),
        ("omega_right", raw.omega_right),
        ("g_lr", raw.g_lr),
        ("gamma", raw.gamma),
        ("temp_left", raw.temp_left),
        ("temp_right", raw.temp_right),
    ];
    for (field, value) in scalars {
        check_finite(field, value)?;
    }
    for (a, (&w, &g)) in raw.omega_aux.iter().zip(&raw.g_la).enumerate() {
        check_finite(&format!("omega_aux[{}]", a + 1), w)?;
        check_finite(&format!("g_la[{}]", a + 1), g)?;
    }

    for (field, value) in [("temp_left", raw.temp_left), ("temp_right", raw.temp_right)] {
        if value <= 0.0 {
            return Err(ConfigError::NonPositiveTemperature {
                field: field.to_string(),
                value,
            });
        }
    }
    if raw.gamma <= 0.0 {
        return Err(ConfigError::NonPositiveRate {
            field: "gamma".to_string(),
            value: raw.gamma,
        });
    }
    for (field, value) in [("omega_left", raw.omega_left), ("omega_right", raw.omega_right)] {
        if value <= 0.0 {
            return Err(ConfigError::NonPositiveFrequency {
                field: field.to_string(),
                value,
            });
        }
    }
    for (a, &w) in raw.omega_aux.iter().enumerate() {
        if w <= 0.0 {
            return Err(ConfigError::NonPositiveFrequency {
                field: format!("omega_aux[{}]", a + 1),
                value: w,
            });
        }
    }

    if let Some(bath) = raw.aux_bath {
        if n != 1 {
            return Err(ConfigError::AuxBathUnsupported { n_aux: n });
        }
        check_finite("aux_bath.gamma_aux", bath.gamma_aux)?;
        check_finite("aux_bath.temp_aux", bath.temp_aux)?;
        if bath.temp_aux <= 0.0 {
            return Err(ConfigError::NonPositiveTemperature {
                field: "aux_bath.temp_aux".to_string(),
                value: bath.temp_aux,
            });
        }
        if bath.gamma_aux <= 0.0 {
            return Err(ConfigError::NonPositiveRate {
                field: "aux_bath.gamma_aux".to_string(),
                value: bath.gamma_aux,
            });
        }
    }

    let config = DiodeConfig { raw };
    let mut reservoirs = vec![Reservoir::Left, Reservoir::Right];
    if config.aux_bath().is_some() {
        reservoirs.push(Reservoir::Aux);
    }
    for reservoir in reservoirs {
        for (l, t) in transitions_unchecked(&config, reservoir).iter().enumerate() {
            if t.bohr_frequency <= 0.0 {
                return Err(ConfigError::NonPositiveBohrFrequency {
                    label: format!("{reservoir} l={}", l + 1),
                    value: t.bohr_frequency,
                });
            }
        }
    }
    Ok(config)
}

impl DiodeConfig {
    pub fn n_aux(&self) -> usize {
        self.raw.n_aux
    }
    pub fn omega_left(&self) -> f64 {
        self.raw.omega_left
    }
    pub fn omega_right(&self) -> f64 {
        self.raw.omega_right
    }
    pub fn omega_aux(&self) -> &[f64] {
        &self.raw.omega_aux
    }
    pub fn g_lr(&self) -> f64 {
        self.raw.g_lr
    }
    pub fn g_la(&self) -> &[f64] {
        &self.raw.g_la
    }
    pub fn gamma(&self) -> f64 {
        self.raw.gamma
    }
    pub fn temp_left(&self) -> f64 {
        self.raw.temp_left
    }
    pub fn temp_right(&self) -> f64 {
        self.raw.temp_right
    }
    pub fn aux_bath(&self) -> Option<AuxBath> {
        self.raw.aux_bath
    }
    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }
    pub fn layout(&self) -> Layout {
        Layout::new(self.raw.n_aux)
    }

    pub fn with_temperatures(&self, temp_left: f64, temp_right: f64) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        raw.temp_left = temp_left;
        raw.temp_right = temp_right;
        validate_config(raw)
    }

    /// Same device with the two bath temperatures exchanged.
    pub fn swapped_temperatures(&self) -> Self {
        let mut raw = self.raw.clone();
        std::mem::swap(&mut raw.temp_left, &mut raw.temp_right);
        DiodeConfig { raw }
    }

    pub fn with_omega_right(&self, omega_right: f64) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        raw.omega_right = omega_right;
        validate_config(raw)
    }

    pub fn with_aux_bath(&self, aux_bath: Option<AuxBath>) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        raw.aux_bath = aux_bath;
        validate_config(raw)
    }

    /// The bare two-atom junction: auxiliary atoms and their bath removed.
    pub fn without_aux(&self) -> Self {
        let mut raw = self.raw.clone();
        raw.n_aux = 0;
        raw.omega_aux.clear();
        raw.g_la.clear();
        raw.aux_bath = None;
        // Dropping couplings can only raise the smallest left Bohr frequency.
        DiodeConfig { raw }
    }

    /// Bohr frequency of the left atom with the right atom and the
    /// auxiliary atoms frozen in the given states.
    pub fn left_frequency(&self, right_excited: bool, aux: AuxConfig) -> f64 {
        let z_r = if right_excited { 1.0 } else { -1.0 };
        self.effective_left_frequency(aux) + 2.0 * self.raw.g_lr * z_r
    }

    /// `ω_L + Σ_a z_a 2 g_La` for a definite auxiliary configuration.
    pub fn effective_left_frequency(&self, aux: AuxConfig) -> f64 {
        debug_assert_eq!(aux.n_aux(), self.raw.n_aux);
        self.raw.omega_left
            + self
                .raw
                .g_la
                .iter()
                .enumerate()
                .map(|(a, g)| 2.0 * g * aux.z(a))
                .sum::<f64>()
    }

    /// Bohr frequency of the right atom, which only sees the left atom.
    pub fn right_frequency(&self, left_excited: bool) -> f64 {
        let z_l = if left_excited { 1.0 } else { -1.0 };
        self.raw.omega_right + 2.0 * self.raw.g_lr * z_l
    }

    /// Bohr frequency of auxiliary atom `atom` (0-based).
    pub fn aux_frequency(&self, atom: usize, left_excited: bool) -> f64 {
        let z_l = if left_excited { 1.0 } else { -1.0 };
        self.raw.omega_aux[atom] + 2.0 * self.raw.g_la[atom] * z_l
    }
}

/// Bit arithmetic for a system with `n_aux` auxiliary atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layout {
    n_aux: usize,
}

impl Layout {
    pub fn new(n_aux: usize) -> Self {
        Layout { n_aux }
    }
    pub fn n_aux(self) -> usize {
        self.n_aux
    }
    pub fn dim(self) -> usize {
        1 << (self.n_aux + 2)
    }
    pub fn subspace_count(self) -> usize {
        1 << self.n_aux
    }
    pub fn left_bit(self) -> usize {
        1 << (self.n_aux + 1)
    }
    pub fn right_bit(self) -> usize {
        1 << self.n_aux
    }
    /// Bit owned by auxiliary atom `atom` (0-based).
    pub fn aux_bit(self, atom: usize) -> usize {
        1 << (self.n_aux - 1 - atom)
    }
    pub fn aux_mask(self) -> usize {
        self.subspace_count() - 1
    }

    /// The auxiliary configuration of a basis state.
    pub fn aux_of(self, index: BasisIndex) -> AuxConfig {
        AuxConfig::from_bits(self.n_aux, index.zero_based() & self.aux_mask())
    }

    pub fn left_excited(self, index: BasisIndex) -> bool {
        index.zero_based() & self.left_bit() == 0
    }
    pub fn right_excited(self, index: BasisIndex) -> bool {
        index.zero_based() & self.right_bit() == 0
    }

    /// The four levels of subspace `m` (1-based) in the order
    /// `|e_L e_R⟩, |e_L g_R⟩, |g_L e_R⟩, |g_L g_R⟩`, i.e. indices
    /// `m, m+2^N, m+2^(N+1), m+2^(N+1)+2^N`.
    pub fn subspace_levels(self, m: usize) -> [BasisIndex; 4] {
        debug_assert!(m >= 1 && m <= self.subspace_count());
        let base = m - 1;
        let (r, l) = (self.right_bit(), self.left_bit());
        [base, base + r, base + l, base + l + r].map(BasisIndex::from_zero_based)
    }
}

/// 1-based index of a product basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisIndex(usize);

impl BasisIndex {
    pub fn new(one_based: usize) -> Option<Self> {
        (one_based >= 1).then_some(BasisIndex(one_based))
    }
    pub fn from_zero_based(i: usize) -> Self {
        BasisIndex(i + 1)
    }
    pub fn get(self) -> usize {
        self.0
    }
    pub fn zero_based(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A definite state of the auxiliary atoms. Atom 1 sits in the most
/// significant of the `n_aux` bits; bit value 0 means excited. The
/// subspace label is `m = bits + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AuxConfig {
    n_aux: usize,
    bits: usize,
}

impl AuxConfig {
    pub fn from_bits(n_aux: usize, bits: usize) -> Self {
        debug_assert!(bits < (1 << n_aux));
        AuxConfig { n_aux, bits }
    }
    pub fn from_subspace(n_aux: usize, m: usize) -> Self {
        Self::from_bits(n_aux, m - 1)
    }
    pub fn all_excited(n_aux: usize) -> Self {
        Self::from_bits(n_aux, 0)
    }
    pub fn all_ground(n_aux: usize) -> Self {
        Self::from_bits(n_aux, (1 << n_aux) - 1)
    }

    /// Parse a label such as `"eeg"` (atom 1 first).
    pub fn from_label(label: &str) -> Option<Self> {
        let n = label.len();
        let mut bits = 0;
        for (a, c) in label.chars().enumerate() {
            match c {
                'e' => {}
                'g' => bits |= 1 << (n - 1 - a),
                _ => return None,
            }
        }
        Some(AuxConfig { n_aux: n, bits })
    }

    pub fn n_aux(self) -> usize {
        self.n_aux
    }
    pub fn bits(self) -> usize {
        self.bits
    }
    /// 1-based subspace label `m`.
    pub fn subspace(self) -> usize {
        self.bits + 1
    }
    pub fn is_excited(self, atom: usize) -> bool {
        self.bits & (1 << (self.n_aux - 1 - atom)) == 0
    }
    /// Pauli-z eigenvalue of atom `atom` (0-based).
    pub fn z(self, atom: usize) -> f64 {
        if self.is_excited(atom) {
            1.0
        } else {
            -1.0
        }
    }
    pub fn excited_count(self) -> usize {
        self.n_aux - self.bits.count_ones() as usize
    }
    pub fn label(self) -> String {
        (0..self.n_aux)
            .map(|a| if self.is_excited(a) { 'e' } else { 'g' })
            .collect()
    }
    /// Every configuration of `n_aux` atoms in subspace order.
    pub fn all(n_aux: usize) -> impl Iterator<Item = AuxConfig> {
        (0..1usize << n_aux).map(move |bits| AuxConfig { n_aux, bits })
    }
}

/// Diagonal energies in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    energies: Vec<f64>,
}

impl Spectrum {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
    pub fn energy(&self, index: BasisIndex) -> f64 {
        self.energies[index.zero_based()]
    }
}

/// All `2^(N+2)` eigenvalues of the diagonal system Hamiltonian.
pub fn spectrum(config: &DiodeConfig) -> Spectrum {
    let layout = config.layout();
    let energies = (0..layout.dim())
        .map(|i| {
            let index = BasisIndex::from_zero_based(i);
            let z_l = if layout.left_excited(index) { 1.0 } else { -1.0 };
            let z_r = if layout.right_excited(index) { 1.0 } else { -1.0 };
            let aux = layout.aux_of(index);
            let mut e = 0.5 * config.omega_left() * z_l
                + 0.5 * config.omega_right() * z_r
                + config.g_lr() * z_l * z_r;
            for a in 0..config.n_aux() {
                let z_a = aux.z(a);
                e += 0.5 * config.omega_aux()[a] * z_a + config.g_la()[a] * z_l * z_a;
            }
            e
        })
        .collect();
    Spectrum { energies }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reservoir {
    Left,
    Right,
    Aux,
}

impl fmt::Display for Reservoir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Reservoir::Left => "left",
            Reservoir::Right => "right",
            Reservoir::Aux => "aux",
        };
        f.write_str(name)
    }
}

/// One secular eigenoperator: every `(upper, lower)` pair it lowers, all at
/// the same Bohr frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub reservoir: Reservoir,
    pub bohr_frequency: f64,
    pub pairs: Vec<(BasisIndex, BasisIndex)>,
}

/// Secular transitions driven by `reservoir`.
///
/// * `Left`: `2^(N+1)` transitions, one pair each, ordered by the upper index.
/// * `Right`: two transitions (left atom excited, then ground), `2^N` pairs each.
/// * `Aux`: only with an auxiliary bath; one transition per pair, ordered by
///   the upper index.
pub fn transitions(
    config: &DiodeConfig,
    reservoir: Reservoir,
) -> Result<Vec<Transition>, ConfigError> {
    if reservoir == Reservoir::Aux && config.aux_bath().is_none() {
        return Err(ConfigError::AuxBathUnsupported {
            n_aux: config.n_aux(),
        });
    }
    Ok(transitions_unchecked(config, reservoir))
}

fn transitions_unchecked(config: &DiodeConfig, reservoir: Reservoir) -> Vec<Transition> {
    let layout = config.layout();
    match reservoir {
        Reservoir::Left => (0..layout.left_bit())
            .map(|u| {
                let upper = BasisIndex::from_zero_based(u);
                let lower = BasisIndex::from_zero_based(u | layout.left_bit());
                Transition {
                    reservoir,
                    bohr_frequency: config
                        .left_frequency(layout.right_excited(upper), layout.aux_of(upper)),
                    pairs: vec![(upper, lower)],
                }
            })
            .collect(),
        Reservoir::Right => [true, false]
            .into_iter()
            .map(|left_excited| {
                let base = if left_excited { 0 } else { layout.left_bit() };
                let pairs = (base..base + layout.right_bit())
                    .map(|u| {
                        (
                            BasisIndex::from_zero_based(u),
                            BasisIndex::from_zero_based(u | layout.right_bit()),
                        )
                    })
                    .collect();
                Transition {
                    reservoir,
                    bohr_frequency: config.right_frequency(left_excited),
                    pairs,
                }
            })
            .collect(),
        Reservoir::Aux => {
            let mut out = Vec::new();
            for atom in 0..config.n_aux() {
                let bit = layout.aux_bit(atom);
                for u in (0..layout.dim()).filter(|u| u & bit == 0) {
                    let upper = BasisIndex::from_zero_based(u);
                    out.push(Transition {
                        reservoir,
                        bohr_frequency: config.aux_frequency(atom, layout.left_excited(upper)),
                        pairs: vec![(upper, BasisIndex::from_zero_based(u | bit))],
                    });
                }
            }
            out
        }
    }
}

/// Transitions of every reservoir the configuration couples to.
pub fn all_transitions(config: &DiodeConfig) -> Vec<Transition> {
    let mut out = transitions_unchecked(config, Reservoir::Left);
    out.extend(transitions_unchecked(config, Reservoir::Right));
    if config.aux_bath().is_some() {
        out.extend(transitions_unchecked(config, Reservoir::Aux));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig3() -> RawConfig {
        RawConfig::pair(5.0, 3.0, 1.0, 0.001, 2.0, 1.0).with_uniform_aux(1, 2.0, 0.5)
    }

    fn fig8() -> RawConfig {
        let mut raw = RawConfig::pair(4.0, 1.0, 0.1, 0.001, 0.8, 0.5).with_uniform_aux(1, 5.0, 0.1);
        raw.aux_bath = Some(AuxBath {
            gamma_aux: 1e-6,
            temp_aux: 0.8,
        });
        raw
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn fig3_parameters_validate() {
        let config = validate_config(fig3()).unwrap();
        assert_eq!(config.n_aux(), 1);
    }

    #[test]
    fn negative_left_bohr_frequency_is_rejected() {
        let raw = RawConfig::pair(2.0, 3.0, 1.0, 0.001, 1.0, 1.0).with_uniform_aux(1, 2.0, 0.5);
        match validate_config(raw) {
            Err(ConfigError::NonPositiveBohrFrequency { label, value }) => {
                assert!(label.starts_with("left"));
                assert_relative_eq!(value, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_temperature_is_rejected() {
        let mut raw = fig3();
        raw.temp_left = 0.0;
        assert!(matches!(
            validate_config(raw),
            Err(ConfigError::NonPositiveTemperature { .. })
        ));
    }

    #[test]
    fn other_validation_errors() {
        let mut raw = fig3();
        raw.g_la = vec![];
        assert!(matches!(validate_config(raw), Err(ConfigError::LengthMismatch { .. })));

        let mut raw = fig3();
        raw.gamma = 0.0;
        assert!(matches!(validate_config(raw), Err(ConfigError::NonPositiveRate { .. })));

        let mut raw = fig3().with_uniform_aux(2, 2.0, 0.1);
        raw.aux_bath = Some(AuxBath {
            gamma_aux: 1e-6,
            temp_aux: 1.0,
        });
        assert!(matches!(
            validate_config(raw),
            Err(ConfigError::AuxBathUnsupported { n_aux: 2 })
        ));

        let mut raw = fig3();
        raw.omega_right = f64::NAN;
        assert!(matches!(validate_config(raw), Err(ConfigError::NonFinite { .. })));

        // right atom: 0.3 - 2*0.2 < 0
        let raw = RawConfig::pair(5.0, 0.3, 0.2, 0.001, 1.0, 1.0);
        match validate_config(raw) {
            Err(ConfigError::NonPositiveBohrFrequency { label, .. }) => {
                assert!(label.starts_with("right"))
            }
            other => panic!("unexpected {other:?}"),
        }

        let raw = RawConfig::pair(5.0, 3.0, 0.2, 0.001, 1.0, 1.0).with_uniform_aux(11, 2.0, 0.01);
        assert!(matches!(validate_config(raw), Err(ConfigError::TooManyAuxAtoms { .. })));
    }

    #[test]
    fn fig8_first_energy() {
        let config = validate_config(fig8()).unwrap();
        let spec = spectrum(&config);
        assert_relative_eq!(spec.energies()[0], 5.2, max_relative = 1e-15);
    }

    #[test]
    fn energy_table_for_one_aux_atom() {
        let (wl, wr, w1, g, g1) = (4.0, 1.0, 5.0, 0.1, 0.1);
        let config = validate_config(fig8()).unwrap();
        let expected = [
            0.5 * (wl + wr + w1) + g + g1,
            0.5 * (wl + wr - w1) + g - g1,
            0.5 * (wl - wr + w1) - g + g1,
            0.5 * (wl - wr - w1) - g - g1,
            0.5 * (-wl + wr + w1) - g - g1,
            0.5 * (-wl + wr - w1) - g + g1,
            0.5 * (-wl - wr + w1) + g - g1,
            0.5 * (-wl - wr - w1) + g + g1,
        ];
        for (e, x) in spectrum(&config).energies().iter().zip(expected) {
            assert_relative_eq!(*e, x, epsilon = 1e-14);
        }
    }

    #[test]
    fn decoupled_identical_atoms() {
        let config = validate_config(RawConfig::pair(2.0, 2.0, 0.0, 0.01, 1.0, 1.0)).unwrap();
        assert_eq!(spectrum(&config).energies(), &[2.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn spectrum_is_traceless() {
        let raw = RawConfig::pair(4.0, 2.0, 0.1, 0.001, 1.0, 0.5).with_uniform_aux(3, 2.0, 0.05);
        let config = validate_config(raw).unwrap();
        let sum: f64 = spectrum(&config).energies().iter().sum();
        assert!(sum.abs() < 1e-13);
    }

    #[test]
    fn fig3_bohr_frequencies() {
        let config = validate_config(fig3()).unwrap();
        let left: Vec<f64> = transitions(&config, Reservoir::Left)
            .unwrap()
            .iter()
            .map(|t| t.bohr_frequency)
            .collect();
        assert_eq!(sorted(left), vec![2.0, 4.0, 6.0, 8.0]);

        let right = transitions(&config, Reservoir::Right).unwrap();
        assert_eq!(right.len(), 2);
        assert_eq!(right[0].bohr_frequency, 5.0);
        assert_eq!(right[1].bohr_frequency, 1.0);
        assert!(right.iter().all(|t| t.pairs.len() == 2));
    }

    #[test]
    fn bare_pair_frequencies() {
        let config = validate_config(RawConfig::pair(4.0, 3.0, 0.3, 0.01, 1.0, 1.0)).unwrap();
        let left: Vec<f64> = transitions(&config, Reservoir::Left)
            .unwrap()
            .iter()
            .map(|t| t.bohr_frequency)
            .collect();
        for (w, x) in left.iter().zip([4.6, 3.4]) {
            assert_relative_eq!(*w, x, max_relative = 1e-15);
        }
        let right: Vec<f64> = transitions(&config, Reservoir::Right)
            .unwrap()
            .iter()
            .map(|t| t.bohr_frequency)
            .collect();
        for (w, x) in right.iter().zip([3.6, 2.4]) {
            assert_relative_eq!(*w, x, max_relative = 1e-15);
        }
    }

    #[test]
    fn aux_transitions_follow_energy_differences() {
        let config = validate_config(fig8()).unwrap();
        let aux = transitions(&config, Reservoir::Aux).unwrap();
        assert_eq!(aux.len(), 4);
        let spec = spectrum(&config);
        let expected_pairs = [(1, 2), (3, 4), (5, 6), (7, 8)];
        for (t, (u, l)) in aux.iter().zip(expected_pairs) {
            assert_eq!(t.pairs, vec![(BasisIndex(u), BasisIndex(l))]);
            let diff = spec.energy(BasisIndex(u)) - spec.energy(BasisIndex(l));
            assert_relative_eq!(t.bohr_frequency, diff, max_relative = 1e-12);
        }
        // E_1 - E_2 = ω_1 + 2 g_L1, not ω_1 + 2 g_LR + 2 g_L1.
        assert_relative_eq!(aux[0].bohr_frequency, 5.2, max_relative = 1e-15);

        let no_bath = validate_config(fig3()).unwrap();
        assert!(transitions(&no_bath, Reservoir::Aux).is_err());
    }

    #[test]
    fn subspace_levels_match_index_arithmetic() {
        let layout = Layout::new(2);
        assert_eq!(
            layout.subspace_levels(3).map(BasisIndex::get),
            [3, 3 + 4, 3 + 8, 3 + 12]
        );
        let aux = AuxConfig::from_label("ge").unwrap();
        assert_eq!(aux.subspace(), 3);
        assert_eq!(aux.label(), "ge");
        assert_eq!(aux.excited_count(), 1);
    }

    #[test]
    fn serde_round_trip_validates() {
        let config = validate_config(fig8()).unwrap();
        let text = toml::to_string(&config).unwrap();
        let back: DiodeConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, config);

        let mut raw = fig3();
        raw.temp_right = -1.0;
        let text = toml::to_string(&raw).unwrap();
        assert!(toml::from_str::<DiodeConfig>(&text).is_err());
    }
}
