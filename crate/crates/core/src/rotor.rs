//! Problem data model: pulse parameters, the truncated `m = 0` free-rotor
//! basis, wavepackets over that basis and the operator matrices `J^2`,
//! `cos(theta)`, `cos^2(theta)` and the pulse Hamiltonian.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Normalization tolerance for a [`Wavepacket`].
pub const NORM_TOL: f64 = 1e-10;

/// Unit helpers for [`dimensionless_from_physical`].
pub mod units {
    /// hbar in cm^-1 ns.
    pub const HBAR_CM1_NS: f64 = 0.005308837458876145;
    /// Interaction energy of a 1 D dipole in a 1 kV/cm field, in cm^-1.
    pub const DEBYE_KV_PER_CM_IN_CM1: f64 = 0.016792005379744103;
}

/// Dimensionless rectangular pulse. Only `P` and `sigma` are stored;
/// `eta = P / sigma` is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    strength: f64,
    duration: f64,
}

impl PulseSpec {
    pub fn new(strength: f64, duration: f64) -> Result<Self> {
        if !strength.is_finite() || strength < 0.0 {
            return Err(Error::domain(format!("pulse strength P must be finite and >= 0, got {strength}")));
        }
        if !duration.is_finite() || duration <= 0.0 {
            return Err(Error::domain(format!("pulse duration sigma must be finite and > 0, got {duration}")));
        }
        Ok(Self { strength, duration })
    }

    /// Pulse with coupling `eta` held for `sigma`, i.e. `P = eta * sigma`.
    pub fn from_eta(eta: f64, duration: f64) -> Result<Self> {
        Self::new(eta * duration, duration)
    }

    /// Pulse strength `P`.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// Reduced duration `sigma = B s / hbar`.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Orienting parameter `eta = P / sigma`.
    pub fn eta(&self) -> f64 {
        self.strength / self.duration
    }
}

/// Physical pulse and rotor parameters in a caller-chosen consistent unit
/// system: `dipole * field` and `rot_const` are energies in the same unit,
/// `duration` is a time and `hbar` is in (that energy unit) x (that time unit).
///
/// With `rot_const` in cm^-1 and `duration` in ns, use
/// [`units::HBAR_CM1_NS`]; a dipole in debye times a field in kV/cm is
/// converted to cm^-1 by [`units::DEBYE_KV_PER_CM_IN_CM1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPulse {
    pub dipole: f64,
    pub field: f64,
    pub rot_const: f64,
    pub duration: f64,
    pub hbar: f64,
}

/// `sigma = B s / hbar`, `eta = mu eps / B`, `P = mu eps s / hbar`.
///
/// A zero dipole or zero field is accepted and gives a field-free pulse.
pub fn dimensionless_from_physical(phys: &PhysicalPulse) -> Result<PulseSpec> {
    let named = [
        ("dipole", phys.dipole, false),
        ("field", phys.field, false),
        ("rot_const", phys.rot_const, true),
        ("duration", phys.duration, true),
        ("hbar", phys.hbar, true),
    ];
    for (name, value, strict) in named {
        let bad = !value.is_finite() || value < 0.0 || (strict && value == 0.0);
        if bad {
            let req = if strict { "> 0" } else { ">= 0" };
            return Err(Error::domain(format!("{name} must be finite and {req}, got {value}")));
        }
    }
    let sigma = phys.rot_const * phys.duration / phys.hbar;
    let eta = phys.dipole * phys.field / phys.rot_const;
    PulseSpec::new(eta * sigma, sigma)
}

/// Truncated free-rotor basis `{|J, 0> : 0 <= J <= j_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotorBasis {
    j_max: usize,
}

impl RotorBasis {
    pub fn new(j_max: usize) -> Result<Self> {
        if j_max < 1 {
            return Err(Error::domain("basis needs j_max >= 1"));
        }
        Ok(Self { j_max })
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn dim(&self) -> usize {
        self.j_max + 1
    }

    /// The same basis extended by `extra` levels.
    pub fn padded(&self, extra: usize) -> Self {
        Self { j_max: self.j_max + extra }
    }

    pub fn contains(&self, j: usize) -> bool {
        j <= self.j_max
    }
}

/// Expansion coefficients `C_J` of a state over a [`RotorBasis`], tagged
/// with the initial level `J0` it evolved from.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavepacket {
    basis: RotorBasis,
    coefficients: Vec<C64>,
    initial_state: usize,
}

impl Wavepacket {
    /// Validated constructor; coefficients must be normalized to [`NORM_TOL`].
    pub fn new(basis: RotorBasis, coefficients: Vec<C64>, initial_state: usize) -> Result<Self> {
        if coefficients.len() != basis.dim() {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                basis.dim(),
                coefficients.len()
            )));
        }
        if !basis.contains(initial_state) {
            return Err(Error::domain(format!(
                "initial state J0 = {initial_state} outside basis with j_max = {}",
                basis.j_max()
            )));
        }
        let norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("wavepacket norm {norm} differs from 1")));
        }
        Ok(Self { basis, coefficients, initial_state })
    }

    /// The free-rotor eigenstate `|J0, 0>`.
    pub fn basis_state(basis: RotorBasis, j0: usize) -> Result<Self> {
        if !basis.contains(j0) {
            return Err(Error::domain(format!(
                "initial state J0 = {j0} outside basis with j_max = {}",
                basis.j_max()
            )));
        }
        let mut coefficients = vec![C64::new(0.0, 0.0); basis.dim()];
        coefficients[j0] = C64::new(1.0, 0.0);
        Ok(Self { basis, coefficients, initial_state: j0 })
    }

    /// Propagation output; population lost to truncation is reported by the
    /// caller rather than rejected here.
    pub(crate) fn from_propagation(basis: RotorBasis, coefficients: Vec<C64>, initial_state: usize) -> Self {
        debug_assert_eq!(coefficients.len(), basis.dim());
        Self { basis, coefficients, initial_state }
    }

    pub fn basis(&self) -> RotorBasis {
        self.basis
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Coefficient `C_J`, zero outside the basis.
    pub fn coefficient(&self, j: usize) -> C64 {
        self.coefficients.get(j).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    AngularMomentumSquared,
    CosTheta,
    Cos2Theta,
    Hamiltonian,
}

impl OperatorKind {
    /// Half-bandwidth of the matrix in the `m = 0` basis.
    pub fn bandwidth(self) -> usize {
        match self {
            OperatorKind::AngularMomentumSquared => 0,
            OperatorKind::CosTheta | OperatorKind::Hamiltonian => 1,
            OperatorKind::Cos2Theta => 2,
        }
    }
}

/// Real symmetric banded operator stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    basis: RotorBasis,
    kind: OperatorKind,
    entries: DMatrix<f64>,
}

impl OperatorMatrix {
    fn from_entries(basis: RotorBasis, kind: OperatorKind, entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), basis.dim());
        debug_assert!(entries == entries.transpose());
        Self { basis, kind, entries }
    }

    pub fn basis(&self) -> RotorBasis {
        self.basis
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Main diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)]).collect()
    }

    /// The `offset`-th superdiagonal, `(i, i + offset)`.
    pub fn superdiagonal(&self, offset: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n.saturating_sub(offset)).map(|i| self.entries[(i, i + offset)]).collect()
    }

    pub(crate) fn require(&self, kind: OperatorKind, dim: usize) -> Result<()> {
        if self.kind != kind {
            return Err(Error::WrongOperator { expected: kind, found: self.kind });
        }
        if self.dim() != dim {
            return Err(Error::BasisMismatch { operator: self.dim(), wavepacket: dim });
        }
        Ok(())
    }
}

/// `<J, 0| cos(theta) |J + 1, 0> = (J + 1) / sqrt((2J + 3)(2J + 1))`.
pub fn cos_element(j: usize) -> f64 {
    let j = j as f64;
    ((j + 1.0) * (j + 1.0) / ((2.0 * j + 3.0) * (2.0 * j + 1.0))).sqrt()
}

/// Diagonal `J(J + 1)`.
pub fn build_j2_matrix(basis: RotorBasis) -> OperatorMatrix {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = (j * (j + 1)) as f64;
    }
    OperatorMatrix::from_entries(basis, OperatorKind::AngularMomentumSquared, m)
}

/// Tridiagonal `cos(theta)` with zero diagonal.
pub fn build_cos_matrix(basis: RotorBasis) -> OperatorMatrix {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        let c = cos_element(j);
        m[(j, j + 1)] = c;
        m[(j + 1, j)] = c;
    }
    OperatorMatrix::from_entries(basis, OperatorKind::CosTheta, m)
}

/// Pentadiagonal `cos^2(theta)`, obtained by squaring `cos(theta)` on a basis
/// one level larger and truncating, so the last diagonal entry keeps its
/// coupling to `j_max + 1`.
pub fn build_cos2_matrix(basis: RotorBasis) -> OperatorMatrix {
    let n = basis.dim();
    let cos = build_cos_matrix(basis.padded(1));
    let full = &cos.entries * &cos.entries;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n.min(i + 3) {
            let v = full[(i, j)];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    OperatorMatrix::from_entries(basis, OperatorKind::Cos2Theta, m)
}

/// `sigma J^2 - P cos(theta)`, the generator of the rescaled time evolution
/// `i dC/dtau = H C` for `tau` in `[0, 1]`.
pub fn build_hamiltonian(basis: RotorBasis, pulse: &PulseSpec) -> OperatorMatrix {
    let n = basis.dim();
    let sigma = pulse.duration();
    let p = pulse.strength();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = sigma * (j * (j + 1)) as f64;
    }
    for j in 0..n - 1 {
        let v = -p * cos_element(j);
        m[(j, j + 1)] = v;
        m[(j + 1, j)] = v;
    }
    OperatorMatrix::from_entries(basis, OperatorKind::Hamiltonian, m)
}
