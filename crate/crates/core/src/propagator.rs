//! Time evolution across the rectangular pulse.
//!
//! Inside the pulse the rescaled Hamiltonian `sigma J^2 - P cos(theta)` is
//! constant, so the exact propagator over `tau` in `[0, 1]` is
//! `U exp(-i Lambda) U^T` with `(U, Lambda)` its eigendecomposition. That is
//! the production path ([`propagate_spectral`]). [`propagate_ode`] integrates
//! the same linear system with classical RK4 and exists to cross-check it.
//! [`delta_kick`] gives the `sigma -> 0` limit `exp(i P cos(theta))`, computed
//! by a Taylor scaling-and-squaring matrix exponential that shares no code with
//! the spectral path.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::rotor::{build_cos_matrix, build_hamiltonian, PulseSpec, RotorBasis, Wavepacket};
use crate::{Error, Result, C64};

pub const DEFAULT_ODE_STEPS: usize = 100_000;
pub const MIN_ODE_STEPS: usize = 1_000;
pub const DEFAULT_LEAK_TOL: f64 = 1e-10;
pub const DEFAULT_J_MAX_CAP: usize = 400;
/// RK4 runs whose norm drifts further than this are flagged.
pub const ODE_NORM_WARN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Spectral,
    OdeRk4,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Warning(String),
}

#[derive(Debug, Clone)]
pub struct PropagationReport {
    pub final_state: Wavepacket,
    pub method: Method,
    /// `|1 - sum |C_J|^2|`.
    pub norm_drift: f64,
    /// Population in the two highest basis levels.
    pub basis_leak: f64,
    pub status: Status,
}

impl PropagationReport {
    fn new(final_state: Wavepacket, method: Method, status: Status) -> Self {
        let norm_drift = (1.0 - final_state.norm_sqr()).abs();
        let basis_leak = top_leak(final_state.coefficients());
        Self { final_state, method, norm_drift, basis_leak, status }
    }
}

fn top_leak(c: &[C64]) -> f64 {
    c.iter().rev().take(2).map(|z| z.norm_sqr()).sum()
}

fn check_initial(j0: usize, basis: RotorBasis) -> Result<()> {
    if !basis.contains(j0) {
        return Err(Error::domain(format!(
            "initial state J0 = {j0} outside basis with j_max = {}",
            basis.j_max()
        )));
    }
    Ok(())
}

fn eigen(pulse: &PulseSpec, basis: RotorBasis) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let h = build_hamiltonian(basis, pulse).entries().clone();
    SymmetricEigen::try_new(h, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))
}

/// Exact evolution of `|J0, 0>` to the end of the pulse.
pub fn propagate_spectral(pulse: &PulseSpec, j0: usize, basis: RotorBasis) -> Result<PropagationReport> {
    check_initial(j0, basis)?;
    let eig = eigen(pulse, basis)?;
    let n = basis.dim();
    let u = &eig.eigenvectors;
    let mut c = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let w = C64::from_polar(u[(j0, k)], -eig.eigenvalues[k]);
        for (j, cj) in c.iter_mut().enumerate() {
            *cj += w * u[(j, k)];
        }
    }
    let state = Wavepacket::from_propagation(basis, c, j0);
    Ok(PropagationReport::new(state, Method::Spectral, Status::Ok))
}

/// Full evolution matrix `U exp(-i Lambda) U^T`; column `J0` holds the
/// coefficients `C^{J0}_J`.
pub fn evolution_matrix(pulse: &PulseSpec, basis: RotorBasis) -> Result<DMatrix<C64>> {
    let eig = eigen(pulse, basis)?;
    let n = basis.dim();
    let u = &eig.eigenvectors;
    let phases: Vec<C64> = eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l)).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| phases[k] * (u[(i, k)] * u[(j, k)])).sum()
    }))
}

/// Fixed-step RK4 integration of `dC/dtau = -i H C` from `tau = 0` to `1`.
/// No renormalization is applied, so `norm_drift` measures the integration
/// error.
pub fn propagate_ode(pulse: &PulseSpec, j0: usize, basis: RotorBasis, steps: usize) -> Result<PropagationReport> {
    check_initial(j0, basis)?;
    if steps < MIN_ODE_STEPS {
        return Err(Error::domain(format!("RK4 needs at least {MIN_ODE_STEPS} steps, got {steps}")));
    }
    let h = build_hamiltonian(basis, pulse);
    let diag = h.diagonal();
    let off = h.superdiagonal(1);
    let n = basis.dim();

    // f(C) = -i H C for tridiagonal H
    let deriv = |c: &[C64], out: &mut [C64]| {
        for j in 0..n {
            let mut acc = c[j] * diag[j];
            if j > 0 {
                acc += c[j - 1] * off[j - 1];
            }
            if j + 1 < n {
                acc += c[j + 1] * off[j];
            }
            out[j] = C64::new(acc.im, -acc.re);
        }
    };

    let dt = 1.0 / steps as f64;
    let mut c = vec![C64::new(0.0, 0.0); n];
    c[j0] = C64::new(1.0, 0.0);
    let mut k1 = vec![C64::default(); n];
    let mut k2 = vec![C64::default(); n];
    let mut k3 = vec![C64::default(); n];
    let mut k4 = vec![C64::default(); n];
    let mut tmp = vec![C64::default(); n];
    for _ in 0..steps {
        deriv(&c, &mut k1);
        for j in 0..n {
            tmp[j] = c[j] + k1[j] * (0.5 * dt);
        }
        deriv(&tmp, &mut k2);
        for j in 0..n {
            tmp[j] = c[j] + k2[j] * (0.5 * dt);
        }
        deriv(&tmp, &mut k3);
        for j in 0..n {
            tmp[j] = c[j] + k3[j] * dt;
        }
        deriv(&tmp, &mut k4);
        for j in 0..n {
            c[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (dt / 6.0);
        }
    }

    let state = Wavepacket::from_propagation(basis, c, j0);
    let drift = (1.0 - state.norm_sqr()).abs();
    if !drift.is_finite() {
        return Err(Error::Numeric(format!("RK4 diverged with {steps} steps; the step is beyond the stability limit")));
    }
    let status = if drift > ODE_NORM_WARN {
        Status::Warning(format!("norm drift {drift:.3e} with {steps} steps; increase the step count"))
    } else {
        Status::Ok
    };
    Ok(PropagationReport::new(state, Method::OdeRk4, status))
}

/// Number of extra levels used when exponentiating the kick operator.
pub fn kick_padding(p: f64) -> usize {
    8usize.max((2.0 * p).ceil() as usize)
}

/// Impulsive limit: `exp(i P cos(theta)) |J0, 0>`, exponentiated on the basis
/// padded by [`kick_padding`] levels and truncated back to `basis`.
/// Population that ends up above `j_max` is discarded, not renormalized.
pub fn delta_kick(p: f64, j0: usize, basis: RotorBasis) -> Result<Wavepacket> {
    if !p.is_finite() || p < 0.0 {
        return Err(Error::domain(format!("kick strength must be finite and >= 0, got {p}")));
    }
    check_initial(j0, basis)?;
    let padded = basis.padded(kick_padding(p));
    let cos = build_cos_matrix(padded);
    let a = cos.entries().map(|x| C64::new(0.0, p * x));
    let u = expm(&a);
    let c = (0..basis.dim()).map(|j| u[(j, j0)]).collect();
    Ok(Wavepacket::from_propagation(basis, c, j0))
}

/// Complex matrix exponential by scaling and squaring with a truncated
/// Taylor series.
pub(crate) fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.5 {
        squarings = (norm1 / 0.5).log2().ceil() as u32;
    }
    let scaled = a / C64::new(2f64.powi(squarings as i32), 0.0);

    // ||scaled|| <= 0.5, so 20 terms leave a remainder below 1e-22
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Smallest basis (from `j_max = J0 + 4` in steps of 4) whose spectral
/// propagation leaves less than `leak_tol` in the top two levels.
pub fn converge_basis(pulse: &PulseSpec, j0: usize, leak_tol: f64) -> Result<RotorBasis> {
    converge_basis_with_cap(pulse, j0, leak_tol, DEFAULT_J_MAX_CAP)
}

pub fn converge_basis_with_cap(pulse: &PulseSpec, j0: usize, leak_tol: f64, cap: usize) -> Result<RotorBasis> {
    converge_and_propagate(pulse, j0, leak_tol, cap).map(|r| r.final_state.basis())
}

/// [`converge_basis_with_cap`] that also returns the converged propagation.
pub fn converge_and_propagate(pulse: &PulseSpec, j0: usize, leak_tol: f64, cap: usize) -> Result<PropagationReport> {
    if !(leak_tol > 0.0 && leak_tol < 1.0) {
        return Err(Error::domain(format!("leak tolerance must lie in (0, 1), got {leak_tol}")));
    }
    let mut j_max = j0 + 4;
    let mut last = (j_max, f64::NAN);
    while j_max <= cap {
        let report = propagate_spectral(pulse, j0, RotorBasis::new(j_max)?)?;
        if report.basis_leak < leak_tol {
            return Ok(report);
        }
        last = (j_max, report.basis_leak);
        j_max += 4;
    }
    Err(Error::NonConvergence { cap, last_j_max: last.0, leak: last.1 })
}
