//! Post-pulse expectation values.
//!
//! Orientation and alignment take prebuilt operator matrices so that the
//! operator and the wavepacket cannot silently disagree on the basis size.

use serde::{Deserialize, Serialize};

use crate::rotor::{build_cos2_matrix, build_cos_matrix, OperatorKind, OperatorMatrix, Wavepacket};
use crate::{Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    /// `<J^2>` in units of `B`.
    pub kinetic_energy: f64,
    /// `<cos(theta)>`.
    pub orientation: f64,
    /// `<cos^2(theta)>`.
    pub alignment: f64,
    pub populations: Vec<f64>,
}

impl ObservableSet {
    /// Computes everything, building the `cos` and `cos^2` matrices for the
    /// wavepacket's own basis.
    pub fn of(psi: &Wavepacket) -> Self {
        let basis = psi.basis();
        let cos = build_cos_matrix(basis);
        let cos2 = build_cos2_matrix(basis);
        Self {
            kinetic_energy: kinetic_energy(psi),
            // matrices were built on the wavepacket's basis
            orientation: orientation(psi, &cos).expect("matching basis"),
            alignment: alignment(psi, &cos2).expect("matching basis"),
            populations: populations(psi),
        }
    }
}

/// `sum_J J(J + 1) |C_J|^2`.
pub fn kinetic_energy(psi: &Wavepacket) -> f64 {
    psi.coefficients()
        .iter()
        .enumerate()
        .map(|(j, c)| (j * (j + 1)) as f64 * c.norm_sqr())
        .sum()
}

/// `2 Re sum_J C_J^* C_{J+1} <J|cos|J+1>`.
pub fn orientation(psi: &Wavepacket, cos_mat: &OperatorMatrix) -> Result<f64> {
    let c = psi.coefficients();
    cos_mat.require(OperatorKind::CosTheta, c.len())?;
    let sum: f64 = c
        .windows(2)
        .enumerate()
        .map(|(j, w)| (w[0].conj() * w[1]).re * cos_mat.get(j, j + 1))
        .sum();
    Ok(2.0 * sum)
}

/// `sum_J |C_J|^2 <J|cos^2|J> + 2 Re sum_J C_J^* C_{J+2} <J|cos^2|J+2>`.
pub fn alignment(psi: &Wavepacket, cos2_mat: &OperatorMatrix) -> Result<f64> {
    let c = psi.coefficients();
    cos2_mat.require(OperatorKind::Cos2Theta, c.len())?;
    let diag: f64 = c.iter().enumerate().map(|(j, z)| z.norm_sqr() * cos2_mat.get(j, j)).sum();
    let off: f64 = c
        .windows(3)
        .enumerate()
        .map(|(j, w)| (w[0].conj() * w[2]).re * cos2_mat.get(j, j + 2))
        .sum();
    Ok(diag + 2.0 * off)
}

/// `|C_J|^2` per level.
pub fn populations(psi: &Wavepacket) -> Vec<f64> {
    psi.coefficients().iter().map(|c| c.norm_sqr()).collect()
}

/// `|C_J^* C_{J + delta}|` for every `J` with `J + delta` inside the basis.
pub fn coherence_products(psi: &Wavepacket, delta: usize) -> Vec<f64> {
    let c = psi.coefficients();
    if delta == 0 {
        return c.iter().map(|z| z.norm_sqr()).collect();
    }
    c.iter().zip(c.iter().skip(delta)).map(|(a, b)| (a.conj() * b).norm()).collect()
}

/// `<psi| M |psi>` for any real symmetric operator on the wavepacket's basis.
pub fn expectation(psi: &Wavepacket, op: &OperatorMatrix) -> Result<f64> {
    let c = psi.coefficients();
    if op.dim() != c.len() {
        return Err(crate::Error::BasisMismatch { operator: op.dim(), wavepacket: c.len() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for (i, ci) in c.iter().enumerate() {
        for (j, cj) in c.iter().enumerate() {
            acc += ci.conj() * cj * op.get(i, j);
        }
    }
    Ok(acc.re)
}

/// Legendre polynomials `P_0(x) .. P_n(x)` by upward recurrence.
fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for l in 1..n {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * x * p[l] - lf * p[l - 1]) / (lf + 1.0);
        p.push(next);
    }
    p
}

/// Angular probability density `|sum_J C_J Y_J0(theta)|^2` sampled at the
/// given polar angles (radians, measured from the field axis).
pub fn polar_density(psi: &Wavepacket, thetas: &[f64]) -> Vec<f64> {
    let c = psi.coefficients();
    let n = c.len() - 1;
    let norms: Vec<f64> = (0..=n)
        .map(|j| ((2 * j + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt())
        .collect();
    thetas
        .iter()
        .map(|&t| {
            let p = legendre_all(n, t.cos());
            let amp: C64 = c.iter().zip(&p).zip(&norms).map(|((cj, pj), nj)| cj * (pj * nj)).sum();
            amp.norm_sqr()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::delta_kick;
    use crate::rotor::{build_j2_matrix, RotorBasis};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn basis(j_max: usize) -> RotorBasis {
        RotorBasis::new(j_max).unwrap()
    }

    fn packet(c: Vec<C64>) -> Wavepacket {
        let b = basis(c.len() - 1);
        Wavepacket::new(b, c, 0).unwrap()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn pure_states() {
        let b = basis(5);
        let cos = build_cos_matrix(b);
        let cos2 = build_cos2_matrix(b);
        let ground = Wavepacket::basis_state(b, 0).unwrap();
        assert_eq!(kinetic_energy(&ground), 0.0);
        assert!((alignment(&ground, &cos2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let one = Wavepacket::basis_state(b, 1).unwrap();
        assert!((alignment(&one, &cos2).unwrap() - 0.6).abs() < 1e-15);
        let two = Wavepacket::basis_state(b, 2).unwrap();
        assert_eq!(kinetic_energy(&two), 6.0);
        for j in 0..=5 {
            let w = Wavepacket::basis_state(b, j).unwrap();
            assert_eq!(orientation(&w, &cos).unwrap(), 0.0);
            let pops = populations(&w);
            assert_eq!(pops.iter().filter(|&&p| p == 1.0).count(), 1);
            assert_eq!(pops[j], 1.0);
            assert!(coherence_products(&w, 1).iter().all(|&x| x == 0.0));
            assert!(coherence_products(&w, 2).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn superposition_orientation() {
        let psi = packet(vec![re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2), re(0.0)]);
        let o = orientation(&psi, &build_cos_matrix(psi.basis())).unwrap();
        assert!((o - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coherence_delta_two() {
        let psi = packet(vec![re(FRAC_1_SQRT_2), re(0.0), re(FRAC_1_SQRT_2), re(0.0)]);
        let c = coherence_products(&psi, 2);
        assert_eq!(c.len(), 2);
        assert!((c[0] - 0.5).abs() < 1e-15);
        assert_eq!(c[1], 0.0);
    }

    #[test]
    fn basis_mismatch() {
        let psi = Wavepacket::basis_state(basis(3), 0).unwrap();
        assert!(orientation(&psi, &build_cos_matrix(basis(4))).is_err());
        assert!(alignment(&psi, &build_cos2_matrix(basis(2))).is_err());
        assert!(orientation(&psi, &build_cos2_matrix(basis(3))).is_err());
        assert!(alignment(&psi, &build_cos_matrix(basis(3))).is_err());
    }

    #[test]
    fn kicked_ground_state() {
        let psi = delta_kick(1.5, 0, basis(24)).unwrap();
        assert!((kinetic_energy(&psi) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn polar_density_normalized() {
        let psi = delta_kick(1.5, 1, basis(16)).unwrap();
        // integrate 2 pi sin(theta) |psi|^2 with the midpoint rule
        let n = 4000;
        let h = PI / n as f64;
        let thetas: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
        let dens = polar_density(&psi, &thetas);
        let total: f64 = thetas.iter().zip(&dens).map(|(t, d)| 2.0 * PI * t.sin() * d * h).sum();
        assert!((total - psi.norm_sqr()).abs() < 1e-6);
        // ground state is isotropic
        let g = Wavepacket::basis_state(basis(3), 0).unwrap();
        for d in polar_density(&g, &[0.1, 1.0, 2.5]) {
            assert!((d - 1.0 / (4.0 * PI)).abs() < 1e-15);
        }
    }

    fn arb_packet() -> impl Strategy<Value = Wavepacket> {
        (1usize..12).prop_flat_map(|j_max| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), j_max + 1).prop_filter_map("nonzero", move |v| {
                let raw: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
                let norm: f64 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                (norm > 1e-3).then(|| packet(raw.into_iter().map(|c| c / norm).collect()))
            })
        })
    }

    proptest! {
        #[test]
        fn cauchy_schwarz_bounds(psi in arb_packet()) {
            let b = psi.basis();
            let o = orientation(&psi, &build_cos_matrix(b)).unwrap();
            let a = alignment(&psi, &build_cos2_matrix(b)).unwrap();
            prop_assert!(o * o <= a + 1e-12);
            prop_assert!(a <= 1.0 + 1e-12);
            prop_assert!(a >= -1e-12);
            prop_assert!(o.abs() <= 1.0 + 1e-12);
            prop_assert!(kinetic_energy(&psi) >= 0.0);
            prop_assert!((populations(&psi).iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn banded_sums_match_quadratic_forms(psi in arb_packet()) {
            let b = psi.basis();
            let ke = expectation(&psi, &build_j2_matrix(b)).unwrap();
            prop_assert!((kinetic_energy(&psi) - ke).abs() < 1e-12);
            let cos = build_cos_matrix(b);
            prop_assert!((orientation(&psi, &cos).unwrap() - expectation(&psi, &cos).unwrap()).abs() < 1e-12);
            let cos2 = build_cos2_matrix(b);
            prop_assert!((alignment(&psi, &cos2).unwrap() - expectation(&psi, &cos2).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn phase_invariance(psi in arb_packet(), global in 0.0f64..6.3, phases in prop::collection::vec(0.0f64..6.3, 13)) {
            let b = psi.basis();
            let cos = build_cos_matrix(b);
            let rotated: Vec<C64> = psi.coefficients().iter().map(|c| c * C64::from_polar(1.0, global)).collect();
            let g = packet(rotated);
            prop_assert!((orientation(&psi, &cos).unwrap() - orientation(&g, &cos).unwrap()).abs() < 1e-12);
            let scrambled: Vec<C64> = psi.coefficients().iter().zip(&phases).map(|(c, p)| c * C64::from_polar(1.0, *p)).collect();
            let s = packet(scrambled);
            for (x, y) in populations(&psi).iter().zip(populations(&s)) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }
    }
}
