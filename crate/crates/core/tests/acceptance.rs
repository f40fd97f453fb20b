//! Reproduction suite: eleven end-to-end checks, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the full table is always
//! printed; the process exits non-zero if any check fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use pulsed_rotor::analytic::{coefficient_c1_of_0, zero_locus, zero_loci};
use pulsed_rotor::observables::ObservableSet;
use pulsed_rotor::propagator::{
    converge_and_propagate, converge_basis, delta_kick, propagate_ode, propagate_spectral, PropagationReport,
};
use pulsed_rotor::rotor::PulseSpec;
use pulsed_rotor::sweep::{nearest_parabola, run_sweep, uniform_axis, BasisPolicy, SweepGrid, SweepOptions, SweepResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::spherical_bessel;

const LEAK_TOL: f64 = 1e-10;
const CAP: usize = 400;

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn auto() -> BasisPolicy {
    BasisPolicy::Auto { leak_tol: LEAK_TOL, cap: CAP }
}

fn run(p: f64, sigma: f64, j0: usize) -> PropagationReport {
    let pulse = PulseSpec::new(p, sigma).expect("valid pulse");
    converge_and_propagate(&pulse, j0, LEAK_TOL, CAP).expect("converged propagation")
}

fn fmt(xs: &[f64]) -> String {
    let v: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", v.join(", "))
}

/// `<J,0|cos^2|J,0>`.
fn diagonal_alignment(j: usize) -> f64 {
    let j = j as f64;
    (2.0 * j * j + 2.0 * j - 1.0) / ((2.0 * j - 1.0) * (2.0 * j + 3.0))
}

fn drops(result: &SweepResult, p: f64) -> Vec<f64> {
    result.drop_loci.iter().filter(|d| d.p == p).map(|d| d.sigma).collect()
}

fn c1_drop_positions(reference: &SweepResult) -> Line {
    let found = drops(reference, 1.5);
    let expected = [3.044, 6.234, 9.393];
    let pass = found.len() == 3 && found.iter().zip(expected).all(|(a, b)| (a - b).abs() <= 0.01);
    Line { id: 1, name: "drop positions P=1.5", pass, detail: format!("found {} expected {} +- 0.01", fmt(&found), fmt(&expected)) }
}

fn c2_analytic_loci() -> Line {
    let a: Vec<f64> = zero_loci(0, 1.5, 3).unwrap().iter().map(|l| l.sigma_exact).collect();
    let b: Vec<f64> = zero_loci(1, 1.5, 4).unwrap().iter().map(|l| l.sigma_exact).collect();
    let ea = [3.022, 6.224, 9.384];
    let eb = [1.523, 3.113, 4.693, 6.269];
    let worst = a.iter().zip(ea).chain(b.iter().zip(eb)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let pass = a.len() == 3 && b.len() == 4 && worst <= 0.001;
    Line {
        id: 2,
        name: "analytic zero loci",
        pass,
        detail: format!("J0=0 {} J0=1 {}, max |d| {worst:.4} (tol 0.001)", fmt(&a), fmt(&b)),
    }
}

fn c3_root_existence() -> Line {
    let n1 = zero_locus(0, 10.0, 1).unwrap();
    let n2 = zero_locus(0, 10.0, 2).unwrap();
    Line {
        id: 3,
        name: "root existence at P=10",
        pass: n1.is_none() && n2.is_some(),
        detail: format!("n=1 {n1:?}, n=2 {n2:?}"),
    }
}

fn c4_delta_kick() -> Line {
    let mut worst_pop: f64 = 0.0;
    let mut worst_bessel: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    for p in [0.5, 1.5, 3.0] {
        for j0 in 0..=2 {
            let state = run(p, 0.005, j0).final_state;
            let kick = delta_kick(p, j0, state.basis()).unwrap();
            for (a, b) in state.coefficients().iter().zip(kick.coefficients()) {
                worst_pop = worst_pop.max((a.norm_sqr() - b.norm_sqr()).abs());
            }
            if j0 == 0 {
                let jb = spherical_bessel(state.basis().j_max(), p);
                for (j, c) in state.coefficients().iter().enumerate() {
                    let oracle = (2 * j + 1) as f64 * jb[j] * jb[j];
                    worst_bessel = worst_bessel.max((c.norm_sqr() - oracle).abs());
                }
                let e = ObservableSet::of(&state).kinetic_energy;
                worst_energy = worst_energy.max((e / (2.0 * p * p / 3.0) - 1.0).abs());
            }
        }
    }
    Line {
        id: 4,
        name: "delta-kick limit sigma=0.005",
        pass: worst_pop < 1e-3 && worst_bessel < 1e-3 && worst_energy < 0.01,
        detail: format!(
            "max |dpop| kick {worst_pop:.2e}, Bessel {worst_bessel:.2e} (tol 1e-3); energy rel. err {worst_energy:.2e} (tol 0.01)"
        ),
    }
}

fn c5_adiabatic() -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for j0 in 0..=2 {
        let obs = ObservableSet::of(&run(1.5, 10.0, j0).final_state);
        let pop = obs.populations[j0];
        let de = (obs.kinetic_energy - (j0 * (j0 + 1)) as f64).abs();
        pass &= pop > 0.99 && de < 0.05;
        parts.push(format!("J0={j0} pop {pop:.4} dE {de:.3}"));
    }
    Line { id: 5, name: "adiabatic limit sigma=10", pass, detail: parts.join("; ") + " (pop > 0.99, dE < 0.05)" }
}

fn c6_drop_observables(reference: &SweepResult) -> Line {
    let found = drops(reference, 1.5);
    let (mut wo, mut wa): (f64, f64) = (0.0, 0.0);
    for &sigma in &found {
        for j0 in 0..=2 {
            let obs = ObservableSet::of(&run(1.5, sigma, j0).final_state);
            wo = wo.max(obs.orientation.abs());
            wa = wa.max((obs.alignment - diagonal_alignment(j0)).abs());
        }
    }
    Line {
        id: 6,
        name: "orientation/alignment at drops",
        pass: !found.is_empty() && wo < 0.02 && wa < 0.05,
        detail: format!("max |<cos>| {wo:.4} (tol 0.02), max alignment offset {wa:.4} (tol 0.05)"),
    }
}

fn c7_methods() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut wc, mut wn): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let pulse = PulseSpec::new(rng.random_range(0.0..=10.0), rng.random_range(0.01..=10.0)).unwrap();
        let basis = converge_basis(&pulse, 0, LEAK_TOL).unwrap();
        let s = propagate_spectral(&pulse, 0, basis).unwrap();
        let o = propagate_ode(&pulse, 0, basis, 100_000).unwrap();
        for (a, b) in s.final_state.coefficients().iter().zip(o.final_state.coefficients()) {
            wc = wc.max((a.re - b.re).abs()).max((a.im - b.im).abs());
        }
        wn = wn.max(s.norm_drift);
    }
    Line {
        id: 7,
        name: "spectral vs RK4 (1e5 steps)",
        pass: wc < 1e-8 && wn < 1e-12,
        detail: format!("max |dC| {wc:.2e} (tol 1e-8), spectral norm drift {wn:.2e} (tol 1e-12)"),
    }
}

fn c8_two_level() -> Line {
    let mut worst_amp: f64 = 0.0;
    for p in [0.5, 1.5] {
        for sigma in uniform_axis(2.0, 10.0, 0.01).unwrap() {
            let full = run(p, sigma, 0).final_state.coefficient(1).norm();
            let two = coefficient_c1_of_0(&PulseSpec::new(p, sigma).unwrap()).norm();
            worst_amp = worst_amp.max((full - two).abs());
        }
    }
    let grid = SweepGrid::new(vec![3.0, 5.0], uniform_axis(2.0, 10.0, 0.005).unwrap(), 0, auto()).unwrap();
    let result = run_sweep(&grid, &SweepOptions::default()).unwrap();
    let mut pos_ok = true;
    let mut parts = Vec::new();
    for p in [3.0, 5.0] {
        let full = drops(&result, p);
        let loci: Vec<f64> =
            zero_loci(0, p, 4).unwrap().iter().map(|l| l.sigma_exact).filter(|s| (2.0..=10.0).contains(s)).collect();
        let worst = if full.len() == loci.len() {
            full.iter().zip(&loci).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        pos_ok &= worst <= 0.1;
        parts.push(format!("P={p}: full {} two-level {} max |d| {worst:.3}", fmt(&full), fmt(&loci)));
    }
    Line {
        id: 8,
        name: "two-level fidelity",
        pass: worst_amp < 0.02 && pos_ok,
        detail: format!("max ||C1| diff| {worst_amp:.4} (tol 0.02); {} (tol 0.1)", parts.join("; ")),
    }
}

fn c9_symmetry() -> Line {
    let mut worst: f64 = 0.0;
    for sigma in [3.0, 6.0] {
        let pulse = PulseSpec::new(1.5, sigma).unwrap();
        let basis = converge_basis(&pulse, 3, LEAK_TOL).unwrap();
        let cols: Vec<Vec<f64>> = (0..=3)
            .map(|m| {
                let r = propagate_spectral(&pulse, m, basis).unwrap();
                r.final_state.coefficients().iter().map(|c| c.norm()).collect()
            })
            .collect();
        for (m, col) in cols.iter().enumerate() {
            for (n, v) in col.iter().enumerate().take(4) {
                worst = worst.max((v - cols[n][m]).abs());
            }
        }
    }
    Line { id: 9, name: "|C^m_n| = |C^n_m|", pass: worst < 1e-10, detail: format!("max asymmetry {worst:.2e} (tol 1e-10)") }
}

fn c10_surface() -> Line {
    let axis = uniform_axis(0.5, 10.0, 0.05).unwrap();
    let grid = SweepGrid::new(axis.clone(), axis, 0, auto()).unwrap();
    let result = run_sweep(&grid, &SweepOptions::default()).unwrap();
    let off: Vec<String> = result
        .minima_2d
        .iter()
        .filter_map(|m| {
            let d = nearest_parabola(m.p, m.sigma).map_or(f64::INFINITY, |x| x.1);
            (d > 0.1 + 1e-9).then(|| format!("({:.2}, {:.2}) d={d:.3}", m.p, m.sigma))
        })
        .collect();
    let slope = result.minima_line_fit.as_ref().map(|f| f.slope);
    let pass = !result.minima_2d.is_empty() && off.is_empty() && slope.is_some_and(|s| (s - 0.577).abs() <= 0.05);
    Line {
        id: 10,
        name: "surface minima on parabolas",
        pass,
        detail: format!(
            "{} minima, {} farther than 0.1 from a parabola {:?}; slope {} (0.577 +- 0.05)",
            result.minima_2d.len(),
            off.len(),
            off,
            slope.map_or("none".into(), |s| format!("{s:.4}"))
        ),
    }
}

fn c11_spacing(reference: &SweepResult) -> Line {
    let found = drops(reference, 1.5);
    let gaps: Vec<f64> = found.windows(2).map(|w| w[1] - w[0]).collect();
    Line {
        id: 11,
        name: "drop spacing",
        pass: !gaps.is_empty() && gaps.iter().all(|g| *g > PI - 0.15 && *g < PI),
        detail: format!("gaps {} expected in ({:.4}, {:.4})", fmt(&gaps), PI - 0.15, PI),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let grid = SweepGrid::new(vec![1.5], uniform_axis(0.005, 10.0, 0.005).unwrap(), 0, auto()).unwrap();
    let reference = run_sweep(&grid, &SweepOptions::default()).unwrap();
    assert_eq!(reference.failures().count(), 0);

    let checks: Vec<Box<dyn Fn() -> Line + '_>> = vec![
        Box::new(|| c1_drop_positions(&reference)),
        Box::new(c2_analytic_loci),
        Box::new(c3_root_existence),
        Box::new(c4_delta_kick),
        Box::new(c5_adiabatic),
        Box::new(|| c6_drop_observables(&reference)),
        Box::new(c7_methods),
        Box::new(c8_two_level),
        Box::new(c9_symmetry),
        Box::new(c10_surface),
        Box::new(|| c11_spacing(&reference)),
    ];
    let mut failed = 0;
    for check in &checks {
        let t = Instant::now();
        let line = check();
        if !line.pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {:<32} {} ({:.1}s)",
            if line.pass { "PASS" } else { "FAIL" },
            line.id,
            line.name,
            line.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} passed in {:.1}s", checks.len() - failed, checks.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
