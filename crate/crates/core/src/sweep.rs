//! Parallel `(P, sigma)` sweeps and the analyses run on top of them: drops
//! of the kinetic energy along `sigma`, strict minima of the
//! kinetic-energy surface, and a shared-slope line fit through those minima.
//!
//! Every grid point is an independent task. Results are assembled by grid
//! index and no floating-point reduction crosses points, so the output does
//! not depend on the number of worker threads.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{zero_locus, zero_loci};
use crate::observables::ObservableSet;
use crate::propagator::{converge_and_propagate, propagate_spectral, DEFAULT_J_MAX_CAP, DEFAULT_LEAK_TOL};
use crate::rotor::{PulseSpec, RotorBasis};
use crate::{Error, Result, C64};

pub const DEFAULT_DROP_THRESHOLD: f64 = 0.10;
pub const DEFAULT_CEILING_PERCENTILE: f64 = 1.0;
/// A drop further than this from every analytic root is flagged.
pub const MATCH_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisPolicy {
    Fixed { j_max: usize },
    Auto { leak_tol: f64, cap: usize },
}

impl Default for BasisPolicy {
    fn default() -> Self {
        BasisPolicy::Auto { leak_tol: DEFAULT_LEAK_TOL, cap: DEFAULT_J_MAX_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    p_values: Vec<f64>,
    sigma_values: Vec<f64>,
    j0: usize,
    basis: BasisPolicy,
}

fn check_axis(name: &str, values: &[f64], strict_positive: bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::domain(format!("{name} list is empty")));
    }
    for &v in values {
        if !v.is_finite() || v < 0.0 || (strict_positive && v == 0.0) {
            return Err(Error::domain(format!("{name} value {v} out of range")));
        }
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{name} values must be strictly increasing")));
    }
    Ok(())
}

impl SweepGrid {
    pub fn new(p_values: Vec<f64>, sigma_values: Vec<f64>, j0: usize, basis: BasisPolicy) -> Result<Self> {
        check_axis("P", &p_values, false)?;
        check_axis("sigma", &sigma_values, true)?;
        match basis {
            BasisPolicy::Fixed { j_max } if j_max < 1 || j0 > j_max => {
                return Err(Error::domain(format!("fixed basis j_max = {j_max} cannot hold J0 = {j0}")));
            }
            BasisPolicy::Auto { leak_tol, .. } if !(leak_tol > 0.0 && leak_tol < 1.0) => {
                return Err(Error::domain(format!("leak tolerance {leak_tol} outside (0, 1)")));
            }
            _ => {}
        }
        Ok(Self { p_values, sigma_values, j0, basis })
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p_values
    }

    pub fn sigma_values(&self) -> &[f64] {
        &self.sigma_values
    }

    pub fn j0(&self) -> usize {
        self.j0
    }

    pub fn basis(&self) -> BasisPolicy {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.p_values.len() * self.sigma_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(p_index, sigma_index)` of the flat, P-major point index.
    pub fn unflatten(&self, flat: usize) -> (usize, usize) {
        (flat / self.sigma_values.len(), flat % self.sigma_values.len())
    }
}

/// `min, min + step, ...` up to `max` inclusive (within a 1e-9 step
/// tolerance).
pub fn uniform_axis(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::domain(format!("step must be > 0, got {step}")));
    }
    if max.is_nan() || min.is_nan() || max < min {
        return Err(Error::domain(format!("max {max} below min {min}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| snap(min + i as f64 * step)).collect())
}

/// Rounds to 12 decimal places so that `0.5 + 7 * 0.05` lands on `0.85`
/// rather than `0.8500000000000001`.
fn snap(x: f64) -> f64 {
    if x.abs() < 1e3 {
        (x * 1e12).round() / 1e12
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub p_index: usize,
    pub sigma_index: usize,
    pub p: f64,
    pub sigma: f64,
    pub j0: usize,
    pub j_max: usize,
    pub basis_leak: f64,
    pub observables: ObservableSet,
    pub coefficients: Vec<C64>,
}

impl SweepRecord {
    pub fn c_abs(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub p_index: usize,
    pub sigma_index: usize,
    pub p: f64,
    pub sigma: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub p: f64,
    pub sigma: f64,
    pub energy: f64,
}

/// Common slope and per-cluster intercepts of lines `sigma = slope * P + b_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    /// `(parabola index n, intercept)` for every cluster with two or more
    /// points.
    pub intercepts: Vec<(usize, f64)>,
    pub rms_residual: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// `None` uses rayon's default pool.
    pub workers: Option<usize>,
    pub drop_threshold: f64,
    /// Absolute energy ceiling for surface minima; `None` uses the 1st
    /// percentile of the surface.
    pub surface_ceiling: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { workers: None, drop_threshold: DEFAULT_DROP_THRESHOLD, surface_ceiling: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    /// One entry per grid point in P-major order.
    pub points: Vec<std::result::Result<SweepRecord, SweepFailure>>,
    pub drop_loci: Vec<GridPoint>,
    pub minima_2d: Vec<GridPoint>,
    pub minima_line_fit: Option<LineFit>,
}

impl SweepResult {
    pub fn records(&self) -> impl Iterator<Item = &SweepRecord> {
        self.points.iter().filter_map(|p| p.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepFailure> {
        self.points.iter().filter_map(|p| p.as_ref().err())
    }

    pub fn record(&self, p_index: usize, sigma_index: usize) -> Option<&SweepRecord> {
        let n = self.grid.sigma_values.len();
        self.points.get(p_index * n + sigma_index)?.as_ref().ok()
    }

    /// Kinetic energy per grid point, NaN where the point failed.
    pub fn energy_surface(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.as_ref().map(|r| r.observables.kinetic_energy).unwrap_or(f64::NAN))
            .collect()
    }

    /// `(sigma, energy)` along one `P` row, skipping failed points.
    pub fn energy_row(&self, p_index: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.sigma_values.len();
        self.points[p_index * n..(p_index + 1) * n]
            .iter()
            .filter_map(|p| p.as_ref().ok())
            .map(|r| (r.sigma, r.observables.kinetic_energy))
            .unzip()
    }

    /// Largest basis used by any successful point.
    pub fn max_j_max(&self) -> Option<usize> {
        self.records().map(|r| r.j_max).max()
    }
}

fn evaluate_point(grid: &SweepGrid, flat: usize) -> std::result::Result<SweepRecord, SweepFailure> {
    let (p_index, sigma_index) = grid.unflatten(flat);
    let p = grid.p_values[p_index];
    let sigma = grid.sigma_values[sigma_index];
    let fail = |e: Error| SweepFailure { p_index, sigma_index, p, sigma, reason: e.to_string() };
    let pulse = PulseSpec::new(p, sigma).map_err(fail)?;
    let report = match grid.basis {
        BasisPolicy::Fixed { j_max } => {
            RotorBasis::new(j_max).and_then(|b| propagate_spectral(&pulse, grid.j0, b))
        }
        BasisPolicy::Auto { leak_tol, cap } => converge_and_propagate(&pulse, grid.j0, leak_tol, cap),
    }
    .map_err(fail)?;
    let state = &report.final_state;
    Ok(SweepRecord {
        p_index,
        sigma_index,
        p,
        sigma,
        j0: grid.j0,
        j_max: state.basis().j_max(),
        basis_leak: report.basis_leak,
        observables: ObservableSet::of(state),
        coefficients: state.coefficients().to_vec(),
    })
}

/// Propagates every grid point and runs the drop and surface analyses.
pub fn run_sweep(grid: &SweepGrid, options: &SweepOptions) -> Result<SweepResult> {
    let work = || -> Vec<_> { (0..grid.len()).into_par_iter().map(|i| evaluate_point(grid, i)).collect() };
    let points = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut result = SweepResult {
        grid: grid.clone(),
        points,
        drop_loci: Vec::new(),
        minima_2d: Vec::new(),
        minima_line_fit: None,
    };

    for (pi, &p) in grid.p_values.iter().enumerate() {
        let (sigmas, energies) = result.energy_row(pi);
        for i in drop_indices(&sigmas, &energies, options.drop_threshold) {
            result.drop_loci.push(GridPoint { p, sigma: sigmas[i], energy: energies[i] });
        }
    }
    result.minima_2d = detect_surface_minima(&result, options.surface_ceiling);
    if result.minima_2d.len() >= 2 {
        let pts: Vec<(f64, f64)> = result.minima_2d.iter().map(|m| (m.p, m.sigma)).collect();
        result.minima_line_fit = fit_minima_line(&pts).ok();
    }
    Ok(result)
}

/// Indices of strict local minima whose depth, relative to the smaller of
/// the two neighbouring local maxima, exceeds `rel_threshold`. The series
/// is assumed to be sampled on a uniform grid; fewer than five points give
/// no drops.
pub fn drop_indices(sigmas: &[f64], energies: &[f64], rel_threshold: f64) -> Vec<usize> {
    let n = energies.len();
    if n < 5 || sigmas.len() != n {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 1..n - 1 {
        let e = energies[i];
        if !(e < energies[i - 1] && e < energies[i + 1]) {
            continue;
        }
        let mut l = i;
        while l > 0 && energies[l - 1] > energies[l] {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < n && energies[r + 1] > energies[r] {
            r += 1;
        }
        let ceiling = energies[l].min(energies[r]);
        if ceiling > 0.0 && (ceiling - e) / ceiling > rel_threshold {
            out.push(i);
        }
    }
    out
}

/// `sigma` positions of the drops found by [`drop_indices`].
pub fn detect_drops(sigmas: &[f64], energies: &[f64], rel_threshold: f64) -> Vec<f64> {
    drop_indices(sigmas, energies, rel_threshold).into_iter().map(|i| sigmas[i]).collect()
}

/// Linear-interpolation percentile (`q` in percent) of the finite values.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Strict minima over the 8-neighbourhood of a P-major surface, kept when
/// below `ceiling` (default: 1st percentile). Grids smaller than 5x5 give
/// nothing.
#[allow(clippy::needless_range_loop)]
pub fn surface_minima(p_values: &[f64], sigma_values: &[f64], surface: &[f64], ceiling: Option<f64>) -> Vec<GridPoint> {
    let (np, ns) = (p_values.len(), sigma_values.len());
    if np < 5 || ns < 5 || surface.len() != np * ns {
        return Vec::new();
    }
    let Some(ceiling) = ceiling.or_else(|| percentile(surface, DEFAULT_CEILING_PERCENTILE)) else {
        return Vec::new();
    };
    let at = |i: usize, j: usize| surface[i * ns + j];
    let mut out = Vec::new();
    for i in 1..np - 1 {
        for j in 1..ns - 1 {
            let e = at(i, j);
            if e.is_nan() || e >= ceiling {
                continue;
            }
            let is_min = (i - 1..=i + 1)
                .flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (i, j))
                .all(|(a, b)| e < at(a, b));
            if is_min {
                out.push(GridPoint { p: p_values[i], sigma: sigma_values[j], energy: e });
            }
        }
    }
    out
}

pub fn detect_surface_minima(result: &SweepResult, ceiling: Option<f64>) -> Vec<GridPoint> {
    surface_minima(result.grid.p_values(), result.grid.sigma_values(), &result.energy_surface(), ceiling)
}

/// Index `n` of the ground-state zero-locus parabola
/// `sigma_n(P) = sqrt(n^2 pi^2 - P^2 / 3)` nearest to `(P, sigma)` along
/// `sigma`, with the distance.
pub fn nearest_parabola(p: f64, sigma: f64) -> Option<(usize, f64)> {
    let n_top = (sigma / PI).ceil() as usize + (p / (3f64.sqrt() * PI)).ceil() as usize + 2;
    (1..=n_top)
        .filter_map(|n| zero_locus(0, p, n).ok().flatten().map(|s| (n, (s - sigma).abs())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Clusters `(P, sigma)` minima by their nearest ground-state parabola and
/// fits `sigma = slope * P + b_n` with one slope shared by all clusters.
/// Clusters with fewer than two points are ignored.
pub fn fit_minima_line(minima: &[(f64, f64)]) -> Result<LineFit> {
    if minima.len() < 2 {
        return Err(Error::NoFit(format!("need at least 2 minima, got {}", minima.len())));
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<(f64, f64)>> = Default::default();
    for &(p, s) in minima {
        if let Some((n, _)) = nearest_parabola(p, s) {
            clusters.entry(n).or_default().push((p, s));
        }
    }
    clusters.retain(|_, v| v.len() >= 2);
    if clusters.is_empty() {
        return Err(Error::NoFit("no parabola cluster holds two or more minima".into()));
    }

    let means: Vec<(usize, f64, f64)> = clusters
        .iter()
        .map(|(&n, pts)| {
            let k = pts.len() as f64;
            (n, pts.iter().map(|x| x.0).sum::<f64>() / k, pts.iter().map(|x| x.1).sum::<f64>() / k)
        })
        .collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for ((_, pts), &(_, mp, ms)) in clusters.iter().zip(&means) {
        for &(p, s) in pts {
            sxy += (p - mp) * (s - ms);
            sxx += (p - mp) * (p - mp);
        }
    }
    if sxx == 0.0 {
        return Err(Error::NoFit("minima within each cluster share the same P".into()));
    }
    let slope = sxy / sxx;
    let intercepts: Vec<(usize, f64)> = means.iter().map(|&(n, mp, ms)| (n, ms - slope * mp)).collect();
    let mut ss = 0.0;
    let mut used = 0;
    for ((_, pts), &(_, b)) in clusters.iter().zip(&intercepts) {
        for &(p, s) in pts {
            let r = s - (slope * p + b);
            ss += r * r;
            used += 1;
        }
    }
    Ok(LineFit { slope, intercepts, rms_residual: (ss / used as f64).sqrt(), points_used: used })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropComparison {
    pub sigma_drop: f64,
    pub n: Option<usize>,
    pub sigma_analytic: Option<f64>,
    /// `sigma_drop - sigma_analytic`.
    pub delta: Option<f64>,
    /// False when no analytic root lies within [`MATCH_WINDOW`].
    pub matched: bool,
}

/// Pairs each drop with the nearest two-level zero locus for `J0` in
/// `{0, 1}`.
pub fn compare_drops_to_analytic(drops: &[f64], p: f64, j0: usize) -> Result<Vec<DropComparison>> {
    if j0 > 1 {
        return Err(Error::domain(format!("analytic loci exist for J0 in {{0, 1}}, got {j0}")));
    }
    let Some(top) = drops.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let n_max = (2.0 * top / PI).ceil() as usize + (p / PI).ceil() as usize + 2;
    let loci = zero_loci(j0, p, n_max)?;
    Ok(drops
        .iter()
        .map(|&s| {
            let best = loci.iter().min_by(|a, b| (a.sigma_exact - s).abs().total_cmp(&(b.sigma_exact - s).abs()));
            match best {
                Some(l) if (l.sigma_exact - s).abs() <= MATCH_WINDOW => DropComparison {
                    sigma_drop: s,
                    n: Some(l.n),
                    sigma_analytic: Some(l.sigma_exact),
                    delta: Some(s - l.sigma_exact),
                    matched: true,
                },
                Some(l) => DropComparison {
                    sigma_drop: s,
                    n: Some(l.n),
                    sigma_analytic: Some(l.sigma_exact),
                    delta: Some(s - l.sigma_exact),
                    matched: false,
                },
                None => DropComparison { sigma_drop: s, n: None, sigma_analytic: None, delta: None, matched: false },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn axis_construction() {
        let a = uniform_axis(0.005, 10.0, 0.005).unwrap();
        assert_eq!(a.len(), 2000);
        assert!((a[608] - 3.045).abs() < 1e-12);
        assert!((a.last().unwrap() - 10.0).abs() < 1e-12);
        assert!(uniform_axis(0.0, 1.0, 0.0).is_err());
        assert!(uniform_axis(1.0, 0.5, 0.1).is_err());
        assert_eq!(uniform_axis(2.0, 2.0, 0.1).unwrap(), vec![2.0]);
        assert_eq!(uniform_axis(0.5, 1.0, 0.05).unwrap()[7], 0.85);
        assert_eq!(a[608], 3.045);
    }

    #[test]
    fn grid_validation() {
        let auto = BasisPolicy::default();
        assert!(SweepGrid::new(vec![], vec![1.0], 0, auto).is_err());
        assert!(SweepGrid::new(vec![1.0], vec![0.0, 1.0], 0, auto).is_err());
        assert!(SweepGrid::new(vec![1.0, 1.0], vec![1.0], 0, auto).is_err());
        assert!(SweepGrid::new(vec![1.0], vec![2.0, 1.0], 0, auto).is_err());
        assert!(SweepGrid::new(vec![1.0], vec![1.0], 3, BasisPolicy::Fixed { j_max: 2 }).is_err());
        assert!(SweepGrid::new(vec![1.0], vec![1.0], 0, BasisPolicy::Auto { leak_tol: 0.0, cap: 10 }).is_err());
        let g = SweepGrid::new(vec![0.0, 1.0], vec![1.0, 2.0, 3.0], 0, auto).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.unflatten(4), (1, 1));
    }

    #[test]
    fn monotone_series_has_no_drops() {
        let s: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let e: Vec<f64> = s.iter().map(|x| 1.0 + x).collect();
        assert!(detect_drops(&s, &e, 0.1).is_empty());
        let e: Vec<f64> = s.iter().map(|x| 10.0 - x).collect();
        assert!(detect_drops(&s, &e, 0.1).is_empty());
    }

    #[test]
    fn drop_depth_threshold() {
        let s: Vec<f64> = (0..9).map(|i| i as f64).collect();
        // deep drop at 2, shallow drop at 6
        let e = vec![1.0, 1.2, 0.2, 1.5, 1.6, 1.55, 1.5, 1.7, 1.8];
        assert_eq!(detect_drops(&s, &e, 0.1), vec![2.0]);
        assert_eq!(detect_drops(&s, &e, 0.01), vec![2.0, 6.0]);
        assert!(detect_drops(&s[..4], &e[..4], 0.1).is_empty());
    }

    #[test]
    fn percentile_matches_linear_interpolation() {
        let v: Vec<f64> = (0..101).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 1.0), Some(1.0));
        assert_eq!(percentile(&[3.0, 1.0], 50.0), Some(2.0));
        assert_eq!(percentile(&[f64::NAN], 50.0), None);
    }

    #[test]
    fn constant_surface_has_no_minima() {
        let axis: Vec<f64> = (1..=6).map(|i| i as f64).collect();
        assert!(surface_minima(&axis, &axis, &[2.0; 36], None).is_empty());
        assert!(surface_minima(&axis, &axis, &[2.0; 36], Some(5.0)).is_empty());
    }

    #[test]
    fn bowl_surface_has_one_minimum() {
        let axis: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let surf: Vec<f64> = axis
            .iter()
            .flat_map(|&p| axis.iter().map(move |&s| (p - 3.0).powi(2) + (s - 2.0).powi(2)))
            .collect();
        let m = surface_minima(&axis, &axis, &surf, Some(1.0));
        assert_eq!(m, vec![GridPoint { p: 3.0, sigma: 2.0, energy: 0.0 }]);
    }

    #[test]
    fn line_fit_identities() {
        // two collinear points near the n = 1 parabola
        let f = fit_minima_line(&[(1.0, 3.1), (1.5, 3.05)]).unwrap();
        assert!((f.slope + 0.1).abs() < 1e-12);
        assert!(f.rms_residual < 1e-12);
        assert_eq!(f.intercepts.len(), 1);
        assert_eq!(f.intercepts[0].0, 1);

        // synthetic minima on sigma = 0.577 P + c, two clusters
        let pts: Vec<(f64, f64)> = [0.5, 0.7, 0.9]
            .iter()
            .map(|&p| (p, 0.577 * p + 2.9))
            .chain([0.5, 0.8, 1.1].iter().map(|&p| (p, 0.577 * p + 6.0)))
            .collect();
        let f = fit_minima_line(&pts).unwrap();
        assert!((f.slope - 0.577).abs() < 1e-6);
        assert_eq!(f.intercepts.len(), 2);

        assert!(matches!(fit_minima_line(&[(1.0, 3.0)]), Err(Error::NoFit(_))));
        // one point per cluster
        assert!(matches!(fit_minima_line(&[(1.0, 3.0), (1.0, 6.2)]), Err(Error::NoFit(_))));
    }

    #[test]
    fn nearest_parabola_skips_missing_roots() {
        // P = 10 has no n = 1 root
        let (n, d) = nearest_parabola(10.0, 1.0).unwrap();
        assert_eq!(n, 2);
        assert!((d - (zero_locus(0, 10.0, 2).unwrap().unwrap() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn compare_empty_and_unmatched() {
        assert!(compare_drops_to_analytic(&[], 1.5, 0).unwrap().is_empty());
        let c = compare_drops_to_analytic(&[3.05, 4.6], 1.5, 0).unwrap();
        assert!(c[0].matched);
        assert_eq!(c[0].n, Some(1));
        assert!(!c[1].matched);
        assert!(compare_drops_to_analytic(&[1.0], 1.5, 2).is_err());
    }

    #[test]
    fn field_free_sweep_is_flat() {
        let grid = SweepGrid::new(vec![0.0], uniform_axis(0.1, 2.0, 0.1).unwrap(), 1, BasisPolicy::default()).unwrap();
        let r = run_sweep(&grid, &SweepOptions::default()).unwrap();
        assert_eq!(r.failures().count(), 0);
        for rec in r.records() {
            assert!((rec.observables.kinetic_energy - 2.0).abs() <= 4.0 * f64::EPSILON * 2.0);
            assert!(rec.observables.orientation.abs() < 1e-15);
            assert!((rec.observables.alignment - 0.6).abs() < 1e-14);
        }
        assert!(r.drop_loci.is_empty());
    }

    #[test]
    fn convergence_failures_are_reported() {
        let grid = SweepGrid::new(vec![1.0, 2.0], vec![1.0, 2.0], 0, BasisPolicy::Auto { leak_tol: 1e-10, cap: 3 }).unwrap();
        let r = run_sweep(&grid, &SweepOptions::default()).unwrap();
        assert_eq!(r.points.len(), 4);
        assert_eq!(r.failures().count(), 4);
        assert!(r.energy_surface().iter().all(|e| e.is_nan()));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let grid = SweepGrid::new(
            uniform_axis(0.5, 3.0, 0.5).unwrap(),
            uniform_axis(0.5, 4.0, 0.25).unwrap(),
            0,
            BasisPolicy::default(),
        )
        .unwrap();
        let one = run_sweep(&grid, &SweepOptions { workers: Some(1), ..Default::default() }).unwrap();
        let four = run_sweep(&grid, &SweepOptions { workers: Some(4), ..Default::default() }).unwrap();
        let bits = |r: &SweepResult| -> Vec<u64> {
            r.records()
                .flat_map(|x| x.coefficients.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]))
                .collect()
        };
        assert_eq!(bits(&one), bits(&four));
        assert_eq!(one, four);
    }

    proptest! {
        #[test]
        fn drops_lie_strictly_inside(values in prop::collection::vec(0.0f64..5.0, 5..60)) {
            let s: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            for i in drop_indices(&s, &values, 0.1) {
                prop_assert!(i > 0 && i + 1 < values.len());
                prop_assert!(values[i] < values[i - 1] && values[i] < values[i + 1]);
            }
        }
    }
}
