//! Self-contained SVG figures written without a plotting dependency.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::write_file;
use crate::observables::polar_density;
use crate::rotor::{RotorBasis, Wavepacket};
use crate::sweep::{SweepRecord, SweepResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlotKind {
    EnergyVsSigma,
    CoeffsVsSigma,
    Orientation,
    Alignment,
    SurfaceHeatmap,
    PolarDensity,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] = [
        PlotKind::EnergyVsSigma,
        PlotKind::CoeffsVsSigma,
        PlotKind::Orientation,
        PlotKind::Alignment,
        PlotKind::SurfaceHeatmap,
        PlotKind::PolarDensity,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::EnergyVsSigma => "energy_vs_sigma.svg",
            PlotKind::CoeffsVsSigma => "coeffs_vs_sigma.svg",
            PlotKind::Orientation => "orientation.svg",
            PlotKind::Alignment => "alignment.svg",
            PlotKind::SurfaceHeatmap => "surface_heatmap.svg",
            PlotKind::PolarDensity => "polar_density.svg",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    /// Accepts the file stem, e.g. `energy_vs_sigma` or `surface_heatmap`.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        PlotKind::ALL
            .into_iter()
            .find(|k| k.file_name().trim_end_matches(".svg") == key)
            .ok_or_else(|| Error::domain(format!("unknown plot kind '{s}'")))
    }
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#e6b800", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const MAX_ROWS: usize = 8;

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Round tick spacing giving roughly `target` ticks over `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-300);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
}

fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], markers: &[f64]) -> Result<String> {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).filter(|p| p.1.is_finite()).collect();
    if all.len() < 2 {
        return Err(Error::MissingSeries(format!("{title}: fewer than two points")));
    }
    let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(out, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for t in ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#333"/>"##, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_tick(t));
    }
    for t in ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(out, r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/>"##, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, esc(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        esc(ylabel)
    );
    for &m in markers {
        if m >= x0 && m <= x1 {
            let x = sx(m);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#888" stroke-dasharray="4 3"/>"##,
                TOP + ph
            );
        }
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in &s.points {
            if !y.is_finite() {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, sx(x), sy(y));
            pen_up = false;
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, ly + 4.0, esc(&s.label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn rows_by_p(result: &SweepResult) -> Vec<(f64, Vec<&SweepRecord>)> {
    let n = result.grid.sigma_values().len();
    result
        .grid
        .p_values()
        .iter()
        .enumerate()
        .take(MAX_ROWS)
        .map(|(i, &p)| (p, result.points[i * n..(i + 1) * n].iter().filter_map(|x| x.as_ref().ok()).collect()))
        .collect()
}

fn observable_chart(result: &SweepResult, title: &str, ylabel: &str, f: impl Fn(&SweepRecord) -> f64) -> Result<String> {
    let series: Vec<Series> = rows_by_p(result)
        .into_iter()
        .map(|(p, recs)| Series { label: format!("P = {}", fmt_tick(p)), points: recs.iter().map(|r| (r.sigma, f(r))).collect() })
        .collect();
    let markers: Vec<f64> = result.drop_loci.iter().map(|d| d.sigma).collect();
    let j0 = result.grid.j0();
    line_chart(&format!("{title} (J0 = {j0})"), "pulse duration sigma", ylabel, &series, &markers)
}

fn coeffs_chart(result: &SweepResult) -> Result<String> {
    let Some((p, recs)) = rows_by_p(result).into_iter().next() else {
        return Err(Error::MissingSeries("coefficients: empty sweep".into()));
    };
    let series: Vec<Series> = (0..3)
        .map(|j| Series {
            label: format!("|C_{j}|"),
            points: recs.iter().map(|r| (r.sigma, r.coefficients.get(j).map_or(0.0, |c| c.norm()))).collect(),
        })
        .collect();
    let title = format!("Expansion coefficients (P = {}, J0 = {})", fmt_tick(p), result.grid.j0());
    line_chart(&title, "pulse duration sigma", "|C_J|", &series, &[])
}

/// Blue-to-yellow ramp for `t` in `[0, 1]`.
fn ramp(t: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let k = STOPS.iter().position(|s| s.0 >= t).unwrap_or(4).max(1);
    let (ta, ca) = STOPS[k - 1];
    let (tb, cb) = STOPS[k];
    let u = (t - ta) / (tb - ta);
    let c: Vec<u8> = (0..3).map(|i| (ca[i] + u * (cb[i] - ca[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn heatmap(result: &SweepResult) -> Result<String> {
    let ps = result.grid.p_values();
    let ss = result.grid.sigma_values();
    if ps.len() < 2 || ss.len() < 2 {
        return Err(Error::MissingSeries("surface heatmap needs at least two P and two sigma values".into()));
    }
    let logs: Vec<f64> = result.energy_surface().iter().map(|e| e.max(1e-300).log10()).collect();
    let finite: Vec<f64> = logs.iter().copied().filter(|x| x.is_finite() && *x > -300.0).collect();
    if finite.is_empty() {
        return Err(Error::MissingSeries("surface heatmap: no successful points".into()));
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min).max(-12.0);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let cw = pw / ps.len() as f64;
    let ch = ph / ss.len() as f64;

    let mut out = String::new();
    header(&mut out, &format!("log10 kinetic energy (J0 = {})", result.grid.j0()));
    for (i, _) in ps.iter().enumerate() {
        for (j, _) in ss.iter().enumerate() {
            let v = logs[i * ss.len() + j];
            let fill = if v.is_finite() { ramp((v - lo) / (hi - lo).max(1e-12)) } else { "#cccccc".into() };
            let x = LEFT + i as f64 * cw;
            let y = TOP + ph - (j + 1) as f64 * ch;
            let _ = writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#, cw + 0.3, ch + 0.3);
        }
    }
    let (p0, p1) = (ps[0], ps[ps.len() - 1]);
    let (s0, s1) = (ss[0], ss[ss.len() - 1]);
    for t in ticks(p0, p1, 8) {
        let x = LEFT + (t - p0) / (p1 - p0) * pw;
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_tick(t));
    }
    for t in ticks(s0, s1, 6) {
        let y = TOP + (1.0 - (t - s0) / (s1 - s0)) * ph;
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(t));
    }
    for m in &result.minima_2d {
        let x = LEFT + (m.p - p0) / (p1 - p0) * pw;
        let y = TOP + (1.0 - (m.sigma - s0) / (s1 - s0)) * ph;
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="none" stroke="red"/>"#);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">pulse strength P</text>"#, LEFT + pw / 2.0, H - 12.0);
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">pulse duration sigma</text>"#,
        TOP + ph / 2.0
    );
    // colour bar
    let bx = W - RIGHT + 30.0;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let y = TOP + ph - (k + 1) as f64 * ph / 50.0;
        let _ = writeln!(out, r#"<rect x="{bx}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#, ph / 50.0 + 0.3, ramp(t));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 24.0, TOP + ph, fmt_tick(lo));
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 24.0, TOP + 10.0, fmt_tick(hi));
    out.push_str("</svg>\n");
    Ok(out)
}

/// Polar plots of `|psi(theta)|^2` for up to three wavepackets, field axis
/// vertical.
pub fn polar_density_svg(panels: &[(String, Wavepacket)]) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::MissingSeries("polar density: no wavepackets".into()));
    }
    let panels = &panels[..panels.len().min(3)];
    let n = 360;
    let thetas: Vec<f64> = (0..=n).map(|k| std::f64::consts::PI * k as f64 / n as f64).collect();
    let mut out = String::new();
    header(&mut out, "Angular probability density");
    let cell = W / panels.len() as f64;
    let radius = (cell.min(H - 80.0)) / 2.0 - 20.0;
    for (k, (label, psi)) in panels.iter().enumerate() {
        let dens = polar_density(psi, &thetas);
        let peak = dens.iter().copied().fold(0.0, f64::max).max(1e-300);
        let cx = cell * (k as f64 + 0.5);
        let cy = H / 2.0 + 15.0;
        let mut d = String::new();
        // right half theta in [0, pi], mirrored on the left
        for (i, (&t, &rho)) in thetas.iter().zip(&dens).enumerate() {
            let r = radius * rho / peak;
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, cx + r * t.sin(), cy - r * t.cos());
        }
        for (&t, &rho) in thetas.iter().zip(&dens).rev() {
            let r = radius * rho / peak;
            let _ = write!(d, "L{:.2},{:.2} ", cx - r * t.sin(), cy - r * t.cos());
        }
        let _ = writeln!(out, r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#bbb"/>"##, cy - radius - 8.0, cy + radius + 8.0);
        let _ = writeln!(out, r##"<path d="{}Z" fill="#9ecae1" stroke="#1f77b4"/>"##, d.trim_end());
        let _ = writeln!(out, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, H - 14.0, esc(label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn polar_from_sweep(result: &SweepResult) -> Result<String> {
    let mut picks: Vec<&SweepRecord> = result
        .drop_loci
        .iter()
        .filter_map(|d| result.records().find(|r| r.p == d.p && r.sigma == d.sigma))
        .take(3)
        .collect();
    if picks.is_empty() {
        picks.extend(result.records().next());
    }
    let panels = picks
        .into_iter()
        .map(|r| {
            let basis = RotorBasis::new(r.j_max)?;
            let psi = Wavepacket::from_propagation(basis, r.coefficients.clone(), r.j0);
            Ok((format!("P = {}, sigma = {}", fmt_tick(r.p), fmt_tick(r.sigma)), psi))
        })
        .collect::<Result<Vec<_>>>()?;
    polar_density_svg(&panels)
}

/// Renders one figure from a sweep.
pub fn emit_plot(result: &SweepResult, kind: PlotKind) -> Result<String> {
    if result.records().next().is_none() {
        return Err(Error::MissingSeries("sweep has no successful points".into()));
    }
    match kind {
        PlotKind::EnergyVsSigma => observable_chart(result, "Rotational kinetic energy", "<J^2> / B", |r| r.observables.kinetic_energy),
        PlotKind::CoeffsVsSigma => coeffs_chart(result),
        PlotKind::Orientation => observable_chart(result, "Orientation cosine", "<cos theta>", |r| r.observables.orientation),
        PlotKind::Alignment => observable_chart(result, "Alignment cosine", "<cos^2 theta>", |r| r.observables.alignment),
        PlotKind::SurfaceHeatmap => heatmap(result),
        PlotKind::PolarDensity => polar_from_sweep(result),
    }
}

pub fn write_plots(result: &SweepResult, kinds: &[PlotKind], dir: &Path) -> Result<Vec<PathBuf>> {
    kinds
        .iter()
        .map(|&k| {
            let path = dir.join(k.file_name());
            write_file(&path, &emit_plot(result, k)?)?;
            Ok(path)
        })
        .collect()
}
