use std::fmt::Write as _;
use std::path::Path;

use pulsed_rotor::analytic::{coefficient_c1_of_0, coefficient_c2_of_1, existence_threshold, zero_loci};
use pulsed_rotor::io::plots::polar_density_svg;
use pulsed_rotor::io::{write_plots, write_records, Format, PlotKind, RunMetadata};
use pulsed_rotor::observables::ObservableSet;
use pulsed_rotor::propagator::{converge_basis_with_cap, propagate_ode, propagate_spectral, Status};
use pulsed_rotor::rotor::{PulseSpec, RotorBasis};
use pulsed_rotor::sweep::{run_sweep, BasisPolicy, SweepGrid, SweepOptions, SweepResult};
use pulsed_rotor::validation::{format_report, run_all};

use crate::config::{echo_config, Command, Method, RunConfig};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Propagate => propagate(cfg),
        Command::Sweep => sweep(cfg),
        Command::Analytic => analytic(cfg),
        Command::Validate => validate(cfg),
    }
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn propagate(cfg: &RunConfig) -> Result<(), CliError> {
    let pulse = PulseSpec::new(cfg.p_values[0], cfg.sigma_values[0])?;
    let basis = match cfg.basis {
        BasisPolicy::Fixed { j_max } => RotorBasis::new(j_max)?,
        BasisPolicy::Auto { leak_tol, cap } => converge_basis_with_cap(&pulse, cfg.j0, leak_tol, cap)?,
    };
    let report = match cfg.method {
        Method::Spectral => propagate_spectral(&pulse, cfg.j0, basis)?,
        Method::Ode => propagate_ode(&pulse, cfg.j0, basis, cfg.ode_steps)?,
    };
    if let Status::Warning(w) = &report.status {
        eprintln!("rotor: warning: {w}");
    }
    let state = &report.final_state;
    let obs = ObservableSet::of(state);

    println!(
        "P = {}  sigma = {}  eta = {}  J0 = {}  j_max = {}",
        pulse.strength(),
        pulse.duration(),
        pulse.eta(),
        cfg.j0,
        basis.j_max()
    );
    println!("kinetic energy <J^2>/B  {:.10}", obs.kinetic_energy);
    println!("orientation <cos>       {:+.10}", obs.orientation);
    println!("alignment <cos^2>       {:.10}", obs.alignment);
    println!("norm drift {:.3e}  basis leak {:.3e}", report.norm_drift, report.basis_leak);
    println!("  J        |C_J|          pop");
    for (j, c) in state.coefficients().iter().enumerate().take(12) {
        println!("{j:>3}  {:>12.6e}  {:>12.6e}", c.norm(), c.norm_sqr());
    }

    echo_config(cfg)?;
    for format in &cfg.formats {
        match format {
            Format::Csv => {
                let mut s = String::from("J,re,im,abs,pop\n");
                for (j, c) in state.coefficients().iter().enumerate() {
                    let _ = writeln!(s, "{j},{},{},{},{}", num(c.re), num(c.im), num(c.norm()), num(c.norm_sqr()));
                }
                write(&cfg.out.join("propagate.csv"), &s)?;
            }
            Format::Json => {
                let coeffs: Vec<[f64; 2]> = state.coefficients().iter().map(|c| [c.re, c.im]).collect();
                let doc = serde_json::json!({
                    "metadata": RunMetadata::new(cfg.resolved.clone()),
                    "P": pulse.strength(),
                    "sigma": pulse.duration(),
                    "eta": pulse.eta(),
                    "j0": cfg.j0,
                    "j_max": basis.j_max(),
                    "method": format!("{:?}", report.method),
                    "norm_drift": report.norm_drift,
                    "basis_leak": report.basis_leak,
                    "observables": obs,
                    "coefficients": coeffs,
                });
                write(&cfg.out.join("propagate.json"), &serde_json::to_string_pretty(&doc).expect("json value"))?;
            }
            Format::Svg => {
                let label = format!("P = {}, sigma = {}", pulse.strength(), pulse.duration());
                let svg = polar_density_svg(&[(label, state.clone())])?;
                write(&cfg.out.join("polar_density.svg"), &svg)?;
            }
        }
    }
    Ok(())
}

fn default_plots(result: &SweepResult) -> Vec<PlotKind> {
    let two_d = result.grid.p_values().len() >= 2 && result.grid.sigma_values().len() >= 2;
    PlotKind::ALL.into_iter().filter(|k| two_d || *k != PlotKind::SurfaceHeatmap).collect()
}

fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let grid = SweepGrid::new(cfg.p_values.clone(), cfg.sigma_values.clone(), cfg.j0, cfg.basis)?;
    let options = SweepOptions { workers: cfg.workers, drop_threshold: cfg.drop_threshold, surface_ceiling: None };
    let plots = cfg
        .plots
        .as_ref()
        .map(|names| names.iter().map(|n| n.parse::<PlotKind>()).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    echo_config(cfg)?;
    let result = run_sweep(&grid, &options)?;
    let metadata = RunMetadata::new(cfg.resolved.clone());
    for &format in &cfg.formats {
        match format {
            Format::Svg => {
                let kinds = plots.clone().unwrap_or_else(|| default_plots(&result));
                write_plots(&result, &kinds, &cfg.out)?;
            }
            f => {
                write_records(&result, f, &cfg.out, &metadata)?;
            }
        }
    }

    let failures = result.failures().count();
    println!("{} grid points ({} P x {} sigma), {failures} failed", grid.len(), cfg.p_values.len(), cfg.sigma_values.len());
    const SHOWN: usize = 10;
    let mut rows = cfg.p_values.iter().filter_map(|&p| {
        let drops: Vec<String> = result.drop_loci.iter().filter(|d| d.p == p).map(|d| format!("{:.4}", d.sigma)).collect();
        (!drops.is_empty()).then(|| format!("P = {p}: drops at sigma = {}", drops.join(", ")))
    });
    for line in rows.by_ref().take(SHOWN) {
        println!("{line}");
    }
    let rest = rows.count();
    if rest > 0 {
        println!("... {rest} more P values with drops (see drops.csv)");
    }
    if !result.minima_2d.is_empty() {
        println!("{} surface minima", result.minima_2d.len());
    }
    if let Some(fit) = &result.minima_line_fit {
        println!("shared minima slope {:.4} over {} points", fit.slope, fit.points_used);
    }
    println!("results in {}", cfg.out.display());
    if failures > 0 {
        return Err(CliError::Numeric(format!("{failures} of {} grid points failed; see failures.csv or analysis.json", grid.len())));
    }
    Ok(())
}

fn analytic(cfg: &RunConfig) -> Result<(), CliError> {
    let threshold = existence_threshold(cfg.j0)?;
    println!("J0 = {}: every n >= 1 root exists for P < {threshold:.6}", cfg.j0);
    let mut csv = String::from("P,n,sigma_exact,sigma_taylor\n");
    let mut loci_json = Vec::new();
    for &p in &cfg.p_values {
        let loci = zero_loci(cfg.j0, p, cfg.n_max)?;
        println!("P = {p}");
        println!("  n   sigma_exact    sigma_taylor");
        for l in &loci {
            println!("{:>3}   {:>12.6}   {:>12.6}", l.n, l.sigma_exact, l.sigma_taylor);
            let _ = writeln!(csv, "{},{},{},{}", num(p), l.n, num(l.sigma_exact), num(l.sigma_taylor));
        }
        let mut amps = Vec::new();
        for &sigma in &cfg.sigma_values {
            let pulse = PulseSpec::new(p, sigma)?;
            let c = if cfg.j0 == 0 { coefficient_c1_of_0(&pulse) } else { coefficient_c2_of_1(&pulse) };
            println!("  sigma = {sigma}: |C_{}| = {:.6e}", cfg.j0 + 1, c.norm());
            amps.push(serde_json::json!({ "sigma": sigma, "abs": c.norm(), "re": c.re, "im": c.im }));
        }
        loci_json.push(serde_json::json!({ "P": p, "loci": loci, "amplitudes": amps }));
    }
    echo_config(cfg)?;
    for format in &cfg.formats {
        match format {
            Format::Csv => write(&cfg.out.join("analytic.csv"), &csv)?,
            Format::Json => {
                let doc = serde_json::json!({
                    "metadata": RunMetadata::new(cfg.resolved.clone()),
                    "j0": cfg.j0,
                    "existence_threshold": threshold,
                    "results": loci_json,
                });
                write(&cfg.out.join("analytic.json"), &serde_json::to_string_pretty(&doc).expect("json value"))?;
            }
            Format::Svg => {}
        }
    }
    Ok(())
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let outcomes = run_all(&cfg.validation_options());
    let report = format_report(&outcomes);
    print!("{report}");
    echo_config(cfg)?;
    write(&cfg.out.join("validation.txt"), &report)?;
    if cfg.formats.contains(&Format::Json) {
        let doc = serde_json::json!({ "metadata": RunMetadata::new(cfg.resolved.clone()), "checks": outcomes });
        write(&cfg.out.join("validation.json"), &serde_json::to_string_pretty(&doc).expect("json value"))?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(CliError::ValidationFailed(failed));
    }
    Ok(())
}
