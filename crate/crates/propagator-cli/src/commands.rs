//! Subcommand implementations. Data files (JSON reports, CSV tables) are fully
//! deterministic; wall-clock timestamps go only to the run.log sidecar.

use crate::args::{Cli, Cmd, ConvergeArgs, EvolveArgs, KernelArgs, VerifyArgs};
use crate::settings::{
    resolve_converge_run, resolve_evolve_run, resolve_kernel_run, resolve_verify_run, CliError,
    CliResult, Settings,
};
use crate::verify::{run_check, CHECK_NAMES};
use clap::Parser;
use propagator::report::{json_f64, round_g9};
use propagator::{
    build_grid, classical_action_free, classical_action_linear, evolve_wavefunction, format_g9,
    free_kernel, gaussian_packet, kernel_sample, mean_wavevector, momentum_kernel_ladder, norm,
    packet_well_covered, packet_width, convergence_study, fit_order_loglog, KernelSpec,
    OscillatoryQuadratureConfig, RealVector,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub fn run() -> i32 {
    let cli = Cli::parse();
    let started = unix_now();
    let settings = match Settings::resolve(&cli.common) {
        Ok(s) => s,
        Err(e) => return report_error(e),
    };
    match dispatch(&cli, &settings) {
        Ok((code, used_dir)) => {
            if let Some(dir) = used_dir {
                if let Err(e) = write_run_log(&dir, started) {
                    eprintln!("warning: could not write run.log: {e}");
                }
            }
            code
        }
        Err(e) => report_error(e),
    }
}

fn report_error(e: CliError) -> i32 {
    eprintln!("error: {}", e.0);
    2
}

fn dispatch(cli: &Cli, s: &Settings) -> CliResult<(i32, Option<PathBuf>)> {
    match &cli.cmd {
        Cmd::Kernel(a) => cmd_kernel(s, a),
        Cmd::Verify(a) => cmd_verify(s, a),
        Cmd::Converge(a) => cmd_converge(s, a),
        Cmd::Evolve(a) => cmd_evolve(s, a),
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Timestamps and invocation live here and only here, keeping every data file
/// byte-identical across reruns.
fn write_run_log(dir: &Path, started: u64) -> std::io::Result<()> {
    let mut f = std::fs::File::create(dir.join("run.log"))?;
    let argv: Vec<String> = std::env::args().collect();
    writeln!(f, "command: {}", argv.join(" "))?;
    writeln!(f, "version: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "started_unix: {started}")?;
    writeln!(f, "finished_unix: {}", unix_now())?;
    Ok(())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::usage(e.to_string())
}

fn cmd_kernel(s: &Settings, a: &KernelArgs) -> CliResult<(i32, Option<PathBuf>)> {
    let run = resolve_kernel_run(s, a)?;
    let cfg = &s.physics;
    let sample = kernel_sample(&run.spec, &run.b, cfg).map_err(usage)?;
    let action = match &run.spec {
        KernelSpec::Free => classical_action_free(&run.b, cfg),
        KernelSpec::LinearPotential(v) => classical_action_linear(&run.b, v, cfg).map_err(usage)?,
    };
    // Identical lines for both kernels: a switched-off potential must print
    // byte-for-byte what the free kernel prints.
    println!("value_re {}", format_g9(sample.value.re));
    println!("value_im {}", format_g9(sample.value.im));
    println!("modulus {}", format_g9(sample.modulus()));
    println!("phase {}", format_g9(sample.phase()));
    println!("action_over_hbar {}", format_g9(action.over_hbar(cfg)));

    let used_dir = if s.out.is_some() {
        let dir = s.out_dir(false)?;
        let mut obj = serde_json::Map::new();
        obj.insert("action_over_hbar".into(), json_f64(round_g9(action.over_hbar(cfg))));
        obj.insert("modulus".into(), json_f64(round_g9(sample.modulus())));
        obj.insert("phase".into(), json_f64(round_g9(sample.phase())));
        obj.insert("t".into(), json_f64(round_g9(run.b.t())));
        obj.insert("value_im".into(), json_f64(round_g9(sample.value.im)));
        obj.insert("value_re".into(), json_f64(round_g9(sample.value.re)));
        let coords = |v: &RealVector| {
            serde_json::Value::Array((0..v.dim()).map(|ax| json_f64(round_g9(v[ax]))).collect())
        };
        obj.insert("x".into(), coords(run.b.x()));
        obj.insert("x0".into(), coords(run.b.x0()));
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))
            .expect("kernel summary serializes");
        text.push('\n');
        std::fs::write(dir.join("kernel.json"), text)?;
        Some(dir)
    } else {
        None
    };
    Ok((0, used_dir))
}

/// `--only` accepts full check names plus the obvious short forms.
fn canonical_check(name: &str) -> CliResult<&'static str> {
    let wanted = match name {
        "hj" | "hamilton_jacobi" => "hamilton_jacobi",
        "schrodinger" | "schrodinger_free" => "schrodinger_free",
        "gaussian" | "gaussian_quadrature" => "gaussian_quadrature",
        "three_way" => "three_way",
        "delta" | "delta_limit" => "delta_limit",
        "semigroup" => "semigroup",
        "ansatz" | "ansatz_inversion" => "ansatz_inversion",
        "linear" | "linear_potential" => "linear_potential",
        other => {
            return Err(CliError::usage(format!(
                "unknown check '{other}'; known checks: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    };
    Ok(wanted)
}

fn cmd_verify(s: &Settings, a: &VerifyArgs) -> CliResult<(i32, Option<PathBuf>)> {
    let run = resolve_verify_run(s, a)?;
    let names: Vec<&'static str> = match &run.only {
        Some(list) => list.iter().map(|n| canonical_check(n)).collect::<CliResult<Vec<_>>>()?,
        None => CHECK_NAMES.to_vec(),
    };
    let dir = s.out_dir(false)?;
    let mut failures = Vec::new();
    for name in &names {
        match run_check(name, s, &run) {
            Ok(report) => {
                std::fs::write(dir.join(format!("{name}.json")), report.to_json())?;
                let verdict = if report.pass { "pass" } else { "FAIL" };
                println!("{name:<20} {verdict}  max_residual {}", format_g9(report.max_residual()));
                if !report.pass {
                    failures.push(format!("{name}: max residual {}", format_g9(report.max_residual())));
                }
            }
            Err(e) => {
                println!("{name:<20} FAIL  {e}");
                failures.push(format!("{name}: {e}"));
            }
        }
    }
    if failures.is_empty() {
        println!("all {} checks passed", names.len());
        Ok((0, Some(dir)))
    } else {
        println!("{} of {} checks failed:", failures.len(), names.len());
        for f in &failures {
            println!("  {f}");
        }
        Ok((1, Some(dir)))
    }
}

fn cmd_converge(s: &Settings, a: &ConvergeArgs) -> CliResult<(i32, Option<PathBuf>)> {
    let run = resolve_converge_run(s, a)?;
    let cfg = &s.physics;
    let dir = s.out_dir(false)?;

    let study = convergence_study(&run.b, &run.n_list, &run.spec, cfg).map_err(usage)?;
    let lattice_order = study.fitted_order;
    let mut csv = String::from("N,residual,fitted_order\n");
    for (n, r) in run.n_list.iter().zip(&study.residuals) {
        csv.push_str(&format!(
            "{n},{},{}\n",
            format_g9(*r),
            lattice_order.map(format_g9).unwrap_or_default()
        ));
    }
    std::fs::write(dir.join("lattice_convergence.csv"), csv)?;

    // The ladder regulates the free momentum integral, so its residuals are
    // always measured against the free closed form whatever kernel the lattice
    // half of the study used.
    let mut q = OscillatoryQuadratureConfig::for_boundary(&run.b, cfg);
    if let Some(eps) = &run.epsilons {
        q = q.with_epsilons(eps.clone()).map_err(usage)?;
    }
    if let Some(c) = run.cutoff {
        q = q.with_cutoff(c).map_err(usage)?;
    }
    if let Some(n) = run.samples_per_axis {
        q = q.with_samples_per_axis(n).map_err(usage)?;
    }
    if let Some(tf) = run.taper_fraction {
        q = q.with_taper_fraction(tf).map_err(usage)?;
    }
    let work = (q.samples_per_axis() as f64).powi(cfg.dim() as i32) * q.epsilons().len() as f64;
    if work > 2e8 {
        return Err(CliError::usage(format!(
            "quadrature would evaluate {work:.1e} points; lower --samples-per-axis or --dim"
        )));
    }
    let ladder = momentum_kernel_ladder(&run.b, &q, cfg).map_err(usage)?;
    let reference = free_kernel(&run.b, cfg).value;
    let eps: Vec<f64> = ladder.entries.iter().map(|(e, _)| *e).collect();
    let residuals: Vec<f64> =
        ladder.entries.iter().map(|(_, v)| (v - reference).norm() / reference.norm()).collect();
    let ladder_order = fit_order_loglog(&eps, &residuals);
    let mut csv = String::from("eps,residual,fitted_order\n");
    for (e, r) in eps.iter().zip(&residuals) {
        csv.push_str(&format!(
            "{},{},{}\n",
            format_g9(*e),
            format_g9(*r),
            ladder_order.map(format_g9).unwrap_or_default()
        ));
    }
    std::fs::write(dir.join("epsilon_ladder.csv"), csv)?;

    println!(
        "lattice {} slices, worst residual {}, fitted_order {}",
        run.n_list.len(),
        format_g9(study.max_residual()),
        lattice_order.map(format_g9).unwrap_or_else(|| "n/a".into())
    );
    println!(
        "ladder {} rungs, extrapolated residual {}, fitted_order {}",
        eps.len(),
        format_g9((ladder.value - reference).norm() / reference.norm()),
        ladder_order.map(format_g9).unwrap_or_else(|| "n/a".into())
    );
    Ok((0, Some(dir)))
}

fn cmd_evolve(s: &Settings, a: &EvolveArgs) -> CliResult<(i32, Option<PathBuf>)> {
    let run = resolve_evolve_run(s, a)?;
    let cfg = &s.physics;
    let dir = s.out_dir(true)?;
    let d = cfg.dim();

    let count = (2.0 * run.extent / run.spacing).ceil() as usize + 1;
    let origin_comps: Vec<f64> = (0..d).map(|ax| run.center[ax] - run.extent).collect();
    let origin = RealVector::new(&origin_comps).map_err(usage)?;
    let grid = build_grid(&origin, run.spacing, &vec![count; d]).map_err(usage)?;
    if !packet_well_covered(&grid, &run.center, run.sigma0) {
        eprintln!(
            "warning: grid extent {} is tight for sigma0 = {}; expect taper bias",
            run.extent, run.sigma0
        );
    }
    let psi0 = gaussian_packet(&grid, &run.center, run.sigma0, &run.k0, cfg).map_err(usage)?;
    let norm0 = norm(&psi0);

    let mut summary = String::from("t,width,norm");
    for ax in 0..d {
        summary.push_str(&format!(",k_mean_{ax}"));
    }
    summary.push('\n');

    // Every snapshot evolves from the initial field; errors in one long jump
    // do not compound across snapshots.
    for k in 0..=run.snapshots {
        let tk = run.t * (k as f64 / run.snapshots as f64);
        let psi = evolve_wavefunction(&psi0, tk, &run.spec, cfg).map_err(usage)?;
        let file = std::fs::File::create(dir.join(format!("snapshot_{k:03}.csv")))?;
        psi.write_csv(cfg, std::io::BufWriter::new(file))?;
        let width = packet_width(&psi).map_err(usage)?;
        let kvec = mean_wavevector(&psi).map_err(usage)?;
        summary.push_str(&format_g9(tk));
        summary.push_str(&format!(",{}", format_g9(width)));
        summary.push_str(&format!(",{}", format_g9(norm(&psi) / norm0)));
        for ax in 0..d {
            summary.push_str(&format!(",{}", format_g9(kvec[ax])));
        }
        summary.push('\n');
        if k == run.snapshots {
            println!("final_width {}", format_g9(width));
            println!("final_norm_ratio {}", format_g9(norm(&psi) / norm0));
        }
    }
    std::fs::write(dir.join("summary.csv"), summary)?;
    println!("snapshots {}", run.snapshots + 1);
    Ok((0, Some(dir)))
}
