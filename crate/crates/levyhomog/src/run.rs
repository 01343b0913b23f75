//! Subcommand dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use levyhomog_core::cell::{estimate_d, estimate_d_eikonal, solve_cell_direct, EikonalMethod};
use levyhomog_core::effective::{build_effective, check_subellipticity};
use levyhomog_core::harness::{split_check, ConvergenceTable, SweepPlan};
use levyhomog_core::pide::{self, Mode, ProblemInstance, SolveOptions, SolverKind};
use levyhomog_core::quadrature::LevyQuadrature;
use rayon::prelude::*;

use crate::cli::{Cli, Command};
use crate::config::{load_config, Config, Format, Hamiltonian, Method};
use crate::emit::{self, fmt_f64, RunMetadata};
use crate::error::{AppError, ConfigError};
use crate::selftest;

pub const THREADS_ENV: &str = "LEVYHOMOG_THREADS";

fn io(path: &str) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io {
        path: PathBuf::from(path),
        source,
    }
}

fn torus_quadrature(cfg: &Config) -> Result<LevyQuadrature, AppError> {
    let d = &cfg.discretization;
    Ok(LevyQuadrature::for_torus(
        cfg.problem.alpha,
        d.n_torus,
        d.zeta_div,
        d.truncation,
    )?)
}

fn method_of(cli: &Cli, cfg: &Config) -> Method {
    cli.method.map(Method::from).unwrap_or(cfg.cell.method)
}

fn out_dir(cli: &Cli, cfg: &Config) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
}

/// Executes one subcommand, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), AppError> {
    if cli.command == Command::Selftest {
        let failures = selftest::run(out).map_err(io("<stdout>"))?;
        return if failures == 0 {
            Ok(())
        } else {
            Err(AppError::Checks(failures))
        };
    }
    let path = cli.config.as_deref().ok_or_else(|| ConfigError {
        key: "--config".into(),
        reason: "required by this command".into(),
    })?;
    let cfg = load_config(path)?;
    match cli.command {
        Command::Cell => cell(&cfg, method_of(cli, &cfg), out),
        Command::Effective => effective(&cfg, method_of(cli, &cfg), out),
        Command::Solve => solve(&cfg, &out_dir(cli, &cfg), out),
        Command::Homogenize => {
            let threads = threads_from_env()?;
            let outcome = homogenize(&cfg, method_of(cli, &cfg), cli.debug_tamper, threads)?;
            print_table(&outcome.table, out).map_err(io("<stdout>"))?;
            let failed = outcome
                .table
                .rows
                .iter()
                .filter(|r| r.failure.is_some())
                .count();
            if failed > 0 {
                return Err(AppError::SweepFailed(failed));
            }
            let written = write_outputs(&outcome, &cfg.output.formats, &out_dir(cli, &cfg))?;
            for p in written {
                writeln!(out, "wrote {}", p.display()).map_err(io("<stdout>"))?;
            }
            Ok(())
        }
        Command::SplitCheck => split(&cfg, out),
        Command::Selftest => unreachable!(),
    }
}

fn cell(cfg: &Config, method: Method, out: &mut dyn Write) -> Result<(), AppError> {
    let quad = torus_quadrature(cfg)?;
    let n = cfg.discretization.n_torus;
    let sol = match (cfg.cell.hamiltonian, method) {
        (Hamiltonian::Linear, Method::Direct) => {
            solve_cell_direct(&cfg.coeffs, &quad, cfg.cell.i_value, n)?
        }
        (Hamiltonian::Linear, Method::Discounted) => estimate_d(
            &cfg.coeffs,
            &quad,
            &cfg.cell.schedule,
            cfg.cell.i_value,
            n,
            &cfg.ergodic_options(),
        )?,
        (Hamiltonian::Eikonal, Method::Discounted) => estimate_d_eikonal(
            &cfg.coeffs,
            &quad,
            &cfg.cell.schedule,
            n,
            EikonalMethod::default(),
            &cfg.ergodic_options(),
        )?,
        (Hamiltonian::Eikonal, Method::Direct) => {
            return Err(ConfigError {
                key: "method".into(),
                reason: "the eikonal cell problem is only solved by vanishing discount".into(),
            }
            .into())
        }
    };
    let w = |e| AppError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    writeln!(out, "d={}", fmt_f64(sol.d)).map_err(w)?;
    writeln!(out, "rho={}", fmt_f64(sol.rho)).map_err(w)?;
    for t in &sol.trace {
        writeln!(
            out,
            "lambda={} mean={} min={} max={} gap={}",
            fmt_f64(t.lambda),
            fmt_f64(t.mean),
            fmt_f64(t.min),
            fmt_f64(t.max),
            fmt_f64(t.gap())
        )
        .map_err(w)?;
    }
    Ok(())
}

fn effective(cfg: &Config, method: Method, out: &mut dyn Write) -> Result<(), AppError> {
    let quad = torus_quadrature(cfg)?;
    let op = build_effective(
        &cfg.coeffs,
        &quad,
        &cfg.cell.i_samples,
        cfg.discretization.n_torus,
        &cfg.cell_method(method),
    )?;
    let w = io("<stdout>");
    let mut text = String::new();
    for (k, v) in op.report() {
        text.push_str(&format!("{k}={}\n", fmt_f64(v)));
    }
    text.push_str(&format!(
        "slope_check={}\n",
        op.theta_certificate.slope_check
    ));
    out.write_all(text.as_bytes()).map_err(w)?;

    let pairs: Vec<(f64, f64)> = cfg
        .cell
        .i_samples
        .iter()
        .flat_map(|&i| [0.5, 1.0, 2.0].map(|ip| (i, ip)))
        .collect();
    let report = check_subellipticity(&op, cfg.coeffs.c0(), &pairs, 1e-8)?;
    writeln!(
        out,
        "subellipticity_worst_margin={}",
        fmt_f64(report.worst_margin)
    )
    .map_err(io("<stdout>"))?;
    Ok(())
}

fn solve(cfg: &Config, dir: &Path, out: &mut dyn Write) -> Result<(), AppError> {
    let epsilon = cfg.problem.epsilon;
    let sweep = cfg.sweep_config(Method::Direct);
    let quad = sweep.quadrature(cfg.problem.alpha, epsilon)?;
    let p = ProblemInstance::new(
        cfg.coeffs.clone(),
        cfg.problem.x_lo,
        cfg.problem.x_hi,
        quad,
        Mode::Oscillatory { epsilon },
    )?;
    let start = Instant::now();
    let mut report = pide::solve(&p, &SolveOptions::default())?;
    report.wall_time = start.elapsed().as_secs_f64();

    let mut files = Vec::new();
    for f in &cfg.output.formats {
        match f {
            Format::Csv => files.push(("solution.csv".to_string(), emit::solution_csv(&report))),
            Format::Json => files.push(("solution.json".to_string(), emit::solution_json(&report))),
            Format::Svg => {}
        }
    }
    let written = emit::write_atomic(dir, &files)?;
    let solver = match report.stats.solver {
        SolverKind::Direct => "direct",
        SolverKind::Jacobi => "jacobi",
    };
    let mut text = format!(
        "epsilon={}\nh={}\nunknowns={}\nsolver={solver}\niterations={}\nsup_residual={}\nwall_time={:.3}\n",
        fmt_f64(epsilon),
        fmt_f64(p.grid().h),
        report.stats.unknowns,
        report.stats.iterations,
        fmt_f64(report.sup_residual),
        report.wall_time,
    );
    for p in written {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    out.write_all(text.as_bytes()).map_err(io("<stdout>"))
}

fn split(cfg: &Config, out: &mut dyn Write) -> Result<(), AppError> {
    let quad = torus_quadrature(cfg)?;
    let upper = cfg.discretization.truncation.min(1.0);
    let nus: Vec<f64> = [0.1, 0.25, 0.5]
        .into_iter()
        .filter(|&nu| nu >= quad.zeta() && nu <= upper)
        .collect();
    if nus.is_empty() {
        return Err(ConfigError {
            key: "zeta_rule".into(),
            reason: "no split radius in [zeta, min(1, R)]".into(),
        }
        .into());
    }
    let rows = split_check(&quad, cfg.discretization.n_torus, &[1, 2, 4], &nus, 1e-8)?;
    let mut text =
        String::from("k,nu,point,delta,i_h,identity_error,lower_slack,upper_slack,pass\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(r.nu),
            r.point,
            fmt_f64(r.delta),
            fmt_f64(r.i_h),
            fmt_f64(r.identity_error),
            fmt_f64(r.lower_slack),
            fmt_f64(r.upper_slack),
            r.pass
        ));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    text.push_str(&format!(
        "{} of {} split checks passed\n",
        rows.len() - failed,
        rows.len()
    ));
    out.write_all(text.as_bytes()).map_err(io("<stdout>"))?;
    if failed == 0 {
        Ok(())
    } else {
        Err(AppError::Checks(failed))
    }
}

/// Thread cap from the environment; `None` leaves the choice to rayon.
pub fn threads_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(_) => Err(ConfigError {
            key: THREADS_ENV.into(),
            reason: "not valid unicode".into(),
        }),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(ConfigError {
                key: THREADS_ENV.into(),
                reason: format!("expected a positive integer, got `{v}`"),
            }),
        },
    }
}

pub struct HomogenizeOutcome {
    pub table: ConvergenceTable,
    pub meta: RunMetadata,
}

/// Comparison gate followed by the ε-sweep, rows solved in parallel.
pub fn homogenize(
    cfg: &Config,
    method: Method,
    tamper: bool,
    threads: Option<usize>,
) -> Result<HomogenizeOutcome, AppError> {
    let start = Instant::now();
    let plan = SweepPlan::new(&cfg.coeffs, &cfg.sweep_config(method))?;
    plan.comparison_gate(tamper)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| ConfigError {
        key: THREADS_ENV.into(),
        reason: e.to_string(),
    })?;
    let rows = pool.install(|| {
        plan.config()
            .epsilons
            .par_iter()
            .map(|&eps| {
                let t = Instant::now();
                let mut row = plan.row(eps);
                row.wall_time = t.elapsed().as_secs_f64();
                row
            })
            .collect::<Vec<_>>()
    });
    let table = plan.finish(rows);
    let row_times = table.rows.iter().map(|r| r.wall_time).collect();
    let meta = RunMetadata::now(
        pool.current_num_threads(),
        start.elapsed().as_secs_f64(),
        row_times,
    );
    Ok(HomogenizeOutcome { table, meta })
}

/// Renders the requested formats and writes them all-or-nothing.
pub fn write_outputs(
    outcome: &HomogenizeOutcome,
    formats: &[Format],
    dir: &Path,
) -> Result<Vec<PathBuf>, AppError> {
    let mut files = Vec::new();
    for f in formats {
        let (name, bytes) = match f {
            Format::Csv => ("convergence.csv", emit::table_csv(&outcome.table)?),
            Format::Json => (
                "convergence.json",
                emit::table_json(&outcome.table, &outcome.meta)?,
            ),
            Format::Svg => ("convergence.svg", emit::table_svg(&outcome.table)?),
        };
        files.push((name.to_string(), bytes));
    }
    emit::write_atomic(dir, &files)
}

pub fn print_table(table: &ConvergenceTable, out: &mut dyn Write) -> std::io::Result<()> {
    let m = &table.metadata;
    writeln!(
        out,
        "c_bar={} g_bar={} margin={}",
        fmt_f64(m.c_bar),
        fmt_f64(m.g_bar),
        fmt_f64(m.cert_margin)
    )?;
    writeln!(
        out,
        "{:>10} {:>12} {:>12} {:>12} {:>12} {:>9}",
        "epsilon", "h", "err_sup", "err_interior", "residual", "time_s"
    )?;
    for r in &table.rows {
        match &r.failure {
            None => writeln!(
                out,
                "{:>10.6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>9.3}",
                r.epsilon, r.h, r.err_sup, r.err_interior, r.residual, r.wall_time
            )?,
            Some(f) => writeln!(out, "{:>10.6} {:>12.4e} FAILED: {f}", r.epsilon, r.h)?,
        }
    }
    Ok(())
}
