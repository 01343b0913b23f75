//! CSV, JSON and SVG output, written atomically.
//!
//! Floats are printed as `{:.16e}` (17 significant digits), which round-trips
//! every `f64`. The CSV `wall_time` column and the JSON row `wall_time` are
//! always 0 so that repeated runs produce identical bytes; measured timings go
//! to the JSON `metadata` block only.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use levyhomog_core::harness::ConvergenceTable;
use levyhomog_core::pide::SolveReport;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::config::Format;
use crate::error::AppError;

pub const TABLE_HEADER: [&str; 6] = [
    "epsilon",
    "h",
    "err_sup",
    "err_interior",
    "residual",
    "wall_time",
];

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn json_num(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn table_csv(table: &ConvergenceTable) -> Result<Vec<u8>, AppError> {
    if table.rows.is_empty() {
        return Err(AppError::EmptyTable);
    }
    Ok(csv_bytes(
        &TABLE_HEADER,
        table.rows.iter().map(|r| {
            [r.epsilon, r.h, r.err_sup, r.err_interior, r.residual, 0.0]
                .into_iter()
                .map(fmt_f64)
                .collect()
        }),
    ))
}

/// Run information that is not part of the deterministic output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetadata {
    pub generated_unix: u64,
    pub threads: usize,
    pub total_wall_time: f64,
    pub row_wall_times: Vec<f64>,
}

impl RunMetadata {
    pub fn now(threads: usize, total_wall_time: f64, row_wall_times: Vec<f64>) -> Self {
        let generated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            generated_unix,
            threads,
            total_wall_time,
            row_wall_times,
        }
    }
}

#[derive(Serialize)]
struct TableJson<'a> {
    config: ConfigJson<'a>,
    effective: EffectiveJson,
    rows: Vec<RowJson>,
    metadata: MetaJson,
}

#[derive(Serialize)]
struct ConfigJson<'a> {
    alpha: Box<RawValue>,
    c: &'a str,
    g: &'a str,
    a: Option<&'a str>,
    phi: &'a str,
    far_field: Box<RawValue>,
    refinement: usize,
    margin: Box<RawValue>,
    epsilons: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct EffectiveJson {
    c_bar: Box<RawValue>,
    g_bar: Box<RawValue>,
    theta: Box<RawValue>,
    margin: Box<RawValue>,
}

#[derive(Serialize)]
struct RowJson {
    epsilon: Box<RawValue>,
    h: Box<RawValue>,
    err_sup: Box<RawValue>,
    err_interior: Box<RawValue>,
    residual: Box<RawValue>,
    wall_time: Box<RawValue>,
    failure: Option<String>,
}

#[derive(Serialize)]
struct MetaJson {
    generated_unix: u64,
    threads: usize,
    total_wall_time: Box<RawValue>,
    row_wall_times: Vec<Box<RawValue>>,
}

pub fn table_json(table: &ConvergenceTable, meta: &RunMetadata) -> Result<Vec<u8>, AppError> {
    if table.rows.is_empty() {
        return Err(AppError::EmptyTable);
    }
    let m = &table.metadata;
    let doc = TableJson {
        config: ConfigJson {
            alpha: json_num(m.alpha),
            c: &m.c,
            g: &m.g,
            a: m.a.as_deref(),
            phi: &m.phi,
            far_field: json_num(m.far_field),
            refinement: m.refinement,
            margin: json_num(m.margin),
            epsilons: table.rows.iter().map(|r| json_num(r.epsilon)).collect(),
        },
        effective: EffectiveJson {
            c_bar: json_num(m.c_bar),
            g_bar: json_num(m.g_bar),
            theta: json_num(m.theta),
            margin: json_num(m.cert_margin),
        },
        rows: table
            .rows
            .iter()
            .map(|r| RowJson {
                epsilon: json_num(r.epsilon),
                h: json_num(r.h),
                err_sup: json_num(r.err_sup),
                err_interior: json_num(r.err_interior),
                residual: json_num(r.residual),
                wall_time: json_num(0.0),
                failure: r.failure.clone(),
            })
            .collect(),
        metadata: MetaJson {
            generated_unix: meta.generated_unix,
            threads: meta.threads,
            total_wall_time: json_num(meta.total_wall_time),
            row_wall_times: meta.row_wall_times.iter().map(|t| json_num(*t)).collect(),
        },
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("serializable");
    out.push(b'\n');
    Ok(out)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
/// Zero errors are drawn at this floor on the log axis.
const ERROR_FLOOR: f64 = 1e-17;

/// Log-log plot of `err_sup` and `err_interior` against `ε`.
pub fn table_svg(table: &ConvergenceTable) -> Result<Vec<u8>, AppError> {
    if table.rows.is_empty() {
        return Err(AppError::EmptyTable);
    }
    let series: [(&str, &str, Vec<(f64, f64)>); 2] = [
        (
            "err_sup",
            "#1f77b4",
            table.rows.iter().map(|r| (r.epsilon, r.err_sup)).collect(),
        ),
        (
            "err_interior",
            "#d62728",
            table
                .rows
                .iter()
                .map(|r| (r.epsilon, r.err_interior))
                .collect(),
        ),
    ];
    let logs: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.2.iter())
        .filter(|(_, e)| !e.is_nan())
        .map(|(x, e)| (x.log10(), e.max(ERROR_FLOOR).log10()))
        .collect();
    let bounds = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
        if lo.is_finite() {
            (lo.floor(), hi.ceil().max(lo.floor() + 1.0))
        } else {
            (-2.0, 0.0)
        }
    };
    let (x0, x1) = bounds(&mut logs.iter().map(|p| p.0));
    let (y0, y1) = bounds(&mut logs.iter().map(|p| p.1));
    let px = |lx: f64| LEFT + (lx - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |ly: f64| HEIGHT - BOTTOM - (ly - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">u_eps - u_bar vs eps (alpha = {})</text>"#,
        WIDTH / 2.0,
        table.metadata.alpha
    );
    let (ax0, ax1, ay0, ay1) = (px(x0), px(x1), py(y0), py(y1));
    let _ = writeln!(
        s,
        r#"<path d="M {ax0:.2} {ay1:.2} L {ax0:.2} {ay0:.2} L {ax1:.2} {ay0:.2}" stroke="black" fill="none"/>"#
    );
    for k in (x0 as i32)..=(x1 as i32) {
        let x = px(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{ay0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">1e{k}</text>"#,
            ay0 + 5.0,
            ay0 + 20.0
        );
    }
    for k in (y0 as i32)..=(y1 as i32) {
        let y = py(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{ax0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">1e{k}</text>"#,
            ax0 - 5.0,
            ax0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">epsilon</text>"#,
        (ax0 + ax1) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.2})">sup-norm error</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0
    );
    for (idx, (name, color, pts)) in series.iter().enumerate() {
        let points: Vec<String> = pts
            .iter()
            .filter(|(_, e)| !e.is_nan())
            .map(|(x, e)| format!("{:.2},{:.2}", px(x.log10()), py(e.max(ERROR_FLOOR).log10())))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
            points.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * idx as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{name}</text>"#,
            ax1 - 150.0,
            ax1 - 120.0,
            ax1 - 112.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}

pub fn solution_csv(report: &SolveReport) -> Vec<u8> {
    csv_bytes(
        &["x", "u"],
        report
            .closed_values()
            .into_iter()
            .map(|(x, u)| vec![fmt_f64(x), fmt_f64(u)]),
    )
}

#[derive(Serialize)]
struct SolutionJson {
    sup_residual: Box<RawValue>,
    wall_time: Box<RawValue>,
    unknowns: usize,
    solver: &'static str,
    iterations: usize,
    backward_error: Box<RawValue>,
}

pub fn solution_json(report: &SolveReport) -> Vec<u8> {
    let doc = SolutionJson {
        sup_residual: json_num(report.sup_residual),
        wall_time: json_num(report.wall_time),
        unknowns: report.stats.unknowns,
        solver: match report.stats.solver {
            levyhomog_core::pide::SolverKind::Direct => "direct",
            levyhomog_core::pide::SolverKind::Jacobi => "jacobi",
        },
        iterations: report.stats.iterations,
        backward_error: json_num(report.stats.backward_error),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("serializable");
    out.push(b'\n');
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes every file to a temporary in `dir` first and renames them into place
/// only once all writes succeeded.
pub fn write_atomic(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, AppError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
        tmp.write_all(bytes).map_err(io_err(tmp.path()))?;
        tmp.as_file().sync_all().map_err(io_err(dir))?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| AppError::Io {
            path: target.clone(),
            source: e.error,
        })?;
        written.push(target);
    }
    Ok(written)
}

/// Writes one rendering of `table` to `path`.
pub fn emit(
    table: &ConvergenceTable,
    format: Format,
    path: &Path,
    meta: &RunMetadata,
) -> Result<(), AppError> {
    let bytes = match format {
        Format::Csv => table_csv(table)?,
        Format::Json => table_json(table, meta)?,
        Format::Svg => table_svg(table)?,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| AppError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name"),
        })?
        .to_string_lossy()
        .into_owned();
    write_atomic(dir, &[(name, bytes)])?;
    Ok(())
}
