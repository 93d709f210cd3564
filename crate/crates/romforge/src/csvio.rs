//! CSV tables: coefficient series, trajectories, error series and sweeps.
//! Floats are written with 17 significant digits, so a re-read is exact.

use std::path::Path;

use nalgebra::DMatrix;
use romforge_core::report::ErrorSeries;
use romforge_core::romsolve::{Formulation, RomTrajectory};
use romforge_core::snapshots::CoeffSeries;

use crate::config::{formulation_name, parse_formulation};
use crate::error::{Error, Result};
use crate::sweep::{SweepCell, SweepResult};

/// Shortest exact form: 17 significant digits in scientific notation.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Four significant digits, fixed-point when the magnitude allows.
pub fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.000".into();
    }
    let rounded: f64 = format!("{x:.3e}").parse().unwrap_or(x);
    let e = rounded.abs().log10().floor() as i32;
    if (-4..=6).contains(&e) {
        format!("{rounded:.*}", (3 - e).max(0) as usize)
    } else {
        format!("{rounded:.3e}")
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => csv_err(path, e),
    })?;
    let header = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| csv_err(path, format!("row {line}: cannot parse {s:?}")))
}

fn columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// Count of leading header names `prefix1, prefix2, ...` from `start`.
fn count_prefixed(header: &[String], start: usize, prefix: &str) -> usize {
    header[start..]
        .iter()
        .take_while(|h| h.strip_prefix(prefix).is_some_and(|d| d.parse::<usize>().is_ok()))
        .count()
}

pub fn write_coeffs(path: &Path, s: &CoeffSeries) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(columns("c", s.values.ncols()))
        .collect();
    write_rows(
        path,
        &header,
        (0..s.times.len()).map(|j| {
            std::iter::once(full(s.times[j]))
                .chain(s.values.row(j).iter().map(|&x| full(x)))
                .collect()
        }),
    )
}

pub fn read_coeffs(path: &Path) -> Result<CoeffSeries> {
    let (header, rows) = read_rows(path)?;
    if header.first().map(String::as_str) != Some("t") {
        return Err(csv_err(path, "header must start with t"));
    }
    let n = count_prefixed(&header, 1, "c");
    if n + 1 != header.len() {
        return Err(csv_err(path, "expected header t,c1,...,cn"));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut values = DMatrix::zeros(rows.len(), n);
    for (j, row) in rows.iter().enumerate() {
        times.push(num(path, j + 2, &row[0])?);
        for i in 0..n {
            values[(j, i)] = num(path, j + 2, &row[i + 1])?;
        }
    }
    Ok(CoeffSeries::new(times, values)?)
}

pub fn write_trajectory(path: &Path, t: &RomTrajectory) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(columns("a", t.a.ncols()))
        .chain(columns("b", t.b.ncols()))
        .chain(columns("g", t.g.ncols()))
        .chain(["newton_iters".to_string(), "residual".to_string()])
        .collect();
    write_rows(
        path,
        &header,
        (0..t.len()).map(|j| {
            std::iter::once(full(t.times[j]))
                .chain(t.a.row(j).iter().map(|&x| full(x)))
                .chain(t.b.row(j).iter().map(|&x| full(x)))
                .chain(t.g.row(j).iter().map(|&x| full(x)))
                .chain([t.newton_iters[j].to_string(), full(t.residuals[j])])
                .collect()
        }),
    )
}

/// Reads a trajectory; the failure status is not stored in the file.
pub fn read_trajectory(path: &Path) -> Result<RomTrajectory> {
    let (header, rows) = read_rows(path)?;
    let r = count_prefixed(&header, 1, "a");
    let q = count_prefixed(&header, 1 + r, "b");
    let n = count_prefixed(&header, 1 + r + q, "g");
    let expect = 1 + r + q + n + 2;
    if header.first().map(String::as_str) != Some("t")
        || header.len() != expect
        || header[expect - 2] != "newton_iters"
        || header[expect - 1] != "residual"
    {
        return Err(csv_err(
            path,
            "expected header t,a1..ar,b1..bq,g1..gn,newton_iters,residual",
        ));
    }
    let m = rows.len();
    let mut t = RomTrajectory {
        times: Vec::with_capacity(m),
        a: DMatrix::zeros(m, r),
        b: DMatrix::zeros(m, q),
        g: DMatrix::zeros(m, n),
        newton_iters: Vec::with_capacity(m),
        residuals: Vec::with_capacity(m),
        failure: None,
    };
    for (j, row) in rows.iter().enumerate() {
        let line = j + 2;
        t.times.push(num(path, line, &row[0])?);
        for i in 0..r {
            t.a[(j, i)] = num(path, line, &row[1 + i])?;
        }
        for i in 0..q {
            t.b[(j, i)] = num(path, line, &row[1 + r + i])?;
        }
        for i in 0..n {
            t.g[(j, i)] = num(path, line, &row[1 + r + q + i])?;
        }
        t.newton_iters.push(num(path, line, &row[expect - 2])?);
        t.residuals.push(num(path, line, &row[expect - 1])?);
    }
    Ok(t)
}

/// `t,eps_u,eps_p` in percent.
pub fn write_errors(path: &Path, s: &ErrorSeries) -> Result<()> {
    if s.is_empty() {
        return Err(csv_err(path, "empty error series"));
    }
    write_rows(
        path,
        &["t".into(), "eps_u".into(), "eps_p".into()],
        (0..s.len()).map(|j| vec![full(s.times[j]), full(s.eps_u[j]), full(s.eps_p[j])]),
    )
}

pub fn read_errors(path: &Path, d: usize) -> Result<ErrorSeries> {
    let (header, rows) = read_rows(path)?;
    if header != ["t", "eps_u", "eps_p"] {
        return Err(csv_err(path, "expected header t,eps_u,eps_p"));
    }
    let mut s = ErrorSeries {
        times: Vec::new(),
        eps_u: Vec::new(),
        eps_p: Vec::new(),
        d,
        dt: 0.0,
    };
    for (j, row) in rows.iter().enumerate() {
        s.times.push(num(path, j + 2, &row[0])?);
        s.eps_u.push(num(path, j + 2, &row[1])?);
        s.eps_p.push(num(path, j + 2, &row[2])?);
    }
    if s.times.len() > 1 {
        s.dt = s.times[1] - s.times[0];
    }
    Ok(s)
}

const SWEEP_HEADER: [&str; 6] = ["formulation", "n", "configuration", "int_eps_u", "int_eps_p", "failure"];

/// Full-precision sweep table, one row per cell. Failed cells have empty
/// integrals and the failure message.
pub fn write_sweep(path: &Path, s: &SweepResult) -> Result<()> {
    let header: Vec<String> = SWEEP_HEADER.iter().map(|h| h.to_string()).collect();
    write_rows(
        path,
        &header,
        s.cells.iter().map(|c| {
            let (iu, ip) = match c.failure {
                None => (full(c.iu), full(c.ip)),
                Some(_) => (String::new(), String::new()),
            };
            vec![
                formulation_name(c.formulation).to_string(),
                c.n.to_string(),
                c.label.clone(),
                iu,
                ip,
                c.failure.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn read_sweep(path: &Path) -> Result<SweepResult> {
    let (header, rows) = read_rows(path)?;
    if header != SWEEP_HEADER {
        return Err(csv_err(path, format!("expected header {}", SWEEP_HEADER.join(","))));
    }
    let mut cells = Vec::with_capacity(rows.len());
    let mut ns = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        let line = j + 2;
        let formulation: Formulation =
            parse_formulation(&row[0]).ok_or_else(|| csv_err(path, format!("row {line}: bad formulation")))?;
        let n: usize = num(path, line, &row[1])?;
        if !ns.contains(&n) {
            ns.push(n);
        }
        let failure = (!row[5].is_empty()).then(|| row[5].clone());
        let (iu, ip) = if failure.is_some() {
            (f64::NAN, f64::NAN)
        } else {
            (num(path, line, &row[3])?, num(path, line, &row[4])?)
        };
        cells.push(SweepCell {
            formulation,
            n,
            label: row[2].clone(),
            iu,
            ip,
            failure,
        });
    }
    ns.sort_unstable();
    Ok(SweepResult { ns, cells })
}
