//! Report artifacts: CSV tables, a fixed-width text table, SVG line plots
//! and SVG field heatmaps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use romforge_core::grid::GridSpec;
use romforge_core::report::ErrorSeries;

use crate::config::formulation_name;
use crate::csvio::{sig4, write_errors, write_sweep};
use crate::error::{Error, Result};
use crate::sweep::{SweepResult, PROJECTION};

const PALETTE: [RGBColor; 6] = [
    RGBColor(0, 0, 0),
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
];

fn plot_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        msg: format!("plot: {e}"),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// One named curve.
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Line plot of `curves`; `log_y` switches the y axis to log scale, where
/// nonpositive points are dropped.
pub fn line_plot(path: &Path, title: &str, x_label: &str, y_label: &str, curves: &[Curve], log_y: bool) -> Result<()> {
    let finite = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0);
    let pts: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter().copied().filter(finite))
        .collect();
    if pts.is_empty() {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            msg: "nothing to plot".into(),
        });
    }
    let (mut x0, mut x1) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if log_y {
        y0 /= 1.5;
        y1 *= 1.5;
    } else {
        let pad = if y1 > y0 {
            0.05 * (y1 - y0)
        } else {
            0.5 * y0.abs().max(1.0)
        };
        y0 = (y0 - pad).min(0.0f64.max(y0 - pad));
        y1 += pad;
    }
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(70);
    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart.map_err(|e| plot_err(path, e))?;
            chart
                .configure_mesh()
                .x_desc(x_label)
                .y_desc(y_label)
                .draw()
                .map_err(|e| plot_err(path, e))?;
            for (k, c) in curves.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let points: Vec<(f64, f64)> = c.points.iter().copied().filter(finite).collect();
                chart
                    .draw_series(LineSeries::new(points.clone(), color.stroke_width(2)))
                    .map_err(|e| plot_err(path, e))?
                    .label(c.label.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
                chart
                    .draw_series(points.into_iter().map(|p| Circle::new(p, 3, color.filled())))
                    .map_err(|e| plot_err(path, e))?;
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| plot_err(path, e))?;
        }};
    }
    if log_y {
        draw!(builder.build_cartesian_2d(x0..x1, (y0..y1).log_scale()));
    } else {
        draw!(builder.build_cartesian_2d(x0..x1, y0..y1));
    }
    root.present().map_err(|e| plot_err(path, e))
}

/// Blue, white, red for signed data; white to dark blue when `signed` is false.
fn colormap(t: f64, signed: bool) -> RGBColor {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: (f64, f64, f64), b: (f64, f64, f64), s: f64| {
        RGBColor(
            (a.0 + (b.0 - a.0) * s).round() as u8,
            (a.1 + (b.1 - a.1) * s).round() as u8,
            (a.2 + (b.2 - a.2) * s).round() as u8,
        )
    };
    if signed {
        if t < 0.5 {
            lerp((33.0, 102.0, 172.0), (247.0, 247.0, 247.0), t * 2.0)
        } else {
            lerp((247.0, 247.0, 247.0), (178.0, 24.0, 43.0), t * 2.0 - 1.0)
        }
    } else {
        lerp((255.0, 255.0, 217.0), (8.0, 29.0, 88.0), t)
    }
}

/// Two fields side by side on a shared color scale; solid cells are grey.
pub fn heatmap_pair(
    path: &Path,
    grid: &GridSpec,
    title: &str,
    left: (&str, &[f64]),
    right: (&str, &[f64]),
    signed: bool,
) -> Result<()> {
    let n = grid.n_cells();
    if left.1.len() != n || right.1.len() != n {
        return Err(Error::Config(format!("heatmap fields must have {n} cells")));
    }
    let fluid = |c: usize| grid.is_fluid(c);
    let vals = left
        .1
        .iter()
        .chain(right.1)
        .enumerate()
        .filter(|(k, _)| fluid(k % n))
        .map(|(_, v)| *v);
    let (lo, hi) = vals.fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if signed {
        let m = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        (-m, m)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    };
    let cell = 10u32;
    let (w, h) = (grid.nx as u32 * cell, grid.ny as u32 * cell);
    let root = SVGBackend::new(path, (2 * w + 60, h + 80)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let style = ("sans-serif", 16).into_font();
    root.draw_text(title, &style.clone().into_text_style(&root), (20, 8))
        .map_err(|e| plot_err(path, e))?;
    for (panel, (label, field)) in [left, right].into_iter().enumerate() {
        let ox = 20 + panel as i32 * (w as i32 + 20);
        let oy = 40;
        root.draw_text(label, &style.clone().into_text_style(&root), (ox, oy + h as i32 + 10))
            .map_err(|e| plot_err(path, e))?;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let c = grid.idx(i, j);
                let color = if fluid(c) {
                    colormap((field[c] - lo) / (hi - lo), signed)
                } else {
                    RGBColor(160, 160, 160)
                };
                // Row 0 is the bottom of the domain.
                let x = ox + (i as u32 * cell) as i32;
                let y = oy + ((grid.ny - 1 - j) as u32 * cell) as i32;
                root.draw(&Rectangle::new(
                    [(x, y), (x + cell as i32, y + cell as i32)],
                    color.filled(),
                ))
                .map_err(|e| plot_err(path, e))?;
            }
        }
    }
    let scale = format!("range [{}, {}]", sig4(lo), sig4(hi));
    root.draw_text(&scale, &style.into_text_style(&root), (20 + w as i32 + 20, 8))
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))
}

/// Aligned text table of the sweep integrals, four significant digits.
pub fn sweep_table(s: &SweepResult) -> String {
    let mut out = String::new();
    for f in s.formulations() {
        let _ = writeln!(
            out,
            "{}: integrated errors (int eps_u dt / int eps_p dt)",
            formulation_name(f)
        );
        let _ = write!(out, "{:<16}", "configuration");
        for n in &s.ns {
            let _ = write!(out, "{:>22}", format!("n={n}"));
        }
        out.push('\n');
        for label in SweepResult::labels() {
            let _ = write!(out, "{label:<16}");
            for &n in &s.ns {
                let cell = match s.get(f, n, label) {
                    Some(c) if c.failure.is_none() => format!("{} / {}", sig4(c.iu), sig4(c.ip)),
                    Some(_) => "failed".into(),
                    None => "-".into(),
                };
                let _ = write!(out, "{cell:>22}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Writes `sweep.csv`, `sweep.txt` and one semi-log plot per formulation and
/// field. Returns the files written.
pub fn emit_sweep(s: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if s.cells.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    ensure_dir(dir)?;
    let mut files = vec![dir.join("sweep.csv"), dir.join("sweep.txt")];
    write_sweep(&files[0], s)?;
    std::fs::write(&files[1], sweep_table(s)).map_err(|e| Error::io(&files[1], e))?;
    for f in s.formulations() {
        for (field, pick) in [("u", 0usize), ("p", 1)] {
            let curves: Vec<Curve> = SweepResult::labels()
                .iter()
                .map(|&label| Curve {
                    label: label.to_string(),
                    points: s
                        .ns
                        .iter()
                        .filter_map(|&n| s.get(f, n, label))
                        .filter(|c| c.failure.is_none())
                        .map(|c| (c.n as f64, if pick == 0 { c.iu } else { c.ip }))
                        .collect(),
                })
                .filter(|c| !c.points.is_empty() || c.label == PROJECTION)
                .collect();
            let path = dir.join(format!("sweep_{}_{field}.svg", formulation_name(f)));
            line_plot(
                &path,
                &format!("{}: integrated eps_{field}", formulation_name(f)),
                "modes n",
                &format!("int eps_{field} dt"),
                &curves,
                true,
            )?;
            files.push(path);
        }
    }
    Ok(files)
}

/// Writes `<stem>_<label>.csv` per series and linear-axis plots
/// `<stem>_u.svg`, `<stem>_p.svg`.
pub fn emit_series(series: &[(String, ErrorSeries)], dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    if series.is_empty() || series.iter().any(|(_, s)| s.is_empty()) {
        return Err(Error::Config("empty error series".into()));
    }
    ensure_dir(dir)?;
    let mut files = Vec::new();
    for (label, s) in series {
        let path = dir.join(format!("{stem}_{label}.csv"));
        write_errors(&path, s)?;
        files.push(path);
    }
    for field in ["u", "p"] {
        let curves: Vec<Curve> = series
            .iter()
            .map(|(label, s)| Curve {
                label: label.clone(),
                points: s
                    .times
                    .iter()
                    .zip(if field == "u" { &s.eps_u } else { &s.eps_p })
                    .map(|(&t, &e)| (t, e))
                    .collect(),
            })
            .collect();
        let path = dir.join(format!("{stem}_{field}.svg"));
        line_plot(
            &path,
            &format!("eps_{field} over time"),
            "t",
            &format!("eps_{field} [%]"),
            &curves,
            false,
        )?;
        files.push(path);
    }
    Ok(files)
}
