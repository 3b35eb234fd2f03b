//! Profile and series file I/O.
//!
//! Profiles are plain text: `#` comment headers followed by rows of two or
//! three whitespace-separated columns (angle, intensity, optional measured
//! error). Angles must be strictly increasing and uniformly spaced; the
//! canonical internal unit is radians, files default to degrees. Values are
//! printed with 17 significant digits so a write/read round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use xrdenoise_core::grid::{AngularGrid, IntensityProfile};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleUnit {
    Degrees,
    Radians,
}

impl AngleUnit {
    pub fn to_radians(self, v: f64) -> f64 {
        match self {
            AngleUnit::Degrees => v.to_radians(),
            AngleUnit::Radians => v,
        }
    }

    pub fn from_radians(self, v: f64) -> f64 {
        match self {
            AngleUnit::Degrees => v.to_degrees(),
            AngleUnit::Radians => v,
        }
    }
}

/// Relative tolerance for the uniform-spacing check.
const GRID_TOL: f64 = 1e-9;

pub fn read_profile(path: &Path, unit: AngleUnit) -> Result<IntensityProfile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut angles: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut sigmas: Vec<f64> = Vec::new();
    let mut columns: Option<usize> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(CliError::Data(format!(
                "{}:{}: expected 2 or 3 columns, found {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        if let Some(c) = columns {
            if c != fields.len() {
                return Err(CliError::Data(format!(
                    "{}:{}: inconsistent column count",
                    path.display(),
                    lineno + 1
                )));
            }
        } else {
            columns = Some(fields.len());
        }
        let parse = |s: &str, what: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|_| {
                CliError::Data(format!(
                    "{}:{}: cannot parse {what} `{s}`",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let angle = unit.to_radians(parse(fields[0], "angle")?);
        let value = parse(fields[1], "intensity")?;
        if value < 0.0 {
            return Err(CliError::Data(format!(
                "{}:{}: negative intensity {value}",
                path.display(),
                lineno + 1
            )));
        }
        angles.push(angle);
        values.push(value);
        if fields.len() == 3 {
            sigmas.push(parse(fields[2], "sigma")?);
        }
    }

    let n = angles.len();
    if n < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least 2 data rows, found {n}",
            path.display()
        )));
    }
    let first = angles[0];
    let last = angles[n - 1];
    if last <= first {
        return Err(CliError::Data(format!(
            "{}: angles must be strictly increasing",
            path.display()
        )));
    }
    let dtheta = (last - first) / (n - 1) as f64;
    let scale = first.abs().max(last.abs());
    for (i, &a) in angles.iter().enumerate() {
        let expect = first + i as f64 * dtheta;
        if (a - expect).abs() > GRID_TOL * scale {
            return Err(CliError::Data(format!(
                "{}: non-uniform angular grid at row {} ({} vs expected {})",
                path.display(),
                i + 1,
                a,
                expect
            )));
        }
        if i > 0 && a <= angles[i - 1] {
            return Err(CliError::Data(format!(
                "{}: angles must be strictly increasing (row {})",
                path.display(),
                i + 1
            )));
        }
    }

    let grid = AngularGrid::new(first, dtheta, n)?;
    let sigma = if sigmas.is_empty() { None } else { Some(sigmas) };
    Ok(IntensityProfile::new(grid, values, sigma)?)
}

pub fn write_profile(
    path: &Path,
    profile: &IntensityProfile,
    unit: AngleUnit,
    header: &[String],
) -> Result<(), CliError> {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let grid = profile.grid();
    for (k, v) in profile.values().iter().enumerate() {
        let angle = unit.from_radians(grid.theta(k));
        match profile.sigma() {
            Some(s) => {
                let _ = writeln!(out, "{angle:.16e} {v:.16e} {:.16e}", s[k]);
            }
            None => {
                let _ = writeln!(out, "{angle:.16e} {v:.16e}");
            }
        }
    }
    fs::write(path, out).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Two-column numeric series (e.g. frequency / singular value pairs).
pub fn write_series(path: &Path, rows: &[(f64, f64)], header: &[String]) -> Result<(), CliError> {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    for (x, y) in rows {
        let _ = writeln!(out, "{x:.16e} {y:.16e}");
    }
    fs::write(path, out).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Minimal static SVG scatter with logarithmic y axis; marks the selected
/// cutoff frequency when given.
pub fn write_svg_scatter(
    path: &Path,
    rows: &[(f64, f64)],
    cutoff: Option<f64>,
    title: &str,
) -> Result<(), CliError> {
    const W: f64 = 640.0;
    const H: f64 = 440.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;

    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let xmax = xs.iter().cloned().fold(1.0f64, f64::max) * 1.05;
    let ymax = ys.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let ymin_pos = ys
        .iter()
        .cloned()
        .filter(|y| *y > 0.0)
        .fold(ymax, f64::min)
        .min(ymax / 10.0);
    let (ly0, ly1) = (ymin_pos.log10().floor(), ymax.log10().ceil());

    let px = |x: f64| ML + (x / xmax) * (W - ML - MR);
    let py = |y: f64| {
        let ly = y.max(ymin_pos / 10.0).log10().clamp(ly0, ly1);
        MT + (ly1 - ly) / (ly1 - ly0).max(1.0) * (H - MT - MB)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{title}</text>"#,
        W / 2.0
    );
    // Axes.
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>"#,
        H - MB
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - MB,
        W - MR,
        H - MB
    );
    // Log ticks.
    let mut d = ly0;
    while d <= ly1 + 0.5 {
        let y = py(10f64.powf(d));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{ML}" y2="{y}" stroke="black"/>"#,
            ML - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">1e{}</text>"#,
            ML - 8.0,
            y + 4.0,
            d as i64
        );
        d += 1.0;
    }
    // X ticks at quarters.
    for q in 0..=4 {
        let x = xmax * q as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            px(x),
            H - MB,
            px(x),
            H - MB + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.0}</text>"#,
            px(x),
            H - MB + 18.0,
            x
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">frequency (1/rad)</text>"#,
        (ML + W - MR) / 2.0,
        H - 12.0
    );
    if let Some(fc) = cutoff {
        let x = px(fc);
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{MT}" x2="{x}" y2="{}" stroke="firebrick" stroke-dasharray="5,4"/>"#,
            H - MB
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="firebrick">cutoff {fc:.1}</text>"#,
            x + 5.0,
            MT + 12.0
        );
    }
    for (x, y) in rows {
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="3.5" fill="steelblue" fill-opacity="0.8"/>"#,
            px(*x),
            py(*y)
        );
    }
    let _ = writeln!(s, "</svg>");
    fs::write(path, s).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
