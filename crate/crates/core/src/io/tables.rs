use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::equilibrium::ResidualReport;
use crate::error::{BandError, Result};
use crate::frame::FrameState;
use crate::grid::{ArcGrid, Closure, ShapeProfile};

use super::fmt_f64;

pub const PROFILE_COLUMNS: [&str; 3] = ["s", "K", "W"];

pub const FRAME_COLUMNS: [&str; 13] = [
    "s", "rx", "ry", "rz", "tx", "ty", "tz", "nx", "ny", "nz", "bx", "by", "bz",
];

pub const RESIDUAL_COLUMNS: [&str; 10] = [
    "s",
    "res1",
    "res2",
    "C_pointwise",
    "T",
    "N",
    "B",
    "Nfrak",
    "Tfrak",
    "Bfrak",
];

/// Relative tolerance on the spacing of the `s` column.
const UNIFORM_TOL: f64 = 1e-9;

fn csv_err(e: csv::Error) -> BandError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => BandError::Io(io.to_string()),
        kind => BandError::Parse {
            line,
            reason: format!("{kind:?}"),
        },
    }
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| BandError::Io(format!("{}: {e}", path.display())))
}

/// Writes columns `s, K, W`, one row per node.
pub fn write_profile(path: &Path, profile: &ShapeProfile) -> Result<()> {
    let g = profile.grid();
    let rows = (0..profile.len()).map(|i| vec![g.s(i), profile.k()[i], profile.w()[i]]);
    write_rows(create(path)?, &PROFILE_COLUMNS, rows)
}

pub fn read_profile(path: &Path, closure: Closure) -> Result<ShapeProfile> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| BandError::Io(format!("{}: {e}", path.display())))?;
    parse_profile(&text, closure)
}

/// Parses a profile table. Columns are found by header name; `s` must start
/// at zero and be uniformly spaced. The band length is recovered as the
/// double `L` with `L / N` equal to the spacing.
pub fn parse_profile(text: &str, closure: Closure) -> Result<ShapeProfile> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| BandError::Parse {
            line: 1,
            reason: format!("missing column `{name}`"),
        })
    };
    let (cs, ck, cw) = (column("s")?, column("K")?, column("W")?);

    let mut s = Vec::new();
    let mut k = Vec::new();
    let mut w = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |c: usize, name: &str| -> Result<f64> {
            let raw = record.get(c).ok_or_else(|| BandError::Parse {
                line,
                reason: format!("missing value for `{name}`"),
            })?;
            raw.parse::<f64>().map_err(|_| BandError::Parse {
                line,
                reason: format!("`{name}` is not a number: {raw:?}"),
            })
        };
        s.push(field(cs, "s")?);
        k.push(field(ck, "K")?);
        w.push(field(cw, "W")?);
        lines.push(line);
    }
    if s.len() < 2 {
        return Err(BandError::Parse {
            line: lines.last().copied().unwrap_or(1),
            reason: format!("need at least two rows, got {}", s.len()),
        });
    }
    if s[0] != 0.0 {
        return Err(BandError::Parse {
            line: lines[0],
            reason: format!("first arclength must be 0, got {}", s[0]),
        });
    }
    let h = s[1];
    if !(h > 0.0 && h.is_finite()) {
        return Err(BandError::Parse {
            line: lines[1],
            reason: format!("arclength must increase, got spacing {h}"),
        });
    }
    for (i, (&si, &line)) in s.iter().zip(&lines).enumerate() {
        let expected = i as f64 * h;
        if (si - expected).abs() > UNIFORM_TOL * expected.max(h) {
            return Err(BandError::Parse {
                line,
                reason: format!("non-uniform arclength: expected {expected}, got {si}"),
            });
        }
    }
    let n = s.len();
    let grid = ArcGrid::new(length_for_spacing(h, n), n)?;
    ShapeProfile::new(grid, closure, k, w)
}

/// Double `L` near `h * n` whose quotient `L / n` rounds back to `h`.
fn length_for_spacing(h: f64, n: usize) -> f64 {
    let nf = n as f64;
    let guess = h * nf;
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..8 {
        if lo / nf == h {
            return lo;
        }
        if hi / nf == h {
            return hi;
        }
        lo = lo.next_down();
        hi = hi.next_up();
    }
    guess
}

/// Writes `N + 1` rows (`s = 0 .. L`) of position and frame components.
pub fn write_frames(path: &Path, grid: &ArcGrid, frames: &[FrameState]) -> Result<()> {
    let rows = frames.iter().enumerate().map(|(i, f)| {
        let mut row = vec![grid.s(i)];
        for v in [f.r, f.t, f.n, f.b] {
            row.extend_from_slice(&[v.x, v.y, v.z]);
        }
        row
    });
    write_rows(create(path)?, &FRAME_COLUMNS, rows)
}

pub fn write_residuals(path: &Path, report: &ResidualReport) -> Result<()> {
    let st = &report.stress;
    let rows = (0..report.s.len()).map(|i| {
        vec![
            report.s[i],
            report.res1[i],
            report.res2[i],
            report.c_pointwise[i],
            st.t[i],
            st.n[i],
            st.b[i],
            st.n_frak[i],
            st.t_frak[i],
            st.b_frak[i],
        ]
    });
    write_rows(create(path)?, &RESIDUAL_COLUMNS, rows)
}
