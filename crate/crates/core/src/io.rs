//! CSV curve files and atomic file output.
//!
//! A curve file has the header `x,y` followed by one vertex per row. Closed
//! curves close implicitly (last row connects to the first). Open polylines
//! carry the comment line `# open` directly after the header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DiscreteCurve, PlanePoint, Polyline};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty string for `None`, otherwise [`fmt_f64`].
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes `contents` to a sibling temporary file, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, contents).map_err(|e| Error::io(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

/// Streams output through `fill` into a sibling temporary file, then
/// renames it over `path`.
pub fn write_atomic_with(path: &Path, fill: impl FnOnce(&mut dyn std::io::Write) -> std::io::Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let file = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
    let mut out = std::io::BufWriter::new(file);
    fill(&mut out)
        .and_then(|_| std::io::Write::flush(&mut out))
        .map_err(|e| Error::io(tmp, e))?;
    drop(out);
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn format_points(points: &[PlanePoint], open: bool) -> String {
    let mut out = String::with_capacity(48 * points.len() + 16);
    out.push_str("x,y\n");
    if open {
        out.push_str("# open\n");
    }
    for p in points {
        let _ = writeln!(out, "{},{}", fmt_f64(p.x), fmt_f64(p.y));
    }
    out
}

pub fn format_curve(curve: &DiscreteCurve) -> String {
    format_points(curve.vertices(), false)
}

pub fn format_polyline(line: &Polyline) -> String {
    format_points(line.points(), true)
}

pub fn write_curve(path: &Path, curve: &DiscreteCurve) -> Result<()> {
    write_atomic(path, &format_curve(curve))
}

pub fn write_polyline(path: &Path, line: &Polyline) -> Result<()> {
    write_atomic(path, &format_polyline(line))
}

/// Parsed contents of a curve file.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRows {
    pub points: Vec<PlanePoint>,
    pub open: bool,
}

pub fn parse_curve_rows(text: &str, path: &Path) -> Result<CurveRows> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "x,y" => {}
        Some((_, other)) => return Err(err(1, format!("expected header `x,y`, found `{other}`"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut open = false;
    let mut points = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if comment.trim() == "open" && idx == 1 {
                open = true;
            }
            continue;
        }
        let mut fields = line.split(',');
        let (Some(xs), Some(ys), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(idx + 1, format!("expected two fields, found `{line}`")));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| err(idx + 1, format!("`{s}`: {e}")))
        };
        points.push(PlanePoint::new(parse(xs)?, parse(ys)?));
    }
    Ok(CurveRows { points, open })
}

/// Reads a closed curve. Clockwise files are accepted and reversed.
pub fn read_curve(path: &Path) -> Result<DiscreteCurve> {
    let rows = parse_curve_rows(&read_to_string(path)?, path)?;
    if rows.open {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 2,
            message: "file holds an open polyline, a closed curve is required".into(),
        });
    }
    DiscreteCurve::with_positive_orientation(rows.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn curve_file_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = shapes::ellipse(2.0, 1.0, 37).unwrap();
        write_curve(&path, &c).unwrap();
        assert_eq!(read_curve(&path).unwrap(), c);
    }

    #[test]
    fn open_flag_is_parsed() {
        let text = "x,y\n# open\n0,0\n1,0.5\n2,0\n";
        let rows = parse_curve_rows(text, Path::new("mem")).unwrap();
        assert!(rows.open);
        assert_eq!(rows.points.len(), 3);
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let e = parse_curve_rows("x,y\n1,2\n3\n", Path::new("mem")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_curve_rows("a,b\n", Path::new("mem")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
