//! Plain-text grid files and image rendering.
//!
//! Traffic maps and matrix dumps share one layout: a header line
//! `width height resolution name`, with width and height in pixels and
//! resolution in meters, followed by `height` rows of `width`
//! whitespace-separated values. The first row is the southernmost one, so
//! values appear in pixel-index order. See `docs/formats.md`.

use std::fmt::Display;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::ScenarioGrid;

/// A parsed grid file.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFile {
    pub nx: usize,
    pub ny: usize,
    pub resolution_m: f64,
    pub name: String,
    pub values: Vec<f64>,
}

impl GridFile {
    /// Checks that the file matches `grid` pixel for pixel.
    pub fn check_grid(&self, grid: &ScenarioGrid) -> Result<()> {
        if self.nx != grid.nx()
            || self.ny != grid.ny()
            || (self.resolution_m - grid.resolution_m()).abs() > 1e-9
        {
            return Err(Error::InvalidInput(format!(
                "map '{}' is {}x{} at {} m, scenario grid is {}x{} at {} m",
                self.name,
                self.nx,
                self.ny,
                self.resolution_m,
                grid.nx(),
                grid.ny(),
                grid.resolution_m()
            )));
        }
        Ok(())
    }
}

fn parse_err(origin: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.into(),
        msg: msg.into(),
    }
}

/// Parses grid-file text. `origin` names the source in error messages.
pub fn parse_grid(text: &str, origin: &str) -> Result<GridFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(origin, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(
            origin,
            format!(
                "header needs `width height resolution name`, got {} fields",
                fields.len()
            ),
        ));
    }
    let nx: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(origin, "bad width"))?;
    let ny: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(origin, "bad height"))?;
    let resolution_m: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(origin, "bad resolution"))?;
    if nx == 0 || ny == 0 || !(resolution_m > 0.0) {
        return Err(parse_err(origin, "grid dimensions must be positive"));
    }
    let mut values = Vec::with_capacity(nx * ny);
    let mut rows = 0;
    for (lineno, line) in lines {
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                parse_err(origin, format!("line {}: bad value '{tok}'", lineno + 1))
            })?;
            values.push(v);
        }
        if values.len() - before != nx {
            return Err(parse_err(
                origin,
                format!(
                    "line {}: expected {nx} values, got {}",
                    lineno + 1,
                    values.len() - before
                ),
            ));
        }
        rows += 1;
    }
    if rows != ny {
        return Err(parse_err(origin, format!("expected {ny} rows, got {rows}")));
    }
    Ok(GridFile {
        nx,
        ny,
        resolution_m,
        name: fields[3].to_string(),
        values,
    })
}

pub fn read_grid(path: &Path) -> Result<GridFile> {
    let text = fs::read_to_string(path)?;
    parse_grid(&text, &path.display().to_string())
}

/// Reads a traffic map and checks it against `grid`. Negative demand is
/// rejected.
pub fn read_traffic_map(path: &Path, grid: &ScenarioGrid) -> Result<GridFile> {
    let f = read_grid(path)?;
    f.check_grid(grid)?;
    if let Some(u) = f.values.iter().position(|v| !(*v >= 0.0)) {
        return Err(parse_err(
            &path.display().to_string(),
            format!("pixel {u} has invalid demand {}", f.values[u]),
        ));
    }
    Ok(f)
}

/// Writes a grid file. Values are printed with `Display`, which for `f64`
/// round-trips exactly.
pub fn write_grid<W: Write, T: Display>(
    w: W,
    grid: &ScenarioGrid,
    name: &str,
    values: &[T],
) -> Result<()> {
    if values.len() != grid.num_pixels() {
        return Err(Error::InvalidInput(format!(
            "{} values for {} pixels",
            values.len(),
            grid.num_pixels()
        )));
    }
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::InvalidInput(format!(
            "map name '{name}' must be one token"
        )));
    }
    let mut w = BufWriter::new(w);
    writeln!(
        w,
        "{} {} {} {}",
        grid.nx(),
        grid.ny(),
        grid.resolution_m(),
        name
    )?;
    for row in values.chunks(grid.nx()) {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b" ")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid_file<T: Display>(
    path: &Path,
    grid: &ScenarioGrid,
    name: &str,
    values: &[T],
) -> Result<()> {
    write_grid(fs::File::create(path)?, grid, name, values)
}

/// Binary PPM (P6). Rows are written north first so the image has the
/// usual orientation.
pub fn write_ppm<W: Write>(w: W, grid: &ScenarioGrid, rgb: &[[u8; 3]]) -> Result<()> {
    if rgb.len() != grid.num_pixels() {
        return Err(Error::InvalidInput("image size does not match grid".into()));
    }
    let mut w = BufWriter::new(w);
    write!(w, "P6\n{} {}\n255\n", grid.nx(), grid.ny())?;
    for row in rgb.chunks(grid.nx()).rev() {
        for px in row {
            w.write_all(px)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = ScenarioGrid::from_pixels(3, 2, 5.0).unwrap();
        let v = vec![0.1, 1.0 / 3.0, 0.0, 2.5e-7, 17.0, 1e10];
        let mut buf = Vec::new();
        write_grid(&mut buf, &g, "t1", &v).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("3 2 5 t1\n0.1 0.3333333333333333 0\n"));
        let f = parse_grid(&text, "mem").unwrap();
        assert_eq!(f.values, v);
        assert_eq!(f.name, "t1");
        f.check_grid(&g).unwrap();
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_grid("", "x").is_err());
        assert!(parse_grid("2 1 5\n1 2\n", "x").is_err());
        assert!(parse_grid("2 1 5 a\n1 2 3\n", "x").is_err());
        assert!(parse_grid("2 2 5 a\n1 2\n", "x").is_err());
        assert!(parse_grid("2 1 5 a\n1 z\n", "x").is_err());
        let ok = parse_grid("# comment\n2 1 5 a\n\n1 2\n", "x").unwrap();
        assert_eq!(ok.values, vec![1.0, 2.0]);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let f = parse_grid("2 1 5 a\n1 2\n", "x").unwrap();
        assert!(f
            .check_grid(&ScenarioGrid::from_pixels(1, 2, 5.0).unwrap())
            .is_err());
        assert!(f
            .check_grid(&ScenarioGrid::from_pixels(2, 1, 2.0).unwrap())
            .is_err());
    }

    #[test]
    fn sentinel_matrix_and_ppm_size() {
        let g = ScenarioGrid::from_pixels(4, 3, 5.0).unwrap();
        let mut buf = Vec::new();
        write_grid(&mut buf, &g, "serving", &[-1i64; 12]).unwrap();
        let f = parse_grid(std::str::from_utf8(&buf).unwrap(), "m").unwrap();
        assert!(f.values.iter().all(|v| *v == -1.0));

        let mut img = Vec::new();
        write_ppm(&mut img, &g, &[[1, 2, 3]; 12]).unwrap();
        let header = b"P6\n4 3\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert_eq!(img.len() - header.len(), 3 * g.num_pixels());
    }
}
