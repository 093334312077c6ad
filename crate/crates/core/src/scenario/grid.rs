use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular pixel lattice over the planning area.
///
/// Pixels are indexed row-major starting at the southwest corner: pixel
/// `row * nx + col` has its center at `((col + 0.5) * res, (row + 0.5) * res)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    width_m: f64,
    height_m: f64,
    resolution_m: f64,
    nx: usize,
    ny: usize,
}

fn exact_div(len: f64, res: f64, what: &str) -> Result<usize> {
    let q = len / res;
    let n = q.round();
    if n < 1.0 || (q - n).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "{what} {len} m is not a positive multiple of the {res} m resolution"
        )));
    }
    Ok(n as usize)
}

impl ScenarioGrid {
    pub fn new(width_m: f64, height_m: f64, resolution_m: f64) -> Result<Self> {
        if !(resolution_m > 0.0) || !resolution_m.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "resolution {resolution_m} must be > 0"
            )));
        }
        let nx = exact_div(width_m, resolution_m, "width")?;
        let ny = exact_div(height_m, resolution_m, "height")?;
        Ok(Self {
            width_m,
            height_m,
            resolution_m,
            nx,
            ny,
        })
    }

    pub fn from_pixels(nx: usize, ny: usize, resolution_m: f64) -> Result<Self> {
        Self::new(
            nx as f64 * resolution_m,
            ny as f64 * resolution_m,
            resolution_m,
        )
    }

    pub fn width_m(&self) -> f64 {
        self.width_m
    }

    pub fn height_m(&self) -> f64 {
        self.height_m
    }

    pub fn resolution_m(&self) -> f64 {
        self.resolution_m
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// |U|
    pub fn num_pixels(&self) -> usize {
        self.nx * self.ny
    }

    pub fn contains(&self, pixel: usize) -> bool {
        pixel < self.num_pixels()
    }

    /// `(col, row)` of a pixel.
    pub fn col_row(&self, pixel: usize) -> (usize, usize) {
        (pixel % self.nx, pixel / self.nx)
    }

    pub fn pixel_at(&self, col: usize, row: usize) -> usize {
        row * self.nx + col
    }

    /// Center of a pixel in meters from the southwest corner.
    pub fn center(&self, pixel: usize) -> (f64, f64) {
        let (c, r) = self.col_row(pixel);
        (
            (c as f64 + 0.5) * self.resolution_m,
            (r as f64 + 0.5) * self.resolution_m,
        )
    }

    /// Center-to-center distance in meters.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ca, ra) = self.col_row(a);
        let (cb, rb) = self.col_row(b);
        let dx = ca.abs_diff(cb) as f64;
        let dy = ra.abs_diff(rb) as f64;
        dx.hypot(dy) * self.resolution_m
    }

    pub fn half_diagonal_m(&self) -> f64 {
        0.5 * self.width_m.hypot(self.height_m)
    }

    pub fn check_pixels(&self, pixels: &[usize]) -> Result<()> {
        match pixels.iter().find(|&&p| !self.contains(p)) {
            Some(p) => Err(Error::InvalidScenario(format!(
                "pixel {p} outside grid of {} pixels",
                self.num_pixels()
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_dimensions() {
        let g = ScenarioGrid::new(400.0, 400.0, 5.0).unwrap();
        assert_eq!((g.nx(), g.ny()), (80, 80));
        assert_eq!(g.num_pixels(), 6400);
    }

    #[test]
    fn inexact_division_rejected() {
        assert!(ScenarioGrid::new(401.0, 400.0, 5.0).is_err());
        assert!(ScenarioGrid::new(400.0, 400.0, 0.0).is_err());
        assert!(ScenarioGrid::new(0.0, 400.0, 5.0).is_err());
    }

    #[test]
    fn row_major_from_southwest() {
        let g = ScenarioGrid::new(20.0, 10.0, 5.0).unwrap();
        assert_eq!(g.center(0), (2.5, 2.5));
        assert_eq!(g.center(1), (7.5, 2.5));
        assert_eq!(g.center(4), (2.5, 7.5));
        assert_eq!(g.distance(0, 5), 50f64.sqrt());
    }
}
