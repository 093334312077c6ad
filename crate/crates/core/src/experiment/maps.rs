use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::io;
use crate::radio::ServingMap;
use crate::scenario::{NetworkState, ScenarioGrid};

/// Serving-cell label per pixel, -1 where no cell serves.
pub fn serving_labels(serving: &ServingMap) -> Vec<i64> {
    serving
        .links
        .iter()
        .map(|l| l.serving.map_or(-1, |i| i as i64))
        .collect()
}

/// Channel count at each cell site, 0 elsewhere.
pub fn deployment_matrix(grid: &ScenarioGrid, state: &NetworkState) -> Vec<u32> {
    let mut m = vec![0; grid.num_pixels()];
    for c in &state.cells {
        m[c.site] = c.channels.len() as u32;
    }
    m
}

const PALETTE: [[u8; 3]; 8] = [
    [228, 26, 28],
    [55, 126, 184],
    [77, 175, 74],
    [152, 78, 163],
    [255, 127, 0],
    [166, 86, 40],
    [247, 129, 191],
    [153, 153, 153],
];

/// Serving areas in palette colors, shaded by demand density; sites are
/// black and uncovered pixels white.
pub fn render(
    grid: &ScenarioGrid,
    state: &NetworkState,
    serving: &ServingMap,
    demand: &[f64],
) -> Vec<[u8; 3]> {
    let peak = demand.iter().copied().fold(0.0, f64::max);
    let mut img: Vec<[u8; 3]> = serving
        .links
        .iter()
        .zip(demand)
        .map(|(l, &d)| match l.serving {
            None => [255, 255, 255],
            Some(i) => {
                let base = PALETTE[i % PALETTE.len()];
                let shade = if peak > 0.0 {
                    0.35 + 0.65 * (d / peak)
                } else {
                    0.35
                };
                base.map(|c| (255.0 - (255.0 - c as f64) * shade).round() as u8)
            }
        })
        .collect();
    for c in &state.cells {
        img[c.site] = [0, 0, 0];
    }
    debug_assert_eq!(img.len(), grid.num_pixels());
    img
}

/// Writes `demand.txt`, `serving.txt`, `deployment.txt` and `map.ppm`
/// into `dir`.
pub fn emit_maps(
    dir: &Path,
    grid: &ScenarioGrid,
    state: &NetworkState,
    serving: &ServingMap,
    demand: &[f64],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    io::write_grid_file(&dir.join("demand.txt"), grid, "demand", demand)?;
    io::write_grid_file(
        &dir.join("serving.txt"),
        grid,
        "serving",
        &serving_labels(serving),
    )?;
    io::write_grid_file(
        &dir.join("deployment.txt"),
        grid,
        "deployment",
        &deployment_matrix(grid, state),
    )?;
    io::write_ppm(
        fs::File::create(dir.join("map.ppm"))?,
        grid,
        &render(grid, state, serving, demand),
    )?;
    Ok(())
}
