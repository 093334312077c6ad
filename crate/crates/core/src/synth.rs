//! Synthetic traffic: smoothed random fields, maps with a target total and
//! a target Pearson correlation against a reference, and daily profiles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named random sub-streams. Every consumer of randomness draws from its
/// own ChaCha stream of the one experiment seed.
pub mod stream {
    pub const CANDIDATES: u64 = 1;
    pub const LAYOUT: u64 = 2;
    pub const BASE_MAP: u64 = 3;
    /// Tenant maps use `TENANT_MAP + index`.
    pub const TENANT_MAP: u64 = 16;
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileShape {
    Flat,
    /// `base + amplitude * (1 + cos(2π (t - peak) / T)) / 2`
    Sinusoidal {
        base: f64,
        amplitude: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileConfig {
    pub steps: usize,
    pub peak_step: usize,
    pub shape: ProfileShape,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            steps: 24,
            peak_step: 20,
            shape: ProfileShape::Sinusoidal {
                base: 0.2,
                amplitude: 0.8,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub target_total_mbps: f64,
    pub target_pearson: f64,
    pub seed: u64,
    pub stream: u64,
    pub smoothing_radius_px: usize,
    pub profile: ProfileConfig,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            target_total_mbps: 100.0,
            target_pearson: 0.9,
            seed: 0,
            stream: stream::TENANT_MAP,
            smoothing_radius_px: 6,
            profile: ProfileConfig::default(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_total_mbps >= 0.0) {
            return Err(Error::InvalidInput("target total must be >= 0".into()));
        }
        if !(self.target_pearson.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "target Pearson {} outside [-1, 1]",
                self.target_pearson
            )));
        }
        Ok(())
    }
}

/// One-day demand profile of `steps` values.
pub fn synth_daily_profile(cfg: &ProfileConfig) -> Result<Vec<f64>> {
    if cfg.steps < 2 {
        return Err(Error::InvalidInput(
            "daily profile needs at least 2 steps".into(),
        ));
    }
    if cfg.peak_step >= cfg.steps {
        return Err(Error::InvalidInput(format!(
            "peak step {} outside 0..{}",
            cfg.peak_step, cfg.steps
        )));
    }
    let t_len = cfg.steps as f64;
    Ok((0..cfg.steps)
        .map(|t| match cfg.shape {
            ProfileShape::Flat => 1.0,
            ProfileShape::Sinusoidal { base, amplitude } => {
                let phase = 2.0 * std::f64::consts::PI * (t as f64 - cfg.peak_step as f64) / t_len;
                (base + amplitude * 0.5 * (1.0 + phase.cos())).max(0.0)
            }
        })
        .collect())
}

/// The same daily profile repeated over `days` days.
pub fn tile_days(profile: &[f64], days: usize) -> Vec<f64> {
    profile
        .iter()
        .copied()
        .cycle()
        .take(profile.len() * days)
        .collect()
}

fn box_blur_1d(
    src: &[f64],
    dst: &mut [f64],
    len: usize,
    stride: usize,
    count: usize,
    step: usize,
    r: usize,
) {
    // Clamp-to-edge window of 2r+1 samples along each line.
    for line in 0..count {
        let base = line * step;
        let at = |i: isize| src[base + (i.clamp(0, len as isize - 1) as usize) * stride];
        let mut acc = 0.0;
        for i in -(r as isize)..=(r as isize) {
            acc += at(i);
        }
        let norm = (2 * r + 1) as f64;
        for i in 0..len as isize {
            dst[base + i as usize * stride] = acc / norm;
            acc += at(i + r as isize + 1) - at(i - r as isize);
        }
    }
}

/// Gaussian white noise smoothed by a separable box filter of radius
/// `radius` pixels.
pub fn smoothed_field(nx: usize, ny: usize, radius: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let noise: Vec<f64> = (0..nx * ny).map(|_| StandardNormal.sample(rng)).collect();
    if radius == 0 || nx == 0 || ny == 0 {
        return noise;
    }
    let mut tmp = vec![0.0; nx * ny];
    box_blur_1d(&noise, &mut tmp, nx, 1, ny, nx, radius);
    let mut out = vec![0.0; nx * ny];
    box_blur_1d(&tmp, &mut out, ny, nx, nx, 1, radius);
    out
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation over all entries; NaN when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

fn standardize(v: &[f64]) -> Option<Vec<f64>> {
    let m = mean(v);
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    (sd > 0.0 && sd.is_finite()).then(|| v.iter().map(|x| (x - m) / sd).collect())
}

/// Shifts to a zero minimum and scales to `total`.
fn to_demand(g: &[f64], total: f64) -> Vec<f64> {
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = g.iter().map(|x| x - min).collect();
    let sum: f64 = shifted.iter().sum();
    if sum > 0.0 {
        shifted.iter().map(|x| x * total / sum).collect()
    } else {
        vec![total / g.len() as f64; g.len()]
    }
}

const MAX_BISECTION: usize = 50;
const PEARSON_TOL: f64 = 0.02;

/// Non-negative map with total `cfg.target_total_mbps` whose Pearson
/// correlation with `reference` is calibrated to `cfg.target_pearson`.
///
/// The map is `w·z(ref) + sqrt(1-w²)·z(e)`, shifted to a zero minimum and
/// rescaled, with `e` a smoothed random field orthogonalized against the
/// reference and `w` found by bisection on the achieved correlation.
pub fn synth_correlated_map(
    reference: &[f64],
    nx: usize,
    ny: usize,
    cfg: &SynthesisConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if reference.len() != nx * ny {
        return Err(Error::InvalidInput(format!(
            "reference has {} pixels, grid {}",
            reference.len(),
            nx * ny
        )));
    }
    let zr = standardize(reference).ok_or_else(|| {
        Error::InvalidInput("reference map needs at least two distinct values".into())
    })?;
    let n = zr.len() as f64;
    let mut rng = rng_for(cfg.seed, cfg.stream);
    let mut field = smoothed_field(nx, ny, cfg.smoothing_radius_px, &mut rng);
    let proj = field.iter().zip(&zr).map(|(e, z)| e * z).sum::<f64>() / n;
    field.iter_mut().zip(&zr).for_each(|(e, z)| *e -= proj * z);
    let ze =
        standardize(&field).ok_or_else(|| Error::InvalidInput("degenerate random field".into()))?;

    let total = cfg.target_total_mbps;
    if total == 0.0 {
        return Ok(vec![0.0; zr.len()]);
    }
    let build = |w: f64| -> Vec<f64> {
        let s = (1.0 - w * w).max(0.0).sqrt();
        let g: Vec<f64> = zr.iter().zip(&ze).map(|(a, b)| w * a + s * b).collect();
        to_demand(&g, total)
    };
    let target = cfg.target_pearson;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut best = (f64::INFINITY, 0.0, Vec::new());
    for _ in 0..=MAX_BISECTION {
        let w = 0.5 * (lo + hi);
        let map = build(w);
        let r = pearson(&map, reference);
        let err = (r - target).abs();
        if err < best.0 {
            best = (err, r, map);
        }
        if err < 1e-9 || !r.is_finite() {
            break;
        }
        if r < target {
            lo = w;
        } else {
            hi = w;
        }
    }
    for w in [1.0, -1.0] {
        let map = build(w);
        let r = pearson(&map, reference);
        if (r - target).abs() < best.0 {
            best = ((r - target).abs(), r, map);
        }
    }
    if !(best.0 <= PEARSON_TOL) {
        return Err(Error::CalibrationFailure {
            target,
            achieved: best.1,
        });
    }
    Ok(best.2)
}

/// Hot-spotted base demand: `exp(sigma * z)` of a smoothed field, scaled
/// to `total`.
pub fn synth_base_map(
    nx: usize,
    ny: usize,
    radius: usize,
    sigma: f64,
    total: f64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = rng_for(seed, stream::BASE_MAP);
    let f = smoothed_field(nx, ny, radius, &mut rng);
    let z = standardize(&f).unwrap_or(f);
    let raw: Vec<f64> = z.iter().map(|v| (sigma * v).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v * total / sum).collect()
}

/// Rescales `map` within each service area so cell totals equal `targets`.
/// Cells with no mass get their target spread evenly over their area.
pub fn calibrate_to_cells(
    map: &[f64],
    serving: &[Option<usize>],
    targets: &[f64],
) -> Result<Vec<f64>> {
    let n = targets.len();
    let mut mass = vec![0.0; n];
    let mut area = vec![0usize; n];
    for (v, s) in map.iter().zip(serving) {
        if let Some(i) = s {
            if *i >= n {
                return Err(Error::InvalidInput(format!("cell {i} has no target")));
            }
            mass[*i] += v;
            area[*i] += 1;
        }
    }
    if let Some(i) = (0..n).find(|&i| area[i] == 0 && targets[i] > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cell {i} has a demand target but no area"
        )));
    }
    Ok(map
        .iter()
        .zip(serving)
        .map(|(v, s)| match s {
            Some(i) if mass[*i] > 0.0 => v * targets[*i] / mass[*i],
            Some(i) => targets[*i] / area[*i] as f64,
            None => 0.0,
        })
        .collect())
}
