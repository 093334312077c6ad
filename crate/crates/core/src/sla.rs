//! Translation of a tenant's contracted capacity into busy-hour planning
//! specifications per cell and per pixel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{busy_hour, Tenant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpecMethod {
    #[serde(rename = "uniform-sc")]
    UniformSc,
    #[serde(rename = "corr-sc")]
    CorrSc,
    #[serde(rename = "uniform-px")]
    UniformPx,
    #[serde(rename = "corr-px")]
    CorrPx,
    #[serde(rename = "known-sc")]
    KnownSc,
    #[serde(rename = "known-px")]
    KnownPx,
}

impl SpecMethod {
    pub const ALL: [SpecMethod; 6] = [
        SpecMethod::UniformSc,
        SpecMethod::CorrSc,
        SpecMethod::UniformPx,
        SpecMethod::CorrPx,
        SpecMethod::KnownSc,
        SpecMethod::KnownPx,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SpecMethod::UniformSc => "uniform-sc",
            SpecMethod::CorrSc => "corr-sc",
            SpecMethod::UniformPx => "uniform-px",
            SpecMethod::CorrPx => "corr-px",
            SpecMethod::KnownSc => "known-sc",
            SpecMethod::KnownPx => "known-px",
        }
    }

    pub fn needs_known_demand(self) -> bool {
        matches!(self, SpecMethod::KnownSc | SpecMethod::KnownPx)
    }
}

impl fmt::Display for SpecMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SpecMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpecMethod::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown spec method '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanningSpec {
    pub tenant: String,
    pub method: SpecMethod,
    /// A_m at the busy hour, Mbps.
    pub busy_mbps: f64,
    /// A_{m,i}, aligned with the cells of the serving map used.
    pub per_sc: Vec<f64>,
    /// A_{m,u}.
    pub per_pixel: Vec<f64>,
}

impl PlanningSpec {
    pub fn sc_total(&self) -> f64 {
        self.per_sc.iter().sum()
    }

    pub fn pixel_total(&self) -> f64 {
        self.per_pixel.iter().sum()
    }

    /// `sc_id,A_mi_mbps` table; `ids[i]` labels cell i.
    pub fn write_sc_csv<W: std::io::Write>(&self, w: W, ids: &[u32]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sc_id", "A_mi_mbps"])?;
        for (id, a) in ids.iter().zip(&self.per_sc) {
            out.write_record([id.to_string(), format!("{a}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A_m at the busy hour: Â_m scaled by the peak-to-mean ratio of the
/// daily demand profile.
pub fn busy_hour_contract(contracted_mbps: f64, profile: &[f64]) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::ZeroMeanDemand);
    }
    let peak = profile[busy_hour(profile)?];
    Ok(contracted_mbps * peak / mean)
}

fn area_sizes(serving: &[Option<usize>], num_cells: usize) -> Vec<usize> {
    let mut sizes = vec![0; num_cells];
    for i in serving.iter().flatten() {
        sizes[*i] += 1;
    }
    sizes
}

fn aggregate(per_pixel: &[f64], serving: &[Option<usize>], num_cells: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_cells];
    for (v, s) in per_pixel.iter().zip(serving) {
        if let Some(i) = s {
            out[*i] += v;
        }
    }
    out
}

/// Rescales the covered pixels so the map sums to `total`. Holes keep 0.
fn conserve(mut per_pixel: Vec<f64>, serving: &[Option<usize>], total: f64) -> Result<Vec<f64>> {
    for (v, s) in per_pixel.iter_mut().zip(serving) {
        if s.is_none() {
            *v = 0.0;
        }
    }
    let sum: f64 = per_pixel.iter().sum();
    if total == 0.0 {
        return Ok(per_pixel);
    }
    if !(sum > 0.0) {
        // No mass on covered pixels: spread evenly over them.
        let covered = serving.iter().filter(|s| s.is_some()).count();
        if covered == 0 {
            return Err(Error::NoDeployedCells);
        }
        let each = total / covered as f64;
        return Ok(serving
            .iter()
            .map(|s| if s.is_some() { each } else { 0.0 })
            .collect());
    }
    let scale = total / sum;
    per_pixel.iter_mut().for_each(|v| *v *= scale);
    Ok(per_pixel)
}

/// Spreads each cell's share uniformly over its service area.
fn spread_over_areas(per_sc: &[f64], serving: &[Option<usize>], total: f64) -> Result<Vec<f64>> {
    let sizes = area_sizes(serving, per_sc.len());
    let per_pixel = serving
        .iter()
        .map(|s| match s {
            Some(i) if sizes[*i] > 0 => per_sc[*i] / sizes[*i] as f64,
            _ => 0.0,
        })
        .collect();
    conserve(per_pixel, serving, total)
}

fn proportional(total: f64, weights: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::ZeroDemand);
    }
    Ok(weights.iter().map(|w| total * w / sum).collect())
}

fn require_cells(num_cells: usize) -> Result<()> {
    if num_cells == 0 {
        Err(Error::NoDeployedCells)
    } else {
        Ok(())
    }
}

/// Even split across deployed cells; pixel values uniform within each
/// service area.
pub fn spec_uniform_sc(
    tenant: &str,
    busy_mbps: f64,
    serving: &[Option<usize>],
    num_cells: usize,
) -> Result<PlanningSpec> {
    require_cells(num_cells)?;
    let per_sc = vec![busy_mbps / num_cells as f64; num_cells];
    let per_pixel = spread_over_areas(&per_sc, serving, busy_mbps)?;
    Ok(PlanningSpec {
        tenant: tenant.into(),
        method: SpecMethod::UniformSc,
        busy_mbps,
        per_sc,
        per_pixel,
    })
}

/// Even split across pixels; cell shares by aggregation over service areas.
pub fn spec_uniform_px(
    tenant: &str,
    busy_mbps: f64,
    serving: &[Option<usize>],
    num_cells: usize,
) -> Result<PlanningSpec> {
    require_cells(num_cells)?;
    if serving.is_empty() {
        return Err(Error::InvalidInput("grid has no pixels".into()));
    }
    let each = busy_mbps / serving.len() as f64;
    let per_pixel = conserve(vec![each; serving.len()], serving, busy_mbps)?;
    let per_sc = aggregate(&per_pixel, serving, num_cells);
    Ok(PlanningSpec {
        tenant: tenant.into(),
        method: SpecMethod::UniformPx,
        busy_mbps,
        per_sc,
        per_pixel,
    })
}

/// Cell shares proportional to measured cell demand D_i.
pub fn spec_correlated_sc(
    tenant: &str,
    busy_mbps: f64,
    cell_demand: &[f64],
    serving: &[Option<usize>],
) -> Result<PlanningSpec> {
    require_cells(cell_demand.len())?;
    let per_sc = proportional(busy_mbps, cell_demand)?;
    let per_pixel = spread_over_areas(&per_sc, serving, busy_mbps)?;
    Ok(PlanningSpec {
        tenant: tenant.into(),
        method: SpecMethod::CorrSc,
        busy_mbps,
        per_sc,
        per_pixel,
    })
}

/// Pixel shares proportional to measured pixel demand d_u.
pub fn spec_correlated_px(
    tenant: &str,
    busy_mbps: f64,
    pixel_demand: &[f64],
    serving: &[Option<usize>],
    num_cells: usize,
) -> Result<PlanningSpec> {
    require_cells(num_cells)?;
    let per_pixel = conserve(proportional(busy_mbps, pixel_demand)?, serving, busy_mbps)?;
    let per_sc = aggregate(&per_pixel, serving, num_cells);
    Ok(PlanningSpec {
        tenant: tenant.into(),
        method: SpecMethod::CorrPx,
        busy_mbps,
        per_sc,
        per_pixel,
    })
}

/// The tenant's own demand, at cell or pixel resolution.
#[derive(Clone, Copy, Debug)]
pub enum KnownDemand<'a> {
    Cells(&'a [f64]),
    Pixels(&'a [f64]),
}

/// Proportional split using the tenant's own demand distribution.
pub fn spec_known(
    tenant: &Tenant,
    busy_mbps: f64,
    demand: KnownDemand<'_>,
    serving: &[Option<usize>],
    num_cells: usize,
) -> Result<PlanningSpec> {
    if !tenant.demand_known {
        return Err(Error::DemandUnknown(tenant.id.clone()));
    }
    let mut spec = match demand {
        KnownDemand::Cells(d) => {
            if d.len() != num_cells {
                return Err(Error::InvalidInput(format!(
                    "{} cell demands for {num_cells} cells",
                    d.len()
                )));
            }
            let mut s = spec_correlated_sc(&tenant.id, busy_mbps, d, serving)?;
            s.method = SpecMethod::KnownSc;
            s
        }
        KnownDemand::Pixels(d) => {
            let mut s = spec_correlated_px(&tenant.id, busy_mbps, d, serving, num_cells)?;
            s.method = SpecMethod::KnownPx;
            s
        }
    };
    spec.tenant = tenant.id.clone();
    Ok(spec)
}
