use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tenant {
    pub id: String,
    /// Â_m in Mbps.
    pub contracted_mbps: f64,
    /// Whether the per-pixel demand of this tenant is available.
    #[serde(default)]
    pub demand_known: bool,
}

impl Tenant {
    pub fn new(id: impl Into<String>, contracted_mbps: f64, demand_known: bool) -> Result<Self> {
        if !(contracted_mbps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "contracted capacity must be > 0, got {contracted_mbps}"
            )));
        }
        Ok(Self {
            id: id.into(),
            contracted_mbps,
            demand_known,
        })
    }
}

/// Per-tenant busy-hour demand in Mbps per pixel, plus the normalized
/// daily demand profile.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficMap {
    tenants: Vec<String>,
    layers: Vec<Vec<f64>>,
    daily_profile: Vec<f64>,
}

impl TrafficMap {
    pub fn new(daily_profile: Vec<f64>) -> Result<Self> {
        if daily_profile.is_empty() {
            return Err(Error::InvalidInput(
                "daily profile must have T >= 1 steps".into(),
            ));
        }
        if daily_profile.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput(
                "daily profile values must be >= 0".into(),
            ));
        }
        Ok(Self {
            tenants: Vec::new(),
            layers: Vec::new(),
            daily_profile,
        })
    }

    pub fn with_layer(mut self, tenant: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.push_layer(tenant, values)?;
        Ok(self)
    }

    pub fn push_layer(&mut self, tenant: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if let Some(first) = self.layers.first() {
            if first.len() != values.len() {
                return Err(Error::InvalidInput(format!(
                    "layer has {} pixels, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        if let Some(bad) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "demand at pixel {bad} is {} (must be finite and >= 0)",
                values[bad]
            )));
        }
        self.tenants.push(tenant.into());
        self.layers.push(values);
        Ok(())
    }

    pub fn tenants(&self) -> &[String] {
        &self.tenants
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn layer(&self, tenant: &str) -> Option<&[f64]> {
        self.tenants
            .iter()
            .position(|t| t == tenant)
            .map(|i| self.layers[i].as_slice())
    }

    pub fn daily_profile(&self) -> &[f64] {
        &self.daily_profile
    }

    pub fn num_pixels(&self) -> usize {
        self.layers.first().map_or(0, Vec::len)
    }

    /// d_u = Σ_m d_{u,m}
    pub fn aggregate(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.num_pixels()];
        for layer in &self.layers {
            for (t, v) in total.iter_mut().zip(layer) {
                *t += v;
            }
        }
        total
    }

    pub fn total_mbps(&self) -> f64 {
        self.layers.iter().flatten().sum()
    }
}

/// Cell-level demand derived from a pixel map and a serving partition.
#[derive(Clone, Debug, PartialEq)]
pub struct CellDemand {
    /// `per_tenant[i][m]` = D_{i,m}
    pub per_tenant: Vec<Vec<f64>>,
    /// D_i
    pub total: Vec<f64>,
}

/// Sums pixel demand into serving cells. Pixels with `None` serving cell
/// must carry no demand.
pub fn aggregate_to_cells(
    map: &TrafficMap,
    serving: &[Option<usize>],
    num_cells: usize,
) -> Result<CellDemand> {
    if map.num_pixels() != 0 && serving.len() != map.num_pixels() {
        return Err(Error::InvalidInput(format!(
            "serving map has {} pixels, traffic map {}",
            serving.len(),
            map.num_pixels()
        )));
    }
    let m = map.layers.len();
    let mut per_tenant = vec![vec![0.0; m]; num_cells];
    let mut uncovered = Vec::new();
    for (u, s) in serving.iter().enumerate() {
        let demand: f64 = map.layers.iter().map(|l| l[u]).sum();
        match s {
            Some(i) if *i < num_cells => {
                for (t, layer) in map.layers.iter().enumerate() {
                    per_tenant[*i][t] += layer[u];
                }
            }
            Some(i) => {
                return Err(Error::InvalidInput(format!(
                    "pixel {u} served by cell {i}, but only {num_cells} cells"
                )))
            }
            None if demand > 0.0 => uncovered.push(u),
            None => {}
        }
    }
    if !uncovered.is_empty() {
        return Err(Error::UncoveredDemand {
            count: uncovered.len(),
            first: uncovered.into_iter().take(10).collect(),
        });
    }
    let total = per_tenant.iter().map(|row| row.iter().sum()).collect();
    Ok(CellDemand { per_tenant, total })
}

/// Index of the largest value; ties go to the earliest index.
pub fn busy_hour(series: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in series.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptySeries)
}
