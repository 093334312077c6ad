//! Capacity conformance monitoring: required-bandwidth estimation from
//! demand, planning specifications and counters; the conformance trigger;
//! SLA exceedance flags.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub alpha: f64,
    /// Consecutive periods the condition must hold.
    pub l: usize,
    /// Period length T in seconds.
    pub period_s: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            l: 1,
            period_s: 86_400.0,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidScenario(format!(
                "alpha = {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.l == 0 {
            return Err(Error::InvalidScenario("L must be >= 1".into()));
        }
        Ok(())
    }
}

/// B̂_i for one cell: (1/SE̅_i) Σ_m min(D_{i,m}, A_{m,i}). Tenants
/// without a specification (`None`) contribute their full demand.
pub fn required_bw_for_cell(demand: &[f64], spec: &[Option<f64>], mean_se: f64) -> Result<f64> {
    let capped: f64 = demand
        .iter()
        .zip(spec.iter().chain(std::iter::repeat(&None)))
        .map(|(&d, a)| match a {
            Some(a) => d.min(*a),
            None => d,
        })
        .sum();
    if capped <= 0.0 {
        return Ok(0.0);
    }
    if !(mean_se > 0.0) {
        return Err(Error::ZeroSpectralEfficiency { sc: 0 });
    }
    Ok(capped / mean_se)
}

/// Per-cell B̂ from `demands[i][m]`, `specs[i][m]` and SE̅_i.
pub fn required_bw_estimate(
    demands: &[Vec<f64>],
    specs: &[Vec<f64>],
    mean_se: &[f64],
) -> Result<Vec<f64>> {
    if demands.len() != specs.len() || demands.len() != mean_se.len() {
        return Err(Error::InvalidInput(
            "demand, spec and SE vectors differ in length".into(),
        ));
    }
    demands
        .iter()
        .zip(specs)
        .zip(mean_se)
        .enumerate()
        .map(|(i, ((d, a), &se))| {
            let spec: Vec<Option<f64>> = a.iter().copied().map(Some).collect();
            required_bw_for_cell(d, &spec, se).map_err(|e| match e {
                Error::ZeroSpectralEfficiency { .. } => Error::ZeroSpectralEfficiency { sc: i },
                e => e,
            })
        })
        .collect()
}

/// SE̅ = v / n, bits over s·Hz.
pub fn mean_se_from_counters(volume_bits: f64, resource_s_hz: f64) -> Result<f64> {
    if !(resource_s_hz > 0.0) {
        return Err(Error::ZeroResourceUsage { sc: 0 });
    }
    Ok(volume_bits / resource_s_hz)
}

/// D = v / T, converted to Mbps.
pub fn demand_from_volume(volume_bits: f64, period_s: f64) -> Result<f64> {
    if !(period_s > 0.0) {
        return Err(Error::InvalidInput("period must be > 0".into()));
    }
    Ok(volume_bits / period_s / 1e6)
}

/// One row of the counter ingestion file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterRecord {
    pub period: u32,
    pub sc_id: u32,
    pub tenant_id: String,
    pub volume_bits: f64,
    pub resource_s_hz: f64,
}

pub fn read_counters<R: Read>(r: R) -> Result<Vec<CounterRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CounterEstimates {
    /// SE̅_i per cell id.
    pub mean_se: BTreeMap<u32, f64>,
    /// D_{i,m} in Mbps per (cell id, tenant id).
    pub demand: BTreeMap<(u32, String), f64>,
}

/// Aggregates the counters of one period into SE̅_i and D_{i,m}.
pub fn estimates_from_counters(
    records: &[CounterRecord],
    period: u32,
    period_s: f64,
) -> Result<CounterEstimates> {
    let mut volume: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let mut est = CounterEstimates::default();
    for r in records.iter().filter(|r| r.period == period) {
        let e = volume.entry(r.sc_id).or_default();
        e.0 += r.volume_bits;
        e.1 += r.resource_s_hz;
        *est.demand
            .entry((r.sc_id, r.tenant_id.clone()))
            .or_default() += r.volume_bits;
    }
    for (sc, (v, n)) in volume {
        let se = mean_se_from_counters(v, n)
            .map_err(|_| Error::ZeroResourceUsage { sc: sc as usize })?;
        est.mean_se.insert(sc, se);
    }
    for v in est.demand.values_mut() {
        *v = demand_from_volume(*v, period_s)?;
    }
    Ok(est)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriggerOutcome {
    pub fire: bool,
    /// Indices of cells meeting the condition in each of the last L periods.
    pub cells: Vec<usize>,
}

/// B̂_i > α·|F_i|·B held by some cell over each of the last `cfg.l`
/// periods. `history[p][i]` is B̂ of cell i in period p (oldest first);
/// `cell_bw_mhz[i]` is |F_i|·B.
pub fn trigger(history: &[Vec<f64>], cell_bw_mhz: &[f64], cfg: &MonitorConfig) -> TriggerOutcome {
    let l = cfg.l.max(1);
    if history.len() < l {
        return TriggerOutcome::default();
    }
    let window = &history[history.len() - l..];
    let cells: Vec<usize> = (0..cell_bw_mhz.len())
        .filter(|&i| {
            window
                .iter()
                .all(|p| p.get(i).is_some_and(|&b| b > cfg.alpha * cell_bw_mhz[i]))
        })
        .collect();
    TriggerOutcome {
        fire: !cells.is_empty(),
        cells,
    }
}

/// Tenants whose total demand exceeds their contracted capacity.
pub fn sla_exceedance(total_demand_mbps: &[f64], contracted_mbps: &[f64]) -> Vec<bool> {
    total_demand_mbps
        .iter()
        .zip(contracted_mbps)
        .map(|(d, a)| d > a)
        .collect()
}

/// Source of the demand the monitor evaluates.
pub trait Forecaster {
    fn predict(&self, history: &[Vec<f64>]) -> Option<Vec<f64>>;
}

/// Predicted demand = latest observation.
#[derive(Clone, Copy, Debug, Default)]
pub struct PassThrough;

impl Forecaster for PassThrough {
    fn predict(&self, history: &[Vec<f64>]) -> Option<Vec<f64>> {
        history.last().cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_tenant_estimate() {
        let b = required_bw_estimate(&[vec![30.0, 50.0]], &[vec![40.0, 40.0]], &[2.0]).unwrap();
        assert_eq!(b, vec![35.0]);
    }

    #[test]
    fn min_inactive_and_saturated() {
        let b = required_bw_estimate(&[vec![10.0, 5.0]], &[vec![40.0, 40.0]], &[2.5]).unwrap();
        assert_eq!(b, vec![6.0]);
        let b = required_bw_estimate(&[vec![100.0, 90.0]], &[vec![40.0, 20.0]], &[3.0]).unwrap();
        assert_eq!(b, vec![20.0]);
    }

    #[test]
    fn zero_se_with_demand_names_cell() {
        let e = required_bw_estimate(
            &[vec![1.0], vec![2.0]],
            &[vec![5.0], vec![5.0]],
            &[1.0, 0.0],
        )
        .unwrap_err();
        assert!(matches!(e, Error::ZeroSpectralEfficiency { sc: 1 }));
    }

    #[test]
    fn counter_arithmetic() {
        assert_eq!(mean_se_from_counters(8e9, 2e9).unwrap(), 4.0);
        assert!((demand_from_volume(3.6e10, 3600.0).unwrap() - 10.0).abs() < 1e-12);
        assert!(mean_se_from_counters(1.0, 0.0).is_err());
    }

    #[test]
    fn counter_csv_ingestion() {
        let text = "period,sc_id,tenant_id,volume_bits,resource_s_hz\n\
                    1,7,a,4e9,1e9\n1,7,b,4e9,1e9\n2,7,a,1e9,1e9\n";
        let recs = read_counters(text.as_bytes()).unwrap();
        let est = estimates_from_counters(&recs, 1, 3600.0).unwrap();
        assert_eq!(est.mean_se[&7], 4.0);
        let d = est.demand[&(7, "a".to_string())];
        assert!((d - 4e9 / 3600.0 / 1e6).abs() < 1e-12);
    }

    #[test]
    fn trigger_boundary() {
        let cfg = MonitorConfig::default();
        assert!(trigger(&[vec![39.0]], &[40.0], &cfg).fire);
        assert!(!trigger(&[vec![38.0]], &[40.0], &cfg).fire);
    }

    #[test]
    fn persistence_suppresses_spikes() {
        let cfg = MonitorConfig {
            l: 2,
            ..MonitorConfig::default()
        };
        assert!(!trigger(&[vec![39.0], vec![10.0]], &[40.0], &cfg).fire);
        assert!(!trigger(&[vec![10.0], vec![39.0]], &[40.0], &cfg).fire);
        let out = trigger(&[vec![39.0, 1.0], vec![45.0, 1.0]], &[40.0, 20.0], &cfg);
        assert!(out.fire);
        assert_eq!(out.cells, vec![0]);
    }

    #[test]
    fn exceedance_is_strict() {
        assert_eq!(
            sla_exceedance(&[120.0, 100.0, 0.0], &[100.0; 3]),
            vec![true, false, false]
        );
    }

    #[test]
    fn pass_through_returns_latest() {
        let h = vec![vec![1.0], vec![2.0]];
        assert_eq!(PassThrough.predict(&h), Some(vec![2.0]));
    }
}
