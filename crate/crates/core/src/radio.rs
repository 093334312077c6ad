//! Network performance model: transmit powers, serving areas, SINR,
//! spectral efficiency and required bandwidth on the pixel grid.
//!
//! All links use the ITU indoor-hotspot path-loss model (LOS branch by
//! default). Received powers are recomputed per pixel from a gain table
//! indexed by the site-to-pixel offset, so an evaluation costs
//! O(|U| * cells * channels) and allocates only the per-pixel outputs.

use serde::{Deserialize, Serialize};

use crate::par::{self, Exec};
use crate::scenario::{ChannelPlan, ChannelSet, NetworkState, ScenarioGrid};

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    #[default]
    Los,
    Nlos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudget {
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub antenna_gain_dbi: f64,
    pub sc_height_m: f64,
    pub ue_height_m: f64,
    pub carrier_ghz: f64,
    pub sinr_edge_db: f64,
    pub sinr_min_db: f64,
    pub se_max: f64,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub att_factor: f64,
    pub propagation: Propagation,
    /// Subtract the antenna gain from the cell-edge loss when dimensioning
    /// transmit power. Off: the edge term is path loss only.
    pub edge_gain_includes_antenna: bool,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            antenna_gain_dbi: 2.0,
            sc_height_m: 6.0,
            ue_height_m: 1.5,
            carrier_ghz: 5.0,
            sinr_edge_db: 9.0,
            sinr_min_db: -10.0,
            se_max: 4.4,
            p_min_dbm: 10.0,
            p_max_dbm: 24.0,
            att_factor: 0.75,
            propagation: Propagation::Los,
            edge_gain_includes_antenna: false,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> crate::Result<()> {
        if self.p_min_dbm > self.p_max_dbm {
            return Err(crate::Error::InvalidScenario(
                "p_min must not exceed p_max".into(),
            ));
        }
        if !(self.se_max > 0.0) || !(self.att_factor > 0.0) || !(self.carrier_ghz > 0.0) {
            return Err(crate::Error::InvalidScenario(
                "se_max, att_factor and carrier must be > 0".into(),
            ));
        }
        Ok(())
    }

    fn pl_coefficients(&self) -> (f64, f64) {
        match self.propagation {
            Propagation::Los => (16.9, 32.8),
            Propagation::Nlos => (43.3, 11.5),
        }
    }

    /// InH path loss in dB for a 3D distance in meters.
    pub fn path_loss_db(&self, d3d_m: f64) -> f64 {
        let (slope, intercept) = self.pl_coefficients();
        slope * d3d_m.log10() + intercept + 20.0 * self.carrier_ghz.log10()
    }

    /// 3D distance whose path loss equals `pl_db`.
    fn distance_for_loss(&self, pl_db: f64) -> f64 {
        let (slope, intercept) = self.pl_coefficients();
        10f64.powf((pl_db - intercept - 20.0 * self.carrier_ghz.log10()) / slope)
    }

    pub fn height_diff_m(&self) -> f64 {
        (self.sc_height_m - self.ue_height_m).abs()
    }

    /// Path loss for a horizontal distance, with the antenna heights folded in.
    pub fn path_loss_2d_db(&self, d2d_m: f64) -> f64 {
        self.path_loss_db(d2d_m.hypot(self.height_diff_m()))
    }

    /// Noise power over one channel, in dBm.
    pub fn noise_dbm(&self, bandwidth_mhz: f64) -> f64 {
        self.noise_psd_dbm_hz + lin_to_db(bandwidth_mhz * 1e6) + self.noise_figure_db
    }

    /// SINR (linear) to spectral efficiency in b/s/Hz. At or below the
    /// minimum SINR the link carries nothing.
    pub fn spectral_efficiency(&self, sinr: f64) -> f64 {
        if !(sinr > db_to_lin(self.sinr_min_db)) {
            return 0.0;
        }
        (self.att_factor * (1.0 + sinr).log2()).min(self.se_max)
    }

    /// Transmit power before clamping, for a given edge distance.
    fn unclamped_power_dbm(&self, edge_m: f64, channels: usize, bandwidth_mhz: f64) -> f64 {
        let mut edge_loss = self.path_loss_2d_db(edge_m);
        if self.edge_gain_includes_antenna {
            edge_loss -= self.antenna_gain_dbi;
        }
        self.noise_dbm(bandwidth_mhz)
            + edge_loss
            + lin_to_db(channels.max(1) as f64)
            + self.sinr_edge_db
    }

    fn clamp_power(&self, p: f64) -> f64 {
        p.clamp(self.p_min_dbm, self.p_max_dbm)
    }
}

/// ᾱ ≈ min(D / C, 1); a cell with demand and no capacity is fully loaded.
pub fn approximate_load(demand_mbps: f64, capacity_mbps: f64) -> f64 {
    if demand_mbps <= 0.0 {
        0.0
    } else if capacity_mbps > 0.0 {
        (demand_mbps / capacity_mbps).min(1.0)
    } else {
        1.0
    }
}

/// Per-pixel link state for the serving cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelLink {
    /// Index into `NetworkState::cells`, `None` when no cell is deployed.
    pub serving: Option<usize>,
    pub rx_dbm: f64,
    /// Linear SINR averaged over the serving cell's channels.
    pub sinr: f64,
    pub se: f64,
}

impl PixelLink {
    const NONE: PixelLink = PixelLink {
        serving: None,
        rx_dbm: f64::NEG_INFINITY,
        sinr: 0.0,
        se: 0.0,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServingMap {
    pub links: Vec<PixelLink>,
}

impl ServingMap {
    pub fn serving(&self) -> Vec<Option<usize>> {
        self.links.iter().map(|l| l.serving).collect()
    }

    pub fn area_sizes(&self, num_cells: usize) -> Vec<usize> {
        let mut sizes = vec![0; num_cells];
        for l in &self.links {
            if let Some(i) = l.serving {
                sizes[i] += 1;
            }
        }
        sizes
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellMetrics {
    pub area_px: usize,
    /// D_i over the whole service area.
    pub demand_mbps: f64,
    /// Demand on pixels with SE > 0.
    pub served_mbps: f64,
    /// B̂_i, MHz.
    pub required_bw_mhz: f64,
    /// SE̅_i: demand-weighted harmonic mean over served pixels, or the
    /// plain area mean when the cell carries no demand.
    pub mean_se: f64,
    pub capacity_mbps: f64,
    pub load: f64,
    /// Zero capacity with nonzero demand.
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequiredBandwidth {
    /// B_{i,u} for the serving cell, 0 where there is no demand or SE = 0.
    pub per_pixel: Vec<f64>,
    pub per_sc: Vec<f64>,
    /// Pixels with demand but zero SE.
    pub holes: Vec<usize>,
    pub unserved_mbps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub powers_dbm: Vec<f64>,
    pub serving: ServingMap,
    pub cells: Vec<CellMetrics>,
    pub pass1_loads: Vec<f64>,
    pub holes: Vec<usize>,
    pub unserved_mbps: f64,
}

impl Evaluation {
    pub fn required_bw(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.required_bw_mhz).collect()
    }

    pub fn total_required_bw(&self) -> f64 {
        self.cells.iter().map(|c| c.required_bw_mhz).sum()
    }

    pub fn served_mbps(&self) -> f64 {
        self.cells.iter().map(|c| c.served_mbps).sum()
    }

    pub fn loads(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.load).collect()
    }
}

#[derive(Clone, Debug)]
pub struct RadioModel {
    grid: ScenarioGrid,
    budget: LinkBudget,
    bandwidth_mhz: f64,
    noise_mw: f64,
    /// Linear gain (antenna gain minus path loss) by |dcol| + |drow| * nx.
    gain_lut: Vec<f64>,
    exec: Exec,
}

impl RadioModel {
    pub fn new(grid: &ScenarioGrid, plan: &ChannelPlan, budget: LinkBudget) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let res = grid.resolution_m();
        let floor = res / 2.0;
        let mut gain_lut = Vec::with_capacity(nx * ny);
        for dr in 0..ny {
            for dc in 0..nx {
                let d = ((dc as f64).hypot(dr as f64) * res).max(floor);
                gain_lut.push(db_to_lin(
                    budget.antenna_gain_dbi - budget.path_loss_2d_db(d),
                ));
            }
        }
        let noise_mw = db_to_lin(budget.noise_dbm(plan.bandwidth_mhz));
        Self {
            grid: grid.clone(),
            budget,
            bandwidth_mhz: plan.bandwidth_mhz,
            noise_mw,
            gain_lut,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn grid(&self) -> &ScenarioGrid {
        &self.grid
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    /// Linear gain between a site and a pixel, antenna gain included.
    /// Horizontal distance is floored at half a pixel.
    pub fn path_gain(&self, site: usize, u: usize) -> f64 {
        let (sc, sr) = self.grid.col_row(site);
        let (uc, ur) = self.grid.col_row(u);
        self.gain_lut[sc.abs_diff(uc) + sr.abs_diff(ur) * self.grid.nx()]
    }

    /// Cell-edge distance used for power dimensioning: (√3/2)·ISD, or the
    /// fallback range for an isolated cell.
    pub fn edge_distance_m(&self, state: &NetworkState, idx: usize) -> f64 {
        let site = state.cells[idx].site;
        let isd = state
            .cells
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != idx)
            .map(|(_, c)| self.grid.distance(site, c.site))
            .fold(f64::INFINITY, f64::min);
        if isd.is_finite() {
            return 3f64.sqrt() / 2.0 * isd;
        }
        self.fallback_range_m(state.cells[idx].channels.len())
    }

    /// Half the scenario diagonal, shortened so the unclamped power does
    /// not exceed `p_max` when that is reachable.
    fn fallback_range_m(&self, channels: usize) -> f64 {
        let b = &self.budget;
        let half_diag = self.grid.half_diagonal_m();
        if b.unclamped_power_dbm(half_diag, channels, self.bandwidth_mhz) <= b.p_max_dbm {
            return half_diag;
        }
        let mut loss = b.p_max_dbm
            - b.noise_dbm(self.bandwidth_mhz)
            - lin_to_db(channels.max(1) as f64)
            - b.sinr_edge_db;
        if b.edge_gain_includes_antenna {
            loss += b.antenna_gain_dbi;
        }
        let d3d = b.distance_for_loss(loss);
        let dh = b.height_diff_m();
        let d2d = if d3d > dh {
            (d3d * d3d - dh * dh).sqrt()
        } else {
            0.0
        };
        d2d.max(self.grid.resolution_m() / 2.0).min(half_diag)
    }

    /// P̂_i in dBm for every deployed cell.
    pub fn set_powers(&self, state: &NetworkState) -> Vec<f64> {
        (0..state.cells.len())
            .map(|i| {
                let edge = self.edge_distance_m(state, i);
                let p = self.budget.unclamped_power_dbm(
                    edge,
                    state.cells[i].channels.len(),
                    self.bandwidth_mhz,
                );
                self.budget.clamp_power(p)
            })
            .collect()
    }

    /// Strongest-server partition for the given powers. Ties go to the
    /// lower cell index.
    pub fn serving_map(&self, state: &NetworkState, powers_dbm: &[f64]) -> ServingMap {
        let ones = vec![1.0; state.cells.len()];
        ServingMap {
            links: self.pixel_links(state, powers_dbm, &ones, false),
        }
    }

    /// Per-pixel serving cell, received power, channel-averaged SINR and SE
    /// with interferers weighted by `loads`.
    pub fn sinr_and_se(
        &self,
        state: &NetworkState,
        powers_dbm: &[f64],
        loads: &[f64],
    ) -> ServingMap {
        ServingMap {
            links: self.pixel_links(state, powers_dbm, loads, true),
        }
    }

    fn pixel_links(
        &self,
        state: &NetworkState,
        powers_dbm: &[f64],
        loads: &[f64],
        with_sinr: bool,
    ) -> Vec<PixelLink> {
        let n = state.cells.len();
        let npx = self.grid.num_pixels();
        if n == 0 {
            return vec![PixelLink::NONE; npx];
        }
        let sites: Vec<usize> = state.cells.iter().map(|c| c.site).collect();
        let chans: Vec<ChannelSet> = state.cells.iter().map(|c| c.channels).collect();
        let p_mw: Vec<f64> = powers_dbm.iter().map(|&p| db_to_lin(p)).collect();
        let nx = self.grid.nx();
        let k = state.plan.k;

        let rows = par::map_range(self.exec, self.grid.ny(), |row| {
            let mut rx = vec![0.0; n];
            let mut out = Vec::with_capacity(nx);
            for col in 0..nx {
                let u = row * nx + col;
                let mut best = 0;
                for i in 0..n {
                    rx[i] = p_mw[i] * self.path_gain(sites[i], u);
                    if rx[i] > rx[best] {
                        best = i;
                    }
                }
                let (sinr, se) = if with_sinr {
                    let own = chans[best];
                    let mut acc = 0.0;
                    for ch in own.iter().filter(|&c| c < k) {
                        let mut interference = 0.0;
                        for j in 0..n {
                            if j != best && chans[j].contains(ch) {
                                interference += loads[j] * rx[j];
                            }
                        }
                        acc += rx[best] / (interference + self.noise_mw);
                    }
                    let sinr = if own.is_empty() {
                        0.0
                    } else {
                        acc / own.len() as f64
                    };
                    (sinr, self.budget.spectral_efficiency(sinr))
                } else {
                    (0.0, 0.0)
                };
                out.push(PixelLink {
                    serving: Some(best),
                    rx_dbm: lin_to_db(rx[best]),
                    sinr,
                    se,
                });
            }
            out
        });
        rows.into_iter().flatten().collect()
    }

    /// B_{i,u} = d_u / SE_i(u), aggregated per serving cell.
    pub fn required_bandwidth(
        &self,
        serving: &ServingMap,
        demand: &[f64],
        num_cells: usize,
    ) -> RequiredBandwidth {
        let mut per_pixel = vec![0.0; demand.len()];
        let mut per_sc = vec![0.0; num_cells];
        let mut holes = Vec::new();
        let mut unserved = 0.0;
        for (u, (link, &d)) in serving.links.iter().zip(demand).enumerate() {
            if d <= 0.0 {
                continue;
            }
            match link.serving {
                Some(i) if link.se > 0.0 => {
                    let b = d / link.se;
                    per_pixel[u] = b;
                    per_sc[i] += b;
                }
                _ => {
                    holes.push(u);
                    unserved += d;
                }
            }
        }
        RequiredBandwidth {
            per_pixel,
            per_sc,
            holes,
            unserved_mbps: unserved,
        }
    }

    fn cell_metrics(
        &self,
        state: &NetworkState,
        serving: &ServingMap,
        demand: &[f64],
    ) -> (Vec<CellMetrics>, RequiredBandwidth) {
        let n = state.cells.len();
        let req = self.required_bandwidth(serving, demand, n);
        let mut cells = vec![CellMetrics::default(); n];
        let mut se_sum = vec![0.0; n];
        for (link, &d) in serving.links.iter().zip(demand) {
            if let Some(i) = link.serving {
                let c = &mut cells[i];
                c.area_px += 1;
                c.demand_mbps += d;
                if link.se > 0.0 {
                    c.served_mbps += d;
                }
                se_sum[i] += link.se;
            }
        }
        for (i, c) in cells.iter_mut().enumerate() {
            c.required_bw_mhz = req.per_sc[i];
            c.mean_se = if c.required_bw_mhz > 0.0 {
                c.served_mbps / c.required_bw_mhz
            } else if c.area_px > 0 {
                se_sum[i] / c.area_px as f64
            } else {
                0.0
            };
            c.capacity_mbps = state.cells[i].channels.len() as f64 * self.bandwidth_mhz * c.mean_se;
            c.saturated = c.capacity_mbps <= 0.0 && c.demand_mbps > 0.0;
            c.load = approximate_load(c.demand_mbps, c.capacity_mbps);
        }
        (cells, req)
    }

    /// Full model evaluation with the two-pass load approximation: pass 1
    /// uses full load everywhere, pass 2 uses min(D_j / C_j, 1) from pass 1.
    pub fn evaluate(&self, state: &NetworkState, demand: &[f64]) -> Evaluation {
        let powers = self.set_powers(state);
        let ones = vec![1.0; state.cells.len()];
        let pass1 = self.sinr_and_se(state, &powers, &ones);
        let (cells1, _) = self.cell_metrics(state, &pass1, demand);
        let loads: Vec<f64> = cells1.iter().map(|c| c.load).collect();
        let serving = self.sinr_and_se(state, &powers, &loads);
        let (cells, req) = self.cell_metrics(state, &serving, demand);
        Evaluation {
            powers_dbm: powers,
            serving,
            cells,
            pass1_loads: loads,
            holes: req.holes,
            unserved_mbps: req.unserved_mbps,
        }
    }

    /// Per-cell change in B̂ if a third pass were run with the pass-2 loads.
    pub fn load_convergence_delta(&self, state: &NetworkState, demand: &[f64]) -> Vec<f64> {
        let ev = self.evaluate(state, demand);
        let pass3 = self.sinr_and_se(state, &ev.powers_dbm, &ev.loads());
        let (cells3, _) = self.cell_metrics(state, &pass3, demand);
        ev.cells
            .iter()
            .zip(&cells3)
            .map(|(a, b)| b.required_bw_mhz - a.required_bw_mhz)
            .collect()
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::scenario::{ChannelPlan, ChannelSet, NetworkState, ScenarioGrid};
    use proptest::prelude::*;

    fn grid(n: usize) -> ScenarioGrid {
        ScenarioGrid::from_pixels(n, n, 5.0).unwrap()
    }

    fn state_with(sites: &[(usize, &[usize])]) -> NetworkState {
        let mut st = NetworkState::new(ChannelPlan::default(), vec![]);
        for (site, ch) in sites {
            st.deploy(*site, ChannelSet::from_channels(ch.iter().copied()));
        }
        st
    }

    #[test]
    fn inh_los_at_fifty_meters() {
        let b = LinkBudget::default();
        assert!((b.path_loss_db(50.0) - 75.491_993_16).abs() < 1e-6);
        assert!((b.path_loss_db(100.0) - b.path_loss_db(50.0) - 5.087_406_927).abs() < 1e-6);
    }

    #[test]
    fn colocated_pixel_uses_distance_floor() {
        let g = grid(10);
        let b = LinkBudget::default();
        let m = RadioModel::new(&g, &ChannelPlan::default(), b.clone());
        let gain = m.path_gain(22, 22);
        let expected = db_to_lin(b.antenna_gain_dbi - b.path_loss_2d_db(2.5));
        assert!(gain.is_finite() && gain > 0.0);
        assert!((gain / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_over_one_channel() {
        let b = LinkBudget::default();
        assert!((b.noise_dbm(20.0) + 91.989_700_04).abs() < 1e-6);
    }

    #[test]
    fn power_clamping_and_channel_scaling() {
        let b = LinkBudget::default();
        assert_eq!(b.clamp_power(30.0), 24.0);
        assert_eq!(b.clamp_power(-3.0), 10.0);
        let one = b.unclamped_power_dbm(80.0, 1, 20.0);
        let two = b.unclamped_power_dbm(80.0, 2, 20.0);
        assert!((two - one - 3.010_299_957).abs() < 1e-6);
    }

    #[test]
    fn powers_follow_isd() {
        let g = grid(80);
        let b = LinkBudget {
            propagation: Propagation::Nlos,
            ..LinkBudget::default()
        };
        let m = RadioModel::new(&g, &ChannelPlan::default(), b.clone());
        let st = state_with(&[(g.pixel_at(10, 10), &[0]), (g.pixel_at(14, 10), &[1])]);
        // ISD 20 m, edge at √3/2 of it
        let edge = m.edge_distance_m(&st, 0);
        assert!((edge - 3f64.sqrt() / 2.0 * 20.0).abs() < 1e-9);
        let p = m.set_powers(&st);
        let expected = b.clamp_power(b.noise_dbm(20.0) + b.path_loss_2d_db(edge) + b.sinr_edge_db);
        assert!((p[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn isolated_cell_fallback_range() {
        let g = grid(80);
        let m = RadioModel::new(&g, &ChannelPlan::default(), LinkBudget::default());
        let st = state_with(&[(100, &[0])]);
        // LOS power at the half diagonal is below p_max, so the full range applies.
        assert!((m.edge_distance_m(&st, 0) - g.half_diagonal_m()).abs() < 1e-9);

        let nlos = LinkBudget {
            propagation: Propagation::Nlos,
            ..LinkBudget::default()
        };
        let m = RadioModel::new(&g, &ChannelPlan::default(), nlos.clone());
        let r = m.edge_distance_m(&st, 0);
        assert!(r < g.half_diagonal_m());
        let p = nlos.unclamped_power_dbm(r, 1, 20.0);
        assert!((p - nlos.p_max_dbm).abs() < 1e-6);
    }

    #[test]
    fn se_mapping_boundaries() {
        let b = LinkBudget::default();
        assert_eq!(b.spectral_efficiency(db_to_lin(-10.0)), 0.0);
        assert_eq!(b.spectral_efficiency(db_to_lin(-12.0)), 0.0);
        assert!((b.spectral_efficiency(db_to_lin(17.59)) - 4.4).abs() < 1e-9);
        assert!((b.spectral_efficiency(db_to_lin(30.0)) - 4.4).abs() < 1e-9);
        assert!(b.spectral_efficiency(db_to_lin(17.5)) < 4.4);
        let g = db_to_lin(5.0);
        assert!((b.spectral_efficiency(g) - 0.75 * (1.0 + g).log2()).abs() < 1e-12);
    }

    #[test]
    fn load_approximation() {
        assert_eq!(approximate_load(30.0, 60.0), 0.5);
        assert_eq!(approximate_load(80.0, 60.0), 1.0);
        assert_eq!(approximate_load(0.0, 0.0), 0.0);
        assert_eq!(approximate_load(5.0, 0.0), 1.0);
    }

    #[test]
    fn single_cell_serves_everything_noise_limited() {
        let g = grid(12);
        let m = RadioModel::new(&g, &ChannelPlan::default(), LinkBudget::default());
        let st = state_with(&[(40, &[0, 1])]);
        let p = m.set_powers(&st);
        let sm = m.sinr_and_se(&st, &p, &[1.0]);
        for (u, l) in sm.links.iter().enumerate() {
            assert_eq!(l.serving, Some(0));
            let rx = db_to_lin(p[0]) * m.path_gain(40, u);
            assert!((l.sinr / (rx / m.noise_mw()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let g = ScenarioGrid::from_pixels(5, 1, 5.0).unwrap();
        let m = RadioModel::new(&g, &ChannelPlan::default(), LinkBudget::default());
        let st = state_with(&[(0, &[0]), (4, &[1])]);
        let p = m.set_powers(&st);
        assert_eq!(p[0], p[1]);
        let sm = m.serving_map(&st, &p);
        assert_eq!(sm.links[2].serving, Some(0));
        assert_eq!(sm.links[3].serving, Some(1));
    }

    #[test]
    fn empty_network_has_no_servers() {
        let g = grid(4);
        let m = RadioModel::new(&g, &ChannelPlan::default(), LinkBudget::default());
        let st = state_with(&[]);
        let ev = m.evaluate(&st, &[1.0; 16]);
        assert!(ev.serving.links.iter().all(|l| l.serving.is_none()));
        assert_eq!(ev.holes.len(), 16);
        assert_eq!(ev.unserved_mbps, 16.0);
    }

    #[test]
    fn required_bandwidth_division_and_zero() {
        let g = grid(2);
        let m = RadioModel::new(&g, &ChannelPlan::default(), LinkBudget::default());
        let link = |se| PixelLink {
            serving: Some(0),
            rx_dbm: 0.0,
            sinr: 1.0,
            se,
        };
        let sm = ServingMap {
            links: vec![link(4.0), link(0.0), link(2.0), link(1.0)],
        };
        let r = m.required_bandwidth(&sm, &[2.0, 1.0, 0.0, 0.0], 1);
        assert_eq!(r.per_pixel[0], 0.5);
        assert_eq!(r.per_sc, vec![0.5]);
        assert_eq!(r.holes, vec![1]);
        assert_eq!(r.unserved_mbps, 1.0);
        let z = m.required_bandwidth(&sm, &[0.0; 4], 1);
        assert_eq!(z.per_sc, vec![0.0]);
    }

    /// Direct per-pixel model with no lookup tables, used as an oracle.
    fn brute_force(
        g: &ScenarioGrid,
        b: &LinkBudget,
        st: &NetworkState,
        powers: &[f64],
        demand: &[f64],
    ) -> (Vec<usize>, Vec<f64>) {
        let n = st.cells.len();
        let noise = 10f64.powf((-174.0 + 10.0 * (20e6f64).log10() + 9.0) / 10.0);
        let rx = |i: usize, u: usize| {
            let (sx, sy) = g.center(st.cells[i].site);
            let (ux, uy) = g.center(u);
            let d2 = ((sx - ux).powi(2) + (sy - uy).powi(2)).sqrt().max(2.5);
            let d3 = (d2 * d2 + 4.5 * 4.5).sqrt();
            let pl = 16.9 * d3.log10() + 32.8 + 20.0 * 5f64.log10();
            10f64.powf((powers[i] + b.antenna_gain_dbi - pl) / 10.0)
        };
        let serving: Vec<usize> = (0..g.num_pixels())
            .map(|u| {
                let mut best = 0;
                for i in 1..n {
                    if rx(i, u) > rx(best, u) {
                        best = i;
                    }
                }
                best
            })
            .collect();
        let pass = |loads: &[f64]| -> Vec<f64> {
            (0..g.num_pixels())
                .map(|u| {
                    let s = serving[u];
                    let chans: Vec<usize> = st.cells[s].channels.iter().collect();
                    let mut sum = 0.0;
                    for &k in &chans {
                        let mut i_sum = 0.0;
                        for j in 0..n {
                            if j != s && st.cells[j].channels.contains(k) {
                                i_sum += loads[j] * rx(j, u);
                            }
                        }
                        sum += rx(s, u) / (i_sum + noise);
                    }
                    let sinr = sum / chans.len() as f64;
                    if sinr <= 0.1 {
                        0.0
                    } else {
                        (0.75 * (1.0 + sinr).log2()).min(4.4)
                    }
                })
                .collect()
        };
        let cell_b = |se: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for u in 0..g.num_pixels() {
                if demand[u] > 0.0 && se[u] > 0.0 {
                    out[serving[u]] += demand[u] / se[u];
                }
            }
            out
        };
        let se1 = pass(&vec![1.0; n]);
        let b1 = cell_b(&se1);
        let loads: Vec<f64> = (0..n)
            .map(|i| {
                let d: f64 = (0..g.num_pixels())
                    .filter(|&u| serving[u] == i)
                    .map(|u| demand[u])
                    .sum();
                let served: f64 = (0..g.num_pixels())
                    .filter(|&u| serving[u] == i && se1[u] > 0.0)
                    .map(|u| demand[u])
                    .sum();
                let cap = st.cells[i].channels.len() as f64 * 20.0 * served / b1[i];
                if d <= 0.0 {
                    0.0
                } else {
                    (d / cap).min(1.0)
                }
            })
            .collect();
        let bhat = cell_b(&pass(&loads));
        (serving, bhat)
    }

    #[test]
    fn three_cell_toy_matches_brute_force() {
        let g = grid(24);
        let b = LinkBudget::default();
        let m = RadioModel::new(&g, &ChannelPlan::default(), b.clone());
        let st = state_with(&[
            (g.pixel_at(3, 4), &[0, 1]),
            (g.pixel_at(18, 6), &[1, 2]),
            (g.pixel_at(10, 19), &[0, 3]),
        ]);
        let demand: Vec<f64> = (0..g.num_pixels())
            .map(|u| ((u * 7919) % 13) as f64 * 0.01)
            .collect();
        let ev = m.evaluate(&st, &demand);
        let (serving, bhat) = brute_force(&g, &b, &st, &ev.powers_dbm, &demand);
        for (l, s) in ev.serving.links.iter().zip(&serving) {
            assert_eq!(l.serving, Some(*s));
        }
        for (a, e) in ev.required_bw().iter().zip(&bhat) {
            assert!((a - e).abs() <= 1e-9 * e.max(1.0), "{a} vs {e}");
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let g = grid(30);
        let plan = ChannelPlan::default();
        let st = state_with(&[(35, &[0, 1]), (500, &[1]), (880, &[0, 2, 3])]);
        let demand: Vec<f64> = (0..g.num_pixels()).map(|u| (u % 5) as f64).collect();
        let a = RadioModel::new(&g, &plan, LinkBudget::default()).with_exec(Exec::Parallel);
        let b = RadioModel::new(&g, &plan, LinkBudget::default()).with_exec(Exec::Sequential);
        assert_eq!(a.evaluate(&st, &demand), b.evaluate(&st, &demand));
    }

    #[test]
    fn load_convergence_delta_is_reported() {
        let g = grid(30);
        let m = RadioModel::new(&g, &ChannelPlan::default(), LinkBudget::default());
        let st = state_with(&[(35, &[0, 1]), (500, &[0, 1]), (880, &[0, 1])]);
        let demand = vec![0.05; g.num_pixels()];
        let delta = m.load_convergence_delta(&st, &demand);
        assert_eq!(delta.len(), 3);
        assert!(delta.iter().all(|d| d.is_finite()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn se_bounded_and_partition_total(
            sites in proptest::collection::btree_set(0usize..400, 1..6),
            seed in 0u64..1000,
        ) {
            let g = grid(20);
            let m = RadioModel::new(&g, &ChannelPlan::default(), LinkBudget::default());
            let mut st = NetworkState::new(ChannelPlan::default(), vec![]);
            for (n, s) in sites.iter().enumerate() {
                let ch = ((seed as usize + n) % 4, (seed as usize + 2 * n + 1) % 4);
                st.deploy(*s, ChannelSet::from_channels([ch.0, ch.1]));
            }
            let demand: Vec<f64> = (0..400).map(|u| ((u as u64 * 31 + seed) % 7) as f64 * 0.1).collect();
            let ev = m.evaluate(&st, &demand);
            prop_assert!(ev.serving.links.iter().all(|l| l.se >= 0.0 && l.se <= 4.4));
            let sizes = ev.serving.area_sizes(st.len());
            prop_assert_eq!(sizes.iter().sum::<usize>(), 400);
            prop_assert!(ev.loads().iter().all(|a| (0.0..=1.0).contains(a)));
            let cap = st.cells.iter().zip(&ev.cells)
                .map(|(c, m)| c.channels.len() as f64 * 20.0 * m.mean_se);
            for (c, m) in cap.zip(&ev.cells) {
                prop_assert!((c - m.capacity_mbps).abs() < 1e-9);
            }
        }
    }
}
