use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::monitor::MonitorConfig;
use crate::planner::{select_channels, PlannerConfig};
use crate::radio::{LinkBudget, RadioModel};
use crate::scenario::{ChannelPlan, ChannelSet, NetworkState, ScenarioGrid, Tenant, TrafficMap};
use crate::sla::{busy_hour_contract, SpecMethod};
use crate::synth::{
    calibrate_to_cells, rng_for, stream, synth_base_map, synth_daily_profile, ProfileConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub width_m: f64,
    pub height_m: f64,
    pub resolution_m: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatesSection {
    /// Explicit candidate pixels. Overrides `fraction`.
    pub pixels: Option<Vec<usize>>,
    /// Share of pixels drawn at random, default 2%.
    pub fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeployedSection {
    pub pixel: usize,
    /// 1-based channel numbers; chosen by channel selection when absent.
    pub channels: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TenantSection {
    pub id: String,
    pub contracted_mbps: f64,
    #[serde(default)]
    pub demand_known: bool,
    /// Busy-hour traffic map, relative to the config file.
    pub traffic_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSection {
    #[serde(flatten)]
    pub shape: ProfileConfig,
    /// Explicit one-day profile; replaces the generated shape.
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerMode {
    #[default]
    Alg1,
    /// Deploy-only baseline with this many channels per new cell.
    Sota(usize),
}

impl PlannerMode {
    pub fn config(self, base: &PlannerConfig) -> PlannerConfig {
        match self {
            PlannerMode::Alg1 => PlannerConfig {
                baseline_mode: crate::planner::BaselineMode::Off,
                ..base.clone()
            },
            PlannerMode::Sota(k) => PlannerConfig {
                baseline_mode: crate::planner::BaselineMode::SotaFixedK,
                sota_k: k,
                ..base.clone()
            },
        }
    }
}

impl fmt::Display for PlannerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlannerMode::Alg1 => f.write_str("alg1"),
            PlannerMode::Sota(k) => write!(f, "sota{k}"),
        }
    }
}

impl FromStr for PlannerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "alg1" {
            return Ok(PlannerMode::Alg1);
        }
        s.strip_prefix("sota")
            .and_then(|k| k.parse().ok())
            .filter(|k| *k > 0)
            .map(PlannerMode::Sota)
            .ok_or_else(|| Error::InvalidInput(format!("unknown planner mode '{s}'")))
    }
}

impl Serialize for PlannerMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PlannerMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Tenant whose service is being added.
    pub new_tenant: String,
    pub method: SpecMethod,
    pub mode: PlannerMode,
    /// Pearson targets for the new tenant's actual traffic.
    pub correlations: Vec<f64>,
    pub seed: u64,
    pub replan: bool,
    /// Cells drawn when `[[deployed]]` is empty.
    pub initial_cells: usize,
    pub initial_channels: usize,
    pub min_spacing_m: f64,
    /// Cell totals the synthesized existing demand is calibrated to.
    pub base_cell_demand_mbps: Vec<f64>,
    /// Log-normal hot-spot strength of the synthesized existing demand.
    pub base_hotspot_sigma: f64,
    /// Multiplies all busy-hour demand: existing tenants' maps and the new
    /// tenant's busy-hour contract.
    pub demand_scale: f64,
    pub smoothing_radius_px: usize,
    /// Cap the new tenant's operational demand by its estimated
    /// specification when re-planning.
    pub cap_by_estimated_spec: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            new_tenant: "new".into(),
            method: SpecMethod::CorrSc,
            mode: PlannerMode::Alg1,
            correlations: vec![0.9, 0.15],
            seed: 1,
            replan: true,
            initial_cells: 3,
            initial_channels: 2,
            min_spacing_m: 100.0,
            base_cell_demand_mbps: vec![8.8, 5.6, 5.0],
            base_hotspot_sigma: 1.0,
            demand_scale: 1.0,
            smoothing_radius_px: 6,
            cap_by_estimated_spec: false,
        }
    }
}

/// The config file: scenario sections plus model and experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    #[serde(default)]
    pub channels: ChannelPlan,
    #[serde(default)]
    pub candidates: CandidatesSection,
    #[serde(default)]
    pub deployed: Vec<DeployedSection>,
    pub tenants: Vec<TenantSection>,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub radio: LinkBudget,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.into(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// The reference scenario: 400 m × 400 m at 5 m, 2% candidate sites, three
    /// initial cells, one existing tenant and one new tenant.
    pub fn reference(seed: u64) -> Self {
        let text = format!(
            "[grid]\nwidth_m = 400.0\nheight_m = 400.0\nresolution_m = 5.0\n\
             [[tenants]]\nid = \"existing\"\ncontracted_mbps = 20.0\n\
             [[tenants]]\nid = \"new\"\ncontracted_mbps = 60.0\ndemand_known = true\n\
             [experiment]\nseed = {seed}\n"
        );
        Self::parse(&text, "<reference>").expect("reference scenario parses")
    }

    pub fn validate(&self) -> Result<()> {
        self.channels.validate()?;
        self.radio.validate()?;
        self.monitor.validate()?;
        let e = &self.experiment;
        if !self.tenants.iter().any(|t| t.id == e.new_tenant) {
            return Err(Error::InvalidScenario(format!(
                "new tenant '{}' is not in [[tenants]]",
                e.new_tenant
            )));
        }
        let mut ids: Vec<&str> = self.tenants.iter().map(|t| t.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidScenario("duplicate tenant id".into()));
        }
        if let Some(r) = e.correlations.iter().find(|r| !(r.abs() <= 1.0)) {
            return Err(Error::InvalidScenario(format!(
                "correlation target {r} outside [-1, 1]"
            )));
        }
        if let PlannerMode::Sota(k) = e.mode {
            if k > self.channels.k {
                return Err(Error::InvalidScenario(format!(
                    "sota{k} exceeds K = {}",
                    self.channels.k
                )));
            }
        }
        if !(e.demand_scale > 0.0 && e.demand_scale.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "demand_scale = {} must be > 0",
                e.demand_scale
            )));
        }
        if e.initial_channels == 0 || e.initial_channels > self.channels.k_max {
            return Err(Error::InvalidScenario(format!(
                "initial_channels = {} must be in [1, K_max]",
                e.initial_channels
            )));
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// A fully materialized scenario: geometry, initial network, tenants and
/// existing busy-hour demand.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ConfigFile,
    pub seed: u64,
    pub grid: ScenarioGrid,
    pub initial: NetworkState,
    /// Existing tenants' busy-hour demand.
    pub existing: TrafficMap,
    pub new_tenant: Tenant,
    /// The new tenant's traffic when given as a file.
    pub new_tenant_map: Option<Vec<f64>>,
    /// A_m at the busy hour for the new tenant.
    pub new_busy_mbps: f64,
}

impl Scenario {
    pub fn model(&self) -> RadioModel {
        RadioModel::new(&self.grid, &self.initial.plan, self.config.radio.clone())
            .with_exec(self.config.planner.exec)
    }
}

fn sample_candidates(grid: &ScenarioGrid, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidScenario(format!(
            "candidate fraction {fraction} outside (0, 1]"
        )));
    }
    let n = grid.num_pixels();
    let count = ((n as f64 * fraction).round() as usize).clamp(1, n);
    let mut rng = rng_for(seed, stream::CANDIDATES);
    let mut picked = index::sample(&mut rng, n, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Draws `count` sites from `pool` at least `spacing` meters apart.
fn draw_layout(
    grid: &ScenarioGrid,
    pool: &[usize],
    count: usize,
    spacing: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut order = pool.to_vec();
    order.shuffle(&mut rng_for(seed, stream::LAYOUT));
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for s in order {
        if chosen.len() == count {
            break;
        }
        if chosen.iter().all(|&c| grid.distance(c, s) >= spacing) {
            chosen.push(s);
        }
    }
    if chosen.len() < count {
        return Err(Error::InvalidScenario(format!(
            "cannot place {count} initial cells {spacing} m apart among {} candidates",
            pool.len()
        )));
    }
    Ok(chosen)
}

/// Builds the scenario for `seed`. Random parts (candidate sites, initial
/// layout, existing demand) come from named streams of the seed; anything
/// given explicitly in the file is used as is.
pub fn build_scenario(config: &ConfigFile, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let g = &config.grid;
    let grid = ScenarioGrid::new(g.width_m, g.height_m, g.resolution_m)?;
    let e = &config.experiment;

    let mut pool = match (&config.candidates.pixels, config.candidates.fraction) {
        (Some(p), _) => {
            grid.check_pixels(p)?;
            p.clone()
        }
        (None, f) => sample_candidates(&grid, f.unwrap_or(0.02), seed)?,
    };
    pool.sort_unstable();
    pool.dedup();

    let mut state = NetworkState::new(config.channels, Vec::new());
    if config.deployed.is_empty() {
        let sites = draw_layout(&grid, &pool, e.initial_cells, e.min_spacing_m, seed)?;
        pool.retain(|p| !sites.contains(p));
        state.candidates = pool;
        for site in sites {
            let picked = select_channels(&grid, &state, site, None, e.initial_channels)?;
            state.deploy(site, ChannelSet::from_channels(picked));
        }
    } else {
        let sites: Vec<usize> = config.deployed.iter().map(|d| d.pixel).collect();
        grid.check_pixels(&sites)?;
        pool.retain(|p| !sites.contains(p));
        state.candidates = pool;
        for d in &config.deployed {
            let channels = match &d.channels {
                Some(ch) => {
                    if ch.iter().any(|&c| c == 0 || c > config.channels.k) {
                        return Err(Error::InvalidScenario(format!(
                            "SC at pixel {}: channels are numbered 1..={}",
                            d.pixel, config.channels.k
                        )));
                    }
                    ChannelSet::from_channels(ch.iter().map(|c| c - 1))
                }
                None => ChannelSet::from_channels(select_channels(
                    &grid,
                    &state,
                    d.pixel,
                    None,
                    e.initial_channels,
                )?),
            };
            state.deploy(d.pixel, channels);
        }
    }
    state.validate(&grid)?;

    let profile = match &config.profile.values {
        Some(v) => v.clone(),
        None => synth_daily_profile(&config.profile.shape)?,
    };
    let mut existing = TrafficMap::new(profile)?;
    let mut new_tenant = None;
    let mut new_tenant_map = None;
    let mut missing = Vec::new();
    let mut loaded: Vec<(String, Vec<f64>)> = Vec::new();
    for t in &config.tenants {
        let tenant = Tenant::new(&t.id, t.contracted_mbps, t.demand_known)
            .map_err(|err| Error::InvalidScenario(format!("tenant '{}': {err}", t.id)))?;
        let map = match &t.traffic_file {
            Some(p) => Some(io::read_traffic_map(&config.resolve(p), &grid)?.values),
            None => None,
        };
        if t.id == e.new_tenant {
            new_tenant = Some(tenant);
            new_tenant_map = map.map(|m| m.iter().map(|v| v * e.demand_scale).collect());
        } else {
            match map {
                Some(m) => loaded.push((t.id.clone(), m)),
                None => missing.push(tenant),
            }
        }
    }
    let new_tenant = new_tenant.expect("validated above");

    if !missing.is_empty() {
        let model = RadioModel::new(&grid, &state.plan, config.radio.clone());
        let serving = model
            .evaluate(&state, &vec![0.0; grid.num_pixels()])
            .serving
            .serving();
        let targets = &e.base_cell_demand_mbps;
        if targets.len() != state.len() {
            return Err(Error::InvalidScenario(format!(
                "base_cell_demand_mbps has {} values for {} initial cells",
                targets.len(),
                state.len()
            )));
        }
        let total: f64 = targets.iter().sum();
        let raw = synth_base_map(
            grid.nx(),
            grid.ny(),
            e.smoothing_radius_px,
            e.base_hotspot_sigma,
            total,
            seed,
        );
        let base = calibrate_to_cells(&raw, &serving, targets)?;
        // Tenants without a map share the synthesized demand by contract.
        let weight: f64 = missing.iter().map(|t| t.contracted_mbps).sum();
        for t in &missing {
            let share = t.contracted_mbps / weight;
            loaded.push((t.id.clone(), base.iter().map(|v| v * share).collect()));
        }
    }
    for t in &config.tenants {
        if let Some(pos) = loaded.iter().position(|(id, _)| *id == t.id) {
            let (id, m) = loaded.swap_remove(pos);
            existing.push_layer(id, m.iter().map(|v| v * e.demand_scale).collect())?;
        }
    }
    let new_busy_mbps =
        e.demand_scale * busy_hour_contract(new_tenant.contracted_mbps, existing.daily_profile())?;

    Ok(Scenario {
        config: config.clone(),
        seed,
        grid,
        initial: state,
        existing,
        new_tenant,
        new_tenant_map,
        new_busy_mbps,
    })
}
