use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ScenarioGrid;

/// Set of channel indices (0-based) allocated to one small cell.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelSet(u64);

impl ChannelSet {
    pub const MAX_CHANNELS: usize = 64;

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_channels<I: IntoIterator<Item = usize>>(channels: I) -> Self {
        let mut set = Self::empty();
        for c in channels {
            set.insert(c);
        }
        set
    }

    pub fn insert(&mut self, channel: usize) {
        assert!(
            channel < Self::MAX_CHANNELS,
            "channel index {channel} out of range"
        );
        self.0 |= 1 << channel;
    }

    pub fn contains(&self, channel: usize) -> bool {
        channel < Self::MAX_CHANNELS && self.0 & (1 << channel) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    /// Channels in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.0;
        (0..Self::MAX_CHANNELS).filter(move |c| bits & (1 << c) != 0)
    }
}

impl fmt::Debug for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c + 1)).finish()
    }
}

/// 1-based channel list joined by `;`, as written in report files.
impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in self.iter() {
            if !first {
                f.write_str(";")?;
            }
            write!(f, "{}", c + 1)?;
            first = false;
        }
        Ok(())
    }
}

/// Stable identifier of a deployed small cell. Ids grow with deployment order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScId(pub u32);

impl fmt::Display for ScId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallCell {
    pub id: ScId,
    pub site: usize,
    pub channels: ChannelSet,
}

/// Spectrum partition: `k` orthogonal channels of `bandwidth_mhz` each.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub k: usize,
    pub bandwidth_mhz: f64,
    pub k_max: usize,
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > ChannelSet::MAX_CHANNELS {
            return Err(Error::InvalidScenario(format!(
                "channel count K = {} out of range",
                self.k
            )));
        }
        if self.k_max == 0 || self.k_max > self.k {
            return Err(Error::InvalidScenario(format!(
                "K_max = {} must be in [1, K = {}]",
                self.k_max, self.k
            )));
        }
        if !(self.bandwidth_mhz > 0.0) {
            return Err(Error::InvalidScenario(
                "channel bandwidth must be > 0".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ChannelPlan {
    fn default() -> Self {
        Self {
            k: 4,
            bandwidth_mhz: 20.0,
            k_max: 3,
        }
    }
}

/// Deployed small cells plus the pool of free candidate sites.
///
/// `candidates` holds U_C without the committed sites, so deployed and
/// free candidate sites are always disjoint. Cell order is deployment
/// order; "lowest SC index" means first in `cells`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub plan: ChannelPlan,
    pub cells: Vec<SmallCell>,
    pub candidates: Vec<usize>,
    next_id: u32,
}

impl NetworkState {
    pub fn new(plan: ChannelPlan, mut candidates: Vec<usize>) -> Self {
        candidates.sort_unstable();
        candidates.dedup();
        Self {
            plan,
            cells: Vec::new(),
            candidates,
            next_id: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_channels(&self) -> usize {
        self.cells.iter().map(|c| c.channels.len()).sum()
    }

    pub fn cell_bandwidth_mhz(&self, idx: usize) -> f64 {
        self.cells[idx].channels.len() as f64 * self.plan.bandwidth_mhz
    }

    pub fn index_of(&self, id: ScId) -> Option<usize> {
        self.cells.iter().position(|c| c.id == id)
    }

    pub fn sites(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.site).collect()
    }

    /// Deploys a cell at `site`, removing it from the free candidates if
    /// present. Returns the new cell's id.
    pub fn deploy(&mut self, site: usize, channels: ChannelSet) -> ScId {
        let id = ScId(self.next_id);
        self.next_id += 1;
        if let Ok(pos) = self.candidates.binary_search(&site) {
            self.candidates.remove(pos);
        }
        self.cells.push(SmallCell { id, site, channels });
        id
    }

    /// Removes a cell and returns its site to the candidate pool.
    pub fn remove(&mut self, id: ScId) -> Option<SmallCell> {
        let idx = self.index_of(id)?;
        let cell = self.cells.remove(idx);
        if let Err(pos) = self.candidates.binary_search(&cell.site) {
            self.candidates.insert(pos, cell.site);
        }
        Some(cell)
    }

    pub fn set_channels(&mut self, id: ScId, channels: ChannelSet) -> bool {
        match self.index_of(id) {
            Some(i) => {
                self.cells[i].channels = channels;
                true
            }
            None => false,
        }
    }

    pub fn validate(&self, grid: &ScenarioGrid) -> Result<()> {
        self.plan.validate()?;
        grid.check_pixels(&self.candidates)?;
        for cell in &self.cells {
            grid.check_pixels(&[cell.site])?;
            let n = cell.channels.len();
            if n == 0 || n > self.plan.k_max {
                return Err(Error::InvalidScenario(format!(
                    "SC {} has {n} channels, expected 1..={}",
                    cell.id, self.plan.k_max
                )));
            }
            if cell.channels.iter().any(|c| c >= self.plan.k) {
                return Err(Error::InvalidScenario(format!(
                    "SC {} uses a channel beyond K = {}",
                    cell.id, self.plan.k
                )));
            }
            if self.candidates.binary_search(&cell.site).is_ok() {
                return Err(Error::InvalidScenario(format!(
                    "site {} is both deployed and a free candidate",
                    cell.site
                )));
            }
        }
        let mut sites = self.sites();
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidScenario("two cells share a site".into()));
        }
        Ok(())
    }
}
