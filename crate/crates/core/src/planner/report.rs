use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ChannelSet, NetworkState, ScId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    AddChannel,
    RemoveChannel,
    DeploySc,
    RemoveSc,
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionKind::AddChannel => "add_channel",
            ActionKind::RemoveChannel => "remove_channel",
            ActionKind::DeploySc => "deploy_sc",
            ActionKind::RemoveSc => "remove_sc",
        })
    }
}

/// One planning action. `channels` is the cell's full channel set after
/// the action (empty for removals), so replay never re-runs selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub step: usize,
    pub kind: ActionKind,
    pub sc: ScId,
    pub site: usize,
    pub channels: ChannelSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub sc: ScId,
    pub site: usize,
    pub req_bw_mhz: f64,
    pub cell_bw_mhz: f64,
}

impl CellSummary {
    pub fn shortage_mhz(&self) -> f64 {
        (self.req_bw_mhz - self.cell_bw_mhz).max(0.0)
    }
}

/// Network totals in the shape of a before/after deployment table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub num_scs: usize,
    pub num_channels: usize,
    pub req_bw_mhz: f64,
    pub cell_bw_mhz: f64,
    pub shortage_mhz: f64,
}

pub fn summarize(state: &NetworkState, required_bw: &[f64]) -> Vec<CellSummary> {
    state
        .cells
        .iter()
        .zip(required_bw)
        .enumerate()
        .map(|(i, (c, &b))| CellSummary {
            sc: c.id,
            site: c.site,
            req_bw_mhz: b,
            cell_bw_mhz: state.cell_bandwidth_mhz(i),
        })
        .collect()
}

pub fn totals(cells: &[CellSummary], bandwidth_mhz: f64) -> Totals {
    let mut t = Totals {
        num_scs: cells.len(),
        ..Totals::default()
    };
    for c in cells {
        t.req_bw_mhz += c.req_bw_mhz;
        t.cell_bw_mhz += c.cell_bw_mhz;
        t.shortage_mhz += c.shortage_mhz();
    }
    t.num_channels = (t.cell_bw_mhz / bandwidth_mhz).round() as usize;
    t
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub actions: Vec<Action>,
    pub before: Vec<CellSummary>,
    pub after: Vec<CellSummary>,
    /// Full passes over the four phases, including the final empty one.
    pub sweeps: usize,
    /// Shortage left with every cell at K_max and no room to deploy.
    pub saturated: bool,
}

impl PlanReport {
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn residual_shortage_mhz(&self) -> f64 {
        self.after.iter().map(CellSummary::shortage_mhz).sum()
    }

    /// Applies the recorded actions to `initial`.
    pub fn replay(&self, initial: &NetworkState) -> Result<NetworkState> {
        replay(initial, &self.actions)
    }

    /// Actions CSV: `step,action,sc_id,site_pixel,channel,k`. The channel
    /// column lists the resulting 1-based channel set joined by `;`.
    pub fn write_actions_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "action", "sc_id", "site_pixel", "channel", "k"])?;
        for a in &self.actions {
            out.write_record([
                a.step.to_string(),
                a.kind.to_string(),
                a.sc.to_string(),
                a.site.to_string(),
                a.channels.to_string(),
                a.channels.len().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per-cell table with a totals row:
/// `sc_id,req_bw_mhz,cell_bw_mhz,shortage_mhz`.
pub fn write_summary_csv<W: Write>(w: W, cells: &[CellSummary], bandwidth_mhz: f64) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sc_id", "req_bw_mhz", "cell_bw_mhz", "shortage_mhz"])?;
    for c in cells {
        out.write_record([
            c.sc.to_string(),
            format!("{:.6}", c.req_bw_mhz),
            format!("{:.6}", c.cell_bw_mhz),
            format!("{:.6}", c.shortage_mhz()),
        ])?;
    }
    let t = totals(cells, bandwidth_mhz);
    out.write_record([
        "total".to_string(),
        format!("{:.6}", t.req_bw_mhz),
        format!("{:.6}", t.cell_bw_mhz),
        format!("{:.6}", t.shortage_mhz),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn replay(initial: &NetworkState, actions: &[Action]) -> Result<NetworkState> {
    let mut st = initial.clone();
    for a in actions {
        match a.kind {
            ActionKind::AddChannel | ActionKind::RemoveChannel => {
                if !st.set_channels(a.sc, a.channels) {
                    return Err(Error::InvalidInput(format!("replay: unknown SC {}", a.sc)));
                }
            }
            ActionKind::DeploySc => {
                let id = st.deploy(a.site, a.channels);
                if id != a.sc {
                    return Err(Error::InvalidInput(format!(
                        "replay: deploy produced SC {id}, log says {}",
                        a.sc
                    )));
                }
            }
            ActionKind::RemoveSc => {
                if st.remove(a.sc).is_none() {
                    return Err(Error::InvalidInput(format!("replay: unknown SC {}", a.sc)));
                }
            }
        }
    }
    Ok(st)
}
