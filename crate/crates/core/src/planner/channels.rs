use crate::error::{Error, Result};
use crate::scenario::{NetworkState, ScId, ScenarioGrid};

/// Greedy channel selection for a cell at `site`.
///
/// Each pick scores every remaining channel by the distance to the closest
/// other deployed cell using it (`+inf` when unused) and takes the channel
/// with the largest score, lowest index on ties. The cell identified by
/// `skip` (the target itself, when already deployed) is ignored. Channels
/// are returned in pick order.
pub fn select_channels(
    grid: &ScenarioGrid,
    state: &NetworkState,
    site: usize,
    skip: Option<ScId>,
    k: usize,
) -> Result<Vec<usize>> {
    let total = state.plan.k;
    if k > total {
        return Err(Error::TooManyChannels {
            requested: k,
            available: total,
        });
    }
    let mut score = vec![f64::INFINITY; total];
    for cell in state.cells.iter().filter(|c| Some(c.id) != skip) {
        let d = grid.distance(site, cell.site);
        for ch in cell.channels.iter().filter(|&c| c < total) {
            if d < score[ch] {
                score[ch] = d;
            }
        }
    }
    let mut pool: Vec<usize> = (0..total).collect();
    let mut picked = Vec::with_capacity(k);
    while picked.len() < k {
        let mut best = 0;
        for (pos, &ch) in pool.iter().enumerate().skip(1) {
            if score[ch] > score[pool[best]] {
                best = pos;
            }
        }
        picked.push(pool.remove(best));
    }
    Ok(picked)
}
