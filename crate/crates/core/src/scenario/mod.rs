//! Geographic grid, tenants, traffic maps and network state.

mod grid;
mod network;
mod traffic;

pub use grid::ScenarioGrid;
pub use network::{ChannelPlan, ChannelSet, NetworkState, ScId, SmallCell};
pub use traffic::{aggregate_to_cells, busy_hour, CellDemand, Tenant, TrafficMap};
