//! Capacity dimensioning and planning: the four-phase greedy planner, the
//! distance-based channel selection, and the deploy-only baseline.

mod alg;
mod channels;
mod evaluator;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::scenario::NetworkState;

pub use alg::{plan, plan_sota};
pub use channels::select_channels;
pub use evaluator::{DemandLayer, ModelEvaluator, PerformanceModel, PlanningDemand};
pub use report::{
    replay, summarize, totals, write_summary_csv, Action, ActionKind, CellSummary, PlanReport,
    Totals,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    #[default]
    Off,
    SotaFixedK,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n_max_sc: usize,
    pub baseline_mode: BaselineMode,
    pub sota_k: usize,
    /// Reject channel and cell removals that would push any cell further
    /// over its conformance threshold.
    pub removal_guard: bool,
    /// Overrides the per-loop iteration cap of 4·N_max_sc·K_max.
    pub max_iterations: Option<usize>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            beta: 0.7,
            gamma: 0.05,
            n_max_sc: 10,
            baseline_mode: BaselineMode::Off,
            sota_k: 2,
            removal_guard: true,
            max_iterations: None,
            exec: Exec::default(),
        }
    }
}

impl PlannerConfig {
    pub fn sota(k: usize) -> Self {
        Self {
            baseline_mode: BaselineMode::SotaFixedK,
            sota_k: k,
            ..Self::default()
        }
    }

    pub fn validate(&self, state: &NetworkState) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidScenario(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        if self.beta >= self.alpha {
            return Err(Error::InvalidScenario(format!(
                "beta ({}) must be below alpha ({})",
                self.beta, self.alpha
            )));
        }
        if self.n_max_sc < state.len() {
            return Err(Error::InvalidScenario(format!(
                "N_max_sc = {} is below the {} deployed cells",
                self.n_max_sc,
                state.len()
            )));
        }
        if self.baseline_mode == BaselineMode::SotaFixedK
            && (self.sota_k == 0 || self.sota_k > state.plan.k)
        {
            return Err(Error::InvalidScenario(format!(
                "sota_k = {} must be in [1, K = {}]",
                self.sota_k, state.plan.k
            )));
        }
        Ok(())
    }

    /// Iteration cap applied to every phase loop.
    pub fn iteration_cap(&self, k_max: usize) -> usize {
        self.max_iterations
            .unwrap_or(4 * self.n_max_sc.max(1) * k_max.max(1))
    }

    /// Deploy-phase threshold B·|U_S|·K_max / N_max_sc, in MHz.
    pub fn deploy_threshold_mhz(&self, bandwidth_mhz: f64, deployed: usize, k_max: usize) -> f64 {
        bandwidth_mhz * deployed as f64 * k_max as f64 / self.n_max_sc as f64
    }
}
