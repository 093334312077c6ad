use crate::monitor;
use crate::radio::{Evaluation, RadioModel};
use crate::scenario::NetworkState;

/// Anything that maps a candidate deployment to per-cell required bandwidth
/// (MHz), aligned with `state.cells`.
pub trait PerformanceModel: Sync {
    fn required_bw(&self, state: &NetworkState) -> Vec<f64>;
}

impl<F> PerformanceModel for F
where
    F: Fn(&NetworkState) -> Vec<f64> + Sync,
{
    fn required_bw(&self, state: &NetworkState) -> Vec<f64> {
        self(state)
    }
}

/// One tenant's pixel demand, optionally capped by its pixel-level planning
/// specification.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandLayer {
    pub demand: Vec<f64>,
    pub cap: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanningDemand {
    layers: Vec<DemandLayer>,
    total: Vec<f64>,
}

impl PlanningDemand {
    pub fn new(layers: Vec<DemandLayer>) -> Self {
        let n = layers.first().map_or(0, |l| l.demand.len());
        let mut total = vec![0.0; n];
        for l in &layers {
            for (t, d) in total.iter_mut().zip(&l.demand) {
                *t += d;
            }
        }
        Self { layers, total }
    }

    pub fn uncapped(layers: Vec<Vec<f64>>) -> Self {
        Self::new(
            layers
                .into_iter()
                .map(|demand| DemandLayer { demand, cap: None })
                .collect(),
        )
    }

    pub fn total(&self) -> &[f64] {
        &self.total
    }

    pub fn layers(&self) -> &[DemandLayer] {
        &self.layers
    }

    fn has_caps(&self) -> bool {
        self.layers.iter().any(|l| l.cap.is_some())
    }
}

/// Radio model plus demand: B̂_i from the pixel model, with per-tenant
/// demand capped by the planning specification when caps are present.
pub struct ModelEvaluator<'a> {
    pub model: &'a RadioModel,
    pub demand: &'a PlanningDemand,
}

impl<'a> ModelEvaluator<'a> {
    pub fn new(model: &'a RadioModel, demand: &'a PlanningDemand) -> Self {
        Self { model, demand }
    }

    pub fn evaluate(&self, state: &NetworkState) -> (Evaluation, Vec<f64>) {
        let ev = self.model.evaluate(state, self.demand.total());
        if !self.demand.has_caps() {
            let b = ev.required_bw();
            return (ev, b);
        }
        let n = state.cells.len();
        let m = self.demand.layers.len();
        let mut served = vec![vec![0.0; m]; n];
        let mut caps = vec![vec![None; m]; n];
        for (t, layer) in self.demand.layers.iter().enumerate() {
            if layer.cap.is_some() {
                for row in caps.iter_mut() {
                    row[t] = Some(0.0);
                }
            }
        }
        for (u, link) in ev.serving.links.iter().enumerate() {
            let Some(i) = link.serving else { continue };
            for (t, layer) in self.demand.layers.iter().enumerate() {
                if link.se > 0.0 {
                    served[i][t] += layer.demand[u];
                }
                if let (Some(cap), Some(acc)) = (&layer.cap, caps[i][t].as_mut()) {
                    *acc += cap[u];
                }
            }
        }
        let b = (0..n)
            .map(|i| {
                monitor::required_bw_for_cell(&served[i], &caps[i], ev.cells[i].mean_se)
                    .unwrap_or(0.0)
            })
            .collect();
        (ev, b)
    }
}

impl PerformanceModel for ModelEvaluator<'_> {
    fn required_bw(&self, state: &NetworkState) -> Vec<f64> {
        self.evaluate(state).1
    }
}
