use crate::error::{Error, Result};
use crate::par;
use crate::scenario::{ChannelSet, NetworkState, ScId, ScenarioGrid};

use super::channels::select_channels;
use super::evaluator::PerformanceModel;
use super::report::{summarize, Action, ActionKind, PlanReport};
use super::PlannerConfig;

struct Trial {
    site: usize,
    channels: ChannelSet,
    bhat: Vec<f64>,
    total: f64,
}

struct Work<'a, M: PerformanceModel> {
    grid: &'a ScenarioGrid,
    model: &'a M,
    cfg: &'a PlannerConfig,
    state: NetworkState,
    bhat: Vec<f64>,
    actions: Vec<Action>,
    before: Vec<super::CellSummary>,
    cap: usize,
}

impl<'a, M: PerformanceModel> Work<'a, M> {
    fn new(
        grid: &'a ScenarioGrid,
        initial: &NetworkState,
        model: &'a M,
        cfg: &'a PlannerConfig,
    ) -> Result<Self> {
        initial.validate(grid)?;
        cfg.validate(initial)?;
        let bhat = model.required_bw(initial);
        let before = summarize(initial, &bhat);
        Ok(Self {
            grid,
            model,
            cfg,
            state: initial.clone(),
            bhat,
            actions: Vec::new(),
            before,
            cap: cfg.iteration_cap(initial.plan.k_max),
        })
    }

    fn bandwidth(&self) -> f64 {
        self.state.plan.bandwidth_mhz
    }

    fn k_max(&self) -> usize {
        self.state.plan.k_max
    }

    fn refresh(&mut self) {
        self.bhat = self.model.required_bw(&self.state);
    }

    /// Cell with the largest positive margin; ties go to the lowest index.
    fn pick(&self, margin: impl Fn(usize, f64) -> Option<f64>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &b) in self.bhat.iter().enumerate() {
            if let Some(m) = margin(i, b) {
                match best {
                    Some((_, bm)) if m <= bm => {}
                    _ => best = Some((i, m)),
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn record(&mut self, kind: ActionKind, idx: usize) {
        let cell = &self.state.cells[idx];
        let channels = if kind == ActionKind::RemoveSc {
            ChannelSet::empty()
        } else {
            cell.channels
        };
        self.actions.push(Action {
            step: self.actions.len() + 1,
            kind,
            sc: cell.id,
            site: cell.site,
            channels,
        });
    }

    fn report(&self, sweeps: usize) -> PlanReport {
        let alpha = self.cfg.alpha;
        let saturated = self
            .bhat
            .iter()
            .enumerate()
            .any(|(i, &b)| b > alpha * self.state.cell_bandwidth_mhz(i));
        PlanReport {
            actions: self.actions.clone(),
            before: self.before.clone(),
            after: summarize(&self.state, &self.bhat),
            sweeps,
            saturated,
        }
    }

    fn non_convergence(&self, phase: &'static str, iterations: usize) -> Error {
        Error::NonConvergence {
            phase,
            iterations,
            report: Box::new(self.report(0)),
        }
    }

    fn tick(&self, iters: &mut usize, phase: &'static str) -> Result<()> {
        *iters += 1;
        if *iters > self.cap {
            return Err(self.non_convergence(phase, *iters - 1));
        }
        Ok(())
    }

    fn reselect(&mut self, idx: usize, k: usize) -> Result<()> {
        let cell = &self.state.cells[idx];
        let picked = select_channels(self.grid, &self.state, cell.site, Some(cell.id), k)?;
        self.state.cells[idx].channels = ChannelSet::from_channels(picked);
        Ok(())
    }

    /// While some cell needs more than α of its bandwidth and can grow,
    /// give it one more channel.
    fn add_channels(&mut self) -> Result<()> {
        let (alpha, bw, kmax) = (self.cfg.alpha, self.bandwidth(), self.k_max());
        let mut iters = 0;
        loop {
            let st = &self.state;
            let Some(j) = self.pick(|i, b| {
                let f = st.cells[i].channels.len();
                let thr = alpha * f as f64 * bw;
                (f < kmax && b > thr).then_some(b - thr)
            }) else {
                return Ok(());
            };
            self.tick(&mut iters, "add channel")?;
            let k = self.state.cells[j].channels.len() + 1;
            self.reselect(j, k)?;
            self.record(ActionKind::AddChannel, j);
            self.refresh();
        }
    }

    fn evaluate_candidates(&self, k: usize) -> Result<Option<Trial>> {
        let trials = par::map_slice(self.cfg.exec, &self.state.candidates, |&site| {
            let picked = select_channels(self.grid, &self.state, site, None, k)?;
            let channels = ChannelSet::from_channels(picked);
            let mut trial = self.state.clone();
            trial.deploy(site, channels);
            let bhat = self.model.required_bw(&trial);
            let total = bhat.iter().sum();
            Ok::<_, Error>(Trial {
                site,
                channels,
                bhat,
                total,
            })
        });
        let mut best: Option<Trial> = None;
        for t in trials {
            let t = t?;
            match &best {
                Some(b) if !(t.total < b.total) => {}
                _ => best = Some(t),
            }
        }
        Ok(best)
    }

    fn commit(&mut self, trial: Trial) {
        self.state.deploy(trial.site, trial.channels);
        self.bhat = trial.bhat;
        let idx = self.state.cells.len() - 1;
        self.record(ActionKind::DeploySc, idx);
    }

    /// While some cell exceeds the deployment threshold and room remains,
    /// deploy the candidate minimizing total required bandwidth, growing
    /// its channel count while it would itself be overloaded. Stops when
    /// the best candidate would carry less than the removal threshold.
    fn deploy_cells(&mut self) -> Result<()> {
        let (alpha, bw, kmax) = (self.cfg.alpha, self.bandwidth(), self.k_max());
        let mut iters = 0;
        loop {
            if self.state.len() >= self.cfg.n_max_sc || self.state.candidates.is_empty() {
                return Ok(());
            }
            let thr = self.cfg.deploy_threshold_mhz(bw, self.state.len(), kmax);
            if self.pick(|_, b| (b > thr).then_some(b - thr)).is_none() {
                return Ok(());
            }
            self.tick(&mut iters, "deploy SC")?;
            let mut k = 0;
            let chosen = loop {
                k += 1;
                let Some(best) = self.evaluate_candidates(k)? else {
                    return Ok(());
                };
                let own = *best.bhat.last().expect("trial has the new cell");
                if !(own > alpha * k as f64 * bw && k < kmax) {
                    break best;
                }
            };
            // A cell the removal phase would take straight back out cannot
            // relieve anyone; deploying it would only cycle.
            let own = *chosen.bhat.last().expect("trial has the new cell");
            if own < self.cfg.gamma * bw {
                return Ok(());
            }
            self.commit(chosen);
        }
    }

    /// Cells with a positive margin, largest first; ties by lowest index.
    fn ranked(&self, margin: impl Fn(usize, f64) -> Option<f64>) -> Vec<usize> {
        let mut v: Vec<(usize, f64)> = self
            .bhat
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| margin(i, b).map(|m| (i, m)))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(i, _)| i).collect()
    }

    /// Excess over the conformance threshold, per surviving cell.
    fn excess(&self, state: &NetworkState, bhat: &[f64]) -> Vec<(ScId, f64)> {
        state
            .cells
            .iter()
            .zip(bhat)
            .enumerate()
            .map(|(i, (c, &b))| {
                (
                    c.id,
                    (b - self.cfg.alpha * state.cell_bandwidth_mhz(i)).max(0.0),
                )
            })
            .collect()
    }

    /// A removal is kept only if no surviving cell ends up further over
    /// its conformance threshold than before.
    fn keeps_conformance(&self, trial: &NetworkState, bhat: &[f64]) -> bool {
        if !self.cfg.removal_guard {
            return true;
        }
        let before = self.excess(&self.state, &self.bhat);
        self.excess(trial, bhat).iter().all(|(id, e)| {
            let prev = before.iter().find(|(b, _)| b == id).map_or(0.0, |p| p.1);
            *e <= prev + 1e-9
        })
    }

    /// Applies the first acceptable removal among `order`; false if every
    /// one would break conformance.
    fn try_remove(&mut self, order: &[usize], kind: ActionKind) -> Result<bool> {
        for &j in order {
            let mut trial = self.state.clone();
            let cell = &self.state.cells[j];
            let id = cell.id;
            if kind == ActionKind::RemoveChannel {
                let k = cell.channels.len() - 1;
                let picked = select_channels(self.grid, &self.state, cell.site, Some(id), k)?;
                trial.cells[j].channels = ChannelSet::from_channels(picked);
            } else {
                trial.remove(id);
            }
            let bhat = self.model.required_bw(&trial);
            if self.keeps_conformance(&trial, &bhat) {
                if kind == ActionKind::RemoveSc {
                    self.record(kind, j);
                }
                self.state = trial;
                self.bhat = bhat;
                if kind == ActionKind::RemoveChannel {
                    self.record(kind, j);
                }
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn remove_channels(&mut self) -> Result<()> {
        let (beta, bw) = (self.cfg.beta, self.bandwidth());
        let mut iters = 0;
        loop {
            let st = &self.state;
            let order = self.ranked(|i, b| {
                let f = st.cells[i].channels.len();
                let thr = beta * (f as f64 - 1.0) * bw;
                (f > 1 && b < thr).then_some(thr - b)
            });
            if order.is_empty() {
                return Ok(());
            }
            self.tick(&mut iters, "remove channel")?;
            if !self.try_remove(&order, ActionKind::RemoveChannel)? {
                return Ok(());
            }
        }
    }

    fn remove_cells(&mut self) -> Result<()> {
        let thr = self.cfg.gamma * self.bandwidth();
        let mut iters = 0;
        loop {
            let order = self.ranked(|_, b| (b < thr).then_some(thr - b));
            if order.is_empty() {
                return Ok(());
            }
            self.tick(&mut iters, "remove SC")?;
            if !self.try_remove(&order, ActionKind::RemoveSc)? {
                return Ok(());
            }
        }
    }
}

/// Four-phase capacity planning: add channels, deploy cells, remove
/// channels, remove cells. The phase sequence repeats until a full pass
/// takes no action, so the returned state is a fixed point.
pub fn plan<M: PerformanceModel>(
    grid: &ScenarioGrid,
    initial: &NetworkState,
    model: &M,
    cfg: &PlannerConfig,
) -> Result<(NetworkState, PlanReport)> {
    let mut w = Work::new(grid, initial, model, cfg)?;
    let mut sweeps = 0;
    loop {
        w.tick(&mut sweeps, "sweep")?;
        let before = w.actions.len();
        w.add_channels()?;
        w.deploy_cells()?;
        w.remove_channels()?;
        w.remove_cells()?;
        if w.actions.len() == before {
            break;
        }
    }
    let report = w.report(sweeps);
    Ok((w.state, report))
}

/// Deploy-only baseline: while any cell violates the conformance condition,
/// deploy the best candidate with a fixed `sota_k` channels. Existing
/// cells keep their channels.
pub fn plan_sota<M: PerformanceModel>(
    grid: &ScenarioGrid,
    initial: &NetworkState,
    model: &M,
    cfg: &PlannerConfig,
) -> Result<(NetworkState, PlanReport)> {
    let mut w = Work::new(grid, initial, model, cfg)?;
    if cfg.sota_k == 0 || cfg.sota_k > initial.plan.k {
        return Err(Error::InvalidScenario(format!(
            "sota_k = {} out of range",
            cfg.sota_k
        )));
    }
    let alpha = cfg.alpha;
    let mut iters = 0;
    loop {
        let st = &w.state;
        let violating = w
            .pick(|i, b| {
                let thr = alpha * st.cell_bandwidth_mhz(i);
                (b > thr).then_some(b - thr)
            })
            .is_some();
        if !violating || w.state.len() >= cfg.n_max_sc || w.state.candidates.is_empty() {
            break;
        }
        w.tick(&mut iters, "deploy SC (baseline)")?;
        match w.evaluate_candidates(cfg.sota_k)? {
            Some(best) => w.commit(best),
            None => break,
        }
    }
    let report = w.report(1);
    Ok((w.state, report))
}
