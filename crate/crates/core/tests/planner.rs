use proptest::prelude::*;

use scplan::experiment::{build_scenario, estimate_spec, plan_mode, ConfigFile, PlannerMode};
use scplan::planner::{
    plan, plan_sota, replay, select_channels, ActionKind, ModelEvaluator, PlannerConfig,
    PlanningDemand,
};
use scplan::radio::{LinkBudget, RadioModel};
use scplan::scenario::{ChannelPlan, ChannelSet, NetworkState, ScenarioGrid};
use scplan::sla::SpecMethod;
use scplan::{Error, Exec};

fn small_grid() -> ScenarioGrid {
    ScenarioGrid::from_pixels(10, 10, 5.0).unwrap()
}

fn one_cell(channels: &[usize]) -> NetworkState {
    let mut st = NetworkState::new(ChannelPlan::default(), vec![10, 20, 30]);
    st.deploy(55, ChannelSet::from_channels(channels.iter().copied()));
    st
}

fn cfg_no_deploy() -> PlannerConfig {
    PlannerConfig {
        n_max_sc: 1,
        ..PlannerConfig::default()
    }
}

#[test]
fn overloaded_cell_gains_a_channel() {
    let g = small_grid();
    let model = |st: &NetworkState| vec![30.0; st.len()];
    let (st, rep) = plan(&g, &one_cell(&[0]), &model, &cfg_no_deploy()).unwrap();
    assert_eq!(st.cells[0].channels.len(), 2);
    assert_eq!(rep.actions.len(), 1);
    assert_eq!(rep.actions[0].kind, ActionKind::AddChannel);
}

#[test]
fn twelve_of_forty_releases_a_channel() {
    let g = small_grid();
    let model = |st: &NetworkState| vec![12.0; st.len()];
    let (st, rep) = plan(&g, &one_cell(&[0, 1]), &model, &cfg_no_deploy()).unwrap();
    assert_eq!(st.cells[0].channels.len(), 1);
    assert_eq!(rep.actions[0].kind, ActionKind::RemoveChannel);
}

#[test]
fn idle_cell_is_removed_and_site_returned() {
    let g = small_grid();
    let mut st = NetworkState::new(ChannelPlan::default(), vec![10, 20]);
    st.deploy(55, ChannelSet::from_channels([0]));
    st.deploy(99, ChannelSet::from_channels([1]));
    let model = |st: &NetworkState| {
        st.cells
            .iter()
            .map(|c| if c.site == 99 { 0.5 } else { 10.0 })
            .collect::<Vec<f64>>()
    };
    let cfg = PlannerConfig {
        n_max_sc: 2,
        ..PlannerConfig::default()
    };
    let (out, rep) = plan(&g, &st, &model, &cfg).unwrap();
    assert_eq!(out.sites(), vec![55]);
    assert_eq!(out.candidates, vec![10, 20, 99]);
    assert_eq!(rep.actions.len(), 1);
    assert_eq!(rep.actions[0].kind, ActionKind::RemoveSc);
}

#[test]
fn conformant_network_is_left_alone() {
    let g = small_grid();
    let st = one_cell(&[0, 1]);
    let model = |st: &NetworkState| vec![30.0; st.len()];
    let (out, rep) = plan(&g, &st, &model, &cfg_no_deploy()).unwrap();
    assert!(rep.is_empty());
    assert_eq!(out, st);
    assert_eq!(rep.sweeps, 1);
}

#[test]
fn removal_guard_stops_channel_oscillation() {
    // Two channels are not quite enough, three are comfortably too many.
    let g = small_grid();
    let model = |st: &NetworkState| {
        st.cells
            .iter()
            .map(|c| if c.channels.len() >= 3 { 27.0 } else { 40.01 })
            .collect::<Vec<f64>>()
    };
    let st = one_cell(&[0, 1]);
    let (out, _) = plan(&g, &st, &model, &cfg_no_deploy()).unwrap();
    assert_eq!(out.cells[0].channels.len(), 3);

    let loose = PlannerConfig {
        removal_guard: false,
        ..cfg_no_deploy()
    };
    match plan(&g, &st, &model, &loose) {
        Err(Error::NonConvergence { report, .. }) => assert!(!report.actions.is_empty()),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn useless_candidate_is_not_deployed() {
    let g = small_grid();
    let st = one_cell(&[0, 1, 2]);
    // The lone cell sits above the deploy threshold at K_max; any new cell
    // would carry almost nothing.
    let model = |st: &NetworkState| {
        st.cells
            .iter()
            .map(|c| if c.site == 55 { 50.0 } else { 0.2 })
            .collect::<Vec<f64>>()
    };
    let (out, rep) = plan(&g, &st, &model, &PlannerConfig::default()).unwrap();
    assert!(rep.is_empty());
    assert_eq!(out.len(), 1);
}

#[test]
fn saturation_is_reported_not_an_error() {
    let g = small_grid();
    let model = |st: &NetworkState| vec![100.0; st.len()];
    let (out, rep) = plan(&g, &one_cell(&[0]), &model, &cfg_no_deploy()).unwrap();
    assert_eq!(out.cells[0].channels.len(), 3);
    assert!(rep.saturated);
    assert!((rep.residual_shortage_mhz() - 40.0).abs() < 1e-12);
}

#[test]
fn sota_deploys_fixed_width_cells_only() {
    let g = small_grid();
    let st = one_cell(&[0]);
    for k in [2, 3] {
        let model = |st: &NetworkState| {
            let n = st.len() as f64;
            st.cells.iter().map(|_| 60.0 / n).collect::<Vec<f64>>()
        };
        let (out, rep) = plan_sota(&g, &st, &model, &PlannerConfig::sota(k)).unwrap();
        assert_eq!(out.cells[0].channels, st.cells[0].channels);
        assert!(rep.actions.iter().all(|a| a.kind == ActionKind::DeploySc));
        assert!(!rep.actions.is_empty());
        for c in &out.cells[1..] {
            assert_eq!(c.channels.len(), k);
        }
    }
}

#[test]
fn sota_leaves_conformant_network() {
    let g = small_grid();
    let st = one_cell(&[0]);
    let model = |st: &NetworkState| vec![5.0; st.len()];
    let (out, rep) = plan_sota(&g, &st, &model, &PlannerConfig::sota(2)).unwrap();
    assert!(rep.is_empty());
    assert_eq!(out, st);
}

/// Independent argmax over remaining channels of the distance to the
/// nearest other cell using each channel.
fn brute_force(
    grid: &ScenarioGrid,
    st: &NetworkState,
    site: usize,
    skip: Option<usize>,
    k: usize,
) -> Vec<usize> {
    let mut picked = Vec::new();
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for ch in 0..st.plan.k {
            if picked.contains(&ch) {
                continue;
            }
            let s = st
                .cells
                .iter()
                .enumerate()
                .filter(|(i, c)| Some(*i) != skip && c.channels.contains(ch))
                .map(|(_, c)| grid.distance(site, c.site))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((ch, s));
            }
        }
        picked.push(best.unwrap().0);
    }
    picked
}

fn instance() -> impl Strategy<Value = (Vec<(usize, Vec<bool>)>, usize, usize, bool)> {
    let cell = (0usize..144, proptest::collection::vec(any::<bool>(), 4));
    (
        proptest::collection::vec(cell, 0..=6),
        0usize..144,
        1usize..=4,
        any::<bool>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn greedy_channel_pick_is_brute_force_argmax((cells, target, k, existing) in instance()) {
        let g = ScenarioGrid::from_pixels(12, 12, 10.0).unwrap();
        let plan = ChannelPlan { k: 4, bandwidth_mhz: 20.0, k_max: 4 };
        let mut st = NetworkState::new(plan, vec![]);
        for (site, mask) in &cells {
            let chans: Vec<usize> = (0..4).filter(|&c| mask[c]).collect();
            let chans = if chans.is_empty() { vec![0] } else { chans };
            st.deploy(*site, ChannelSet::from_channels(chans));
        }
        let (site, skip) = if existing && !st.is_empty() {
            (st.cells[0].site, Some(0))
        } else {
            (target, None)
        };
        let got = select_channels(&g, &st, site, skip.map(|i| st.cells[i].id), k).unwrap();
        prop_assert_eq!(got, brute_force(&g, &st, site, skip, k));
    }
}

#[test]
fn channel_selection_rejects_more_than_k() {
    let g = small_grid();
    let st = one_cell(&[0]);
    assert!(matches!(
        select_channels(&g, &st, 3, None, 5),
        Err(Error::TooManyChannels {
            requested: 5,
            available: 4
        })
    ));
}

/// A radio-backed instance small enough to re-evaluate every candidate.
fn radio_instance() -> (ScenarioGrid, NetworkState, Vec<f64>) {
    let g = ScenarioGrid::from_pixels(30, 20, 5.0).unwrap();
    let candidates: Vec<usize> = (0..g.num_pixels()).step_by(37).collect();
    let mut st = NetworkState::new(ChannelPlan::default(), candidates);
    st.deploy(g.pixel_at(5, 10), ChannelSet::from_channels([0]));
    let demand: Vec<f64> = (0..g.num_pixels())
        .map(|u| {
            let (c, r) = g.col_row(u);
            let dx = c as f64 - 22.0;
            let dy = r as f64 - 6.0;
            0.05 + 2.0 * (-(dx * dx + dy * dy) / 30.0).exp()
        })
        .collect();
    (g, st, demand)
}

#[test]
fn deploy_choice_matches_exhaustive_reevaluation() {
    let (g, st, demand) = radio_instance();
    let model = RadioModel::new(&g, &st.plan, LinkBudget::default());
    let pd = PlanningDemand::uncapped(vec![demand.clone()]);
    let eval = ModelEvaluator::new(&model, &pd);
    let (_, rep) = plan(&g, &st, &eval, &PlannerConfig::default()).unwrap();
    let deploys: Vec<usize> = rep
        .actions
        .iter()
        .enumerate()
        .filter(|(_, a)| a.kind == ActionKind::DeploySc)
        .map(|(i, _)| i)
        .collect();
    assert!(!deploys.is_empty(), "instance should need a new cell");
    for i in deploys {
        let before = replay(&st, &rep.actions[..i]).unwrap();
        let a = &rep.actions[i];
        let k = a.channels.len();
        let mut best: Option<(usize, f64)> = None;
        for &site in &before.candidates {
            let chans = select_channels(&g, &before, site, None, k).unwrap();
            let mut trial = before.clone();
            trial.deploy(site, ChannelSet::from_channels(chans));
            let total: f64 = model.evaluate(&trial, &demand).required_bw().iter().sum();
            if best.is_none_or(|(_, b)| total < b) {
                best = Some((site, total));
            }
        }
        assert_eq!(best.unwrap().0, a.site);
    }
}

fn reference_plan(
    seed: u64,
    exec: Exec,
) -> (NetworkState, scplan::planner::PlanReport, NetworkState) {
    let mut cfg = ConfigFile::reference(seed);
    cfg.planner.exec = exec;
    let scn = build_scenario(&cfg, seed).unwrap();
    let model = scn.model();
    let spec = estimate_spec(&scn, &model, SpecMethod::CorrSc, &[]).unwrap();
    let demand = PlanningDemand::uncapped(vec![scn.existing.aggregate(), spec.per_pixel]);
    let (st, rep) = plan_mode(&scn, &model, &scn.initial, &demand, PlannerMode::Alg1).unwrap();
    let (again, rep2) = plan_mode(&scn, &model, &st, &demand, PlannerMode::Alg1).unwrap();
    assert!(
        rep2.is_empty(),
        "seed {seed}: second pass acted: {:?}",
        rep2.actions
    );
    assert_eq!(again, st);
    (scn.initial, rep, st)
}

#[test]
fn reference_plans_replay_and_are_fixed_points() {
    for seed in 0..3 {
        let (initial, rep, st) = reference_plan(seed, Exec::Parallel);
        assert_eq!(rep.replay(&initial).unwrap(), st);
        let mut channels = initial.total_channels() as i64;
        let mut cells = initial.len();
        let mut partial = initial.clone();
        for a in &rep.actions {
            partial = replay(&partial, std::slice::from_ref(a)).unwrap();
            let now = partial.total_channels() as i64;
            match a.kind {
                ActionKind::AddChannel => assert_eq!(now - channels, 1),
                ActionKind::RemoveChannel => assert_eq!(now - channels, -1),
                ActionKind::DeploySc => assert_eq!(partial.len(), cells + 1),
                ActionKind::RemoveSc => assert_eq!(partial.len() + 1, cells),
            }
            channels = now;
            cells = partial.len();
        }
    }
}

#[test]
fn planning_is_deterministic_across_exec_modes() {
    let (_, a, sa) = reference_plan(5, Exec::Parallel);
    let (_, b, sb) = reference_plan(5, Exec::Parallel);
    let (_, c, sc) = reference_plan(5, Exec::Sequential);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(sa, sb);
    assert_eq!(sa, sc);
}
