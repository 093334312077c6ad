//! End-to-end runs: estimate the new tenant's specification, plan,
//! operate with the tenant's actual traffic, check conformance, re-plan,
//! and tabulate the network before and after.

mod config;
pub mod maps;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub use config::{
    build_scenario, CandidatesSection, ConfigFile, DeployedSection, ExperimentConfig, GridSection,
    PlannerMode, ProfileSection, Scenario, TenantSection,
};

use crate::error::{Error, Result};
use crate::monitor::trigger;
use crate::planner::{
    plan, plan_sota, totals, write_summary_csv, DemandLayer, ModelEvaluator, PlanReport,
    PlanningDemand, Totals,
};
use crate::radio::{Evaluation, RadioModel};
use crate::scenario::{aggregate_to_cells, NetworkState};
use crate::sla::{self, KnownDemand, PlanningSpec, SpecMethod};
use crate::synth::{pearson, stream, synth_correlated_map, SynthesisConfig};

/// One row of the before/after comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub method: SpecMethod,
    pub mode: PlannerMode,
    /// Target correlation of the actual traffic (achieved value for a
    /// traffic file).
    pub rho: f64,
    pub achieved_rho: f64,
    /// After planning, under the estimated demand.
    pub planned: Totals,
    /// Planned network under the actual demand.
    pub before: Totals,
    /// After re-planning (equal to `before` when none ran).
    pub after: Totals,
    pub triggered: bool,
    pub replanned: bool,
    /// The final network still violates the conformance condition.
    pub saturated: bool,
    pub offered_mbps: f64,
    /// Σ_i min(D_i, C_i) over the final network.
    pub served_mbps: f64,
}

impl RunRecord {
    /// Residual shortage left with no room to grow.
    pub fn saturated_shortage(&self) -> bool {
        self.saturated && self.after.shortage_mhz > 0.0
    }
}

/// Everything produced by one (method, mode, ρ) run.
#[derive(Clone, Debug)]
pub struct MethodRun {
    pub record: RunRecord,
    pub spec: PlanningSpec,
    pub actual: Vec<f64>,
    pub planned: NetworkState,
    pub plan_report: PlanReport,
    pub before_bw: Vec<f64>,
    pub final_state: NetworkState,
    pub replan_report: Option<PlanReport>,
    pub final_eval: Evaluation,
    pub final_bw: Vec<f64>,
}

/// Plans `state` against `demand` with Algorithm-1 or the baseline.
pub fn plan_mode(
    scn: &Scenario,
    model: &RadioModel,
    state: &NetworkState,
    demand: &PlanningDemand,
    mode: PlannerMode,
) -> Result<(NetworkState, PlanReport)> {
    let eval = ModelEvaluator::new(model, demand);
    let cfg = mode.config(&scn.config.planner);
    match mode {
        PlannerMode::Alg1 => plan(&scn.grid, state, &eval, &cfg),
        PlannerMode::Sota(_) => plan_sota(&scn.grid, state, &eval, &cfg),
    }
}

/// The new tenant's actual busy-hour maps, one per correlation target.
pub fn actual_maps(scn: &Scenario) -> Result<Vec<(f64, Vec<f64>)>> {
    let reference = scn.existing.aggregate();
    if let Some(map) = &scn.new_tenant_map {
        return Ok(vec![(pearson(map, &reference), map.clone())]);
    }
    let e = &scn.config.experiment;
    let tenant_idx = scn
        .config
        .tenants
        .iter()
        .position(|t| t.id == scn.new_tenant.id)
        .unwrap_or(0) as u64;
    e.correlations
        .iter()
        .map(|&rho| {
            let cfg = SynthesisConfig {
                target_total_mbps: scn.new_busy_mbps,
                target_pearson: rho,
                seed: scn.seed,
                stream: stream::TENANT_MAP + tenant_idx,
                smoothing_radius_px: e.smoothing_radius_px,
                ..SynthesisConfig::default()
            };
            Ok((
                rho,
                synth_correlated_map(&reference, scn.grid.nx(), scn.grid.ny(), &cfg)?,
            ))
        })
        .collect()
}

/// The new tenant's planning specification under `method`, estimated on
/// the initial network. Known-demand methods read `actual`.
pub fn estimate_spec(
    scn: &Scenario,
    model: &RadioModel,
    method: SpecMethod,
    actual: &[f64],
) -> Result<PlanningSpec> {
    let existing = scn.existing.aggregate();
    let ev = model.evaluate(&scn.initial, &existing);
    let serving = ev.serving.serving();
    let n = scn.initial.len();
    let a = scn.new_busy_mbps;
    let id = &scn.new_tenant.id;
    match method {
        SpecMethod::UniformSc => sla::spec_uniform_sc(id, a, &serving, n),
        SpecMethod::UniformPx => sla::spec_uniform_px(id, a, &serving, n),
        SpecMethod::CorrSc => {
            let d = aggregate_to_cells(&scn.existing, &serving, n)?;
            sla::spec_correlated_sc(id, a, &d.total, &serving)
        }
        SpecMethod::CorrPx => sla::spec_correlated_px(id, a, &existing, &serving, n),
        SpecMethod::KnownSc => {
            let mut cells = vec![0.0; n];
            for (d, s) in actual.iter().zip(&serving) {
                if let Some(i) = s {
                    cells[*i] += d;
                }
            }
            sla::spec_known(&scn.new_tenant, a, KnownDemand::Cells(&cells), &serving, n)
        }
        SpecMethod::KnownPx => {
            sla::spec_known(&scn.new_tenant, a, KnownDemand::Pixels(actual), &serving, n)
        }
    }
}

fn served_mbps(ev: &Evaluation) -> f64 {
    ev.cells
        .iter()
        .map(|c| c.served_mbps.min(c.capacity_mbps))
        .sum()
}

/// Runs one method and planner mode over every correlation target.
pub fn run_method(scn: &Scenario, method: SpecMethod, mode: PlannerMode) -> Result<Vec<MethodRun>> {
    let model = scn.model();
    let existing = scn.existing.aggregate();
    let bw = scn.initial.plan.bandwidth_mhz;
    let e = &scn.config.experiment;
    let mut cached: Option<(PlanningSpec, NetworkState, PlanReport)> = None;
    let mut runs = Vec::new();
    for (rho, actual) in actual_maps(scn)? {
        let (spec, planned, plan_report) = match &cached {
            Some(c) if !method.needs_known_demand() => c.clone(),
            _ => {
                let spec = estimate_spec(scn, &model, method, &actual)?;
                let demand =
                    PlanningDemand::uncapped(vec![existing.clone(), spec.per_pixel.clone()]);
                let (st, rep) = plan_mode(scn, &model, &scn.initial, &demand, mode)?;
                let c = (spec, st, rep);
                cached = Some(c.clone());
                c
            }
        };

        let cap = e.cap_by_estimated_spec.then(|| spec.per_pixel.clone());
        let operation = PlanningDemand::new(vec![
            DemandLayer {
                demand: existing.clone(),
                cap: None,
            },
            DemandLayer {
                demand: actual.clone(),
                cap,
            },
        ]);
        let eval = ModelEvaluator::new(&model, &operation);
        let (_, before_bw) = eval.evaluate(&planned);
        let cell_bw: Vec<f64> = (0..planned.len())
            .map(|i| planned.cell_bandwidth_mhz(i))
            .collect();
        let history = vec![before_bw.clone(); scn.config.monitor.l.max(1)];
        let fired = trigger(&history, &cell_bw, &scn.config.monitor);

        let (final_state, replan_report) = if e.replan && fired.fire {
            let (st, rep) = plan_mode(scn, &model, &planned, &operation, mode)?;
            (st, Some(rep))
        } else {
            (planned.clone(), None)
        };
        let (final_eval, final_bw) = eval.evaluate(&final_state);
        let alpha = scn.config.planner.alpha;
        let saturated = final_bw
            .iter()
            .enumerate()
            .any(|(i, &b)| b > alpha * final_state.cell_bandwidth_mhz(i));

        let before_cells = crate::planner::summarize(&planned, &before_bw);
        let after_cells = crate::planner::summarize(&final_state, &final_bw);
        let record = RunRecord {
            seed: scn.seed,
            method,
            mode,
            rho,
            achieved_rho: pearson(&actual, &existing),
            planned: totals(&plan_report.after, bw),
            before: totals(&before_cells, bw),
            after: totals(&after_cells, bw),
            triggered: fired.fire,
            replanned: replan_report.is_some(),
            saturated,
            offered_mbps: existing.iter().sum::<f64>() + actual.iter().sum::<f64>(),
            served_mbps: served_mbps(&final_eval),
        };
        runs.push(MethodRun {
            record,
            spec,
            actual,
            planned,
            plan_report,
            before_bw,
            final_state,
            replan_report,
            final_eval,
            final_bw,
        });
    }
    Ok(runs)
}

pub const SUMMARY_HEADER: [&str; 18] = [
    "seed",
    "method",
    "mode",
    "rho",
    "achieved_rho",
    "scs_before",
    "scs_after",
    "channels_before",
    "channels_after",
    "req_bw_before_mhz",
    "req_bw_after_mhz",
    "shortage_before_mhz",
    "shortage_after_mhz",
    "triggered",
    "replanned",
    "saturated",
    "offered_mbps",
    "served_mbps",
];

fn summary_row(r: &RunRecord) -> Vec<String> {
    vec![
        r.seed.to_string(),
        r.method.to_string(),
        r.mode.to_string(),
        format!("{:.2}", r.rho),
        format!("{:.4}", r.achieved_rho),
        r.before.num_scs.to_string(),
        r.after.num_scs.to_string(),
        r.before.num_channels.to_string(),
        r.after.num_channels.to_string(),
        format!("{:.3}", r.before.req_bw_mhz),
        format!("{:.3}", r.after.req_bw_mhz),
        format!("{:.3}", r.before.shortage_mhz),
        format!("{:.3}", r.after.shortage_mhz),
        r.triggered.to_string(),
        r.replanned.to_string(),
        r.saturated.to_string(),
        format!("{:.3}", r.offered_mbps),
        format!("{:.3}", r.served_mbps),
    ]
}

pub fn write_summary<W: Write>(w: W, records: &[RunRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in records {
        out.write_record(summary_row(r))?;
    }
    out.flush()?;
    Ok(())
}

fn rho_dir(rho: f64) -> String {
    format!("rho{:+.2}", rho)
}

fn write_run(dir: &Path, scn: &Scenario, run: &MethodRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    let bw = scn.initial.plan.bandwidth_mhz;
    let ids: Vec<u32> = scn.initial.cells.iter().map(|c| c.id.0).collect();
    run.spec
        .write_sc_csv(fs::File::create(dir.join("spec_sc.csv"))?, &ids)?;
    crate::io::write_grid_file(
        &dir.join("spec_px.txt"),
        &scn.grid,
        &scn.new_tenant.id,
        &run.spec.per_pixel,
    )?;
    crate::io::write_grid_file(
        &dir.join("actual.txt"),
        &scn.grid,
        &scn.new_tenant.id,
        &run.actual,
    )?;
    run.plan_report
        .write_actions_csv(fs::File::create(dir.join("plan_actions.csv"))?)?;
    write_summary_csv(
        fs::File::create(dir.join("planned.csv"))?,
        &run.plan_report.after,
        bw,
    )?;
    write_summary_csv(
        fs::File::create(dir.join("before.csv"))?,
        &crate::planner::summarize(&run.planned, &run.before_bw),
        bw,
    )?;
    let empty = PlanReport::default();
    run.replan_report
        .as_ref()
        .unwrap_or(&empty)
        .write_actions_csv(fs::File::create(dir.join("replan_actions.csv"))?)?;
    write_summary_csv(
        fs::File::create(dir.join("after.csv"))?,
        &crate::planner::summarize(&run.final_state, &run.final_bw),
        bw,
    )?;
    let total: Vec<f64> = scn
        .existing
        .aggregate()
        .iter()
        .zip(&run.actual)
        .map(|(a, b)| a + b)
        .collect();
    maps::emit_maps(
        &dir.join("maps"),
        &scn.grid,
        &run.final_state,
        &run.final_eval.serving,
        &total,
    )
}

/// Runs the configured method and mode and writes the result bundle to
/// `out`: `summary.csv`, the initial scenario maps, and one directory per
/// correlation target with specifications, action logs, before/after
/// tables and maps.
pub fn run_experiment(scn: &Scenario, out: &Path) -> Result<Vec<RunRecord>> {
    let e = &scn.config.experiment;
    let runs = run_method(scn, e.method, e.mode)?;
    fs::create_dir_all(out)?;
    let model = scn.model();
    let existing = scn.existing.aggregate();
    let ev = model.evaluate(&scn.initial, &existing);
    maps::emit_maps(
        &out.join("initial"),
        &scn.grid,
        &scn.initial,
        &ev.serving,
        &existing,
    )?;
    for run in &runs {
        write_run(&out.join(rho_dir(run.record.rho)), scn, run)?;
    }
    let records: Vec<RunRecord> = runs.into_iter().map(|r| r.record).collect();
    write_summary(fs::File::create(out.join("summary.csv"))?, &records)?;
    Ok(records)
}

/// Every (method, mode) pair over every seed; rows in loop order. Seeds
/// whose scenario cannot be built are errors, not skipped.
pub fn compare(
    config: &ConfigFile,
    seeds: &[u64],
    methods: &[SpecMethod],
    modes: &[PlannerMode],
) -> Result<Vec<RunRecord>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let scn = build_scenario(config, seed)?;
        for &method in methods {
            if method.needs_known_demand() && !scn.new_tenant.demand_known {
                return Err(Error::DemandUnknown(scn.new_tenant.id.clone()));
            }
            for &mode in modes {
                rows.extend(
                    run_method(&scn, method, mode)?
                        .into_iter()
                        .map(|r| r.record),
                );
            }
        }
    }
    Ok(rows)
}
