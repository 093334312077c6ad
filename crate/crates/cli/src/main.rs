use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use scplan::experiment::{self, build_scenario, ConfigFile, PlannerMode, RunRecord, Scenario};
use scplan::monitor::{self, trigger};
use scplan::planner::{summarize, write_summary_csv, PlanningDemand};
use scplan::sla::SpecMethod;
use scplan::synth::{pearson, synth_correlated_map, SynthesisConfig};
use scplan::{Error, Exec};

const EXIT_INVALID: u8 = 1;
const EXIT_NON_CONVERGENCE: u8 = 2;
const EXIT_SATURATED: u8 = 3;

/// Capacity planning for multi-tenant small-cell networks.
#[derive(Parser)]
#[command(name = "plan", version)]
struct Cli {
    /// Run pixel and candidate loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario and experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[experiment] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan, operate with actual traffic, re-plan; write the result bundle.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides `[experiment] method`.
        #[arg(long)]
        method: Option<SpecMethod>,
        /// Overrides `[experiment] mode` (alg1, sota2, sota3, ...).
        #[arg(long)]
        mode: Option<PlannerMode>,
    },
    /// Write the new tenant's synthetic traffic map.
    SynthMap {
        #[command(flatten)]
        common: Common,
        /// Target Pearson correlation with the existing demand.
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conformance check of the configured network, without planning.
    Check {
        #[command(flatten)]
        common: Common,
        /// Counter records (CSV: period,sc_id,tenant_id,volume_bits,resource_s_hz)
        /// to estimate demand and spectral efficiency from.
        #[arg(long)]
        counters: Option<PathBuf>,
        /// Counter period to evaluate.
        #[arg(long, default_value_t = 0)]
        period: u32,
    },
    /// Every method and planner mode over a range of seeds.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Number of seeds, starting at `--seed` (default 0).
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "uniform-sc,corr-sc,uniform-px,corr-px"
        )]
        methods: Vec<SpecMethod>,
        #[arg(long, value_delimiter = ',', default_value = "alg1,sota2,sota3")]
        modes: Vec<PlannerMode>,
        #[arg(long, default_value = "compare")]
        out: PathBuf,
    },
}

fn load(common: &Common, sequential: bool) -> anyhow::Result<(ConfigFile, u64)> {
    let mut cfg = ConfigFile::load(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    if sequential {
        cfg.planner.exec = Exec::Sequential;
    }
    let seed = common.seed.unwrap_or(cfg.experiment.seed);
    cfg.experiment.seed = seed;
    Ok((cfg, seed))
}

fn print_records(records: &[RunRecord]) {
    println!(
        "{:<10} {:<6} {:>6} {:>9} {:>9} {:>13} {:>15}  flags",
        "method", "mode", "rho", "#SCs", "#chan", "req BW MHz", "shortage MHz"
    );
    for r in records {
        let mut flags = Vec::new();
        if r.triggered {
            flags.push("triggered");
        }
        if r.replanned {
            flags.push("replanned");
        }
        if r.saturated {
            flags.push("saturated");
        }
        println!(
            "{:<10} {:<6} {:>6.2} {:>4}/{:<4} {:>4}/{:<4} {:>6.1}/{:<6.1} {:>7.2}/{:<7.2}  {}",
            r.method.to_string(),
            r.mode.to_string(),
            r.rho,
            r.before.num_scs,
            r.after.num_scs,
            r.before.num_channels,
            r.after.num_channels,
            r.before.req_bw_mhz,
            r.after.req_bw_mhz,
            r.before.shortage_mhz,
            r.after.shortage_mhz,
            flags.join(",")
        );
    }
}

fn outcome(records: &[RunRecord]) -> ExitCode {
    if records.iter().any(RunRecord::saturated_shortage) {
        eprintln!("residual bandwidth shortage with no planning action left");
        ExitCode::from(EXIT_SATURATED)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_check(scn: &Scenario, counters: Option<&Path>, period: u32) -> anyhow::Result<ExitCode> {
    let state = &scn.initial;
    let cell_bw: Vec<f64> = (0..state.len())
        .map(|i| state.cell_bandwidth_mhz(i))
        .collect();
    let bhat = match counters {
        Some(path) => {
            let records = monitor::read_counters(fs::File::open(path)?)?;
            let est =
                monitor::estimates_from_counters(&records, period, scn.config.monitor.period_s)?;
            state
                .cells
                .iter()
                .map(|c| {
                    let d: Vec<f64> = est
                        .demand
                        .iter()
                        .filter(|((sc, _), _)| *sc == c.id.0)
                        .map(|(_, v)| *v)
                        .collect();
                    let se = est.mean_se.get(&c.id.0).copied().unwrap_or(0.0);
                    monitor::required_bw_for_cell(&d, &vec![None; d.len()], se).map_err(|_| {
                        Error::ZeroSpectralEfficiency {
                            sc: c.id.0 as usize,
                        }
                    })
                })
                .collect::<scplan::Result<Vec<f64>>>()?
        }
        None => {
            let mut layers: Vec<Vec<f64>> = scn.existing.layers().to_vec();
            if let Some(m) = &scn.new_tenant_map {
                layers.push(m.clone());
            }
            let demand = PlanningDemand::uncapped(layers);
            scn.model().evaluate(state, demand.total()).required_bw()
        }
    };
    let fired = trigger(std::slice::from_ref(&bhat), &cell_bw, &scn.config.monitor);
    let mut out = Vec::new();
    write_summary_csv(&mut out, &summarize(state, &bhat), state.plan.bandwidth_mhz)?;
    print!("{}", String::from_utf8_lossy(&out));
    if fired.fire {
        let ids: Vec<String> = fired
            .cells
            .iter()
            .map(|&i| state.cells[i].id.to_string())
            .collect();
        println!("conformance condition holds for SC {}", ids.join(", "));
    } else {
        println!("network conformant");
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Run {
            common,
            out,
            method,
            mode,
        } => {
            let (mut cfg, seed) = load(&common, cli.sequential)?;
            if let Some(m) = method {
                cfg.experiment.method = m;
            }
            if let Some(m) = mode {
                cfg.experiment.mode = m;
            }
            let scn = build_scenario(&cfg, seed)?;
            let records = experiment::run_experiment(&scn, &out)?;
            print_records(&records);
            println!("results in {}", out.display());
            Ok(outcome(&records))
        }
        Cmd::SynthMap { common, rho, out } => {
            let (cfg, seed) = load(&common, cli.sequential)?;
            let scn = build_scenario(&cfg, seed)?;
            let reference = scn.existing.aggregate();
            let syn = SynthesisConfig {
                target_total_mbps: scn.new_busy_mbps,
                target_pearson: rho,
                seed,
                smoothing_radius_px: cfg.experiment.smoothing_radius_px,
                ..SynthesisConfig::default()
            };
            let map = synth_correlated_map(&reference, scn.grid.nx(), scn.grid.ny(), &syn)?;
            scplan::io::write_grid_file(&out, &scn.grid, &scn.new_tenant.id, &map)?;
            println!(
                "wrote {} (total {:.3} Mbps, Pearson {:.4})",
                out.display(),
                map.iter().sum::<f64>(),
                pearson(&map, &reference)
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check {
            common,
            counters,
            period,
        } => {
            let (cfg, seed) = load(&common, cli.sequential)?;
            let scn = build_scenario(&cfg, seed)?;
            cmd_check(&scn, counters.as_deref(), period)
        }
        Cmd::Compare {
            common,
            seeds,
            methods,
            modes,
            out,
        } => {
            let (cfg, _) = load(&common, cli.sequential)?;
            let first = common.seed.unwrap_or(0);
            let seed_list: Vec<u64> = (first..first + seeds).collect();
            let records = experiment::compare(&cfg, &seed_list, &methods, &modes)?;
            fs::create_dir_all(&out)?;
            experiment::write_summary(fs::File::create(out.join("compare.csv"))?, &records)?;
            print_records(&records);
            println!("results in {}", out.join("compare.csv").display());
            Ok(outcome(&records))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
