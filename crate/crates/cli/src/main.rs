// SPDX-License-Identifier: Apache-2.0
//! `camouflage`: build wave-pipelined paths into a netlist, then verify,
//! simulate, attack or report on the result.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use wavecamo::netlist::{parse_bench, write_annotations, write_bench};
use wavecamo::netlist::Placement;
use wavecamo::timing::{check_wp_window, classify_gray, GrayClass};
use wavecamo::workflow::{self, record_path, ConstructionState};
use wavecamo::{attacks, benchmarks, simulate, Netlist, TimingConfig};

#[derive(Parser)]
#[command(name = "camouflage", version, about = "Camouflage a netlist with wave-pipelined paths")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    construct: ConstructArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Check every ground-truth record against the camouflaged netlist.
    Verify(VerifyArgs),
    /// Compare two netlists by timed simulation on random stimuli.
    Simulate(SimulateArgs),
    /// Run the screening and sizing attacks.
    Attack(AttackArgs),
    /// Recompute the metrics document from a finished run.
    Report(ReportArgs),
}

/// Input netlist: a `.bench` file with optional delay sidecar, or a
/// bundled benchmark.
#[derive(Args, Clone, Default)]
struct Source {
    /// `.bench` netlist.
    #[arg(long)]
    bench: Option<PathBuf>,
    /// Delay sidecar for `--bench`.
    #[arg(long)]
    delays: Option<PathBuf>,
    /// Bundled benchmark name instead of `--bench`.
    #[arg(long, conflicts_with = "bench")]
    builtin: Option<String>,
}

#[derive(Args, Default)]
struct ConstructArgs {
    #[command(flatten)]
    source: Source,
    /// Timing configuration document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Placement CSV `id,x,y`.
    #[arg(long)]
    placement: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Camouflaged netlist; its delay sidecar goes to `<out>.delays.toml`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics document.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Constructed paths and junctions.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ground_truth: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Reference netlist.
    #[arg(long)]
    original: Option<PathBuf>,
    #[arg(long)]
    original_delays: Option<PathBuf>,
    /// Bundled reference instead of `--original`.
    #[arg(long, conflicts_with = "original")]
    original_builtin: Option<String>,
    /// Netlist under test.
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    cycles: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Suspicious false paths handed to the sizing attack.
    #[arg(long, default_value_t = 40)]
    sample: usize,
    /// Output document; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    original: Option<PathBuf>,
    #[arg(long)]
    original_delays: Option<PathBuf>,
    #[arg(long, conflicts_with = "original")]
    original_builtin: Option<String>,
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Ground-truth sidecar.
#[derive(Serialize, Deserialize)]
struct GroundTruth {
    circuit: String,
    seed: u64,
    state: ConstructionState,
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn load_config(p: Option<&Path>) -> Result<TimingConfig> {
    match p {
        Some(p) => Ok(TimingConfig::parse(&read(p)?)?),
        None => Ok(TimingConfig::default()),
    }
}

/// Netlist and bundled placement, if any.
fn load(src: &Source) -> Result<(Netlist, Option<Placement>)> {
    if let Some(name) = &src.builtin {
        let b = benchmarks::by_name(name).with_context(|| format!("unknown benchmark {name}"))?;
        return Ok((b.netlist, b.placement));
    }
    let Some(bench) = &src.bench else { bail!("either --bench or --builtin is required") };
    let delays = match &src.delays {
        Some(d) => Some(read(d)?),
        None => None,
    };
    let n = parse_bench(&read(bench)?, delays.as_deref())?;
    Ok((n, None))
}

fn load_reference(path: &Option<PathBuf>, delays: &Option<PathBuf>, builtin: &Option<String>) -> Result<Netlist> {
    let src = Source {
        bench: path.clone(),
        delays: delays.clone(),
        builtin: builtin.clone(),
    };
    Ok(load(&src)?.0)
}

fn load_truth(p: &Path) -> Result<GroundTruth> {
    serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".delays.toml");
    PathBuf::from(s)
}

fn construct(a: &ConstructArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let (n, bundled) = load(&a.source)?;
    let placement = match &a.placement {
        Some(p) => Some(Placement::parse_csv(&read(p)?)?),
        None => bundled,
    };
    let (Some(out), Some(report), Some(truth)) = (&a.out, &a.report, &a.ground_truth) else {
        bail!("--out, --report and --ground-truth are required");
    };
    let started = Instant::now();
    let (after, st) = workflow::construct(&n, &cfg, placement.as_ref(), a.seed);
    let rep = workflow::report(&st, &n, &after, &cfg, a.seed, started);
    write(out, &write_bench(&after))?;
    write(&sidecar(out), &write_annotations(&after))?;
    write(report, &serde_json::to_string_pretty(&rep)?)?;
    let gt = GroundTruth {
        circuit: n.name.clone(),
        seed: a.seed,
        state: st,
    };
    write(truth, &serde_json::to_string_pretty(&gt)?)?;
    eprintln!(
        "{}: {} wp_true, {} wp_false at {} site(s) in {:.2}s",
        rep.circuit,
        rep.n_wpt,
        rep.n_wpf,
        rep.sites.len(),
        rep.runtime_s
    );
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let (n, _) = load(&a.source)?;
    let gt = load_truth(&a.ground_truth)?;
    let jset = workflow::junction_set(&n, &gt.state.junctions);
    let mut bad = 0;
    if let Err(e) = workflow::verify_timing(&n, &jset, &cfg) {
        println!("timing: FAIL {e}");
        bad += 1;
    } else {
        println!("timing: ok");
    }
    for (i, r) in gt.state.records.iter().enumerate() {
        let found = record_path(&n, r).is_some();
        let window = check_wp_window(r.dmin, r.dmax, &cfg).ok;
        let gray = [r.dmin, r.dmax].iter().all(|&d| classify_gray(d, &cfg) == GrayClass::Suspicious);
        let ok = found && window && gray;
        if !ok {
            bad += 1;
        }
        println!(
            "record {i} {:?} {} -> {}: path {} window {} gray {}",
            r.kind,
            r.launch,
            r.capture,
            if found { "ok" } else { "MISSING" },
            if window { "ok" } else { "FAIL" },
            if gray { "ok" } else { "FAIL" }
        );
    }
    if bad > 0 {
        bail!("{bad} check(s) failed");
    }
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let reference = load_reference(&a.original, &a.original_delays, &a.original_builtin)?;
    let (n, _) = load(&a.source)?;
    let rep = simulate::equivalence_check(&reference, &n, &cfg, a.cycles, a.trials, a.seed, cfg.warmup_cycles)?;
    println!("{}", serde_json::to_string_pretty(&rep)?);
    if !rep.equivalent {
        bail!("netlists differ");
    }
    Ok(())
}

fn attack_cmd(a: &AttackArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let (n, _) = load(&a.source)?;
    let gt = load_truth(&a.ground_truth)?;
    let jset = workflow::junction_set(&n, &gt.state.junctions);
    let rep = attacks::attack(&n, &gt.state.records, &jset, &cfg, a.seed, a.sample);
    let text = serde_json::to_string_pretty(&rep)?;
    match &a.out {
        Some(p) => write(p, &text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn report_cmd(a: &ReportArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let before = load_reference(&a.original, &a.original_delays, &a.original_builtin)?;
    let (after, _) = load(&a.source)?;
    let gt = load_truth(&a.ground_truth)?;
    let rep = workflow::report(&gt.state, &before, &after, &cfg, a.seed, Instant::now());
    println!("{}", serde_json::to_string_pretty(&rep)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        None => construct(&cli.construct),
        Some(Command::Verify(a)) => verify(a),
        Some(Command::Simulate(a)) => simulate_cmd(a),
        Some(Command::Attack(a)) => attack_cmd(a),
        Some(Command::Report(a)) => report_cmd(a),
    }
}
