//! Command-line front end. Every run writes `manifest.json` next to its
//! outputs; `replay` re-runs a manifest's command.
//!
//! Exit codes: 0 success; 1 bad flags, unreadable or invalid input, unknown
//! line ids, off-grid times; 2 non-completing or infeasible schedules and
//! attack times past completion.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::attack::{anticipated_incidents, cascade, robustness_indices, AttackIncident, AttackTarget};
use crate::case::{import_matpower, parse_case, GridCase};
use crate::error::ScheduleError;
use crate::optimizer::{
    evaluate_schedule, optimize, IncidentRow, ObjectiveConfig, ScheduleReport, SearchConfig,
};
use crate::par;
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "netrestore", version, about = "Restoration schedule planning under attack contingencies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Search for a resilient restoration schedule.
    Optimize(OptimizeArgs),
    /// Report restorability indices and incident rows for a fixed schedule.
    Evaluate(EvaluateArgs),
    /// Apply incidents to one snapshot of a schedule.
    Attack(AttackArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Case file (native TOML, or MATPOWER when ending in `.m`), or `ieee39`.
    #[arg(long, default_value = "ieee39")]
    pub case: String,
    /// Per-element attack probability.
    #[arg(long, default_value_t = 0.25)]
    pub mu: f64,
    /// Largest number of simultaneous failures per incident.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub kmax: u64,
    /// Load pickup ratio of available generation.
    #[arg(long, default_value_t = 0.95)]
    pub tau: f64,
    /// Share of energized lines, by flow, treated as attack targets.
    #[arg(long, default_value_t = 0.30)]
    pub target_fraction: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for evaluation (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub pop: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub generations: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub shelters: u64,
    /// Recompute incidents only where the target set changed.
    #[arg(long)]
    pub sparse_robustness: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// File listing line ids in energization order.
    #[arg(long)]
    pub schedule: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AttackArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub schedule: PathBuf,
    /// Snapshot time, minutes.
    #[arg(long)]
    pub at: f64,
    /// Incident such as `line:4`, `bus:3`, `gen:30` or `line:4+line:5`;
    /// repeatable. Without it the anticipated incidents are used.
    #[arg(long = "target")]
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: Option<u64>,
    pub run: Command,
    pub wall_time_ms: u128,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

fn fail(code: i32, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        fail(1, error)
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

pub fn run(cmd: Command) -> Result<(), Failure> {
    let start = Instant::now();
    let (out_dir, seed) = match &cmd {
        Command::Optimize(a) => (a.common.out_dir.clone(), Some(a.seed)),
        Command::Evaluate(a) => (a.common.out_dir.clone(), None),
        Command::Attack(a) => (a.common.out_dir.clone(), None),
        Command::Replay(r) => return replay(r),
    };
    let result = match &cmd {
        Command::Optimize(a) => cmd_optimize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Replay(_) => unreachable!(),
    };
    // a manifest is written even for exit-2 outcomes, whose files exist
    if result.is_ok() || result.as_ref().is_err_and(|f| f.code == 2) {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            run: cmd,
            wall_time_ms: start.elapsed().as_millis(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(anyhow::Error::from)?;
        write(&out_dir, "manifest.json", &(json + "\n"))?;
    }
    result
}

fn replay(r: &ReplayArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&r.manifest)
        .with_context(|| format!("reading {}", r.manifest.display()))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", r.manifest.display()))?;
    let mut cmd = manifest.run;
    if let Some(dir) = &r.out_dir {
        match &mut cmd {
            Command::Optimize(a) => a.common.out_dir = dir.clone(),
            Command::Evaluate(a) => a.common.out_dir = dir.clone(),
            Command::Attack(a) => a.common.out_dir = dir.clone(),
            Command::Replay(_) => {}
        }
    }
    run(cmd)
}

/// Loads a case by path, or the bundled 39-bus case for `ieee39`.
pub fn load_case(spec: &str) -> anyhow::Result<GridCase> {
    if spec == "ieee39" {
        return Ok(GridCase::ieee39());
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).with_context(|| format!("reading case {spec}"))?;
    let case = if path.extension().is_some_and(|e| e == "m") {
        import_matpower(&text)
    } else {
        parse_case(&text)
    }
    .with_context(|| format!("loading case {spec}"))?;
    Ok(case)
}

fn objective_config(c: &CommonArgs) -> anyhow::Result<ObjectiveConfig> {
    let cfg = ObjectiveConfig {
        mu: c.mu,
        k_max: c.kmax as usize,
        target_fraction: c.target_fraction,
        tau: c.tau,
        ..Default::default()
    };
    cfg.check().map_err(|e| anyhow!(e))?;
    Ok(cfg)
}

fn setup(c: &CommonArgs) -> anyhow::Result<(GridCase, ObjectiveConfig)> {
    if let Some(n) = c.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        par::set_threads(n);
    }
    let cfg = objective_config(c)?;
    Ok((load_case(&c.case)?, cfg))
}

fn write(dir: &Path, name: &str, body: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn read_schedule(case: &GridCase, path: &Path) -> Result<Vec<crate::case::LineId>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading schedule {}", path.display()))?;
    let seq = report::parse_schedule(&text).map_err(|e| anyhow!("schedule {}: {e}", path.display()))?;
    // unknown ids and duplicates are input errors; ordering problems are exit 2
    match crate::sim::check_sequence(case, &seq) {
        Ok(_) => Ok(seq),
        Err(e @ ScheduleError::Infeasible(_)) => Err(fail(2, e.into())),
        Err(e) => Err(fail(1, e.into())),
    }
}

fn write_report(dir: &Path, case: &GridCase, rep: &ScheduleReport, evals: Option<usize>) -> anyhow::Result<()> {
    write(dir, "schedule.txt", &report::schedule_txt(&rep.trajectory.sequence))?;
    write(dir, "trajectory.csv", &report::trajectory_csv(&rep.trajectory, case))?;
    write(dir, "indices.csv", &report::indices_csv(rep))?;
    write(dir, "summary.csv", &report::summary_csv(rep))?;
    write(dir, "incidents.csv", &report::incidents_csv(&rep.incidents))?;
    let summary = report::Summary::new(rep, case, evals);
    write(dir, "summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<(), Failure> {
    let (case, mut ocfg) = setup(&a.common)?;
    ocfg.robustness_every_step = !a.sparse_robustness;
    let scfg = SearchConfig {
        population: a.pop as usize,
        generations: a.generations as usize,
        shelters: a.shelters as usize,
        seed: a.seed,
        ..Default::default()
    };
    scfg.check().map_err(|e| anyhow!(e))?;
    let result = optimize(&case, &ocfg, &scfg);
    let dir = &a.common.out_dir;
    write(dir, "convergence.csv", &report::convergence_csv(&result.history))?;
    let evals = result.history.last().map(|h| h.evals);
    let seq = &result.best.decoded_sequence;
    if seq.is_empty() {
        return Err(fail(2, anyhow!("no line can be energized from the black-start unit")));
    }
    let rep = evaluate_schedule(&case, seq, &ocfg).map_err(anyhow::Error::from)?;
    write_report(dir, &case, &rep, evals)?;
    if !rep.trajectory.is_complete() {
        return Err(fail(2, anyhow!("best schedule does not restart every generator")));
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), Failure> {
    let (case, ocfg) = setup(&a.common)?;
    let seq = read_schedule(&case, &a.schedule)?;
    let rep = evaluate_schedule(&case, &seq, &ocfg).map_err(anyhow::Error::from)?;
    write_report(&a.common.out_dir, &case, &rep, None)?;
    if !rep.trajectory.is_complete() {
        return Err(fail(2, anyhow!("schedule does not restart every generator")));
    }
    Ok(())
}

fn parse_incident(spec: &str, mu: f64) -> anyhow::Result<AttackIncident> {
    let targets = spec
        .split('+')
        .map(|t| t.parse::<AttackTarget>().map_err(|e| anyhow!("--target {spec}: {e}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(AttackIncident::new(targets, mu))
}

fn cmd_attack(a: &AttackArgs) -> Result<(), Failure> {
    let (case, ocfg) = setup(&a.common)?;
    let seq = read_schedule(&case, &a.schedule)?;
    let mut incidents = Vec::new();
    for spec in &a.targets {
        let inc = parse_incident(spec, ocfg.mu)?;
        for t in &inc.targets {
            let known = match *t {
                AttackTarget::Line(l) => case.line(l).is_some(),
                AttackTarget::Bus(b) => case.bus_index(b).is_some(),
                AttackTarget::Gen(g) => case.generator(g).is_some(),
            };
            if !known {
                return Err(fail(1, anyhow!("--target {spec}: {t} is not in the case")));
            }
        }
        incidents.push(inc);
    }
    let tr = crate::sim::simulate_sequence(&case, &seq, &ocfg.sim()).map_err(anyhow::Error::from)?;
    let grid = (a.at / ocfg.step_minutes).round() * ocfg.step_minutes;
    if !(a.at >= 0.0) || (a.at - grid).abs() > 1e-9 {
        return Err(fail(1, anyhow!("--at {} is not on the {}-minute grid", a.at, ocfg.step_minutes)));
    }
    let horizon = tr
        .completion_time
        .unwrap_or_else(|| tr.steps.last().map_or(0.0, |s| s.time_min));
    if a.at > horizon + 1e-9 {
        return Err(fail(2, anyhow!("--at {} is past the end of restoration at {horizon} min", a.at)));
    }
    let state = tr.state_at(grid).expect("grid time within the trajectory");
    if incidents.is_empty() {
        incidents = anticipated_incidents(state, &case, ocfg.target_fraction, ocfg.k_max, ocfg.mu);
    }
    let rows: Vec<IncidentRow> = par::map(par::ExecMode::default(), &incidents, |inc| {
        let out = cascade(state, inc, &case);
        robustness_indices(state, &out, &case)
    })
    .into_iter()
    .zip(incidents)
    .enumerate()
    .map(|(i, (indices, incident))| IncidentRow {
        time_min: grid,
        incident_id: i + 1,
        incident,
        indices,
    })
    .collect();
    write(&a.common.out_dir, "incidents.csv", &report::incidents_csv(&rows))?;
    Ok(())
}
