use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use sigrecog::bench::{
    emit_grid, emit_report, grid_search, overlay, read_observations, run_experiment,
    ExperimentSpec, ReportFormat, SamplerSettings,
};
use sigrecog::dtw::dtw_exact_with_matrix;
use sigrecog::recognizer::{
    Aggregation, DtwReduction, Engine, EngineConfig, EngineError, GoalPosterior,
    RecognitionProblem, ScoringMode,
};
use sigrecog::sampler::{
    load_trajectories, sample_k_trajectories, save_trajectories, GridMap, SampleRequest,
};
use sigrecog::signature::{StateVector, Trajectory};
use sigrecog::trajtree::{read_tree, write_tree, GoalId, TrajectoryTree};

/// Goal recognition over path-signature trajectory trees.
#[derive(Parser)]
#[command(name = "sigrecog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample or load trajectories and write a compressed trajectory tree.
    BuildTree(BuildTree),
    /// Stream observations through a tree and print the goal posterior per step.
    Recognize(Recognize),
    /// Run an experiment file at its first grid setting and report metrics.
    Bench(Bench),
    /// Sweep the experiment grid and report PPV per cell.
    GridSearch(Bench),
}

#[derive(Args)]
struct Common {
    /// TOML file whose keys take precedence over command-line flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signature truncation depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Branch scoring mode: plain or dtw.
    #[arg(long, env = "SIGRECOG_MODE")]
    mode: Option<ScoringMode>,
    /// Sakoe-Chiba style radius of the fast DTW refinement.
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BuildTree {
    #[command(flatten)]
    common: Common,
    /// Trajectory file to build from.
    #[arg(long, conflicts_with = "map")]
    trajectories: Option<PathBuf>,
    /// Moving-AI map to sample trajectories on.
    #[arg(long, requires = "start")]
    map: Option<PathBuf>,
    /// Start state as `x,y`.
    #[arg(long)]
    start: Option<Point>,
    /// Goal state as `x,y`; repeat once per goal.
    #[arg(long = "goal")]
    goals: Vec<Point>,
    /// Trajectories per goal.
    #[arg(short = 'k', long = "k")]
    k: Option<usize>,
    #[arg(long)]
    merge: Option<f64>,
    #[arg(long)]
    prune: Option<f64>,
    /// Output tree file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the trajectories used.
    #[arg(long)]
    save_trajectories: Option<PathBuf>,
}

#[derive(Args)]
struct Recognize {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    tree: PathBuf,
    /// File of `t x1 .. xd` lines.
    #[arg(long)]
    observations: PathBuf,
    /// Per-goal branch score reduction: max or mean.
    #[arg(long)]
    aggregation: Option<Aggregation>,
    /// DTW distance reduction: mean or sum.
    #[arg(long)]
    reduction: Option<DtwReduction>,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the DTW cost matrix of every branch as CSV into this directory.
    #[arg(long)]
    dump_costs: Option<PathBuf>,
}

#[derive(Args)]
struct Bench {
    #[command(flatten)]
    common: Common,
    #[arg(short = 'k', long = "k", value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    merge: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    prune: Vec<f64>,
    #[arg(long)]
    format: Option<ReportFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Keys accepted by `--config` for `build-tree` and `recognize`.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ToolConfig {
    seed: u64,
    k: usize,
    merge: f64,
    prune: f64,
    mask: Option<Vec<bool>>,
    engine: EngineConfig,
    sampler: SamplerSettings,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            k: 5,
            merge: 0.0,
            prune: 0.0,
            mask: None,
            engine: EngineConfig::default(),
            sampler: SamplerSettings::default(),
        }
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Violation(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

/// Comma-separated coordinates.
#[derive(Debug, Clone)]
struct Point(Vec<f64>);

impl std::str::FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}")))
            .collect::<Result<_, _>>()
            .map(Point)
    }
}

fn put(t: &mut toml::Table, path: &[&str], v: toml::Value) {
    if let [last] = path {
        t.insert(last.to_string(), v);
        return;
    }
    let inner = t
        .entry(path[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if let toml::Value::Table(inner) = inner {
        put(inner, &path[1..], v);
    }
}

fn common_flags(c: &Common, t: &mut toml::Table) {
    if let Some(d) = c.depth {
        put(t, &["engine", "depth"], toml::Value::Integer(d as i64));
    }
    if let Some(r) = c.radius {
        put(t, &["engine", "dtw_radius"], toml::Value::Integer(r as i64));
    }
    if let Some(s) = c.seed {
        put(t, &["seed"], toml::Value::Integer(s as i64));
    }
}

fn read_table(path: &Path) -> Result<toml::Table, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    text.parse()
        .map_err(|e: toml::de::Error| input(format!("{}: {e}", path.display())))
}

fn tool_config(c: &Common, mut flags: toml::Table) -> Result<ToolConfig, Failure> {
    common_flags(c, &mut flags);
    if let Some(m) = c.mode {
        put(
            &mut flags,
            &["engine", "mode"],
            toml::Value::String(m.to_string()),
        );
    }
    if let Some(path) = &c.config {
        overlay(&mut flags, read_table(path)?);
    }
    toml::Value::Table(flags)
        .try_into()
        .map_err(|e: toml::de::Error| input(format!("configuration: {e}")))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn build_tree(cmd: BuildTree) -> Result<(), Failure> {
    let mut flags = toml::Table::new();
    if let Some(k) = cmd.k {
        put(&mut flags, &["k"], toml::Value::Integer(k as i64));
    }
    if let Some(m) = cmd.merge {
        put(&mut flags, &["merge"], toml::Value::Float(m));
    }
    if let Some(p) = cmd.prune {
        put(&mut flags, &["prune"], toml::Value::Float(p));
    }
    let cfg = tool_config(&cmd.common, flags)?;

    let trajs: Vec<(Trajectory, GoalId)> = match (&cmd.trajectories, &cmd.map) {
        (Some(path), None) => {
            let all = load_trajectories(path)?;
            let ids: BTreeSet<GoalId> = all.iter().map(|(_, g)| *g).collect();
            ids.iter()
                .flat_map(|id| all.iter().filter(move |(_, g)| g == id).take(cfg.k))
                .cloned()
                .collect()
        }
        (None, Some(path)) => {
            let map = GridMap::parse_movingai(&std::fs::read_to_string(path)?)?;
            let start = &cmd.start.as_ref().expect("required by clap").0;
            if start.len() != 2 || cmd.goals.iter().any(|g| g.0.len() != 2) {
                return Err(input("map problems need 2-D start and goals"));
            }
            if cmd.goals.is_empty() {
                return Err(input("at least one --goal is required"));
            }
            let mut out = Vec::new();
            for (i, Point(g)) in cmd.goals.iter().enumerate() {
                let req = SampleRequest {
                    spread: cfg.sampler.spread,
                    step: cfg.sampler.step,
                    attempts_per_path: cfg.sampler.attempts_per_path,
                    min_separation: cfg.sampler.min_separation,
                    ..SampleRequest::new(
                        &map,
                        [start[0], start[1]],
                        [g[0], g[1]],
                        cfg.k,
                        cfg.seed.wrapping_add(i as u64),
                    )
                };
                let sampled =
                    sample_k_trajectories(&req).map_err(|e| input(format!("goal {i}: {e}")))?;
                out.extend(sampled.into_iter().map(|t| (t, GoalId(i as u32))));
            }
            out
        }
        _ => return Err(input("give exactly one of --trajectories or --map")),
    };
    if trajs.is_empty() {
        return Err(input("no trajectories to build from"));
    }
    if let Some(path) = &cmd.save_trajectories {
        save_trajectories(path, &trajs)?;
    }
    let trajs = match &cfg.mask {
        Some(mask) => trajs
            .into_iter()
            .map(|(t, g)| Ok((t.project(mask)?, g)))
            .collect::<Result<Vec<_>, sigrecog::signature::SignatureError>>()?,
        None => trajs,
    };
    let tree = TrajectoryTree::build(&trajs, cfg.engine.depth)?.compress(cfg.merge, cfg.prune)?;
    let mut w = BufWriter::new(File::create(&cmd.out)?);
    write_tree(&tree, &mut w)?;
    w.flush()?;

    let goals: BTreeSet<GoalId> = trajs.iter().map(|(_, g)| *g).collect();
    let d = tree.validate(&goals);
    eprintln!(
        "nodes {} leaves {} branches {} height {}",
        d.stats.node_count, d.stats.leaf_count, d.stats.branch_count, d.stats.height
    );
    if d.is_clean() {
        Ok(())
    } else {
        let lines: Vec<String> = d.violations.iter().map(|v| v.to_string()).collect();
        Err(Failure::Violation(lines.join("\n")))
    }
}

fn posterior_line(
    format: ReportFormat,
    t: u64,
    p: &GoalPosterior,
    tie: f64,
    w: &mut dyn Write,
) -> io::Result<()> {
    let predicted: Vec<String> = p.predicted(tie).iter().map(|g| g.to_string()).collect();
    match format {
        ReportFormat::Csv | ReportFormat::Text => {
            let sep = if format == ReportFormat::Csv {
                ","
            } else {
                "  "
            };
            let probs: Vec<String> = p.probabilities.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(
                w,
                "{t}{sep}{}{sep}{}{sep}{}",
                probs.join(sep),
                p.argmax(),
                predicted.join(" ")
            )
        }
        ReportFormat::JsonLines => {
            let posterior: serde_json::Map<String, serde_json::Value> = p
                .goals
                .iter()
                .zip(&p.probabilities)
                .map(|(g, v)| (g.to_string(), serde_json::json!(v)))
                .collect();
            let line = serde_json::json!({
                "t": t,
                "posterior": posterior,
                "argmax": p.argmax().to_string(),
                "predicted": predicted,
                "degenerate": p.degenerate,
            });
            writeln!(w, "{line}")
        }
    }
}

fn recognize(cmd: Recognize) -> Result<(), Failure> {
    let mut flags = toml::Table::new();
    if let Some(a) = cmd.aggregation {
        put(
            &mut flags,
            &["engine", "aggregation"],
            toml::Value::String(a.to_string()),
        );
    }
    if let Some(r) = cmd.reduction {
        put(
            &mut flags,
            &["engine", "dtw_reduction"],
            toml::Value::String(r.to_string()),
        );
    }
    let tree = read_tree(BufReader::new(
        File::open(&cmd.tree).map_err(|e| input(format!("{}: {e}", cmd.tree.display())))?,
    ))?;
    if cmd.common.depth.is_none() {
        put(
            &mut flags,
            &["engine", "depth"],
            toml::Value::Integer(tree.depth() as i64),
        );
    }
    let cfg = tool_config(&cmd.common, flags)?;
    let observations = read_observations(BufReader::new(File::open(&cmd.observations)?))?;
    if observations.is_empty() {
        return Err(input("observation file is empty"));
    }
    let diagnostics = tree.validate(&tree.goal_ids());
    let tree = Arc::new(tree);
    let tie = cfg.engine.tie_tolerance;
    let problem = RecognitionProblem::from_tree(tree.clone(), cfg.engine)?;
    let mut engine = Engine::new(problem)?;

    let mut w = output(&cmd.out)?;
    let goals = engine.problem().goal_ids();
    if cmd.format != ReportFormat::JsonLines {
        let sep = if cmd.format == ReportFormat::Csv {
            ","
        } else {
            "  "
        };
        let names: Vec<String> = goals.iter().map(|g| g.to_string()).collect();
        writeln!(w, "t{sep}{}{sep}argmax{sep}predicted", names.join(sep))?;
    }
    let mut last = None;
    for (t, o) in observations {
        let o = match &cfg.mask {
            Some(m) => {
                let v: Vec<f64> = o
                    .iter()
                    .zip(m)
                    .filter(|(_, k)| **k)
                    .map(|(v, _)| *v)
                    .collect();
                StateVector::new(v)?
            }
            None => StateVector::new(o)?,
        };
        match engine.observe(t, o) {
            Ok(p) => {
                posterior_line(cmd.format, t, &p, tie, &mut w)?;
                last = Some(p);
            }
            Err(EngineError::GoalReached(g)) => {
                eprintln!("observation at t={t} reached goal {g}; stopping");
                break;
            }
            Err(e) => return Err(input(format!("t={t}: {e}"))),
        }
    }
    w.flush()?;
    if let Some(p) = &last {
        for (rank, (g, v)) in p.ranking().iter().enumerate() {
            eprintln!("rank {} {g} {v:.6}", rank + 1);
        }
    }
    if let Some(dir) = &cmd.dump_costs {
        std::fs::create_dir_all(dir)?;
        let obs: Vec<&[f64]> = engine
            .log()
            .prefix_signatures()
            .iter()
            .map(|s| s.terms())
            .collect();
        for (i, b) in engine.branches().iter().enumerate() {
            let nodes: Vec<&[f64]> = b
                .nodes
                .iter()
                .map(|&n| tree.node(n).value.terms())
                .collect();
            let (_, m) = dtw_exact_with_matrix(&obs, &nodes)?;
            std::fs::write(dir.join(format!("branch_{i}.csv")), m.to_csv())?;
        }
    }
    if diagnostics.is_clean() {
        Ok(())
    } else {
        let lines: Vec<String> = diagnostics
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect();
        Err(Failure::Violation(lines.join("\n")))
    }
}

fn load_spec(cmd: &Bench) -> Result<ExperimentSpec, Failure> {
    let path = cmd
        .common
        .config
        .as_ref()
        .ok_or_else(|| input("--config is required"))?;
    let mut flags = toml::Table::new();
    common_flags(&cmd.common, &mut flags);
    let list = |v: Vec<toml::Value>| toml::Value::Array(v);
    if let Some(m) = cmd.common.mode {
        put(
            &mut flags,
            &["grid", "mode"],
            list(vec![toml::Value::String(m.to_string())]),
        );
    }
    if !cmd.k.is_empty() {
        let v = cmd
            .k
            .iter()
            .map(|k| toml::Value::Integer(*k as i64))
            .collect();
        put(&mut flags, &["grid", "k"], list(v));
    }
    if !cmd.merge.is_empty() {
        let v = cmd.merge.iter().map(|m| toml::Value::Float(*m)).collect();
        put(&mut flags, &["grid", "merge"], list(v));
    }
    if !cmd.prune.is_empty() {
        let v = cmd.prune.iter().map(|m| toml::Value::Float(*m)).collect();
        put(&mut flags, &["grid", "prune"], list(v));
    }
    Ok(ExperimentSpec::load(path, flags)?)
}

fn bench(cmd: Bench) -> Result<(), Failure> {
    let spec = load_spec(&cmd)?;
    let report = run_experiment(&spec)?;
    let mut w = output(&cmd.out)?;
    emit_report(&report, cmd.format.unwrap_or(ReportFormat::Text), &mut w)?;
    w.flush()?;
    let violations: Vec<String> = report
        .problems
        .iter()
        .flat_map(|p| p.violations.iter().map(move |v| format!("{}: {v}", p.name)))
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations.join("\n")))
    }
}

fn grid(cmd: Bench) -> Result<(), Failure> {
    let spec = load_spec(&cmd)?;
    let report = grid_search(&spec)?;
    let mut w = output(&cmd.out)?;
    emit_grid(&report, cmd.format.unwrap_or(ReportFormat::Csv), &mut w)?;
    w.flush()?;
    for b in &report.best {
        let s = &b.setting;
        eprintln!(
            "best {}: K {} merge {} prune {} PPV {:.2}",
            s.mode, s.k, s.merge, s.prune, b.ppv
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::BuildTree(c) => build_tree(c),
        Command::Recognize(c) => recognize(c),
        Command::Bench(c) => bench(c),
        Command::GridSearch(c) => grid(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("validation failed:\n{msg}");
            ExitCode::from(2)
        }
    }
}
