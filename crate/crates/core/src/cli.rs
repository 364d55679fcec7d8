//! Batch front end: `sccmoco <gen|solve|train|finetune|eval|hv>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmodel::{avg_placements, evaluate, is_feasible, local_rate, Assignment};
use crate::error::{Error, Result};
use crate::heuristics::{front_from_tradeoffs, random_front, Front, WEIGHT_GREEDY_TRADEOFFS};
use crate::instance::{
    generate_instance, ingest_cells, validate_instance, GeneratorConfig, Instance, LocationSource,
    SCHEMA_VERSION,
};
use crate::io::{
    read_front_csv, read_json, read_jsonl, write_atomic, write_front_csv, write_json, write_jsonl,
    FrontRow, HvEntry, HvReport, SolutionFile,
};
use crate::moea::{moead, nsga2, MoeaParams};
use crate::neural::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use crate::neural::diffusion::{BetaKind, NoiseSchedule};
use crate::neural::net::{DenoiserParams, NetConfig};
use crate::neural::optim::AdamConfig;
use crate::neural::sampling::{sample_steps, StepRule};
use crate::neural::train::{examples_from_labels, train_consistency, TrainConfig};
use crate::oracle::{enumerate_pareto_exact, label_dataset, LabeledExample};
use crate::pareto::{hypervolume_norm, HvConfig, ObjectivePoint};
use crate::rl::{mo_cmpo, policy_front, preference_sweep, MoCmpoOutput, PpoConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Paper,
    Desk,
}

#[derive(Parser, Debug)]
#[command(name = "sccmoco", version, about = "Multi-objective VR service placement workbench")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    /// Same as `--preset desk`.
    #[arg(long, global = true)]
    pub desk: bool,
    /// TOML file overriding preset values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate instance files and a manifest.
    Gen(GenArgs),
    /// Run one solver on a set of instances.
    Solve(SolveArgs),
    /// Label instances with the exact oracle and train the denoiser.
    Train(TrainArgs),
    /// Multi-objective PPO fine-tuning of a trained checkpoint.
    Finetune(FinetuneArgs),
    /// Compare solve runs and emit plot data.
    Eval(EvalArgs),
    /// Normalized hypervolume of front CSV files.
    Hv(HvArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Cell CSV (`lat`, `lon`, `samples`) to draw MEC sites from.
    #[arg(long)]
    pub cells: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub min_users: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Random,
    WeightGreedy,
    Nsga2,
    Moead,
    Exact,
    Cm,
    Mocmpo,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Random => "random",
            Algo::WeightGreedy => "weight-greedy",
            Algo::Nsga2 => "nsga2",
            Algo::Moead => "moead",
            Algo::Exact => "exact",
            Algo::Cm => "cm",
            Algo::Mocmpo => "mocmpo",
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Instance file or directory of instance files.
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Model checkpoint for `cm` and `mocmpo`.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// `auto` or `T,E`.
    #[arg(long)]
    pub hv_ref: Option<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub instances: PathBuf,
    /// Pre-computed labels (JSON lines); computed with the oracle if absent.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Output directories of `solve` runs.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Instances, for the local-rate and placement series.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    #[arg(long)]
    pub hv_ref: Option<String>,
}

#[derive(Args, Debug)]
pub struct HvArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub fronts: Vec<PathBuf>,
    #[arg(long)]
    pub hv_ref: Option<String>,
}

/// Noise schedule settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: BetaKind,
    pub steps: usize,
    pub alpha: f64,
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::new(self.kind, self.steps, self.alpha)
    }
}

/// How model-based fronts are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub steps: usize,
    pub rule: StepRule,
    /// Preference weights from `[1, 0]` to `[0, 1]`.
    pub sweep: usize,
    /// Samples per preference weight.
    pub repeats: usize,
}

/// Every tunable of a run. Presets fill all fields; a TOML file may
/// override any subset, and unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub net: NetConfig,
    pub schedule: ScheduleConfig,
    pub train: TrainConfig,
    pub moea: MoeaParams,
    pub ppo: PpoConfig,
    pub sampling: SamplingConfig,
    pub oracle_nodes: u64,
    pub random_draws: usize,
    /// Fixed hypervolume reference `[T, E]`.
    pub hv_ref: [f64; 2],
}

impl RunConfig {
    pub fn preset(p: Preset) -> Self {
        let desk = p == Preset::Desk;
        RunConfig {
            generator: if desk {
                GeneratorConfig::desk()
            } else {
                GeneratorConfig::paper()
            },
            net: if desk { NetConfig::desk() } else { NetConfig::paper() },
            schedule: ScheduleConfig {
                kind: BetaKind::LinearFlip,
                steps: 1000,
                alpha: 0.2,
            },
            train: if desk {
                TrainConfig {
                    epochs: 10,
                    batch_size: 16,
                    adam: AdamConfig {
                        lr: 1e-3,
                        ..AdamConfig::default()
                    },
                }
            } else {
                TrainConfig::default()
            },
            moea: MoeaParams::default(),
            ppo: if desk { PpoConfig::desk() } else { PpoConfig::paper() },
            sampling: SamplingConfig {
                steps: 3,
                rule: StepRule::Cosine,
                sweep: 11,
                repeats: 3,
            },
            oracle_nodes: 50_000_000,
            random_draws: 100,
            hv_ref: [50.0, 100.0],
        }
    }

    /// Preset values with the keys of `overrides` merged in.
    pub fn with_overrides(p: Preset, overrides: &str) -> Result<Self> {
        let base = toml::Value::try_from(RunConfig::preset(p))
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let patch: toml::Value =
            toml::from_str(overrides).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let merged = merge(base, patch);
        let cfg: RunConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.net.validate()?;
        self.schedule.build()?;
        self.moea.validate()?;
        self.ppo.validate()?;
        if self.train.batch_size == 0 {
            return Err(Error::InvalidConfig("train.batch_size must be positive".into()));
        }
        if self.sampling.steps == 0 || self.sampling.repeats == 0 || self.sampling.sweep == 0 {
            return Err(Error::InvalidConfig("sampling values must be positive".into()));
        }
        if !(self.hv_ref[0] > 0.0 && self.hv_ref[1] > 0.0) {
            return Err(Error::InvalidConfig("hv_ref must be positive".into()));
        }
        Ok(())
    }
}

fn merge(base: toml::Value, patch: toml::Value) -> toml::Value {
    match (base, patch) {
        (toml::Value::Table(mut b), toml::Value::Table(p)) => {
            for (k, v) in p {
                let merged = match b.remove(&k) {
                    Some(old) => merge(old, v),
                    None => v,
                };
                b.insert(k, merged);
            }
            toml::Value::Table(b)
        }
        (_, p) => p,
    }
}

/// Run description written into every artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub preset: Preset,
    pub seed: u64,
    pub instance_schema: u32,
    pub checkpoint_schema: u32,
    pub config: RunConfig,
}

/// Parsed `--hv-ref` value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HvRef {
    Auto,
    Fixed(f64, f64),
}

pub fn parse_hv_ref(s: &str) -> Result<HvRef> {
    if s.trim() == "auto" {
        return Ok(HvRef::Auto);
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if let [t, e] = parts.as_slice() {
        if let (Ok(t), Ok(e)) = (t.parse::<f64>(), e.parse::<f64>()) {
            if t > 0.0 && e > 0.0 {
                return Ok(HvRef::Fixed(t, e));
            }
        }
    }
    Err(Error::InvalidConfig(format!("--hv-ref expects `auto` or `T,E`, got `{s}`")))
}

impl HvRef {
    fn resolve(self, fronts: &[&[ObjectivePoint]]) -> HvConfig {
        match self {
            HvRef::Auto => HvConfig::auto(fronts.iter().copied()),
            HvRef::Fixed(t, e) => HvConfig::new(t, e),
        }
    }
}

/// Process exit code for an error: 2 for configuration problems, 3 for
/// failures at run time.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InfeasibleConfig(_)
        | Error::Usage(_)
        | Error::Schema { .. } => 2,
        _ => 3,
    }
}

struct Ctx {
    cfg: RunConfig,
    preset: Preset,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn echo(&self, command: &str) -> ConfigEcho {
        ConfigEcho {
            tool: "sccmoco".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            preset: self.preset,
            seed: self.seed,
            instance_schema: SCHEMA_VERSION,
            checkpoint_schema: CHECKPOINT_VERSION,
            config: self.cfg.clone(),
        }
    }

    fn hv_ref(&self, flag: &Option<String>) -> Result<HvRef> {
        match flag {
            Some(s) => parse_hv_ref(s),
            None => Ok(HvRef::Fixed(self.cfg.hv_ref[0], self.cfg.hv_ref[1])),
        }
    }
}

/// Parses `args` and runs the selected command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            Error::Usage(String::new())
        }
        _ => Error::Usage(e.to_string()),
    })?;
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<()> {
    let preset = if cli.desk { Preset::Desk } else { cli.preset };
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            RunConfig::with_overrides(preset, &text)?
        }
        None => RunConfig::preset(preset),
    };
    let ctx = Ctx {
        cfg,
        preset,
        seed: cli.seed,
        out: cli.out,
    };
    let jobs = cli.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("--jobs: {e}")))?;
    pool.install(|| match cli.command {
        Command::Gen(a) => cmd_gen(&ctx, &a),
        Command::Solve(a) => cmd_solve(&ctx, &a),
        Command::Train(a) => cmd_train(&ctx, &a),
        Command::Finetune(a) => cmd_finetune(&ctx, &a),
        Command::Eval(a) => cmd_eval(&ctx, &a),
        Command::Hv(a) => cmd_hv(&ctx, &a),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub path: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub echo: ConfigEcho,
    pub instances: Vec<ManifestEntry>,
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> Result<()> {
    let mut gen = ctx.cfg.generator.clone();
    if let Some(path) = &a.cells {
        let cells = ingest_cells(path, a.min_users)?;
        log::info!("{} cells kept, {} rows skipped", cells.records.len(), cells.skipped);
        gen.locations = LocationSource::Cells(cells.records);
    }
    gen.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let seeds: Vec<u64> = (0..a.count).map(|_| rng.gen()).collect();
    let dir = ctx.out.join("instances");
    let entries: Vec<Result<ManifestEntry>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let id = format!("inst_{i:04}");
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let inst = generate_instance(&gen, &id, &mut r)?;
            let problems = validate_instance(&inst);
            if !problems.is_empty() {
                return Err(Error::InfeasibleInstance(format!("{id}: {}", problems.join("; "))));
            }
            let path = dir.join(format!("{id}.json"));
            inst.save(&path)?;
            Ok(ManifestEntry { id, seed, path })
        })
        .collect();
    let manifest = Manifest {
        echo: ctx.echo("gen"),
        instances: entries.into_iter().collect::<Result<_>>()?,
    };
    write_json(&ctx.out.join("manifest.json"), &manifest)?;
    println!("wrote {} instances to {}", manifest.instances.len(), dir.display());
    Ok(())
}

/// Loads one instance file or every `*.json` file of a directory, sorted by
/// file name.
pub fn load_instances(path: &Path) -> Result<Vec<Instance>> {
    if path.is_file() {
        return Ok(vec![Instance::load(path)?]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyDataset {
            path: path.into(),
            skipped: 0,
        });
    }
    files.iter().map(|f| Instance::load(f)).collect()
}

fn load_model(ckpt: &Option<PathBuf>, algo: &str) -> Result<Checkpoint> {
    let path = ckpt
        .as_ref()
        .ok_or_else(|| Error::Usage(format!("--ckpt is required for {algo}")))?;
    Checkpoint::load(path)
}

fn solve_one(
    ctx: &Ctx,
    algo: Algo,
    model: Option<&(DenoiserParams, NoiseSchedule)>,
    inst: &Instance,
    seed: u64,
) -> Result<Front> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = &ctx.cfg;
    match algo {
        Algo::Random => random_front(inst, cfg.random_draws, &mut rng),
        Algo::WeightGreedy => front_from_tradeoffs(inst, &WEIGHT_GREEDY_TRADEOFFS),
        Algo::Nsga2 => nsga2(inst, &MoeaParams { seed, ..cfg.moea.clone() }),
        Algo::Moead => moead(inst, &MoeaParams { seed, ..cfg.moea.clone() }),
        Algo::Exact => enumerate_pareto_exact(inst, cfg.oracle_nodes),
        Algo::Cm | Algo::Mocmpo => {
            let (params, schedule) = model.expect("model loaded");
            let steps = sample_steps(cfg.sampling.rule, cfg.sampling.steps, schedule.steps());
            policy_front(
                params,
                inst,
                &preference_sweep(cfg.sampling.sweep),
                cfg.sampling.repeats,
                &steps,
                schedule,
                &mut rng,
            )
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub echo: ConfigEcho,
    pub algo: String,
    pub instances: usize,
    pub hv_mean: f64,
    pub time_mean_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TimingRow {
    instance_id: String,
    seconds: f64,
    points: usize,
}

fn write_front(dir: &Path, inst: &Instance, front: &Front) -> Result<()> {
    let id = &inst.id;
    let rows: Vec<FrontRow> = front
        .iter()
        .enumerate()
        .map(|(k, (p, _))| FrontRow {
            t_ms: p.t,
            e_j: p.e,
            solution_ref: format!("solutions/{id}.json#{k}"),
        })
        .collect();
    write_front_csv(&dir.join("fronts").join(format!("{id}.csv")), &rows)?;
    let sols = front
        .iter()
        .map(|(_, x)| SolutionFile::new(inst, x, true))
        .collect::<Result<Vec<_>>>()?;
    write_json(&dir.join("solutions").join(format!("{id}.json")), &sols)
}

fn cmd_solve(ctx: &Ctx, a: &SolveArgs) -> Result<()> {
    let hv_ref = ctx.hv_ref(&a.hv_ref)?;
    let model = match a.algo {
        Algo::Cm | Algo::Mocmpo => {
            let ck = load_model(&a.ckpt, a.algo.name())?;
            Some((ck.denoiser()?, ck.schedule.clone()))
        }
        _ => None,
    };
    let instances = load_instances(&a.instances)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let seeds: Vec<u64> = instances.iter().map(|_| rng.gen()).collect();
    let results: Vec<Result<(Front, f64)>> = instances
        .par_iter()
        .zip(&seeds)
        .map(|(inst, &seed)| {
            let start = Instant::now();
            let front = solve_one(ctx, a.algo, model.as_ref(), inst, seed)?;
            Ok((front, start.elapsed().as_secs_f64()))
        })
        .collect();
    let dir = ctx.out.join("solve").join(a.algo.name());
    let mut report = HvReport::new();
    let mut timing = Vec::new();
    for (inst, res) in instances.iter().zip(results) {
        let (front, secs) = res?;
        if let Some((_, x)) = front.iter().find(|(_, x)| !is_feasible(inst, x)) {
            return Err(Error::InfeasibleInstance(format!(
                "{}: solver returned an infeasible placement ({} assigned)",
                inst.id,
                x.num_assigned()
            )));
        }
        write_front(&dir, inst, &front)?;
        let pts: Vec<ObjectivePoint> = front.iter().map(|(p, _)| *p).collect();
        let hv = hv_ref.resolve(&[&pts]);
        report.insert(inst.id.clone(), HvEntry::new(hypervolume_norm(&pts, &hv), &hv));
        timing.push(TimingRow {
            instance_id: inst.id.clone(),
            seconds: secs,
            points: front.len(),
        });
    }
    write_json(&dir.join("hv.json"), &report)?;
    write_csv(&dir.join("timing.csv"), &timing)?;
    let n = instances.len() as f64;
    let summary = SolveReport {
        echo: ctx.echo("solve"),
        algo: a.algo.name().into(),
        instances: instances.len(),
        hv_mean: report.values().map(|h| h.hv).sum::<f64>() / n,
        time_mean_s: timing.iter().map(|t| t.seconds).sum::<f64>() / n,
    };
    write_json(&dir.join("report.json"), &summary)?;
    println!(
        "{}: {} instances, mean HV {:.4}, mean time {:.4} s",
        summary.algo, summary.instances, summary.hv_mean, summary.time_mean_s
    );
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct EpochRow {
    epoch: usize,
    loss: f64,
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let instances = load_instances(&a.instances)?;
    let dir = ctx.out.join("train");
    let labels: Vec<LabeledExample> = match &a.labels {
        Some(path) => read_jsonl(path)?,
        None => {
            let (labels, skipped) = label_dataset(&instances, ctx.cfg.oracle_nodes);
            log::info!("{} labels, {skipped} instances skipped", labels.len());
            write_jsonl(&dir.join("labels.jsonl"), &labels)?;
            labels
        }
    };
    let examples = examples_from_labels(&instances, &labels)?;
    let schedule = ctx.cfg.schedule.build()?;
    let mut tc = ctx.cfg.train.clone();
    if let Some(e) = a.epochs {
        tc.epochs = e;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut params = DenoiserParams::init(ctx.cfg.net, &mut rng);
    let losses = train_consistency(&mut params, &examples, &schedule, &tc, &mut rng, |e, l| {
        log::info!("epoch {e}: loss {l:.5}");
    })?;
    let echo = ctx.echo("train");
    let mut lines = vec![serde_json::json!({ "header": echo })];
    lines.extend(
        losses
            .iter()
            .enumerate()
            .map(|(epoch, &loss)| serde_json::to_value(EpochRow { epoch, loss }).expect("plain row")),
    );
    write_jsonl(&dir.join("train_log.jsonl"), &lines)?;
    let mut ck = Checkpoint::new(&params, &schedule);
    ck.meta = serde_json::to_value(&echo)?;
    ck.save(&dir.join("model.json"))?;
    println!(
        "trained on {} examples; final loss {:.5}",
        examples.len(),
        losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_finetune(ctx: &Ctx, a: &FinetuneArgs) -> Result<()> {
    let ck = load_model(&a.ckpt, "finetune")?;
    let params = ck.denoiser()?;
    let instances = load_instances(&a.instances)?;
    let mut cfg = ctx.cfg.ppo.clone();
    if let Some(j) = a.iterations {
        cfg.iterations = j;
    }
    let dir = ctx.out.join("finetune");
    let echo = ctx.echo("finetune");
    let log_path = dir.join("log.jsonl");
    write_jsonl(&log_path, &[serde_json::json!({ "header": echo })])?;
    let output = MoCmpoOutput {
        log_path: Some(log_path),
        checkpoint_dir: Some(dir.join("checkpoints")),
        meta: serde_json::to_value(&echo)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let res = mo_cmpo(&params, &instances, &ck.schedule, &cfg, &output, &mut rng)?;
    let archive_dir = dir.join("archive");
    for inst in &instances {
        write_front(&archive_dir, inst, &res.archive.front(&inst.id).to_vec())?;
    }
    let mut out = Checkpoint::new(&res.params, &ck.schedule);
    out.critics = res.critics.iter().map(|c| c.snapshot()).collect();
    out.meta = serde_json::to_value(&echo)?;
    out.save(&dir.join("model.json"))?;
    println!("fine-tuned for {} iterations on {} instances", res.log.len(), instances.len());
    Ok(())
}

struct Run {
    algo: String,
    fronts: BTreeMap<String, Vec<FrontRow>>,
    time_mean: f64,
    dir: PathBuf,
}

fn load_run(dir: &Path) -> Result<Run> {
    let report: SolveReport = read_json(&dir.join("report.json"))?;
    let timing: Vec<TimingRow> = read_csv(&dir.join("timing.csv"))?;
    let mut fronts = BTreeMap::new();
    for row in &timing {
        let rows = read_front_csv(&dir.join("fronts").join(format!("{}.csv", row.instance_id)))?;
        fronts.insert(row.instance_id.clone(), rows);
    }
    Ok(Run {
        algo: report.algo,
        time_mean: report.time_mean_s,
        fronts,
        dir: dir.into(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HvTableRow {
    pub algo: String,
    pub instances: usize,
    pub hv_mean: f64,
    pub time_mean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrendRow {
    pub algo: String,
    pub instance_id: String,
    pub mean_intercell_km: f64,
    pub local_rate_latency: f64,
    pub local_rate_energy: f64,
    pub avg_placements_latency: f64,
    pub avg_placements_energy: f64,
    #[serde(rename = "T_latency")]
    pub t_latency: f64,
    #[serde(rename = "E_latency")]
    pub e_latency: f64,
    #[serde(rename = "T_energy")]
    pub t_energy: f64,
    #[serde(rename = "E_energy")]
    pub e_energy: f64,
}

/// Latency- and energy-oriented ends of a stored front.
fn front_ends(run: &Run, inst: &Instance) -> Result<Option<(Assignment, Assignment)>> {
    let rows = &run.fronts[&inst.id];
    let by = |f: fn(&FrontRow) -> (f64, f64)| {
        rows.iter()
            .enumerate()
            .min_by(|a, b| f(a.1).partial_cmp(&f(b.1)).expect("finite objectives"))
            .map(|(k, _)| k)
    };
    let (Some(lat), Some(en)) = (by(|r| (r.t_ms, r.e_j)), by(|r| (r.e_j, r.t_ms))) else {
        return Ok(None);
    };
    let sols: Vec<SolutionFile> = read_json(&run.dir.join("solutions").join(format!("{}.json", inst.id)))?;
    let get = |k: usize| -> Result<Assignment> {
        sols.get(k)
            .ok_or_else(|| Error::Dimension(format!("{}: front row {k} has no solution", inst.id)))?
            .assignment(inst)
    };
    Ok(Some((get(lat)?, get(en)?)))
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    let hv_ref = ctx.hv_ref(&a.hv_ref)?;
    let runs = a.runs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>>>()?;
    let ids: Vec<String> = runs[0].fronts.keys().cloned().collect();
    if ids.is_empty() {
        return Err(Error::EmptyDataset {
            path: runs[0].dir.clone(),
            skipped: 0,
        });
    }
    for r in &runs[1..] {
        if r.fronts.keys().ne(ids.iter()) {
            return Err(Error::Dimension(format!(
                "instance ids of {} differ from {}",
                r.dir.display(),
                runs[0].dir.display()
            )));
        }
    }
    let dir = ctx.out.join("eval");
    let mut per_instance = String::from("algo,instance_id,hv\n");
    let mut table = Vec::new();
    let mut sums = vec![0.0; runs.len()];
    for id in &ids {
        let fronts: Vec<Vec<ObjectivePoint>> = runs
            .iter()
            .map(|r| r.fronts[id].iter().map(FrontRow::point).collect())
            .collect();
        let refs: Vec<&[ObjectivePoint]> = fronts.iter().map(|f| f.as_slice()).collect();
        let hv = hv_ref.resolve(&refs);
        for (i, f) in fronts.iter().enumerate() {
            let v = hypervolume_norm(f, &hv);
            sums[i] += v;
            writeln!(per_instance, "{},{id},{v}", runs[i].algo).expect("string write");
        }
    }
    for (r, s) in runs.iter().zip(&sums) {
        table.push(HvTableRow {
            algo: r.algo.clone(),
            instances: ids.len(),
            hv_mean: s / ids.len() as f64,
            time_mean: r.time_mean,
        });
    }
    write_csv(&dir.join("hv_table.csv"), &table)?;
    write_atomic(&dir.join("hv_per_instance.csv"), per_instance.as_bytes())?;
    if let Some(path) = &a.instances {
        let instances: BTreeMap<String, Instance> = load_instances(path)?
            .into_iter()
            .map(|i| (i.id.clone(), i))
            .collect();
        let mut trends = Vec::new();
        for run in &runs {
            for id in &ids {
                let inst = instances
                    .get(id)
                    .ok_or_else(|| Error::Dimension(format!("instance {id} not found")))?;
                let Some((lat, en)) = front_ends(run, inst)? else {
                    continue;
                };
                let (cl, ce) = (evaluate(inst, &lat)?, evaluate(inst, &en)?);
                trends.push(TrendRow {
                    algo: run.algo.clone(),
                    instance_id: id.clone(),
                    mean_intercell_km: inst.mean_intercell_km(),
                    local_rate_latency: local_rate(inst, &lat).unwrap_or(f64::NAN),
                    local_rate_energy: local_rate(inst, &en).unwrap_or(f64::NAN),
                    avg_placements_latency: avg_placements(inst, &lat),
                    avg_placements_energy: avg_placements(inst, &en),
                    t_latency: cl.total_latency,
                    e_latency: cl.total_energy,
                    t_energy: ce.total_latency,
                    e_energy: ce.total_energy,
                });
            }
        }
        write_csv(&dir.join("trends.csv"), &trends)?;
    }
    write_json(&dir.join("echo.json"), &ctx.echo("eval"))?;
    for row in &table {
        println!("{:>14}  hv {:.4}  time {:.4} s", row.algo, row.hv_mean, row.time_mean);
    }
    Ok(())
}

fn cmd_hv(ctx: &Ctx, a: &HvArgs) -> Result<()> {
    let hv_ref = ctx.hv_ref(&a.hv_ref)?;
    let fronts: Vec<(String, Vec<ObjectivePoint>)> = a
        .fronts
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, read_front_csv(p)?.iter().map(FrontRow::point).collect()))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&[ObjectivePoint]> = fronts.iter().map(|(_, f)| f.as_slice()).collect();
    let hv = hv_ref.resolve(&refs);
    let report: HvReport = fronts
        .iter()
        .map(|(name, f)| (name.clone(), HvEntry::new(hypervolume_norm(f, &hv), &hv)))
        .collect();
    for (name, e) in &report {
        println!("{name}\t{:.6}", e.hv);
    }
    write_json(&ctx.out.join("hv.json"), &report)
}
