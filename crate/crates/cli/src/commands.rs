//! Command-line interface: argument parsing and one function per command.

use std::path::{Path, PathBuf};

use arfault::classify::{load_model, save_model, Task};
use arfault::features::{extract_with_lag, FeatureId};
use arfault::fuzzy::{ga_tune, parse_system, FuzzySystem};
use arfault::mrmr::{default_bins, rank, ColumnId, FeatureMatrix};
use arfault::relay::{
    impedance_trajectory, max_relative_deviation, write_trajectory_csv, FaultScenario, FrequencyMode, LineParams, ZoneQuad,
};
use arfault::waveform::{window_at_index, Phase};
use clap::{Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EndMode, PipelineConfig};
use crate::corpus::{self, CaseFeatures, Source};
use crate::error::{CliError, CliResult};
use crate::experiment::{self, PipelineReport, TrainedPipeline};
use crate::grid::GridSpec;
use crate::manifest::{Manifest, ManifestRow};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "arfault", version, about = "Fault detection, localization and classification for wind-farm lines")]
pub struct Cli {
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Manifest to read; defaults to <out>/manifest.csv.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Working directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub end_mode: Option<EndMode>,
    #[arg(long, global = true)]
    pub window_cycles: Option<f64>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize records for every cell of a scenario grid.
    Generate {
        /// Grid file (TOML, [[block]] tables); the desk-scale grid by default.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Measurement noise applied to every record, dB.
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Run the disturbance detector over the manifest.
    Detect {
        /// Tune the threshold with GWO on the training split first.
        #[arg(long)]
        tune_beta: bool,
    },
    /// Extract classifier features and fuzzy inputs at each trigger.
    Extract,
    /// Rank catalog features with mRMR on the training split.
    Select {
        #[arg(long, default_value = "detection")]
        task: Task,
        #[arg(long, default_value_t = 20)]
        k: usize,
    },
    /// Tune the fuzzy detector with the genetic algorithm.
    TuneFuzzy,
    /// Train the staged classifiers.
    Train,
    /// Evaluate the trained pipeline on the held-out split.
    Evaluate,
    /// Distance-relay trajectories with a fixed and a tracked DFT.
    Relay {
        /// Slip-frequency component of the fault current, Hz.
        #[arg(long, default_value_t = 72.0)]
        slip_hz: f64,
    },
    /// Summarize the evaluation as text and CSV tables.
    Report,
}

/// Resolved configuration and paths shared by the commands.
#[derive(Clone, Debug)]
pub struct Context {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    pub manifest: PathBuf,
}

impl Context {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let mut cfg = match &cli.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(m) = cli.end_mode {
            cfg.features.end_mode = m;
        }
        if let Some(w) = cli.window_cycles {
            cfg.signal.window_cycles = w;
        }
        cfg.validate()?;
        let manifest = cli.manifest.clone().unwrap_or_else(|| cli.out.join("manifest.csv"));
        Ok(Self { cfg, out: cli.out.clone(), manifest })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest(&self) -> CliResult<Manifest> {
        Manifest::load(&self.manifest)
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // Fails only if a pool already exists, e.g. when called twice in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let ctx = Context::from_cli(cli)?;
    create_dir(&ctx.out)?;
    match &cli.command {
        Command::Generate { grid, snr } => {
            let grid = match grid {
                Some(p) => GridSpec::load(p)?,
                None => GridSpec::desk(),
            };
            generate(&ctx, &grid.with_snr(*snr)).map(|_| ())
        }
        Command::Detect { tune_beta } => detect(&ctx, *tune_beta),
        Command::Extract => extract(&ctx),
        Command::Select { task, k } => select(&ctx, *task, *k),
        Command::TuneFuzzy => tune_fuzzy(&ctx),
        Command::Train => train(&ctx),
        Command::Evaluate => evaluate(&ctx),
        Command::Relay { slip_hz } => relay(&ctx, *slip_hz),
        Command::Report => report(&ctx),
    }
}

fn create_dir(p: &Path) -> CliResult<()> {
    std::fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn csv_file(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

/// Writes both line-end records of every grid cell and the manifest.
pub fn generate(ctx: &Context, grid: &GridSpec) -> CliResult<Manifest> {
    let cfg = &ctx.cfg;
    let cells = grid.cells(cfg.seed)?;
    let rec_dir = ctx.path("records");
    create_dir(&rec_dir)?;
    let rows = cells
        .par_iter()
        .map(|cell| {
            let id = format!("c{:05}", cell.index);
            let row = ManifestRow::from_cell(cell, id.clone(), format!("records/{id}_w.csv"), Some(format!("records/{id}_g.csv")));
            let recs = corpus::synthesize_case(&row, cfg)?;
            let save = |rec: &arfault::Record, p: &str| -> CliResult<()> {
                let path = ctx.out.join(p);
                rec.save_csv(&path).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))
            };
            save(&recs.wind, &row.wind_path)?;
            if let (Some(g), Some(p)) = (&recs.grid, &row.grid_path) {
                save(g, p)?;
            }
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let m = Manifest::new(rows, ctx.out.clone())?;
    m.save(&ctx.path("manifest.csv"))?;
    write(&ctx.path("grid.toml"), grid.to_toml()?)?;
    write(&ctx.path("config.toml"), cfg.to_toml()?)?;
    info!("generated {} cases", m.rows.len());
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaFile {
    pub beta: f64,
    pub tuned: bool,
    /// Detection objective at `beta` when tuned.
    pub objective: Option<f64>,
}

fn beta(ctx: &Context) -> CliResult<f64> {
    let p = ctx.path("beta.json");
    if p.is_file() {
        let b: BetaFile = serde_json::from_str(&read(&p)?)?;
        Ok(b.beta)
    } else {
        Ok(ctx.cfg.detector.beta)
    }
}

pub fn detect(ctx: &Context, tune: bool) -> CliResult<()> {
    let m = ctx.manifest()?;
    let cfg = &ctx.cfg;
    let b = if tune {
        let (train, _) = experiment::split_cases(&m.rows, cfg.classify.test_fraction, cfg.seed)?;
        let t = corpus::tune_beta_on(&m, &train, Source::Files(&m.base), cfg)?;
        info!("tuned beta {} (objective {})", t.beta, t.objective);
        BetaFile { beta: t.beta, tuned: true, objective: Some(t.objective) }
    } else {
        BetaFile { beta: cfg.detector.beta, tuned: false, objective: None }
    };
    let triggers = m
        .rows
        .par_iter()
        .map(|row| {
            let recs = corpus::load_case(row, &m.base, cfg)?;
            let dcfg = arfault::detector::DetectorConfig::for_record(&recs.wind, b.beta)?;
            Ok(arfault::detector::first_trigger(&recs.wind, &dcfg)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut w = csv_file(&ctx.path("triggers.csv"))?;
    w.write_record(["case_id", "kind", "onset", "trigger", "delay_samples"])?;
    for (row, t) in m.rows.iter().zip(&triggers) {
        let onset = corpus::annotated_onset(row, cfg);
        let delay = match (onset, t) {
            (Some(o), Some(t)) => (*t as i64 - o as i64).to_string(),
            _ => String::new(),
        };
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([row.case_id.clone(), row.kind.to_string(), opt(onset), opt(*t), delay])?;
    }
    w.flush().map_err(|e| CliError::io(&ctx.path("triggers.csv"), e))?;
    write(&ctx.path("beta.json"), serde_json::to_string_pretty(&b)?)?;
    Ok(())
}

fn fuzzy_names(ctx: &Context) -> Vec<String> {
    ctx.cfg.fuzzy.template.input_names.clone()
}

pub fn extract(ctx: &Context) -> CliResult<()> {
    let m = ctx.manifest()?;
    let cases = corpus::process_manifest(&m, Source::Files(&m.base), beta(ctx)?, &ctx.cfg)?;
    let path = ctx.path("features.csv");
    let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    corpus::write_features(std::io::BufWriter::new(f), &fuzzy_names(ctx), &ctx.cfg.feature_ids()?, &cases)
}

fn load_features(ctx: &Context, m: &Manifest) -> CliResult<Vec<CaseFeatures>> {
    let path = ctx.path("features.csv");
    let f = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let cases = corpus::read_features(std::io::BufReader::new(f), &fuzzy_names(ctx), &ctx.cfg.feature_ids()?)?;
    if cases.len() != m.rows.len() || cases.iter().zip(&m.rows).any(|(c, r)| c.case_id != r.case_id) {
        return Err(CliError::Manifest("features.csv does not match the manifest; rerun extract".into()));
    }
    Ok(cases)
}

/// mRMR over every catalog feature of the wind-end window, per phase.
pub fn select(ctx: &Context, task: Task, k: usize) -> CliResult<()> {
    let m = ctx.manifest()?;
    let cases = load_features(ctx, &m)?;
    let cfg = &ctx.cfg;
    let (train, _) = experiment::split_cases(&m.rows, cfg.classify.test_fraction, cfg.seed)?;
    let idx: Vec<usize> = train.into_iter().filter(|&i| m.rows[i].label(task).is_some()).collect();
    let ids: Vec<FeatureId> = FeatureId::all().collect();
    let rows = idx
        .par_iter()
        .map(|&i| {
            let recs = corpus::load_case(&m.rows[i], &m.base, cfg)?;
            let win = window_at_index(&recs.wind, cases[i].window_start, cfg.signal.window_cycles)?;
            let fv = extract_with_lag(&win, &ids, cfg.features.ar_lag)?;
            Ok(ids.iter().flat_map(|&id| fv.iter().map(move |v| v.get_or_zero(id).0)).collect::<Vec<f64>>())
        })
        .collect::<CliResult<Vec<_>>>()?;
    let columns: Vec<ColumnId> = ids.iter().flat_map(|&id| Phase::ALL.map(|p| ColumnId::new(id, Some(p)))).collect();
    let data = (0..columns.len()).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let target = idx.iter().map(|&i| m.rows[i].label(task).expect("filtered")).collect();
    let matrix = FeatureMatrix::new(columns, data, target)?;
    let ranking = rank(&matrix, k.min(matrix.columns().len()), default_bins(matrix.rows()))?;
    let path = ctx.path(&format!("mrmr_{task}.csv"));
    let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    ranking.write_csv(std::io::BufWriter::new(f))?;
    Ok(())
}

pub fn tune_fuzzy(ctx: &Context) -> CliResult<()> {
    let m = ctx.manifest()?;
    let cases = load_features(ctx, &m)?;
    let (train, _) = experiment::split_cases(&m.rows, ctx.cfg.classify.test_fraction, ctx.cfg.seed)?;
    let data = experiment::fuzzy_training_set(&m.rows, &cases, &train);
    let tuned = ga_tune(&data, &ctx.cfg.fuzzy.template, &experiment::ga_config(&ctx.cfg))?;
    write(&ctx.path("fuzzy.txt"), tuned.system.to_text()?)?;
    let mut trace = String::from("generation,best_fitness\n");
    for (g, f) in tuned.trace.iter().enumerate() {
        trace.push_str(&format!("{g},{f}\n"));
    }
    write(&ctx.path("fuzzy_trace.csv"), trace)
}

fn split_file(ctx: &Context, m: &Manifest, train: &[usize]) -> String {
    let mut s = String::from("case_id,set\n");
    let mut is_train = vec![false; m.rows.len()];
    train.iter().for_each(|&i| is_train[i] = true);
    for (r, t) in m.rows.iter().zip(is_train) {
        s.push_str(&format!("{},{}\n", r.case_id, if t { "train" } else { "test" }));
    }
    let _ = ctx;
    s
}

pub fn train(ctx: &Context) -> CliResult<()> {
    let m = ctx.manifest()?;
    let cases = load_features(ctx, &m)?;
    let cfg = &ctx.cfg;
    let (train, _) = experiment::split_cases(&m.rows, cfg.classify.test_fraction, cfg.seed)?;
    let fz = ctx.path("fuzzy.txt");
    let fuzzy: Option<FuzzySystem<f64>> = if fz.is_file() { Some(parse_system(&read(&fz)?)?) } else { None };
    let p = experiment::train_pipeline(&m.rows, &cases, &train, beta(ctx)?, cfg, fuzzy)?;
    write(&ctx.path("split.csv"), split_file(ctx, &m, &train))?;
    write(&ctx.path("model.json"), save_model(&p)?)
}

fn read_split(ctx: &Context, m: &Manifest) -> CliResult<Vec<usize>> {
    let text = read(&ctx.path("split.csv"))?;
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut test = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if m.rows.get(i).map(|r| r.case_id.as_str()) != Some(&rec[0]) {
            return Err(CliError::Manifest("split.csv does not match the manifest; rerun train".into()));
        }
        if &rec[1] == "test" {
            test.push(i);
        }
    }
    Ok(test)
}

pub fn evaluate(ctx: &Context) -> CliResult<()> {
    let m = ctx.manifest()?;
    let cases = load_features(ctx, &m)?;
    let p: TrainedPipeline = load_model(&read(&ctx.path("model.json"))?)?;
    if p.config_hash != ctx.cfg.hash() {
        return Err(CliError::Config("model.json was trained with a different configuration; rerun train".into()));
    }
    let test = read_split(ctx, &m)?;
    let r = experiment::evaluate_pipeline(&p, &m.rows, &cases, &test)?;
    write(&ctx.path("eval.json"), r.to_json()?)?;
    for t in Task::ALL {
        let path = ctx.path(&format!("confusion_{t}.csv"));
        let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        r.stage(t).write_confusion_csv(f)?;
    }
    write_decisions(&ctx.path("decisions.csv"), &r)
}

fn write_decisions(path: &Path, r: &PipelineReport) -> CliResult<()> {
    let mut w = csv_file(path)?;
    w.write_record(["case_id", "triggered", "fault", "fault_score", "fuzzy_no_rule", "region", "trip", "location", "phase", "fault_type"])?;
    let label = |t: Task, v: Option<usize>| v.map(|i| t.labels()[i].clone()).unwrap_or_default();
    for (id, d) in &r.decisions {
        w.write_record([
            id.clone(),
            d.triggered.to_string(),
            d.fault.to_string(),
            d.fault_score.to_string(),
            d.fuzzy_no_rule.to_string(),
            label(Task::Region, d.region),
            d.trip.to_string(),
            label(Task::Location, d.location),
            label(Task::Phase, d.phase),
            label(Task::FaultType, d.fault_type),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn relay(ctx: &Context, slip_hz: f64) -> CliResult<()> {
    if !(42.0..=78.0).contains(&slip_hz) {
        return Err(CliError::Usage(format!("--slip-hz must lie in [42, 78], got {slip_hz}")));
    }
    let line = LineParams::default();
    let zone = ZoneQuad::for_line(&line, 0.8)?;
    let mut sc = FaultScenario::slip_72hz();
    sc.components[0].0 = slip_hz;
    let (v, i) = sc.build(&line)?;
    let fixed = impedance_trajectory(&v, &i, &line, &zone, FrequencyMode::Fixed(sc.f0), 4)?;
    let tracked = impedance_trajectory(&v, &i, &line, &zone, FrequencyMode::Tracked, 4)?;
    for (name, pts) in [("relay_fixed.csv", &fixed), ("relay_tracked.csv", &tracked)] {
        let path = ctx.path(name);
        let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_trajectory_csv(std::io::BufWriter::new(f), pts)?;
    }
    let dev = max_relative_deviation(&fixed, &tracked, sc.loop_id);
    let in_zone = |pts: &[arfault::relay::TrajectoryPoint]| pts.iter().filter(|p| p.loop_id == sc.loop_id && p.in_zone).count();
    let summary = format!(
        "loop {}\nslip component {} Hz\nmax |Z| deviation fixed vs tracked: {}\nin-zone points fixed: {}\nin-zone points tracked: {}\n",
        sc.loop_id,
        slip_hz,
        dev.map(|d| format!("{:.4}", d)).unwrap_or_else(|| "n/a".into()),
        in_zone(&fixed),
        in_zone(&tracked),
    );
    write(&ctx.path("relay.txt"), summary)
}

pub fn report(ctx: &Context) -> CliResult<()> {
    let r: PipelineReport = serde_json::from_str(&read(&ctx.path("eval.json"))?)?;
    write(&ctx.path("report.txt"), report::report_text(&r))?;
    write(&ctx.path("accuracy.csv"), report::accuracy_csv(&r))
}
