//! `dcsim` command line: run experiments and checks, write a manifest plus
//! JSON or CSV data files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::experiments::{build, ExperimentConfig, ExperimentKind, ScheduledExperiment, Semantics, Setup, ALICE};
use crate::optics::{self, Geometry, GeometrySpec};
use crate::semantics::EngineState;
use crate::stats::{self, CheckResult, Histogram, JointTable, RecordSet};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DCSIM_OUT";
pub const DEFAULT_OUT: &str = "dcsim-out";
pub const DEFAULT_SHOTS: usize = 10_000;
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exact-computation tolerance.
const EXACT_TOL: f64 = 1e-12;
/// Monte Carlo bound in binomial standard deviations.
const SIGMA_BOUND: f64 = 4.0;

#[derive(Parser, Debug)]
#[command(name = "dcsim", version, about = "Delayed-choice and EPR experiments under collapse and convivial semantics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate an experiment and write its tables.
    Run {
        experiment: ExperimentName,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a named consistency check.
    Check {
        check: CheckName,
        #[arg(long)]
        experiment: Option<ExperimentName>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Write the final state or one shot's branch tree.
    Dump {
        what: DumpTarget,
        #[arg(long)]
        experiment: Option<ExperimentName>,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ExperimentName {
    DoubleSlit,
    Mzi,
    Epr,
    Eraser,
}

impl From<ExperimentName> for ExperimentKind {
    fn from(e: ExperimentName) -> Self {
        match e {
            ExperimentName::DoubleSlit => ExperimentKind::DoubleSlit,
            ExperimentName::Mzi => ExperimentKind::MachZehnder,
            ExperimentName::Epr => ExperimentKind::Epr,
            ExperimentName::Eraser => ExperimentKind::QuantumEraser,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CheckName {
    OrderIndependence,
    DelayedInvariance,
    NoSignaling,
    NoConflict,
    SemanticsAgreement,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DumpTarget {
    State,
    Branches,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SemanticsArg {
    Collapse,
    Convivial,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Collapse => Semantics::Collapse,
            SemanticsArg::Convivial => Semantics::Convivial,
        }
    }
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    shots: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    semantics: Option<SemanticsArg>,
    #[arg(long, value_name = "B")]
    bins: Option<usize>,
    #[arg(long, conflicts_with = "eraser_out")]
    eraser_in: bool,
    #[arg(long)]
    eraser_out: bool,
    #[arg(long, conflicts_with = "closed")]
    open: bool,
    #[arg(long)]
    closed: bool,
    /// Time tag of the delayed choice.
    #[arg(long, value_name = "T")]
    insert_at: Option<u64>,
    #[arg(long, conflicts_with = "detectors")]
    screen: bool,
    #[arg(long)]
    detectors: bool,
    #[arg(long, value_name = "N")]
    pairs: Option<usize>,
    /// Output directory (default: $DCSIM_OUT, else ./dcsim-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Config file document. Keys mirror the long flags.
#[derive(Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    experiment: Option<ExperimentName>,
    shots: Option<usize>,
    seed: Option<u64>,
    semantics: Option<Semantics>,
    bins: Option<usize>,
    eraser_in: Option<bool>,
    closed: Option<bool>,
    insert_at: Option<u64>,
    screen: Option<bool>,
    pairs: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    arm_phase: Option<f64>,
    geometry: Option<GeometrySpec>,
}

#[derive(Debug)]
struct Settings {
    experiment: Option<ExperimentKind>,
    shots: usize,
    seed: u64,
    semantics: Semantics,
    bins: Option<usize>,
    eraser_in: Option<bool>,
    closed: Option<bool>,
    insert_at: Option<u64>,
    screen: Option<bool>,
    pairs: Option<usize>,
    arm_phase: Option<f64>,
    geometry: GeometrySpec,
    out: PathBuf,
    format: Format,
}

fn flag_pair(yes: bool, no: bool) -> Option<bool> {
    match (yes, no) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

impl Settings {
    fn resolve(experiment: Option<ExperimentName>, opts: &Opts) -> Result<Self, Error> {
        let file = match &opts.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::BadConfig(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let out = opts
            .out
            .clone()
            .or(file.out)
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(Settings {
            experiment: experiment.or(file.experiment).map(Into::into),
            shots: opts.shots.or(file.shots).unwrap_or(DEFAULT_SHOTS),
            seed: opts.seed.or(file.seed).unwrap_or(0),
            semantics: opts.semantics.map(Into::into).or(file.semantics).unwrap_or_default(),
            bins: opts.bins.or(file.bins),
            eraser_in: flag_pair(opts.eraser_in, opts.eraser_out).or(file.eraser_in),
            closed: flag_pair(opts.closed, opts.open).or(file.closed),
            insert_at: opts.insert_at.or(file.insert_at),
            screen: flag_pair(opts.screen, opts.detectors).or(file.screen),
            pairs: opts.pairs.or(file.pairs),
            arm_phase: file.arm_phase,
            geometry: file.geometry.unwrap_or_default(),
            out,
            format: opts.format.or(file.format).unwrap_or_default(),
        })
    }

    fn experiment_config(&self, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
        let reject = |flag: &str| Err(Error::BadConfig(format!("`{flag}` does not apply to {kind}")));
        let mut setup = Setup::default_for(kind);
        match &mut setup {
            Setup::DoubleSlit { screen, .. } => {
                if let Some(s) = self.screen {
                    *screen = s;
                }
            }
            Setup::MachZehnder { closed, arm_phase, .. } => {
                if let Some(c) = self.closed {
                    *closed = c;
                }
                if let Some(p) = self.arm_phase {
                    *arm_phase = p;
                }
            }
            Setup::QuantumEraser { eraser_in, .. } => {
                if let Some(e) = self.eraser_in {
                    *eraser_in = e;
                }
            }
            Setup::Epr => {}
        }
        if self.screen.is_some() && kind != ExperimentKind::DoubleSlit {
            return reject("--screen/--detectors");
        }
        if (self.closed.is_some() || self.arm_phase.is_some()) && kind != ExperimentKind::MachZehnder {
            return reject("--open/--closed");
        }
        if self.eraser_in.is_some() && kind != ExperimentKind::QuantumEraser {
            return reject("--eraser-in/--eraser-out");
        }
        let mut geometry = self.geometry.clone();
        if let Some(b) = self.bins {
            geometry.bins = b;
        }
        let mut cfg = ExperimentConfig::new(setup)
            .with_geometry(geometry)
            .with_shots(self.shots)
            .with_seed(self.seed)
            .with_semantics(self.semantics)
            .with_pairs(self.pairs.unwrap_or(1));
        if let Some(t) = self.insert_at {
            cfg = cfg.with_choice_time(t)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize, Debug, Clone, PartialEq)]
struct OutputEntry {
    path: String,
    kind: String,
}

#[derive(Serialize, Debug)]
struct RunManifest {
    command: String,
    config: Value,
    seed: u64,
    semantics: Semantics,
    outputs: Vec<OutputEntry>,
    results: Value,
    checks: Vec<CheckResult>,
    wall_time_s: f64,
}

struct Output {
    dir: PathBuf,
    format: Format,
    entries: Vec<OutputEntry>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::BadConfig(format!("cannot write {}: {e}", path.display()))
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

impl Output {
    fn new(dir: PathBuf, format: Format) -> Result<Self, Error> {
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self { dir, format, entries: Vec::new() })
    }

    fn record(&mut self, file: String, kind: &str) -> PathBuf {
        self.entries.push(OutputEntry { path: file.clone(), kind: kind.into() });
        self.dir.join(file)
    }

    fn write_json<T: Serialize>(&mut self, stem: &str, kind: &str, value: &T) -> Result<(), Error> {
        let path = self.record(format!("{stem}.json"), kind);
        let text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }

    fn write_csv(&mut self, stem: &str, kind: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), Error> {
        let path = self.record(format!("{stem}.csv"), kind);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for r in rows {
            w.write_record(&r).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))
    }

    /// JSON or CSV depending on `--format`.
    fn table<T: Serialize>(&mut self, stem: &str, kind: &str, value: &T, header: &[&str], rows: impl FnOnce() -> Vec<Vec<String>>) -> Result<(), Error> {
        match self.format {
            Format::Json => self.write_json(stem, kind, value),
            Format::Csv => self.write_csv(stem, kind, header, rows()),
        }
    }

    fn histogram(&mut self, stem: &str, h: &Histogram, g: &Geometry) -> Result<(), Error> {
        let rows = || {
            h.values
                .iter()
                .zip(g.sin_theta())
                .enumerate()
                .map(|(i, (v, s))| vec![i.to_string(), fmt_f64(*s), fmt_f64(*v)])
                .collect()
        };
        self.table(stem, "histogram", h, &["bin_index", "sin_theta", "count_or_prob"], rows)
    }

    fn joint(&mut self, stem: &str, t: &JointTable) -> Result<(), Error> {
        let rows = || {
            let mut rows = Vec::new();
            for (i, a) in t.labels_a.iter().enumerate() {
                for (j, b) in t.labels_b.iter().enumerate() {
                    rows.push(vec![a.clone(), b.clone(), fmt_f64(t.entries[i][j])]);
                }
            }
            rows
        };
        let header = [t.axis_a.as_str(), t.axis_b.as_str(), "count_or_prob"];
        self.table(stem, "joint-table", t, &header, rows)
    }
}

#[derive(Serialize, Debug, Clone)]
struct MarginalRow {
    channel: String,
    label: String,
    exact: f64,
    count: usize,
    frequency: f64,
}

#[derive(Serialize, Debug, Clone)]
struct FitRow {
    detector: String,
    source: &'static str,
    #[serde(flatten)]
    fit: stats::FringeFit,
}

struct Report {
    config: Value,
    seed: u64,
    semantics: Semantics,
    results: BTreeMap<String, Value>,
    checks: Vec<CheckResult>,
}

impl Report {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            config: serde_json::to_value(cfg).expect("config serializes"),
            seed: cfg.seed,
            semantics: cfg.semantics,
            results: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, c: CheckResult) {
        debug_assert!(self.checks.iter().all(|o| o.name != c.name), "duplicate check {}", c.name);
        self.checks.push(c);
    }
}

/// Exact marginals of the first pair's events next to empirical counts over all pairs.
fn marginals(sched: &ScheduledExperiment, r: &RecordSet) -> Result<Vec<MarginalRow>, Error> {
    let state = sched.final_product()?;
    let mut rows = Vec::new();
    for ev in sched.events.iter().filter(|e| e.pair == 0) {
        let exact = state.born_distribution(&[ev.subsystem.as_str()])?;
        let counts = r.channel_counts(&ev.channel)?;
        let n: usize = counts.iter().map(|c| c.1).sum();
        for (label, count) in counts {
            rows.push(MarginalRow {
                channel: ev.channel.clone(),
                exact: exact.prob(&[label.as_str()])?,
                frequency: count as f64 / n as f64,
                label,
                count,
            });
        }
    }
    Ok(rows)
}

fn marginal_checks(report: &mut Report, rows: &[MarginalRow]) {
    for m in rows {
        let n = rows.iter().filter(|o| o.channel == m.channel).map(|o| o.count).sum();
        report.check(CheckResult::at_most(
            format!("marginal-4sigma:{}={}", m.channel, m.label),
            stats::binomial_z(m.count, n, m.exact),
            SIGMA_BOUND,
        ));
    }
}

fn write_marginals(out: &mut Output, rows: &[MarginalRow]) -> Result<(), Error> {
    let csv_rows = || {
        rows.iter()
            .map(|m| vec![m.channel.clone(), m.label.clone(), fmt_f64(m.exact), m.count.to_string(), fmt_f64(m.frequency)])
            .collect()
    };
    out.table("marginals", "marginals", &rows, &["channel", "label", "exact", "count", "frequency"], csv_rows)
}

fn probabilities(rows: &[MarginalRow]) -> Value {
    let mut by_channel: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for m in rows {
        by_channel.entry(&m.channel).or_default().insert(&m.label, m.exact);
    }
    json!(by_channel)
}

fn fit_value(f: Result<stats::FringeFit, Error>) -> Value {
    match f {
        Ok(f) => json!(f),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn cmd_run(cfg: &ExperimentConfig, out: &mut Output, report: &mut Report) -> Result<(), Error> {
    let sched = build(cfg)?;
    let records = stats::run_trials(cfg)?;
    let rows = marginals(&sched, &records)?;
    write_marginals(out, &rows)?;
    marginal_checks(report, &rows);
    report.results.insert("probabilities".into(), probabilities(&rows));
    let g = &sched.geometry;

    match &cfg.setup {
        Setup::DoubleSlit { screen: true, .. } => {
            let exact = stats::exact_histogram(&sched, optics::SCREEN)?;
            let counts = Histogram {
                detector: None,
                values: records.channel_counts(optics::SCREEN)?.into_iter().map(|c| c.1 as f64).collect(),
                kind: stats::TableKind::Empirical,
            };
            out.histogram("screen_exact", &exact, g)?;
            out.histogram("screen_counts", &counts, g)?;
            report.results.insert(
                "fringe_fit".into(),
                json!({ "exact": fit_value(stats::fringe_fit(&exact.values, g)), "empirical": fit_value(stats::fringe_fit(&counts.values, g)) }),
            );
        }
        Setup::Epr => {
            let (a, b) = (&sched.events[0], &sched.events[1]);
            out.joint("joint_exact", &stats::exact_joint(&sched, &a.subsystem, &b.subsystem)?)?;
            out.joint("joint_counts", &records.empirical_joint(&a.channel, &b.channel)?)?;
        }
        Setup::QuantumEraser { .. } => {
            let (d0, det) = (&sched.events[0].subsystem, &sched.events[1].subsystem);
            let table = stats::exact_joint(&sched, d0, det)?;
            out.joint("joint_exact", &table)?;
            let mut fits = Vec::new();
            let mut visibility = BTreeMap::new();
            for d in optics::ERASER_DETECTORS {
                let coinc = stats::coincidence_histogram(&records, d)?;
                out.histogram(&format!("coincidence_{d}"), &coinc, g)?;
                let exact_fit = match stats::exact_conditional_histogram(&table, d) {
                    Ok(h) => {
                        out.histogram(&format!("conditional_{d}"), &h, g)?;
                        stats::fringe_fit(&h.values, g)
                    }
                    Err(e) => Err(e),
                };
                let emp_fit = stats::fringe_fit(&coinc.values, g);
                visibility.insert(d.to_string(), json!({ "exact": fit_value(exact_fit.clone()), "empirical": fit_value(emp_fit.clone()) }));
                for (source, f) in [("exact", exact_fit), ("empirical", emp_fit)] {
                    if let Ok(fit) = f {
                        fits.push(FitRow { detector: d.to_string(), source, fit });
                    }
                }
            }
            let fit_rows = || {
                fits.iter()
                    .map(|f| {
                        vec![
                            f.detector.clone(),
                            f.source.to_string(),
                            fmt_f64(f.fit.visibility),
                            fmt_f64(f.fit.phase),
                            fmt_f64(f.fit.baseline),
                            fmt_f64(f.fit.residual),
                        ]
                    })
                    .collect()
            };
            out.table("fringe_fits", "fringe-fits", &fits, &["detector", "source", "visibility", "phase", "baseline", "residual"], fit_rows)?;
            report.results.insert("visibility".into(), json!(visibility));
            report.check(CheckResult::at_most("no-signaling", stats::check_marginal_flatness(&table), EXACT_TOL));
        }
        _ => {}
    }
    Ok(())
}

fn check_order_independence(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), Error> {
    let sched = build(cfg)?;
    let mut worst: Option<f64> = None;
    for i in 0..sched.events.len() {
        for j in i + 1..sched.events.len() {
            if sched.events[i].subsystem != sched.events[j].subsystem {
                let v = stats::check_order_independence(&sched, &sched.events[i], &sched.events[j])?;
                worst = Some(worst.map_or(v, |w: f64| w.max(v)));
            }
        }
    }
    let v = worst.ok_or_else(|| Error::NotApplicable(format!("{} has fewer than two measured subsystems", cfg.kind())))?;
    report.check(CheckResult::at_most("order-independence", v, EXACT_TOL));
    Ok(())
}

fn check_delayed_invariance(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), Error> {
    let times = cfg.legal_choice_times()?;
    let v = stats::check_delayed_invariance(cfg, &times)?;
    report.results.insert("choice_times".into(), json!(times));
    report.check(CheckResult::at_most("delayed-invariance", v, EXACT_TOL));
    Ok(())
}

fn check_no_signaling(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), Error> {
    let sched = build(cfg)?;
    if sched.kind != ExperimentKind::QuantumEraser {
        return Err(Error::NotApplicable("no-signaling is defined for the eraser".into()));
    }
    let table = stats::exact_joint(&sched, &sched.events[0].subsystem, &sched.events[1].subsystem)?;
    report.check(CheckResult::at_most("no-signaling", stats::check_marginal_flatness(&table), EXACT_TOL));
    Ok(())
}

fn check_no_conflict(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), Error> {
    if cfg.kind() != ExperimentKind::Epr {
        return Err(Error::NotApplicable("no-conflict is defined for EPR".into()));
    }
    let r = stats::no_conflict_runs(cfg.shots, cfg.seed, cfg.pair_count)?;
    report.results.insert("no_conflict".into(), json!(r));
    report.check(CheckResult::at_most("no-conflict", r.conflicts as f64, 0.0));
    report.check(CheckResult::at_most(
        "divergence-different-4sigma",
        stats::binomial_z(r.different, r.runs, 0.5),
        SIGMA_BOUND,
    ));
    Ok(())
}

fn check_semantics_agreement(cfg: &ExperimentConfig, report: &mut Report) -> Result<(), Error> {
    let a = stats::semantics_agreement(cfg, cfg.shots)?;
    let k = a.experiment.clone();
    report.check(CheckResult::at_most(format!("{k}:exact"), a.exact_deviation, EXACT_TOL));
    report.check(CheckResult::at_most(format!("{k}:observer-marginals"), a.observer_marginal_deviation, EXACT_TOL));
    report.check(CheckResult::at_most(format!("{k}:tv-collapse"), a.tv_collapse, a.tv_tolerance));
    report.check(CheckResult::at_most(format!("{k}:tv-convivial"), a.tv_convivial, a.tv_tolerance));
    report.results.insert(k, json!(a));
    Ok(())
}

fn dump_state(cfg: &ExperimentConfig, out: &mut Output, report: &mut Report) -> Result<(), Error> {
    let state = build(cfg)?.final_state()?;
    report.results.insert("terms".into(), json!(state.len()));
    report.results.insert("subsystems".into(), json!(state.space().names().collect::<Vec<_>>()));
    let dump = state.dump();
    let rows = || {
        dump.iter()
            .map(|t| vec![t.label.join(" "), fmt_f64(t.re), fmt_f64(t.im)])
            .collect()
    };
    out.table("state", "state", &dump, &["label", "re", "im"], rows)
}

fn dump_branches(cfg: &ExperimentConfig, out: &mut Output, report: &mut Report) -> Result<(), Error> {
    let sched = build(cfg)?;
    let mut engine = EngineState::seeded(cfg.semantics, sched.final_product()?, cfg.seed, 0)?;
    for ev in &sched.events {
        engine.measure(ev)?;
    }
    let mut observers = BTreeMap::new();
    for o in sched.observers() {
        let st = engine.observer(&o)?;
        observers.insert(o.clone(), json!({ "hangup": st.hangup, "path": st.path, "log": st.perceived_log }));
    }
    let trace = engine.branch_trace();
    report.results.insert("nodes".into(), json!(trace.len()));
    report.results.insert("observers".into(), json!(observers));
    let rows = || {
        trace
            .iter()
            .map(|n| {
                let assignment: Vec<String> = n.outcome_assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
                vec![
                    n.id.to_string(),
                    n.parent.map(|p| p.to_string()).unwrap_or_default(),
                    fmt_f64(n.weight),
                    assignment.join(";"),
                ]
            })
            .collect()
    };
    let doc = json!({ "nodes": trace, "observers": observers, "hangup_observer": ALICE });
    out.table("branches", "branch-tree", &doc, &["id", "parent", "weight", "assignment"], rows)
}

fn default_experiment(check: CheckName) -> Option<ExperimentKind> {
    match check {
        CheckName::OrderIndependence | CheckName::NoConflict => Some(ExperimentKind::Epr),
        CheckName::DelayedInvariance => Some(ExperimentKind::MachZehnder),
        CheckName::NoSignaling => Some(ExperimentKind::QuantumEraser),
        CheckName::SemanticsAgreement => None,
    }
}

type Job = Box<dyn FnOnce(&Settings, &mut Output) -> Result<Report, Error>>;

fn execute(cli: Cli, command_line: String) -> Result<i32, Error> {
    let start = Instant::now();
    let (settings, run): (Settings, Job) = match cli.command {
        Command::Run { experiment, opts } => {
            let s = Settings::resolve(Some(experiment), &opts)?;
            (
                s,
                Box::new(|s, out| {
                    let cfg = s.experiment_config(s.experiment.expect("positional"))?;
                    let mut report = Report::new(&cfg);
                    cmd_run(&cfg, out, &mut report)?;
                    Ok(report)
                }),
            )
        }
        Command::Check { check, experiment, opts } => {
            let s = Settings::resolve(experiment, &opts)?;
            (
                s,
                Box::new(move |s, _out| {
                    let kinds = match s.experiment.or(default_experiment(check)) {
                        Some(k) => vec![k],
                        None => ExperimentKind::ALL.to_vec(),
                    };
                    let mut report: Option<Report> = None;
                    let mut configs = Vec::new();
                    for kind in kinds {
                        let cfg = s.experiment_config(kind)?;
                        let r = report.get_or_insert_with(|| Report::new(&cfg));
                        configs.push(serde_json::to_value(&cfg).expect("config serializes"));
                        match check {
                            CheckName::OrderIndependence => check_order_independence(&cfg, r)?,
                            CheckName::DelayedInvariance => check_delayed_invariance(&cfg, r)?,
                            CheckName::NoSignaling => check_no_signaling(&cfg, r)?,
                            CheckName::NoConflict => check_no_conflict(&cfg, r)?,
                            CheckName::SemanticsAgreement => check_semantics_agreement(&cfg, r)?,
                        }
                    }
                    let mut r = report.expect("at least one experiment");
                    if configs.len() > 1 {
                        r.config = Value::Array(configs);
                    }
                    Ok(r)
                }),
            )
        }
        Command::Dump { what, experiment, opts } => {
            let s = Settings::resolve(experiment, &opts)?;
            (
                s,
                Box::new(move |s, out| {
                    let kind = s.experiment.unwrap_or(ExperimentKind::QuantumEraser);
                    let cfg = s.experiment_config(kind)?;
                    let mut report = Report::new(&cfg);
                    match what {
                        DumpTarget::State => dump_state(&cfg, out, &mut report)?,
                        DumpTarget::Branches => dump_branches(&cfg, out, &mut report)?,
                    }
                    Ok(report)
                }),
            )
        }
    };

    let mut out = Output::new(settings.out.clone(), settings.format)?;
    let report = run(&settings, &mut out)?;
    let pass = report.checks.iter().all(|c| c.pass);
    for c in report.checks.iter().filter(|c| !c.pass || report.checks.len() <= 8) {
        println!("{} {}: {} (tolerance {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    println!("{passed}/{} checks passed, {} data files", report.checks.len(), out.entries.len());
    let manifest = RunManifest {
        command: command_line,
        config: report.config,
        seed: report.seed,
        semantics: report.semantics,
        outputs: out.entries.clone(),
        results: json!(report.results),
        checks: report.checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = settings.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    println!("wrote {}", path.display());
    Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

/// Parses `args` (without the program name), runs the command and returns
/// the exit code: 0 when every check passes, 1 on a failed check, 2 on a
/// usage or configuration error.
pub fn run_command<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let command_line = args.join(" ");
    let cli = match Cli::try_parse_from(std::iter::once("dcsim".to_string()).chain(args)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, command_line) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dcsim: {e}");
            EXIT_USAGE
        }
    }
}
