//! Exact tables, Monte Carlo runs, coincidence filtering, fringe fitting and
//! the packaged consistency checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{build, ExperimentConfig, MeasurementEvent, ScheduledExperiment, Semantics, ALICE, BOB};
use crate::optics::{self, Geometry};
use crate::semantics::{exact_event_distribution, Divergence, EngineState, Observation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    Exact,
    Empirical,
}

/// Dense two-axis table. Rows follow `labels_a`, columns `labels_b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointTable {
    pub axis_a: String,
    pub labels_a: Vec<String>,
    pub axis_b: String,
    pub labels_b: Vec<String>,
    pub entries: Vec<Vec<f64>>,
    pub kind: TableKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
}

impl JointTable {
    fn index(labels: &[String], label: &str, axis: &str) -> Result<usize> {
        labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel { subsystem: axis.to_string(), label: label.to_string() })
    }

    pub fn get(&self, a: &str, b: &str) -> Result<f64> {
        let i = Self::index(&self.labels_a, a, &self.axis_a)?;
        let j = Self::index(&self.labels_b, b, &self.axis_b)?;
        Ok(self.entries[i][j])
    }

    pub fn column(&self, b: &str) -> Result<Vec<f64>> {
        let j = Self::index(&self.labels_b, b, &self.axis_b)?;
        Ok(self.entries.iter().map(|row| row[j]).collect())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.labels_b.len()).map(|j| self.entries.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }
}

/// Born marginal of the final state on two subsystems.
pub fn exact_joint(sched: &ScheduledExperiment, axis_a: &str, axis_b: &str) -> Result<JointTable> {
    let state = sched.final_product()?;
    let labels_a = state.subsystem(axis_a)?.alphabet().to_vec();
    let labels_b = state.subsystem(axis_b)?.alphabet().to_vec();
    let table = state.born_distribution(&[axis_a, axis_b])?;
    let mut entries = vec![vec![0.0; labels_b.len()]; labels_a.len()];
    for (k, p) in table.raw_entries() {
        entries[k[0] as usize][k[1] as usize] = *p;
    }
    Ok(JointTable {
        axis_a: axis_a.to_string(),
        labels_a,
        axis_b: axis_b.to_string(),
        labels_b,
        entries,
        kind: TableKind::Exact,
        shots: None,
    })
}

/// Outcomes of one pair within one shot, keyed by event channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairRecord {
    pub shot: usize,
    pub pair: usize,
    pub outcomes: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordSet {
    pub kind: String,
    pub seed: u64,
    pub semantics: Semantics,
    pub shots: usize,
    pub pair_count: usize,
    /// Alphabet per event channel.
    pub alphabets: BTreeMap<String, Vec<String>>,
    pub records: Vec<PairRecord>,
    /// Per shot: outcome labels in event order.
    #[serde(skip)]
    pub outcomes: Vec<Vec<String>>,
    /// Per shot: each observer's perceived log.
    #[serde(skip)]
    pub logs: Vec<BTreeMap<String, Vec<Observation>>>,
}

struct ShotResult {
    outcomes: Vec<String>,
    logs: BTreeMap<String, Vec<Observation>>,
}

fn run_shot(sched: &ScheduledExperiment, global: &crate::statevec::ProductState, mode: Semantics, seed: u64, shot: u64) -> Result<ShotResult> {
    let mut engine = EngineState::seeded(mode, global.clone(), seed, shot)?;
    let mut outcomes = Vec::with_capacity(sched.events.len());
    for ev in &sched.events {
        outcomes.push(engine.measure(ev)?);
    }
    let mut logs = BTreeMap::new();
    for o in sched.observers() {
        logs.insert(o.clone(), engine.observer_record(&o)?.to_vec());
    }
    Ok(ShotResult { outcomes, logs })
}

/// Runs `config.shots` independent shots; shot `i` draws from random
/// substream `i` of `config.seed`, so the result does not depend on
/// scheduling across worker threads.
pub fn run_trials(config: &ExperimentConfig) -> Result<RecordSet> {
    let sched = build(config)?;
    run_schedule(&sched, config.semantics, config.shots, config.seed)
}

pub fn run_schedule(sched: &ScheduledExperiment, mode: Semantics, shots: usize, seed: u64) -> Result<RecordSet> {
    if shots == 0 {
        return Err(Error::BadConfig("shots must be at least 1".into()));
    }
    let global = sched.final_product()?;
    let results: Vec<ShotResult> = (0..shots as u64)
        .into_par_iter()
        .map(|i| run_shot(sched, &global, mode, seed, i))
        .collect::<Result<_>>()?;

    let mut alphabets = BTreeMap::new();
    for ev in &sched.events {
        alphabets.entry(ev.channel.clone()).or_insert_with(|| ev.basis.clone());
    }
    let mut records = Vec::with_capacity(shots * sched.pairs);
    let mut outcomes = Vec::with_capacity(shots);
    let mut logs = Vec::with_capacity(shots);
    for (shot, r) in results.into_iter().enumerate() {
        let mut per_pair: Vec<BTreeMap<String, String>> = vec![BTreeMap::new(); sched.pairs];
        for (ev, label) in sched.events.iter().zip(&r.outcomes) {
            per_pair[ev.pair].insert(ev.channel.clone(), label.clone());
        }
        records.extend(per_pair.into_iter().enumerate().map(|(pair, outcomes)| PairRecord { shot, pair, outcomes }));
        outcomes.push(r.outcomes);
        logs.push(r.logs);
    }
    Ok(RecordSet {
        kind: sched.kind.to_string(),
        seed,
        semantics: mode,
        shots,
        pair_count: sched.pairs,
        alphabets,
        records,
        outcomes,
        logs,
    })
}

impl RecordSet {
    /// Counts of each label of `channel` over all pairs.
    pub fn channel_counts(&self, channel: &str) -> Result<Vec<(String, usize)>> {
        let alphabet = self
            .alphabets
            .get(channel)
            .ok_or_else(|| Error::UnknownSubsystem(channel.to_string()))?;
        let mut counts = vec![0usize; alphabet.len()];
        for r in &self.records {
            if let Some(l) = r.outcomes.get(channel) {
                let i = alphabet.iter().position(|a| a == l).expect("label from alphabet");
                counts[i] += 1;
            }
        }
        Ok(alphabet.iter().cloned().zip(counts).collect())
    }

    /// Empirical distribution of whole-shot outcome tuples.
    pub fn outcome_counts(&self) -> BTreeMap<Vec<String>, usize> {
        let mut out = BTreeMap::new();
        for o in &self.outcomes {
            *out.entry(o.clone()).or_default() += 1;
        }
        out
    }

    /// Empirical (channel_a × channel_b) table over all pairs.
    pub fn empirical_joint(&self, channel_a: &str, channel_b: &str) -> Result<JointTable> {
        let la = self.alphabets.get(channel_a).ok_or_else(|| Error::UnknownSubsystem(channel_a.into()))?.clone();
        let lb = self.alphabets.get(channel_b).ok_or_else(|| Error::UnknownSubsystem(channel_b.into()))?.clone();
        let mut entries = vec![vec![0.0; lb.len()]; la.len()];
        for r in &self.records {
            if let (Some(a), Some(b)) = (r.outcomes.get(channel_a), r.outcomes.get(channel_b)) {
                let i = la.iter().position(|x| x == a).expect("label from alphabet");
                let j = lb.iter().position(|x| x == b).expect("label from alphabet");
                entries[i][j] += 1.0;
            }
        }
        Ok(JointTable {
            axis_a: channel_a.into(),
            labels_a: la,
            axis_b: channel_b.into(),
            labels_b: lb,
            entries,
            kind: TableKind::Empirical,
            shots: Some(self.records.len()),
        })
    }
}

/// Total-variation distance between empirical counts and a probability map.
pub fn total_variation(counts: &BTreeMap<Vec<String>, usize>, exact: &BTreeMap<Vec<String>, f64>) -> f64 {
    let n: usize = counts.values().sum();
    let n = n.max(1) as f64;
    let mut tv = 0.0;
    for (k, p) in exact {
        tv += (counts.get(k).copied().unwrap_or(0) as f64 / n - p).abs();
    }
    for (k, c) in counts {
        if !exact.contains_key(k) {
            tv += *c as f64 / n;
        }
    }
    tv / 2.0
}

/// Total-variation distance between two empirical count maps.
pub fn total_variation_counts(a: &BTreeMap<Vec<String>, usize>, b: &BTreeMap<Vec<String>, usize>) -> f64 {
    let na = a.values().sum::<usize>().max(1) as f64;
    let nb = b.values().sum::<usize>().max(1) as f64;
    let mut keys: Vec<&Vec<String>> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0) as f64 / na - b.get(k).copied().unwrap_or(0) as f64 / nb).abs())
        .sum::<f64>()
        / 2.0
}

/// `5·√(K/N)`: the empirical-vs-exact TV budget for `k` outcomes and `n` shots.
pub fn tv_tolerance(k: usize, n: usize) -> f64 {
    5.0 * (k as f64 / n as f64).sqrt()
}

/// Deviation of `count` from `n·p` in binomial standard deviations.
pub fn binomial_z(count: usize, n: usize, p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    if sd < 1e-6 {
        return if (count as f64 - mean).abs() < 0.5 { 0.0 } else { f64::INFINITY };
    }
    (count as f64 - mean).abs() / sd
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<String>,
    pub values: Vec<f64>,
    pub kind: TableKind,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total();
        if t == 0.0 {
            return self.values.clone();
        }
        self.values.iter().map(|v| v / t).collect()
    }
}

/// Dense exact Born marginal of one subsystem, in alphabet order (zeros kept).
pub fn exact_histogram(sched: &ScheduledExperiment, subsystem: &str) -> Result<Histogram> {
    let state = sched.final_product()?;
    let labels = state.subsystem(subsystem)?.alphabet().to_vec();
    let table = state.born_distribution(&[subsystem])?;
    let values = labels.iter().map(|l| table.prob(&[l.as_str()])).collect::<Result<_>>()?;
    Ok(Histogram { detector: None, values, kind: TableKind::Exact })
}

/// D0 bin counts restricted to pairs whose idler landed on `detector`.
pub fn coincidence_histogram(r: &RecordSet, detector: &str) -> Result<Histogram> {
    let (Some(bins), Some(dets)) = (r.alphabets.get(optics::D0), r.alphabets.get(optics::DETECTOR)) else {
        return Err(Error::WrongSpace("record set has no D0/detector channels".into()));
    };
    if !dets.iter().any(|d| d == detector) {
        return Err(Error::UnknownLabel { subsystem: optics::DETECTOR.into(), label: detector.into() });
    }
    let mut values = vec![0.0; bins.len()];
    for rec in &r.records {
        if rec.outcomes.get(optics::DETECTOR).map(String::as_str) == Some(detector) {
            if let Some(b) = rec.outcomes.get(optics::D0) {
                let i = bins.iter().position(|x| x == b).expect("label from alphabet");
                values[i] += 1.0;
            }
        }
    }
    Ok(Histogram { detector: Some(detector.into()), values, kind: TableKind::Empirical })
}

/// Exact D0 distribution conditioned on `detector` (column of a bin × detector table).
pub fn exact_conditional_histogram(table: &JointTable, detector: &str) -> Result<Histogram> {
    let col = table.column(detector)?;
    let total: f64 = col.iter().sum();
    if total == 0.0 {
        return Err(Error::ImpossibleOutcome { subsystem: table.axis_b.clone(), outcome: detector.into() });
    }
    Ok(Histogram {
        detector: Some(detector.into()),
        values: col.into_iter().map(|v| v / total).collect(),
        kind: TableKind::Exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringeFit {
    pub visibility: f64,
    /// Radians in (−π, π].
    pub phase: f64,
    pub baseline: f64,
    /// RMS deviation of the data from the fitted model.
    pub residual: f64,
}

impl FringeFit {
    pub fn model(&self, x: f64) -> f64 {
        self.baseline * (1.0 + self.visibility * (x + self.phase).cos())
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Signed phase difference wrapped into (−π, π].
pub fn phase_difference(a: f64, b: f64) -> f64 {
    wrap_phase(a - b)
}

/// Least-squares fit of `baseline·(1 + V·cos(kd·sinθ + φ))` through linear
/// regression on `(1, cos, sin)`.
pub fn fringe_fit(values: &[f64], g: &Geometry) -> Result<FringeFit> {
    if values.len() != g.bins() {
        return Err(Error::UnderdeterminedFit(format!(
            "histogram has {} bins, geometry has {}",
            values.len(),
            g.bins()
        )));
    }
    let x = g.bin_phases();
    let nonempty: Vec<usize> = (0..values.len()).filter(|&i| values[i] != 0.0).collect();
    if nonempty.len() < 3 {
        return Err(Error::UnderdeterminedFit(format!("{} nonempty bins, need 3", nonempty.len())));
    }
    let span = x[*nonempty.last().expect("nonempty")] - x[nonempty[0]];
    if span < 2.0 * PI * (1.0 - 1e-12) {
        return Err(Error::UnderdeterminedFit(format!("bins span {span:.3} rad, less than one fringe")));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (xi, yi) in x.iter().zip(values) {
        let row = [1.0, xi.cos(), xi.sin()];
        for i in 0..3 {
            aty[i] += row[i] * yi;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [c0, c1, c2] = solve3(ata, aty).ok_or_else(|| Error::UnderdeterminedFit("singular design matrix".into()))?;
    if c0 <= 0.0 {
        return Err(Error::UnderdeterminedFit("non-positive baseline".into()));
    }
    let amplitude = c1.hypot(c2);
    // y = c0 + c1 cos x + c2 sin x = c0 (1 + V cos(x + φ)), V cos φ = c1/c0, V sin φ = −c2/c0
    let (visibility, phase) = if amplitude <= 1e-12 * c0 {
        (0.0, 0.0)
    } else {
        ((amplitude / c0).min(1.0), wrap_phase((-c2).atan2(c1)))
    };
    let fit = FringeFit { visibility, phase, baseline: c0, residual: 0.0 };
    let sse: f64 = x
        .iter()
        .zip(values)
        .map(|(xi, yi)| {
            let m = c0 + c1 * xi.cos() + c2 * xi.sin();
            (m - yi).powi(2)
        })
        .sum();
    Ok(FringeFit { residual: (sse / values.len() as f64).sqrt(), ..fit })
}

/// Max entry-wise difference between the exact joint obtained by measuring
/// `ev_a` then `ev_b` and the reverse order, under sequential projection.
pub fn check_order_independence(sched: &ScheduledExperiment, ev_a: &MeasurementEvent, ev_b: &MeasurementEvent) -> Result<f64> {
    if ev_a.subsystem == ev_b.subsystem {
        return Err(Error::NonCommuting(ev_a.subsystem.clone()));
    }
    let global = sched.final_product()?;
    let ab = exact_event_distribution(&global, &[ev_a.clone(), ev_b.clone()], Semantics::Collapse)?;
    let ba = exact_event_distribution(&global, &[ev_b.clone(), ev_a.clone()], Semantics::Collapse)?;
    let ba: BTreeMap<Vec<String>, f64> = ba.into_iter().map(|(k, p)| (vec![k[1].clone(), k[0].clone()], p)).collect();
    Ok(max_map_diff(&ab, &ba))
}

fn max_map_diff(a: &BTreeMap<Vec<String>, f64>, b: &BTreeMap<Vec<String>, f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, p) in a {
        worst = worst.max((p - b.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, q) in b {
        if !a.contains_key(k) {
            worst = worst.max(q.abs());
        }
    }
    worst
}

/// Max deviation of the detector-summed bin marginal from uniform `1/B`.
pub fn check_marginal_flatness(j: &JointTable) -> f64 {
    let rows = j.row_sums();
    let total: f64 = rows.iter().sum();
    let uniform = 1.0 / rows.len() as f64;
    rows.iter()
        .map(|r| (r / if total > 0.0 { total } else { 1.0 } - uniform).abs())
        .fold(0.0, f64::max)
}

/// Builds `config` at each choice tag and returns the largest pairwise
/// deviation between the exact final distributions over the event subsystems.
pub fn check_delayed_invariance(config: &ExperimentConfig, times: &[u64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::BadConfig("no choice times given".into()));
    }
    let mut dists = Vec::with_capacity(times.len());
    for &t in times {
        let sched = build(&config.clone().with_choice_time(t)?)?;
        dists.push(sched.final_product()?.born_distribution(&sched.event_subsystems())?);
    }
    let mut worst: f64 = 0.0;
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            worst = worst.max(dists[i].max_abs_diff(&dists[j])?);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoConflictReport {
    pub runs: usize,
    pub conflicts: usize,
    pub different: usize,
    pub same: usize,
    pub incomparable: usize,
}

/// EPR runs under the convivial semantics: Alice measures A, Bob measures B,
/// then each asks the other. A conflict is a heard value that has zero
/// probability given the asker's own outcome.
pub fn no_conflict_runs(runs: usize, seed: u64, pairs: usize) -> Result<NoConflictReport> {
    let sched = build(&ExperimentConfig::epr().with_pairs(pairs))?;
    let global = sched.final_product()?;
    let mut exact_by_pair = Vec::with_capacity(pairs);
    for k in 0..pairs {
        let a = &sched.events[2 * k];
        let b = &sched.events[2 * k + 1];
        exact_by_pair.push((a.subsystem.clone(), b.subsystem.clone(), exact_joint(&sched, &a.subsystem, &b.subsystem)?));
    }
    let per_run: Vec<(usize, Divergence)> = (0..runs as u64)
        .into_par_iter()
        .map(|i| -> Result<(usize, Divergence)> {
            let mut e = EngineState::seeded(Semantics::Convivial, global.clone(), seed, i)?;
            let mut conflicts = 0;
            for ev in &sched.events {
                e.measure(ev)?;
            }
            for (a, b, table) in &exact_by_pair {
                let own_a = lookup(e.observer_record(ALICE)?, a);
                let own_b = lookup(e.observer_record(BOB)?, b);
                let heard_b = e.communicate(ALICE, BOB, b)?;
                let heard_a = e.communicate(BOB, ALICE, a)?;
                if table.get(&own_a, &heard_b)? == 0.0 {
                    conflicts += 1;
                }
                if table.get(&heard_a, &own_b)? == 0.0 {
                    conflicts += 1;
                }
            }
            Ok((conflicts, e.branch_divergence(ALICE, BOB)?))
        })
        .collect::<Result<_>>()?;
    let mut report = NoConflictReport { runs, conflicts: 0, different: 0, same: 0, incomparable: 0 };
    for (c, d) in per_run {
        report.conflicts += c;
        match d {
            Divergence::Same => report.same += 1,
            Divergence::Different => report.different += 1,
            Divergence::Incomparable => report.incomparable += 1,
        }
    }
    Ok(report)
}

fn lookup(log: &[Observation], subsystem: &str) -> String {
    log.iter()
        .find(|o| o.subsystem == subsystem && o.heard_from.is_none())
        .map(|o| o.outcome.clone())
        .expect("event was measured")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemanticsAgreement {
    pub experiment: String,
    /// Max deviation between collapse and single-observer convivial exact distributions.
    pub exact_deviation: f64,
    /// Max deviation between per-observer marginals under both semantics,
    /// on the schedule's own observers.
    pub observer_marginal_deviation: f64,
    pub support: usize,
    pub shots: usize,
    pub tv_collapse: f64,
    pub tv_convivial: f64,
    pub tv_between: f64,
    pub tv_tolerance: f64,
}

fn observer_marginals(dist: &BTreeMap<Vec<String>, f64>, events: &[MeasurementEvent]) -> BTreeMap<(String, Vec<String>), f64> {
    let mut out = BTreeMap::new();
    for (k, p) in dist {
        let mut per: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (ev, l) in events.iter().zip(k) {
            per.entry(&ev.observer).or_default().push(l.clone());
        }
        for (o, labels) in per {
            *out.entry((o.to_string(), labels)).or_default() += p;
        }
    }
    out
}

/// Compares the two semantics exactly and by Monte Carlo (`shots` each).
pub fn semantics_agreement(config: &ExperimentConfig, shots: usize) -> Result<SemanticsAgreement> {
    let sched = build(config)?;
    let global = sched.final_product()?;
    let single = sched.with_single_observer(ALICE);
    let exact_c = exact_event_distribution(&global, &single.events, Semantics::Collapse)?;
    let exact_v = exact_event_distribution(&global, &single.events, Semantics::Convivial)?;
    let exact_deviation = max_map_diff(&exact_c, &exact_v);

    let own_c = exact_event_distribution(&global, &sched.events, Semantics::Collapse)?;
    let own_v = exact_event_distribution(&global, &sched.events, Semantics::Convivial)?;
    let mc = observer_marginals(&own_c, &sched.events);
    let mv = observer_marginals(&own_v, &sched.events);
    let mut observer_marginal_deviation: f64 = 0.0;
    for (k, p) in &mc {
        observer_marginal_deviation = observer_marginal_deviation.max((p - mv.get(k).copied().unwrap_or(0.0)).abs());
    }

    let rc = run_schedule(&single, Semantics::Collapse, shots, config.seed)?.outcome_counts();
    let rv = run_schedule(&single, Semantics::Convivial, shots, config.seed ^ 0x9E37_79B9_7F4A_7C15)?.outcome_counts();
    let support = exact_c.values().filter(|p| **p > 0.0).count();
    Ok(SemanticsAgreement {
        experiment: sched.kind.to_string(),
        exact_deviation,
        observer_marginal_deviation,
        support,
        shots,
        tv_collapse: total_variation(&rc, &exact_c),
        tv_convivial: total_variation(&rv, &exact_c),
        tv_between: total_variation_counts(&rc, &rv),
        tv_tolerance: tv_tolerance(support, shots),
    })
}
