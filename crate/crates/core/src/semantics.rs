//! Measurement engines.
//!
//! [`Semantics::Collapse`] applies the projection postulate to one shared
//! global state. [`Semantics::Convivial`] never touches the global state:
//! each observer holds a pointer into a lazily grown branch tree and only
//! ever moves to daughters of the branch it is on. Asking another observer
//! what they saw is itself a measurement, of that observer's record.
//!
//! Records are not stored as extra subsystems. An observer's record of a
//! subsystem is a perfect copy of it in the preferred basis, so conditioning
//! on "the record of `s` reads `x`" is the same as conditioning on `s = x`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{MeasurementEvent, Semantics};
use crate::statevec::ProductState;

/// What a branch-tree edge resolves.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResolvedKey {
    /// Direct measurement of a subsystem.
    Subsystem(String),
    /// Reading `observer`'s record of `subsystem`.
    Record { observer: String, subsystem: String },
}

impl ResolvedKey {
    /// The physical subsystem whose value the key pins down.
    pub fn subsystem(&self) -> &str {
        match self {
            ResolvedKey::Subsystem(s) => s,
            ResolvedKey::Record { subsystem, .. } => subsystem,
        }
    }
}

impl fmt::Display for ResolvedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolvedKey::Subsystem(s) => f.write_str(s),
            ResolvedKey::Record { observer, subsystem } => write!(f, "record[{observer}]:{subsystem}"),
        }
    }
}

impl Serialize for ResolvedKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub outcome_assignment: BTreeMap<ResolvedKey, String>,
    /// Probability of this node given its parent.
    pub conditional_weight: f64,
    /// Materialized daughters, per resolved key, in alphabet order.
    pub children: BTreeMap<ResolvedKey, Vec<usize>>,
}

impl BranchNode {
    fn constraints(&self) -> Vec<(String, String)> {
        self.outcome_assignment
            .iter()
            .map(|(k, v)| (k.subsystem().to_string(), v.clone()))
            .collect()
    }

    /// Subsystem values implied by the assignment (direct or via records).
    pub fn implied_values(&self) -> BTreeMap<String, String> {
        self.outcome_assignment
            .iter()
            .map(|(k, v)| (k.subsystem().to_string(), v.clone()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub subsystem: String,
    /// The askee when the value was heard from another observer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heard_from: Option<String>,
    pub outcome: String,
}

impl Observation {
    fn key(&self) -> ResolvedKey {
        match &self.heard_from {
            None => ResolvedKey::Subsystem(self.subsystem.clone()),
            Some(o) => ResolvedKey::Record { observer: o.clone(), subsystem: self.subsystem.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverState {
    pub id: String,
    pub hangup: usize,
    /// Hang-up history from the root; always a root-to-descendant path.
    pub path: Vec<usize>,
    pub perceived_log: Vec<Observation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    Same,
    Different,
    Incomparable,
}

/// One node of the JSON branch trace.
#[derive(Clone, Debug, Serialize)]
pub struct BranchTrace {
    pub id: usize,
    pub parent: Option<usize>,
    pub outcome_assignment: BTreeMap<String, String>,
    pub weight: f64,
}

/// Inverse-CDF draw over `weights` (alphabet order): the first index whose
/// cumulative weight strictly exceeds `u`.
pub fn sample_index(weights: &[(u32, f64)], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, (_, w)) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

#[derive(Clone, Debug)]
pub struct EngineState {
    mode: Semantics,
    global: ProductState,
    tree: Vec<BranchNode>,
    observers: BTreeMap<String, ObserverState>,
    rng: ChaCha8Rng,
}

impl EngineState {
    pub fn new(mode: Semantics, global: ProductState, rng: ChaCha8Rng) -> Result<Self> {
        global.ensure_normalized()?;
        let root = BranchNode {
            id: 0,
            parent: None,
            outcome_assignment: BTreeMap::new(),
            conditional_weight: 1.0,
            children: BTreeMap::new(),
        };
        Ok(Self { mode, global, tree: vec![root], observers: BTreeMap::new(), rng })
    }

    /// Engine whose random stream is substream `stream` of `seed`.
    pub fn seeded(mode: Semantics, global: ProductState, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::new(mode, global, rng)
    }

    pub fn mode(&self) -> Semantics {
        self.mode
    }

    pub fn global_state(&self) -> &ProductState {
        &self.global
    }

    pub fn tree(&self) -> &[BranchNode] {
        &self.tree
    }

    pub fn observer(&self, id: &str) -> Result<&ObserverState> {
        self.observers.get(id).ok_or_else(|| Error::UnknownObserver(id.to_string()))
    }

    pub fn add_observer(&mut self, id: &str) {
        self.observers.entry(id.to_string()).or_insert_with(|| ObserverState {
            id: id.to_string(),
            hangup: 0,
            path: vec![0],
            perceived_log: Vec::new(),
        });
    }

    pub fn observer_record(&self, id: &str) -> Result<&[Observation]> {
        Ok(&self.observer(id)?.perceived_log)
    }

    pub fn hangup_node(&self, id: &str) -> Result<&BranchNode> {
        Ok(&self.tree[self.observer(id)?.hangup])
    }

    fn ensure_unresolved(&self, observer: &str, key: &ResolvedKey) -> Result<()> {
        if let Some(o) = self.observers.get(observer) {
            if o.perceived_log.iter().any(|obs| &obs.key() == key) {
                return Err(Error::AlreadyResolved { observer: observer.to_string(), key: key.to_string() });
            }
        }
        Ok(())
    }

    pub fn measure(&mut self, ev: &MeasurementEvent) -> Result<String> {
        self.measure_subsystem(&ev.observer, &ev.subsystem)
    }

    /// Measures `subsystem` in its declared (preferred) basis on behalf of `observer`.
    pub fn measure_subsystem(&mut self, observer: &str, subsystem: &str) -> Result<String> {
        let key = ResolvedKey::Subsystem(subsystem.to_string());
        self.ensure_unresolved(observer, &key)?;
        self.add_observer(observer);
        let outcome = match self.mode {
            Semantics::Collapse => {
                let weights = self.global.conditional_weights(subsystem, &[])?;
                let label = self.draw_label(subsystem, &weights)?;
                self.global.project(subsystem, &label)?;
                label
            }
            Semantics::Convivial => self.descend(observer, key)?,
        };
        self.log(observer, subsystem, None, &outcome);
        Ok(outcome)
    }

    /// `asker` asks `askee` what they saw on `about`; a measurement of the askee's record.
    pub fn communicate(&mut self, asker: &str, askee: &str, about: &str) -> Result<String> {
        let recorded = self
            .observer(askee)?
            .perceived_log
            .iter()
            .find(|o| o.subsystem == about && o.heard_from.is_none())
            .map(|o| o.outcome.clone())
            .ok_or_else(|| Error::NoRecord { observer: askee.to_string(), subsystem: about.to_string() })?;
        let key = ResolvedKey::Record { observer: askee.to_string(), subsystem: about.to_string() };
        self.ensure_unresolved(asker, &key)?;
        self.add_observer(asker);
        let heard = match self.mode {
            Semantics::Collapse => recorded,
            Semantics::Convivial => self.descend(asker, key)?,
        };
        self.log(asker, about, Some(askee), &heard);
        Ok(heard)
    }

    fn log(&mut self, observer: &str, subsystem: &str, heard_from: Option<&str>, outcome: &str) {
        let o = self.observers.get_mut(observer).expect("observer registered");
        o.perceived_log.push(Observation {
            subsystem: subsystem.to_string(),
            heard_from: heard_from.map(str::to_string),
            outcome: outcome.to_string(),
        });
    }

    fn draw_label(&mut self, subsystem: &str, weights: &[(u32, f64)]) -> Result<String> {
        let u: f64 = self.rng.random();
        let (idx, _) = weights[sample_index(weights, u)];
        Ok(self.global.subsystem(subsystem)?.label(idx).to_string())
    }

    /// Children of `node` for `key`, materialized on first use.
    fn expand(&mut self, node: usize, key: &ResolvedKey) -> Result<Vec<usize>> {
        if let Some(c) = self.tree[node].children.get(key) {
            return Ok(c.clone());
        }
        let subsystem = key.subsystem();
        let weights = self.global.conditional_weights(subsystem, &self.tree[node].constraints())?;
        let spec = self.global.subsystem(subsystem)?.clone();
        let mut ids = Vec::with_capacity(weights.len());
        for (idx, w) in weights {
            let id = self.tree.len();
            let mut outcome_assignment = self.tree[node].outcome_assignment.clone();
            outcome_assignment.insert(key.clone(), spec.label(idx).to_string());
            self.tree.push(BranchNode {
                id,
                parent: Some(node),
                outcome_assignment,
                conditional_weight: w,
                children: BTreeMap::new(),
            });
            ids.push(id);
        }
        self.tree[node].children.insert(key.clone(), ids.clone());
        Ok(ids)
    }

    fn descend(&mut self, observer: &str, key: ResolvedKey) -> Result<String> {
        let node = self.observer(observer)?.hangup;
        let children = self.expand(node, &key)?;
        let weights: Vec<(u32, f64)> = children
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u32, self.tree[c].conditional_weight))
            .collect();
        let u: f64 = self.rng.random();
        let chosen = children[sample_index(&weights, u)];
        let o = self.observers.get_mut(observer).expect("observer registered");
        o.hangup = chosen;
        o.path.push(chosen);
        Ok(self.tree[chosen].outcome_assignment[&key].clone())
    }

    /// Simulator-level comparison of two observers' branches on the
    /// subsystems both have resolved. Not something either observer can
    /// learn from inside the model.
    pub fn branch_divergence(&self, a: &str, b: &str) -> Result<Divergence> {
        if self.mode != Semantics::Convivial {
            return Err(Error::NotApplicable("branch divergence needs convivial semantics".into()));
        }
        let va = self.hangup_node(a)?.implied_values();
        let vb = self.hangup_node(b)?.implied_values();
        let mut common = false;
        for (s, x) in &va {
            if let Some(y) = vb.get(s) {
                common = true;
                if x != y {
                    return Ok(Divergence::Different);
                }
            }
        }
        Ok(if common { Divergence::Same } else { Divergence::Incomparable })
    }

    pub fn branch_trace(&self) -> Vec<BranchTrace> {
        self.tree
            .iter()
            .map(|n| BranchTrace {
                id: n.id,
                parent: n.parent,
                outcome_assignment: n.outcome_assignment.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
                weight: n.conditional_weight,
            })
            .collect()
    }
}

/// Exact distribution of the outcome tuple (one label per event, in event
/// order) that the engine would produce.
///
/// Under collapse every event conditions on all earlier outcomes; under the
/// convivial semantics each event conditions only on earlier outcomes seen by
/// the same observer.
pub fn exact_event_distribution(
    global: &ProductState,
    events: &[MeasurementEvent],
    mode: Semantics,
) -> Result<BTreeMap<Vec<String>, f64>> {
    global.ensure_normalized()?;
    let mut out = BTreeMap::new();
    let mut labels = Vec::with_capacity(events.len());
    match mode {
        Semantics::Collapse => collapse_rec(global, events, 1.0, &mut labels, &mut out)?,
        Semantics::Convivial => {
            let mut seen = BTreeMap::new();
            convivial_rec(global, events, 1.0, &mut seen, &mut labels, &mut out)?
        }
    }
    Ok(out)
}

fn collapse_rec(
    state: &ProductState,
    events: &[MeasurementEvent],
    p: f64,
    labels: &mut Vec<String>,
    out: &mut BTreeMap<Vec<String>, f64>,
) -> Result<()> {
    let Some((ev, rest)) = events.split_first() else {
        *out.entry(labels.clone()).or_default() += p;
        return Ok(());
    };
    let spec = state.subsystem(&ev.subsystem)?.clone();
    for (idx, w) in state.conditional_weights(&ev.subsystem, &[])? {
        let label = spec.label(idx).to_string();
        let mut next = state.clone();
        next.project(&ev.subsystem, &label)?;
        labels.push(label);
        collapse_rec(&next, rest, p * w, labels, out)?;
        labels.pop();
    }
    Ok(())
}

fn convivial_rec(
    global: &ProductState,
    events: &[MeasurementEvent],
    p: f64,
    seen: &mut BTreeMap<String, Vec<(String, String)>>,
    labels: &mut Vec<String>,
    out: &mut BTreeMap<Vec<String>, f64>,
) -> Result<()> {
    let Some((ev, rest)) = events.split_first() else {
        *out.entry(labels.clone()).or_default() += p;
        return Ok(());
    };
    let spec = global.subsystem(&ev.subsystem)?.clone();
    let constraints = seen.get(&ev.observer).cloned().unwrap_or_default();
    for (idx, w) in global.conditional_weights(&ev.subsystem, &constraints)? {
        let label = spec.label(idx).to_string();
        seen.entry(ev.observer.clone()).or_default().push((ev.subsystem.clone(), label.clone()));
        labels.push(label);
        convivial_rec(global, rest, p * w, seen, labels, out)?;
        labels.pop();
        seen.get_mut(&ev.observer).expect("just pushed").pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{build, ExperimentConfig, ALICE, BOB};
    use crate::optics;
    use crate::statevec::{CompositeSpace, StateVector, SubsystemSpec};

    fn singlet() -> ProductState {
        ProductState::from(optics::singlet_state("A", "B").unwrap())
    }

    fn engine(mode: Semantics, seed: u64) -> EngineState {
        EngineState::seeded(mode, singlet(), seed, 0).unwrap()
    }

    #[test]
    fn inverse_cdf_uses_strict_upper_bound() {
        let w = [(0, 0.25), (1, 0.25), (2, 0.5)];
        assert_eq!(sample_index(&w, 0.0), 0);
        assert_eq!(sample_index(&w, 0.25), 1);
        assert_eq!(sample_index(&w, 0.4999), 1);
        assert_eq!(sample_index(&w, 0.5), 2);
        assert_eq!(sample_index(&w, 0.999_999), 2);
    }

    #[test]
    fn alice_first_outcome_is_fair_coin() {
        let n = 4000;
        let mut plus = 0;
        for seed in 0..n {
            let mut e = engine(Semantics::Collapse, seed);
            if e.measure_subsystem(ALICE, "A").unwrap() == "+" {
                plus += 1;
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((plus as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn convivial_same_observer_sees_anticorrelation() {
        for seed in 0..200 {
            let mut e = engine(Semantics::Convivial, seed);
            let a = e.measure_subsystem(ALICE, "A").unwrap();
            let b = e.measure_subsystem(ALICE, "B").unwrap();
            assert_ne!(a, b);
        }
    }

    #[test]
    fn eigenstate_measurement_is_deterministic_and_leaves_state() {
        let space = CompositeSpace::new(vec![SubsystemSpec::new("s", ["+", "-"]).unwrap()]).unwrap();
        let eigen = ProductState::from(StateVector::basis(space, &["-"]).unwrap());
        for mode in [Semantics::Collapse, Semantics::Convivial] {
            let mut e = EngineState::seeded(mode, eigen.clone(), 3, 0).unwrap();
            assert_eq!(e.measure_subsystem(ALICE, "s").unwrap(), "-");
            assert_eq!(e.global_state(), &eigen);
        }
    }

    #[test]
    fn remeasurement_is_rejected() {
        for mode in [Semantics::Collapse, Semantics::Convivial] {
            let mut e = engine(mode, 1);
            e.measure_subsystem(ALICE, "A").unwrap();
            assert!(matches!(e.measure_subsystem(ALICE, "A"), Err(Error::AlreadyResolved { .. })));
            // another observer may still measure it
            e.measure_subsystem(BOB, "A").unwrap();
        }
    }

    #[test]
    fn asking_after_own_measurement_hears_anticorrelated_value() {
        for seed in 0..300 {
            let mut e = engine(Semantics::Convivial, seed);
            let a = e.measure_subsystem(ALICE, "A").unwrap();
            e.measure_subsystem(BOB, "B").unwrap();
            let heard = e.communicate(ALICE, BOB, "B").unwrap();
            assert_ne!(heard, a);
            assert_eq!(e.hangup_node(ALICE).unwrap().implied_values()["B"], heard);
        }
    }

    #[test]
    fn asking_first_then_measuring_anticorrelates() {
        let n = 4000u64;
        let mut plus = 0;
        for seed in 0..n {
            let mut e = engine(Semantics::Convivial, seed);
            e.measure_subsystem(BOB, "B").unwrap();
            let heard = e.communicate(ALICE, BOB, "B").unwrap();
            let own = e.measure_subsystem(ALICE, "A").unwrap();
            assert_ne!(heard, own);
            if heard == "+" {
                plus += 1;
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((plus as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn askee_record_of_eigenstate_is_deterministic() {
        let space = CompositeSpace::new(vec![SubsystemSpec::new("s", ["+", "-"]).unwrap()]).unwrap();
        let eigen = ProductState::from(StateVector::basis(space, &["+"]).unwrap());
        let mut e = EngineState::seeded(Semantics::Convivial, eigen, 9, 0).unwrap();
        e.measure_subsystem(BOB, "s").unwrap();
        assert_eq!(e.communicate(ALICE, BOB, "s").unwrap(), "+");
    }

    #[test]
    fn communicate_errors() {
        let mut e = engine(Semantics::Convivial, 0);
        assert!(matches!(e.communicate(ALICE, BOB, "B"), Err(Error::UnknownObserver(_))));
        e.add_observer(BOB);
        assert!(matches!(e.communicate(ALICE, BOB, "B"), Err(Error::NoRecord { .. })));
        e.measure_subsystem(BOB, "B").unwrap();
        e.communicate(ALICE, BOB, "B").unwrap();
        assert!(matches!(e.communicate(ALICE, BOB, "B"), Err(Error::AlreadyResolved { .. })));
    }

    #[test]
    fn convivial_global_state_is_untouched() {
        let mut e = engine(Semantics::Convivial, 5);
        let before = e.global_state().clone();
        e.measure_subsystem(ALICE, "A").unwrap();
        e.measure_subsystem(BOB, "B").unwrap();
        e.communicate(ALICE, BOB, "B").unwrap();
        e.communicate(BOB, ALICE, "A").unwrap();
        assert_eq!(e.global_state(), &before);
    }

    #[test]
    fn collapse_projects_global_state() {
        let mut e = engine(Semantics::Collapse, 5);
        let a = e.measure_subsystem(ALICE, "A").unwrap();
        assert_eq!(e.global_state().factors()[0].len(), 1);
        assert!(e.global_state().ensure_normalized().is_ok());
        assert_ne!(e.measure_subsystem(BOB, "B").unwrap(), a);
    }

    #[test]
    fn hangup_path_is_monotone() {
        let mut e = engine(Semantics::Convivial, 11);
        e.measure_subsystem(ALICE, "A").unwrap();
        e.measure_subsystem(BOB, "B").unwrap();
        e.communicate(ALICE, BOB, "B").unwrap();
        for o in [ALICE, BOB] {
            let path = &e.observer(o).unwrap().path;
            for w in path.windows(2) {
                assert_eq!(e.tree()[w[1]].parent, Some(w[0]));
            }
        }
        for node in e.tree() {
            for kids in node.children.values() {
                let total: f64 = kids.iter().map(|&c| e.tree()[c].conditional_weight).sum();
                assert!((total - 1.0).abs() < 1e-12);
                for &c in kids {
                    let child = &e.tree()[c];
                    assert!(node.outcome_assignment.iter().all(|(k, v)| child.outcome_assignment.get(k) == Some(v)));
                }
            }
        }
    }

    #[test]
    fn divergence_cases() {
        let mut e = engine(Semantics::Convivial, 2);
        e.measure_subsystem(ALICE, "A").unwrap();
        assert_eq!(e.branch_divergence(ALICE, ALICE).unwrap(), Divergence::Same);
        e.add_observer(BOB);
        assert_eq!(e.branch_divergence(ALICE, BOB).unwrap(), Divergence::Incomparable);
        assert!(matches!(e.branch_divergence(ALICE, "carol"), Err(Error::UnknownObserver(_))));
        let c = engine(Semantics::Collapse, 2);
        assert!(matches!(c.branch_divergence(ALICE, BOB), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn independent_measurements_of_same_particle_differ_half_the_time() {
        let n = 4000u64;
        let mut different = 0;
        for seed in 0..n {
            let mut e = engine(Semantics::Convivial, seed);
            e.measure_subsystem(ALICE, "A").unwrap();
            e.measure_subsystem(BOB, "A").unwrap();
            let before = e.branch_divergence(ALICE, BOB).unwrap();
            e.communicate(ALICE, BOB, "A").unwrap();
            e.communicate(BOB, ALICE, "A").unwrap();
            // communication only re-reads what each branch already fixes
            assert_eq!(e.branch_divergence(ALICE, BOB).unwrap(), before);
            if before == Divergence::Different {
                different += 1;
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((different as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn observer_record_lifecycle() {
        let mut e = engine(Semantics::Convivial, 4);
        assert!(matches!(e.observer_record(ALICE), Err(Error::UnknownObserver(_))));
        e.add_observer(ALICE);
        assert!(e.observer_record(ALICE).unwrap().is_empty());
        e.measure_subsystem(ALICE, "A").unwrap();
        let first = e.observer_record(ALICE).unwrap().to_vec();
        assert_eq!(first.len(), 1);
        assert_eq!(e.observer_record(ALICE).unwrap(), first.as_slice());
    }

    #[test]
    fn eraser_log_interleaves_screen_and_detector_per_pair() {
        let s = build(&ExperimentConfig::eraser(true).with_pairs(3)).unwrap();
        let mut e = EngineState::seeded(Semantics::Convivial, s.final_product().unwrap(), 1, 0).unwrap();
        for ev in &s.events {
            e.measure(ev).unwrap();
        }
        let log = e.observer_record(ALICE).unwrap();
        let subs: Vec<&str> = log.iter().map(|o| o.subsystem.as_str()).collect();
        assert_eq!(subs, ["d0.1", "detector.1", "d0.2", "detector.2", "d0.3", "detector.3"]);
    }

    #[test]
    fn same_seed_same_logs() {
        let run = |seed| {
            let mut e = engine(Semantics::Convivial, seed);
            e.measure_subsystem(ALICE, "A").unwrap();
            e.measure_subsystem(BOB, "B").unwrap();
            (e.observer_record(ALICE).unwrap().to_vec(), e.observer_record(BOB).unwrap().to_vec())
        };
        assert_eq!(run(42), run(42));
    }

    #[test]
    fn single_observer_exact_distributions_agree() {
        for cfg in [ExperimentConfig::epr(), ExperimentConfig::eraser(true), ExperimentConfig::eraser(false).with_pairs(2)] {
            let s = build(&cfg).unwrap().with_single_observer(ALICE);
            let g = s.final_product().unwrap();
            let c = exact_event_distribution(&g, &s.events, Semantics::Collapse).unwrap();
            let v = exact_event_distribution(&g, &s.events, Semantics::Convivial).unwrap();
            assert_eq!(c.keys().collect::<Vec<_>>(), v.keys().collect::<Vec<_>>());
            for (k, p) in &c {
                assert!((p - v[k]).abs() < 1e-12);
            }
            assert!((c.values().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_observer_convivial_joint_is_product_of_marginals() {
        let s = build(&ExperimentConfig::epr()).unwrap();
        let g = s.final_product().unwrap();
        let v = exact_event_distribution(&g, &s.events, Semantics::Convivial).unwrap();
        for p in v.values() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let c = exact_event_distribution(&g, &s.events, Semantics::Collapse).unwrap();
        assert!((c[&vec!["+".to_string(), "-".to_string()]] - 0.5).abs() < 1e-12);
    }
}
