//! Sparse complex state vectors over declared composite label spaces.
//!
//! A [`StateVector`] stores only nonzero amplitudes, keyed by the tuple of
//! alphabet indices of every subsystem in its [`CompositeSpace`]. Label tuples
//! follow the declaration order of the space; nothing is reordered.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Index tuple into the alphabets of a [`CompositeSpace`].
pub type BasisIndex = Vec<u32>;

/// Allowed deviation of the squared norm from 1 for consuming operations.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Amplitudes at or below this magnitude are dropped after every linear map.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsystemSpec {
    name: String,
    alphabet: Vec<String>,
}

impl SubsystemSpec {
    pub fn new<S: Into<String>>(name: impl Into<String>, alphabet: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let alphabet: Vec<String> = alphabet.into_iter().map(Into::into).collect();
        if alphabet.is_empty() {
            return Err(Error::InvalidSpace(format!("subsystem `{name}` has an empty alphabet")));
        }
        for (i, label) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(label) {
                return Err(Error::InvalidSpace(format!(
                    "label `{label}` repeated in subsystem `{name}`"
                )));
            }
        }
        Ok(Self { name, alphabet })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.alphabet.len()
    }

    pub fn index_of(&self, label: &str) -> Result<u32> {
        self.alphabet
            .iter()
            .position(|l| l == label)
            .map(|i| i as u32)
            .ok_or_else(|| Error::UnknownLabel {
                subsystem: self.name.clone(),
                label: label.to_string(),
            })
    }

    pub fn label(&self, index: u32) -> &str {
        &self.alphabet[index as usize]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeSpace {
    subsystems: Vec<SubsystemSpec>,
}

impl CompositeSpace {
    pub fn new(subsystems: Vec<SubsystemSpec>) -> Result<Self> {
        for (i, s) in subsystems.iter().enumerate() {
            if subsystems[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::SubsystemCollision(s.name.clone()));
            }
        }
        Ok(Self { subsystems })
    }

    /// The zero-subsystem space carrying the unit scalar state.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn subsystems(&self) -> &[SubsystemSpec] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.name.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.subsystems.iter().any(|s| s.name == name)
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSubsystem(name.to_string()))
    }

    pub fn subsystem(&self, name: &str) -> Result<&SubsystemSpec> {
        self.position(name).map(|p| &self.subsystems[p])
    }

    /// Number of basis states (product of alphabet sizes).
    pub fn basis_size(&self) -> usize {
        self.subsystems.iter().map(SubsystemSpec::dim).product()
    }

    pub fn concat(&self, other: &CompositeSpace) -> Result<CompositeSpace> {
        let mut all = self.subsystems.clone();
        all.extend(other.subsystems.iter().cloned());
        CompositeSpace::new(all)
    }

    pub fn encode<S: AsRef<str>>(&self, labels: &[S]) -> Result<BasisIndex> {
        if labels.len() != self.subsystems.len() {
            return Err(Error::WrongSpace(format!(
                "label tuple has {} entries, space has {} subsystems",
                labels.len(),
                self.subsystems.len()
            )));
        }
        self.subsystems
            .iter()
            .zip(labels)
            .map(|(s, l)| s.index_of(l.as_ref()))
            .collect()
    }

    pub fn decode(&self, index: &[u32]) -> Vec<String> {
        self.subsystems
            .iter()
            .zip(index)
            .map(|(s, &i)| s.label(i).to_string())
            .collect()
    }
}

/// Sparse pure state. Zero amplitudes are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: CompositeSpace,
    terms: BTreeMap<BasisIndex, Amplitude>,
}

impl StateVector {
    /// The zero vector over `space`.
    pub fn zero(space: CompositeSpace) -> Self {
        Self { space, terms: BTreeMap::new() }
    }

    /// The unit scalar: identity for [`StateVector::tensor`].
    pub fn scalar() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), Amplitude::new(1.0, 0.0));
        Self { space: CompositeSpace::empty(), terms }
    }

    pub fn basis<S: AsRef<str>>(space: CompositeSpace, labels: &[S]) -> Result<Self> {
        let index = space.encode(labels)?;
        let mut terms = BTreeMap::new();
        terms.insert(index, Amplitude::new(1.0, 0.0));
        Ok(Self { space, terms })
    }

    /// Builds a state from labelled amplitudes; repeated labels are summed.
    pub fn from_terms<I, L, S>(space: CompositeSpace, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, Amplitude)>,
        L: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut out = Self::zero(space);
        for (labels, amp) in terms {
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(Error::InvalidSpace("non-finite amplitude".into()));
            }
            let index = out.space.encode(labels.as_ref())?;
            *out.terms.entry(index).or_default() += amp;
        }
        out.prune();
        Ok(out)
    }

    pub(crate) fn from_raw(space: CompositeSpace, terms: BTreeMap<BasisIndex, Amplitude>) -> Self {
        let mut s = Self { space, terms };
        s.prune();
        s
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() > PRUNE_THRESHOLD);
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn raw_terms(&self) -> &BTreeMap<BasisIndex, Amplitude> {
        &self.terms
    }

    /// Labelled terms in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<String>, Amplitude)> + '_ {
        self.terms.iter().map(|(k, a)| (self.space.decode(k), *a))
    }

    pub fn amplitude<S: AsRef<str>>(&self, labels: &[S]) -> Result<Amplitude> {
        let index = self.space.encode(labels)?;
        Ok(self.terms.get(&index).copied().unwrap_or_default())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() <= NORM_TOLERANCE {
            Ok(())
        } else {
            Err(Error::NotNormalized(n))
        }
    }

    pub fn normalize(&self) -> Result<StateVector> {
        let n = self.norm();
        if self.terms.is_empty() || n == 0.0 {
            return Err(Error::EmptyState);
        }
        Ok(self.scale(Amplitude::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, factor: Amplitude) -> StateVector {
        let terms = self.terms.iter().map(|(k, a)| (k.clone(), a * factor)).collect();
        StateVector::from_raw(self.space.clone(), terms)
    }

    /// Vector sum; both operands must live in the same space.
    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        self.same_space(other)?;
        let mut terms = self.terms.clone();
        for (k, a) in &other.terms {
            *terms.entry(k.clone()).or_default() += a;
        }
        Ok(StateVector::from_raw(self.space.clone(), terms))
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude> {
        self.same_space(other)?;
        Ok(self
            .terms
            .iter()
            .filter_map(|(k, a)| other.terms.get(k).map(|b| a.conj() * b))
            .sum())
    }

    fn same_space(&self, other: &StateVector) -> Result<()> {
        if self.space != other.space {
            return Err(Error::WrongSpace("operands live in different spaces".into()));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let space = self.space.concat(&other.space)?;
        let mut terms = BTreeMap::new();
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                let mut k = Vec::with_capacity(ka.len() + kb.len());
                k.extend_from_slice(ka);
                k.extend_from_slice(kb);
                terms.insert(k, a * b);
            }
        }
        Ok(StateVector::from_raw(space, terms))
    }

    fn positions<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let p = self.space.position(n.as_ref())?;
            if out.contains(&p) {
                return Err(Error::SubsystemCollision(n.as_ref().to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Marginal Born probabilities on `selection`, in the order given.
    pub fn born_distribution<S: AsRef<str>>(&self, selection: &[S]) -> Result<ProbabilityTable> {
        if selection.is_empty() {
            return Err(Error::WrongSpace("empty selection".into()));
        }
        let positions = self.positions(selection)?;
        self.ensure_normalized()?;
        let space = CompositeSpace::new(
            positions.iter().map(|&p| self.space.subsystems[p].clone()).collect(),
        )?;
        let mut entries: BTreeMap<BasisIndex, f64> = BTreeMap::new();
        for (k, a) in &self.terms {
            let key: BasisIndex = positions.iter().map(|&p| k[p]).collect();
            *entries.entry(key).or_default() += a.norm_sqr();
        }
        Ok(ProbabilityTable { space, entries })
    }

    /// Projection onto `subsystem = outcome`, renormalized.
    pub fn project(&self, subsystem: &str, outcome: &str) -> Result<StateVector> {
        self.ensure_normalized()?;
        let p = self.space.position(subsystem)?;
        let index = self.space.subsystems[p].index_of(outcome)?;
        let terms: BTreeMap<_, _> = self
            .terms
            .iter()
            .filter(|(k, _)| k[p] == index)
            .map(|(k, a)| (k.clone(), *a))
            .collect();
        let kept = StateVector { space: self.space.clone(), terms };
        if kept.norm_sqr() <= PRUNE_THRESHOLD * PRUNE_THRESHOLD {
            return Err(Error::ImpossibleOutcome {
                subsystem: subsystem.to_string(),
                outcome: outcome.to_string(),
            });
        }
        kept.normalize()
    }

    /// Projects on `subsystem = outcome` and removes that subsystem, leaving
    /// the conditional state of the rest.
    pub fn condition(&self, subsystem: &str, outcome: &str) -> Result<StateVector> {
        let projected = self.project(subsystem, outcome)?;
        let p = self.space.position(subsystem)?;
        let mut subs = self.space.subsystems.clone();
        subs.remove(p);
        let space = CompositeSpace::new(subs)?;
        let terms = projected
            .terms
            .into_iter()
            .map(|(mut k, a)| {
                k.remove(p);
                (k, a)
            })
            .collect();
        Ok(StateVector::from_raw(space, terms))
    }

    /// Applies a linear map that consumes the `targets` subsystems and emits
    /// the `outputs` subsystems in their place (inserted where the first
    /// target sat). `image` maps target label indices, in `targets` order, to
    /// output label indices with amplitudes.
    pub fn map_subsystems<S, F>(&self, targets: &[S], outputs: Vec<SubsystemSpec>, image: F) -> Result<StateVector>
    where
        S: AsRef<str>,
        F: Fn(&[u32]) -> Vec<(BasisIndex, Amplitude)>,
    {
        let positions = self.positions(targets)?;
        let insert_at = positions.iter().copied().min().unwrap_or(self.space.len());
        let kept: Vec<usize> = (0..self.space.len()).filter(|p| !positions.contains(p)).collect();
        let before = kept.iter().filter(|&&p| p < insert_at).count();

        let mut subs: Vec<SubsystemSpec> = kept.iter().map(|&p| self.space.subsystems[p].clone()).collect();
        let n_out = outputs.len();
        for (i, o) in outputs.into_iter().enumerate() {
            subs.insert(before + i, o);
        }
        let space = CompositeSpace::new(subs)?;

        let mut terms: BTreeMap<BasisIndex, Amplitude> = BTreeMap::new();
        let mut target_labels = Vec::with_capacity(positions.len());
        for (k, a) in &self.terms {
            target_labels.clear();
            target_labels.extend(positions.iter().map(|&p| k[p]));
            for (out, b) in image(&target_labels) {
                debug_assert_eq!(out.len(), n_out);
                let mut key = Vec::with_capacity(kept.len() + n_out);
                key.extend(kept[..before].iter().map(|&p| k[p]));
                key.extend_from_slice(&out);
                key.extend(kept[before..].iter().map(|&p| k[p]));
                *terms.entry(key).or_default() += a * b;
            }
        }
        Ok(StateVector::from_raw(space, terms))
    }

    pub fn dump(&self) -> Vec<TermDump> {
        self.terms()
            .map(|(label, a)| TermDump { label, re: a.re, im: a.im })
            .collect()
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (labels, a)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)|{}⟩", a.re, a.im, labels.join(","))?;
        }
        Ok(())
    }
}

/// JSON debug form of one term: `{label: [..], re, im}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDump {
    pub label: Vec<String>,
    pub re: f64,
    pub im: f64,
}

impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.dump().serialize(serializer)
    }
}

/// Born probabilities over a subset of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    space: CompositeSpace,
    entries: BTreeMap<BasisIndex, f64>,
}

impl ProbabilityTable {
    pub fn selection(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn raw_entries(&self) -> &BTreeMap<BasisIndex, f64> {
        &self.entries
    }

    pub fn prob<S: AsRef<str>>(&self, labels: &[S]) -> Result<f64> {
        let index = self.space.encode(labels)?;
        Ok(self.entries.get(&index).copied().unwrap_or(0.0))
    }

    pub fn entries(&self) -> impl Iterator<Item = (Vec<String>, f64)> + '_ {
        self.entries.iter().map(|(k, p)| (self.space.decode(k), *p))
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Largest entry-wise deviation over the union of both supports.
    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::WrongSpace("tables have different selections".into()));
        }
        let mut worst: f64 = 0.0;
        for (k, p) in &self.entries {
            worst = worst.max((p - other.entries.get(k).copied().unwrap_or(0.0)).abs());
        }
        for (k, q) in &other.entries {
            if !self.entries.contains_key(k) {
                worst = worst.max(q.abs());
            }
        }
        Ok(worst)
    }
}

/// A pure state kept as a tensor product of independent factors, so that many
/// unentangled pairs never have to be expanded into one joint vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProductState {
    factors: Vec<StateVector>,
}

impl ProductState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factors(&self) -> &[StateVector] {
        &self.factors
    }

    pub fn push_factor(&mut self, state: StateVector) -> Result<()> {
        for name in state.space.names() {
            if self.factor_of(name).is_some() {
                return Err(Error::SubsystemCollision(name.to_string()));
            }
        }
        self.factors.push(state);
        Ok(())
    }

    pub fn factor_of(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.space.contains(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factor_of(name).is_some()
    }

    pub fn space(&self) -> Result<CompositeSpace> {
        self.factors
            .iter()
            .try_fold(CompositeSpace::empty(), |acc, f| acc.concat(&f.space))
    }

    /// Expands the full tensor product.
    pub fn to_state(&self) -> Result<StateVector> {
        self.factors
            .iter()
            .try_fold(StateVector::scalar(), |acc, f| acc.tensor(f))
    }

    /// Merges the factors owning `names` into a single factor and returns its index.
    fn merge_for<S: AsRef<str>>(&mut self, names: &[S]) -> Result<usize> {
        let mut owners: Vec<usize> = Vec::new();
        for n in names {
            let i = self
                .factor_of(n.as_ref())
                .ok_or_else(|| Error::WrongSpace(format!("no subsystem `{}` in state", n.as_ref())))?;
            if !owners.contains(&i) {
                owners.push(i);
            }
        }
        owners.sort_unstable();
        let first = owners[0];
        for &i in owners[1..].iter().rev() {
            let f = self.factors.remove(i);
            self.factors[first] = self.factors[first].tensor(&f)?;
        }
        Ok(first)
    }

    /// Applies `op` to the factor holding all of `targets`, merging factors first if needed.
    pub fn apply_local<S, F>(&mut self, targets: &[S], op: F) -> Result<()>
    where
        S: AsRef<str>,
        F: FnOnce(&StateVector) -> Result<StateVector>,
    {
        if targets.is_empty() {
            return Err(Error::WrongSpace("element acts on no subsystem".into()));
        }
        let i = self.merge_for(targets)?;
        let next = op(&self.factors[i])?;
        for name in next.space.names() {
            if self.factors.iter().enumerate().any(|(j, f)| j != i && f.space.contains(name)) {
                return Err(Error::SubsystemCollision(name.to_string()));
            }
        }
        self.factors[i] = next;
        Ok(())
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        self.factors.iter().try_for_each(StateVector::ensure_normalized)
    }

    /// Marginal Born probabilities on `selection`; cross-factor marginals are products.
    pub fn born_distribution<S: AsRef<str>>(&self, selection: &[S]) -> Result<ProbabilityTable> {
        if selection.is_empty() {
            return Err(Error::WrongSpace("empty selection".into()));
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (sel_pos, n) in selection.iter().enumerate() {
            let f = self
                .factor_of(n.as_ref())
                .ok_or_else(|| Error::UnknownSubsystem(n.as_ref().to_string()))?;
            match groups.iter_mut().find(|(g, _)| *g == f) {
                Some((_, v)) => v.push(sel_pos),
                None => groups.push((f, vec![sel_pos])),
            }
        }
        let mut subs = Vec::with_capacity(selection.len());
        for n in selection {
            let f = self.factor_of(n.as_ref()).expect("checked above");
            subs.push(self.factors[f].space.subsystem(n.as_ref())?.clone());
        }
        let space = CompositeSpace::new(subs)?;

        let mut entries: BTreeMap<BasisIndex, f64> = BTreeMap::new();
        entries.insert(vec![0; selection.len()], 1.0);
        for (f, sel_positions) in &groups {
            let names: Vec<&str> = sel_positions.iter().map(|&p| selection[p].as_ref()).collect();
            let marginal = self.factors[*f].born_distribution(&names)?;
            let mut next = BTreeMap::new();
            for (key, p) in &entries {
                for (mk, q) in &marginal.entries {
                    let mut k = key.clone();
                    for (j, &sp) in sel_positions.iter().enumerate() {
                        k[sp] = mk[j];
                    }
                    next.insert(k, p * q);
                }
            }
            entries = next;
        }
        Ok(ProbabilityTable { space, entries })
    }

    pub fn project(&mut self, subsystem: &str, outcome: &str) -> Result<()> {
        let f = self
            .factor_of(subsystem)
            .ok_or_else(|| Error::UnknownSubsystem(subsystem.to_string()))?;
        self.factors[f] = self.factors[f].project(subsystem, outcome)?;
        Ok(())
    }

    /// Probabilities of every label of `subsystem` given label constraints on
    /// other subsystems. Constraints on other factors are ignored (they are
    /// independent). Returns `(label index, probability)` in alphabet order,
    /// zero-probability labels omitted.
    pub fn conditional_weights(&self, subsystem: &str, constraints: &[(String, String)]) -> Result<Vec<(u32, f64)>> {
        let f = self
            .factor_of(subsystem)
            .ok_or_else(|| Error::UnknownSubsystem(subsystem.to_string()))?;
        let factor = &self.factors[f];
        let target = factor.space.position(subsystem)?;
        let mut fixed: Vec<(usize, u32)> = Vec::new();
        for (name, label) in constraints {
            if let Ok(p) = factor.space.position(name) {
                let idx = factor.space.subsystems[p].index_of(label)?;
                if let Some(&(_, prev)) = fixed.iter().find(|(q, _)| *q == p) {
                    if prev != idx {
                        return Err(Error::ImpossibleOutcome {
                            subsystem: name.clone(),
                            outcome: label.clone(),
                        });
                    }
                } else {
                    fixed.push((p, idx));
                }
            }
        }
        let mut weights = vec![0.0; factor.space.subsystems[target].dim()];
        for (k, a) in &factor.terms {
            if fixed.iter().all(|&(p, i)| k[p] == i) {
                weights[k[target] as usize] += a.norm_sqr();
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= PRUNE_THRESHOLD * PRUNE_THRESHOLD {
            let (name, label) = constraints.first().cloned().unwrap_or_default();
            return Err(Error::ImpossibleOutcome { subsystem: name, outcome: label });
        }
        Ok(weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .map(|(i, w)| (i as u32, w / total))
            .collect())
    }

    pub fn subsystem(&self, name: &str) -> Result<&SubsystemSpec> {
        let f = self
            .factor_of(name)
            .ok_or_else(|| Error::UnknownSubsystem(name.to_string()))?;
        self.factors[f].space.subsystem(name)
    }
}

impl From<StateVector> for ProductState {
    fn from(s: StateVector) -> Self {
        Self { factors: vec![s] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Amplitude {
        Amplitude::new(re, 0.0)
    }

    fn path_space() -> CompositeSpace {
        CompositeSpace::new(vec![SubsystemSpec::new("path", ["U", "L"]).unwrap()]).unwrap()
    }

    fn spin_pair() -> CompositeSpace {
        CompositeSpace::new(vec![
            SubsystemSpec::new("A", ["+", "-"]).unwrap(),
            SubsystemSpec::new("B", ["+", "-"]).unwrap(),
        ])
        .unwrap()
    }

    fn singlet_unnormalized() -> StateVector {
        StateVector::from_terms(spin_pair(), [(["+", "-"], c(1.0)), (["-", "+"], c(-1.0))]).unwrap()
    }

    /// The eraser state exactly as written with real coefficients.
    fn literal_eraser_state() -> StateVector {
        let space = CompositeSpace::new(vec![
            SubsystemSpec::new("detector", ["D1", "D2", "D3", "D4"]).unwrap(),
            SubsystemSpec::new("signal", ["U", "L"]).unwrap(),
        ])
        .unwrap();
        let a = 1.0 / (2.0 * 2f64.sqrt());
        StateVector::from_terms(
            space,
            [
                (["D1", "U"], c(a)),
                (["D1", "L"], c(a)),
                (["D2", "U"], c(a)),
                (["D2", "L"], c(a)),
                (["D3", "L"], c(0.5)),
                (["D4", "U"], c(0.5)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn subsystem_rejects_bad_alphabets() {
        assert!(SubsystemSpec::new("x", Vec::<String>::new()).is_err());
        assert!(SubsystemSpec::new("x", ["a", "a"]).is_err());
        let s = SubsystemSpec::new("x", ["a"]).unwrap();
        assert!(matches!(
            CompositeSpace::new(vec![s.clone(), s]),
            Err(Error::SubsystemCollision(_))
        ));
    }

    #[test]
    fn normalize_equal_weights() {
        let s = StateVector::from_terms(path_space(), [(["U"], c(1.0)), (["L"], c(1.0))]).unwrap();
        let n = s.normalize().unwrap();
        assert_abs_diff_eq!(n.amplitude(&["U"]).unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(n.amplitude(&["L"]).unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn normalize_singlet() {
        let n = singlet_unnormalized().normalize().unwrap();
        assert_abs_diff_eq!(n.amplitude(&["+", "-"]).unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(n.amplitude(&["-", "+"]).unwrap().re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(n.len(), 2);
    }

    #[test]
    fn normalize_three_four_five() {
        let s = StateVector::from_terms(path_space(), [(["U"], c(3.0)), (["L"], c(4.0))]).unwrap();
        let n = s.normalize().unwrap();
        assert_abs_diff_eq!(n.amplitude(&["U"]).unwrap().norm(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(n.amplitude(&["L"]).unwrap().norm(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn normalize_zero_vector_fails() {
        assert_eq!(StateVector::zero(path_space()).normalize(), Err(Error::EmptyState));
        let cancelled =
            StateVector::from_terms(path_space(), [(["U"], c(1.0)), (["U"], c(-1.0))]).unwrap();
        assert_eq!(cancelled.normalize(), Err(Error::EmptyState));
    }

    #[test]
    fn tensor_with_scalar_is_identity() {
        let s = singlet_unnormalized().normalize().unwrap();
        assert_eq!(StateVector::scalar().tensor(&s).unwrap(), s);
        assert_eq!(s.tensor(&StateVector::scalar()).unwrap(), s);
    }

    #[test]
    fn tensor_direct_expansion() {
        let a = StateVector::from_terms(path_space(), [(["U"], c(FRAC_1_SQRT_2)), (["L"], c(FRAC_1_SQRT_2))])
            .unwrap();
        let spin = CompositeSpace::new(vec![SubsystemSpec::new("s", ["+", "-"]).unwrap()]).unwrap();
        let b = StateVector::basis(spin, &["+"]).unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.len(), 2);
        assert_abs_diff_eq!(t.amplitude(&["U", "+"]).unwrap().re, FRAC_1_SQRT_2);
        assert_abs_diff_eq!(t.amplitude(&["L", "+"]).unwrap().re, FRAC_1_SQRT_2);
    }

    #[test]
    fn tensor_of_two_eraser_pairs_has_36_terms() {
        let one = literal_eraser_state();
        let rename = |s: &StateVector, k: u32| {
            let space = CompositeSpace::new(
                s.space()
                    .subsystems()
                    .iter()
                    .map(|sub| SubsystemSpec::new(format!("{}.{k}", sub.name()), sub.alphabet().to_vec()).unwrap())
                    .collect(),
            )
            .unwrap();
            StateVector::from_raw(space, s.raw_terms().clone())
        };
        let t = rename(&one, 1).tensor(&rename(&one, 2)).unwrap();
        assert_eq!(t.len(), 36);
        assert!(t.is_normalized());
    }

    #[test]
    fn tensor_name_collision() {
        let a = StateVector::basis(path_space(), &["U"]).unwrap();
        assert!(matches!(a.tensor(&a), Err(Error::SubsystemCollision(_))));
    }

    #[test]
    fn born_singlet() {
        let s = singlet_unnormalized().normalize().unwrap();
        let t = s.born_distribution(&["A", "B"]).unwrap();
        assert_abs_diff_eq!(t.prob(&["+", "-"]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.prob(&["-", "+"]).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(t.prob(&["+", "+"]).unwrap(), 0.0);
        assert_eq!(t.prob(&["-", "-"]).unwrap(), 0.0);
    }

    #[test]
    fn born_eraser_detectors_quarter_each() {
        let s = literal_eraser_state();
        let t = s.born_distribution(&["detector"]).unwrap();
        for d in ["D1", "D2", "D3", "D4"] {
            assert_abs_diff_eq!(t.prob(&[d]).unwrap(), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn born_eigenstate_point_mass() {
        let s = StateVector::basis(spin_pair(), &["-", "+"]).unwrap();
        let t = s.born_distribution(&["B", "A"]).unwrap();
        assert_eq!(t.prob(&["+", "-"]).unwrap(), 1.0);
        assert_eq!(t.entries().count(), 1);
    }

    #[test]
    fn born_errors() {
        let s = singlet_unnormalized();
        assert!(matches!(s.born_distribution(&["A"]), Err(Error::NotNormalized(_))));
        let s = s.normalize().unwrap();
        assert!(matches!(s.born_distribution(&["C"]), Err(Error::UnknownSubsystem(_))));
        assert!(s.born_distribution::<&str>(&[]).is_err());
    }

    #[test]
    fn project_eraser_on_d1_gives_equal_superposition() {
        let s = literal_eraser_state().condition("detector", "D1").unwrap();
        assert_abs_diff_eq!(s.amplitude(&["U"]).unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(&["L"]).unwrap().re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn project_eraser_on_d4_gives_upper() {
        let s = literal_eraser_state().condition("detector", "D4").unwrap();
        assert_eq!(s.len(), 1);
        assert_abs_diff_eq!(s.amplitude(&["U"]).unwrap().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn project_singlet_anticorrelates() {
        let s = singlet_unnormalized().normalize().unwrap();
        let after = s.project("A", "+").unwrap();
        let b = after.born_distribution(&["B"]).unwrap();
        assert_eq!(b.prob(&["-"]).unwrap(), 1.0);
        assert_eq!(b.prob(&["+"]).unwrap(), 0.0);
    }

    #[test]
    fn project_impossible_outcome() {
        let s = StateVector::basis(path_space(), &["U"]).unwrap();
        assert!(matches!(s.project("path", "L"), Err(Error::ImpossibleOutcome { .. })));
        assert!(matches!(s.project("path", "X"), Err(Error::UnknownLabel { .. })));
    }

    #[test]
    fn map_subsystems_inserts_outputs_in_place() {
        let space = CompositeSpace::new(vec![
            SubsystemSpec::new("a", ["0"]).unwrap(),
            SubsystemSpec::new("b", ["0", "1"]).unwrap(),
            SubsystemSpec::new("c", ["0"]).unwrap(),
        ])
        .unwrap();
        let s = StateVector::basis(space, &["0", "1", "0"]).unwrap();
        let out = SubsystemSpec::new("b2", ["x", "y", "z"]).unwrap();
        let m = s.map_subsystems(&["b"], vec![out], |l| vec![(vec![l[0] + 1], c(1.0))]).unwrap();
        assert_eq!(m.space().names().collect::<Vec<_>>(), ["a", "b2", "c"]);
        assert_eq!(m.amplitude(&["0", "z", "0"]).unwrap(), c(1.0));
    }

    #[test]
    fn product_state_marginals_match_full_tensor() {
        let s = singlet_unnormalized().normalize().unwrap();
        let p = StateVector::from_terms(path_space(), [(["U"], c(0.6)), (["L"], c(0.8))]).unwrap();
        let mut ps = ProductState::from(s.clone());
        ps.push_factor(p.clone()).unwrap();
        let full = ps.to_state().unwrap();
        let a = ps.born_distribution(&["path", "A"]).unwrap();
        let b = full.born_distribution(&["path", "A"]).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-15);
        assert!(ps.push_factor(p).is_err());
    }

    #[test]
    fn conditional_weights_follow_constraints() {
        let s = singlet_unnormalized().normalize().unwrap();
        let ps = ProductState::from(s);
        let w = ps.conditional_weights("B", &[("A".into(), "+".into())]).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].0, 1);
        assert_abs_diff_eq!(w[0].1, 1.0, epsilon = 1e-15);
        let w = ps.conditional_weights("B", &[]).unwrap();
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn json_dump_shape() {
        let s = StateVector::basis(path_space(), &["L"]).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v, serde_json::json!([{"label": ["L"], "re": 1.0, "im": 0.0}]));
    }
}
