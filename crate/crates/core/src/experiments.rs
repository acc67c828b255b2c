//! Declarative experiment configurations compiled into time-tagged schedules.
//!
//! Time is logical: every element and measurement event carries an integer
//! tag, and each pair of a multi-pair run occupies its own window of
//! [`PAIR_WINDOW`] tags. A "delayed choice" is an element whose tag is moved
//! towards the detection event.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{self, BeamSplitterConvention, Geometry, GeometrySpec, OpticalElement};
use crate::statevec::{CompositeSpace, ProductState, StateVector};

pub const ALICE: &str = "alice";
pub const BOB: &str = "bob";

/// Number of logical ticks reserved per pair.
pub const PAIR_WINDOW: u64 = 10;

/// Tag of the detection event inside a window for the single-photon setups
/// and the idler detectors of the eraser.
const DETECTION_TAG: u64 = 9;
/// Legal tags for the screen/detector choice of the double slit.
pub const DOUBLE_SLIT_CHOICE_TAGS: std::ops::RangeInclusive<u64> = 1..=8;
/// Legal tags for inserting the second splitter of the interferometer.
pub const MACH_ZEHNDER_INSERT_TAGS: std::ops::RangeInclusive<u64> = 3..=8;
/// Legal tags for the eraser toggle, all after the D0 detection at tag 3.
pub const ERASER_TOGGLE_TAGS: std::ops::RangeInclusive<u64> = 5..=8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    #[default]
    Collapse,
    Convivial,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Collapse => "collapse",
            Semantics::Convivial => "convivial",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DoubleSlit,
    MachZehnder,
    Epr,
    QuantumEraser,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::DoubleSlit,
        ExperimentKind::MachZehnder,
        ExperimentKind::Epr,
        ExperimentKind::QuantumEraser,
    ];
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::DoubleSlit => "double-slit",
            ExperimentKind::MachZehnder => "mzi",
            ExperimentKind::Epr => "epr",
            ExperimentKind::QuantumEraser => "eraser",
        })
    }
}

/// Kind-specific switches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Setup {
    DoubleSlit {
        /// Screen (`true`) or which-path detectors (`false`).
        screen: bool,
        choice_time: u64,
    },
    MachZehnder {
        closed: bool,
        /// Tag of the second splitter; only meaningful when closed.
        insertion_time: Option<u64>,
        /// Extra phase on arm `a`, radians.
        #[serde(default)]
        arm_phase: f64,
    },
    Epr,
    QuantumEraser {
        eraser_in: bool,
        toggle_time: u64,
    },
}

impl Setup {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Setup::DoubleSlit { .. } => ExperimentKind::DoubleSlit,
            Setup::MachZehnder { .. } => ExperimentKind::MachZehnder,
            Setup::Epr => ExperimentKind::Epr,
            Setup::QuantumEraser { .. } => ExperimentKind::QuantumEraser,
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Setup {
        match kind {
            ExperimentKind::DoubleSlit => Setup::DoubleSlit { screen: true, choice_time: *DOUBLE_SLIT_CHOICE_TAGS.start() },
            ExperimentKind::MachZehnder => Setup::MachZehnder { closed: true, insertion_time: None, arm_phase: 0.0 },
            ExperimentKind::Epr => Setup::Epr,
            ExperimentKind::QuantumEraser => Setup::QuantumEraser { eraser_in: true, toggle_time: *ERASER_TOGGLE_TAGS.start() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setup: Setup,
    pub geometry: GeometrySpec,
    pub convention: BeamSplitterConvention,
    pub pair_count: usize,
    pub semantics: Semantics,
    pub shots: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(setup: Setup) -> Self {
        Self {
            setup,
            geometry: GeometrySpec::default(),
            convention: BeamSplitterConvention::symmetric(),
            pair_count: 1,
            semantics: Semantics::Collapse,
            shots: 1,
            seed: 0,
        }
    }

    pub fn of_kind(kind: ExperimentKind) -> Self {
        Self::new(Setup::default_for(kind))
    }

    pub fn double_slit(screen: bool) -> Self {
        Self::new(Setup::DoubleSlit { screen, choice_time: *DOUBLE_SLIT_CHOICE_TAGS.start() })
    }

    pub fn mach_zehnder(closed: bool) -> Self {
        Self::new(Setup::MachZehnder { closed, insertion_time: None, arm_phase: 0.0 })
    }

    pub fn epr() -> Self {
        Self::new(Setup::Epr)
    }

    pub fn eraser(eraser_in: bool) -> Self {
        Self::new(Setup::QuantumEraser { eraser_in, toggle_time: *ERASER_TOGGLE_TAGS.start() })
    }

    pub fn kind(&self) -> ExperimentKind {
        self.setup.kind()
    }

    pub fn with_pairs(mut self, n: usize) -> Self {
        self.pair_count = n;
        self
    }

    pub fn with_shots(mut self, n: usize) -> Self {
        self.shots = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_semantics(mut self, semantics: Semantics) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn with_geometry(mut self, geometry: GeometrySpec) -> Self {
        self.geometry = geometry;
        self
    }

    /// Sets the tag of the kind's delayed choice (screen choice, splitter
    /// insertion or eraser toggle).
    pub fn with_choice_time(mut self, t: u64) -> Result<Self> {
        match &mut self.setup {
            Setup::DoubleSlit { choice_time, .. } => *choice_time = t,
            Setup::MachZehnder { insertion_time, .. } => *insertion_time = Some(t),
            Setup::QuantumEraser { toggle_time, .. } => *toggle_time = t,
            Setup::Epr => return Err(Error::BadConfig("EPR has no time-tagged choice".into())),
        }
        self.validate()?;
        Ok(self)
    }

    /// All legal tags for the kind's delayed choice.
    pub fn legal_choice_times(&self) -> Result<Vec<u64>> {
        match &self.setup {
            Setup::DoubleSlit { .. } => Ok(DOUBLE_SLIT_CHOICE_TAGS.collect()),
            Setup::MachZehnder { closed: true, .. } => Ok(MACH_ZEHNDER_INSERT_TAGS.collect()),
            Setup::MachZehnder { closed: false, .. } => {
                Err(Error::BadConfig("open interferometer has no second splitter to insert".into()))
            }
            Setup::QuantumEraser { .. } => Ok(ERASER_TOGGLE_TAGS.collect()),
            Setup::Epr => Err(Error::BadConfig("EPR has no time-tagged choice".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots < 1 {
            return Err(Error::BadConfig("shots must be at least 1".into()));
        }
        if self.pair_count < 1 {
            return Err(Error::BadConfig("pair_count must be at least 1".into()));
        }
        let in_range = |t: u64, r: &std::ops::RangeInclusive<u64>, what: &str| {
            if r.contains(&t) {
                Ok(())
            } else {
                Err(Error::BadConfig(format!("{what} {t} outside legal range {}..={}", r.start(), r.end())))
            }
        };
        match &self.setup {
            Setup::DoubleSlit { choice_time, .. } => {
                self.single_pair()?;
                in_range(*choice_time, &DOUBLE_SLIT_CHOICE_TAGS, "choice time")?;
            }
            Setup::MachZehnder { closed, insertion_time, arm_phase } => {
                self.single_pair()?;
                if !arm_phase.is_finite() {
                    return Err(Error::BadConfig("arm phase must be finite".into()));
                }
                match (closed, insertion_time) {
                    (false, Some(_)) => {
                        return Err(Error::BadConfig("insertion time given for an open interferometer".into()))
                    }
                    (true, Some(t)) => in_range(*t, &MACH_ZEHNDER_INSERT_TAGS, "insertion time")?,
                    _ => {}
                }
            }
            Setup::Epr => {}
            Setup::QuantumEraser { toggle_time, .. } => in_range(*toggle_time, &ERASER_TOGGLE_TAGS, "toggle time")?,
        }
        Geometry::from_spec(&self.geometry).map_err(|e| Error::BadConfig(e.to_string()))?;
        BeamSplitterConvention::new(self.convention.t, self.convention.r)
            .map_err(|e| Error::BadConfig(e.to_string()))?;
        Ok(())
    }

    fn single_pair(&self) -> Result<()> {
        if self.pair_count != 1 {
            return Err(Error::BadConfig(format!("{} runs take exactly one photon per shot", self.kind())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub observer: String,
    pub subsystem: String,
    /// Preferred basis: the declared alphabet of the subsystem.
    pub basis: Vec<String>,
    pub time_tag: u64,
    /// Pair index (0-based) the event belongs to.
    pub pair: usize,
    /// Subsystem name without the pair suffix.
    pub channel: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledExperiment {
    pub kind: ExperimentKind,
    pub schedule: Vec<(u64, OpticalElement)>,
    pub events: Vec<MeasurementEvent>,
    pub space: CompositeSpace,
    pub geometry: Geometry,
    pub pairs: usize,
}

/// `base` for single runs, `base.k` (1-based) when pairs are replicated.
pub fn pair_name(base: &str, pair: usize, pairs: usize) -> String {
    if pairs == 1 {
        base.to_string()
    } else {
        format!("{base}.{}", pair + 1)
    }
}

struct Builder {
    schedule: Vec<(u64, OpticalElement)>,
    events: Vec<(u64, String, String, usize, String)>,
}

impl Builder {
    fn element(&mut self, t: u64, e: OpticalElement) {
        self.schedule.push((t, e));
    }

    fn event(&mut self, t: u64, observer: &str, subsystem: String, pair: usize, channel: &str) {
        self.events.push((t, observer.to_string(), subsystem, pair, channel.to_string()));
    }
}

pub fn build(config: &ExperimentConfig) -> Result<ScheduledExperiment> {
    config.validate()?;
    let geometry = Geometry::from_spec(&config.geometry)?;
    let conv = config.convention;
    let n = config.pair_count;
    let mut b = Builder { schedule: Vec::new(), events: Vec::new() };

    match &config.setup {
        Setup::DoubleSlit { screen, choice_time } => {
            b.element(0, OpticalElement::Source(optics::two_path_state(optics::PATH)?));
            let (element, channel) = if *screen {
                (optics::screen_element(optics::PATH, optics::SCREEN, &geometry)?, optics::SCREEN)
            } else {
                (
                    OpticalElement::WhichPathCoupler {
                        path: optics::PATH.into(),
                        detector: optics::DETECTOR.into(),
                        phases: geometry.detector_phases()?,
                    },
                    optics::DETECTOR,
                )
            };
            b.element(*choice_time, element);
            b.event(DETECTION_TAG, ALICE, channel.to_string(), 0, channel);
        }
        Setup::MachZehnder { closed, insertion_time, arm_phase } => {
            let parts = optics::mach_zehnder_parts(conv, *arm_phase)?;
            // source, first splitter, mirrors (and arm phase)
            let mut tags = [0u64, 1].into_iter().chain(std::iter::repeat(2));
            for e in parts.before {
                b.element(tags.next().expect("infinite"), e);
            }
            if *closed {
                let t = insertion_time.unwrap_or(*MACH_ZEHNDER_INSERT_TAGS.start());
                b.element(t, parts.second_splitter);
            }
            b.element(DETECTION_TAG, parts.readout);
            b.event(DETECTION_TAG, ALICE, optics::DETECTOR.to_string(), 0, optics::DETECTOR);
        }
        Setup::Epr => {
            for k in 0..n {
                let base = k as u64 * PAIR_WINDOW;
                let a = pair_name("A", k, n);
                let bb = pair_name("B", k, n);
                b.element(base, OpticalElement::Source(optics::singlet_state(&a, &bb)?));
                b.event(base + 1, ALICE, a, k, "A");
                b.event(base + 2, BOB, bb, k, "B");
            }
        }
        Setup::QuantumEraser { eraser_in, toggle_time } => {
            for k in 0..n {
                let base = k as u64 * PAIR_WINDOW;
                let slit = pair_name(optics::SLIT, k, n);
                let signal = pair_name(optics::SIGNAL, k, n);
                let idler = pair_name(optics::IDLER, k, n);
                let ports = pair_name(optics::IDLER_PORTS, k, n);
                let d0 = pair_name(optics::D0, k, n);
                let det = pair_name(optics::DETECTOR, k, n);
                b.element(base, OpticalElement::Source(optics::two_path_state(&slit)?));
                b.element(
                    base + 1,
                    OpticalElement::Spdc { input: slit, signal: signal.clone(), idler: idler.clone() },
                );
                b.element(base + 2, optics::screen_element(&signal, &d0, &geometry)?);
                b.event(base + 3, ALICE, d0, k, optics::D0);
                let [split, toggle] = optics::idler_elements(&idler, &ports, &det, *eraser_in, conv);
                b.element(base + 4, split);
                b.element(base + toggle_time, toggle);
                b.event(base + DETECTION_TAG, ALICE, det, k, optics::DETECTOR);
            }
        }
    }

    b.schedule.sort_by_key(|(t, _)| *t);
    b.events.sort_by_key(|e| e.0);
    let mut product = ProductState::new();
    for (_, e) in &b.schedule {
        e.apply(&mut product)?;
    }
    let space = product.space()?;
    let events = b
        .events
        .into_iter()
        .map(|(time_tag, observer, subsystem, pair, channel)| {
            let basis = space.subsystem(&subsystem)?.alphabet().to_vec();
            Ok(MeasurementEvent { observer, subsystem, basis, time_tag, pair, channel })
        })
        .collect::<Result<Vec<_>>>()?;
    let sched = ScheduledExperiment { kind: config.kind(), schedule: b.schedule, events, space, geometry, pairs: n };
    sched.validate()?;
    Ok(sched)
}

impl ScheduledExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::BadConfig("schedule time tags decrease".into()));
        }
        if self.events.windows(2).any(|w| w[1].time_tag < w[0].time_tag) {
            return Err(Error::BadConfig("event time tags decrease".into()));
        }
        for (i, ev) in self.events.iter().enumerate() {
            let sub = self.space.subsystem(&ev.subsystem)?;
            if sub.alphabet() != ev.basis.as_slice() {
                return Err(Error::BadConfig(format!("event basis of `{}` is not its alphabet", ev.subsystem)));
            }
            if self.events[..i].iter().any(|o| o.observer == ev.observer && o.subsystem == ev.subsystem) {
                return Err(Error::BadConfig(format!(
                    "`{}` measured twice by `{}`",
                    ev.subsystem, ev.observer
                )));
            }
        }
        Ok(())
    }

    /// Pre-measurement state with independent factors kept apart.
    pub fn final_product(&self) -> Result<ProductState> {
        let mut state = ProductState::new();
        for (_, e) in &self.schedule {
            e.apply(&mut state)?;
        }
        state.ensure_normalized()?;
        Ok(state)
    }

    /// Full pre-measurement state vector (the tensor product of all pairs).
    pub fn final_state(&self) -> Result<StateVector> {
        self.final_product()?.to_state()?.normalize()
    }

    /// Same schedule with every event assigned to `observer`.
    pub fn with_single_observer(&self, observer: &str) -> ScheduledExperiment {
        let mut s = self.clone();
        for e in &mut s.events {
            e.observer = observer.to_string();
        }
        s
    }

    pub fn observers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.events {
            if !out.contains(&e.observer) {
                out.push(e.observer.clone());
            }
        }
        out
    }

    pub fn event_subsystems(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.subsystem.as_str()).collect()
    }
}
