//! Optical elements and the state builders for the four setups.
//!
//! Every element is a linear map on a [`StateVector`] and, except for the
//! screen projection on non-isometric bin grids, an isometry. Conventions:
//!
//! * beam splitters act as `[[t, r], [r, t]]` on the two labels of a mode
//!   subsystem, `t = 1/√2`, `r = i/√2` by default;
//! * the upper slit `U` sits at `(0, +d/2)`, the lower slit `L` at `(0, -d/2)`;
//! * the far-field screen kernel is `U ↦ 1/√B`, `L ↦ e^{ikd·sinθ}/√B` per bin.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{Amplitude, BasisIndex, CompositeSpace, ProductState, StateVector, SubsystemSpec};

pub const PATH: &str = "path";
pub const SCREEN: &str = "screen";
pub const DETECTOR: &str = "detector";
pub const MODE: &str = "mode";
pub const SLIT: &str = "slit";
pub const SIGNAL: &str = "signal";
pub const IDLER: &str = "idler";
pub const IDLER_PORTS: &str = "idler_ports";
pub const D0: &str = "d0";

pub const UPPER: &str = "U";
pub const LOWER: &str = "L";
pub const ERASER_DETECTORS: [&str; 4] = ["D1", "D2", "D3", "D4"];
pub const WHICH_PATH_DETECTORS: [&str; 2] = ["D1", "D2"];
const MODE_LABELS: [&str; 2] = ["a", "b"];
// Idler ports after the first splitters: which-path detectors plus the two
// beams travelling on to the eraser position.
const PORT_LABELS: [&str; 4] = ["D3", "D4", "EU", "EL"];

const UNITARITY_TOLERANCE: f64 = 1e-12;

pub type Point = [f64; 2];

fn cis(phase: f64) -> Amplitude {
    Amplitude::from_polar(1.0, phase)
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `(1/ρ)·e^{ikρ}` with `ρ = |target − source|`.
pub fn propagate_spherical(source: Point, target: Point, k: f64) -> Result<Amplitude> {
    let rho = distance(source, target);
    if rho == 0.0 {
        return Err(Error::SingularPropagation);
    }
    Ok(Amplitude::from_polar(1.0 / rho, k * rho))
}

/// Relative far-field intensity `|1 + e^{ikd·sinθ}|²`, in `[0, 4]`.
pub fn screen_intensity(theta: f64, k: f64, d: f64) -> f64 {
    (Amplitude::new(1.0, 0.0) + cis(k * d * theta.sin())).norm_sqr()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterConvention {
    pub t: Amplitude,
    pub r: Amplitude,
}

impl BeamSplitterConvention {
    pub fn new(t: Amplitude, r: Amplitude) -> Result<Self> {
        let power = t.norm_sqr() + r.norm_sqr();
        let cross = t * r.conj() + r * t.conj();
        if (power - 1.0).abs() > UNITARITY_TOLERANCE || cross.norm() > UNITARITY_TOLERANCE {
            return Err(Error::InvalidConvention(format!(
                "[[t, r], [r, t]] is not unitary (|t|²+|r|² = {power}, t·r̄ + r·t̄ = {cross})"
            )));
        }
        Ok(Self { t, r })
    }

    /// `t = 1/√2`, `r = i/√2`.
    pub fn symmetric() -> Self {
        Self {
            t: Amplitude::new(FRAC_1_SQRT_2, 0.0),
            r: Amplitude::new(0.0, FRAC_1_SQRT_2),
        }
    }

    pub fn matrix(&self) -> [[Amplitude; 2]; 2] {
        [[self.t, self.r], [self.r, self.t]]
    }

    /// Output port index (0 or 1) that receives all the light when input 0 is
    /// sent through two identical splitters; ties go to port 1.
    pub fn bright_port(&self) -> u32 {
        let same = self.t * self.t + self.r * self.r;
        let cross = self.t * self.r * 2.0;
        if cross.norm_sqr() >= same.norm_sqr() {
            1
        } else {
            0
        }
    }
}

impl Default for BeamSplitterConvention {
    fn default() -> Self {
        Self::symmetric()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `1 + e^{ikd·sinθ}` with equal prefactors.
    #[default]
    FarField,
    /// Exact `(1/ρ)e^{ikρ}` from each slit to the bin centre on the screen.
    Spherical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinGrid {
    /// `bins` bins uniform in sinθ, centred, covering `periods` full fringes.
    /// The far-field kernel is an exact isometry on this grid whenever
    /// `bins` does not divide `periods`.
    #[default]
    Uniform,
    /// `4·periods + 1` bins at `kd·sinθ = jπ/2`, so maxima, quadratures and
    /// zeros fall on bin centres. `bins` is ignored.
    Quadrature,
}

/// Serializable geometry parameters; [`Geometry::from_spec`] derives the bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub wavenumber: f64,
    pub slit_separation: f64,
    pub screen_distance: f64,
    pub bins: usize,
    pub periods: usize,
    pub grid: BinGrid,
    pub kernel: Kernel,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            wavenumber: 2.0 * PI,
            slit_separation: 10.0,
            screen_distance: 1000.0,
            bins: 32,
            periods: 4,
            grid: BinGrid::Uniform,
            kernel: Kernel::FarField,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub k: f64,
    pub d: f64,
    pub r1: Point,
    pub r2: Point,
    pub screen_distance: f64,
    pub detector_location: Point,
    pub kernel: Kernel,
    sin_theta: Vec<f64>,
    bin_angles: Vec<f64>,
}

impl Geometry {
    /// Validates and builds a geometry from explicit bin centres in sinθ.
    pub fn new(k: f64, d: f64, screen_distance: f64, sin_theta: Vec<f64>, kernel: Kernel) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidGeometry(format!("wavenumber must be positive, got {k}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidGeometry(format!("slit separation must be positive, got {d}")));
        }
        if !(screen_distance > 0.0 && screen_distance.is_finite()) {
            return Err(Error::InvalidGeometry("screen distance must be positive".into()));
        }
        let b = sin_theta.len();
        if b < 2 {
            return Err(Error::InvalidGeometry(format!("need at least 2 bins, got {b}")));
        }
        if sin_theta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGeometry("bin angles must be strictly increasing".into()));
        }
        if sin_theta.iter().any(|s| s.abs() >= 1.0) {
            return Err(Error::InvalidGeometry("|sinθ| must stay below 1".into()));
        }
        for i in 0..b {
            if (sin_theta[i] + sin_theta[b - 1 - i]).abs() > 1e-12 {
                return Err(Error::InvalidGeometry("bin angles must be symmetric about 0".into()));
            }
        }
        let bin_angles = sin_theta.iter().map(|s| s.asin()).collect();
        Ok(Self {
            k,
            d,
            r1: [0.0, d / 2.0],
            r2: [0.0, -d / 2.0],
            screen_distance,
            detector_location: [screen_distance, 0.0],
            kernel,
            sin_theta,
            bin_angles,
        })
    }

    pub fn from_spec(spec: &GeometrySpec) -> Result<Self> {
        let kd = spec.wavenumber * spec.slit_separation;
        if spec.periods == 0 {
            return Err(Error::InvalidGeometry("periods must be at least 1".into()));
        }
        let periods = spec.periods as f64;
        let sin_theta: Vec<f64> = match spec.grid {
            BinGrid::Uniform => {
                let b = spec.bins;
                if b < 2 {
                    return Err(Error::InvalidGeometry(format!("need at least 2 bins, got {b}")));
                }
                let step = 2.0 * PI * periods / (b as f64 * kd);
                let mid = (b as f64 - 1.0) / 2.0;
                (0..b).map(|i| (i as f64 - mid) * step).collect()
            }
            BinGrid::Quadrature => {
                let half = 2 * spec.periods as i64;
                (-half..=half).map(|j| j as f64 * (PI / 2.0) / kd).collect()
            }
        };
        Self::new(spec.wavenumber, spec.slit_separation, spec.screen_distance, sin_theta, spec.kernel)
    }

    pub fn bins(&self) -> usize {
        self.sin_theta.len()
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn bin_angles(&self) -> &[f64] {
        &self.bin_angles
    }

    /// `kd·sinθ` at each bin centre.
    pub fn bin_phases(&self) -> Vec<f64> {
        self.sin_theta.iter().map(|s| self.k * self.d * s).collect()
    }

    pub fn bin_labels(&self) -> Vec<String> {
        (0..self.bins()).map(|b| b.to_string()).collect()
    }

    pub fn screen_point(&self, bin: usize) -> Point {
        let theta = self.bin_angles[bin];
        [self.screen_distance, self.screen_distance * theta.tan()]
    }

    /// Per-bin amplitudes `[from U, from L]`.
    pub fn screen_kernel(&self) -> Result<Vec<[Amplitude; 2]>> {
        let scale = 1.0 / (self.bins() as f64).sqrt();
        match self.kernel {
            Kernel::FarField => Ok(self
                .bin_phases()
                .into_iter()
                .map(|phi| [Amplitude::new(scale, 0.0), cis(phi) * scale])
                .collect()),
            Kernel::Spherical => (0..self.bins())
                .map(|b| {
                    let p = self.screen_point(b);
                    let u = propagate_spherical(self.r1, p, self.k)?;
                    let l = propagate_spherical(self.r2, p, self.k)?;
                    let s = scale * self.screen_distance;
                    Ok([u * s, l * s])
                })
                .collect(),
        }
    }

    /// Unit-modulus phases picked up on the way from each slit to the detector pair.
    pub fn detector_phases(&self) -> Result<[Amplitude; 2]> {
        let u = propagate_spherical(self.r1, self.detector_location, self.k)?;
        let l = propagate_spherical(self.r2, self.detector_location, self.k)?;
        Ok([u / u.norm(), l / l.norm()])
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Self::from_spec(&GeometrySpec::default()).expect("default geometry is valid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OpticalElement {
    /// Emits an independent state into the experiment.
    Source(StateVector),
    BeamSplitter { subsystem: String, convention: BeamSplitterConvention },
    /// Reflection phase on one arm.
    Mirror { subsystem: String, label: String, phase: f64 },
    PhaseShifter { subsystem: String, label: String, phase: f64 },
    /// Replaces a `{U, L}` path subsystem by screen bins through a two-source kernel.
    SphericalPropagator { input: String, output: SubsystemSpec, kernel: Vec<[Amplitude; 2]> },
    /// Down-conversion: `|x⟩ ↦ |x⟩_signal |x⟩_idler`.
    Spdc { input: String, signal: String, idler: String },
    /// Adds a `{D1, D2}` detector register: `U ↦ D1`, `L ↦ D2`, with propagation phases.
    WhichPathCoupler { path: String, detector: String, phases: [Amplitude; 2] },
    /// First idler splitters: `U ↦ r·D4 + t·EU`, `L ↦ r·D3 + t·EL`.
    IdlerSplitter { idler: String, output: String, convention: BeamSplitterConvention },
    /// Recombines (or, when absent, just routes) the `EU`/`EL` beams onto D1/D2.
    EraserToggle { input: String, output: String, present: bool, convention: BeamSplitterConvention },
    /// Relabels a two-mode subsystem as detector clicks; `bright` names the mode read as D1.
    PortReadout { mode: String, detector: String, bright: u32 },
}

impl OpticalElement {
    /// Subsystems the element reads.
    pub fn targets(&self) -> Vec<&str> {
        match self {
            OpticalElement::Source(_) => Vec::new(),
            OpticalElement::BeamSplitter { subsystem, .. }
            | OpticalElement::Mirror { subsystem, .. }
            | OpticalElement::PhaseShifter { subsystem, .. } => vec![subsystem],
            OpticalElement::SphericalPropagator { input, .. } => vec![input],
            OpticalElement::Spdc { input, .. } => vec![input],
            OpticalElement::WhichPathCoupler { path, .. } => vec![path],
            OpticalElement::IdlerSplitter { idler, .. } => vec![idler],
            OpticalElement::EraserToggle { input, .. } => vec![input],
            OpticalElement::PortReadout { mode, .. } => vec![mode],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OpticalElement::Source(_) => "source",
            OpticalElement::BeamSplitter { .. } => "beam-splitter",
            OpticalElement::Mirror { .. } => "mirror",
            OpticalElement::PhaseShifter { .. } => "phase-shifter",
            OpticalElement::SphericalPropagator { .. } => "spherical-propagator",
            OpticalElement::Spdc { .. } => "spdc",
            OpticalElement::WhichPathCoupler { .. } => "which-path-coupler",
            OpticalElement::IdlerSplitter { .. } => "idler-splitter",
            OpticalElement::EraserToggle { .. } => "eraser-toggle",
            OpticalElement::PortReadout { .. } => "port-readout",
        }
    }

    /// Applies the element inside a product state.
    pub fn apply(&self, state: &mut ProductState) -> Result<()> {
        match self {
            OpticalElement::Source(s) => state.push_factor(s.clone()),
            _ => state.apply_local(&self.targets(), |f| self.act(f)),
        }
    }

    /// Applies the element to a single state vector.
    pub fn act(&self, s: &StateVector) -> Result<StateVector> {
        match self {
            OpticalElement::Source(src) => s.tensor(src),
            OpticalElement::BeamSplitter { subsystem, convention } => {
                let spec = two_label(s, subsystem)?;
                let m = convention.matrix();
                s.map_subsystems(&[subsystem], vec![spec], |l| {
                    let j = l[0] as usize;
                    vec![(vec![0], m[0][j]), (vec![1], m[1][j])]
                })
            }
            OpticalElement::Mirror { subsystem, label, phase }
            | OpticalElement::PhaseShifter { subsystem, label, phase } => {
                let spec = wrong_space(s, subsystem)?.clone();
                let target = spec.index_of(label)?;
                let shift = cis(*phase);
                s.map_subsystems(&[subsystem], vec![spec], |l| {
                    let a = if l[0] == target { shift } else { Amplitude::new(1.0, 0.0) };
                    vec![(vec![l[0]], a)]
                })
            }
            OpticalElement::SphericalPropagator { input, output, kernel } => {
                path_space(s, input)?;
                if kernel.len() != output.dim() {
                    return Err(Error::WrongSpace("kernel length does not match the bin count".into()));
                }
                let before = s.norm();
                let mapped = s.map_subsystems(&[input], vec![output.clone()], |l| {
                    kernel
                        .iter()
                        .enumerate()
                        .map(|(b, k)| (vec![b as u32], k[l[0] as usize]))
                        .collect()
                })?;
                // Exact isometry on uniform full-period grids; elsewhere
                // rescale so the element keeps the input norm.
                let after = mapped.norm();
                if after == 0.0 {
                    return Err(Error::EmptyState);
                }
                Ok(mapped.scale(Amplitude::new(before / after, 0.0)))
            }
            OpticalElement::Spdc { input, signal, idler } => {
                let spec = path_space(s, input)?;
                let sig = SubsystemSpec::new(signal.clone(), spec.alphabet().to_vec())?;
                let idl = SubsystemSpec::new(idler.clone(), spec.alphabet().to_vec())?;
                s.map_subsystems(&[input], vec![sig, idl], |l| vec![(vec![l[0], l[0]], Amplitude::new(1.0, 0.0))])
            }
            OpticalElement::WhichPathCoupler { path, detector, phases } => {
                let spec = path_space(s, path)?;
                let det = SubsystemSpec::new(detector.clone(), WHICH_PATH_DETECTORS)?;
                s.map_subsystems(&[path], vec![spec, det], |l| vec![(vec![l[0], l[0]], phases[l[0] as usize])])
            }
            OpticalElement::IdlerSplitter { idler, output, convention } => {
                path_space(s, idler)?;
                let ports = SubsystemSpec::new(output.clone(), PORT_LABELS)?;
                let (t, r) = (convention.t, convention.r);
                // PORT_LABELS = [D3, D4, EU, EL]
                s.map_subsystems(&[idler], vec![ports], |l| match l[0] {
                    0 => vec![(vec![1], r), (vec![2], t)],
                    _ => vec![(vec![0], r), (vec![3], t)],
                })
            }
            OpticalElement::EraserToggle { input, output, present, convention } => {
                let spec = wrong_space(s, input)?;
                if spec.alphabet() != PORT_LABELS {
                    return Err(Error::WrongSpace(format!("`{input}` is not an idler port register")));
                }
                let det = SubsystemSpec::new(output.clone(), ERASER_DETECTORS)?;
                let (t, r) = (convention.t, convention.r);
                let one = Amplitude::new(1.0, 0.0);
                let present = *present;
                // ERASER_DETECTORS = [D1, D2, D3, D4]
                s.map_subsystems(&[input], vec![det], |l| match (l[0], present) {
                    (0, _) => vec![(vec![2], one)],
                    (1, _) => vec![(vec![3], one)],
                    (2, true) => vec![(vec![0], t), (vec![1], r)],
                    (3, true) => vec![(vec![0], r), (vec![1], t)],
                    (2, false) => vec![(vec![0], one)],
                    _ => vec![(vec![1], one)],
                })
            }
            OpticalElement::PortReadout { mode, detector, bright } => {
                two_label(s, mode)?;
                let det = SubsystemSpec::new(detector.clone(), WHICH_PATH_DETECTORS)?;
                let bright = *bright;
                s.map_subsystems(&[mode], vec![det], |l| {
                    let click: BasisIndex = vec![u32::from(l[0] != bright)];
                    vec![(click, Amplitude::new(1.0, 0.0))]
                })
            }
        }
    }
}

fn wrong_space<'a>(s: &'a StateVector, name: &str) -> Result<&'a SubsystemSpec> {
    s.space()
        .subsystem(name)
        .map_err(|_| Error::WrongSpace(format!("state has no `{name}` subsystem")))
}

fn two_label(s: &StateVector, name: &str) -> Result<SubsystemSpec> {
    let spec = wrong_space(s, name)?;
    if spec.dim() != 2 {
        return Err(Error::WrongSpace(format!("`{name}` must have exactly two labels")));
    }
    Ok(spec.clone())
}

fn path_space(s: &StateVector, name: &str) -> Result<SubsystemSpec> {
    let spec = wrong_space(s, name)?;
    if spec.alphabet() != [UPPER, LOWER] {
        return Err(Error::WrongSpace(format!("`{name}` must be a {{U, L}} path subsystem")));
    }
    Ok(spec.clone())
}

/// `(|U⟩ + |L⟩)/√2` over a path subsystem called `name`.
pub fn two_path_state(name: &str) -> Result<StateVector> {
    let space = CompositeSpace::new(vec![SubsystemSpec::new(name, [UPPER, LOWER])?])?;
    let a = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    StateVector::from_terms(space, [([UPPER], a), ([LOWER], a)])
}

/// `(|+−⟩ − |−+⟩)/√2` over spin subsystems `a` and `b`.
pub fn singlet_state(a: &str, b: &str) -> Result<StateVector> {
    let space = CompositeSpace::new(vec![SubsystemSpec::new(a, ["+", "-"])?, SubsystemSpec::new(b, ["+", "-"])?])?;
    let amp = FRAC_1_SQRT_2;
    StateVector::from_terms(
        space,
        [(["+", "-"], Amplitude::new(amp, 0.0)), (["-", "+"], Amplitude::new(-amp, 0.0))],
    )
}

pub fn screen_element(input: &str, output: &str, g: &Geometry) -> Result<OpticalElement> {
    Ok(OpticalElement::SphericalPropagator {
        input: input.to_string(),
        output: SubsystemSpec::new(output, g.bin_labels())?,
        kernel: g.screen_kernel()?,
    })
}

/// The two-slit wave on the screen, over a `screen` bin subsystem.
pub fn double_slit_state(g: &Geometry) -> Result<StateVector> {
    let s = two_path_state(PATH)?;
    screen_element(PATH, SCREEN, g)?.act(&s)?.normalize()
}

/// Entangles a `path` subsystem with a `detector` register: `U ↦ U·D1`, `L ↦ L·D2`.
pub fn couple_which_path_detectors(s: &StateVector, g: &Geometry) -> Result<StateVector> {
    OpticalElement::WhichPathCoupler {
        path: PATH.into(),
        detector: DETECTOR.into(),
        phases: g.detector_phases()?,
    }
    .act(s)
}

/// Element sequence for the interferometer: splitter, mirrors, optional arm
/// phase, optional second splitter, detector readout. The second splitter is
/// returned separately so callers can schedule it.
pub struct MachZehnderParts {
    pub before: Vec<OpticalElement>,
    pub second_splitter: OpticalElement,
    pub readout: OpticalElement,
}

pub fn mach_zehnder_parts(convention: BeamSplitterConvention, arm_phase: f64) -> Result<MachZehnderParts> {
    let space = CompositeSpace::new(vec![SubsystemSpec::new(MODE, MODE_LABELS)?])?;
    let source = StateVector::basis(space, &[MODE_LABELS[0]])?;
    let splitter = OpticalElement::BeamSplitter { subsystem: MODE.into(), convention };
    let mut before = vec![
        OpticalElement::Source(source),
        splitter.clone(),
        OpticalElement::Mirror { subsystem: MODE.into(), label: MODE_LABELS[0].into(), phase: 0.0 },
        OpticalElement::Mirror { subsystem: MODE.into(), label: MODE_LABELS[1].into(), phase: 0.0 },
    ];
    if arm_phase != 0.0 {
        before.push(OpticalElement::PhaseShifter {
            subsystem: MODE.into(),
            label: MODE_LABELS[0].into(),
            phase: arm_phase,
        });
    }
    Ok(MachZehnderParts {
        before,
        second_splitter: splitter,
        readout: OpticalElement::PortReadout {
            mode: MODE.into(),
            detector: DETECTOR.into(),
            bright: convention.bright_port(),
        },
    })
}

fn run_elements<'a>(elements: impl IntoIterator<Item = &'a OpticalElement>) -> Result<StateVector> {
    let mut state = ProductState::new();
    for e in elements {
        e.apply(&mut state)?;
    }
    state.to_state()
}

pub fn mach_zehnder_state_with_phase(closed: bool, convention: BeamSplitterConvention, arm_phase: f64) -> Result<StateVector> {
    let parts = mach_zehnder_parts(convention, arm_phase)?;
    let mut elements = parts.before;
    if closed {
        elements.push(parts.second_splitter);
    }
    elements.push(parts.readout);
    run_elements(&elements)
}

/// Detector state after the interferometer; the bright port of the closed setup is D1.
pub fn mach_zehnder_state(closed: bool, convention: BeamSplitterConvention) -> Result<StateVector> {
    mach_zehnder_state_with_phase(closed, convention, 0.0)
}

/// Splits a `slit` superposition into correlated `signal`/`idler` paths.
pub fn spdc_split(s: &StateVector) -> Result<StateVector> {
    OpticalElement::Spdc { input: SLIT.into(), signal: SIGNAL.into(), idler: IDLER.into() }.act(s)
}

pub fn idler_elements(idler: &str, ports: &str, detector: &str, eraser_in: bool, convention: BeamSplitterConvention) -> [OpticalElement; 2] {
    [
        OpticalElement::IdlerSplitter { idler: idler.into(), output: ports.into(), convention },
        OpticalElement::EraserToggle { input: ports.into(), output: detector.into(), present: eraser_in, convention },
    ]
}

/// Routes the `idler` path onto detectors D1–D4, with or without the eraser.
pub fn idler_network(s: &StateVector, eraser_in: bool, convention: BeamSplitterConvention) -> Result<StateVector> {
    let [split, toggle] = idler_elements(IDLER, IDLER_PORTS, DETECTOR, eraser_in, convention);
    toggle.act(&split.act(s)?)
}

/// Replaces the `signal` path by D0 screen bins.
pub fn signal_screen_state(s: &StateVector, g: &Geometry) -> Result<StateVector> {
    screen_element(SIGNAL, D0, g)?.act(s)
}
