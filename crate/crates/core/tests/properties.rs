use std::collections::BTreeMap;

use dcsim::experiments::{build, ExperimentConfig};
use dcsim::optics::{self, BeamSplitterConvention, Geometry, OpticalElement};
use dcsim::semantics::{exact_event_distribution, sample_index};
use dcsim::statevec::{Amplitude, CompositeSpace, StateVector, SubsystemSpec};
use dcsim::experiments::Semantics;
use dcsim::stats;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn space() -> CompositeSpace {
    CompositeSpace::new(vec![
        SubsystemSpec::new("path", ["U", "L"]).unwrap(),
        SubsystemSpec::new("q", ["a", "b", "c"]).unwrap(),
    ])
    .unwrap()
}

fn amps(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

fn state_from(space: CompositeSpace, raw: &[(f64, f64)]) -> Option<StateVector> {
    let mut terms = Vec::new();
    let mut i = 0;
    for p in ["U", "L"] {
        for q in ["a", "b", "c"] {
            terms.push(([p, q], Amplitude::new(raw[i].0, raw[i].1)));
            i += 1;
        }
    }
    let s = StateVector::from_terms(space, terms).ok()?;
    if s.norm() < 1e-3 {
        return None;
    }
    s.normalize().ok()
}

fn path_state(raw: &[(f64, f64)]) -> Option<StateVector> {
    let sp = CompositeSpace::new(vec![SubsystemSpec::new("path", ["U", "L"]).unwrap()]).unwrap();
    let s = StateVector::from_terms(sp, [(["U"], Amplitude::new(raw[0].0, raw[0].1)), (["L"], Amplitude::new(raw[1].0, raw[1].1))]).ok()?;
    if s.norm() < 1e-3 {
        return None;
    }
    s.normalize().ok()
}

fn elements() -> Vec<OpticalElement> {
    let conv = BeamSplitterConvention::symmetric();
    let g = Geometry::default();
    vec![
        OpticalElement::BeamSplitter { subsystem: "path".into(), convention: conv },
        OpticalElement::PhaseShifter { subsystem: "path".into(), label: "L".into(), phase: 0.7 },
        optics::screen_element("path", "screen", &g).unwrap(),
        OpticalElement::WhichPathCoupler { path: "path".into(), detector: "detector".into(), phases: g.detector_phases().unwrap() },
        OpticalElement::Spdc { input: "path".into(), signal: "signal".into(), idler: "idler".into() },
        OpticalElement::IdlerSplitter { idler: "path".into(), output: "ports".into(), convention: conv },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn born_sums_to_one(raw in amps(6)) {
        let Some(s) = state_from(space(), &raw) else { return Ok(()) };
        for sel in [vec!["path"], vec!["q"], vec!["path", "q"], vec!["q", "path"]] {
            let t = s.born_distribution(&sel).unwrap();
            prop_assert!((t.total() - 1.0).abs() <= TOL);
            prop_assert!(t.entries().all(|(_, p)| p >= 0.0));
        }
    }

    #[test]
    fn chain_rule(raw in amps(6)) {
        let Some(s) = state_from(space(), &raw) else { return Ok(()) };
        let joint = s.born_distribution(&["path", "q"]).unwrap();
        let pa = s.born_distribution(&["path"]).unwrap();
        for a in ["U", "L"] {
            let p = pa.prob(&[a]).unwrap();
            if p < 1e-9 {
                continue;
            }
            let cond = s.condition("path", a).unwrap();
            let pb = cond.born_distribution(&["q"]).unwrap();
            for b in ["a", "b", "c"] {
                prop_assert!((joint.prob(&[a, b]).unwrap() - p * pb.prob(&[b]).unwrap()).abs() <= TOL);
            }
        }
    }

    #[test]
    fn global_phase_is_invisible(raw in amps(6), phi in -10.0f64..10.0) {
        let Some(s) = state_from(space(), &raw) else { return Ok(()) };
        let t = s.scale(Amplitude::from_polar(1.0, phi));
        let d = s.born_distribution(&["path", "q"]).unwrap().max_abs_diff(&t.born_distribution(&["path", "q"]).unwrap()).unwrap();
        prop_assert!(d <= TOL);
    }

    #[test]
    fn projection_is_a_point_mass(raw in amps(6), pick in 0usize..3) {
        let Some(s) = state_from(space(), &raw) else { return Ok(()) };
        let label = ["a", "b", "c"][pick];
        if s.born_distribution(&["q"]).unwrap().prob(&[label]).unwrap() < 1e-9 {
            return Ok(());
        }
        let p = s.project("q", label).unwrap();
        prop_assert!((p.norm() - 1.0).abs() <= TOL);
        prop_assert!((p.born_distribution(&["q"]).unwrap().prob(&[label]).unwrap() - 1.0).abs() <= TOL);
    }

    #[test]
    fn elements_preserve_norm(raw in amps(2)) {
        let Some(s) = path_state(&raw) else { return Ok(()) };
        for e in elements() {
            let out = e.act(&s).unwrap();
            prop_assert!((out.norm() - 1.0).abs() <= TOL, "{} changed the norm", e.name());
        }
    }

    #[test]
    fn elements_are_linear(x in amps(2), y in amps(2), alpha in (-1.0f64..1.0, -1.0f64..1.0)) {
        let (Some(sx), Some(sy)) = (path_state(&x), path_state(&y)) else { return Ok(()) };
        let a = Amplitude::new(alpha.0, alpha.1);
        let combo = sx.scale(a).add(&sy).unwrap();
        if combo.norm() < 1e-3 {
            return Ok(());
        }
        for e in elements() {
            let lhs = e.act(&combo).unwrap();
            let rhs = e.act(&sx).unwrap().scale(a).add(&e.act(&sy).unwrap()).unwrap();
            let diff = lhs.add(&rhs.scale(Amplitude::new(-1.0, 0.0))).unwrap();
            prop_assert!(diff.norm() <= 1e-12, "{} is not linear", e.name());
        }
    }

    #[test]
    fn sampling_picks_supported_outcomes(ws in prop::collection::vec(0.0f64..1.0, 1..8), u in 0.0f64..1.0) {
        let total: f64 = ws.iter().sum();
        if total <= 1e-9 {
            return Ok(());
        }
        let weights: Vec<(u32, f64)> = ws.iter().enumerate().map(|(i, w)| (i as u32, w / total)).collect();
        let i = sample_index(&weights, u);
        prop_assert!(i < weights.len());
        prop_assert!(weights[i].1 > 0.0);
    }

    #[test]
    fn fringe_fit_recovers_parameters(v in 0.0f64..1.0, phi in -3.1f64..3.1, base in 0.1f64..10.0) {
        let g = Geometry::default();
        let values: Vec<f64> = g.bin_phases().iter().map(|x| base * (1.0 + v * (x + phi).cos())).collect();
        let f = stats::fringe_fit(&values, &g).unwrap();
        prop_assert!((f.visibility - v).abs() <= 1e-9);
        prop_assert!((f.baseline - base).abs() <= 1e-9 * base);
        if v > 1e-6 {
            prop_assert!(stats::phase_difference(f.phase, phi).abs() <= 1e-6);
        }
    }

    #[test]
    fn delayed_choice_tag_never_changes_statistics(pick in 0usize..3, t in 1u64..=8) {
        let base = [ExperimentConfig::double_slit(true), ExperimentConfig::mach_zehnder(true), ExperimentConfig::eraser(true)][pick].clone();
        let Ok(cfg) = base.clone().with_choice_time(t) else { return Ok(()) };
        let s0 = build(&base).unwrap();
        let s1 = build(&cfg).unwrap();
        let d0 = s0.final_product().unwrap().born_distribution(&s0.event_subsystems()).unwrap();
        let d1 = s1.final_product().unwrap().born_distribution(&s1.event_subsystems()).unwrap();
        prop_assert!(d0.max_abs_diff(&d1).unwrap() <= TOL);
    }

    #[test]
    fn run_trials_is_deterministic(seed in any::<u64>(), pick in 0usize..4) {
        let cfg = ExperimentConfig::of_kind(dcsim::experiments::ExperimentKind::ALL[pick]).with_shots(64).with_seed(seed);
        prop_assert_eq!(stats::run_trials(&cfg).unwrap(), stats::run_trials(&cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn empirical_converges_to_exact(seed in any::<u64>(), pick in 0usize..4, convivial in any::<bool>()) {
        let mode = if convivial { Semantics::Convivial } else { Semantics::Collapse };
        let n = 4000;
        let cfg = ExperimentConfig::of_kind(dcsim::experiments::ExperimentKind::ALL[pick])
            .with_shots(n)
            .with_seed(seed)
            .with_semantics(mode);
        let sched = build(&cfg).unwrap();
        let exact = exact_event_distribution(&sched.final_product().unwrap(), &sched.events, mode).unwrap();
        let counts = stats::run_trials(&cfg).unwrap().outcome_counts();
        let k = exact.values().filter(|p| **p > 0.0).count();
        prop_assert!(stats::total_variation(&counts, &exact) <= stats::tv_tolerance(k, n));
    }
}

#[test]
fn law_of_total_probability_on_eraser_tables() {
    for eraser_in in [true, false] {
        let sched = build(&ExperimentConfig::eraser(eraser_in)).unwrap();
        let table = stats::exact_joint(&sched, optics::D0, optics::DETECTOR).unwrap();
        let p_det = table.column_sums();
        let marginal = table.row_sums();
        let mut recombined = vec![0.0; marginal.len()];
        for (j, d) in table.labels_b.iter().enumerate() {
            let h = stats::exact_conditional_histogram(&table, d).unwrap();
            for (r, v) in recombined.iter_mut().zip(&h.values) {
                *r += p_det[j] * v;
            }
        }
        for (r, m) in recombined.iter().zip(&marginal) {
            assert!((r - m).abs() <= TOL);
        }
    }
}

#[test]
fn coincidence_counts_match_detector_marginals() {
    let n = 20_000;
    let r = stats::run_trials(&ExperimentConfig::eraser(true).with_shots(n).with_seed(2024)).unwrap();
    let mut seen = BTreeMap::new();
    for d in optics::ERASER_DETECTORS {
        let c = stats::coincidence_histogram(&r, d).unwrap().total() as usize;
        assert!(stats::binomial_z(c, n, 0.25) <= 4.0, "{d}: {c}");
        seen.insert(d, c);
    }
    assert_eq!(seen.values().sum::<usize>(), n);
}
