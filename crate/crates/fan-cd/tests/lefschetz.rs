use fan_cd::field::{Field, Rational};
use fan_cd::flag::{cd_index_of, interval, CdPolynomial};
use fan_cd::graded::{FreeGradedModule, MonomialMap, MultiDegree};
use fan_cd::lefschetz::lab::{conjecture_lab, run_lefschetz_trials, Experiment};
use fan_cd::lefschetz::{
    adjoint_and_check, cd_index_lefschetz, lefschetz_on_fan, lefschetz_recursion, main_construction, split_mod_xl,
    stalk_lefschetz, Candidate, EngineError, LSampler, NodeModule, RunParams, SamplerRegistry, Split, StepError,
};
use fan_cd::linalg::Mat;
use fan_cd::pairing::{pairing_on_sections, PairingForm};
use fan_cd::poset::{build_named, Family, GradedPoset};
use fan_cd::sheaf::{indecomposable_stalks, FanData, SectionModule};
use rand_chacha::ChaCha8Rng;

fn fan(f: Family, k: usize) -> GradedPoset {
    build_named(f, k).unwrap()
}

fn small() -> Vec<GradedPoset> {
    let mut v = vec![fan(Family::SimplexFan, 1)];
    for m in 3..=6 {
        v.push(fan(Family::PolygonFan, m));
    }
    for f in [Family::SimplexFan, Family::CubeFan, Family::CrosspolyFan] {
        v.push(fan(f, 3));
    }
    v
}

fn params(seed: u64, mode: &str) -> RunParams {
    RunParams { seed, mode: mode.into(), ..RunParams::default() }
}

fn root(p: &GradedPoset) -> NodeModule<Rational> {
    let fd = FanData::new(p.clone()).unwrap();
    let sm = SectionModule::compute_with::<Rational>(&fd).unwrap();
    NodeModule::root(pairing_on_sections(&sm).unwrap(), None)
}

/// Always proposes the zero map.
struct Zero;

impl LSampler<Rational> for Zero {
    fn name(&self) -> &'static str {
        "zero"
    }
    fn description(&self) -> &'static str {
        "the zero map"
    }
    fn sample(&self, _: &NodeModule<Rational>, sp: &Split, _: &mut ChaCha8Rng, _: i64) -> Result<Candidate<Rational>, StepError> {
        Ok(Candidate { sigma: Mat::zeros(sp.g0.len(), sp.g0.len()), ell: None })
    }
}

#[test]
fn every_mode_reproduces_flag_cd() {
    for mode in ["generic", "multiplication", "torus"] {
        for p in small() {
            let out = cd_index_lefschetz(&p, &params(1, mode)).unwrap();
            assert_eq!(out.cd, cd_index_of(&p).unwrap(), "{mode} {}", p.name());
            assert!(out.certificate.descent_failures.is_empty());
            assert!(out.certificate.steps.iter().all(|s| s.hilbert_identity && s.exact && s.self_adjoint));
        }
    }
}

#[test]
fn four_dimensional_fans() {
    for f in [Family::SimplexFan, Family::CubeFan, Family::CrosspolyFan] {
        let p = fan(f, 4);
        let expected = cd_index_of(&p).unwrap();
        for mode in ["generic", "multiplication"] {
            let out = cd_index_lefschetz(&p, &params(2, mode)).unwrap();
            assert_eq!(out.cd, expected, "{mode} {}", p.name());
            assert_eq!(out.certificate.arith, "modular");
        }
    }
}

#[test]
fn split_examples() {
    let m = FreeGradedModule::new(1, 2, vec![0, 0b10, 0b100, 0b110]);
    let node = NodeModule::<Rational>::new(PairingForm::new(m, Mat::zeros(4, 4)), None);
    let sp = split_mod_xl(&node);
    assert_eq!(sp.g0, vec![0, 2]);
    assert_eq!(sp.g1, vec![1, 3]);
    let empty = NodeModule::<Rational>::new(PairingForm::new(FreeGradedModule::new(1, 2, vec![]), Mat::zeros(0, 0)), None);
    let sp = split_mod_xl(&empty);
    assert!(sp.g0.is_empty() && sp.g1.is_empty());
}

fn hyperbolic(phi: &[Vec<i64>]) -> (PairingForm<Rational>, MonomialMap<Rational>) {
    let m = FreeGradedModule::new(1, 1, vec![0, 0, 0b10, 0b10]);
    let p = Mat::from_i64_rows(&[vec![0, 0, 1, 0], vec![0, 0, 0, 1], vec![1, 0, 0, 0], vec![0, 1, 0, 0]]);
    let mut l = Mat::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            l.set(2 + i, j, Rational::from_i64(phi[i][j]));
        }
    }
    (PairingForm::new(m.clone(), p), MonomialMap::new(m.clone(), m, MultiDegree::e(1), l))
}

#[test]
fn adjoint_examples() {
    let (form, _) = hyperbolic(&[vec![1, 0], vec![0, 1]]);
    let x = MonomialMap::x_action(&form.module, 1);
    assert!(adjoint_and_check(&form, &x).unwrap().1);

    let (form, l) = hyperbolic(&[vec![1, 2], vec![3, 1]]);
    let (adj, same) = adjoint_and_check(&form, &l).unwrap();
    assert!(!same);
    let half = Rational::new(1.into(), 2.into());
    let sym = MonomialMap::new(l.source.clone(), l.target.clone(), l.shift.clone(), l.matrix.add(&adj).scale(&half));
    assert!(adjoint_and_check(&form, &sym).unwrap().1);
}

#[test]
fn zero_map_fails_injectivity() {
    let node = root(&fan(Family::PolygonFan, 4));
    let sp = split_mod_xl(&node);
    let cand = Candidate { sigma: Mat::zeros(sp.g0.len(), sp.g0.len()), ell: None };
    assert!(matches!(main_construction(&node, &sp, &cand), Err(StepError::AssumptionFailed(_))));
}

#[test]
fn first_step_dimensions() {
    let reg = SamplerRegistry::<Rational>::standard();
    let one = lefschetz_recursion(root(&fan(Family::SimplexFan, 1)), &params(3, "generic"), &reg).unwrap();
    let d = one.certificate.steps[0].dims;
    assert_eq!((d.q, d.c), (0, 1));
    for m in 3..=8 {
        let out = lefschetz_recursion(root(&fan(Family::PolygonFan, m)), &params(3, "generic"), &reg).unwrap();
        let d = out.certificate.steps[0].dims;
        assert_eq!((d.m0, d.m1, d.q, d.c), (m, m, m - 2, 2), "polygon {m}");
        assert_eq!(out.cd, CdPolynomial::from_terms(2, &[("cc", 1), ("d", m as i64 - 2)]));
    }
}

#[test]
fn multiplication_needs_sections() {
    let reg = SamplerRegistry::<Rational>::standard();
    let err = lefschetz_recursion(root(&fan(Family::PolygonFan, 4)), &params(0, "multiplication"), &reg).unwrap_err();
    assert!(matches!(err, EngineError::ExhaustedRetries { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn registered_sampler_is_selected_by_name() {
    let mut reg = SamplerRegistry::<Rational>::standard();
    reg.register(Box::new(Zero));
    assert_eq!(reg.names(), vec!["generic", "multiplication", "torus", "zero"]);
    let fd = FanData::new(fan(Family::PolygonFan, 5)).unwrap();
    let err = lefschetz_on_fan(&fd, &RunParams { retries: 3, ..params(0, "zero") }, &reg).unwrap_err();
    match err {
        EngineError::ExhaustedRetries { prefix, attempts, .. } => assert_eq!((prefix.as_str(), attempts), ("", 3)),
        e => panic!("{e}"),
    }
    let unknown = lefschetz_on_fan(&fd, &params(0, "nope"), &reg).unwrap_err();
    assert!(matches!(unknown, EngineError::UnknownMode(_)));
}

#[test]
fn stalk_decompositions_match_boundaries() {
    for f in [Family::SimplexFan, Family::CubeFan, Family::CrosspolyFan] {
        let fd = FanData::new(fan(f, 3)).unwrap();
        let sh = indecomposable_stalks(&fd, false).unwrap();
        for mode in ["generic", "multiplication", "torus"] {
            for (&s, st) in &sh.stalks {
                if st.dim < 2 {
                    continue;
                }
                let out = stalk_lefschetz(&fd, &sh, s, &params(5, mode)).unwrap();
                assert_eq!(out.cd, cd_index_of(&fd.poset.boundary(s).unwrap()).unwrap());
            }
        }
    }
}

#[test]
fn certificates_are_reproducible() {
    let p = fan(Family::CubeFan, 3);
    let a = serde_json::to_string(&cd_index_lefschetz(&p, &params(11, "torus")).unwrap().certificate).unwrap();
    let b = serde_json::to_string(&cd_index_lefschetz(&p, &params(11, "torus")).unwrap().certificate).unwrap();
    assert_eq!(a, b);
    let c = serde_json::to_string(&cd_index_lefschetz(&p, &params(12, "torus")).unwrap().certificate).unwrap();
    assert_ne!(a, c);
}

#[test]
fn lab_on_a_square() {
    let p = fan(Family::PolygonFan, 4);
    let rep = conjecture_lab(Some(&p), Experiment::Lefschetz, 20, &params(1, "multiplication"), 12).unwrap();
    assert_eq!((rep.successes, rep.failures), (20, 0));
    assert!(rep.counterexample.is_none());
    assert_eq!(rep.exit_code(), 0);

    let empty = conjecture_lab(Some(&p), Experiment::Lefschetz, 0, &params(1, "multiplication"), 12).unwrap();
    assert_eq!(empty.to_json(), serde_json::json!({ "trials": 0 }));
}

#[test]
fn lab_bundles_an_all_fail_run() {
    let mut reg = SamplerRegistry::<Rational>::standard();
    reg.register(Box::new(Zero));
    let runner = |p: &GradedPoset, rp: &RunParams| lefschetz_on_fan::<Rational>(&FanData::new(p.clone())?, rp, &reg);
    let p = fan(Family::PolygonFan, 3);
    let rep = run_lefschetz_trials(&p, 4, &RunParams { retries: 2, ..params(9, "zero") }, &runner).unwrap();
    assert!(rep.all_failed());
    assert_eq!(rep.exit_code(), 3);
    let bundle = rep.counterexample.as_ref().unwrap();
    assert_eq!(bundle.seeds, vec![9, 10, 11, 12]);
    assert!(bundle.poset.is_some());
}

#[test]
fn transversality_lab_reports_every_instance() {
    let rep = conjecture_lab(None, Experiment::Transversality, 30, &params(0, "torus"), 12).unwrap();
    assert_eq!(rep.successes + rep.failures + rep.skipped, 30);
    assert_eq!(rep.records.len(), 30);
}

#[test]
fn hilbert_ranges_are_absolute() {
    let out = cd_index_lefschetz(&fan(Family::SimplexFan, 3), &params(4, "generic")).unwrap();
    for s in &out.certificate.steps {
        let [l, m] = s.range;
        assert!(l >= 1 && m == 3 && interval(l, m) != 0);
    }
}
