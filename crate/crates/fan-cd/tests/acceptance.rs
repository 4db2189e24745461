//! Acceptance run: one PASS/FAIL line per criterion; exits nonzero on any FAIL.

use fan_cd::field::{int, Rational};
use fan_cd::flag::{cd_index_of, cd_words, flag_h, interval, phi_expand, subsets, varset, CdPolynomial, SquarefreePoly};
use fan_cd::lefschetz::lab::{conjecture_lab, run_lefschetz_trials, Experiment};
use fan_cd::lefschetz::transversal::{is_transverse, random_instance, torus_transverse_witness, TransversalMode};
use fan_cd::lefschetz::{cd_index_lefschetz, lefschetz_on_fan, Candidate, LSampler, NodeModule, RunParams, SamplerRegistry, Split, StepError};
use fan_cd::linalg::Mat;
use fan_cd::pairing::{all_stalk_pairings, compatibility_check, pairing_on_sections};
use fan_cd::poset::{build_named, Family, GradedPoset};
use fan_cd::sheaf::{indecomposable_stalks, FanData, Scope, SectionModule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn fan(f: Family, k: usize) -> GradedPoset {
    build_named(f, k).unwrap()
}

/// Golden fans with their frozen cd-indices.
fn golden() -> Vec<(GradedPoset, CdPolynomial)> {
    let mut v = vec![(fan(Family::SimplexFan, 1), CdPolynomial::from_terms(1, &[("c", 1)]))];
    for m in 3..=8 {
        v.push((fan(Family::PolygonFan, m), CdPolynomial::from_terms(2, &[("cc", 1), ("d", m as i64 - 2)])));
    }
    v.push((fan(Family::SimplexFan, 3), CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 2), ("dc", 2)])));
    v.push((fan(Family::CubeFan, 3), CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 4), ("dc", 6)])));
    v.push((fan(Family::CrosspolyFan, 3), CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 6), ("dc", 4)])));
    v.push((
        fan(Family::SimplexFan, 4),
        CdPolynomial::from_terms(4, &[("cccc", 1), ("ccd", 3), ("cdc", 5), ("dcc", 3), ("dd", 4)]),
    ));
    v.push((
        fan(Family::CubeFan, 4),
        CdPolynomial::from_terms(4, &[("cccc", 1), ("ccd", 6), ("cdc", 16), ("dcc", 14), ("dd", 20)]),
    ));
    v
}

fn lin(n: usize, terms: &[usize], constant: bool) -> SquarefreePoly {
    let mut p = if constant { SquarefreePoly::one(n) } else { SquarefreePoly::zero(n) };
    for &i in terms {
        p = p.add(&SquarefreePoly::monomial(n, varset(&[i]), int(1)));
    }
    p
}

fn phi_table() -> Outcome {
    let t = Instant::now();
    let ccc = lin(3, &[1], true).mul_disjoint(&lin(3, &[2], true)).mul_disjoint(&lin(3, &[3], true));
    let cd = lin(3, &[1], true).mul_disjoint(&lin(3, &[2, 3], false));
    let dc = lin(3, &[1, 2], false).mul_disjoint(&lin(3, &[3], true));
    let ok = cd_words(3) == ["ccc", "cd", "dc"]
        && phi_expand("ccc", 1).coeffs == ccc.coeffs
        && phi_expand("cd", 1).coeffs == cd.coeffs
        && phi_expand("dc", 1).coeffs == dc.coeffs;
    let dt = t.elapsed();
    if ok {
        Ok(format!("3 words, {dt:?}"))
    } else {
        Err("expansion mismatch".into())
    }
}

fn golden_both_paths(g: &[(GradedPoset, CdPolynomial)]) -> Outcome {
    let mut slowest = Duration::ZERO;
    for (p, expected) in g {
        let t = Instant::now();
        let flag = cd_index_of(p).map_err(|e| e.to_string())?;
        let lef = cd_index_lefschetz(p, &RunParams::default()).map_err(|e| format!("{}: {e}", p.name()))?;
        let dt = t.elapsed();
        slowest = slowest.max(dt);
        if &flag != expected || &lef.cd != expected {
            return Err(format!("{}: flag {flag}, lefschetz {}, expected {expected}", p.name(), lef.cd));
        }
        if dt > Duration::from_secs(60) {
            return Err(format!("{} took {dt:?}", p.name()));
        }
    }
    Ok(format!("{} fans, slowest {slowest:?}", g.len()))
}

fn seeds_one_to_ten(g: &[(GradedPoset, CdPolynomial)]) -> Outcome {
    let mut steps = 0;
    for (p, expected) in g {
        for seed in 1..=10 {
            let out = cd_index_lefschetz(p, &RunParams { seed, ..RunParams::default() }).map_err(|e| format!("{} seed {seed}: {e}", p.name()))?;
            let c = &out.certificate;
            if &out.cd != expected || !c.hilbert_matches || !c.steps.iter().all(|s| s.hilbert_identity) {
                return Err(format!("{} seed {seed}: certificate check failed", p.name()));
            }
            steps += c.steps.len();
        }
    }
    Ok(format!("{} runs, {steps} steps", g.len() * 10))
}

fn nonnegative(g: &[(GradedPoset, CdPolynomial)]) -> Outcome {
    for (p, _) in g {
        let flag = cd_index_of(p).map_err(|e| e.to_string())?;
        let lef = cd_index_lefschetz(p, &RunParams { seed: 3, mode: "torus".into(), ..RunParams::default() }).map_err(|e| e.to_string())?;
        if !flag.is_nonnegative() || !lef.cd.is_nonnegative() || lef.certificate.leaves.iter().any(|l| l.dim == 0) {
            return Err(p.name().into());
        }
    }
    Ok(format!("{} fans", g.len()))
}

fn duality_and_dims(g: &[(GradedPoset, CdPolynomial)]) -> Outcome {
    for (p, _) in g {
        let h = flag_h(p).map_err(|e| e.to_string())?;
        if !h.is_self_dual() {
            return Err(format!("{}: h not self-dual", p.name()));
        }
        let fd = FanData::new(p.clone()).map_err(|e| e.to_string())?;
        let sm = SectionModule::compute(&fd).map_err(|e| e.to_string())?;
        for s in subsets(interval(1, fd.n())) {
            if sm.reduced_dim(s) as i64 != h.get(s) {
                return Err(format!("{}: dimension mismatch at {s:b}", p.name()));
            }
        }
    }
    Ok(format!("{} fans", g.len()))
}

fn pairing_suite(g: &[(GradedPoset, CdPolynomial)]) -> Outcome {
    let mut cones = 0;
    for (p, _) in g {
        let fd = FanData::new(p.clone()).map_err(|e| e.to_string())?;
        let sm = SectionModule::compute(&fd).map_err(|e| e.to_string())?;
        pairing_on_sections(&sm).map_err(|e| format!("{}: {e}", p.name()))?;
        let sh = indecomposable_stalks(&fd, false).map_err(|e| e.to_string())?;
        let pairings = all_stalk_pairings(&fd, &sh).map_err(|e| format!("{}: {e}", p.name()))?;
        for &s in pairings.keys() {
            let r = compatibility_check(&fd, &sh, &pairings, s, None);
            if !r.passed {
                return Err(format!("{}: compatibility fails at {}", p.name(), r.cone));
            }
            cones += 1;
        }
    }
    Ok(format!("{cones} cones"))
}

fn cellular_exactness(g: &[(GradedPoset, CdPolynomial)]) -> Outcome {
    let mut complexes = 0;
    for (p, _) in g {
        let fd = FanData::new(p.clone()).map_err(|e| e.to_string())?;
        let sh = indecomposable_stalks(&fd, true).map_err(|e| e.to_string())?;
        let global = sh.to_flag_sheaf::<Rational>(&fd, 0);
        let top = &sh.stalks[&fd.top()];
        for t in subsets(interval(1, fd.n())) {
            let cx = global.cellular_complex(&fd, Scope::Global, t).map_err(|e| e.to_string())?;
            let h = cx.cohomology();
            if !cx.is_complex() || h[0] != top.module.component_dim(t) || h[1..].iter().any(|&x| x != 0) {
                return Err(format!("{}: global complex in degree {t:b}", p.name()));
            }
            complexes += 1;
        }
        let local = indecomposable_stalks(&fd, false).map_err(|e| e.to_string())?.to_flag_sheaf::<Rational>(&fd, 1);
        let rep = local.check_minimally_flabby(&fd);
        if !rep.minimally_flabby || rep.cones.iter().any(|c| !c.exact) {
            return Err(format!("{}: boundary complexes", p.name()));
        }
        complexes += rep.cones.len();
    }
    Ok(format!("{complexes} complexes"))
}

fn transversality() -> Outcome {
    let mut early = 0;
    for i in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let inst = random_instance(&mut rng, 12);
        if inst.dim() > 12 {
            return Err(format!("instance {i} too large"));
        }
        let w = torus_transverse_witness(&inst, TransversalMode::PerCoordinate, &mut rng, 1 << 16, 2).map_err(|e| e.to_string())?;
        if let Some(t) = &w.weights {
            if !is_transverse(&inst, t) {
                return Err(format!("instance {i}: witness fails the rank check"));
            }
            early += 1;
        }
    }
    if early >= 99 {
        Ok(format!("{early}/100 witnessed within two samples"))
    } else {
        Err(format!("only {early}/100"))
    }
}

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

fn lab_smoke() -> Outcome {
    let mut targets: Vec<GradedPoset> = (3..=6).map(|m| fan(Family::PolygonFan, m)).collect();
    targets.push(fan(Family::SimplexFan, 3));
    let params = RunParams { seed: 1, mode: "multiplication".into(), ..RunParams::default() };
    let mut summary = Vec::new();
    for p in &targets {
        let rep = conjecture_lab(Some(p), Experiment::Lefschetz, 20, &params, 12).map_err(|e| e.to_string())?;
        if rep.records.len() != 20 || rep.successes + rep.failures != 20 {
            return Err(format!("{}: incomplete report", p.name()));
        }
        if rep.all_failed() != (rep.exit_code() == 3) || rep.all_failed() != rep.counterexample.is_some() {
            return Err(format!("{}: exit code and bundle disagree", p.name()));
        }
        summary.push(format!("{}:{}/20", p.name(), rep.successes));
    }
    let mut reg = SamplerRegistry::<Rational>::standard();
    reg.register(Box::new(Zero));
    let runner = |p: &GradedPoset, rp: &RunParams| lefschetz_on_fan::<Rational>(&FanData::new(p.clone())?, rp, &reg);
    let forced = run_lefschetz_trials(&targets[0], 20, &RunParams { mode: "zero".into(), retries: 2, ..params }, &runner)
        .map_err(|e| e.to_string())?;
    let bundle = serde_json::to_string(&forced.counterexample).map_err(|e| e.to_string())?;
    if !(forced.all_failed() && forced.exit_code() == 3 && bundle.contains("\"seeds\"")) {
        return Err("forced all-fail run not bundled".into());
    }
    Ok(format!("{}; forced all-fail exits 3 with bundle", summary.join(" ")))
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_fan-cd"))
            .args(["lefschetz", "--family", "cube", "--dim", "3", "--seed", "99", "--mode", "multiplication"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() || a.stdout != b.stdout {
        return Err("CLI certificates differ".into());
    }
    let p = fan(Family::SimplexFan, 4);
    let cert = |seed| {
        cd_index_lefschetz(&p, &RunParams { seed, ..RunParams::default() })
            .map(|o| serde_json::to_string(&o.certificate).unwrap())
            .map_err(|e| e.to_string())
    };
    if cert(5)? != cert(5)? {
        return Err("library certificates differ".into());
    }
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() {
    let g = golden();
    let upto4: Vec<_> = g.iter().filter(|(p, _)| p.rank_n() <= 4).cloned().collect();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("phi table", Box::new(phi_table)),
        ("golden cd-index, both paths", Box::new(|| golden_both_paths(&g))),
        ("decomposition for seeds 1..10", Box::new(|| seeds_one_to_ten(&g))),
        ("nonnegative integer coefficients", Box::new(|| nonnegative(&g))),
        ("duality and section dimensions", Box::new(|| duality_and_dims(&g))),
        ("pairing suite", Box::new(|| pairing_suite(&upto4))),
        ("cellular exactness", Box::new(|| cellular_exactness(&upto4))),
        ("transversality witnesses", Box::new(transversality)),
        ("lab smoke", Box::new(lab_smoke)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match f() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}; {:.1?})", i + 1, t.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
