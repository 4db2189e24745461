//! The full invariant suite for one fan.

use crate::field::Rational;
use crate::flag::{cd_index_of, flag_h, interval, subsets};
use crate::lefschetz::{cd_index_lefschetz, stalk_lefschetz, EngineError, RunParams};
use crate::pairing::{all_stalk_pairings, compatibility_check, pairing_on_sections};
use crate::poset::GradedPoset;
use crate::sheaf::{indecomposable_stalks, FanData, Scope, SectionModule};
use serde::Serialize;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub poset: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Largest cone dimension for which stalkwise decompositions are run.
pub const STALK_DIM_CAP: usize = 4;

fn push(checks: &mut Vec<Check>, name: &'static str, passed: bool, detail: impl Into<String>) {
    checks.push(Check { name, passed, detail: detail.into() });
}

/// Runs every check; validation failures stop early with a single entry.
/// Internal breaches of the decomposition propagate as errors.
pub fn run_suite(p: &GradedPoset, params: &RunParams) -> Result<VerifyReport, EngineError> {
    let mut checks = Vec::new();
    let validation = p.validate();
    push(&mut checks, "validation", validation.all_passed(), validation.failure_summary());
    if !validation.all_passed() {
        return Ok(VerifyReport { poset: p.name().into(), passed: false, checks });
    }
    let fan = FanData::new(p.clone())?;
    let n = fan.n();
    let h = flag_h(p)?;
    push(&mut checks, "flag_h_duality", h.is_self_dual(), "h_S = h_(S^c)");

    let sm = SectionModule::compute(&fan)?;
    let bad: Vec<String> = subsets(interval(1, n))
        .into_iter()
        .filter(|&s| sm.reduced_dim(s) as i64 != h.get(s))
        .map(crate::flag::set_label)
        .collect();
    push(&mut checks, "section_dims_match_flag_h", bad.is_empty(), bad.join(" "));

    match pairing_on_sections(&sm) {
        Ok(_) => push(&mut checks, "section_pairing", true, "divisible and nondegenerate"),
        Err(e) => push(&mut checks, "section_pairing", false, e.to_string()),
    }

    let sheaf = indecomposable_stalks(&fan, false)?;
    match sheaf.matches_pushforward(&fan) {
        Ok(()) => push(&mut checks, "stalks_match_pushforward", true, ""),
        Err(e) => push(&mut checks, "stalks_match_pushforward", false, e),
    }
    match all_stalk_pairings(&fan, &sheaf) {
        Ok(pairings) => {
            push(&mut checks, "stalk_pairings", true, format!("{} cones", pairings.len()));
            let failed: Vec<String> = pairings
                .keys()
                .map(|&s| compatibility_check(&fan, &sheaf, &pairings, s, None))
                .filter(|r| !r.passed)
                .map(|r| r.cone)
                .collect();
            push(&mut checks, "pairing_compatibility", failed.is_empty(), failed.join(" "));
        }
        Err(e) => push(&mut checks, "stalk_pairings", false, e.to_string()),
    }

    let local = sheaf.to_flag_sheaf::<Rational>(&fan, 1);
    let flab = local.check_minimally_flabby(&fan);
    let nonexact: Vec<String> = flab.cones.iter().filter(|c| !c.exact).map(|c| c.cone.clone()).collect();
    push(&mut checks, "minimally_flabby", flab.minimally_flabby && !flab.decomposable, "");
    push(&mut checks, "boundary_complexes_exact", nonexact.is_empty(), nonexact.join(" "));

    let with_top = indecomposable_stalks(&fan, true)?;
    let global = with_top.to_flag_sheaf::<Rational>(&fan, 0);
    let top = &with_top.stalks[&fan.top()];
    let mut bad_degrees = Vec::new();
    for t in subsets(interval(1, n)) {
        let cx = global.cellular_complex(&fan, Scope::Global, t)?;
        let hh = cx.cohomology();
        if !cx.is_complex() || hh[0] != top.module.component_dim(t) || hh[1..].iter().any(|&x| x != 0) {
            bad_degrees.push(crate::flag::set_label(t));
        }
    }
    push(&mut checks, "global_cellular_exactness", bad_degrees.is_empty(), bad_degrees.join(" "));

    let mut stalk_bad = Vec::new();
    let mut stalk_count = 0;
    for (&s, st) in &sheaf.stalks {
        if st.dim < 2 || st.dim > STALK_DIM_CAP {
            continue;
        }
        stalk_count += 1;
        let expected = cd_index_of(&p.boundary(s)?)?;
        let out = stalk_lefschetz(&fan, &sheaf, s, params)?;
        if out.cd != expected {
            stalk_bad.push(p.id(s).to_string());
        }
    }
    push(&mut checks, "stalk_decompositions", stalk_bad.is_empty(), format!("{stalk_count} cones {}", stalk_bad.join(" ")));

    let flag_cd = cd_index_of(p)?;
    let lef = cd_index_lefschetz(p, params)?;
    let agree = lef.cd == flag_cd;
    push(&mut checks, "methods_agree", agree, format!("flag {flag_cd}, lefschetz {}", lef.cd));
    push(&mut checks, "cd_nonnegative", flag_cd.is_nonnegative(), flag_cd.to_string());

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { poset: p.name().into(), passed, checks })
}
