use super::construction::{main_construction, split_mod_xl, StepDims};
use super::sampler::SamplerRegistry;
use super::{EngineError, NodeModule, RootSections, StepError};
use crate::field::{Field, Fp, Rational};
use crate::flag::{CdPolynomial, CdTerm};
use crate::pairing::{pairing_on_sections, stalk_pairing};
use crate::poset::GradedPoset;
use crate::sheaf::{to_field, FanData, IndecomposableSheaf, SectionModule, RATIONAL_LIMIT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunParams {
    pub seed: u64,
    pub retries: usize,
    pub entry_bound: i64,
    pub mode: String,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams { seed: 0, retries: 8, entry_bound: 10_000, mode: "generic".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub prefix: String,
    pub range: [usize; 2],
    pub dims: StepDims,
    pub hilbert_identity: bool,
    pub self_adjoint: bool,
    pub exact: bool,
    pub attempts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeafRecord {
    pub word: String,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub seed: u64,
    pub mode: String,
    pub arith: String,
    pub root_hilbert: BTreeMap<String, String>,
    pub steps: Vec<StepRecord>,
    pub cd_index: Vec<CdTerm>,
    pub leaves: Vec<LeafRecord>,
    pub retries: usize,
    pub descent_failures: Vec<String>,
    pub hilbert_matches: bool,
}

#[derive(Clone, Debug)]
pub struct LefschetzOutcome {
    pub cd: CdPolynomial,
    pub certificate: Certificate,
}

/// Seed for the attempt `attempt` at the node reached by `prefix`.
fn node_seed(seed: u64, prefix: &str, attempt: usize) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut h = OFFSET;
    let bytes = seed.to_le_bytes().into_iter().chain(prefix.bytes()).chain((attempt as u64).to_le_bytes());
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

struct Walk<'a, F> {
    params: &'a RunParams,
    registry: &'a SamplerRegistry<F>,
    cd: CdPolynomial,
    steps: Vec<StepRecord>,
    leaves: Vec<LeafRecord>,
    retries: usize,
    descent_failures: Vec<String>,
}

impl<F: Field> Walk<'_, F> {
    fn visit(&mut self, node: NodeModule<F>, prefix: String) -> Result<(), EngineError> {
        if node.rank() == 0 {
            return Ok(());
        }
        if node.lo() > node.hi() {
            self.cd.add_term(&prefix, node.rank() as i64);
            self.leaves.push(LeafRecord { word: prefix, dim: node.rank() });
            return Ok(());
        }
        let sampler = self.registry.get(&self.params.mode).ok_or_else(|| EngineError::UnknownMode(self.params.mode.clone()))?;
        let split = split_mod_xl(&node);
        let attempts = self.params.retries.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            let mut rng = ChaCha8Rng::seed_from_u64(node_seed(self.params.seed, &prefix, attempt));
            let res = sampler
                .sample(&node, &split, &mut rng, self.params.entry_bound)
                .and_then(|c| main_construction(&node, &split, &c));
            match res {
                Ok(step) => {
                    self.steps.push(StepRecord {
                        prefix: prefix.clone(),
                        range: [node.lo(), node.hi()],
                        dims: step.dims,
                        hilbert_identity: step.hilbert_identity,
                        self_adjoint: step.self_adjoint,
                        exact: step.exact,
                        attempts: attempt + 1,
                    });
                    if !step.hilbert_identity {
                        return Err(EngineError::Internal(format!("Hilbert identity fails at node '{prefix}'")));
                    }
                    self.visit(step.c_child, format!("{prefix}c"))?;
                    if let Some(q) = step.q_child {
                        self.visit(q, format!("{prefix}d"))?;
                    }
                    return Ok(());
                }
                Err(StepError::Internal(msg)) => return Err(EngineError::Internal(format!("node '{prefix}': {msg}"))),
                Err(e) => {
                    self.retries += 1;
                    if let StepError::DescentFailed(msg) = &e {
                        self.descent_failures.push(format!("{prefix}: {msg}"));
                    }
                    last = e.to_string();
                }
            }
        }
        Err(EngineError::ExhaustedRetries { prefix, attempts, last })
    }
}

/// Runs the decomposition from `root` and checks `Σ dim · φ(w)` against its Hilbert function.
pub fn lefschetz_recursion<F: Field>(
    root: NodeModule<F>,
    params: &RunParams,
    registry: &SamplerRegistry<F>,
) -> Result<LefschetzOutcome, EngineError> {
    if registry.get(&params.mode).is_none() {
        return Err(EngineError::UnknownMode(params.mode.clone()));
    }
    let lo = root.lo();
    let degree = (root.hi() + 1).saturating_sub(lo);
    let hilbert = root.form.module.hilbert();
    let mut walk = Walk {
        params,
        registry,
        cd: CdPolynomial::new(degree),
        steps: Vec::new(),
        leaves: Vec::new(),
        retries: 0,
        descent_failures: Vec::new(),
    };
    walk.visit(root, String::new())?;
    let expanded = walk.cd.to_poly(lo);
    let hilbert_matches = expanded.coeffs == hilbert.coeffs;
    if !hilbert_matches {
        return Err(EngineError::Internal("leaf dimensions do not reproduce the Hilbert function".into()));
    }
    let certificate = Certificate {
        seed: params.seed,
        mode: params.mode.clone(),
        arith: F::NAME.into(),
        root_hilbert: hilbert.labelled(),
        steps: walk.steps,
        cd_index: walk.cd.json_terms(),
        leaves: walk.leaves,
        retries: walk.retries,
        descent_failures: walk.descent_failures,
        hilbert_matches,
    };
    Ok(LefschetzOutcome { cd: walk.cd, certificate })
}

fn root_node<F: Field>(sm: &SectionModule, form: &crate::pairing::PairingForm<Rational>) -> NodeModule<F> {
    let conv = |q: &Rational| F::from_rational(q).expect("integral pairing value");
    let root = RootSections {
        chains: sm.chains.clone(),
        eps: sm.eps.iter().map(|&e| F::from_i64(e as i64)).collect(),
        gens: sm.module.gens.clone(),
        values: sm.sections.iter().map(|s| s.iter().map(|&x| F::from_i64(x)).collect()).collect(),
    };
    NodeModule::root(form.map(conv), Some(Arc::new(root)))
}

/// The decomposition on the global sections of a fan, over an explicit registry.
pub fn lefschetz_on_fan<F: Field>(
    fan: &FanData,
    params: &RunParams,
    registry: &SamplerRegistry<F>,
) -> Result<LefschetzOutcome, EngineError> {
    let sm = SectionModule::compute_with::<F>(fan)?;
    let form = pairing_on_sections(&sm)?;
    lefschetz_recursion(root_node::<F>(&sm, &form), params, registry)
}

/// cd-index by the decomposition, with exact arithmetic for small fans and
/// the prime field above the size limit.
pub fn cd_index_lefschetz(p: &GradedPoset, params: &RunParams) -> Result<LefschetzOutcome, EngineError> {
    let fan = FanData::new(p.clone())?;
    if fan.flags(fan.top()).len() <= RATIONAL_LIMIT {
        lefschetz_on_fan::<Rational>(&fan, params, &SamplerRegistry::standard())
    } else {
        lefschetz_on_fan::<Fp>(&fan, params, &SamplerRegistry::standard())
    }
}

/// The decomposition on `𝓛_σ / x_d 𝓛_σ` with the boundary pairing.
pub fn stalk_lefschetz(
    fan: &FanData,
    sheaf: &IndecomposableSheaf,
    s: usize,
    params: &RunParams,
) -> Result<LefschetzOutcome, EngineError> {
    fn run<F: Field>(
        fan: &FanData,
        sheaf: &IndecomposableSheaf,
        s: usize,
        params: &RunParams,
    ) -> Result<LefschetzOutcome, EngineError> {
        let form = stalk_pairing(fan, sheaf, s)?;
        let st = &sheaf.stalks[&s];
        let root = RootSections {
            chains: fan.flags(s).to_vec(),
            eps: fan.flag_signs(s).into_iter().map(|e| F::from_i64(e as i64)).collect(),
            gens: st.module.gens.clone(),
            values: st.reps.iter().map(|r| to_field::<F>(r)).collect(),
        };
        let conv = |q: &Rational| F::from_rational(q).expect("pairing value in the field");
        let node = NodeModule::root(form.map(conv), Some(Arc::new(root)));
        lefschetz_recursion(node, params, &SamplerRegistry::standard())
    }
    if fan.flags(s).len() <= RATIONAL_LIMIT {
        run::<Rational>(fan, sheaf, s, params)
    } else {
        run::<Fp>(fan, sheaf, s, params)
    }
}
