//! Recursive Lefschetz decomposition of free modules with a perfect pairing.
//!
//! A node is a free module over `ℚ[x_l, …, x_m]` with squarefree generators
//! and a symmetric pairing into `ω_{l,m}`. One step picks a self-adjoint map
//! of degree `e_l`, splits off the cokernel and kernel parts and recurses on
//! two smaller nodes; leaves are labelled by cd-words.

pub mod construction;
pub mod lab;
pub mod recursion;
pub mod sampler;
pub mod transversal;

pub use construction::{adjoint_and_check, main_construction, split_mod_xl, Split, StepDims, StepResult};
pub use recursion::{
    cd_index_lefschetz, lefschetz_on_fan, lefschetz_recursion, stalk_lefschetz, Certificate, LeafRecord,
    LefschetzOutcome, RunParams, StepRecord,
};
pub use sampler::{sample_l, Candidate, LSampler, SamplerRegistry};

use crate::field::Field;
use crate::flag::{CdError, VarSet};
use crate::pairing::{PairingError, PairingForm};
use crate::poset::PosetError;
use crate::sheaf::SheafError;
use std::sync::Arc;
use thiserror::Error;

/// Why a single sampled map was rejected.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum StepError {
    #[error("assumption failed: {0}")]
    AssumptionFailed(String),
    #[error("no candidate: {0}")]
    NoCandidate(String),
    #[error("descent check failed: {0}")]
    DescentFailed(String),
    #[error("{0}")]
    Internal(String),
}

impl StepError {
    pub fn is_retryable(&self) -> bool {
        !matches!(self, StepError::Internal(_))
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("exhausted {attempts} attempts at node '{prefix}': {last}")]
    ExhaustedRetries { prefix: String, attempts: usize, last: String },
    #[error("internal invariant breached: {0}")]
    Internal(String),
    #[error("unknown sampler mode '{0}'")]
    UnknownMode(String),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Cd(#[from] CdError),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

impl EngineError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::ExhaustedRetries { .. } => 2,
            EngineError::Internal(_) | EngineError::Pairing(_) => 4,
            EngineError::Sheaf(SheafError::Graded(_)) => 4,
            _ => 1,
        }
    }
}

/// Flag functions on the chains of the root, with the evaluation signs.
#[derive(Clone, Debug)]
pub struct RootSections<F> {
    pub chains: Vec<Vec<usize>>,
    pub eps: Vec<F>,
    pub gens: Vec<VarSet>,
    pub values: Vec<Vec<F>>,
}

impl<F: Field> RootSections<F> {
    /// `Σ_F ε_F a[F] b[F]`
    pub fn eval(&self, a: &[F], b: &[F]) -> F {
        let mut acc = F::zero();
        for ((e, x), y) in self.eps.iter().zip(a).zip(b) {
            if !x.is_zero() && !y.is_zero() {
                acc.add_assign(&e.mul(x).mul(y));
            }
        }
        acc
    }
}

/// Section representatives carried down the recursion: `u_g` is the
/// generator itself and `a_g` its image under the maps applied so far.
#[derive(Clone, Debug)]
pub struct NodeSections<F> {
    pub root: Arc<RootSections<F>>,
    pub u: Vec<Vec<F>>,
    pub a: Vec<Vec<F>>,
}

#[derive(Clone, Debug)]
pub struct NodeModule<F> {
    pub form: PairingForm<F>,
    pub sections: Option<NodeSections<F>>,
}

impl<F: Field> NodeModule<F> {
    pub fn new(form: PairingForm<F>, sections: Option<NodeSections<F>>) -> Self {
        NodeModule { form, sections }
    }

    pub fn root(form: PairingForm<F>, root: Option<Arc<RootSections<F>>>) -> Self {
        let sections = root.map(|r| NodeSections { u: r.values.clone(), a: r.values.clone(), root: r });
        NodeModule { form, sections }
    }

    pub fn lo(&self) -> usize {
        self.form.module.lo
    }
    pub fn hi(&self) -> usize {
        self.form.module.hi
    }
    pub fn gens(&self) -> &[VarSet] {
        &self.form.module.gens
    }
    pub fn rank(&self) -> usize {
        self.form.module.rank()
    }
}

pub(crate) fn bit(i: usize) -> VarSet {
    1 << i
}
