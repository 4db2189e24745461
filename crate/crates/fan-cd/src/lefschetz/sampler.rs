use super::construction::Split;
use super::{bit, NodeModule, StepError};
use crate::field::Field;
use crate::flag::{interval, set_label};
use crate::linalg::Mat;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// A sampled map: the symmetric form `Σ` on `M⁰` and, for section-backed
/// modes, the multiplier `ℓ` as a function on the root chains.
#[derive(Clone, Debug)]
pub struct Candidate<F> {
    pub sigma: Mat<F>,
    pub ell: Option<Vec<F>>,
}

pub trait LSampler<F: Field>: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn sample(&self, node: &NodeModule<F>, split: &Split, rng: &mut ChaCha8Rng, bound: i64) -> Result<Candidate<F>, StepError>;
}

pub struct SamplerRegistry<F> {
    entries: BTreeMap<&'static str, Box<dyn LSampler<F>>>,
}

impl<F: Field> SamplerRegistry<F> {
    pub fn empty() -> Self {
        SamplerRegistry { entries: BTreeMap::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Generic));
        r.register(Box::new(Multiplication));
        r.register(Box::new(Torus));
        r
    }

    pub fn register(&mut self, s: Box<dyn LSampler<F>>) {
        self.entries.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Option<&dyn LSampler<F>> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

pub fn sample_l<F: Field>(
    registry: &SamplerRegistry<F>,
    mode: &str,
    node: &NodeModule<F>,
    split: &Split,
    rng: &mut ChaCha8Rng,
    bound: i64,
) -> Result<Candidate<F>, StepError> {
    let s = registry.get(mode).ok_or_else(|| StepError::NoCandidate(format!("no sampler named {mode}")))?;
    s.sample(node, split, rng, bound)
}

fn draw<F: Field>(rng: &mut ChaCha8Rng, bound: i64) -> F {
    F::from_i64(rng.gen_range(-bound..=bound))
}

/// Random symmetric integers on the pairs whose degrees cover `[l+1, m]`.
pub struct Generic;

impl<F: Field> LSampler<F> for Generic {
    fn name(&self) -> &'static str {
        "generic"
    }
    fn description(&self) -> &'static str {
        "uniform symmetric integer form on the admissible support"
    }
    fn sample(&self, node: &NodeModule<F>, split: &Split, rng: &mut ChaCha8Rng, bound: i64) -> Result<Candidate<F>, StepError> {
        let full = interval(node.lo() + 1, node.hi());
        let r: Vec<_> = split.g0.iter().map(|&g| node.gens()[g]).collect();
        let n = r.len();
        let mut sigma = Mat::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                if (r[a] | r[b]) & full == full {
                    let v: F = draw(rng, bound);
                    sigma.set(a, b, v.clone());
                    sigma.set(b, a, v);
                }
            }
        }
        Ok(Candidate { sigma, ell: None })
    }
}

/// Checks that the carried sections still compute the node pairing on
/// complementary generator pairs.
fn check_descent<F: Field>(node: &NodeModule<F>) -> Result<(), StepError> {
    let sec = node.sections.as_ref().ok_or_else(|| StepError::NoCandidate("node carries no sections".into()))?;
    let full = node.form.module.range();
    let gens = node.gens();
    for g in 0..gens.len() {
        for h in 0..gens.len() {
            if gens[g] & gens[h] == 0 && gens[g] | gens[h] == full {
                let v = sec.root.eval(&sec.a[g], &sec.u[h]);
                if &v != node.form.matrix.get(g, h) {
                    return Err(StepError::DescentFailed(format!(
                        "pairing of degrees {} and {} is not computed by sections",
                        set_label(gens[g]),
                        set_label(gens[h])
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `Σ[a,b] = ev(a_a ℓ u_b)` on `M⁰`, checked for symmetry and support.
fn sigma_from_ell<F: Field>(node: &NodeModule<F>, split: &Split, ell: Vec<F>) -> Result<Candidate<F>, StepError> {
    check_descent(node)?;
    let sec = node.sections.as_ref().expect("checked");
    let full = interval(node.lo() + 1, node.hi());
    let n = split.g0.len();
    let weighted: Vec<Vec<F>> = split.g0.iter().map(|&g| sec.u[g].iter().zip(&ell).map(|(x, y)| x.mul(y)).collect()).collect();
    let mut sigma = Mat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            sigma.set(a, b, sec.root.eval(&sec.a[split.g0[a]], &weighted[b]));
        }
    }
    if !sigma.is_symmetric() {
        return Err(StepError::DescentFailed("sampled form is not symmetric".into()));
    }
    for a in 0..n {
        for b in 0..n {
            let cover = node.gens()[split.g0[a]] | node.gens()[split.g0[b]];
            if cover & full != full && !sigma.get(a, b).is_zero() {
                return Err(StepError::DescentFailed("sampled form violates the degree support".into()));
            }
        }
    }
    Ok(Candidate { sigma, ell: Some(ell) })
}

/// `ℓ` is a random combination of root generators in degrees `∅` and `{l}`.
pub struct Multiplication;

impl<F: Field> LSampler<F> for Multiplication {
    fn name(&self) -> &'static str {
        "multiplication"
    }
    fn description(&self) -> &'static str {
        "multiplication by a random global section of degree e_l"
    }
    fn sample(&self, node: &NodeModule<F>, split: &Split, rng: &mut ChaCha8Rng, bound: i64) -> Result<Candidate<F>, StepError> {
        let sec = node.sections.as_ref().ok_or_else(|| StepError::NoCandidate("node carries no sections".into()))?;
        let root = &sec.root;
        let l = node.lo();
        let mut ell = vec![F::zero(); root.chains.len()];
        for (g, &d) in root.gens.iter().enumerate() {
            if d == 0 || d == bit(l) {
                let c: F = draw(rng, bound);
                for (e, v) in ell.iter_mut().zip(&root.values[g]) {
                    if !v.is_zero() {
                        e.add_assign(&c.mul(v));
                    }
                }
            }
        }
        sigma_from_ell(node, split, ell)
    }
}

/// `ℓ` takes an independent random value on each cone of dimension `l`.
pub struct Torus;

impl<F: Field> LSampler<F> for Torus {
    fn name(&self) -> &'static str {
        "torus"
    }
    fn description(&self) -> &'static str {
        "independent random weight on each cone of the current dimension"
    }
    fn sample(&self, node: &NodeModule<F>, split: &Split, rng: &mut ChaCha8Rng, bound: i64) -> Result<Candidate<F>, StepError> {
        let sec = node.sections.as_ref().ok_or_else(|| StepError::NoCandidate("node carries no sections".into()))?;
        let l = node.lo();
        let cones: BTreeSet<usize> = sec.root.chains.iter().map(|c| c[l - 1]).collect();
        let weights: BTreeMap<usize, F> = cones.into_iter().map(|c| (c, draw(rng, bound))).collect();
        let ell = sec.root.chains.iter().map(|c| weights[&c[l - 1]].clone()).collect();
        sigma_from_ell(node, split, ell)
    }
}
