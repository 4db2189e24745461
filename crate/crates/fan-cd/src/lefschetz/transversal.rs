//! Transversality of `K^⊥` and `L K` for a diagonal `L` on an orthogonal sum
//! of quadratic spaces.

use crate::field::{Field, Rational};
use crate::linalg::Mat;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransversalError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransversalMode {
    /// An independent weight on every vector of the adapted orthogonal basis.
    PerCoordinate,
    /// One weight per block.
    PerBlockConstant,
}

/// `V = ⊕ V_i` with symmetric nondegenerate forms and a subspace `K`.
#[derive(Clone, Debug)]
pub struct TransversalityInstance {
    pub blocks: Vec<Mat<Rational>>,
    pub k: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessOutcome {
    pub found: bool,
    pub samples: usize,
    pub weights: Option<Vec<i64>>,
}

impl TransversalityInstance {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.rows()).sum()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rows()).collect()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut o = vec![0];
        for b in &self.blocks {
            o.push(o.last().unwrap() + b.rows());
        }
        o
    }

    pub fn gram(&self) -> Mat<Rational> {
        let n = self.dim();
        let mut g = Mat::zeros(n, n);
        let off = self.offsets();
        for (bi, b) in self.blocks.iter().enumerate() {
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    g.set(off[bi] + i, off[bi] + j, b.get(i, j).clone());
                }
            }
        }
        g
    }

    /// Basis of `K^⊥`.
    pub fn k_perp(&self) -> Vec<Vec<Rational>> {
        let n = self.dim();
        if self.k.is_empty() {
            return (0..n).map(|i| unit(n, i)).collect();
        }
        let g = self.gram();
        let rows: Vec<Vec<Rational>> = self.k.iter().map(|v| g.mul_vec(v)).collect();
        Mat::from_rows(rows, n).kernel()
    }

    pub fn check(&self, mode: TransversalMode) -> Result<(), TransversalError> {
        for (i, b) in self.blocks.iter().enumerate() {
            if !b.is_symmetric() || b.inverse().is_none() {
                return Err(TransversalError::PreconditionViolated(format!("block {i} form is degenerate or not symmetric")));
            }
        }
        let n = self.dim();
        if Mat::from_cols(&self.k, n).rank() != self.k.len() {
            return Err(TransversalError::PreconditionViolated("K basis is dependent".into()));
        }
        let g = self.gram();
        for a in &self.k {
            let ga = g.mul_vec(a);
            for b in &self.k {
                if !dot(&ga, b).is_zero() {
                    return Err(TransversalError::PreconditionViolated("K is not isotropic".into()));
                }
            }
        }
        if mode == TransversalMode::PerBlockConstant {
            let off = self.offsets();
            for (i, b) in self.blocks.iter().enumerate() {
                let proj: Vec<Vec<Rational>> = self.k.iter().map(|v| v[off[i]..off[i + 1]].to_vec()).collect();
                if Mat::from_cols(&proj, b.rows()).rank() != b.rows() {
                    return Err(TransversalError::PreconditionViolated(format!("K does not project onto block {i}")));
                }
            }
        }
        Ok(())
    }
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Orthogonal basis (as columns) of a nondegenerate symmetric form.
pub fn orthogonal_basis(form: &Mat<Rational>) -> Mat<Rational> {
    let n = form.rows();
    let ip = |a: &[Rational], b: &[Rational]| dot(&form.mul_vec(a), b);
    let mut rest: Vec<Vec<Rational>> = (0..n).map(|i| unit(n, i)).collect();
    let mut out: Vec<Vec<Rational>> = Vec::new();
    while !rest.is_empty() {
        let pick = match rest.iter().position(|v| !ip(v, v).is_zero()) {
            Some(i) => rest.remove(i),
            None => {
                let (i, j) = (0..rest.len())
                    .flat_map(|i| (i + 1..rest.len()).map(move |j| (i, j)))
                    .find(|&(i, j)| !ip(&rest[i], &rest[j]).is_zero())
                    .expect("nondegenerate form");
                let w: Vec<Rational> = rest[i].iter().zip(&rest[j]).map(|(x, y)| x + y).collect();
                rest[i] = w.clone();
                rest.remove(i)
            }
        };
        let norm = ip(&pick, &pick);
        rest = rest
            .into_iter()
            .map(|v| {
                let c = ip(&v, &pick) / &norm;
                v.iter().zip(&pick).map(|(x, y)| x - &c * y).collect::<Vec<_>>()
            })
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect();
        out.push(pick);
    }
    Mat::from_cols(&out, n)
}

/// Whether `K^⊥` and `L K` span a space of dimension `dim K^⊥ + dim K`
/// for `L` acting by `weights` on the adapted orthogonal basis.
pub fn is_transverse(inst: &TransversalityInstance, weights: &[i64]) -> bool {
    let n = inst.dim();
    let off = inst.offsets();
    let mut basis = Mat::zeros(n, n);
    for (bi, b) in inst.blocks.iter().enumerate() {
        let ob = orthogonal_basis(b);
        for i in 0..b.rows() {
            for j in 0..b.rows() {
                basis.set(off[bi] + i, off[bi] + j, ob.get(i, j).clone());
            }
        }
    }
    let inv = basis.inverse().expect("orthogonal basis");
    let mut diag = Mat::zeros(n, n);
    for (i, &w) in weights.iter().enumerate() {
        diag.set(i, i, Rational::from_i64(w));
    }
    let l = basis.mul(&diag).mul(&inv);
    let perp = inst.k_perp();
    let mut cols = perp.clone();
    cols.extend(inst.k.iter().map(|v| l.mul_vec(v)));
    Mat::from_cols(&cols, n).rank() == perp.len() + inst.k.len()
}

/// Samples diagonal weights until a transverse one is found.
pub fn torus_transverse_witness(
    inst: &TransversalityInstance,
    mode: TransversalMode,
    rng: &mut ChaCha8Rng,
    bound: i64,
    max_samples: usize,
) -> Result<WitnessOutcome, TransversalError> {
    inst.check(mode)?;
    for s in 0..max_samples {
        let weights: Vec<i64> = match mode {
            TransversalMode::PerCoordinate => (0..inst.dim()).map(|_| rng.gen_range(1..=bound)).collect(),
            TransversalMode::PerBlockConstant => {
                let per: Vec<i64> = inst.blocks.iter().map(|_| rng.gen_range(1..=bound)).collect();
                inst.block_dims().iter().zip(&per).flat_map(|(&d, &w)| std::iter::repeat(w).take(d)).collect()
            }
        };
        if is_transverse(inst, &weights) {
            return Ok(WitnessOutcome { found: true, samples: s + 1, weights: Some(weights) });
        }
    }
    Ok(WitnessOutcome { found: false, samples: max_samples, weights: None })
}

/// A Lagrangian `K` in a split space of dimension `2k ≤ dim_cap`, cut into
/// random blocks with diagonal `±1` forms and scrambled by block isometries.
pub fn random_instance(rng: &mut ChaCha8Rng, dim_cap: usize) -> TransversalityInstance {
    let half = rng.gen_range(1..=(dim_cap / 2).max(1));
    let n = 2 * half;
    let mut signs: Vec<i64> = (0..n).map(|i| if i < half { 1 } else { -1 }).collect();
    signs.shuffle(rng);
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.gen_range(1..=left.min(4));
        sizes.push(s);
        left -= s;
    }
    let plus: Vec<usize> = (0..n).filter(|&i| signs[i] == 1).collect();
    let mut minus: Vec<usize> = (0..n).filter(|&i| signs[i] == -1).collect();
    minus.shuffle(rng);
    let mut k: Vec<Vec<Rational>> = plus
        .iter()
        .zip(&minus)
        .map(|(&p, &q)| {
            let mut v = vec![Rational::zero(); n];
            v[p] = Rational::one();
            v[q] = Rational::one();
            v
        })
        .collect();
    let mut blocks = Vec::new();
    let mut start = 0;
    for &s in &sizes {
        let mut b = Mat::zeros(s, s);
        for i in 0..s {
            b.set(i, i, Rational::from_i64(signs[start + i]));
        }
        for _ in 0..2 {
            let v: Vec<Rational> = (0..s).map(|_| Rational::from_i64(rng.gen_range(-3..=3))).collect();
            let norm = dot(&b.mul_vec(&v), &v);
            if norm.is_zero() {
                continue;
            }
            for kv in k.iter_mut() {
                let seg = kv[start..start + s].to_vec();
                let c = Rational::from_i64(2) * dot(&b.mul_vec(&seg), &v) / &norm;
                for i in 0..s {
                    kv[start + i] = &seg[i] - &c * &v[i];
                }
            }
        }
        blocks.push(b);
        start += s;
    }
    TransversalityInstance { blocks, k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn plane() -> TransversalityInstance {
        let b = Mat::from_i64_rows(&[vec![1, 0], vec![0, -1]]);
        TransversalityInstance { blocks: vec![b], k: vec![vec![Rational::one(), Rational::one()]] }
    }

    #[test]
    fn hyperbolic_plane() {
        let inst = plane();
        assert!(inst.check(TransversalMode::PerCoordinate).is_ok());
        assert!(is_transverse(&inst, &[1, 2]));
        assert!(!is_transverse(&inst, &[3, 3]));
    }

    #[test]
    fn constant_weight_rejected_on_one_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = torus_transverse_witness(&plane(), TransversalMode::PerBlockConstant, &mut rng, 100, 5);
        assert!(matches!(r, Err(TransversalError::PreconditionViolated(_))));
    }

    #[test]
    fn non_isotropic_rejected() {
        let mut inst = plane();
        inst.k[0][1] = Rational::from_i64(2);
        assert!(inst.check(TransversalMode::PerCoordinate).is_err());
    }

    #[test]
    fn random_instances_are_lagrangian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, 8);
            inst.check(TransversalMode::PerCoordinate).unwrap();
            assert_eq!(inst.k_perp().len(), inst.k.len());
        }
    }
}
