use super::sampler::Candidate;
use super::{bit, NodeModule, NodeSections, StepError};
use crate::field::Field;
use crate::flag::{interval, set_label, subsets, VarSet};
use crate::graded::{FreeGradedModule, MonomialMap, MultiDegree};
use crate::linalg::{Echelon, Mat};
use crate::pairing::PairingForm;
use serde::Serialize;
use std::collections::BTreeMap;

/// Generators split by whether their degree contains the first variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub g0: Vec<usize>,
    pub g1: Vec<usize>,
}

pub fn split_mod_xl<F: Field>(node: &NodeModule<F>) -> Split {
    let l = bit(node.lo());
    let (g1, g0) = (0..node.rank()).partition(|&g| node.gens()[g] & l != 0);
    Split { g0, g1 }
}

/// The adjoint `P⁻¹LᵀP` and whether `L` is self-adjoint.
pub fn adjoint_and_check<F: Field>(form: &PairingForm<F>, l: &MonomialMap<F>) -> Result<(Mat<F>, bool), StepError> {
    form.adjoint(l).ok_or_else(|| StepError::Internal("pairing matrix is singular".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepDims {
    #[serde(rename = "M0")]
    pub m0: usize,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "C")]
    pub c: usize,
}

#[derive(Clone, Debug)]
pub struct StepResult<F> {
    pub dims: StepDims,
    pub hilbert_identity: bool,
    pub self_adjoint: bool,
    pub exact: bool,
    pub map: MonomialMap<F>,
    pub c_child: NodeModule<F>,
    pub q_child: Option<NodeModule<F>>,
}

fn internal(msg: impl Into<String>) -> StepError {
    StepError::Internal(msg.into())
}

fn unit<F: Field>(n: usize, i: usize) -> Vec<F> {
    let mut v = vec![F::zero(); n];
    v[i] = F::one();
    v
}

fn within(r: &[VarSet], t: VarSet) -> Vec<usize> {
    (0..r.len()).filter(|&i| r[i] & !t == 0).collect()
}

fn hilbert_counts(gens: impl IntoIterator<Item = VarSet>) -> BTreeMap<VarSet, usize> {
    let mut m = BTreeMap::new();
    for g in gens {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

/// Builds the full degree `e_l` map from the block `Φ: M⁰ → M¹`.
fn full_map<F: Field>(node: &NodeModule<F>, sp: &Split, phi: &Mat<F>, p01_inv: &Mat<F>) -> MonomialMap<F> {
    let p = &node.form.matrix;
    let p11 = p.select(&sp.g1, &sp.g1);
    let psi = p01_inv.mul(&phi.transpose()).mul(&p11);
    let n = node.rank();
    let mut l = Mat::zeros(n, n);
    for (i1, &g1) in sp.g1.iter().enumerate() {
        for (i0, &g0) in sp.g0.iter().enumerate() {
            l.set(g1, g0, phi.get(i1, i0).clone());
        }
        for (j1, &h1) in sp.g1.iter().enumerate() {
            l.set(g1, h1, psi.get(i1, j1).clone());
        }
    }
    let m = node.form.module.clone();
    MonomialMap::new(m.clone(), m, MultiDegree::e(node.lo()), l)
}

fn pointwise<F: Field>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| x.mul(y)).collect()
}

/// One step of the decomposition for the sampled `Σ = P₀₁ Φ`.
pub fn main_construction<F: Field>(node: &NodeModule<F>, sp: &Split, cand: &Candidate<F>) -> Result<StepResult<F>, StepError> {
    let (l, m) = (node.lo(), node.hi());
    assert!(l <= m, "main construction on an empty range");
    let gens = node.gens();
    let r0: Vec<VarSet> = sp.g0.iter().map(|&g| gens[g]).collect();
    let r1: Vec<VarSet> = sp.g1.iter().map(|&g| gens[g] & !bit(l)).collect();
    let (n0, n1) = (r0.len(), r1.len());
    let sigma = &cand.sigma;
    if sigma.rows() != n0 || sigma.cols() != n0 {
        return Err(internal("sampled form has the wrong shape"));
    }
    if n0 != n1 {
        return Err(internal(format!("pairing between M0 ({n0}) and M1 ({n1}) is not square")));
    }
    let p = &node.form.matrix;
    let p01_inv = if n0 == 0 {
        Mat::zeros(0, 0)
    } else {
        p.select(&sp.g0, &sp.g1).inverse().ok_or_else(|| internal("pairing between M0 and M1 is degenerate"))?
    };
    let phi = p01_inv.mul(sigma);
    for i1 in 0..n1 {
        for i0 in 0..n0 {
            if !phi.get(i1, i0).is_zero() && r1[i1] & !r0[i0] != 0 {
                return Err(internal(format!("map is not homogeneous at ({i1}, {i0})")));
            }
        }
    }
    let map = full_map(node, sp, &phi, &p01_inv);
    map.check_homogeneous().map_err(|e| internal(e.to_string()))?;
    let self_adjoint = p.mul(&map.matrix).is_symmetric();
    if !self_adjoint {
        return Err(internal("map is not self-adjoint"));
    }
    let m_counts = hilbert_counts(gens.iter().copied());

    if l == m {
        if phi.rank() != n0 {
            return Err(StepError::AssumptionFailed(format!("x_{l}-map is singular on the last variable")));
        }
        let module = FreeGradedModule::new(m + 1, m, vec![0; n0]);
        let form = PairingForm::new(module, sigma.clone());
        let sections = descend_c(node, sp, &(0..n0).collect::<Vec<_>>(), cand);
        let mut rhs = BTreeMap::new();
        if n0 > 0 {
            rhs.insert(0, n0);
            rhs.insert(bit(l), n0);
        }
        return Ok(StepResult {
            dims: StepDims { m0: n0, m1: n1, q: 0, c: n0 },
            hilbert_identity: rhs == m_counts,
            self_adjoint,
            exact: true,
            map,
            c_child: NodeModule::new(form, sections),
            q_child: None,
        });
    }

    let lp = l + 1;
    let full1 = interval(lp, m);
    let full2 = interval(lp + 1, m);

    for t in subsets(full1) {
        let (f0, f1) = (within(&r0, t), within(&r1, t));
        if phi.select(&f1, &f0).rank() != f0.len() {
            return Err(StepError::AssumptionFailed(format!("not injective in degree {}", set_label(t))));
        }
        if t & bit(lp) != 0 && f1.len() != f0.len() {
            return Err(StepError::AssumptionFailed(format!("x_{lp} does not annihilate the cokernel in degree {}", set_label(t))));
        }
    }

    // Free generators of the cokernel Q, taken among M¹ generators.
    let mut qs: Vec<(VarSet, usize)> = Vec::new();
    for rr in subsets(full2) {
        let mut ech = Echelon::<F>::new(n1);
        for i0 in within(&r0, rr) {
            ech.insert(&phi.col(i0));
        }
        for &(rq, i1) in &qs {
            if rq & !rr == 0 {
                ech.insert(&unit(n1, i1));
            }
        }
        for i1 in 0..n1 {
            if r1[i1] == rr && ech.insert(&unit(n1, i1)) {
                qs.push((rr, i1));
            }
        }
        if ech.dim() != within(&r1, rr).len() {
            return Err(internal(format!("cokernel is not free in degree {}", set_label(rr))));
        }
    }

    // α(q): the preimage of x_{l+1} q under Φ.
    let mut alpha: Vec<Vec<F>> = Vec::with_capacity(qs.len());
    for &(rr, i1) in &qs {
        let rp = rr | bit(lp);
        let (rows, cols) = (within(&r1, rp), within(&r0, rp));
        let pos = rows.iter().position(|&x| x == i1).expect("generator in its own component");
        let sol = phi
            .select(&rows, &cols)
            .solve(&unit(rows.len(), pos))
            .ok_or_else(|| internal(format!("x_{lp} q has no preimage in degree {}", set_label(rp))))?;
        let mut full = vec![F::zero(); n0];
        for (k, &c) in cols.iter().enumerate() {
            full[c] = sol[k].clone();
        }
        alpha.push(full);
    }

    let nq = qs.len();
    let mut pq = Mat::zeros(nq, nq);
    for a in 0..nq {
        for b in 0..nq {
            let col = sp.g1[qs[b].1];
            let mut v = F::zero();
            for (i0, x) in alpha[a].iter().enumerate() {
                if !x.is_zero() {
                    v.add_assign(&x.mul(p.get(sp.g0[i0], col)));
                }
            }
            if !v.is_zero() && (qs[a].0 | qs[b].0) != full2 {
                return Err(internal("induced pairing on Q is not degree preserving"));
            }
            pq.set(a, b, v);
        }
    }
    let q_form = PairingForm::new(FreeGradedModule::new(lp + 1, m, qs.iter().map(|q| q.0).collect()), pq);
    q_form.check().map_err(|e| internal(format!("induced pairing on Q: {e}")))?;

    // Generators of C: M⁰ generators avoiding x_{l+1} plus a complement of α(Q).
    let primed: Vec<usize> = (0..n0).filter(|&i| r0[i] & bit(lp) != 0).collect();
    let proj = |v: &[F]| -> Vec<F> { primed.iter().map(|&i| v[i].clone()).collect() };
    let np = primed.len();
    let mut extra: Vec<usize> = Vec::new();
    for rr in subsets(full2) {
        let rp = rr | bit(lp);
        let mut ech = Echelon::<F>::new(np);
        let mut count = 0;
        for (k, &(rq, _)) in qs.iter().enumerate() {
            if rq & !rr == 0 {
                ech.insert(&proj(&alpha[k]));
                count += 1;
            }
        }
        if ech.dim() != count {
            return Err(internal(format!("α is not injective in degree {}", set_label(rr))));
        }
        for &e in &extra {
            if r0[e] & !rp == 0 {
                let k = primed.iter().position(|&x| x == e).expect("primed");
                ech.insert(&unit(np, k));
            }
        }
        for (k, &i0) in primed.iter().enumerate() {
            if r0[i0] == rp && ech.insert(&unit(np, k)) {
                extra.push(i0);
            }
        }
        if ech.dim() != primed.iter().filter(|&&i| r0[i] & !rp == 0).count() {
            return Err(internal(format!("C is not free in degree {}", set_label(rp))));
        }
    }
    let mut cs: Vec<usize> = (0..n0).filter(|&i| r0[i] & bit(lp) == 0).collect();
    cs.extend(extra);

    // Exactness of 0 → M⁰/x → M¹/x → Q → 0 and 0 → α(Q) → M⁰' → M¹' → 0 degreewise.
    let mut exact = true;
    for rr in subsets(full2) {
        let nq_r = qs.iter().filter(|q| q.0 & !rr == 0).count();
        let (f0, f1) = (within(&r0, rr), within(&r1, rr));
        let a = phi.select(&f1, &f0);
        let ra = a.rank();
        exact &= ra == f0.len() && f1.len() - ra == nq_r;
        let rp = rr | bit(lp);
        let rows: Vec<usize> = (0..n1).filter(|&i| r1[i] & bit(lp) != 0 && r1[i] & !rp == 0).collect();
        let cols: Vec<usize> = (0..n0).filter(|&i| r0[i] & bit(lp) != 0 && r0[i] & !rp == 0).collect();
        let b = phi.select(&rows, &cols);
        let rb = b.rank();
        exact &= rb == rows.len() && cols.len() - rb == nq_r;
        for (k, q) in qs.iter().enumerate() {
            if q.0 & !rr == 0 {
                let v: Vec<F> = cols.iter().map(|&c| alpha[k][c].clone()).collect();
                exact &= b.mul_vec(&v).iter().all(|x| x.is_zero());
            }
        }
    }
    if !exact {
        return Err(internal("decomposition sequences are not exact"));
    }

    let nc = cs.len();
    let mut pc = Mat::zeros(nc, nc);
    for a in 0..nc {
        for b in 0..nc {
            let (x, y) = (r0[cs[a]], r0[cs[b]]);
            if (x | y) == full1 && (x & y & bit(lp)) == 0 {
                pc.set(a, b, sigma.get(cs[a], cs[b]).clone());
            }
        }
    }
    let c_form = PairingForm::new(FreeGradedModule::new(lp, m, cs.iter().map(|&c| r0[c]).collect()), pc);
    c_form.check().map_err(|e| internal(format!("induced pairing on C: {e}")))?;

    let mut rhs: BTreeMap<VarSet, usize> = BTreeMap::new();
    for &c in &cs {
        *rhs.entry(r0[c]).or_default() += 1;
        *rhs.entry(r0[c] | bit(l)).or_default() += 1;
    }
    for q in &qs {
        *rhs.entry(q.0 | bit(l)).or_default() += 1;
        *rhs.entry(q.0 | bit(lp)).or_default() += 1;
    }

    let c_sections = descend_c(node, sp, &cs, cand);
    let q_sections = match (&node.sections, &cand.ell) {
        (Some(sec), Some(_)) => Some(NodeSections {
            root: sec.root.clone(),
            u: qs.iter().map(|q| sec.u[sp.g1[q.1]].clone()).collect(),
            a: alpha
                .iter()
                .map(|p| {
                    let mut acc = vec![F::zero(); sec.root.chains.len()];
                    for (i0, x) in p.iter().enumerate() {
                        if !x.is_zero() {
                            for (t, y) in acc.iter_mut().zip(&sec.a[sp.g0[i0]]) {
                                t.add_assign(&x.mul(y));
                            }
                        }
                    }
                    acc
                })
                .collect(),
        }),
        _ => None,
    };

    Ok(StepResult {
        dims: StepDims { m0: n0, m1: n1, q: nq, c: nc },
        hilbert_identity: rhs == m_counts,
        self_adjoint,
        exact,
        map,
        c_child: NodeModule::new(c_form, c_sections),
        q_child: Some(NodeModule::new(q_form, q_sections)),
    })
}

fn descend_c<F: Field>(node: &NodeModule<F>, sp: &Split, cs: &[usize], cand: &Candidate<F>) -> Option<NodeSections<F>> {
    let (sec, ell) = (node.sections.as_ref()?, cand.ell.as_ref()?);
    Some(NodeSections {
        root: sec.root.clone(),
        u: cs.iter().map(|&c| sec.u[sp.g0[c]].clone()).collect(),
        a: cs.iter().map(|&c| pointwise(&sec.a[sp.g0[c]], ell)).collect(),
    })
}
