//! The evaluation map and Poincaré pairings on sections and on stalks.

use crate::field::{Field, Rational};
use crate::flag::{interval, set_label, subsets, VarSet};
use crate::graded::{FreeGradedModule, MonomialMap, MultiDegree};
use crate::linalg::Mat;
use crate::sheaf::{FanData, IndecomposableSheaf, SectionModule};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairingError {
    #[error("evaluation not divisible by the product of all variables (term {0})")]
    DivisibilityViolation(String),
    #[error("degenerate pairing: block of degree {0} is singular")]
    DegeneratePairing(String),
    #[error("pairing is not symmetric")]
    NotSymmetric,
}

/// A polynomial with rational coefficients, sparse in exponent vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<MultiDegree, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }
    pub fn monomial(d: MultiDegree, c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(d, c);
        p
    }
    pub fn add_term(&mut self, d: MultiDegree, c: Rational) {
        let e = self.terms.entry(d.clone()).or_insert_with(Rational::zero);
        *e = e.add(&c);
        if Field::is_zero(e) {
            self.terms.remove(&d);
        }
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                out.add_term(a.add(b), x.mul(y));
            }
        }
        out
    }
    pub fn scale(&self, c: &Rational) -> Poly {
        let mut out = Poly::zero();
        for (d, x) in &self.terms {
            out.add_term(d.clone(), x.mul(c));
        }
        out
    }
}

/// `Σ_x ε_x f_x` over maximal chains, checked to lie in `(x_1⋯x_n)`.
pub fn evaluate(section: &[Poly], eps: &[i8], n: usize) -> Result<Poly, PairingError> {
    let mut sum = Poly::zero();
    for (f, &e) in section.iter().zip(eps) {
        for (d, c) in &f.terms {
            sum.add_term(d.clone(), c.mul(&Rational::from_i64(e as i64)));
        }
    }
    let full = interval(1, n);
    if let Some((d, _)) = sum.terms.iter().find(|(d, _)| d.support() & full != full) {
        return Err(PairingError::DivisibilityViolation(d.to_string()));
    }
    Ok(sum)
}

/// A degree-preserving symmetric pairing into `ω_{l,m}` on a free module with
/// squarefree generators. `matrix[g][h]` is the coefficient of
/// `x^{deg g + deg h - (1,…,1)}` in `⟨g, h⟩`, zero unless the degrees cover `[l, m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingForm<F> {
    pub module: FreeGradedModule,
    pub matrix: Mat<F>,
}

impl<F: Field> PairingForm<F> {
    pub fn new(module: FreeGradedModule, matrix: Mat<F>) -> Self {
        assert_eq!(matrix.rows(), module.rank());
        PairingForm { module, matrix }
    }

    pub fn covers(&self, g: usize, h: usize) -> bool {
        let r = self.module.range();
        (self.module.gens[g] | self.module.gens[h]) & r == r
    }

    /// `⟨g, h⟩` as a scalar and monomial, when it can be nonzero.
    pub fn value(&self, g: usize, h: usize) -> Option<(F, MultiDegree)> {
        if !self.covers(g, h) {
            return None;
        }
        let d = MultiDegree::from_set(self.module.gens[g])
            .add(&MultiDegree::from_set(self.module.gens[h]))
            .checked_sub(&MultiDegree::from_set(self.module.range()))
            .expect("covering degrees");
        Some((self.matrix.get(g, h).clone(), d))
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix.is_symmetric()
    }

    /// Zero outside covering pairs.
    pub fn respects_degrees(&self) -> bool {
        let n = self.module.rank();
        (0..n).all(|g| (0..n).all(|h| self.covers(g, h) || self.matrix.get(g, h).is_zero()))
    }

    /// Blocks between degree `S` and degree `S^c` generators, by `S`.
    pub fn complementary_blocks(&self) -> Vec<(VarSet, Mat<F>)> {
        let r = self.module.range();
        subsets(r)
            .into_iter()
            .map(|s| {
                let rows: Vec<usize> = (0..self.module.rank()).filter(|&g| self.module.gens[g] == s).collect();
                let cols: Vec<usize> = (0..self.module.rank()).filter(|&g| self.module.gens[g] == r & !s).collect();
                (s, self.matrix.select(&rows, &cols))
            })
            .collect()
    }

    pub fn check_nondegenerate(&self) -> Result<(), PairingError> {
        for (s, b) in self.complementary_blocks() {
            if !b.is_square() || (b.rows() > 0 && b.inverse().is_none()) {
                return Err(PairingError::DegeneratePairing(set_label(s)));
            }
        }
        Ok(())
    }

    pub fn check(&self) -> Result<(), PairingError> {
        if !self.is_symmetric() {
            return Err(PairingError::NotSymmetric);
        }
        self.check_nondegenerate()
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> PairingForm<G> {
        let rows: Vec<Vec<G>> = (0..self.matrix.rows()).map(|i| self.matrix.row(i).iter().map(&f).collect()).collect();
        PairingForm::new(self.module.clone(), Mat::from_rows(rows, self.matrix.cols()))
    }

    /// The adjoint `P^{-1} Lᵀ P` of an endomorphism, and whether it equals `L`.
    pub fn adjoint(&self, l: &MonomialMap<F>) -> Option<(Mat<F>, bool)> {
        let inv = self.matrix.inverse()?;
        let adj = inv.mul(&l.matrix.transpose()).mul(&self.matrix);
        let same = adj == l.matrix;
        Some((adj, same))
    }
}

/// Scalar pairing of two flag functions: `Σ ε_F a[F] b[F]`.
fn signed_dot(eps: &[i8], a: &[i64], b: &[i64]) -> i64 {
    eps.iter().zip(a).zip(b).map(|((&e, &x), &y)| e as i64 * x * y).sum()
}

/// The pairing on global sections by multiplication and evaluation.
pub fn pairing_on_sections(sm: &SectionModule) -> Result<PairingForm<Rational>, PairingError> {
    let k = sm.rank();
    let full = interval(1, sm.n);
    let mut m = Mat::zeros(k, k);
    for g in 0..k {
        for h in g..k {
            let v = signed_dot(&sm.eps, &sm.sections[g], &sm.sections[h]);
            let covers = (sm.module.gens[g] | sm.module.gens[h]) == full;
            if !covers && v != 0 {
                let d = MultiDegree::from_set(sm.module.gens[g]).add(&MultiDegree::from_set(sm.module.gens[h]));
                return Err(PairingError::DivisibilityViolation(d.to_string()));
            }
            if covers {
                m.set(g, h, Rational::from_i64(v));
                m.set(h, g, Rational::from_i64(v));
            }
        }
    }
    let pf = PairingForm::new(sm.module.clone(), m);
    pf.check()?;
    Ok(pf)
}

/// The pairing on `𝓛_σ / x_d 𝓛_σ` by evaluation over the boundary of `σ`.
pub fn stalk_pairing(fan: &FanData, sheaf: &IndecomposableSheaf, s: usize) -> Result<PairingForm<Rational>, PairingError> {
    let st = &sheaf.stalks[&s];
    let d = st.dim;
    let eps = fan.flag_signs(s);
    let module = FreeGradedModule::new(1, d.saturating_sub(1), st.module.gens.clone());
    let full = module.range();
    let k = module.rank();
    let mut m = Mat::zeros(k, k);
    for g in 0..k {
        for h in g..k {
            let mut v = Rational::zero();
            for ((e, a), b) in eps.iter().zip(&st.reps[g]).zip(&st.reps[h]) {
                v = v.add(&a.mul(b).mul(&Rational::from_i64(*e as i64)));
            }
            let covers = (module.gens[g] | module.gens[h]) & full == full;
            if !covers && !Field::is_zero(&v) {
                return Err(PairingError::DivisibilityViolation(format!("{} at {}", set_label(module.gens[g] | module.gens[h]), fan.poset.id(s))));
            }
            if covers {
                m.set(g, h, v.clone());
                m.set(h, g, v);
            }
        }
    }
    let pf = PairingForm::new(module, m);
    pf.check()?;
    Ok(pf)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CompatibilityReport {
    pub cone: String,
    pub pairs_checked: usize,
    pub passed: bool,
}

/// Checks `⟨f,g⟩_σ = Σ_τ or^σ_τ ⟨f_τ, g_τ⟩_τ` on generator pairs, with the
/// restrictions expanded in the facet generators. `negate` flips the sign
/// used for one facet.
pub fn compatibility_check(
    fan: &FanData,
    sheaf: &IndecomposableSheaf,
    pairings: &BTreeMap<usize, PairingForm<Rational>>,
    s: usize,
    negate: Option<usize>,
) -> CompatibilityReport {
    let st = &sheaf.stalks[&s];
    let d = st.dim;
    let mut checked = 0;
    let mut passed = true;
    if d == 0 {
        return CompatibilityReport { cone: fan.poset.id(s).into(), pairs_checked: 0, passed };
    }
    let ps = &pairings[&s];
    let below = interval(1, d.saturating_sub(2));
    let k = st.module.rank();
    for g in 0..k {
        for h in g..k {
            let u = st.module.gens[g] | st.module.gens[h];
            if u & below != below {
                continue;
            }
            let mut rhs = Rational::zero();
            for &tau in fan.facets(s) {
                let res = &sheaf.restrictions[&(s, tau)];
                let pt = &pairings[&tau];
                let (cg, ch) = (res.matrix.col(g), res.matrix.col(h));
                let mut v = Rational::zero();
                for (a, x) in cg.iter().enumerate() {
                    if Field::is_zero(x) {
                        continue;
                    }
                    for (b, y) in ch.iter().enumerate() {
                        if !Field::is_zero(y) {
                            v = v.add(&x.mul(y).mul(pt.matrix.get(a, b)));
                        }
                    }
                }
                let mut sign = fan.or(s, tau) as i64;
                if negate == Some(tau) {
                    sign = -sign;
                }
                rhs = rhs.add(&v.mul(&Rational::from_i64(sign)));
            }
            let lhs = if ps.covers(g, h) { ps.matrix.get(g, h).clone() } else { Rational::zero() };
            passed &= lhs == rhs;
            checked += 1;
        }
    }
    CompatibilityReport { cone: fan.poset.id(s).into(), pairs_checked: checked, passed }
}

/// Stalk pairings for every cone (and the virtual top when present).
pub fn all_stalk_pairings(
    fan: &FanData,
    sheaf: &IndecomposableSheaf,
) -> Result<BTreeMap<usize, PairingForm<Rational>>, PairingError> {
    sheaf.stalks.keys().map(|&s| stalk_pairing(fan, sheaf, s).map(|p| (s, p))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::int;
    use crate::poset::{build_named, Family};
    use crate::sheaf::indecomposable_stalks;

    #[test]
    fn constant_section_evaluates_to_zero() {
        let fd = FanData::new(build_named(Family::PolygonFan, 3).unwrap()).unwrap();
        let eps = fd.flag_signs(fd.top());
        let one = vec![Poly::monomial(MultiDegree::zero(), int(1)); eps.len()];
        assert!(evaluate(&one, &eps, 2).unwrap().is_zero());
    }

    #[test]
    fn line_pairing() {
        let fd = FanData::new(build_named(Family::SimplexFan, 1).unwrap()).unwrap();
        let sm = SectionModule::compute(&fd).unwrap();
        let pf = pairing_on_sections(&sm).unwrap();
        assert!(pf.matrix.get(0, 0).is_zero());
        assert!(!pf.matrix.get(0, 1).is_zero());
    }

    #[test]
    fn stalk_pairings_compatible_on_square() {
        let fd = FanData::new(build_named(Family::PolygonFan, 4).unwrap()).unwrap();
        let sh = indecomposable_stalks(&fd, true).unwrap();
        let ps = all_stalk_pairings(&fd, &sh).unwrap();
        for &s in sh.stalks.keys() {
            assert!(compatibility_check(&fd, &sh, &ps, s, None).passed);
        }
        let top = fd.top();
        let tau = fd.facets(top)[0];
        assert!(!compatibility_check(&fd, &sh, &ps, top, Some(tau)).passed);
    }
}
