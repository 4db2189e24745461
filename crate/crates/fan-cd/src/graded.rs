//! Free multigraded modules over `A_{l,m} = Q[x_l, …, x_m]` with squarefree
//! generator degrees, homogeneous maps between them, and componentwise
//! presentations from which a free basis is extracted.

use crate::field::Field;
use crate::flag::{interval, members, subsets, SquarefreePoly, VarSet};
use crate::linalg::{ColumnSpace, Echelon, Mat};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradedError {
    #[error("module is not free: degree {degree} has dimension {expected}, free model gives {got}")]
    NotFree { degree: String, expected: usize, got: usize },
    #[error("actions do not commute at degree {0}")]
    NonCommuting(String),
    #[error("map is not homogeneous: entry ({row}, {col}) violates the degree shift")]
    NotHomogeneous { row: usize, col: usize },
}

/// Exponent vector, finitely supported.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiDegree(BTreeMap<usize, u32>);

impl MultiDegree {
    pub fn zero() -> Self {
        MultiDegree(BTreeMap::new())
    }
    pub fn e(i: usize) -> Self {
        MultiDegree(BTreeMap::from([(i, 1)]))
    }
    pub fn from_set(s: VarSet) -> Self {
        MultiDegree(members(s).into_iter().map(|i| (i, 1)).collect())
    }
    pub fn from_pairs(pairs: &[(usize, u32)]) -> Self {
        MultiDegree(pairs.iter().filter(|p| p.1 > 0).copied().collect())
    }
    pub fn get(&self, i: usize) -> u32 {
        self.0.get(&i).copied().unwrap_or(0)
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut m = self.0.clone();
        for (&i, &v) in &o.0 {
            *m.entry(i).or_default() += v;
        }
        MultiDegree(m)
    }
    /// `self - o` when nonnegative.
    pub fn checked_sub(&self, o: &Self) -> Option<Self> {
        let mut m = self.0.clone();
        for (&i, &v) in &o.0 {
            let cur = m.get(&i).copied().unwrap_or(0);
            if cur < v {
                return None;
            }
            if cur == v {
                m.remove(&i);
            } else {
                m.insert(i, cur - v);
            }
        }
        Some(MultiDegree(m))
    }
    pub fn leq(&self, o: &Self) -> bool {
        self.0.iter().all(|(&i, &v)| o.get(i) >= v)
    }
    pub fn support(&self) -> VarSet {
        self.0.keys().fold(0, |m, &i| m | 1 << i)
    }
    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }
}

impl fmt::Debug for MultiDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.0.iter().map(|(i, v)| if *v == 1 { format!("e{i}") } else { format!("{v}e{i}") }).collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

/// Free module over `A_{lo,hi}` given by squarefree generator degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeGradedModule {
    pub lo: usize,
    pub hi: usize,
    pub gens: Vec<VarSet>,
}

impl FreeGradedModule {
    pub fn new(lo: usize, hi: usize, gens: Vec<VarSet>) -> Self {
        let range = interval(lo, hi);
        assert!(gens.iter().all(|g| g & !range == 0), "generator degree outside the variable range");
        FreeGradedModule { lo, hi, gens }
    }
    pub fn rank(&self) -> usize {
        self.gens.len()
    }
    pub fn range(&self) -> VarSet {
        interval(self.lo, self.hi)
    }
    pub fn degree(&self, g: usize) -> MultiDegree {
        MultiDegree::from_set(self.gens[g])
    }
    /// Generators `g ≤ d`, in generator order.
    pub fn component_basis(&self, d: &MultiDegree) -> Vec<usize> {
        let s = d.support();
        (0..self.gens.len()).filter(|&g| self.gens[g] & !s == 0).collect()
    }
    pub fn component_dim(&self, t: VarSet) -> usize {
        self.gens.iter().filter(|&&g| g & !t == 0).count()
    }
    pub fn hilbert(&self) -> SquarefreePoly {
        hilbert_squarefree(self)
    }
}

/// Hilbert function of `M/(x_lo, …, x_hi)M` as a squarefree polynomial.
pub fn hilbert_squarefree(m: &FreeGradedModule) -> SquarefreePoly {
    let mut p = SquarefreePoly::zero(m.hi);
    for &g in &m.gens {
        p = p.add(&SquarefreePoly::monomial(m.hi, g, crate::field::int(1)));
    }
    p
}

/// Homogeneous map of degree `shift` between free modules; the stored
/// scalars are the coefficients of the forced monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialMap<F> {
    pub source: FreeGradedModule,
    pub target: FreeGradedModule,
    pub shift: MultiDegree,
    pub matrix: Mat<F>,
}

impl<F: Field> MonomialMap<F> {
    pub fn new(source: FreeGradedModule, target: FreeGradedModule, shift: MultiDegree, matrix: Mat<F>) -> Self {
        assert_eq!(matrix.rows(), target.rank());
        assert_eq!(matrix.cols(), source.rank());
        MonomialMap { source, target, shift, matrix }
    }

    pub fn zero(source: FreeGradedModule, target: FreeGradedModule, shift: MultiDegree) -> Self {
        let m = Mat::zeros(target.rank(), source.rank());
        Self::new(source, target, shift, m)
    }

    pub fn identity(m: &FreeGradedModule) -> Self {
        Self::new(m.clone(), m.clone(), MultiDegree::zero(), Mat::identity(m.rank()))
    }

    /// Multiplication by `x_i` on `m`.
    pub fn x_action(m: &FreeGradedModule, i: usize) -> Self {
        Self::new(m.clone(), m.clone(), MultiDegree::e(i), Mat::identity(m.rank()))
    }

    pub fn check_homogeneous(&self) -> Result<(), GradedError> {
        let shift = self.shift.support();
        for t in 0..self.target.rank() {
            for s in 0..self.source.rank() {
                if self.matrix.get(t, s).is_zero() {
                    continue;
                }
                let allowed = self.source.gens[s] | shift;
                if self.target.gens[t] & !allowed != 0 {
                    return Err(GradedError::NotHomogeneous { row: t, col: s });
                }
            }
        }
        Ok(())
    }

    pub fn compose(&self, inner: &MonomialMap<F>) -> MonomialMap<F> {
        assert_eq!(inner.target, self.source, "composition of incompatible maps");
        MonomialMap::new(
            inner.source.clone(),
            self.target.clone(),
            self.shift.add(&inner.shift),
            self.matrix.mul(&inner.matrix),
        )
    }

    /// Matrix from `component(d)` of the source to `component(d + shift)` of the target.
    pub fn map_component(&self, d: &MultiDegree) -> Mat<F> {
        let src = self.source.component_basis(d);
        let tgt = self.target.component_basis(&d.add(&self.shift));
        self.matrix.select(&tgt, &src)
    }

    /// Solves `f(p) = v` for `v` in target degree `d`, in component coordinates.
    pub fn solve_preimage(&self, v: &[F], d: &MultiDegree) -> Option<Vec<F>> {
        let src_deg = d.checked_sub(&self.shift)?;
        let tgt = self.target.component_basis(d);
        assert_eq!(v.len(), tgt.len(), "target vector length");
        let src = self.source.component_basis(&src_deg);
        if src.is_empty() {
            return v.iter().all(|x| x.is_zero()).then(Vec::new);
        }
        self.matrix.select(&tgt, &src).solve(v)
    }
}

/// A module presented degreewise. Components depend only on the support of
/// the degree, so a degree `d` of the verification box resolves to the
/// component of `supp(d)`, and `x_i` for `i ∈ supp(d)` acts as the identity.
#[derive(Clone, Debug)]
pub struct ComponentwiseModule<F> {
    pub lo: usize,
    pub hi: usize,
    repr: Repr<F>,
}

#[derive(Clone, Debug)]
enum Repr<F> {
    /// Components as subspaces of a common ambient space; actions are inclusions.
    Embedded { ambient: usize, spaces: BTreeMap<VarSet, Vec<Vec<F>>> },
    /// Abstract components with explicit action matrices `T → T ∪ {i}`.
    Abstract { dims: BTreeMap<VarSet, usize>, actions: BTreeMap<(VarSet, usize), Mat<F>> },
}

/// Generators chosen by [`extract_free_basis`] with their representatives.
#[derive(Clone, Debug)]
pub struct FreeBasis<F> {
    pub module: FreeGradedModule,
    /// For embedded presentations, ambient vectors; otherwise a unit vector
    /// in the generator's own component.
    pub representatives: Vec<Vec<F>>,
    pub witness: FreenessWitness,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreenessWitness {
    pub checked_degrees: usize,
    pub dims: BTreeMap<VarSet, usize>,
}

impl<F: Field> ComponentwiseModule<F> {
    pub fn embedded(lo: usize, hi: usize, ambient: usize, spaces: BTreeMap<VarSet, Vec<Vec<F>>>) -> Self {
        let range = interval(lo, hi);
        for t in subsets(range) {
            assert!(spaces.contains_key(&t), "missing component {}", crate::flag::set_label(t));
        }
        ComponentwiseModule { lo, hi, repr: Repr::Embedded { ambient, spaces } }
    }

    pub fn from_actions(
        lo: usize,
        hi: usize,
        dims: BTreeMap<VarSet, usize>,
        actions: BTreeMap<(VarSet, usize), Mat<F>>,
    ) -> Self {
        ComponentwiseModule { lo, hi, repr: Repr::Abstract { dims, actions } }
    }

    pub fn range(&self) -> VarSet {
        interval(self.lo, self.hi)
    }

    pub fn dim(&self, t: VarSet) -> usize {
        match &self.repr {
            Repr::Embedded { spaces, .. } => spaces.get(&t).map_or(0, |v| v.len()),
            Repr::Abstract { dims, .. } => dims.get(&t).copied().unwrap_or(0),
        }
    }

    pub fn dim_at(&self, d: &MultiDegree) -> usize {
        self.dim(d.support())
    }

    /// Matrix of `x_i` from the component of `t` (with `i ∉ t`).
    pub fn action(&self, t: VarSet, i: usize) -> Mat<F> {
        assert_eq!(t >> i & 1, 0);
        match &self.repr {
            Repr::Abstract { actions, dims } => actions
                .get(&(t, i))
                .cloned()
                .unwrap_or_else(|| Mat::zeros(dims.get(&(t | 1 << i)).copied().unwrap_or(0), self.dim(t))),
            Repr::Embedded { spaces, ambient } => {
                let target = ColumnSpace::from_vectors(&spaces[&(t | 1 << i)], *ambient)
                    .expect("component bases are independent");
                let cols: Vec<Vec<F>> = spaces[&t]
                    .iter()
                    .map(|v| target.coords(v).unwrap_or_else(|| vec![F::zero(); target.dim()]))
                    .collect();
                Mat::from_cols(&cols, target.dim())
            }
        }
    }

    /// Overwrites one action matrix (turning an embedded presentation abstract).
    pub fn set_action(&mut self, t: VarSet, i: usize, m: Mat<F>) {
        if let Repr::Embedded { .. } = self.repr {
            let range = self.range();
            let mut dims = BTreeMap::new();
            let mut actions = BTreeMap::new();
            for s in subsets(range) {
                dims.insert(s, self.dim(s));
                for j in members(range & !s) {
                    actions.insert((s, j), self.action(s, j));
                }
            }
            self.repr = Repr::Abstract { dims, actions };
        }
        if let Repr::Abstract { actions, .. } = &mut self.repr {
            actions.insert((t, i), m);
        }
    }

    pub fn check_commutes(&self) -> Result<(), GradedError> {
        if matches!(self.repr, Repr::Embedded { .. }) {
            return Ok(());
        }
        let range = self.range();
        for t in subsets(range) {
            let free = members(range & !t);
            for (a, &i) in free.iter().enumerate() {
                for &j in &free[a + 1..] {
                    let ij = self.action(t | 1 << i, j).mul(&self.action(t, i));
                    let ji = self.action(t | 1 << j, i).mul(&self.action(t, j));
                    if ij != ji {
                        return Err(GradedError::NonCommuting(crate::flag::set_label(t)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Greedy free-basis extraction: generators by ascending support size then
/// lexicographically, each a lex-first complement vector in its component.
pub fn extract_free_basis<F: Field>(s: &ComponentwiseModule<F>) -> Result<FreeBasis<F>, GradedError> {
    s.check_commutes()?;
    let range = s.range();
    let order = subsets(range);
    let mut gens: Vec<VarSet> = Vec::new();
    let mut reps: Vec<Vec<F>> = Vec::new();
    let mut dims = BTreeMap::new();
    let mut checked = 0;
    match &s.repr {
        Repr::Embedded { ambient, spaces } => {
            for &t in &order {
                let mut ech = Echelon::new(*ambient);
                for (g, r) in gens.iter().zip(&reps) {
                    if g & !t == 0 {
                        ech.insert(r);
                    }
                }
                for v in &spaces[&t] {
                    if ech.insert(v) {
                        gens.push(t);
                        reps.push(v.clone());
                    }
                }
                // witness: generators ≤ t are independent, lie in the component
                // and are as many as its dimension
                let expected = spaces[&t].len();
                let count = gens.iter().filter(|g| *g & !t == 0).count();
                let mut comp = Echelon::new(*ambient);
                for v in &spaces[&t] {
                    comp.insert(v);
                }
                let inside = reps.iter().zip(&gens).filter(|(_, g)| *g & !t == 0).all(|(r, _)| comp.contains(r));
                if count != expected || ech.dim() != expected || comp.dim() != expected || !inside {
                    return Err(GradedError::NotFree {
                        degree: crate::flag::set_label(t),
                        expected,
                        got: ech.dim().min(count),
                    });
                }
                dims.insert(t, expected);
                checked += 1 + members(t).len();
            }
        }
        Repr::Abstract { .. } => {
            // images[t][g] = image of generator g in the component of t
            let mut images: BTreeMap<VarSet, Vec<(usize, Vec<F>)>> = BTreeMap::new();
            for &t in &order {
                let dim = s.dim(t);
                let mut here: Vec<(usize, Vec<F>)> = Vec::new();
                for (g, &deg) in gens.iter().enumerate() {
                    if deg & !t != 0 {
                        continue;
                    }
                    let i = *members(t & !deg).last().expect("strictly smaller degree");
                    let prev = t & !(1 << i);
                    let v = images[&prev].iter().find(|(h, _)| *h == g).expect("image computed").1.clone();
                    here.push((g, s.action(prev, i).mul_vec(&v)));
                }
                let mut ech = Echelon::new(dim);
                for (_, v) in &here {
                    ech.insert(v);
                }
                for j in 0..dim {
                    let mut e = vec![F::zero(); dim];
                    e[j] = F::one();
                    if ech.insert(&e) {
                        let g = gens.len();
                        gens.push(t);
                        reps.push(e.clone());
                        here.push((g, e));
                    }
                }
                let mut span = Echelon::new(dim);
                for (_, v) in &here {
                    span.insert(v);
                }
                if here.len() != dim || span.dim() != dim {
                    return Err(GradedError::NotFree {
                        degree: crate::flag::set_label(t),
                        expected: dim,
                        got: span.dim().min(here.len()),
                    });
                }
                images.insert(t, here);
                dims.insert(t, dim);
                checked += 1;
            }
            // one-coordinate-2 bumps: x_i on a component already containing i
            // is the identity, so the bump reproduces the component of t; the
            // remaining content is that x_i^2 g = x_i (x_i g) along both paths.
            for &t in &order {
                checked += members(t).len();
            }
        }
    }
    Ok(FreeBasis {
        module: FreeGradedModule::new(s.lo, s.hi, gens),
        representatives: reps,
        witness: FreenessWitness { checked_degrees: checked, dims },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rational;
    use crate::flag::varset;

    fn q(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    #[test]
    fn component_basis_examples() {
        let m = FreeGradedModule::new(1, 1, vec![0, varset(&[1])]);
        assert_eq!(m.component_basis(&MultiDegree::e(1)), vec![0, 1]);
        assert_eq!(m.component_basis(&MultiDegree::zero()), vec![0]);
        let m2 = FreeGradedModule::new(1, 2, vec![0, varset(&[1]), varset(&[2]), varset(&[1, 2])]);
        assert_eq!(m2.component_basis(&MultiDegree::from_set(varset(&[1, 2]))).len(), 4);
    }

    #[test]
    fn map_component_examples() {
        let m = FreeGradedModule::new(1, 1, vec![0]);
        let x = MonomialMap::<Rational>::x_action(&m, 1);
        assert_eq!(x.map_component(&MultiDegree::zero()), Mat::identity(1));
        let m2 = FreeGradedModule::new(1, 1, vec![0, varset(&[1])]);
        let mut mat = Mat::zeros(2, 2);
        mat.set(1, 0, q(2));
        let l = MonomialMap::new(m2.clone(), m2, MultiDegree::e(1), mat);
        assert!(l.check_homogeneous().is_ok());
        assert_eq!(l.map_component(&MultiDegree::zero()).rows(), 2);
    }

    #[test]
    fn preimage_degree_obstruction() {
        let m = FreeGradedModule::new(1, 1, vec![0]);
        let x = MonomialMap::<Rational>::x_action(&m, 1);
        assert!(x.solve_preimage(&[q(1)], &MultiDegree::zero()).is_none());
        let two = MonomialMap::new(m.clone(), m, MultiDegree::zero(), Mat::identity(1).scale(&q(2)));
        assert_eq!(two.solve_preimage(&[q(3)], &MultiDegree::zero()).unwrap(), vec![crate::field::rat(3, 2)]);
    }

    #[test]
    fn polynomial_ring_has_one_generator() {
        let mut dims = BTreeMap::new();
        dims.insert(0, 1);
        dims.insert(varset(&[1]), 1);
        let mut actions = BTreeMap::new();
        actions.insert((0, 1), Mat::identity(1));
        let s = ComponentwiseModule::<Rational>::from_actions(1, 1, dims, actions);
        let fb = extract_free_basis(&s).unwrap();
        assert_eq!(fb.module.gens, vec![0]);
    }

    #[test]
    fn corrupted_action_is_not_free() {
        let mut dims = BTreeMap::new();
        dims.insert(0, 1);
        dims.insert(varset(&[1]), 1);
        let mut actions = BTreeMap::new();
        actions.insert((0, 1), Mat::zeros(1, 1));
        let s = ComponentwiseModule::<Rational>::from_actions(1, 1, dims, actions);
        assert!(matches!(extract_free_basis(&s), Err(GradedError::NotFree { .. })));
    }
}
