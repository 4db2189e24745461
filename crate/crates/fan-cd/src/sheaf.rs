//! Sheaves on a fan and on its barycentric subdivision.
//!
//! Everything is expressed in flag coordinates: an element of a stalk at a
//! cone `σ` in a squarefree degree is a function on the flags
//! `(σ_1 < … < σ_d = σ)`, the monomial factor being implicit. Restriction to
//! a facet `τ` reads the value at `G + σ` for each flag `G` of `τ`.

use crate::field::{Field, Fp, Rational};
use crate::flag::{interval, members, set_label, subsets, VarSet};
use crate::graded::{extract_free_basis, ComponentwiseModule, FreeGradedModule, GradedError, MonomialMap};
use crate::linalg::{ColumnSpace, Echelon, Mat};
use crate::poset::{ChainPoset, GradedPoset, OrientationData, PosetError};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SheafError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Graded(#[from] GradedError),
    #[error("invalid sheaf: {0}")]
    InvalidSheaf(String),
}

/// A validated fan with orientation, flags of every element and the lifting
/// tables `G ↦ G + σ` along covers.
#[derive(Clone, Debug)]
pub struct FanData {
    pub poset: GradedPoset,
    pub orientation: OrientationData,
    zero: usize,
    flags: Vec<Vec<Vec<usize>>>,
    lifts: HashMap<(usize, usize), Vec<usize>>,
}

impl FanData {
    pub fn new(poset: GradedPoset) -> Result<Self, PosetError> {
        poset.ensure_valid()?;
        let orientation = OrientationData::compute(&poset)?;
        let zero = poset.zero().ok_or_else(|| PosetError::InvalidPoset("no zero cone".into()))?;
        let flags: Vec<Vec<Vec<usize>>> = (0..=poset.len()).map(|s| poset.flags(s)).collect();
        let index: Vec<HashMap<&[usize], usize>> = flags
            .iter()
            .map(|fl| fl.iter().enumerate().map(|(i, f)| (f.as_slice(), i)).collect())
            .collect();
        let mut lifts = HashMap::new();
        for s in 0..=poset.len() {
            for &t in poset.down(s) {
                let table = flags[t]
                    .iter()
                    .map(|g| {
                        let mut h = g.clone();
                        if s != poset.top() {
                            h.push(s);
                        }
                        index[s][h.as_slice()]
                    })
                    .collect();
                lifts.insert((s, t), table);
            }
        }
        Ok(FanData { poset, orientation, zero, flags, lifts })
    }

    pub fn n(&self) -> usize {
        self.poset.rank_n()
    }
    pub fn top(&self) -> usize {
        self.poset.top()
    }
    pub fn zero(&self) -> usize {
        self.zero
    }
    /// Cone dimension; the virtual top counts as `n + 1`.
    pub fn dim(&self, s: usize) -> usize {
        self.poset.rank(s)
    }
    pub fn flags(&self, s: usize) -> &[Vec<usize>] {
        &self.flags[s]
    }
    pub fn facets(&self, s: usize) -> &[usize] {
        self.poset.down(s)
    }
    pub fn cones_of_dim(&self, d: usize) -> Vec<usize> {
        if d > self.n() {
            return Vec::new();
        }
        self.poset.of_rank(d)
    }
    /// Position in `flags(s)` of `G + s` for each flag `G` of the facet `t`.
    pub fn lift(&self, s: usize, t: usize) -> &[usize] {
        &self.lifts[&(s, t)]
    }
    pub fn or(&self, s: usize, t: usize) -> i8 {
        self.orientation.or(s, t)
    }
    /// Sign `or^σ_{σ_{d-1}} ⋯ or^{σ_1}_0` of a flag of `s`.
    pub fn flag_sign(&self, s: usize, flag: &[usize]) -> i8 {
        self.orientation.flag_sign(flag, s, self.zero)
    }
    pub fn flag_signs(&self, s: usize) -> Vec<i8> {
        self.flags[s].iter().map(|f| self.flag_sign(s, f)).collect()
    }
    /// All faces of `s` (including `s`), grouped by dimension.
    pub fn faces_by_dim(&self, s: usize) -> Vec<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![s];
        while let Some(t) = stack.pop() {
            if seen.insert(t) {
                stack.extend_from_slice(self.poset.down(t));
            }
        }
        let mut out = vec![Vec::new(); self.dim(s) + 1];
        for t in seen {
            out[self.dim(t)].push(t);
        }
        out
    }

    /// Values of a flag function of `s` on the flags of its facet `t`.
    pub fn gather<F: Field>(&self, s: usize, t: usize, v: &[F], copies: usize) -> Vec<F> {
        let lift = self.lift(s, t);
        let (ns, nt) = (self.flags[s].len(), self.flags[t].len());
        let mut out = Vec::with_capacity(nt * copies);
        for c in 0..copies {
            out.extend(lift.iter().map(|&i| v[c * ns + i].clone()));
        }
        out
    }
}

/// Classes of flags under flips at the given ranks (two flags are related
/// when they differ only at one such rank). Returns the class of each flag
/// and the number of classes, numbered by first occurrence.
pub fn constancy_classes(flags: &[Vec<usize>], ranks: VarSet) -> (Vec<usize>, usize) {
    let n = flags.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for k in members(ranks) {
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        for (i, f) in flags.iter().enumerate() {
            if k == 0 || k > f.len() {
                continue;
            }
            let mut key = f.clone();
            key.remove(k - 1);
            match seen.get(&key) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
                None => {
                    seen.insert(key, i);
                }
            }
        }
    }
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut class = Vec::with_capacity(n);
    for i in 0..n {
        let r = find(&mut parent, i);
        let next = ids.len();
        class.push(*ids.entry(r).or_insert(next));
    }
    let k = ids.len();
    (class, k)
}

/// Class indicators spanning the degree-`t` component of sections over the
/// flags of `s` (constancy at ranks `[1, dim s - 1] \ t`).
pub fn class_indicators(fan: &FanData, s: usize, t: VarSet) -> Vec<Vec<i64>> {
    let d = fan.dim(s);
    let (class, k) = constancy_classes(fan.flags(s), interval(1, d - 1) & !t);
    let mut out = vec![vec![0i64; class.len()]; k];
    for (i, c) in class.iter().enumerate() {
        out[*c][i] = 1;
    }
    out
}

/// Field used for rank decisions: exact rationals up to this many maximal
/// chains, the prime field beyond.
pub const RATIONAL_LIMIT: usize = 64;

/// The section module of the structure sheaf on the barycentric subdivision,
/// with generators given by integer sections (functions on maximal chains).
#[derive(Clone, Debug)]
pub struct SectionModule {
    pub n: usize,
    pub chains: Vec<Vec<usize>>,
    pub eps: Vec<i8>,
    pub module: FreeGradedModule,
    pub sections: Vec<Vec<i64>>,
    pub arith: &'static str,
}

impl SectionModule {
    pub fn compute(fan: &FanData) -> Result<Self, SheafError> {
        if fan.flags(fan.top()).len() <= RATIONAL_LIMIT {
            Self::compute_with::<Rational>(fan)
        } else {
            Self::compute_with::<Fp>(fan)
        }
    }

    pub fn compute_with<F: Field>(fan: &FanData) -> Result<Self, SheafError> {
        let top = fan.top();
        let n = fan.n();
        let chains = fan.flags(top).to_vec();
        let eps = fan.flag_signs(top);
        let mut gens: Vec<VarSet> = Vec::new();
        let mut sections: Vec<Vec<i64>> = Vec::new();
        for t in subsets(interval(1, n)) {
            let (class, k) = constancy_classes(&chains, interval(1, n) & !t);
            let mut rep = vec![usize::MAX; k];
            for (i, &c) in class.iter().enumerate() {
                if rep[c] == usize::MAX {
                    rep[c] = i;
                }
            }
            let mut ech = Echelon::<F>::new(k);
            let mut lower = 0;
            for (g, u) in gens.iter().zip(&sections) {
                if g & !t == 0 {
                    lower += 1;
                    let v: Vec<F> = rep.iter().map(|&i| F::from_i64(u[i])).collect();
                    ech.insert(&v);
                }
            }
            if ech.dim() != lower {
                return Err(GradedError::NotFree { degree: set_label(t), expected: k, got: lower }.into());
            }
            for c in 0..k {
                let mut e = vec![F::zero(); k];
                e[c] = F::one();
                if ech.insert(&e) {
                    gens.push(t);
                    sections.push(class.iter().map(|&x| i64::from(x == c)).collect());
                }
            }
        }
        Ok(SectionModule {
            n,
            chains,
            eps: eps.clone(),
            module: FreeGradedModule::new(1, n, gens),
            sections,
            arith: F::NAME,
        })
    }

    pub fn rank(&self) -> usize {
        self.module.rank()
    }

    pub fn component_dims(&self) -> BTreeMap<VarSet, usize> {
        subsets(interval(1, self.n)).into_iter().map(|t| (t, self.module.component_dim(t))).collect()
    }

    /// Dimension of the degree-`s` part of the reduced module.
    pub fn reduced_dim(&self, s: VarSet) -> usize {
        self.module.gens.iter().filter(|&&g| g == s).count()
    }
}

/// A stalk: a free module over the polynomial ring in the variables `vars`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stalk {
    pub vars: VarSet,
    pub module: FreeGradedModule,
}

impl Stalk {
    pub fn component(&self, t: VarSet) -> Vec<usize> {
        if t & !self.vars != 0 {
            Vec::new()
        } else {
            (0..self.module.rank()).filter(|&g| self.module.gens[g] & !t == 0).collect()
        }
    }
}

/// Sheaf data on a poset: stalks and restriction maps along covers.
#[derive(Clone, Debug)]
pub struct SheafData {
    pub n: usize,
    pub elements: Vec<String>,
    pub stalks: Vec<Stalk>,
    pub restrictions: BTreeMap<(usize, usize), MonomialMap<Rational>>,
    pub maximal: Vec<usize>,
}

/// The structure sheaf on chains: polynomials in the variables indexed by
/// the rank set of the chain, with projections as restrictions.
pub fn sheaf_b(bd: &ChainPoset, n: usize) -> SheafData {
    let mut stalks = Vec::with_capacity(bd.len());
    let mut elements = Vec::with_capacity(bd.len());
    for i in 0..bd.len() {
        let vars = bd.label(i);
        stalks.push(Stalk { vars, module: FreeGradedModule::new(1, n, vec![0]) });
        elements.push(format!("{:?}", bd.chain(i)));
    }
    let mut restrictions = BTreeMap::new();
    let by_len: Vec<Vec<usize>> = (0..=n).map(|r| bd.of_rank(r)).collect();
    for r in 1..=n {
        for &x in &by_len[r] {
            for &y in &by_len[r - 1] {
                if bd.is_subchain(y, x) {
                    let m = MonomialMap::new(
                        stalks[x].module.clone(),
                        stalks[y].module.clone(),
                        crate::graded::MultiDegree::zero(),
                        Mat::identity(1),
                    );
                    restrictions.insert((x, y), m);
                }
            }
        }
    }
    SheafData { n, elements, stalks, restrictions, maximal: by_len[n].clone() }
}

/// Global sections per squarefree degree from the maximal elements and the
/// codimension-one compatibilities.
pub fn global_sections(sh: &SheafData) -> Result<ComponentwiseModule<Rational>, SheafError> {
    let offsets: Vec<usize> = sh
        .maximal
        .iter()
        .scan(0, |acc, &x| {
            let o = *acc;
            *acc += sh.stalks[x].module.rank();
            Some(o)
        })
        .collect();
    let ambient: usize = sh.maximal.iter().map(|&x| sh.stalks[x].module.rank()).sum();
    let pos: HashMap<usize, usize> = sh.maximal.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut below: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(x, y) in sh.restrictions.keys() {
        if pos.contains_key(&x) {
            below.entry(y).or_default().push(x);
        }
    }
    let mut spaces = BTreeMap::new();
    for t in subsets(interval(1, sh.n)) {
        let mut cols: Vec<(usize, usize)> = Vec::new();
        for (i, &x) in sh.maximal.iter().enumerate() {
            for g in sh.stalks[x].component(t) {
                cols.push((i, g));
            }
        }
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        for (&y, uppers) in &below {
            let tgt = sh.stalks[y].component(t);
            if tgt.is_empty() {
                continue;
            }
            for w in uppers.windows(2) {
                for &h in &tgt {
                    let mut row = vec![Rational::zero(); cols.len()];
                    for (sign, x) in [(1i64, w[0]), (-1, w[1])] {
                        let res = &sh.restrictions[&(x, y)];
                        for (c, &(i, g)) in cols.iter().enumerate() {
                            if sh.maximal[i] == x {
                                let v = res.matrix.get(h, g).mul(&Rational::from_i64(sign));
                                row[c] = row[c].add(&v);
                            }
                        }
                    }
                    rows.push(row);
                }
            }
        }
        let basis: Vec<Vec<Rational>> = if rows.is_empty() {
            (0..cols.len())
                .map(|c| {
                    let mut e = vec![Rational::zero(); cols.len()];
                    e[c] = Rational::one();
                    e
                })
                .collect()
        } else {
            Mat::from_rows(rows, cols.len()).kernel()
        };
        let embedded = basis
            .into_iter()
            .map(|k| {
                let mut v = vec![Rational::zero(); ambient];
                for (c, &(i, g)) in cols.iter().enumerate() {
                    v[offsets[i] + g] = k[c].clone();
                }
                v
            })
            .collect();
        spaces.insert(t, embedded);
    }
    Ok(ComponentwiseModule::embedded(1, sh.n, ambient, spaces))
}

/// A stalk of the indecomposable sheaf: generators with flag-function
/// representatives.
#[derive(Clone, Debug)]
pub struct LStalk {
    pub cone: usize,
    pub dim: usize,
    pub module: FreeGradedModule,
    pub reps: Vec<Vec<Rational>>,
}

impl LStalk {
    pub fn reps_in(&self, t: VarSet) -> Vec<Vec<Rational>> {
        self.module.component_basis(&crate::graded::MultiDegree::from_set(t)).into_iter().map(|g| self.reps[g].clone()).collect()
    }
}

/// The indecomposable sheaf, built stalk by stalk from sections over the
/// boundary of each cone.
#[derive(Clone, Debug)]
pub struct IndecomposableSheaf {
    pub stalks: BTreeMap<usize, LStalk>,
    pub restrictions: BTreeMap<(usize, usize), MonomialMap<Rational>>,
}

/// Sections over the boundary of `s` in each degree `T ⊆ [1, d-1]`, as
/// subspaces of the flag space of `s`.
fn boundary_sections(
    fan: &FanData,
    s: usize,
    stalks: &BTreeMap<usize, LStalk>,
) -> BTreeMap<VarSet, Vec<Vec<Rational>>> {
    let d = fan.dim(s);
    let nflags = fan.flags(s).len();
    let facets = fan.facets(s).to_vec();
    let mut ridges: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    if d >= 2 {
        for &t in &facets {
            for &r in fan.facets(t) {
                ridges.entry(r).or_default().push(t);
            }
        }
    }
    let mut out = BTreeMap::new();
    for t in subsets(interval(1, d - 1)) {
        let mut cols: Vec<Vec<Rational>> = Vec::new();
        for &tau in &facets {
            let lift = fan.lift(s, tau);
            for rep in stalks[&tau].reps_in(t) {
                let mut v = vec![Rational::zero(); nflags];
                for (j, &i) in lift.iter().enumerate() {
                    v[i] = rep[j].clone();
                }
                cols.push(v);
            }
        }
        let constrained = d >= 2 && t >> (d - 1) & 1 == 0;
        let vectors = if !constrained || cols.is_empty() {
            cols
        } else {
            let mut rows = Vec::new();
            for (r, mids) in &ridges {
                let (l1, l2) = (fan.lift(mids[0], *r), fan.lift(mids[1], *r));
                let (s1, s2) = (fan.lift(s, mids[0]), fan.lift(s, mids[1]));
                for j in 0..fan.flags(*r).len() {
                    let (a, b) = (s1[l1[j]], s2[l2[j]]);
                    rows.push(cols.iter().map(|c| c[a].sub(&c[b])).collect::<Vec<Rational>>());
                }
            }
            let m = Mat::from_rows(rows, cols.len());
            m.kernel()
                .into_iter()
                .map(|k| {
                    let mut v = vec![Rational::zero(); nflags];
                    for (c, col) in k.iter().zip(&cols) {
                        if !Field::is_zero(c) {
                            for (x, y) in v.iter_mut().zip(col) {
                                x.add_assign(&c.mul(y));
                            }
                        }
                    }
                    v
                })
                .collect()
        };
        let mut ech = Echelon::new(nflags);
        let basis: Vec<Vec<Rational>> = vectors.into_iter().filter(|v| ech.insert(v)).collect();
        out.insert(t, basis);
    }
    out
}

pub fn indecomposable_stalks(fan: &FanData, include_top: bool) -> Result<IndecomposableSheaf, SheafError> {
    let mut stalks: BTreeMap<usize, LStalk> = BTreeMap::new();
    let zero = fan.zero();
    stalks.insert(
        zero,
        LStalk { cone: zero, dim: 0, module: FreeGradedModule::new(1, 0, vec![0]), reps: vec![vec![Rational::one()]] },
    );
    let mut order: Vec<usize> = (1..=fan.n()).flat_map(|d| fan.cones_of_dim(d)).collect();
    if include_top {
        order.push(fan.top());
    }
    let mut restrictions = BTreeMap::new();
    for s in order {
        let d = fan.dim(s);
        let spaces = boundary_sections(fan, s, &stalks);
        let comp = ComponentwiseModule::embedded(1, d - 1, fan.flags(s).len(), spaces);
        let basis = extract_free_basis(&comp)?;
        let module = FreeGradedModule::new(1, d, basis.module.gens.clone());
        let stalk = LStalk { cone: s, dim: d, module, reps: basis.representatives };
        for &tau in fan.facets(s) {
            let target = &stalks[&tau];
            let space = ColumnSpace::from_vectors(&target.reps, fan.flags(tau).len())
                .ok_or_else(|| SheafError::InvalidSheaf(format!("dependent generators at {}", fan.poset.id(tau))))?;
            let mut cols = Vec::new();
            for rep in &stalk.reps {
                let g = fan.gather(s, tau, rep, 1);
                cols.push(space.coords(&g).ok_or_else(|| {
                    SheafError::InvalidSheaf(format!("restriction {} -> {} leaves the stalk", fan.poset.id(s), fan.poset.id(tau)))
                })?);
            }
            let m = MonomialMap::new(
                stalk.module.clone(),
                target.module.clone(),
                crate::graded::MultiDegree::zero(),
                Mat::from_cols(&cols, target.module.rank()),
            );
            m.check_homogeneous()?;
            restrictions.insert((s, tau), m);
        }
        stalks.insert(s, stalk);
    }
    Ok(IndecomposableSheaf { stalks, restrictions })
}

impl IndecomposableSheaf {
    /// Components `(σ, T)` for cones of dimension at least `lo`.
    pub fn to_flag_sheaf<F: Field>(&self, fan: &FanData, lo: usize) -> FlagSheaf<F> {
        let mut comps = BTreeMap::new();
        for (&s, st) in &self.stalks {
            if s == fan.top() || st.dim < lo {
                continue;
            }
            for t in subsets(interval(lo.max(1), st.dim)) {
                let num: Vec<Vec<F>> = st.reps_in(t).iter().map(|v| to_field(v)).collect();
                comps.insert((s, t), Subquotient::new(fan.flags(s).len(), &num, &[]).expect("independent"));
            }
        }
        FlagSheaf { lo, copies: 1, comps }
    }

    /// Compares every stalk with the pushforward description: degree-`T`
    /// sections are the functions constant on flips at ranks outside `T`.
    pub fn matches_pushforward(&self, fan: &FanData) -> Result<(), String> {
        for (&s, st) in &self.stalks {
            if st.dim == 0 {
                continue;
            }
            for t in subsets(interval(1, st.dim - 1)) {
                let reps = st.reps_in(t);
                let ind = class_indicators(fan, s, t);
                let nflags = fan.flags(s).len();
                let mut both = Echelon::<Rational>::new(nflags);
                for v in &reps {
                    both.insert(v);
                }
                let own = both.dim();
                for v in &ind {
                    both.insert(&v.iter().map(|&x| Rational::from_i64(x)).collect::<Vec<_>>());
                }
                if own != reps.len() || own != ind.len() || both.dim() != own {
                    return Err(format!(
                        "stalk at {} differs from the pushforward in degree {}",
                        fan.poset.id(s),
                        set_label(t)
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn to_field<F: Field>(v: &[Rational]) -> Vec<F> {
    v.iter().map(|x| F::from_rational(x).expect("denominator invertible")).collect()
}

/// `num / den` inside a common ambient space, with a complement basis.
#[derive(Clone, Debug)]
pub struct Subquotient<F> {
    ambient: usize,
    den: Vec<Vec<F>>,
    quot: Vec<Vec<F>>,
    space: Option<ColumnSpace<F>>,
}

impl<F: Field> Subquotient<F> {
    /// `den` must lie in the span of `num`.
    pub fn new(ambient: usize, num: &[Vec<F>], den: &[Vec<F>]) -> Option<Self> {
        let mut ech = Echelon::new(ambient);
        let den: Vec<Vec<F>> = den.iter().filter(|v| ech.insert(v)).cloned().collect();
        let quot: Vec<Vec<F>> = num.iter().filter(|v| ech.insert(v)).cloned().collect();
        let mut span = Echelon::new(ambient);
        num.iter().for_each(|v| {
            span.insert(v);
        });
        if den.iter().any(|v| !span.contains(v)) {
            return None;
        }
        let all: Vec<Vec<F>> = den.iter().chain(&quot).cloned().collect();
        let space = if all.is_empty() { None } else { ColumnSpace::from_vectors(&all, ambient) };
        Some(Subquotient { ambient, den, quot, space })
    }

    pub fn dim(&self) -> usize {
        self.quot.len()
    }
    pub fn ambient(&self) -> usize {
        self.ambient
    }
    pub fn basis(&self) -> &[Vec<F>] {
        &self.quot
    }
    pub fn denominator(&self) -> &[Vec<F>] {
        &self.den
    }

    /// Coordinates of the class of `v`, or `None` when `v` is outside `num`.
    pub fn coords(&self, v: &[F]) -> Option<Vec<F>> {
        match &self.space {
            None => v.iter().all(|x| x.is_zero()).then(Vec::new),
            Some(sp) => sp.coords(v).map(|c| c[self.den.len()..].to_vec()),
        }
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let amb = self.ambient + other.ambient;
        let left = |v: &Vec<F>| {
            let mut w = v.clone();
            w.extend(std::iter::repeat_n(F::zero(), other.ambient));
            w
        };
        let right = |v: &Vec<F>| {
            let mut w = vec![F::zero(); self.ambient];
            w.extend(v.iter().cloned());
            w
        };
        let den: Vec<Vec<F>> = self.den.iter().map(left).chain(other.den.iter().map(right)).collect();
        let num: Vec<Vec<F>> = den
            .iter()
            .cloned()
            .chain(self.quot.iter().map(left))
            .chain(other.quot.iter().map(right))
            .collect();
        Subquotient::new(amb, &num, &den).expect("direct sum of subquotients")
    }
}

/// Sheaf data on the cones of dimension at least `lo`, each component a
/// subquotient of `copies` stacked flag spaces.
#[derive(Clone, Debug)]
pub struct FlagSheaf<F> {
    pub lo: usize,
    pub copies: usize,
    pub comps: BTreeMap<(usize, VarSet), Subquotient<F>>,
}

impl<F: Field> FlagSheaf<F> {
    pub fn var_lo(&self) -> usize {
        self.lo.max(1)
    }

    pub fn comp_dim(&self, s: usize, t: VarSet) -> usize {
        self.comps.get(&(s, t)).map_or(0, |c| c.dim())
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        assert_eq!(self.lo, other.lo);
        let mut comps = BTreeMap::new();
        for (k, a) in &self.comps {
            if let Some(b) = other.comps.get(k) {
                comps.insert(*k, a.direct_sum(b));
            }
        }
        FlagSheaf { lo: self.lo, copies: self.copies + other.copies, comps }
    }

    /// Matrix of `or^σ_τ res^σ_τ` summed over the given sources and targets
    /// in degree `t`; `None` when some restriction leaves its target.
    fn differential(&self, fan: &FanData, sources: &[usize], targets: &[usize], t: VarSet) -> Option<Mat<F>> {
        let tdims: Vec<usize> = targets.iter().map(|&x| self.comp_dim(x, t)).collect();
        let rows: usize = tdims.iter().sum();
        let mut cols = Vec::new();
        for &s in sources {
            let Some(c) = self.comps.get(&(s, t)) else { continue };
            for b in c.basis() {
                let mut col = vec![F::zero(); rows];
                let mut off = 0;
                for (k, &tau) in targets.iter().enumerate() {
                    if let (Some(o), Some(tc)) = (fan.orientation.try_or(s, tau), self.comps.get(&(tau, t))) {
                        let g = fan.gather(s, tau, b, self.copies);
                        let coords = tc.coords(&g)?;
                        let sign = F::from_i64(o as i64);
                        for (j, x) in coords.iter().enumerate() {
                            col[off + j] = sign.mul(x);
                        }
                    }
                    off += tdims[k];
                }
                cols.push(col);
            }
        }
        Some(Mat::from_cols(&cols, rows))
    }

    pub fn cellular_complex(&self, fan: &FanData, scope: Scope, t: VarSet) -> Result<CellularComplex<F>, SheafError> {
        let groups: Vec<Vec<usize>> = match scope {
            Scope::Global => (self.lo..=fan.n()).rev().map(|d| fan.cones_of_dim(d)).collect(),
            Scope::Boundary(s) => {
                let faces = fan.faces_by_dim(s);
                (self.lo..=fan.dim(s)).rev().map(|d| faces[d].clone()).collect()
            }
        };
        let terms: Vec<usize> = groups.iter().map(|g| g.iter().map(|&x| self.comp_dim(x, t)).sum()).collect();
        let mut maps = Vec::new();
        for w in groups.windows(2) {
            let m = self.differential(fan, &w[0], &w[1], t).ok_or_else(|| {
                SheafError::InvalidSheaf(format!("restriction leaves a component in degree {}", set_label(t)))
            })?;
            maps.push(m);
        }
        Ok(CellularComplex { degree: t, terms, maps })
    }

    pub fn check_minimally_flabby(&self, fan: &FanData) -> FlabbinessReport {
        let mut cones = Vec::new();
        let mut ok = true;
        let mut decomposable = false;
        for d in self.lo..=fan.n() {
            for s in fan.cones_of_dim(d) {
                let mut surjective = true;
                let mut exact = true;
                let mut g_dims = BTreeMap::new();
                let degrees = if d == 0 { vec![0] } else { subsets(interval(self.var_lo(), d - 1)) };
                for &t in &degrees {
                    if d > self.lo {
                        for &tau in fan.facets(s) {
                            match self.differential(fan, &[s], &[tau], t) {
                                Some(m) => surjective &= m.rank() == self.comp_dim(tau, t),
                                None => surjective = false,
                            }
                        }
                    }
                    match self.cellular_complex(fan, Scope::Boundary(s), t) {
                        Ok(cx) => {
                            let (ex, g) = cx.augmented_exactness();
                            exact &= ex;
                            if g > 0 {
                                g_dims.insert(set_label(t), g);
                            }
                        }
                        Err(_) => exact = false,
                    }
                }
                let vector_space = g_dims.keys().all(|k| k == "{}");
                let g0 = g_dims.get("{}").copied().unwrap_or(0);
                decomposable |= g0 > 1;
                let cone_ok = surjective && exact && vector_space;
                ok &= cone_ok;
                cones.push(ConeFlabbiness {
                    cone: fan.poset.id(s).to_string(),
                    dim: d,
                    restrictions_surjective: surjective,
                    exact,
                    augmentation: g_dims,
                    augmentation_is_vector_space: vector_space,
                });
            }
        }
        FlabbinessReport { minimally_flabby: ok, decomposable, cones }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Global,
    /// The augmented complex at a cone: the cone itself, then its faces.
    Boundary(usize),
}

/// A cochain complex of finite-dimensional spaces in one degree.
#[derive(Clone, Debug)]
pub struct CellularComplex<F> {
    pub degree: VarSet,
    pub terms: Vec<usize>,
    pub maps: Vec<Mat<F>>,
}

impl<F: Field> CellularComplex<F> {
    pub fn is_complex(&self) -> bool {
        self.maps.windows(2).all(|w| w[1].mul(&w[0]).is_zero())
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.maps.iter().map(|m| if m.rows() == 0 || m.cols() == 0 { 0 } else { m.rank() }).collect()
    }

    pub fn cohomology(&self) -> Vec<usize> {
        let r = self.ranks();
        (0..self.terms.len())
            .map(|i| {
                let out = if i < r.len() { r[i] } else { 0 };
                let inc = if i > 0 { r[i - 1] } else { 0 };
                self.terms[i] - out - inc
            })
            .collect()
    }

    /// Exactness of the complex followed by its final cokernel; returns
    /// whether all but the last cohomology vanish and the cokernel dimension.
    pub fn augmented_exactness(&self) -> (bool, usize) {
        let h = self.cohomology();
        let last = h.len() - 1;
        (h[..last].iter().all(|&x| x == 0), h[last])
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConeFlabbiness {
    pub cone: String,
    pub dim: usize,
    pub restrictions_surjective: bool,
    pub exact: bool,
    pub augmentation: BTreeMap<String, usize>,
    pub augmentation_is_vector_space: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FlabbinessReport {
    pub minimally_flabby: bool,
    pub decomposable: bool,
    pub cones: Vec<ConeFlabbiness>,
}

/// Splitting `𝓛/x_1𝓛` into generator parts and multiplying by a section of
/// degree `e_1` given by one value per ray.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct QuotientCheck {
    pub injective: bool,
    pub vanishes_below: bool,
    pub flabby: FlabbinessReport,
}

fn times_ray_values<F: Field>(fan: &FanData, s: usize, v: &[F], ell: &HashMap<usize, i64>) -> Vec<F> {
    fan.flags(s).iter().zip(v).map(|(f, x)| x.mul(&F::from_i64(ell[&f[0]]))).collect()
}

pub fn quotient_check<F: Field>(fan: &FanData, sheaf: &IndecomposableSheaf, ell: &HashMap<usize, i64>) -> QuotientCheck {
    let mut injective = true;
    let mut vanishes = true;
    let mut comps = BTreeMap::new();
    for d in 2..=fan.n() {
        for s in fan.cones_of_dim(d) {
            let st = &sheaf.stalks[&s];
            let nf = fan.flags(s).len();
            for t in subsets(interval(2, d)) {
                let low: Vec<Vec<F>> = st.reps_in(t).iter().map(|v| to_field(v)).collect();
                let high: Vec<Vec<F>> = st.reps_in(t | 1 << 1).iter().map(|v| to_field(v)).collect();
                let f1 = Subquotient::new(nf, &high, &low).expect("filtration");
                let images: Vec<Vec<F>> = low.iter().map(|v| times_ray_values(fan, s, v, ell)).collect();
                let coords: Option<Vec<Vec<F>>> = images.iter().map(|v| f1.coords(v)).collect();
                match coords {
                    Some(c) if !c.is_empty() => injective &= Mat::from_cols(&c, f1.dim()).rank() == c.len(),
                    Some(_) => {}
                    None => injective = false,
                }
                let den: Vec<Vec<F>> = low.iter().cloned().chain(images).collect();
                let q = Subquotient::new(nf, &high, &den).expect("image inside the filtration step");
                if d == 2 || t >> 2 & 1 == 1 {
                    vanishes &= q.dim() == 0;
                } else {
                    comps.insert((s, t), q);
                }
            }
        }
    }
    let q = FlagSheaf { lo: 3, copies: 1, comps };
    QuotientCheck { injective, vanishes_below: vanishes, flabby: q.check_minimally_flabby(fan) }
}
