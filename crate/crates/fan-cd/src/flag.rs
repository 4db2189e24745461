//! Flag vectors, squarefree t-polynomials, the φ embedding and cd-index extraction.

use crate::field::{int, Rational};
use crate::linalg::Mat;
use crate::poset::{GradedPoset, PosetError};
use num::{BigInt, One, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Subsets of variable indices as bitmasks (bit i is variable i).
pub type VarSet = u32;

pub fn varset(items: &[usize]) -> VarSet {
    items.iter().fold(0, |m, &i| m | 1 << i)
}

pub fn members(s: VarSet) -> Vec<usize> {
    (0..32).filter(|i| s >> i & 1 == 1).collect()
}

/// Mask of `{l, …, m}`; empty when `l > m`.
pub fn interval(l: usize, m: usize) -> VarSet {
    if l > m {
        0
    } else {
        (l..=m).fold(0, |acc, i| acc | 1 << i)
    }
}

/// All subsets of `s`, ordered by size then numerically.
pub fn subsets(s: VarSet) -> Vec<VarSet> {
    let mut out = Vec::new();
    let mut t = s;
    loop {
        out.push(t);
        if t == 0 {
            break;
        }
        t = (t - 1) & s;
    }
    out.sort_by_key(|&x| (x.count_ones(), x));
    out
}

pub fn set_label(s: VarSet) -> String {
    format!("{{{}}}", members(s).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
}

pub fn monomial_label(s: VarSet) -> String {
    if s == 0 {
        "1".into()
    } else {
        members(s).iter().map(|i| format!("t{i}")).collect::<Vec<_>>().join("*")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CdError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("flag vector is not in the span of cd-words ({reason}); residual {residual:?}")]
    NotInCdSpan { reason: String, residual: BTreeMap<String, String> },
    #[error(transparent)]
    Poset(#[from] PosetError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlagVector {
    pub n: usize,
    pub entries: BTreeMap<VarSet, i64>,
}

impl FlagVector {
    pub fn get(&self, s: VarSet) -> i64 {
        self.entries.get(&s).copied().unwrap_or(0)
    }

    pub fn from_pairs(n: usize, pairs: &[(&[usize], i64)]) -> Self {
        let mut entries: BTreeMap<VarSet, i64> = subsets(interval(1, n)).into_iter().map(|s| (s, 0)).collect();
        for (s, v) in pairs {
            entries.insert(varset(s), *v);
        }
        FlagVector { n, entries }
    }

    pub fn total(&self) -> i64 {
        self.entries.values().sum()
    }

    /// `h_S = h_{S^c}` for all S.
    pub fn is_self_dual(&self) -> bool {
        let full = interval(1, self.n);
        self.entries.iter().all(|(&s, &v)| self.get(full & !s) == v)
    }

    pub fn to_poly(&self) -> SquarefreePoly {
        let mut p = SquarefreePoly::zero(self.n);
        for (&s, &v) in &self.entries {
            if v != 0 {
                p.coeffs.insert(s, int(v));
            }
        }
        p
    }

    pub fn labelled(&self) -> BTreeMap<String, i64> {
        self.entries.iter().map(|(&s, &v)| (set_label(s), v)).collect()
    }
}

pub fn flag_f(p: &GradedPoset) -> Result<FlagVector, CdError> {
    p.ensure_valid()?;
    let n = p.rank_n();
    let below: Vec<Vec<usize>> = (0..p.len()).map(|e| strictly_below_nonzero(p, e)).collect();
    let mut order: Vec<usize> = (0..p.len()).filter(|&e| p.rank(e) > 0).collect();
    order.sort_by_key(|&e| p.rank(e));
    let mut cnt: Vec<BTreeMap<VarSet, i64>> = vec![BTreeMap::new(); p.len()];
    let mut f: BTreeMap<VarSet, i64> = subsets(interval(1, n)).into_iter().map(|s| (s, 0)).collect();
    f.insert(0, 1);
    for &e in &order {
        let bit = 1u32 << p.rank(e);
        let mut here: BTreeMap<VarSet, i64> = BTreeMap::new();
        here.insert(bit, 1);
        for &b in &below[e] {
            for (&s, &c) in &cnt[b] {
                *here.entry(s | bit).or_default() += c;
            }
        }
        for (&s, &c) in &here {
            *f.entry(s).or_default() += c;
        }
        cnt[e] = here;
    }
    Ok(FlagVector { n, entries: f })
}

fn strictly_below_nonzero(p: &GradedPoset, e: usize) -> Vec<usize> {
    let mut seen = std::collections::BTreeSet::new();
    let mut stack: Vec<usize> = p.down(e).to_vec();
    while let Some(x) = stack.pop() {
        if p.rank(x) > 0 && seen.insert(x) {
            stack.extend_from_slice(p.down(x));
        }
    }
    seen.into_iter().collect()
}

pub fn h_from_f(f: &FlagVector) -> FlagVector {
    let mut entries = BTreeMap::new();
    for s in subsets(interval(1, f.n)) {
        let mut acc = 0i64;
        for t in subsets(s) {
            let sign = if (s & !t).count_ones() % 2 == 0 { 1 } else { -1 };
            acc += sign * f.get(t);
        }
        entries.insert(s, acc);
    }
    FlagVector { n: f.n, entries }
}

pub fn flag_h(p: &GradedPoset) -> Result<FlagVector, CdError> {
    Ok(h_from_f(&flag_f(p)?))
}

/// `∑ f_{n-i}(t-1)^i = ∑ h_{n-k} t^k`, for `f = (f_0, …, f_n)`.
pub fn simplicial_h(f: &[i64]) -> Result<Vec<i64>, CdError> {
    if f.is_empty() {
        return Err(CdError::LengthMismatch { expected: 1, got: 0 });
    }
    let n = f.len() - 1;
    let mut h = vec![0i64; n + 1];
    for (k, slot) in (0..=n).map(|k| (k, n - k)) {
        let mut acc = 0i64;
        for i in k..=n {
            let sign = if (i - k) % 2 == 0 { 1 } else { -1 };
            acc += sign * binom(i, k) * f[n - i];
        }
        h[slot] = acc;
    }
    Ok(h)
}

/// As [`simplicial_h`], checking that `f` has `n + 1` entries.
pub fn simplicial_h_checked(f: &[i64], n: usize) -> Result<Vec<i64>, CdError> {
    if f.len() != n + 1 {
        return Err(CdError::LengthMismatch { expected: n + 1, got: f.len() });
    }
    simplicial_h(f)
}

fn binom(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

/// Polynomial `∑ a_S ∏_{i∈S} t_i` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquarefreePoly {
    pub n: usize,
    pub coeffs: BTreeMap<VarSet, Rational>,
}

impl SquarefreePoly {
    pub fn zero(n: usize) -> Self {
        SquarefreePoly { n, coeffs: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::monomial(n, 0, Rational::one())
    }

    pub fn monomial(n: usize, s: VarSet, c: Rational) -> Self {
        let mut p = Self::zero(n);
        if !c.is_zero() {
            p.coeffs.insert(s, c);
        }
        p
    }

    pub fn coeff(&self, s: VarSet) -> Rational {
        self.coeffs.get(&s).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.n = self.n.max(o.n);
        for (&s, c) in &o.coeffs {
            let v = out.coeff(s) + c;
            if v.is_zero() {
                out.coeffs.remove(&s);
            } else {
                out.coeffs.insert(s, v);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n);
        }
        SquarefreePoly { n: self.n, coeffs: self.coeffs.iter().map(|(&s, v)| (s, v * c)).collect() }
    }

    /// Product of polynomials in disjoint variable sets.
    pub fn mul_disjoint(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.n.max(o.n));
        for (&a, x) in &self.coeffs {
            for (&b, y) in &o.coeffs {
                assert_eq!(a & b, 0, "product leaves the squarefree range");
                let s = a | b;
                let v = out.coeff(s) + x * y;
                if v.is_zero() {
                    out.coeffs.remove(&s);
                } else {
                    out.coeffs.insert(s, v);
                }
            }
        }
        out
    }

    pub fn eval(&self, t: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (&s, c) in &self.coeffs {
            let mut term = c.clone();
            for i in members(s) {
                term *= &t[i];
            }
            acc += term;
        }
        acc
    }

    /// Coefficients of the univariate specialization `t_i = t`.
    pub fn specialize(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.n + 1];
        for (&s, c) in &self.coeffs {
            let k = s.count_ones() as usize;
            if k >= out.len() {
                out.resize(k + 1, Rational::zero());
            }
            out[k] += c;
        }
        out
    }

    pub fn labelled(&self) -> BTreeMap<String, String> {
        self.coeffs.iter().map(|(&s, c)| (monomial_label(s), c.to_string())).collect()
    }
}

impl fmt::Display for SquarefreePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<(&VarSet, &Rational)> = self.coeffs.iter().collect();
        terms.sort_by_key(|(s, _)| (s.count_ones(), **s));
        let parts: Vec<String> = terms
            .into_iter()
            .map(|(&s, c)| {
                if s == 0 {
                    c.to_string()
                } else if c.is_one() {
                    monomial_label(s)
                } else {
                    format!("{c}*{}", monomial_label(s))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// All cd-words of degree `n` (deg c = 1, deg d = 2), in lexicographic order.
pub fn cd_words(n: usize) -> Vec<String> {
    fn go(n: usize, prefix: &mut String, out: &mut Vec<String>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        prefix.push('c');
        go(n - 1, prefix, out);
        prefix.pop();
        if n >= 2 {
            prefix.push('d');
            go(n - 2, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, &mut String::new(), &mut out);
    out.sort();
    out
}

pub fn word_degree(w: &str) -> usize {
    w.chars().map(|ch| if ch == 'd' { 2 } else { 1 }).sum()
}

/// φ(w) in variables `t_l, t_{l+1}, …`; the first letter uses the lowest variables.
pub fn phi_expand(w: &str, l: usize) -> SquarefreePoly {
    let n = l + word_degree(w);
    let mut acc = SquarefreePoly::one(n);
    let mut p = l;
    for ch in w.chars() {
        let factor = match ch {
            'c' => SquarefreePoly::one(n).add(&SquarefreePoly::monomial(n, 1 << p, Rational::one())),
            'd' => SquarefreePoly::monomial(n, 1 << p, Rational::one())
                .add(&SquarefreePoly::monomial(n, 1 << (p + 1), Rational::one())),
            other => panic!("not a cd-letter: {other:?}"),
        };
        acc = acc.mul_disjoint(&factor);
        p += if ch == 'c' { 1 } else { 2 };
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CdPolynomial {
    pub degree: usize,
    pub terms: BTreeMap<String, i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CdTerm {
    pub word: String,
    pub coeff: i64,
}

impl CdPolynomial {
    pub fn new(degree: usize) -> Self {
        CdPolynomial { degree, terms: BTreeMap::new() }
    }

    pub fn from_terms(degree: usize, terms: &[(&str, i64)]) -> Self {
        let mut p = Self::new(degree);
        for (w, c) in terms {
            p.add_term(w, *c);
        }
        p
    }

    pub fn add_term(&mut self, w: &str, c: i64) {
        assert_eq!(word_degree(w), self.degree, "inhomogeneous cd-word {w}");
        let e = self.terms.entry(w.to_string()).or_default();
        *e += c;
        if *e == 0 {
            self.terms.remove(w);
        }
    }

    pub fn coeff(&self, w: &str) -> i64 {
        self.terms.get(w).copied().unwrap_or(0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|&c| c >= 0)
    }

    /// ∑ a_w φ(w) in variables starting at `l`.
    pub fn to_poly(&self, l: usize) -> SquarefreePoly {
        let mut acc = SquarefreePoly::zero(l + self.degree);
        for (w, &c) in &self.terms {
            acc = acc.add(&phi_expand(w, l).scale(&int(c)));
        }
        acc
    }

    pub fn json_terms(&self) -> Vec<CdTerm> {
        self.terms.iter().map(|(w, &c)| CdTerm { word: w.clone(), coeff: c }).collect()
    }
}

fn pretty_word(w: &str) -> String {
    let mut out = String::new();
    let chars: Vec<char> = w.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let mut j = i;
        while j < chars.len() && chars[j] == chars[i] {
            j += 1;
        }
        out.push(chars[i]);
        if j - i > 1 {
            out.push_str(&format!("^{}", j - i));
        }
        i = j;
    }
    out
}

impl fmt::Display for CdPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, &c)| {
                let pw = if w.is_empty() { "1".to_string() } else { pretty_word(w) };
                if c == 1 {
                    pw
                } else {
                    format!("{c}{pw}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Matrix of φ-images: rows indexed by subsets of `[1,n]`, columns by words.
pub fn phi_matrix(n: usize) -> (Vec<VarSet>, Vec<String>, Mat<Rational>) {
    let rows = subsets(interval(1, n));
    let words = cd_words(n);
    let mut m = Mat::zeros(rows.len(), words.len());
    for (j, w) in words.iter().enumerate() {
        let p = phi_expand(w, 1);
        for (i, &s) in rows.iter().enumerate() {
            let c = p.coeff(s);
            if !c.is_zero() {
                m.set(i, j, c);
            }
        }
    }
    (rows, words, m)
}

pub fn cd_index_from_flag_h(h: &FlagVector) -> Result<CdPolynomial, CdError> {
    let n = h.n;
    if h.get(0) != 1 {
        return Err(CdError::NotInCdSpan {
            reason: "h of the empty set must be 1".into(),
            residual: BTreeMap::new(),
        });
    }
    let (rows, words, a) = phi_matrix(n);
    let b: Vec<Rational> = rows.iter().map(|&s| int(h.get(s))).collect();
    let cols: Vec<usize> = (0..words.len()).collect();
    let (_, piv_rows) = a.transpose().rref();
    let square = a.select(&piv_rows, &cols);
    let rhs: Vec<Rational> = piv_rows.iter().map(|&i| b[i].clone()).collect();
    let sol = square.solve(&rhs).expect("φ-images are independent");
    let back = a.mul_vec(&sol);
    let residual: BTreeMap<String, String> = rows
        .iter()
        .zip(back.iter().zip(&b))
        .filter(|(_, (x, y))| x != y)
        .map(|(&s, (x, y))| (set_label(s), (y - x).to_string()))
        .collect();
    if !residual.is_empty() {
        return Err(CdError::NotInCdSpan { reason: "inconsistent system".into(), residual });
    }
    let mut out = CdPolynomial::new(n);
    for (w, c) in words.iter().zip(&sol) {
        if !c.is_integer() {
            return Err(CdError::NotInCdSpan {
                reason: format!("non-integer coefficient {c} on {w}"),
                residual: BTreeMap::new(),
            });
        }
        let v = c.to_integer();
        let v = v.to_i64().unwrap_or_else(|| panic!("coefficient {} out of range", BigInt::from(v)));
        if v != 0 {
            out.add_term(w, v);
        }
    }
    Ok(out)
}

pub fn cd_index_of(p: &GradedPoset) -> Result<CdPolynomial, CdError> {
    cd_index_from_flag_h(&flag_h(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{build_named, Family};

    #[test]
    fn subsets_order() {
        assert_eq!(subsets(varset(&[1, 2])), vec![0, 2, 4, 6]);
    }

    #[test]
    fn fibonacci_word_counts() {
        let counts: Vec<usize> = (0..=6).map(|n| cd_words(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 8, 13]);
    }

    #[test]
    fn phi_of_empty_word() {
        assert_eq!(phi_expand("", 1), SquarefreePoly::one(1));
    }

    #[test]
    fn polygon_h1() {
        for m in 3..=8 {
            let h = flag_h(&build_named(Family::PolygonFan, m).unwrap()).unwrap();
            assert_eq!(h.get(varset(&[1])), m as i64 - 1);
        }
    }

    #[test]
    fn dual_inconsistent_vector_rejected() {
        let h = FlagVector::from_pairs(2, &[(&[], 1), (&[1], 2), (&[2], 5), (&[1, 2], 1)]);
        assert!(matches!(cd_index_from_flag_h(&h), Err(CdError::NotInCdSpan { .. })));
    }

    #[test]
    fn simplicial_examples() {
        assert_eq!(simplicial_h(&[1, 4, 6, 4]).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(simplicial_h(&[1, 2]).unwrap(), vec![1, 1]);
        assert_eq!(simplicial_h(&[1, 6, 12, 8]).unwrap(), vec![1, 3, 3, 1]);
        assert!(matches!(simplicial_h_checked(&[1, 2], 2), Err(CdError::LengthMismatch { .. })));
    }

    #[test]
    fn display_forms() {
        let p = CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 4), ("dc", 6)]);
        assert_eq!(p.to_string(), "c^3 + 4cd + 6dc");
    }
}
