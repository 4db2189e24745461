//! Graded face posets of complete fans.
//!
//! Elements are stored in canonical order (by rank, then id). The maximal
//! element of the completed poset is never stored; index `len()` stands for it.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosetError {
    #[error("unsupported size {size} for family {family}")]
    UnsupportedSize { family: String, size: usize },
    #[error("invalid poset: {0}")]
    InvalidPoset(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    ParseError { line: usize, column: usize, msg: String },
    #[error("schema error in {field}: {msg}")]
    SchemaError { field: String, msg: String },
    #[error("no consistent orientation: {0}")]
    NoOrientation(String),
    #[error("dimension {dim} exceeds cap {cap}")]
    DimCapExceeded { dim: usize, cap: usize },
    #[error("io error: {0}")]
    Io(String),
}

pub const DEFAULT_DIM_CAP: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedPoset {
    name: String,
    rank_n: usize,
    ids: Vec<String>,
    ranks: Vec<usize>,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
    maximal: Vec<usize>,
}

impl GradedPoset {
    /// Builds a poset from raw data, enforcing the file-level schema.
    pub fn new(
        name: impl Into<String>,
        rank_n: usize,
        elements: Vec<(String, usize)>,
        covers: Vec<(String, String)>,
    ) -> Result<Self, PosetError> {
        let schema = |field: String, msg: &str| PosetError::SchemaError { field, msg: msg.to_string() };
        if rank_n == 0 {
            return Err(schema("rank".into(), "rank must be at least 1"));
        }
        let mut seen = HashMap::new();
        for (k, (id, r)) in elements.iter().enumerate() {
            if *r > rank_n {
                return Err(schema(format!("elements[{k}].rank"), "rank exceeds poset rank"));
            }
            if seen.insert(id.clone(), k).is_some() {
                return Err(schema(format!("elements[{k}].id"), &format!("duplicate id {id:?}")));
            }
        }
        for r in 0..=rank_n {
            if !elements.iter().any(|(_, er)| *er == r) {
                return Err(schema("elements".into(), &format!("rank gap: no element of rank {r}")));
            }
        }
        let mut sorted = elements;
        sorted.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
        let ids: Vec<String> = sorted.iter().map(|e| e.0.clone()).collect();
        let ranks: Vec<usize> = sorted.iter().map(|e| e.1).collect();
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut up = vec![BTreeSet::new(); ids.len()];
        let mut down = vec![BTreeSet::new(); ids.len()];
        for (k, (lo, hi)) in covers.iter().enumerate() {
            let field = format!("covers[{k}]");
            let a = *index.get(lo.as_str()).ok_or_else(|| schema(field.clone(), &format!("unknown id {lo:?}")))?;
            let b = *index.get(hi.as_str()).ok_or_else(|| schema(field.clone(), &format!("unknown id {hi:?}")))?;
            if ranks[b] != ranks[a] + 1 {
                return Err(schema(field, "cover must join consecutive ranks"));
            }
            up[a].insert(b);
            down[b].insert(a);
        }
        let up: Vec<Vec<usize>> = up.into_iter().map(|s| s.into_iter().collect()).collect();
        let down: Vec<Vec<usize>> = down.into_iter().map(|s| s.into_iter().collect()).collect();
        let maximal = (0..ids.len()).filter(|&i| up[i].is_empty()).collect();
        Ok(GradedPoset { name: name.into(), rank_n, ids, ranks, up, down, maximal })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn rank_n(&self) -> usize {
        self.rank_n
    }
    pub fn len(&self) -> usize {
        self.ids.len()
    }
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
    /// Index of the virtual maximal element.
    pub fn top(&self) -> usize {
        self.ids.len()
    }
    pub fn id(&self, i: usize) -> &str {
        if i == self.top() {
            "1^"
        } else {
            &self.ids[i]
        }
    }
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }
    /// Rank, with the virtual top at `rank_n + 1`.
    pub fn rank(&self, i: usize) -> usize {
        if i == self.top() {
            self.rank_n + 1
        } else {
            self.ranks[i]
        }
    }
    /// Elements covered by `i` (the virtual top covers the maximal elements).
    pub fn down(&self, i: usize) -> &[usize] {
        if i == self.top() {
            &self.maximal
        } else {
            &self.down[i]
        }
    }
    /// Elements covering `i`, not including the virtual top.
    pub fn up(&self, i: usize) -> &[usize] {
        &self.up[i]
    }
    pub fn maximal(&self) -> &[usize] {
        &self.maximal
    }
    pub fn of_rank(&self, r: usize) -> Vec<usize> {
        if r == self.rank_n + 1 {
            return vec![self.top()];
        }
        (0..self.len()).filter(|&i| self.ranks[i] == r).collect()
    }
    pub fn zero(&self) -> Option<usize> {
        let z = self.of_rank(0);
        (z.len() == 1).then(|| z[0])
    }
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for b in 0..self.len() {
            for &a in &self.down[b] {
                out.push((a, b));
            }
        }
        out
    }
    pub fn rank_counts(&self) -> Vec<usize> {
        (0..=self.rank_n).map(|r| self.of_rank(r).len()).collect()
    }

    pub fn check_dim_cap(&self, cap: usize) -> Result<(), PosetError> {
        if self.rank_n > cap {
            Err(PosetError::DimCapExceeded { dim: self.rank_n, cap })
        } else {
            Ok(())
        }
    }

    /// Flags `(σ_1 < … < σ_d = σ)` of the interval below `sigma`, with ranks
    /// `1..=rank(sigma)`; for the virtual top the final entry is dropped, so
    /// these are the maximal chains of the fan.
    pub fn flags(&self, sigma: usize) -> Vec<Vec<usize>> {
        if sigma == self.top() {
            let mut out = Vec::new();
            for &m in &self.maximal {
                out.extend(self.flags(m));
            }
            out.sort();
            return out;
        }
        if self.rank(sigma) == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for &t in &self.down[sigma] {
            for mut f in self.flags(t) {
                f.push(sigma);
                out.push(f);
            }
        }
        out.sort();
        out
    }

    pub fn maximal_chains(&self) -> Vec<Vec<usize>> {
        self.flags(self.top())
    }

    /// Upward closure bitsets in the completed poset (top included).
    fn comparability(&self) -> Vec<Vec<u64>> {
        let total = self.len() + 1;
        let words = total.div_ceil(64);
        let mut above = vec![vec![0u64; words]; total];
        let order: Vec<usize> = {
            let mut v: Vec<usize> = (0..total).collect();
            v.sort_by_key(|&i| std::cmp::Reverse(self.rank(i)));
            v
        };
        for &i in &order {
            above[i][i / 64] |= 1 << (i % 64);
            let ups: Vec<usize> = if i == self.top() {
                vec![]
            } else if self.up[i].is_empty() {
                vec![self.top()]
            } else {
                self.up[i].clone()
            };
            for u in ups {
                let src = above[u].clone();
                for (w, s) in above[i].iter_mut().zip(src) {
                    *w |= s;
                }
            }
        }
        above
    }

    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let zeros = self.of_rank(0).len();
        rep.push("single_zero", zeros == 1, format!("{zeros} elements of rank 0"));
        let bad_pure: Vec<&str> = self
            .maximal
            .iter()
            .filter(|&&m| self.ranks[m] != self.rank_n)
            .map(|&m| self.ids[m].as_str())
            .collect();
        rep.push("pure", bad_pure.is_empty(), detail_list("non-top maximal elements", &bad_pure));
        let orphans: Vec<&str> = (0..self.len())
            .filter(|&i| self.ranks[i] > 0 && self.down[i].is_empty())
            .map(|i| self.ids[i].as_str())
            .collect();
        rep.push("graded", orphans.is_empty(), detail_list("elements without lower covers", &orphans));
        let bad_diamonds = self.diamond_failures();
        rep.push("diamond", bad_diamonds.is_empty(), detail_list("intervals without two middles", &bad_diamonds));
        let (euler_bad, mobius_bad) = self.eulerian_failures();
        rep.push("eulerian", euler_bad.is_empty(), detail_list("unbalanced intervals", &euler_bad));
        rep.push("mobius", mobius_bad.is_empty(), detail_list("Möbius mismatches", &mobius_bad));
        rep
    }

    pub fn ensure_valid(&self) -> Result<(), PosetError> {
        let rep = self.validate();
        if rep.all_passed() {
            Ok(())
        } else {
            Err(PosetError::InvalidPoset(rep.failure_summary()))
        }
    }

    fn diamond_failures(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for s in 0..=self.len() {
            if self.rank(s) < 2 {
                continue;
            }
            let mut count: BTreeMap<usize, usize> = BTreeMap::new();
            for &t in self.down(s) {
                for &r in self.down(t) {
                    *count.entry(r).or_default() += 1;
                }
            }
            for (r, c) in count {
                if c != 2 {
                    bad.push(format!("[{}, {}] has {c}", self.id(r), self.id(s)));
                }
            }
        }
        bad
    }

    fn eulerian_failures(&self) -> (Vec<String>, Vec<String>) {
        let above = self.comparability();
        let total = self.len() + 1;
        let words = total.div_ceil(64);
        let mut below = vec![vec![0u64; words]; total];
        for a in 0..total {
            for b in 0..total {
                if above[a][b / 64] >> (b % 64) & 1 == 1 {
                    below[b][a / 64] |= 1 << (a % 64);
                }
            }
        }
        let mut even = vec![0u64; words];
        for i in 0..total {
            if self.rank(i) % 2 == 0 {
                even[i / 64] |= 1 << (i % 64);
            }
        }
        let mut euler_bad = Vec::new();
        let mut mobius_bad = Vec::new();
        let mut by_rank: Vec<usize> = (0..total).collect();
        by_rank.sort_by_key(|&i| self.rank(i));
        for a in 0..total {
            let mut mu: HashMap<usize, i64> = HashMap::new();
            for &b in &by_rank {
                if above[a][b / 64] >> (b % 64) & 1 == 0 {
                    continue;
                }
                if b == a {
                    mu.insert(b, 1);
                    continue;
                }
                let mut e = 0u32;
                let mut all = 0u32;
                let mut s = 0i64;
                for w in 0..words {
                    let iv = above[a][w] & below[b][w];
                    all += iv.count_ones();
                    e += (iv & even[w]).count_ones();
                    let mut bits = iv;
                    while bits != 0 {
                        let k = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        let c = w * 64 + k;
                        if c != b {
                            s += mu[&c];
                        }
                    }
                }
                let m = -s;
                mu.insert(b, m);
                if 2 * e != all {
                    euler_bad.push(format!("[{}, {}]", self.id(a), self.id(b)));
                }
                let d = self.rank(b) - self.rank(a);
                let expect = if d % 2 == 0 { 1 } else { -1 };
                if m != expect {
                    mobius_bad.push(format!("mu[{}, {}] = {m}", self.id(a), self.id(b)));
                }
            }
        }
        (euler_bad, mobius_bad)
    }

    pub fn to_file(&self) -> PosetFile {
        let elements = (0..self.len())
            .map(|i| ElementEntry { id: self.ids[i].clone(), rank: self.ranks[i] })
            .collect();
        let mut covers: Vec<[String; 2]> =
            self.covers().into_iter().map(|(a, b)| [self.ids[a].clone(), self.ids[b].clone()]).collect();
        covers.sort();
        PosetFile { name: self.name.clone(), rank: self.rank_n, elements, covers }
    }

    pub fn from_file(f: PosetFile) -> Result<Self, PosetError> {
        GradedPoset::new(
            f.name,
            f.rank,
            f.elements.into_iter().map(|e| (e.id, e.rank)).collect(),
            f.covers.into_iter().map(|[a, b]| (a, b)).collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("poset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PosetError> {
        let f: PosetFile = serde_json::from_str(text).map_err(|e| {
            if e.is_data() {
                PosetError::SchemaError { field: format!("line {}", e.line()), msg: e.to_string() }
            } else {
                PosetError::ParseError { line: e.line(), column: e.column(), msg: e.to_string() }
            }
        })?;
        Self::from_file(f)
    }

    pub fn ingest(path: &Path) -> Result<Self, PosetError> {
        let text = std::fs::read_to_string(path).map_err(|e| PosetError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn serialize(&self, path: &Path) -> Result<(), PosetError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| PosetError::Io(format!("{}: {e}", path.display())))
    }

    /// A copy with one element (and its covers) removed.
    pub fn without(&self, id: &str) -> Result<Self, PosetError> {
        let mut f = self.to_file();
        f.elements.retain(|e| e.id != id);
        f.covers.retain(|[a, b]| a != id && b != id);
        Self::from_file(f)
    }

    /// Faces strictly below `sigma`, read as a complete fan of one dimension less.
    pub fn boundary(&self, sigma: usize) -> Result<Self, PosetError> {
        let d = self.rank(sigma);
        if d < 2 {
            return Err(PosetError::InvalidPoset(format!("boundary of {} has rank below 1", self.id(sigma))));
        }
        let mut below = BTreeSet::new();
        let mut stack = self.down(sigma).to_vec();
        while let Some(t) = stack.pop() {
            if below.insert(t) {
                stack.extend_from_slice(&self.down[t]);
            }
        }
        let elements = below.iter().map(|&i| (self.ids[i].clone(), self.ranks[i])).collect();
        let mut covers = Vec::new();
        for &b in &below {
            for &a in &self.down[b] {
                covers.push((self.ids[a].clone(), self.ids[b].clone()));
            }
        }
        GradedPoset::new(format!("{}/{}", self.name, self.id(sigma)), d - 1, elements, covers)
    }
}

fn detail_list(label: &str, items: &[impl AsRef<str>]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        let shown: Vec<&str> = items.iter().take(5).map(|s| s.as_ref()).collect();
        format!("{label}: {}{}", shown.join(", "), if items.len() > 5 { ", ..." } else { "" })
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl ValidationReport {
    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(ValidationCheck { name: name.into(), passed, detail });
    }
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
    pub fn passed(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c.name == name && c.passed)
    }
    pub fn failure_summary(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} failed ({})", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PosetFile {
    pub name: String,
    pub rank: usize,
    pub elements: Vec<ElementEntry>,
    pub covers: Vec<[String; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ElementEntry {
    pub id: String,
    pub rank: usize,
}

impl fmt::Display for GradedPoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (rank {}, counts {:?})", self.name, self.rank_n, self.rank_counts())
    }
}

/// The barycentric subdivision: chains of nonzero cones.
#[derive(Clone, Debug)]
pub struct ChainPoset {
    chains: Vec<Vec<usize>>,
    labels: Vec<u32>,
    n: usize,
}

impl ChainPoset {
    pub fn new(p: &GradedPoset) -> Result<Self, PosetError> {
        p.ensure_valid()?;
        let mut chains = vec![Vec::new()];
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
        while let Some(c) = frontier.pop() {
            let next: Vec<usize> = match c.last() {
                None => (0..p.len()).filter(|&i| p.rank(i) > 0).collect(),
                Some(&t) => strictly_above(p, t),
            };
            for s in next {
                let mut e = c.clone();
                e.push(s);
                chains.push(e.clone());
                frontier.push(e);
            }
        }
        chains.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        let labels = chains.iter().map(|c| c.iter().fold(0u32, |m, &e| m | 1 << p.rank(e))).collect();
        Ok(ChainPoset { chains, labels, n: p.rank_n() })
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }
    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }
    pub fn chain(&self, i: usize) -> &[usize] {
        &self.chains[i]
    }
    /// Rank set as a bitmask over `1..=n`.
    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }
    pub fn rank(&self, i: usize) -> usize {
        self.chains[i].len()
    }
    /// Subdivision map to the top cone of the chain.
    pub fn pi(&self, i: usize) -> Option<usize> {
        self.chains[i].last().copied()
    }
    pub fn of_rank(&self, r: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.chains[i].len() == r).collect()
    }
    pub fn maximal(&self) -> Vec<usize> {
        self.of_rank(self.n)
    }
    pub fn is_subchain(&self, a: usize, b: usize) -> bool {
        let (x, y) = (&self.chains[a], &self.chains[b]);
        x.iter().all(|e| y.contains(e))
    }
}

fn strictly_above(p: &GradedPoset, t: usize) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = p.up(t).to_vec();
    while let Some(u) = stack.pop() {
        if seen.insert(u) {
            stack.extend_from_slice(p.up(u));
        }
    }
    seen.into_iter().collect()
}

/// Incidence signs on covers of the completed poset, and chain signs.
#[derive(Clone, Debug)]
pub struct OrientationData {
    signs: HashMap<(usize, usize), i8>,
    top: usize,
}

impl OrientationData {
    pub fn compute(p: &GradedPoset) -> Result<Self, PosetError> {
        let mut signs: HashMap<(usize, usize), i8> = HashMap::new();
        let top = p.top();
        for k in 1..=p.rank_n() + 1 {
            for s in p.of_rank(k) {
                let facets = p.down(s).to_vec();
                if k == 1 {
                    for &t in &facets {
                        signs.insert((s, t), 1);
                    }
                    continue;
                }
                let pos: HashMap<usize, usize> = facets.iter().enumerate().map(|(i, &t)| (t, i)).collect();
                let mut ridges: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for &t in &facets {
                    for &r in p.down(t) {
                        ridges.entry(r).or_default().push(t);
                    }
                }
                let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); facets.len()];
                for (r, mids) in &ridges {
                    if mids.len() != 2 {
                        return Err(PosetError::NoOrientation(format!(
                            "interval [{}, {}] has {} middle elements",
                            p.id(*r),
                            p.id(s),
                            mids.len()
                        )));
                    }
                    let bit = |t: usize| u8::from(signs[&(t, *r)] < 0);
                    let rhs = 1 ^ bit(mids[0]) ^ bit(mids[1]);
                    let (a, b) = (pos[&mids[0]], pos[&mids[1]]);
                    adj[a].push((b, rhs));
                    adj[b].push((a, rhs));
                }
                let mut val: Vec<Option<u8>> = vec![None; facets.len()];
                for start in 0..facets.len() {
                    if val[start].is_some() {
                        continue;
                    }
                    val[start] = Some(0);
                    let mut stack = vec![start];
                    while let Some(a) = stack.pop() {
                        let va = val[a].unwrap();
                        for &(b, rhs) in &adj[a] {
                            let want = va ^ rhs;
                            match val[b] {
                                None => {
                                    val[b] = Some(want);
                                    stack.push(b);
                                }
                                Some(v) if v != want => {
                                    return Err(PosetError::NoOrientation(format!(
                                        "sign system below {} is inconsistent",
                                        p.id(s)
                                    )))
                                }
                                _ => {}
                            }
                        }
                    }
                }
                for (i, &t) in facets.iter().enumerate() {
                    signs.insert((s, t), if val[i] == Some(0) { 1 } else { -1 });
                }
            }
        }
        Ok(OrientationData { signs, top })
    }

    /// `or^upper_lower`, for a cover `lower < upper`.
    pub fn or(&self, upper: usize, lower: usize) -> i8 {
        self.signs[&(upper, lower)]
    }

    pub fn try_or(&self, upper: usize, lower: usize) -> Option<i8> {
        self.signs.get(&(upper, lower)).copied()
    }

    /// Sign of a flag `(σ_1 < … < σ_d)` read as a maximal chain below `top_elem`.
    pub fn flag_sign(&self, flag: &[usize], top_elem: usize, zero: usize) -> i8 {
        let mut s = 1i8;
        let mut upper = top_elem;
        for &e in flag.iter().rev() {
            if e == upper {
                continue;
            }
            s *= self.or(upper, e);
            upper = e;
        }
        if upper == zero {
            s
        } else {
            s * self.or(upper, zero)
        }
    }

    /// ε_x for a maximal chain of the fan.
    pub fn eps(&self, chain: &[usize], zero: usize) -> i8 {
        self.flag_sign(chain, self.top, zero)
    }

    pub fn with_flipped(&self, upper: usize, lower: usize) -> Self {
        let mut o = self.clone();
        if let Some(v) = o.signs.get_mut(&(upper, lower)) {
            *v = -*v;
        }
        o
    }

    /// Checks every length-2 relation; returns the failing intervals.
    pub fn diamond_violations(&self, p: &GradedPoset) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for s in 0..=p.len() {
            if p.rank(s) < 2 {
                continue;
            }
            let mut acc: BTreeMap<usize, i32> = BTreeMap::new();
            for &t in p.down(s) {
                for &r in p.down(t) {
                    *acc.entry(r).or_default() += (self.or(s, t) * self.or(t, r)) as i32;
                }
            }
            bad.extend(acc.into_iter().filter(|(_, v)| *v != 0).map(|(r, _)| (r, s)));
        }
        bad
    }
}

/// A named fan family builder.
pub trait FanFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, size: usize) -> Result<GradedPoset, PosetError>;
}

struct SimplexFan;
struct CubeFan;
struct CrosspolyFan;
struct PolygonFan;

const MAX_FAMILY_DIM: usize = 8;

fn check_dim(family: &str, size: usize) -> Result<(), PosetError> {
    if size == 0 || size > MAX_FAMILY_DIM {
        Err(PosetError::UnsupportedSize { family: family.into(), size })
    } else {
        Ok(())
    }
}

fn assemble<K: Ord + Clone>(
    name: String,
    n: usize,
    cones: Vec<(K, usize, String)>,
    leq: impl Fn(&K, &K) -> bool,
) -> GradedPoset {
    let elements: Vec<(String, usize)> = cones.iter().map(|(_, r, id)| (id.clone(), *r)).collect();
    let mut covers = Vec::new();
    for (a, ra, ia) in &cones {
        for (b, rb, ib) in &cones {
            if *rb == ra + 1 && leq(a, b) {
                covers.push((ia.clone(), ib.clone()));
            }
        }
    }
    GradedPoset::new(name, n, elements, covers).expect("family builders produce well-formed posets")
}

impl FanFamily for SimplexFan {
    fn name(&self) -> &'static str {
        "simplex"
    }
    fn build(&self, n: usize) -> Result<GradedPoset, PosetError> {
        check_dim(self.name(), n)?;
        let mut cones = Vec::new();
        for mask in 0u32..(1 << (n + 1)) {
            let r = mask.count_ones() as usize;
            if r > n {
                continue;
            }
            let id = if mask == 0 {
                "o".to_string()
            } else {
                format!("v{}", (0..=n).filter(|i| mask >> i & 1 == 1).map(|i| i.to_string()).collect::<String>())
            };
            cones.push((mask, r, id));
        }
        Ok(assemble(format!("simplex_fan({n})"), n, cones, |a, b| a & b == *a))
    }
}

impl FanFamily for CrosspolyFan {
    fn name(&self) -> &'static str {
        "crosspoly"
    }
    fn build(&self, n: usize) -> Result<GradedPoset, PosetError> {
        check_dim(self.name(), n)?;
        let mut cones = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let mut signs = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                signs.push((c % 3) as i8 - 1);
                c /= 3;
            }
            let r = signs.iter().filter(|&&s| s != 0).count();
            let id = if r == 0 {
                "o".to_string()
            } else {
                signs
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s != 0)
                    .map(|(i, &s)| format!("{}{}", if s > 0 { '+' } else { '-' }, i + 1))
                    .collect()
            };
            cones.push((signs, r, id));
        }
        Ok(assemble(format!("crosspoly_fan({n})"), n, cones, |a, b| {
            a.iter().zip(b).all(|(x, y)| *x == 0 || x == y)
        }))
    }
}

impl FanFamily for CubeFan {
    fn name(&self) -> &'static str {
        "cube"
    }
    fn build(&self, n: usize) -> Result<GradedPoset, PosetError> {
        check_dim(self.name(), n)?;
        // Faces of [0,1]^n as words over {0,1,*}; None is the zero cone.
        let mut cones: Vec<(Option<Vec<u8>>, usize, String)> = vec![(None, 0, "o".into())];
        for code in 0..3usize.pow(n as u32) {
            let mut w = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                w.push(b"01*"[c % 3]);
                c /= 3;
            }
            let dim = w.iter().filter(|&&x| x == b'*').count();
            if dim == n {
                continue;
            }
            let id = format!("c{}", String::from_utf8(w.clone()).unwrap());
            cones.push((Some(w), dim + 1, id));
        }
        Ok(assemble(format!("cube_fan({n})"), n, cones, |a, b| match (a, b) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(x), Some(y)) => x.iter().zip(y).all(|(p, q)| *q == b'*' || p == q),
        }))
    }
}

impl FanFamily for PolygonFan {
    fn name(&self) -> &'static str {
        "polygon"
    }
    fn build(&self, m: usize) -> Result<GradedPoset, PosetError> {
        if !(3..=64).contains(&m) {
            return Err(PosetError::UnsupportedSize { family: self.name().into(), size: m });
        }
        let w = (m - 1).to_string().len();
        let mut elements = vec![("o".to_string(), 0)];
        let mut covers = Vec::new();
        for i in 0..m {
            let r = format!("r{i:0w$}");
            let e = format!("e{i:0w$}");
            elements.push((r.clone(), 1));
            elements.push((e.clone(), 2));
            covers.push(("o".to_string(), r.clone()));
            covers.push((r, e.clone()));
            covers.push((format!("r{:0w$}", (i + 1) % m), e));
        }
        GradedPoset::new(format!("polygon_fan({m})"), 2, elements, covers)
    }
}

pub struct FamilyRegistry {
    entries: Vec<Box<dyn FanFamily>>,
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        FamilyRegistry { entries: Vec::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(SimplexFan));
        r.register(Box::new(CubeFan));
        r.register(Box::new(CrosspolyFan));
        r.register(Box::new(PolygonFan));
        r
    }

    pub fn register(&mut self, f: Box<dyn FanFamily>) {
        self.entries.retain(|e| e.name() != f.name());
        self.entries.push(f);
    }

    pub fn get(&self, name: &str) -> Option<&dyn FanFamily> {
        let key = name.strip_suffix("_fan").unwrap_or(name);
        self.entries.iter().find(|e| e.name() == key).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    SimplexFan,
    CubeFan,
    CrosspolyFan,
    PolygonFan,
}

impl Family {
    pub fn registry_name(self) -> &'static str {
        match self {
            Family::SimplexFan => "simplex",
            Family::CubeFan => "cube",
            Family::CrosspolyFan => "crosspoly",
            Family::PolygonFan => "polygon",
        }
    }
}

pub fn build_named(family: Family, size: usize) -> Result<GradedPoset, PosetError> {
    FamilyRegistry::standard().get(family.registry_name()).expect("standard family").build(size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_counts() {
        assert_eq!(build_named(Family::PolygonFan, 4).unwrap().rank_counts(), vec![1, 4, 4]);
        assert_eq!(build_named(Family::SimplexFan, 3).unwrap().rank_counts(), vec![1, 4, 6, 4]);
        assert_eq!(build_named(Family::CubeFan, 3).unwrap().rank_counts(), vec![1, 8, 12, 6]);
        assert_eq!(build_named(Family::CrosspolyFan, 3).unwrap().rank_counts(), vec![1, 6, 12, 8]);
    }

    #[test]
    fn builtins_validate() {
        for (f, s) in [
            (Family::SimplexFan, 1),
            (Family::SimplexFan, 4),
            (Family::CubeFan, 3),
            (Family::CrosspolyFan, 3),
            (Family::PolygonFan, 5),
        ] {
            let p = build_named(f, s).unwrap();
            let rep = p.validate();
            assert!(rep.all_passed(), "{p}: {}", rep.failure_summary());
        }
    }

    #[test]
    fn deleting_an_edge_breaks_diamonds() {
        let p = build_named(Family::CubeFan, 3).unwrap();
        let q = p.without("c00*").unwrap();
        assert!(!q.validate().passed("diamond"));
    }

    #[test]
    fn unsupported_sizes() {
        assert!(matches!(build_named(Family::PolygonFan, 2), Err(PosetError::UnsupportedSize { .. })));
        assert!(matches!(build_named(Family::CubeFan, 0), Err(PosetError::UnsupportedSize { .. })));
    }

    #[test]
    fn orientation_relations_hold() {
        for (f, s) in [(Family::PolygonFan, 4), (Family::CubeFan, 3), (Family::SimplexFan, 3)] {
            let p = build_named(f, s).unwrap();
            let o = OrientationData::compute(&p).unwrap();
            assert!(o.diamond_violations(&p).is_empty());
        }
    }

    #[test]
    fn chain_poset_counts() {
        let p = build_named(Family::PolygonFan, 4).unwrap();
        let c = ChainPoset::new(&p).unwrap();
        assert_eq!(c.of_rank(1).len(), 8);
        assert_eq!(c.of_rank(2).len(), 8);
        let s = build_named(Family::SimplexFan, 3).unwrap();
        assert_eq!(ChainPoset::new(&s).unwrap().maximal().len(), 24);
    }
}
