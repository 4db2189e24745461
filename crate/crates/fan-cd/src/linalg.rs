//! Dense exact linear algebra over a [`Field`].

use crate::field::Field;
use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: fmt::Debug> fmt::Debug for Mat<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl<F: Field> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>, cols: usize) -> Self {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix");
            data.extend(row);
        }
        Mat { rows: r, cols, data }
    }

    pub fn from_cols(cols: &[Vec<F>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length");
            for (i, v) in c.iter().enumerate() {
                if !v.is_zero() {
                    m.set(i, j, v.clone());
                }
            }
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(
            rows.iter().map(|r| r.iter().map(|&v| F::from_i64(v)).collect()).collect(),
            cols,
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if !v.is_zero() {
                    t.set(j, i, v.clone());
                }
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        let idx = i * out.cols + j;
                        let prod = a.mul(b);
                        out.data[idx].add_assign(&prod);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc.add_assign(&a.mul(b));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, s: &F) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul(s)).collect() }
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                let v = self.get(i, j);
                if !v.is_zero() {
                    m.set(a, b, v.clone());
                }
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).inv().expect("nonzero pivot");
            for j in c..m.cols {
                let v = m.get(r, j).mul(&inv);
                m.set(r, j, v);
            }
            let pivot_row: Vec<F> = m.row(r)[c..].to_vec();
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                let row = m.row_mut(i);
                for (k, pv) in pivot_row.iter().enumerate() {
                    if !pv.is_zero() {
                        row[c + k].sub_mul_assign(&f, pv);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let c = self.cols;
        for j in 0..c {
            self.data.swap(a * c + j, b * c + j);
        }
    }

    /// Rank by forward elimination only.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).inv().expect("nonzero pivot");
            let pivot_row: Vec<F> = m.row(r)[c..].to_vec();
            for i in r + 1..m.rows {
                let f = m.get(i, c).mul(&inv);
                if f.is_zero() {
                    continue;
                }
                let row = m.row_mut(i);
                for (k, pv) in pivot_row.iter().enumerate() {
                    if !pv.is_zero() {
                        row[c + k].sub_mul_assign(&f, pv);
                    }
                }
            }
            r += 1;
        }
        r
    }

    pub fn has_full_column_rank(&self) -> bool {
        self.rank() == self.cols
    }

    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, F::one());
        }
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        let idx: Vec<usize> = (0..n).collect();
        let cols: Vec<usize> = (n..2 * n).collect();
        Some(r.select(&idx, &cols))
    }

    /// Some solution of `self * x = b`, free variables set to zero.
    pub fn solve(&self, b: &[F]) -> Option<Vec<F>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let (r, piv) = aug.rref();
        if piv.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![F::zero(); self.cols];
        for (k, &c) in piv.iter().enumerate() {
            x[c] = r.get(k, self.cols).clone();
        }
        Some(x)
    }

    /// Basis of the right kernel, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<F>> {
        let (r, piv) = self.rref();
        let mut is_piv = vec![false; self.cols];
        for &p in &piv {
            is_piv[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_piv[c]) {
            let mut v = vec![F::zero(); self.cols];
            v[free] = F::one();
            for (k, &p) in piv.iter().enumerate() {
                v[p] = r.get(k, free).neg();
            }
            basis.push(v);
        }
        basis
    }
}

/// Incrementally maintained row echelon basis of a subspace of `F^n`.
#[derive(Clone, Debug)]
pub struct Echelon<F> {
    n: usize,
    rows: Vec<(usize, Vec<F>)>,
}

impl<F: Field> Echelon<F> {
    pub fn new(n: usize) -> Self {
        Echelon { n, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn reduce(&self, v: &[F]) -> Vec<F> {
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            let f = v[*p].clone();
            if f.is_zero() {
                continue;
            }
            for (k, rv) in row.iter().enumerate().skip(*p) {
                if !rv.is_zero() {
                    v[k].sub_mul_assign(&f, rv);
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[F]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// Adds `v`; returns whether the dimension grew.
    pub fn insert(&mut self, v: &[F]) -> bool {
        assert_eq!(v.len(), self.n);
        let mut r = self.reduce(v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].inv().expect("nonzero");
        for x in r.iter_mut().skip(p) {
            *x = x.mul(&inv);
        }
        self.rows.push((p, r));
        true
    }
}

/// A subspace with a fixed ordered basis, supporting coordinate extraction.
#[derive(Clone, Debug)]
pub struct ColumnSpace<F> {
    basis: Mat<F>,
    pivot_rows: Vec<usize>,
    left_inv: Mat<F>,
}

impl<F: Field> ColumnSpace<F> {
    /// `basis` columns must be linearly independent.
    pub fn new(basis: Mat<F>) -> Option<Self> {
        let k = basis.cols();
        let (_, piv) = basis.transpose().rref();
        if piv.len() != k {
            return None;
        }
        let cols: Vec<usize> = (0..k).collect();
        let block = basis.select(&piv, &cols);
        let left_inv = block.inverse()?;
        Some(ColumnSpace { basis, pivot_rows: piv, left_inv })
    }

    pub fn from_vectors(vs: &[Vec<F>], n: usize) -> Option<Self> {
        Self::new(Mat::from_cols(vs, n))
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Mat<F> {
        &self.basis
    }

    pub fn vector(&self, j: usize) -> Vec<F> {
        self.basis.col(j)
    }

    /// Coordinates of `v` in the basis, or `None` when `v` is outside the span.
    pub fn coords(&self, v: &[F]) -> Option<Vec<F>> {
        let sub: Vec<F> = self.pivot_rows.iter().map(|&i| v[i].clone()).collect();
        let c = self.left_inv.mul_vec(&sub);
        let back = self.basis.mul_vec(&c);
        if back.as_slice() == v {
            Some(c)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rat, Fp, Rational};

    fn q(rows: &[Vec<i64>]) -> Mat<Rational> {
        Mat::from_i64_rows(rows)
    }

    #[test]
    fn rank_and_kernel() {
        let m = q(&[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        let k = m.kernel();
        assert_eq!(k.len(), 1);
        assert!(m.mul_vec(&k[0]).iter().all(|x| Field::is_zero(x)));
    }

    #[test]
    fn inverse_roundtrip() {
        let m = q(&[vec![2, 1], vec![7, 4]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Mat::identity(2));
        assert!(q(&[vec![1, 2], vec![2, 4]]).inverse().is_none());
    }

    #[test]
    fn solve_detects_inconsistency() {
        let m = q(&[vec![1, 1], vec![2, 2]]);
        assert!(m.solve(&[Rational::from_i64(1), Rational::from_i64(3)]).is_none());
        let x = m.solve(&[Rational::from_i64(1), Rational::from_i64(2)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![Rational::from_i64(1), Rational::from_i64(2)]);
    }

    #[test]
    fn echelon_insert() {
        let mut e = Echelon::<Fp>::new(3);
        assert!(e.insert(&[Fp::from_i64(1), Fp::from_i64(1), Fp::zero()]));
        assert!(e.insert(&[Fp::zero(), Fp::from_i64(1), Fp::from_i64(1)]));
        assert!(!e.insert(&[Fp::from_i64(1), Fp::from_i64(2), Fp::from_i64(1)]));
        assert_eq!(e.dim(), 2);
    }

    #[test]
    fn column_space_coords() {
        let b = vec![
            vec![Rational::from_i64(1), Rational::from_i64(0), Rational::from_i64(1)],
            vec![Rational::from_i64(0), Rational::from_i64(2), Rational::from_i64(2)],
        ];
        let cs = ColumnSpace::from_vectors(&b, 3).unwrap();
        let v = vec![rat(1, 2), Rational::from_i64(3), rat(7, 2)];
        assert_eq!(cs.coords(&v).unwrap(), vec![rat(1, 2), rat(3, 2)]);
        assert!(cs.coords(&[Rational::from_i64(1), Rational::from_i64(0), Rational::from_i64(0)]).is_none());
    }
}
