//! Dense matrices over GF(q).
//!
//! Row vectors are `1 × n` matrices. A stored block `p` projected through
//! `V` (shape `N × N/2`) is the product `p · V`.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    rows: usize,
    cols: usize,
    field: PrimeField,
    data: Vec<u32>,
}

impl Mat {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            field,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from row-major values; each value is reduced mod q.
    pub fn from_vec(field: PrimeField, rows: usize, cols: usize, values: Vec<u32>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        let q = field.q();
        Ok(Mat {
            rows,
            cols,
            field,
            data: values.into_iter().map(|v| v % q).collect(),
        })
    }

    /// Builds a matrix from nested rows of (possibly negative) integers.
    pub fn from_rows<R: AsRef<[i64]>>(field: PrimeField, rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims("ragged rows"));
            }
            data.extend(r.iter().map(|&v| field.from_i64(v).value()));
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            field,
            data,
        })
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> u32,
    ) -> Self {
        let q = field.q();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c) % q);
            }
        }
        Mat {
            rows,
            cols,
            field,
            data,
        }
    }

    /// A `1 × n` row vector.
    pub fn row_vector(field: PrimeField, values: Vec<u32>) -> Self {
        let n = values.len();
        Mat::from_vec(field, 1, n, values).expect("length matches")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Row-major residues.
    #[inline]
    pub fn as_slice(&self) -> &[u32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.data
    }

    #[inline]
    pub fn raw(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set_raw(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.field.q();
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.field.elem(self.raw(r, c))
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) -> Result<()> {
        if v.field() != self.field {
            return Err(Error::ModulusMismatch {
                left: self.field.q(),
                right: v.field().q(),
            });
        }
        self.set_raw(r, c, v.value());
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn check_field(&self, other: &Mat) -> Result<()> {
        if self.field != other.field {
            return Err(Error::ModulusMismatch {
                left: self.field.q(),
                right: other.field.q(),
            });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let q = f.q() as u64;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for t in 0..self.cols {
                    acc += self.raw(i, t) as u64 * other.raw(t, j) as u64;
                }
                out.data[i * other.cols + j] = (acc % q) as u32;
            }
        }
        Ok(out)
    }

    fn zip_with(&self, other: &Mat, op: impl Fn(u32, u32) -> u32) -> Result<Mat> {
        self.check_field(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Mat { data, ..*self })
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        let f = self.field;
        self.zip_with(other, |a, b| f.add_raw(a, b))
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        let f = self.field;
        self.zip_with(other, |a, b| f.sub_raw(a, b))
    }

    pub fn neg(&self) -> Mat {
        let f = self.field;
        Mat {
            data: self.data.iter().map(|&a| f.neg_raw(a)).collect(),
            ..*self
        }
    }

    pub fn scale(&self, s: u32) -> Mat {
        let f = self.field;
        let s = s % f.q();
        Mat {
            data: self.data.iter().map(|&a| f.mul_raw(a, s)).collect(),
            ..*self
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.field, self.cols, self.rows, |r, c| self.raw(c, r))
    }

    pub fn select_rows(&self, rows: impl IntoIterator<Item = usize>) -> Mat {
        let mut data = Vec::new();
        let mut n = 0;
        for r in rows {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
            n += 1;
        }
        Mat {
            rows: n,
            data,
            ..*self
        }
    }

    /// Rows `start..start+len`.
    pub fn row_block(&self, start: usize, len: usize) -> Mat {
        self.select_rows(start..start + len)
    }

    pub fn select_cols(&self, cols: &[usize]) -> Mat {
        Mat::from_fn(self.field, self.rows, cols.len(), |r, c| self.raw(r, cols[c]))
    }

    /// Reduces `self` in place to reduced row echelon form, pivoting only in
    /// the first `limit` columns. Returns the pivot columns. First-nonzero
    /// pivoting keeps the result deterministic.
    fn rref_in_place(&mut self, limit: usize) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..limit.min(self.cols) {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.raw(i, c) != 0) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, r * self.cols + j);
                }
            }
            let inv = f.inv_raw(self.raw(r, c)).expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = self.raw(r, j);
                self.data[r * self.cols + j] = f.mul_raw(v, inv);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.raw(i, c);
                if factor == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = f.sub_raw(self.raw(i, j), f.mul_raw(factor, self.raw(r, j)));
                    self.data[i * self.cols + j] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place(m.cols);
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        // eliminate along the shorter side
        if self.rows < self.cols {
            self.transpose().rref().1.len()
        } else {
            self.rref().1.len()
        }
    }

    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::dims(format!(
                "inverse of non-square {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut aug = Mat::hstack(&[self.clone(), Mat::identity(self.field, n)])?;
        let pivots = aug.rref_in_place(n);
        if pivots.len() < n {
            return Err(Error::Singular);
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        Ok(aug.select_cols(&cols))
    }

    fn eliminate_system(&self, y: &Mat) -> Result<(Mat, Vec<usize>)> {
        self.check_field(y)?;
        if self.rows != y.rows {
            return Err(Error::dims(format!(
                "system with {} equations but rhs has {} rows",
                self.rows, y.rows
            )));
        }
        let mut aug = Mat::hstack(&[self.clone(), y.clone()])?;
        let pivots = aug.rref_in_place(self.cols);
        for r in pivots.len()..aug.rows {
            if (self.cols..aug.cols).any(|c| aug.raw(r, c) != 0) {
                return Err(Error::Inconsistent);
            }
        }
        Ok((aug, pivots))
    }

    fn particular(&self, aug: &Mat, pivots: &[usize], m: usize) -> Mat {
        let mut x = Mat::zeros(self.field, self.cols, m);
        for (r, &c) in pivots.iter().enumerate() {
            for j in 0..m {
                x.set_raw(c, j, aug.raw(r, self.cols + j));
            }
        }
        x
    }

    /// Unique `x` with `self · x = y`.
    pub fn solve(&self, y: &Mat) -> Result<Mat> {
        let (aug, pivots) = self.eliminate_system(y)?;
        if pivots.len() < self.cols {
            return Err(Error::Underdetermined);
        }
        Ok(self.particular(&aug, &pivots, y.cols))
    }

    /// Some `x` with `self · x = y`, free variables set to zero.
    pub fn solve_any(&self, y: &Mat) -> Result<Mat> {
        let (aug, pivots) = self.eliminate_system(y)?;
        Ok(self.particular(&aug, &pivots, y.cols))
    }

    /// Basis of the right null space, one column per basis vector.
    pub fn null_space(&self) -> Mat {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let f = self.field;
        let mut basis = Mat::zeros(f, self.cols, free.len());
        for (j, &fc) in free.iter().enumerate() {
            basis.set_raw(fc, j, 1);
            for (row, &pc) in pivots.iter().enumerate() {
                basis.set_raw(pc, j, f.neg_raw(r.raw(row, fc)));
            }
        }
        basis
    }

    /// Canonical basis of the column space: the transpose of the nonzero
    /// rows of `rref(selfᵀ)`. Two matrices span the same column space iff
    /// their canonical bases are equal.
    pub fn column_basis(&self) -> Mat {
        let (r, pivots) = self.transpose().rref();
        r.row_block(0, pivots.len()).transpose()
    }

    pub fn hstack(parts: &[Mat]) -> Result<Mat> {
        let Some(first) = parts.first() else {
            return Err(Error::dims("hstack of nothing"));
        };
        let rows = first.rows;
        for p in parts {
            first.check_field(p)?;
            if p.rows != rows {
                return Err(Error::dims(format!(
                    "hstack rows {} vs {}",
                    rows, p.rows
                )));
            }
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(&p.data[r * p.cols..(r + 1) * p.cols]);
            }
        }
        Ok(Mat {
            rows,
            cols,
            field: first.field,
            data,
        })
    }

    pub fn vstack(parts: &[Mat]) -> Result<Mat> {
        let Some(first) = parts.first() else {
            return Err(Error::dims("vstack of nothing"));
        };
        let cols = first.cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            first.check_field(p)?;
            if p.cols != cols {
                return Err(Error::dims(format!(
                    "vstack cols {} vs {}",
                    cols, p.cols
                )));
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Mat {
            rows,
            cols,
            field: first.field,
            data,
        })
    }

    /// Values as nested rows, for serialization and display.
    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.data.chunks(self.cols.max(1)).map(|r| r.to_vec()).take(self.rows).collect()
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat[{}]{}x{}{:?}", self.field.q(), self.rows, self.cols, self.to_rows())
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.to_rows().iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            let cells: Vec<String> = row.iter().map(u32::to_string).collect();
            write!(f, "{}", cells.join(","))?;
        }
        write!(f, "]")
    }
}

/// Number of `d`-dimensional subspaces of `GF(q)^n` (Gaussian binomial),
/// saturating at `u128::MAX`.
pub fn subspace_count(q: u32, n: usize, d: usize) -> u128 {
    if d > n {
        return 0;
    }
    let q = q as u128;
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..d {
        let a = q.checked_pow((n - i) as u32).map(|v| v - 1);
        let b = q.checked_pow((i + 1) as u32).map(|v| v - 1);
        match (a.and_then(|a| num.checked_mul(a)), b.and_then(|b| den.checked_mul(b))) {
            (Some(x), Some(y)) => {
                num = x;
                den = y;
            }
            _ => return u128::MAX,
        }
    }
    num / den
}

/// Canonical bases (see [`Mat::column_basis`]) of every `d`-dimensional
/// subspace of `GF(q)^n`, sorted by flattened row-major values.
pub fn subspaces(field: PrimeField, n: usize, d: usize) -> Vec<Mat> {
    let q = field.q();
    let mut out = Vec::new();
    if d > n {
        return out;
    }
    // choose pivot columns of the d x n reduced echelon form
    let mut pivots: Vec<usize> = (0..d).collect();
    loop {
        // free positions: in row i, columns after pivots[i] that are not pivots
        let free: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| {
                let pv = pivots.clone();
                (pivots[i] + 1..n)
                    .filter(move |c| !pv.contains(c))
                    .map(move |c| (i, c))
            })
            .collect();
        let mut digits = vec![0u32; free.len()];
        loop {
            let mut m = Mat::zeros(field, d, n);
            for (i, &p) in pivots.iter().enumerate() {
                m.set_raw(i, p, 1);
            }
            for (&(i, c), &v) in free.iter().zip(&digits) {
                m.set_raw(i, c, v);
            }
            out.push(m.transpose());
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    break;
                }
                digits[pos] += 1;
                if digits[pos] < q {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == digits.len() {
                break;
            }
        }
        // next pivot combination
        let mut i = d;
        loop {
            if i == 0 {
                out.sort_by(|a, b| a.data.cmp(&b.data));
                return out;
            }
            i -= 1;
            if pivots[i] < n - d + i {
                pivots[i] += 1;
                for j in i + 1..d {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
    }
}
