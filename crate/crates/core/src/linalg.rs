//! Finite-dimensional rational vector spaces, exact matrices, and nonunital
//! associative algebras given by structure constants.
//!
//! Objects are dimensions. The basis of `V ⊗ W` is `(v_i, w_j)` with `j`
//! varying fastest, so `(U ⊗ V) ⊗ W` and `U ⊗ (V ⊗ W)` have literally the same
//! basis and the associator is an identity matrix.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ext::{format_q, parse_q, qi, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("cannot compose a {0}×{1} matrix after a {2}×{3} matrix")]
    Compose(usize, usize, usize, usize),
    #[error("matrix is not square ({0}×{1})")]
    NotSquare(usize, usize),
    #[error("matrix is singular")]
    Singular,
    #[error("row lengths differ")]
    Ragged,
}

/// A linear map `Q^cols → Q^rows` as a dense row-major matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

pub type LinMap = Matrix;

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}×{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            write!(f, "[{}]", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Ragged);
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect())
            .expect("rectangular literal")
    }

    /// Matrix of the map sending basis vector `j` to basis vector `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Matrix::zeros(n, n);
        for (j, &i) in perm.iter().enumerate() {
            m.data[i * n + j] = Q::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Q] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Q>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        *self == Matrix::identity(self.rows) && self.rows == self.cols
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Compose(self.rows, self.cols, rhs.rows, rhs.cols));
        }
        if let Some(out) = self.compose_scaled(rhs) {
            return Ok(out);
        }
        let sparse_rows: Vec<Vec<(usize, &Q)>> = (0..rhs.rows)
            .map(|k| rhs.row(k).iter().enumerate().filter(|(_, b)| !b.is_zero()).collect())
            .collect();
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for &(c, b) in &sparse_rows[k] {
                    out.data[r * rhs.cols + c] += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `(N, D)` with `self = N / D` and `N` integral, when everything fits in `i64`.
    fn scaled(&self) -> Option<(Vec<i64>, i64)> {
        let mut den: i64 = 1;
        for x in self.data.iter().filter(|x| !x.denom().is_one()) {
            let d = x.denom().to_i64()?;
            den = den.checked_mul(d / den.gcd(&d))?;
        }
        let nums = self
            .data
            .iter()
            .map(|x| {
                if x.is_zero() {
                    Some(0)
                } else if x.denom().is_one() {
                    x.numer().to_i64()?.checked_mul(den)
                } else {
                    x.numer().to_i64()?.checked_mul(den / x.denom().to_i64()?)
                }
            })
            .collect::<Option<Vec<i64>>>()?;
        Some((nums, den))
    }

    /// Exact product in `i128` after clearing denominators, when a bound on
    /// the entries rules out overflow.
    fn compose_scaled(&self, rhs: &Matrix) -> Option<Matrix> {
        let (a, da) = self.scaled()?;
        let (b, db) = rhs.scaled()?;
        let max = |v: &[i64]| v.iter().map(|x| x.unsigned_abs() as u128).max().unwrap_or(0);
        let bound = max(&a).checked_mul(max(&b))?.checked_mul(self.cols.max(1) as u128)?;
        if bound > i128::MAX as u128 {
            return None;
        }
        let den = (da as i128).checked_mul(db as i128)?;
        let sparse_rows: Vec<Vec<(usize, i128)>> = (0..rhs.rows)
            .map(|k| (0..rhs.cols).filter(|&c| b[k * rhs.cols + c] != 0).map(|c| (c, b[k * rhs.cols + c] as i128)).collect())
            .collect();
        let mut acc = vec![0i128; rhs.cols];
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            acc.iter_mut().for_each(|x| *x = 0);
            for k in 0..self.cols {
                let x = a[r * self.cols + k] as i128;
                if x == 0 {
                    continue;
                }
                for &(c, y) in &sparse_rows[k] {
                    acc[c] += x * y;
                }
            }
            for (c, &n) in acc.iter().enumerate() {
                if n != 0 {
                    let g = n.gcd(&den);
                    out.data[r * rhs.cols + c] = Q::new_raw(BigInt::from(n / g), BigInt::from(den / g));
                }
            }
        }
        Some(out)
    }

    fn mul_kron_scaled(&self, a: &Matrix, b: &Matrix) -> Option<Matrix> {
        let (m, dm) = self.scaled()?;
        let (x, da) = a.scaled()?;
        let (y, db) = b.scaled()?;
        let max = |v: &[i64]| v.iter().map(|x| x.unsigned_abs() as u128).max().unwrap_or(0);
        let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
        let stage = max(&m).checked_mul(max(&x))?.checked_mul(ar.max(1) as u128)?;
        let bound = stage.checked_mul(max(&y))?.checked_mul(br.max(1) as u128)?;
        if bound > i128::MAX as u128 {
            return None;
        }
        let den = (dm as i128).checked_mul(da as i128)?.checked_mul(db as i128)?;
        let sparse = |v: &[i64], rows: usize, cols: usize| -> Vec<Vec<(usize, i128)>> {
            (0..rows)
                .map(|k| (0..cols).filter(|&c| v[k * cols + c] != 0).map(|c| (c, v[k * cols + c] as i128)).collect())
                .collect()
        };
        let (xs, ys) = (sparse(&x, ar, ac), sparse(&y, br, bc));
        let mut t = vec![0i128; ac * br];
        let mut o = vec![0i128; ac * bc];
        let mut out = Matrix::zeros(self.rows, ac * bc);
        for r in 0..self.rows {
            t.iter_mut().for_each(|v| *v = 0);
            o.iter_mut().for_each(|v| *v = 0);
            for k in 0..ar {
                for l in 0..br {
                    let v = m[r * self.cols + k * br + l] as i128;
                    if v != 0 {
                        for &(i, w) in &xs[k] {
                            t[i * br + l] += v * w;
                        }
                    }
                }
            }
            for i in 0..ac {
                for l in 0..br {
                    let v = t[i * br + l];
                    if v != 0 {
                        for &(j, w) in &ys[l] {
                            o[i * bc + j] += v * w;
                        }
                    }
                }
            }
            for (c, &n) in o.iter().enumerate() {
                if n != 0 {
                    let g = n.gcd(&den);
                    out.data[r * out.cols + c] = Q::new_raw(BigInt::from(n / g), BigInt::from(den / g));
                }
            }
        }
        Some(out)
    }

    /// `self ∘ (a ⊗ b)`, computed as `self ∘ (a ⊗ 1) ∘ (1 ⊗ b)`.
    pub fn mul_kron(&self, a: &Matrix, b: &Matrix) -> Matrix {
        assert_eq!(self.cols, a.rows * b.rows, "shapes agree");
        if let Some(out) = self.mul_kron_scaled(a, b) {
            return out;
        }
        let first = a.kron(&Matrix::identity(b.rows));
        let second = Matrix::identity(a.cols).kron(b);
        self.mul(&first).mul(&second)
    }

    /// Composition for callers that already know the shapes agree.
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        self.compose(rhs).expect("shapes agree")
    }

    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).filter(|(a, _)| !a.is_zero()).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c).clone();
            }
        }
        out
    }

    pub fn scale(&self, s: &Q) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    /// Kronecker product, second factor's index varying fastest.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Matrix::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = other.get(k, l);
                        if !b.is_zero() {
                            out.data[(i * other.rows + k) * c + j * other.cols + l] = a * b;
                        }
                    }
                }
            }
        }
        out
    }

    /// Iterated Kronecker product; the empty product is the `1×1` identity.
    pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a Matrix>) -> Matrix {
        factors.into_iter().fold(Matrix::identity(1), |acc, m| acc.kron(m))
    }

    /// Block-diagonal sum; the empty sum is the `0×0` matrix.
    pub fn direct_sum<'a>(blocks: impl IntoIterator<Item = &'a Matrix>) -> Matrix {
        let blocks: Vec<&Matrix> = blocks.into_iter().collect();
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zeros(r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.data[(r0 + i) * c + c0 + j] = b.get(i, j).clone();
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn put_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.data[(r0 + i) * self.cols + c0 + j] = block.get(i, j).clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j] = self.get(r0 + i, c0 + j).clone();
            }
        }
        out
    }

    /// Row echelon form by exact Gaussian elimination; returns the rank.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| !m.get(r, c).is_zero()) else { continue };
            m.swap_rows(rank, p);
            let pivot = m.get(rank, c).clone();
            for r in rank + 1..m.rows {
                let f = m.get(r, c) / &pivot;
                if !f.is_zero() {
                    for k in c..m.cols {
                        let v = m.get(rank, k) * &f;
                        m.data[r * m.cols + k] -= v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for k in 0..self.cols {
                self.data.swap(a * self.cols + k, b * self.cols + k);
            }
        }
    }

    /// Exact inverse by Gauss–Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for c in 0..n {
            let p = (c..n).find(|&r| !a.get(r, c).is_zero()).ok_or(LinalgError::Singular)?;
            a.swap_rows(c, p);
            inv.swap_rows(c, p);
            let pivot = a.get(c, c).clone();
            for k in 0..n {
                let (x, y) = (a.get(c, k) / &pivot, inv.get(c, k) / &pivot);
                a.set(c, k, x);
                inv.set(c, k, y);
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let f = a.get(r, c).clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..n {
                    let (x, y) = (a.get(c, k) * &f, inv.get(c, k) * &f);
                    a.data[r * n + k] -= x;
                    inv.data[r * n + k] -= y;
                }
            }
        }
        Ok(inv)
    }

    /// Exact test. Full rank modulo a large prime certifies invertibility over
    /// `Q`; otherwise the rank is computed exactly.
    pub fn is_invertible(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        if self.full_rank_mod_p() == Some(true) {
            return true;
        }
        self.rank() == self.rows
    }

    /// `Some(true)` when the matrix, with each row cleared of denominators, has
    /// full rank over `F_p`; `None` when some denominator vanishes mod `p`.
    fn full_rank_mod_p(&self) -> Option<bool> {
        const P: u64 = (1 << 61) - 1;
        let p = BigInt::from(P);
        let n = self.rows;
        let mut m = vec![0u64; n * n];
        for r in 0..n {
            let row = self.row(r);
            let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            for c in 0..n {
                let x = &row[c];
                if x.is_zero() {
                    continue;
                }
                let v = (x.numer() * (&lcm / x.denom())).mod_floor(&p);
                m[r * n + c] = v.to_u64().expect("reduced mod p");
            }
            if lcm.mod_floor(&p).is_zero() {
                return None;
            }
        }
        let mul = |a: u64, b: u64| ((a as u128 * b as u128) % P as u128) as u64;
        let pow = |mut b: u64, mut e: u64| {
            let mut acc = 1u64;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul(acc, b);
                }
                b = mul(b, b);
                e >>= 1;
            }
            acc
        };
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| m[r * n + c] != 0) else { return Some(false) };
            if piv != c {
                for k in 0..n {
                    m.swap(piv * n + k, c * n + k);
                }
            }
            let inv = pow(m[c * n + c], P - 2);
            for r in c + 1..n {
                let f = mul(m[r * n + c], inv);
                if f == 0 {
                    continue;
                }
                for k in c..n {
                    let sub = mul(f, m[c * n + k]);
                    m[r * n + k] = (m[r * n + k] + P - sub) % P;
                }
            }
        }
        Some(true)
    }
}

/// `U ⊗ (V_1 ⊕ … ⊕ V_k) → (U ⊗ V_1) ⊕ … ⊕ (U ⊗ V_k)`.
pub fn left_distributor(u: usize, vs: &[usize]) -> Matrix {
    let total: usize = vs.iter().sum();
    let mut perm = vec![0; u * total];
    let mut target_offset = 0;
    let mut source_offset = 0;
    for &v in vs {
        for a in 0..u {
            for b in 0..v {
                perm[a * total + source_offset + b] = target_offset + a * v + b;
            }
        }
        target_offset += u * v;
        source_offset += v;
    }
    Matrix::permutation(&perm)
}

/// `(V_1 ⊕ … ⊕ V_k) ⊗ U → (V_1 ⊗ U) ⊕ … ⊕ (V_k ⊗ U)`; an identity in this convention.
pub fn right_distributor(vs: &[usize], u: usize) -> Matrix {
    Matrix::identity(vs.iter().sum::<usize>() * u)
}

/// `(U ⊗ V) ⊗ W → U ⊗ (V ⊗ W)`; an identity in this convention.
pub fn associator(u: usize, v: usize, w: usize) -> Matrix {
    Matrix::identity(u * v * w)
}

/// `V ⊗ W → W ⊗ V`.
pub fn braiding(v: usize, w: usize) -> Matrix {
    let perm: Vec<usize> = (0..v * w).map(|x| (x % w) * v + x / w).collect();
    Matrix::permutation(&perm)
}

/// Matrices serialize as lists of rows of `"p/q"` strings.
impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows).map(|r| self.row(r).iter().map(format_q).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|x| parse_q(x)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum AlgebraError {
    #[error("(e_{0} e_{1}) e_{2} ≠ e_{0} (e_{1} e_{2})")]
    NotAssociative(usize, usize, usize),
    #[error("structure constants do not have shape {0}×{0}×{0}")]
    Shape(usize),
}

/// A nonunital associative algebra: `e_i · e_j = Σ_k c[k][i][j] e_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonunitalAlgebra {
    dim: usize,
    c: Vec<Vec<Vec<Q>>>,
}

impl NonunitalAlgebra {
    /// Validated constructor.
    pub fn new(dim: usize, c: Vec<Vec<Vec<Q>>>) -> Result<Self, AlgebraError> {
        let a = NonunitalAlgebra::unchecked(dim, c)?;
        a.validate()?;
        Ok(a)
    }

    /// Checks only the shape; associativity is left to [`NonunitalAlgebra::validate`].
    pub fn unchecked(dim: usize, c: Vec<Vec<Vec<Q>>>) -> Result<Self, AlgebraError> {
        let ok = c.len() == dim && c.iter().all(|m| m.len() == dim && m.iter().all(|r| r.len() == dim));
        if !ok {
            return Err(AlgebraError::Shape(dim));
        }
        Ok(NonunitalAlgebra { dim, c })
    }

    /// From the `d × d²` multiplication matrix `A ⊗ A → A`.
    pub fn from_mult(m: &Matrix) -> Result<Self, AlgebraError> {
        let d = m.rows();
        if m.cols() != d * d {
            return Err(AlgebraError::Shape(d));
        }
        let c = (0..d)
            .map(|k| (0..d).map(|i| (0..d).map(|j| m.get(k, i * d + j).clone()).collect()).collect())
            .collect();
        Ok(NonunitalAlgebra { dim: d, c })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constants(&self) -> &[Vec<Vec<Q>>] {
        &self.c
    }

    pub fn product(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        let d = self.dim;
        let mut out = vec![Q::zero(); d];
        for i in 0..d {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..d {
                if y[j].is_zero() {
                    continue;
                }
                let xy = &x[i] * &y[j];
                for (k, o) in out.iter_mut().enumerate() {
                    let ck = &self.c[k][i][j];
                    if !ck.is_zero() {
                        *o += ck * &xy;
                    }
                }
            }
        }
        out
    }

    fn basis(&self, i: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim];
        v[i] = Q::one();
        v
    }

    /// The first basis triple where associativity fails, if any.
    pub fn validate(&self) -> Result<(), AlgebraError> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let ij = self.product(&self.basis(i), &self.basis(j));
                for k in 0..d {
                    let left = self.product(&ij, &self.basis(k));
                    let right = self.product(&self.basis(i), &self.product(&self.basis(j), &self.basis(k)));
                    if left != right {
                        return Err(AlgebraError::NotAssociative(i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    /// The multiplication `A ⊗ A → A` as a `d × d²` matrix.
    pub fn mult_matrix(&self) -> Matrix {
        let d = self.dim;
        let mut m = Matrix::zeros(d, d * d);
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    m.set(k, i * d + j, self.c[k][i][j].clone());
                }
            }
        }
        m
    }

    /// The `n`-fold product `A^{⊗n} → A`, bracketed from the left; `n ≥ 1`.
    pub fn iterated_mult(&self, n: usize) -> Matrix {
        assert!(n >= 1, "the empty product does not exist without a unit");
        let m = self.mult_matrix();
        let id = Matrix::identity(self.dim);
        let mut acc = id.clone();
        for _ in 1..n {
            acc = m.mul(&acc.kron(&id));
        }
        acc
    }

    /// `d`-dimensional algebra with zero product.
    pub fn zero(d: usize) -> Self {
        NonunitalAlgebra { dim: d, c: vec![vec![vec![Q::zero(); d]; d]; d] }
    }

    /// `Q` with its usual product.
    pub fn rationals() -> Self {
        NonunitalAlgebra { dim: 1, c: vec![vec![vec![Q::one()]]] }
    }

    /// Strictly upper triangular `3×3` matrices on the basis `e12, e13, e23`.
    pub fn nilpotent3() -> Self {
        matrix_subalgebra(3, &[(0, 1), (0, 2), (1, 2)])
    }

    /// All `2×2` matrices on the basis `e11, e12, e21, e22`, forgetting the unit.
    pub fn matrix2() -> Self {
        matrix_subalgebra(2, &[(0, 0), (0, 1), (1, 0), (1, 1)])
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "zero" => Some(NonunitalAlgebra::zero(1)),
            "rationals" => Some(NonunitalAlgebra::rationals()),
            "nilpotent3" => Some(NonunitalAlgebra::nilpotent3()),
            "matrix2" => Some(NonunitalAlgebra::matrix2()),
            _ => None,
        }
    }
}

pub const BUILTIN_ALGEBRAS: [&str; 4] = ["zero", "rationals", "nilpotent3", "matrix2"];

/// Structure constants of the span of the given matrix units, computed by
/// multiplying `n×n` matrices and reading off coordinates. The span must be
/// closed under multiplication.
fn matrix_subalgebra(n: usize, units: &[(usize, usize)]) -> NonunitalAlgebra {
    let unit = |(r, c): (usize, usize)| {
        let mut m = Matrix::zeros(n, n);
        m.set(r, c, Q::one());
        m
    };
    let d = units.len();
    let mut c = vec![vec![vec![Q::zero(); d]; d]; d];
    for (i, &u) in units.iter().enumerate() {
        for (j, &v) in units.iter().enumerate() {
            let p = unit(u).mul(&unit(v));
            for r in 0..n {
                for s in 0..n {
                    let x = p.get(r, s);
                    if x.is_zero() {
                        continue;
                    }
                    let k = units.iter().position(|&w| w == (r, s)).expect("span is closed under products");
                    c[k][i][j] = x.clone();
                }
            }
        }
    }
    NonunitalAlgebra { dim: d, c }
}

impl Serialize for NonunitalAlgebra {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct A {
            dim: usize,
            c: Vec<Vec<Vec<String>>>,
        }
        let c = self.c.iter().map(|m| m.iter().map(|r| r.iter().map(format_q).collect()).collect()).collect();
        A { dim: self.dim, c }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NonunitalAlgebra {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct A {
            dim: usize,
            c: Vec<Vec<Vec<String>>>,
        }
        let a = A::deserialize(d)?;
        let c = a
            .c
            .iter()
            .map(|m| {
                m.iter()
                    .map(|r| r.iter().map(|x| parse_q(x)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        NonunitalAlgebra::unchecked(a.dim, c).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::q;

    fn sample(r: usize, c: usize, seed: i64) -> Matrix {
        let rows = (0..r)
            .map(|i| (0..c).map(|j| q((seed + 3 * i as i64 - 2 * j as i64) % 5, 1 + (i + j) as i64 % 3)).collect())
            .collect();
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn composition_and_inverse() {
        let a = Matrix::from_ints(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert_eq!(Matrix::from_ints(&[&[1, 2], &[2, 4]]).inverse(), Err(LinalgError::Singular));
        assert!(Matrix::zeros(2, 3).compose(&Matrix::zeros(2, 3)).is_err());
        assert_eq!(Matrix::from_ints(&[&[1, 2], &[2, 4]]).rank(), 1);
    }

    #[test]
    fn kronecker_is_bifunctorial() {
        let (f, g) = (sample(2, 3, 1), sample(3, 2, 4));
        let (f2, g2) = (sample(3, 2, 2), sample(2, 3, 0));
        let lhs = f.kron(&g).mul(&f2.kron(&g2));
        let rhs = f.mul(&f2).kron(&g.mul(&g2));
        assert_eq!(lhs, rhs);
        let m = sample(4, 6, 5);
        assert_eq!(m.mul_kron(&f, &g), m.mul(&f.kron(&g)));
        let one = Matrix::from_ints(&[&[3]]);
        assert_eq!(one.kron(&f), f.scale(&qi(3)));
    }

    #[test]
    fn associator_is_identity() {
        let (a, b, c) = (sample(2, 2, 1), sample(3, 1, 2), sample(1, 2, 3));
        assert_eq!(a.kron(&b).kron(&c), a.kron(&b.kron(&c)));
        // pentagon: all four associators are identities of the same size
        for (u, v, w, x) in [(1, 2, 3, 2), (3, 3, 3, 3), (2, 1, 2, 3)] {
            let left = associator(u * v, w, x).mul(&associator(u, v, w * x));
            let right = associator(u, v, w).kron(&Matrix::identity(x));
            let right = Matrix::identity(u).kron(&associator(v, w, x)).mul(&associator(u, v * w, x)).mul(&right);
            assert_eq!(left, right);
        }
    }

    #[test]
    fn direct_sums_and_distributors() {
        assert_eq!(Matrix::direct_sum([]).rows(), 0);
        let (a, b) = (sample(2, 2, 1), sample(3, 3, 2));
        let s = Matrix::direct_sum([&a, &b]);
        assert_eq!((s.rows(), s.cols()), (5, 5));
        let u = sample(2, 2, 3);
        // d ∘ (u ⊗ (a ⊕ b)) = ((u ⊗ a) ⊕ (u ⊗ b)) ∘ d
        let d = left_distributor(2, &[2, 3]);
        assert!(!d.is_identity());
        assert_eq!(d.mul(&u.kron(&s)), Matrix::direct_sum([&u.kron(&a), &u.kron(&b)]).mul(&d));
        let d = right_distributor(&[2, 3], 2);
        assert_eq!(d.mul(&s.kron(&u)), Matrix::direct_sum([&a.kron(&u), &b.kron(&u)]).mul(&d));
        let br = braiding(2, 3);
        assert_eq!(br.mul(&sample(2, 2, 1).kron(&sample(3, 3, 1))), sample(3, 3, 1).kron(&sample(2, 2, 1)).mul(&br));
    }

    #[test]
    fn builtin_algebras_are_associative() {
        for name in BUILTIN_ALGEBRAS {
            NonunitalAlgebra::builtin(name).unwrap().validate().unwrap();
        }
        NonunitalAlgebra::zero(3).validate().unwrap();
        let n = NonunitalAlgebra::nilpotent3();
        // e12 · e23 = e13, e23 · e12 = 0
        assert_eq!(n.constants()[1][0][2], qi(1));
        assert!(n.constants().iter().all(|m| m[2][0].is_zero()));
        let m = NonunitalAlgebra::matrix2();
        assert_eq!(m.product(&[qi(0), qi(1), qi(0), qi(0)], &[qi(0), qi(0), qi(1), qi(0)]), vec![qi(1), qi(0), qi(0), qi(0)]);
    }

    #[test]
    fn nonassociative_rejected() {
        // e0 e0 = e1, everything else 0: (e0 e0) e0 = 0 = e0 (e0 e0), associative.
        // e0 e0 = e1, e1 e0 = e0: (e0 e0) e0 = e0 but e0 (e0 e0) = e0 e1 = 0.
        let mut c = vec![vec![vec![Q::zero(); 2]; 2]; 2];
        c[1][0][0] = qi(1);
        c[0][1][0] = qi(1);
        assert_eq!(NonunitalAlgebra::new(2, c), Err(AlgebraError::NotAssociative(0, 0, 0)));
    }

    #[test]
    fn iterated_products() {
        let a = NonunitalAlgebra::matrix2();
        let m3 = a.iterated_mult(3);
        let m = a.mult_matrix();
        let id = Matrix::identity(4);
        assert_eq!(m3, m.mul(&id.kron(&m)));
        assert!(a.iterated_mult(1).is_identity());
    }

    #[test]
    fn json_roundtrip() {
        let a = NonunitalAlgebra::nilpotent3();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.starts_with(r#"{"dim":3,"c":[[["0/1""#));
        assert_eq!(serde_json::from_str::<NonunitalAlgebra>(&s).unwrap(), a);
        let m = sample(2, 3, 1);
        let back: Matrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
