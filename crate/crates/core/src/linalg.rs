//! Small dense real linear algebra: a row-major [`Matrix`], the symmetric wrapper
//! [`SymMatrix`], a cyclic Jacobi eigensolver and SPD matrix powers.
//!
//! Dimensions in this crate are small (tens of variables at most), so everything is
//! plain `Vec<f64>` storage and straightforward loops.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 30;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to `‖A‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-14;
/// Default positive-definiteness threshold, relative to the largest eigenvalue.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row-major values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("rows have different lengths"));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Columns `indices` of `self`, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, indices.len(), |i, j| self[(i, indices[j])])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Dense symmetric matrix. Every constructor yields exactly symmetric storage.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Wraps `m`, which must already be exactly symmetric.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows != m.cols || m.rows == 0 {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.rows, m.cols
            )));
        }
        for i in 0..m.rows {
            for j in 0..i {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Symmetrizes a square matrix as `(M + Mᵀ)/2`.
    pub fn symmetrize(m: &Matrix) -> Self {
        assert_eq!(m.rows, m.cols, "symmetrize needs a square matrix");
        assert!(m.rows > 0, "symmetrize needs a non-empty matrix");
        SymMatrix(Matrix::from_fn(m.rows, m.cols, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        }))
    }

    /// Builds a symmetric matrix from a function evaluated on the upper triangle.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim > 0);
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(Matrix::identity(dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        SymMatrix(Matrix::diagonal(values))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[(i, j)] = value;
        self.0[(j, i)] = value;
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `Cᵀ · self · C`, symmetrized.
    pub fn congruence(&self, c: &Matrix) -> SymMatrix {
        SymMatrix::symmetrize(&c.transpose().matmul(&self.0).matmul(c))
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.0)
    }
}

/// Eigendecomposition of a symmetric matrix. `values` are sorted in descending order and
/// column `j` of `vectors` belongs to `values[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenPair {
    /// `V · diag(f(values)) · Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let p = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        SymMatrix::from_upper(p, |i, j| {
            (0..p)
                .map(|l| self.vectors[(i, l)] * mapped[l] * self.vectors[(j, l)])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|v| v)
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Rows are swept in the fixed order `(0,1), (0,2), …, (p−2,p−1)` and the result is
/// normalized so that the largest-magnitude entry of each eigenvector is positive (first
/// such entry on ties). Identical input therefore always yields bit-identical output.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenPair> {
    let p = a.dim();
    if !a.as_matrix().is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let mut m = a.as_matrix().clone();
    let mut v = Matrix::identity(p);
    let norm = m.frobenius_norm();
    let threshold = JACOBI_TOLERANCE * norm;

    let mut converged = false;
    let mut off = off_diagonal_norm(&m);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off <= threshold {
            converged = true;
            break;
        }
        for r in 0..p {
            for c in (r + 1)..p {
                rotate(&mut m, &mut v, r, c);
            }
        }
        off = off_diagonal_norm(&m);
    }
    if !converged && off > threshold {
        return Err(Error::ConvergenceFailure {
            sweeps: JACOBI_MAX_SWEEPS,
            off_diagonal: off,
        });
    }

    // stable sort keeps the sweep order on exact ties
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = v.select_columns(&order);
    for j in 0..p {
        let mut lead = 0;
        for i in 1..p {
            if vectors[(i, j)].abs() > vectors[(lead, j)].abs() {
                lead = i;
            }
        }
        if vectors[(lead, j)] < 0.0 {
            for i in 0..p {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    Ok(EigenPair { values, vectors })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let p = m.rows();
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                sum += m[(i, j)] * m[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `m[(r, c)]` with one Jacobi rotation, accumulating it into `v`.
fn rotate(m: &mut Matrix, v: &mut Matrix, r: usize, c: usize) {
    let apq = m[(r, c)];
    if apq == 0.0 {
        return;
    }
    let app = m[(r, r)];
    let aqq = m[(c, c)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let cos = 1.0 / (t * t + 1.0).sqrt();
    let sin = t * cos;
    let p = m.rows();

    for k in 0..p {
        let mkr = m[(k, r)];
        let mkc = m[(k, c)];
        m[(k, r)] = cos * mkr - sin * mkc;
        m[(k, c)] = sin * mkr + cos * mkc;
    }
    for k in 0..p {
        let mrk = m[(r, k)];
        let mck = m[(c, k)];
        m[(r, k)] = cos * mrk - sin * mck;
        m[(c, k)] = sin * mrk + cos * mck;
    }
    m[(r, c)] = 0.0;
    m[(c, r)] = 0.0;
    m[(r, r)] = app - t * apq;
    m[(c, c)] = aqq + t * apq;

    for k in 0..p {
        let vkr = v[(k, r)];
        let vkc = v[(k, c)];
        v[(k, r)] = cos * vkr - sin * vkc;
        v[(k, c)] = sin * vkr + cos * vkc;
    }
}

/// Exponents supported by [`spd_power`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdExponent {
    Sqrt,
    InvSqrt,
    Inverse,
}

impl SpdExponent {
    fn apply(self, x: f64) -> f64 {
        match self {
            SpdExponent::Sqrt => x.sqrt(),
            SpdExponent::InvSqrt => 1.0 / x.sqrt(),
            SpdExponent::Inverse => 1.0 / x,
        }
    }
}

/// Checks positive definiteness of an already decomposed matrix.
pub fn check_positive_definite(eig: &EigenPair) -> Result<()> {
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if max.is_nan() || max <= 0.0 || min <= PD_TOLERANCE * max {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    Ok(())
}

/// Symmetric matrix power `V · diag(λ^e) · Vᵀ` of a symmetric positive definite matrix.
pub fn spd_power(a: &SymMatrix, exponent: SpdExponent) -> Result<SymMatrix> {
    let eig = sym_eigen(a)?;
    check_positive_definite(&eig)?;
    Ok(eig.reconstruct_with(|v| exponent.apply(v)))
}

/// Observations in rows, variables in columns. All entries are finite.
#[derive(Clone, PartialEq)]
pub struct DataMatrix(Matrix);

impl DataMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::invalid(
                "data matrix must have at least one row and one column",
            ));
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / values.cols() + 1,
                pos % values.cols() + 1
            )));
        }
        Ok(DataMatrix(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        DataMatrix::new(Matrix::from_rows(rows)?)
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.0.rows()
    }

    /// Number of variables.
    pub fn p(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.0.as_slice().chunks_exact(self.p())
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.p()];
        for row in self.rows() {
            for (m, x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.n() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Affine image with every row mapped to `A·x + b`.
    pub fn affine(&self, a: &Matrix, b: &[f64]) -> Result<DataMatrix> {
        if a.cols() != self.p() || a.rows() != b.len() {
            return Err(Error::invalid(
                "affine map dimensions do not match the data",
            ));
        }
        let mut out = self.0.matmul(&a.transpose());
        for i in 0..out.rows() {
            for (x, shift) in out.row_mut(i).iter_mut().zip(b) {
                *x += shift;
            }
        }
        DataMatrix::new(out)
    }
}

impl fmt::Debug for DataMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Data{:?}", self.0)
    }
}

/// Subtracts the column means from every row.
pub fn center_columns(x: &DataMatrix) -> Result<DataMatrix> {
    if x.n() < 2 {
        return Err(Error::invalid(format!(
            "centering needs at least 2 rows, got {}",
            x.n()
        )));
    }
    let means = x.column_means();
    let mut out = x.0.clone();
    for i in 0..out.rows() {
        for (v, m) in out.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    Ok(DataMatrix(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(rows: &[Vec<f64>]) -> SymMatrix {
        SymMatrix::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn orthonormality_error(v: &Matrix) -> f64 {
        v.transpose()
            .matmul(v)
            .max_abs_diff(&Matrix::identity(v.cols()))
    }

    #[test]
    fn identity_eigen() {
        let eig = sym_eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
        assert!(orthonormality_error(&eig.vectors) < 1e-10);
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // λ² − 4λ + 3 = 0 → λ ∈ {3, 1}
        let eig = sym_eigen(&sym(&[vec![2.0, 1.0], vec![1.0, 2.0]])).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig.vectors[(0, 0)].abs() - h).abs() < 1e-14);
        assert!((eig.vectors[(0, 0)] - eig.vectors[(1, 0)]).abs() < 1e-14);
        assert!((eig.vectors[(0, 1)] + eig.vectors[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn sign_convention() {
        let eig = sym_eigen(&sym(&[
            vec![4.0, -2.0, 0.5],
            vec![-2.0, 3.0, 1.0],
            vec![0.5, 1.0, 1.0],
        ]))
        .unwrap();
        for j in 0..3 {
            let col = eig.vectors.column(j);
            let lead = col
                .iter()
                .copied()
                .fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = SymMatrix::identity(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(sym_eigen(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_matrix_converges() {
        let eig = sym_eigen(&SymMatrix::diagonal(&[0.0, 0.0])).unwrap();
        assert_eq!(eig.values, vec![0.0, 0.0]);
    }

    #[test]
    fn spd_power_diagonal_and_identity() {
        let r = spd_power(&SymMatrix::diagonal(&[4.0, 9.0]), SpdExponent::InvSqrt).unwrap();
        assert!(
            r.as_matrix()
                .max_abs_diff(&Matrix::diagonal(&[0.5, 1.0 / 3.0]))
                < 1e-15
        );
        for e in [
            SpdExponent::Sqrt,
            SpdExponent::InvSqrt,
            SpdExponent::Inverse,
        ] {
            let r = spd_power(&SymMatrix::identity(4), e).unwrap();
            assert_eq!(r.as_matrix(), &Matrix::identity(4));
        }
    }

    #[test]
    fn spd_power_rejects_singular() {
        let m = sym(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            spd_power(&m, SpdExponent::InvSqrt),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let neg = SymMatrix::diagonal(&[1.0, -1.0]);
        assert!(spd_power(&neg, SpdExponent::Sqrt).is_err());
    }

    #[test]
    fn symmetric_constructor_rejects_asymmetry() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]).unwrap();
        assert!(SymMatrix::new(m).is_err());
    }

    #[test]
    fn centering() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let c = center_columns(&x).unwrap();
        assert_eq!(c.row(0), &[-1.0, -1.0]);
        assert_eq!(c.row(1), &[1.0, 1.0]);
        let again = center_columns(&c).unwrap();
        assert!(again.as_matrix().max_abs_diff(c.as_matrix()) < 1e-12);

        let constant = DataMatrix::from_rows(&[vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        let c = center_columns(&constant).unwrap();
        assert!(c.as_matrix().as_slice().iter().all(|&v| v == 0.0));

        let single = DataMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            center_columns(&single),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn data_matrix_rejects_non_finite() {
        assert!(DataMatrix::from_rows(&[vec![1.0, f64::INFINITY]]).is_err());
    }

    fn symmetric_strategy() -> impl Strategy<Value = SymMatrix> {
        (1usize..=20).prop_flat_map(|p| {
            prop::collection::vec(-10.0f64..10.0, p * p).prop_map(move |vals| {
                SymMatrix::symmetrize(&Matrix::from_row_major(p, p, vals).unwrap())
            })
        })
    }

    fn spd_strategy() -> impl Strategy<Value = SymMatrix> {
        (1usize..=10).prop_flat_map(|p| {
            prop::collection::vec(-3.0f64..3.0, p * p).prop_map(move |vals| {
                let m = Matrix::from_row_major(p, p, vals).unwrap();
                let mut a = m.transpose().matmul(&m);
                for i in 0..p {
                    a[(i, i)] += 1.0;
                }
                SymMatrix::symmetrize(&a)
            })
        })
    }

    proptest! {
        #[test]
        fn eigen_reconstructs_and_preserves_trace(a in symmetric_strategy()) {
            let eig = sym_eigen(&a).unwrap();
            let norm = a.as_matrix().frobenius_norm();
            prop_assert!(eig.reconstruct().as_matrix().max_abs_diff(a.as_matrix()) <= 1e-9 * norm + 1e-300);
            prop_assert!(orthonormality_error(&eig.vectors) < 1e-10);
            let tr = a.as_matrix().trace();
            let sum: f64 = eig.values.iter().sum();
            prop_assert!((sum - tr).abs() <= 1e-10 * tr.abs() + 1e-12);
            prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            for j in 0..a.dim() {
                let col = eig.vectors.column(j);
                let av = a.as_matrix().mul_vec(&col);
                for (x, c) in av.iter().zip(&col) {
                    prop_assert!((x - eig.values[j] * c).abs() <= 1e-8 * norm + 1e-300);
                }
            }
        }

        #[test]
        fn eigen_is_deterministic(a in symmetric_strategy()) {
            prop_assert_eq!(sym_eigen(&a).unwrap(), sym_eigen(&a).unwrap());
        }

        #[test]
        fn spd_power_round_trips(a in spd_strategy()) {
            let p = a.dim();
            let s = spd_power(&a, SpdExponent::Sqrt).unwrap();
            let sq = s.as_matrix().matmul(s.as_matrix());
            prop_assert!(sq.max_abs_diff(a.as_matrix()) < 1e-9 * a.as_matrix().frobenius_norm().max(1.0));
            let w = spd_power(&a, SpdExponent::InvSqrt).unwrap();
            let id = w.as_matrix().matmul(a.as_matrix()).matmul(w.as_matrix());
            prop_assert!(id.max_abs_diff(&Matrix::identity(p)) < 1e-9);
            let inv = spd_power(&a, SpdExponent::Inverse).unwrap();
            prop_assert!(inv.as_matrix().matmul(a.as_matrix()).max_abs_diff(&Matrix::identity(p)) < 1e-9);
        }
    }
}
