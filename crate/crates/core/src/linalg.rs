//! Dense linear algebra used by the solvers.
//!
//! Everything here works on [`DenseMatrix`], a column-major `f64` matrix. The
//! central routine is [`thin_qr`], a cache-blocked Householder factorization of
//! a tall matrix. The continuation solver factors `Jᵀ` once per Jacobian
//! refresh and then obtains every minimum-norm Newton step from the stored
//! reflectors at `O(nm)` cost (see [`ThinQR::min_norm_solve`]).

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Relative pivot threshold used to declare a triangular factor singular.
pub const RANK_TOL_RELATIVE: f64 = 1e-12;
/// Absolute pivot floor, applied when every pivot is tiny.
pub const RANK_TOL_ABSOLUTE: f64 = 1e-300;

/// Number of reflectors applied together to each trailing column.
const PANEL_WIDTH: usize = 48;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("triangular factor is singular at pivot {index}")]
    SingularTriangular { index: usize },
    #[error("jacobian does not have full row rank (pivot {index})")]
    RankDeficientJacobian { index: usize },
    #[error("regularized least-squares system is singular")]
    SingularSystem,
    #[error("matrix or vector contains a non-finite entry")]
    NonFinite,
}

/// Column-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from a list of rows. Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged row {i}");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Wraps column-major storage.
    pub fn from_column_major(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            let col = self.column(j);
            for (i, &v) in col.iter().enumerate() {
                t.data[i * self.cols + j] = v;
            }
        }
        t
    }

    /// `self · x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.column(j), &mut y);
            }
        }
        y
    }

    /// `selfᵀ · x`
    pub fn matvec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols).map(|j| dot(self.column(j), x)).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.matvec(other.column(j));
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        inf_norm(&self.data)
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|j| format!("{:>12.5e}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

#[inline(always)]
fn fmadd(a: f64, b: f64, c: f64) -> f64 {
    #[cfg(target_feature = "fma")]
    {
        a.mul_add(b, c)
    }
    #[cfg(not(target_feature = "fma"))]
    {
        a * b + c
    }
}

/// Inner product with eight independent accumulators so the loop vectorizes.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = fmadd(x[k], y[k], acc[k]);
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail = fmadd(*x, *y, tail);
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// `y += alpha · x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = fmadd(alpha, *xi, *yi);
    }
}

/// Euclidean norm, scaled to avoid overflow for large entries.
pub fn norm2(x: &[f64]) -> f64 {
    let scale = inf_norm(x);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    if (1e-150..1e150).contains(&scale) {
        return dot(x, x).sqrt();
    }
    let ss: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}

/// Max-abs norm. NaN entries propagate.
pub fn inf_norm(x: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for &v in x {
        if v.is_nan() {
            return f64::NAN;
        }
        m = m.max(v.abs());
    }
    m
}

/// Householder QR of a tall matrix in compact (LAPACK `geqrf`) form.
///
/// The upper triangle of `factors` holds `R`; the strict lower part of
/// column `k` holds the reflector `v_k` whose leading entry is an implicit 1.
/// `Q = H_0 H_1 ⋯ H_{m-1}` with `H_k = I − tau_k v_k v_kᵀ`. The thin `Q` is
/// never formed by the solvers; [`ThinQR::q`] materializes it on request.
#[derive(Clone, Debug)]
pub struct ThinQR {
    factors: DenseMatrix,
    tau: Vec<f64>,
}

/// Computes the thin QR factorization `a = q·r` of an `n × m` matrix, `n ≥ m`.
pub fn thin_qr(a: &DenseMatrix) -> Result<ThinQR, LinalgError> {
    thin_qr_owned(a.clone())
}

/// As [`thin_qr`], reusing the storage of `a`.
pub fn thin_qr_owned(a: DenseMatrix) -> Result<ThinQR, LinalgError> {
    let (n, m) = (a.rows, a.cols);
    if n < m {
        return Err(LinalgError::Dimension(format!(
            "thin QR needs rows >= cols, got {n}x{m}"
        )));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut factors = a;
    let mut tau = vec![0.0; m];
    let mut k0 = 0;
    while k0 < m {
        let k1 = (k0 + PANEL_WIDTH).min(m);
        let (head, trailing) = factors.data.split_at_mut(k1 * n);
        let panel = &mut head[k0 * n..];
        // Factor the panel column by column.
        for k in k0..k1 {
            let (done, rest) = panel.split_at_mut((k - k0 + 1) * n);
            let col = &mut done[(k - k0) * n..];
            tau[k] = make_reflector(&mut col[k..]);
            let v = &col[k..];
            for other in rest.chunks_exact_mut(n) {
                apply_reflector(v, tau[k], &mut other[k..]);
            }
        }
        // Apply the panel's reflectors to each trailing column while it is hot in cache.
        let panel = &head[k0 * n..];
        for col in trailing.chunks_exact_mut(n) {
            for k in k0..k1 {
                let v = &panel[(k - k0) * n + k..(k - k0 + 1) * n];
                apply_reflector(v, tau[k], &mut col[k..]);
            }
        }
        k0 = k1;
    }
    Ok(ThinQR { factors, tau })
}

/// Overwrites `x` with `(beta, v[1..])` and returns `tau` such that
/// `(I − tau v vᵀ) x = beta e_1` with `v[0] = 1`.
fn make_reflector(x: &mut [f64]) -> f64 {
    let alpha = x[0];
    let tail_norm = norm2(&x[1..]);
    if tail_norm == 0.0 {
        return 0.0;
    }
    let norm = alpha.hypot(tail_norm);
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = beta;
    (beta - alpha) / beta
}

/// `y ← (I − tau v vᵀ) y` with the implicit unit leading entry of `v`.
#[inline]
fn apply_reflector(v: &[f64], tau: f64, y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let w = tau * (y[0] + dot(&v[1..], &y[1..]));
    y[0] -= w;
    axpy(-w, &v[1..], &mut y[1..]);
}

impl ThinQR {
    /// Number of rows of the factored matrix (`n`).
    pub fn rows(&self) -> usize {
        self.factors.rows
    }

    /// Number of columns of the factored matrix (`m`).
    pub fn cols(&self) -> usize {
        self.factors.cols
    }

    /// The `m × m` upper-triangular factor, with exact zeros below the diagonal.
    pub fn r(&self) -> DenseMatrix {
        let m = self.cols();
        DenseMatrix::from_fn(m, m, |i, j| if i <= j { self.factors[(i, j)] } else { 0.0 })
    }

    /// Diagonal of `R`.
    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.cols()).map(|k| self.factors[(k, k)]).collect()
    }

    /// The `n × m` factor with orthonormal columns.
    pub fn q(&self) -> DenseMatrix {
        let (n, m) = (self.rows(), self.cols());
        let mut q = DenseMatrix::zeros(n, m);
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            let col = self.apply_q(&e);
            q.column_mut(j).copy_from_slice(&col);
        }
        q
    }

    /// `Q · d` for `d` of length `m`.
    pub fn apply_q(&self, d: &[f64]) -> Vec<f64> {
        let (n, m) = (self.rows(), self.cols());
        assert_eq!(d.len(), m);
        let mut y = vec![0.0; n];
        y[..m].copy_from_slice(d);
        for k in (0..m).rev() {
            let v = &self.factors.column(k)[k..];
            apply_reflector(v, self.tau[k], &mut y[k..]);
        }
        y
    }

    /// `Qᵀ · y` for `y` of length `n` (thin: returns `m` entries).
    pub fn apply_qt(&self, y: &[f64]) -> Vec<f64> {
        let mut full = self.apply_full_qt(y);
        full.truncate(self.cols());
        full
    }

    /// Applies all reflectors, returning the full length-`n` product `Hᵀ y`.
    fn apply_full_qt(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows());
        let mut y = y.to_vec();
        for k in 0..self.cols() {
            let v = &self.factors.column(k)[k..];
            apply_reflector(v, self.tau[k], &mut y[k..]);
        }
        y
    }

    /// Pivot threshold for this factor.
    pub fn rank_tol(&self) -> f64 {
        rank_tol_from_diagonal(self.r_diagonal().iter().copied())
    }

    /// Solves `Rᵀ y = b`.
    pub fn solve_rt(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        forward_substitute_rt(&self.factors, self.cols(), b)
    }

    /// Solves `R x = b`.
    pub fn solve_r(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        back_substitute_r(&self.factors, self.cols(), b)
    }

    /// Minimum-norm solution of `J s = −f` where this is the factorization of `Jᵀ`.
    pub fn min_norm_solve(&self, f: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if f.len() != self.cols() {
            return Err(LinalgError::Dimension(format!(
                "residual has {} entries, factorization expects {}",
                f.len(),
                self.cols()
            )));
        }
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let d = self.solve_rt(&neg).map_err(|e| match e {
            LinalgError::SingularTriangular { index } => {
                LinalgError::RankDeficientJacobian { index }
            }
            other => other,
        })?;
        Ok(self.apply_q(&d))
    }

    /// Least-squares solution of `A x ≈ b` for the factored tall matrix `A`
    /// (requires full column rank).
    pub fn least_squares(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.rows() {
            return Err(LinalgError::Dimension(format!(
                "right-hand side has {} entries, expected {}",
                b.len(),
                self.rows()
            )));
        }
        let c = self.apply_qt(b);
        self.solve_r(&c)
    }
}

fn rank_tol_from_diagonal(diag: impl Iterator<Item = f64>) -> f64 {
    let max = diag.fold(0.0f64, |acc, v| acc.max(v.abs()));
    (RANK_TOL_RELATIVE * max).max(RANK_TOL_ABSOLUTE)
}

fn check_pivots(r: &DenseMatrix, m: usize) -> Result<(), LinalgError> {
    let tol = rank_tol_from_diagonal((0..m).map(|k| r[(k, k)]));
    match (0..m).find(|&k| !(r[(k, k)].abs() > tol)) {
        Some(index) => Err(LinalgError::SingularTriangular { index }),
        None => Ok(()),
    }
}

// Both substitutions read only the leading m×m upper triangle of `r`, so they
// work on the compact factor storage directly.
fn forward_substitute_rt(r: &DenseMatrix, m: usize, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != m {
        return Err(LinalgError::Dimension(format!(
            "right-hand side has {} entries, expected {m}",
            b.len()
        )));
    }
    check_pivots(r, m)?;
    // Row i of Rᵀ is column i of R, contiguous in column-major storage.
    let mut y = vec![0.0; m];
    for i in 0..m {
        let col = &r.column(i)[..i];
        y[i] = (b[i] - dot(col, &y[..i])) / r[(i, i)];
    }
    Ok(y)
}

fn back_substitute_r(r: &DenseMatrix, m: usize, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != m {
        return Err(LinalgError::Dimension(format!(
            "right-hand side has {} entries, expected {m}",
            b.len()
        )));
    }
    check_pivots(r, m)?;
    let mut x = b.to_vec();
    for j in (0..m).rev() {
        x[j] /= r[(j, j)];
        let xj = x[j];
        let col = &r.column(j)[..j];
        axpy(-xj, col, &mut x[..j]);
    }
    Ok(x)
}

/// Solves `rᵀ · y = b` for upper-triangular `r`.
///
/// Fails with [`LinalgError::SingularTriangular`] when a pivot is at or below
/// `max(1e-12 · max|r_ii|, 1e-300)`.
pub fn solve_lower_triangular_transposed(
    r: &DenseMatrix,
    b: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    if r.rows != r.cols {
        return Err(LinalgError::Dimension(format!(
            "triangular factor must be square, got {}x{}",
            r.rows, r.cols
        )));
    }
    forward_substitute_rt(r, r.cols, b)
}

/// Solves `r · x = b` for upper-triangular `r`.
pub fn solve_upper_triangular(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if r.rows != r.cols {
        return Err(LinalgError::Dimension(format!(
            "triangular factor must be square, got {}x{}",
            r.rows, r.cols
        )));
    }
    back_substitute_r(r, r.cols, b)
}

/// Minimum-norm solution of `jac · s = −f` for a full-row-rank `m × n` Jacobian.
///
/// Factors `jacᵀ` unless a factorization is supplied, in which case `jac` is
/// only used for the dimension check. The factorization is handed back so
/// callers can reuse it for later right-hand sides.
pub fn min_norm_step(
    jac: &DenseMatrix,
    f: &[f64],
    cache: Option<ThinQR>,
) -> Result<(Vec<f64>, ThinQR), LinalgError> {
    let (m, n) = (jac.rows, jac.cols);
    if m > n {
        return Err(LinalgError::Dimension(format!(
            "minimum-norm step needs m <= n, got {m}x{n}"
        )));
    }
    if f.len() != m {
        return Err(LinalgError::Dimension(format!(
            "residual has {} entries, jacobian has {m} rows",
            f.len()
        )));
    }
    let qr = match cache {
        Some(qr) if qr.rows() == n && qr.cols() == m => qr,
        Some(qr) => {
            return Err(LinalgError::Dimension(format!(
                "cached factorization is {}x{}, expected {n}x{m}",
                qr.rows(),
                qr.cols()
            )))
        }
        None => thin_qr_owned(jac.transpose())?,
    };
    let step = qr.min_norm_solve(f)?;
    Ok((step, qr))
}
