//! Small dense matrix kernel for symmetric positive (semi)definite matrices.
//!
//! Dimensions here are tiny (the state dimension of a martingale, usually
//! 1 to 4, at most 8 for the eigensolver), so everything is stored inline in
//! a row-major buffer and decomposed with cyclic Jacobi rotations.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Eigenvalues at or below `EPS_SPD * max eigenvalue` count as zero.
pub const EPS_SPD: f64 = 1e-12;
/// Maximum relative asymmetry accepted by [`SpdMatrix::new`].
pub const MAX_ASYMMETRY: f64 = 1e-8;
/// Negative eigenvalues down to `-PSD_NOISE * max(1, max eigenvalue)` are rounding noise.
const PSD_NOISE: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

type Buf = SmallVec<[f64; 16]>;

/// Square real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Buf,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: SmallVec::from_elem(0.0, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, alpha: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = alpha;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Buf::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from a row-major slice of length `dim * dim`.
    pub fn from_row_major(dim: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), dim * dim, "row-major buffer has wrong length");
        Self { dim, data: SmallVec::from_slice(values) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(n)) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `A Aᵀ`.
    pub fn gram(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..n).map(|k| self[(i, k)] * self[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * alpha).collect() }
    }

    /// `diag(d) A diag(d)`.
    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] *= d[i] * d[j];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `‖A − Aᵀ‖_F / max(‖A‖_F, tiny)`.
    pub fn relative_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self[(i, j)] - self[(j, i)];
                s += d * d;
            }
        }
        s.sqrt() / self.frobenius().max(f64::MIN_POSITIVE)
    }

    fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..i {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = m;
                out[(j, i)] = m;
            }
        }
        out
    }

    /// Lower Cholesky factor, or `None` when a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.dim;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.dim;
        let mut a = self.clone();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[(x, c)].abs().total_cmp(&a[(y, c)].abs()))
                .unwrap_or(c);
            if a[(p, c)] == 0.0 {
                return 0.0;
            }
            if p != c {
                for j in 0..n {
                    a.data.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let piv = a[(c, c)];
            det *= piv;
            for r in c + 1..n {
                let f = a[(r, c)] / piv;
                for j in c..n {
                    a.data[r * n + j] -= f * a.data[c * n + j];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[(x, c)].abs().total_cmp(&a[(y, c)].abs()))?;
            if a[(p, c)] == 0.0 {
                return None;
            }
            for j in 0..n {
                a.data.swap(p * n + j, c * n + j);
                inv.data.swap(p * n + j, c * n + j);
            }
            let piv = a[(c, c)];
            for j in 0..n {
                a.data[c * n + j] /= piv;
                inv.data[c * n + j] /= piv;
            }
            for r in 0..n {
                if r != c {
                    let f = a[(r, c)];
                    if f != 0.0 {
                        for j in 0..n {
                            a.data[r * n + j] -= f * a.data[c * n + j];
                            inv.data[r * n + j] -= f * inv.data[c * n + j];
                        }
                    }
                }
            }
        }
        Some(inv)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues in nonincreasing order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl Eigensystem {
    /// `V f(D) Vᵀ`, symmetrized.
    pub fn recompose(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..n).map(|k| v[(i, k)] * mapped[k] * v[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn jacobi_eigen(a: &Matrix) -> Eigensystem {
    let n = a.dim();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, col)] = v[(r, src)];
        }
    }
    Eigensystem { eigenvalues, eigenvectors }
}

/// Symmetric positive semidefinite matrix.
#[derive(Clone, PartialEq)]
pub struct SpdMatrix {
    inner: Matrix,
    asymmetry: f64,
}

impl std::fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.inner.fmt(f)
    }
}

impl SpdMatrix {
    /// Symmetrizes `(A + Aᵀ)/2` and checks positive semidefiniteness.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("covariance matrix"));
        }
        let asymmetry = m.relative_asymmetry();
        if asymmetry > MAX_ASYMMETRY {
            return Err(Error::Asymmetric { asymmetry });
        }
        let inner = m.symmetrized();
        let eig = jacobi_eigen(&inner);
        let floor = -PSD_NOISE * eig.max().abs().max(1.0);
        if eig.min() < floor {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: eig.min() });
        }
        Ok(Self { inner, asymmetry })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: Matrix::identity(dim), asymmetry: 0.0 }
    }

    pub fn scalar(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(Matrix::scalar(dim, alpha))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diag(values))
    }

    /// `A Aᵀ` for an arbitrary square `A`.
    pub fn gram(a: &Matrix) -> Result<Self> {
        Self::new(a.gram())
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    /// Relative asymmetry observed before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn eigen(&self) -> Eigensystem {
        jacobi_eigen(&self.inner)
    }

    /// Errors with `SingularMatrix` unless the smallest eigenvalue exceeds
    /// `EPS_SPD` times the largest.
    pub fn require_positive_definite(&self) -> Result<Eigensystem> {
        let eig = self.eigen();
        let max = eig.max();
        if !(max > 0.0) || eig.min() <= EPS_SPD * max {
            return Err(Error::SingularMatrix { min_eigenvalue: eig.min() });
        }
        Ok(eig)
    }

    /// `log det Σ`, via Cholesky for well-conditioned inputs.
    pub fn log_det(&self) -> Result<f64> {
        let eig = self.require_positive_definite()?;
        Ok(log_det_with(&self.inner, &eig))
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        let eig = self.require_positive_definite()?;
        Ok(SpdMatrix { inner: eig.recompose(|l| 1.0 / l), asymmetry: 0.0 })
    }

    pub fn inverse_sqrt(&self) -> Result<SpdMatrix> {
        let eig = self.require_positive_definite()?;
        Ok(SpdMatrix { inner: eig.recompose(|l| 1.0 / l.sqrt()), asymmetry: 0.0 })
    }

    pub fn scale(&self, alpha: f64) -> Result<SpdMatrix> {
        SpdMatrix::new(self.inner.scale(alpha))
    }

    pub fn add(&self, rhs: &SpdMatrix) -> Result<SpdMatrix> {
        SpdMatrix::new(self.inner.add(&rhs.inner))
    }
}

impl Serialize for SpdMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.inner.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpdMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Matrix::deserialize(d)?;
        SpdMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

fn log_det_with(m: &Matrix, eig: &Eigensystem) -> f64 {
    match m.cholesky() {
        Some(l) => 2.0 * l.diag().iter().map(|d| d.ln()).sum::<f64>(),
        None => eig.eigenvalues.iter().map(|l| l.ln()).sum(),
    }
}

/// Scalar `F_1(x) = ½(x − 1 − ln x)`.
pub fn f_1(x: f64) -> f64 {
    0.5 * (x - 1.0 - x.ln())
}

/// `F_l(Σ) = ½(tr Σ − l − log det Σ)`.
pub fn f_l(sigma: &SpdMatrix) -> Result<f64> {
    let eig = sigma.require_positive_definite()?;
    let l = sigma.dim() as f64;
    let log_det = log_det_with(sigma.matrix(), &eig);
    Ok((0.5 * (sigma.trace() - l - log_det)).max(0.0))
}

/// `F_l(Σ₂^{-1/2} Σ₁ Σ₂^{-1/2})`.
pub fn f_l_pair(sigma1: &SpdMatrix, sigma2: &SpdMatrix) -> Result<f64> {
    if sigma1.dim() != sigma2.dim() {
        return Err(Error::DimensionMismatch { expected: sigma2.dim(), got: sigma1.dim() });
    }
    sigma1.require_positive_definite()?;
    let r = sigma2.inverse_sqrt()?;
    let sandwich = r.matrix().matmul(sigma1.matrix()).matmul(r.matrix());
    f_l(&SpdMatrix::new(sandwich)?)
}

/// Unique symmetric positive semidefinite square root.
pub fn spd_sqrt(sigma: &SpdMatrix) -> SpdMatrix {
    let eig = sigma.eigen();
    SpdMatrix { inner: eig.recompose(|l| l.max(0.0).sqrt()), asymmetry: 0.0 }
}

/// Spectral modifications applied in the eigenbasis of a covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectralKind {
    /// Eigenvalues `min(λ, c)`.
    Cap { c: f64 },
    /// `(Σ^{1/2} + εI)²`.
    InflateSqrt { eps: f64 },
    /// Eigenvalues `max(λ, ε)`.
    Floor { eps: f64 },
}

pub fn spectral_transform(sigma: &SpdMatrix, kind: SpectralKind) -> Result<SpdMatrix> {
    let eig = sigma.eigen();
    let inner = match kind {
        SpectralKind::Cap { c } => {
            positive("c", c)?;
            eig.recompose(|l| l.max(0.0).min(c))
        }
        SpectralKind::InflateSqrt { eps } => {
            positive("eps", eps)?;
            eig.recompose(|l| (l.max(0.0).sqrt() + eps).powi(2))
        }
        SpectralKind::Floor { eps } => {
            positive("eps", eps)?;
            eig.recompose(|l| l.max(eps))
        }
    };
    Ok(SpdMatrix { inner, asymmetry: 0.0 })
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveParameter { name, value })
    }
}
