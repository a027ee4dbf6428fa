//! Dense complex operator algebra.
//!
//! Operators are `d x d` complex matrices tagged with the role they play
//! (observable, density matrix or general matrix). Vectorization uses the
//! column-stacking convention throughout: entry `(i, j)` of a matrix lands at
//! position `j * d + i`, so that `vec(A B C) = (C^T ⊗ A) vec(B)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Maximum entrywise deviation from `A = A^†` accepted for Hermitian operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace and eigenvalue tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-12;
/// Negative eigenvalues down to `-PSD_CLAMP` are clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;
/// Eigenvalues below this (relative to `max(1, λ_max)`) are at rounding level
/// and treated as exact zeros.
pub const EIGEN_ZERO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Hermitian,
    Density,
    General,
}

/// A `d x d` complex matrix together with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    kind: OperatorKind,
}

impl Operator {
    /// Wraps an arbitrary square matrix.
    pub fn general(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        Ok(Self {
            matrix,
            kind: OperatorKind::General,
        })
    }

    /// Wraps a Hermitian matrix, rejecting entries that deviate from their
    /// conjugate transpose by more than [`HERMITIAN_TOL`].
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(QslError::NotHermitian { deviation });
        }
        Ok(Self {
            matrix,
            kind: OperatorKind::Hermitian,
        })
    }

    /// Wraps a density matrix: Hermitian, unit trace, no eigenvalue below
    /// `-DENSITY_TOL`.
    pub fn density(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let deviation = hermiticity_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(QslError::NotDensity(format!(
                "not Hermitian (deviation {deviation:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(QslError::NotDensity(format!("trace {trace} != 1")));
        }
        let (eigenvalues, _) = eigh(&matrix);
        if let Some(&min) = eigenvalues.first() {
            if min < -DENSITY_TOL {
                return Err(QslError::NotDensity(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self {
            matrix,
            kind: OperatorKind::Density,
        })
    }

    /// Tags a matrix without validation. Used for propagated operators, which
    /// inherit the kind of the initial condition.
    pub(crate) fn with_kind_unchecked(matrix: CMatrix, kind: OperatorKind) -> Self {
        Self { matrix, kind }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
            kind: OperatorKind::Hermitian,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
            kind: OperatorKind::Hermitian,
        }
    }

    /// The maximally mixed state `I / d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
            kind: OperatorKind::Density,
        }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<CMatrix> {
        if entries.len() != dim * dim {
            return Err(QslError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(CMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_density(&self) -> bool {
        self.kind == OperatorKind::Density
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            kind: self.kind,
        }
    }

    /// Maximum entrywise deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(QslError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> Operator {
    Operator::with_kind_unchecked(
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        OperatorKind::Hermitian,
    )
}

pub fn pauli_y() -> Operator {
    Operator::with_kind_unchecked(
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        OperatorKind::Hermitian,
    )
}

pub fn pauli_z() -> Operator {
    Operator::with_kind_unchecked(
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        OperatorKind::Hermitian,
    )
}

/// `a_1 σ_x + a_2 σ_y + a_3 σ_z`.
pub fn bloch_observable(a: [f64; 3]) -> Operator {
    let m = pauli_x().matrix * c(a[0], 0.) + pauli_y().matrix * c(a[1], 0.)
        + pauli_z().matrix * c(a[2], 0.);
    Operator::with_kind_unchecked(m, OperatorKind::Hermitian)
}

/// The qubit state `(I + r·σ) / 2` for a Bloch vector with `|r| <= 1`.
pub fn bloch_state(r: [f64; 3]) -> Result<Operator> {
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if norm > 1.0 + DENSITY_TOL {
        return Err(QslError::NotDensity(format!("Bloch vector norm {norm} > 1")));
    }
    let m = (CMatrix::identity(2, 2) + bloch_observable(r).matrix) * c(0.5, 0.);
    Ok(Operator::with_kind_unchecked(m, OperatorKind::Density))
}

/// Rank-1 projector `|v><v| / <v|v>`.
pub fn projector(v: &CVector) -> Operator {
    let norm2 = v.norm_squared();
    let m = (v * v.adjoint()).unscale(norm2);
    Operator::with_kind_unchecked(m, OperatorKind::Density)
}

/// Matrix unit `|i><j|` of dimension `dim`.
pub fn matrix_unit(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = c(1., 0.);
    m
}

fn check_same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(QslError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_same_dim(a, b)?;
    Ok(Operator::with_kind_unchecked(
        commutator_matrix(&a.matrix, &b.matrix),
        OperatorKind::General,
    ))
}

pub(crate) fn commutator_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Hilbert-Schmidt (Frobenius) norm `sqrt(tr(A^† A))`.
pub fn hs_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hs_norm_sqr(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Hilbert-Schmidt inner product `tr(A^† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Schatten-p norm `(Σ σ_i^p)^(1/p)`; pass `f64::INFINITY` for the operator norm.
pub fn schatten_norm(a: &Operator, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(QslError::InvalidNormOrder(p));
    }
    if p == 2.0 {
        return Ok(hs_norm(&a.matrix));
    }
    let sv = SVD::new(a.matrix.clone(), false, false).singular_values;
    if p.is_infinite() {
        return Ok(sv.iter().cloned().fold(0.0, f64::max));
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Maximum absolute column sum `max_j Σ_i |A_ij|`. Not the Schatten trace norm.
pub fn max_column_sum_norm(m: &CMatrix) -> f64 {
    column_sums(m).into_iter().fold(0.0, f64::max)
}

pub(crate) fn column_sums(m: &CMatrix) -> Vec<f64> {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum())
        .collect()
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * c(0.5, 0.);
    let eig = SymmetricEigen::new(herm);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub(crate) fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Spectrum of a PSD operator after clamping: values in `[-PSD_CLAMP, 0)` and
/// rounding-level positives become exact zeros.
pub(crate) fn clamp_psd_spectrum(values: &mut [f64]) -> Result<()> {
    let scale = values.iter().cloned().fold(1.0, f64::max);
    for v in values.iter_mut() {
        if *v < -PSD_CLAMP {
            return Err(QslError::NotPsd { eigenvalue: *v });
        }
        if *v <= EIGEN_ZERO * scale {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Principal square root of a positive semidefinite Hermitian operator.
pub fn sqrtm_psd(rho: &Operator) -> Result<Operator> {
    if rho.kind == OperatorKind::General {
        let deviation = rho.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(QslError::NotHermitian { deviation });
        }
    }
    let m = &rho.matrix;
    let n = rho.dim();
    // Diagonal inputs are handled entrywise so that scalar matrices map to
    // exact scalar matrices.
    if is_diagonal(m) {
        let mut diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
        clamp_psd_spectrum(&mut diag)?;
        let out = CMatrix::from_diagonal(&CVector::from_iterator(
            n,
            diag.iter().map(|v| c(v.sqrt(), 0.)),
        ));
        return Ok(Operator::with_kind_unchecked(out, OperatorKind::Hermitian));
    }
    let (mut values, vectors) = eigh(m);
    clamp_psd_spectrum(&mut values)?;
    let roots = CVector::from_iterator(n, values.iter().map(|v| c(v.sqrt(), 0.)));
    let out = &vectors * CMatrix::from_diagonal(&roots) * vectors.adjoint();
    Ok(Operator::with_kind_unchecked(out, OperatorKind::Hermitian))
}

/// Matrix exponential (scaling and squaring with a Padé approximant).
pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(QslError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QslError::NonFinite);
    }
    if is_diagonal(m) {
        return Ok(CMatrix::from_diagonal(&m.diagonal().map(|z| z.exp())));
    }
    Ok(m.clone().exp())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// A column-stacked operator `|A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecOperator {
    dim: usize,
    entries: CVector,
}

impl VecOperator {
    pub fn from_entries(entries: CVector) -> Result<Self> {
        let len = entries.len();
        let dim = (len as f64).sqrt().round() as usize;
        if dim * dim != len || dim == 0 {
            return Err(QslError::NotPerfectSquare(len));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CVector {
        &self.entries
    }
}

pub fn vectorize(a: &Operator) -> VecOperator {
    VecOperator {
        dim: a.dim(),
        entries: vec_matrix(&a.matrix),
    }
}

pub fn devectorize(v: &VecOperator) -> Operator {
    Operator::with_kind_unchecked(unvec_matrix(&v.entries, v.dim), OperatorKind::General)
}

// nalgebra stores matrices column-major, so the storage order is already the
// column-stacking order.
pub(crate) fn vec_matrix(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvec_matrix(v: &CVector, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}
