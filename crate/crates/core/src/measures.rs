//! Quantumness functionals and the non-commutativity witness relations.

use serde::Serialize;

use crate::error::{QslError, Result};
use crate::opalg::{
    c, column_sums, commutator_matrix, eigh, hs_norm, hs_norm_sqr, max_column_sum_norm, sqrtm_psd,
    CMatrix, CVector, Operator, OperatorKind, HERMITIAN_TOL,
};

/// An orthonormal basis `{|k>}` stored as the columns of a unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: CMatrix,
}

impl Basis {
    pub fn computational(dim: usize) -> Self {
        Self {
            columns: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_vectors(vectors: &[CVector]) -> Result<Self> {
        let dim = vectors.len();
        if dim == 0 {
            return Err(QslError::InvalidParameter("empty basis".into()));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(QslError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        Self::from_columns(CMatrix::from_columns(vectors))
    }

    pub fn from_columns(columns: CMatrix) -> Result<Self> {
        if columns.nrows() != columns.ncols() {
            return Err(QslError::NotSquare {
                rows: columns.nrows(),
                cols: columns.ncols(),
            });
        }
        let n = columns.nrows();
        let gram = columns.adjoint() * &columns;
        let deviation = (gram - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > 1e-12 {
            return Err(QslError::NotOrthonormal(deviation));
        }
        Ok(Self { columns })
    }

    /// Eigenbasis of a Hermitian observable, ordered by ascending eigenvalue.
    pub fn eigenbasis(a: &Operator) -> Result<Self> {
        let (_, vectors) = eigh(a.matrix());
        Self::from_columns(vectors)
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.columns.column(k).into_owned()
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        (0..self.dim())
            .map(|k| {
                let v = self.columns.column(k);
                &v * v.adjoint()
            })
            .collect()
    }

    /// Matrix elements `<i|X|j>` of `x` in this basis.
    pub fn represent(&self, x: &CMatrix) -> CMatrix {
        self.columns.adjoint() * x * &self.columns
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(QslError::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
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

/// `Q(A, B) = 2 ‖[A, B]‖²_HS`.
pub fn quantumness(a: &Operator, b: &Operator) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(2.0 * hs_norm_sqr(&commutator_matrix(a.matrix(), b.matrix())))
}

fn require_density(rho: &Operator) -> Result<()> {
    if rho.kind() != OperatorKind::Density {
        Operator::density(rho.matrix().clone())?;
    }
    Ok(())
}

/// Wigner-Yanase skew information `½ ‖[√ρ, A]‖²_HS`.
pub fn skew_information(rho: &Operator, a: &Operator) -> Result<f64> {
    require_density(rho)?;
    check_same_dim(rho, a)?;
    let root = sqrtm_psd(rho)?;
    Ok(0.5 * hs_norm_sqr(&commutator_matrix(root.matrix(), a.matrix())))
}

/// Skew-information coherence `Σ_k I(ρ, |k><k|)`.
pub fn coherence(rho: &Operator, basis: &Basis) -> Result<f64> {
    require_density(rho)?;
    basis.check_dim(rho.dim())?;
    let root = sqrtm_psd(rho)?;
    Ok(coherence_from_root(root.matrix(), basis))
}

pub(crate) fn coherence_from_root(root: &CMatrix, basis: &Basis) -> f64 {
    basis
        .projectors()
        .iter()
        .map(|p| 0.5 * hs_norm_sqr(&commutator_matrix(root, p)))
        .sum()
}

/// Sum of absolute off-diagonal elements in `basis`.
pub fn l1_coherence(rho: &Operator, basis: &Basis) -> Result<f64> {
    basis.check_dim(rho.dim())?;
    let r = basis.represent(rho.matrix());
    let n = r.nrows();
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                total += r[(i, j)].norm();
            }
        }
    }
    Ok(total)
}

fn require_hermitian(a: &Operator) -> Result<()> {
    let deviation = a.hermiticity_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(QslError::NotHermitian { deviation });
    }
    Ok(())
}

/// `[A, A_d]` in `basis`, where `A_d` keeps only the diagonal of `A`.
fn diagonal_commutator(a: &CMatrix) -> CMatrix {
    let ad = CMatrix::from_diagonal(&a.diagonal());
    commutator_matrix(a, &ad)
}

/// `N_A = ‖[A, A_d]‖_1` with the maximum-column-sum norm.
pub fn witness_noncommutativity(a: &Operator, basis: &Basis) -> Result<f64> {
    require_hermitian(a)?;
    basis.check_dim(a.dim())?;
    let rep = basis.represent(a.matrix());
    Ok(max_column_sum_norm(&diagonal_commutator(&rep)))
}

/// `ρ_A = (A + λI) / tr(A + λI)` with `λ` the magnitude of the most negative
/// eigenvalue of `A` (zero when `A` is already positive semidefinite).
pub fn observable_state(a: &Operator) -> Result<(Operator, f64)> {
    require_hermitian(a)?;
    let (values, _) = eigh(a.matrix());
    let lambda = (-values[0]).max(0.0);
    let n = a.dim();
    let shifted = a.matrix() + CMatrix::identity(n, n) * c(lambda, 0.0);
    let trace = shifted.trace().re;
    if trace.abs() < 1e-300 {
        return Err(QslError::InvalidParameter(
            "shifted observable has zero trace".into(),
        ));
    }
    let herm = (&shifted + shifted.adjoint()) * c(0.5 / trace, 0.0);
    Ok((Operator::with_kind_unchecked(herm, OperatorKind::Density), lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimInequality {
    /// Column maximizing the column sum of `A` (lowest index on ties).
    pub column: usize,
    pub a_nn: f64,
    pub norm_a: f64,
    /// `‖[A, A_d]‖_1`.
    pub lhs: f64,
    /// `|(|A_nn| − 1)| ‖A‖_1`.
    pub rhs: f64,
    pub holds: bool,
    /// Coherence of `A|n>`, equal to `‖A‖_1² − 1` for involutory `A`.
    pub state_coherence: f64,
    pub lhs_squared: f64,
    /// `(|A_nn| − 1)² (C + 1)`.
    pub rhs_squared: f64,
    pub holds_squared: bool,
}

/// Slack allowed when comparing the two sides.
pub const DIM_INEQUALITY_SLACK: f64 = 1e-10;

/// Evaluates the involutory-observable inequalities between `‖[A, A_d]‖_1`,
/// the diagonal entry `A_nn` and `‖A‖_1`.
pub fn check_dim_inequality(a: &Operator, basis: &Basis) -> Result<DimInequality> {
    require_hermitian(a)?;
    basis.check_dim(a.dim())?;
    let n = a.dim();
    let square_dev = hs_norm(&(a.matrix() * a.matrix() - CMatrix::identity(n, n)));
    if square_dev > 1e-8 {
        return Err(QslError::NotInvolutory(square_dev));
    }
    let rep = basis.represent(a.matrix());
    let sums = column_sums(&rep);
    let mut column = 0;
    for (j, &s) in sums.iter().enumerate() {
        if s > sums[column] {
            column = j;
        }
    }
    let norm_a = sums[column];
    let a_nn = rep[(column, column)].norm();
    let lhs = max_column_sum_norm(&diagonal_commutator(&rep));
    let rhs = ((a_nn - 1.0) * norm_a).abs();
    let psi = rep.column(column);
    let mut state_coherence = 0.0;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                state_coherence += psi[i].norm() * psi[k].norm();
            }
        }
    }
    let rhs_squared = (a_nn - 1.0).powi(2) * (state_coherence + 1.0);
    Ok(DimInequality {
        column,
        a_nn,
        norm_a,
        lhs,
        rhs,
        holds: lhs + DIM_INEQUALITY_SLACK >= rhs,
        state_coherence,
        lhs_squared: lhs * lhs,
        rhs_squared,
        holds_squared: lhs * lhs + DIM_INEQUALITY_SLACK >= rhs_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::{bloch_observable, bloch_state, pauli_x, pauli_y, pauli_z, projector};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, d: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_hermitian(rng: &mut impl Rng, d: usize) -> Operator {
        let m = random_matrix(rng, d);
        Operator::hermitian((&m + m.adjoint()) * c(0.5, 0.0)).unwrap()
    }

    fn random_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
        random_matrix(rng, d).qr().q()
    }

    fn random_vector(rng: &mut impl Rng, d: usize) -> CVector {
        CVector::from_fn(d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_unit_bloch(rng: &mut impl Rng) -> [f64; 3] {
        loop {
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.1 && n <= 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    fn plus_state() -> Operator {
        projector(&CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]))
    }

    #[test]
    fn quantumness_of_paulis() {
        assert_abs_diff_eq!(quantumness(&pauli_x(), &pauli_y()).unwrap(), 16.0, epsilon = 1e-14);
        assert_eq!(quantumness(&pauli_x(), &pauli_x()).unwrap(), 0.0);
        assert!(quantumness(&pauli_x(), &Operator::identity(3)).is_err());
    }

    #[test]
    fn skew_information_examples() {
        let mixed = Operator::maximally_mixed(2);
        assert_eq!(skew_information(&mixed, &pauli_x()).unwrap(), 0.0);
        let zero = projector(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert_abs_diff_eq!(skew_information(&zero, &pauli_x()).unwrap(), 1.0, epsilon = 1e-14);
        assert!(skew_information(&Operator::identity(2), &pauli_x()).is_err());
    }

    // Oracle: Σ_ij (√λ_i − √λ_j)² |<i|A|j>|² / 2 in the eigenbasis of ρ.
    #[test]
    fn skew_information_spectral_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let g = random_matrix(&mut rng, 2);
            let m = &g * g.adjoint();
            let tr = m.trace().re;
            let rho = Operator::density(m.unscale(tr)).unwrap();
            let (lam, v) = eigh(rho.matrix());
            let a = pauli_z();
            let ae = v.adjoint() * a.matrix() * &v;
            let mut oracle = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    oracle += (lam[i].max(0.0).sqrt() - lam[j].max(0.0).sqrt()).powi(2)
                        * ae[(i, j)].norm_sqr()
                        / 2.0;
                }
            }
            assert_abs_diff_eq!(skew_information(&rho, &a).unwrap(), oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn pure_state_skew_information_is_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let d = rng.gen_range(2..5);
            let psi = random_vector(&mut rng, d);
            let rho = projector(&psi);
            let a = random_hermitian(&mut rng, d);
            let u = psi.unscale(psi.norm());
            let mean = (u.adjoint() * a.matrix() * &u)[(0, 0)].re;
            let second = (u.adjoint() * a.matrix() * a.matrix() * &u)[(0, 0)].re;
            assert_abs_diff_eq!(
                skew_information(&rho, &a).unwrap(),
                second - mean * mean,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn coherence_examples() {
        let z = Basis::computational(2);
        let diag = Operator::density(CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.3, 0.0),
            c(0.7, 0.0),
        ])))
        .unwrap();
        assert_eq!(coherence(&diag, &z).unwrap(), 0.0);
        assert_abs_diff_eq!(coherence(&plus_state(), &z).unwrap(), 0.5, epsilon = 1e-14);
        assert_eq!(coherence(&Operator::maximally_mixed(2), &z).unwrap(), 0.0);
        assert!(coherence(&plus_state(), &Basis::computational(3)).is_err());
    }

    #[test]
    fn coherence_equals_sum_of_skew_informations() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let d = 3;
            let g = random_matrix(&mut rng, d);
            let m = &g * g.adjoint();
            let tr = m.trace().re;
            let rho = Operator::density(m.unscale(tr)).unwrap();
            let basis = Basis::from_columns(random_unitary(&mut rng, d)).unwrap();
            let mut independent = 0.0;
            for k in 0..d {
                let p = projector(&basis.vector(k));
                independent += skew_information(&rho, &p).unwrap();
            }
            assert_abs_diff_eq!(coherence(&rho, &basis).unwrap(), independent, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_state_coherence_is_one_minus_purity_of_populations() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..50 {
            let d = rng.gen_range(2..5);
            let psi = random_vector(&mut rng, d);
            let u = psi.unscale(psi.norm());
            let p2: f64 = u.iter().map(|z| z.norm_sqr().powi(2)).sum();
            let rho = projector(&psi);
            assert_abs_diff_eq!(
                coherence(&rho, &Basis::computational(d)).unwrap(),
                1.0 - p2,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn l1_coherence_examples() {
        let z = Basis::computational(2);
        assert_abs_diff_eq!(l1_coherence(&plus_state(), &z).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(l1_coherence(&Operator::maximally_mixed(2), &z).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..20 {
            let a = random_unit_bloch(&mut rng);
            let rho = bloch_state(a).unwrap();
            assert_abs_diff_eq!(
                l1_coherence(&rho, &z).unwrap(),
                (a[0] * a[0] + a[1] * a[1]).sqrt(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn basis_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(Basis::from_columns(bad).unwrap_err(), QslError::NotOrthonormal(_)));
        assert!(Basis::from_vectors(&[]).is_err());
    }

    #[test]
    fn witness_examples() {
        let z = Basis::computational(2);
        assert_eq!(witness_noncommutativity(&bloch_observable([1.0, 0.0, 0.0]), &z).unwrap(), 0.0);
        assert_eq!(witness_noncommutativity(&pauli_z(), &z).unwrap(), 0.0);
    }

    #[test]
    fn witness_qubit_relations() {
        let z = Basis::computational(2);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..100 {
            let a = random_unit_bloch(&mut rng);
            let op = bloch_observable(a);
            let n = witness_noncommutativity(&op, &z).unwrap();
            let transverse = (a[0] * a[0] + a[1] * a[1]).sqrt();
            assert_abs_diff_eq!(n, 2.0 * a[2].abs() * transverse, epsilon = 1e-12);
            let (rho_a, lambda) = observable_state(&op).unwrap();
            assert_abs_diff_eq!(lambda, 1.0, epsilon = 1e-12);
            let cl1 = l1_coherence(&rho_a, &z).unwrap();
            assert_abs_diff_eq!(n, 2.0 * a[2].abs() * cl1, epsilon = 1e-12);
        }
    }

    // Generated coherence of e^{-iεA}|0> at ε = π/2 equals N_A.
    #[test]
    fn generated_coherence_at_quarter_turn() {
        let z = Basis::computational(2);
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..20 {
            let a = random_unit_bloch(&mut rng);
            let op = bloch_observable(a);
            let u = crate::opalg::expm(&(op.matrix() * c(0.0, -std::f64::consts::FRAC_PI_2))).unwrap();
            let psi = u * CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
            let cl1 = l1_coherence(&projector(&psi), &z).unwrap();
            let expected = 2.0 * a[2].abs() * (a[0] * a[0] + a[1] * a[1]).sqrt();
            assert_abs_diff_eq!(cl1, expected, epsilon = 1e-10);
            assert_abs_diff_eq!(witness_noncommutativity(&op, &z).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn dim_inequality_diagonal_case() {
        let r = check_dim_inequality(&pauli_z(), &Basis::computational(2)).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn dim_inequality_rejects_non_involutory() {
        let a = bloch_observable([0.5, 0.0, 0.0]);
        assert!(matches!(
            check_dim_inequality(&a, &Basis::computational(2)).unwrap_err(),
            QslError::NotInvolutory(_)
        ));
    }

    // σx is involutory with vanishing [A, A_d], yet the right-hand side is 1.
    #[test]
    fn dim_inequality_fails_for_sigma_x() {
        let r = check_dim_inequality(&pauli_x(), &Basis::computational(2)).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-15);
        assert!(!r.holds);
        assert_abs_diff_eq!(r.state_coherence, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dim_inequality_column_ties_pick_lowest_index() {
        let a = bloch_observable([0.6, 0.0, 0.8]);
        let r = check_dim_inequality(&a, &Basis::computational(2)).unwrap();
        assert_eq!(r.column, 0);
    }

    #[test]
    fn state_coherence_matches_column_norm_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for _ in 0..20 {
            let u = random_unitary(&mut rng, 4);
            let signs = CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
            let m = &u * CMatrix::from_diagonal(&signs) * u.adjoint();
            let a = Operator::hermitian((&m + m.adjoint()) * c(0.5, 0.0)).unwrap();
            let r = check_dim_inequality(&a, &Basis::computational(4)).unwrap();
            assert_abs_diff_eq!(r.state_coherence + 1.0, r.norm_a * r.norm_a, epsilon = 1e-10);
        }
    }

    proptest! {
        #[test]
        fn quantumness_symmetric_and_unitarily_invariant(seed in any::<u64>(), d in 2usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, d);
            let b = random_hermitian(&mut rng, d);
            let q_ab = quantumness(&a, &b).unwrap();
            let q_ba = quantumness(&b, &a).unwrap();
            prop_assert!(q_ab >= 0.0);
            prop_assert!((q_ab - q_ba).abs() <= 1e-12 * (1.0 + q_ab));
            let u = random_unitary(&mut rng, d);
            let conj = |x: &Operator| Operator::general(&u * x.matrix() * u.adjoint()).unwrap();
            let q_rot = quantumness(&conj(&a), &conj(&b)).unwrap();
            prop_assert!((q_rot - q_ab).abs() <= 1e-10 * (1.0 + q_ab));
        }

        #[test]
        fn skew_information_ignores_identity_shift(seed in any::<u64>(), shift in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_matrix(&mut rng, 3);
            let m = &g * g.adjoint();
            let tr = m.trace().re;
            let rho = Operator::density(m.unscale(tr)).unwrap();
            let a = random_hermitian(&mut rng, 3);
            let shifted = Operator::hermitian(a.matrix() + CMatrix::identity(3, 3) * c(shift, 0.0)).unwrap();
            let i0 = skew_information(&rho, &a).unwrap();
            let i1 = skew_information(&rho, &shifted).unwrap();
            prop_assert!(i0 >= 0.0);
            prop_assert!((i0 - i1).abs() <= 1e-12 * (1.0 + shift.abs()).powi(2));
        }

        #[test]
        fn state_quantumness_vanishes_iff_commuting(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(&mut rng, 3);
            let diag = |rng: &mut ChaCha8Rng| {
                let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = w.iter().sum();
                CMatrix::from_diagonal(&CVector::from_iterator(3, w.iter().map(|x| c(x / s, 0.0))))
            };
            let rho = Operator::general(&u * diag(&mut rng) * u.adjoint()).unwrap();
            let sigma = Operator::general(&u * diag(&mut rng) * u.adjoint()).unwrap();
            prop_assert!(quantumness(&rho, &sigma).unwrap() <= 1e-24);
            let v = random_unitary(&mut rng, 3);
            let tau = Operator::general(&v * diag(&mut rng) * v.adjoint()).unwrap();
            prop_assert!(quantumness(&rho, &tau).unwrap() > 1e-12);
        }
    }
}
