//! Speed-limit lower bounds evaluated on discretized trajectories.
//!
//! Every bound has the shape `T_QSL = numerator / (factor · <<X_t>>_T)`. The
//! time average is taken with a positive-weight fourth-order rule at every
//! grid endpoint: composite Simpson for an even number of intervals, Simpson
//! plus a closing 3/8 panel for an odd number, and Simpson with an extra
//! midpoint sample on the first interval.

use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_generator, propagate, Generator, Picture, PropagationWarning, TimeGrid, Trajectory};
use crate::error::{QslError, Result};
use crate::measures::{coherence_from_root, l1_coherence, Basis};
use crate::opalg::{
    c, clamp_psd_spectrum, commutator_matrix, eigh, hs_norm, hs_norm_sqr, is_diagonal, sqrtm_psd,
    CMatrix, Operator, OperatorKind,
};

/// Pairs with `√λ_i + √λ_j` below this are treated as singular.
pub const SINGULAR_PAIR_TOL: f64 = 1e-8;
/// Weight of `I/d` mixed into rank-deficient states before differentiating `√ρ`.
pub const REGULARIZATION_EPS: f64 = 1e-9;
/// Relative slack in the instantaneous coherence-rate check.
pub const RATE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Quantumness,
    QuantumnessReference,
    SkewInformation,
    Coherence,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Quantumness => "quantumness",
            Self::QuantumnessReference => "quantumness_reference",
            Self::SkewInformation => "skew_information",
            Self::Coherence => "coherence",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "quantumness" => Some(Self::Quantumness),
            "quantumness_reference" => Some(Self::QuantumnessReference),
            "skew_information" => Some(Self::SkewInformation),
            "coherence" => Some(Self::Coherence),
            _ => None,
        }
    }
}

/// Denominator constant of the quantumness bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// `√2`.
    #[default]
    Tight,
    /// `2`.
    Weak,
}

impl Prefactor {
    pub fn value(&self) -> f64 {
        match self {
            Self::Tight => std::f64::consts::SQRT_2,
            Self::Weak => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub tolerance: f64,
    pub prefactor: Prefactor,
    pub regularize: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            prefactor: Prefactor::Tight,
            regularize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    /// Zero denominator with a nonzero numerator.
    InfiniteBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: f64,
    pub measure_value: f64,
    pub numerator: f64,
    /// `factor · <<X_t>>_T`.
    pub denominator: f64,
    pub t_qsl: f64,
    pub ratio: f64,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<RowFlag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secondary_measure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCheck {
    pub node: usize,
    pub t: f64,
    pub rate: f64,
    pub limit: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_kind: BoundKind,
    pub prefactor: Prefactor,
    pub denominator_factor: f64,
    pub tolerance: f64,
    pub all_valid: bool,
    pub rows: Vec<BoundRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rate_checks: Vec<RateCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn max_saturation_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.ratio - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn rates_hold(&self) -> bool {
        self.rate_checks.iter().all(|r| r.holds)
    }
}

fn integrate_uniform(samples: &[f64]) -> f64 {
    let m = samples.len() - 1;
    match m {
        0 => 0.0,
        1 => 0.5 * (samples[0] + samples[1]),
        _ if m % 2 == 0 => simpson(samples),
        _ => simpson(&samples[..=m - 3]) + three_eighths(&samples[m - 3..]),
    }
}

fn simpson(f: &[f64]) -> f64 {
    if f.len() < 3 {
        return 0.0;
    }
    let m = f.len() - 1;
    let mut sum = f[0] + f[m];
    for (i, v) in f.iter().enumerate().take(m).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    sum / 3.0
}

fn three_eighths(f: &[f64]) -> f64 {
    0.375 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3])
}

/// `(1/T) ∫_0^T X_t dt` from samples on a uniform grid.
pub fn time_average(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(QslError::TooFewSamples {
            required: 2,
            found: samples.len(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(QslError::NonFinite);
    }
    Ok(integrate_uniform(samples) / (samples.len() - 1) as f64)
}

/// `∫_0^{t_k} X dt` for every node, using `first_mid` at `h/2` on the first
/// interval.
pub fn cumulative_integrals(samples: &[f64], h: f64, first_mid: f64) -> Vec<f64> {
    let n = samples.len();
    let mut out = vec![0.0; n];
    for k in 1..n {
        out[k] = match k {
            1 => h / 6.0 * (samples[0] + 4.0 * first_mid + samples[1]),
            _ if k % 2 == 0 => out[k - 2] + h / 3.0 * (samples[k - 2] + 4.0 * samples[k - 1] + samples[k]),
            _ => out[k - 3] + h * three_eighths(&samples[k - 3..=k]),
        };
    }
    out
}

struct Series {
    measure: Vec<f64>,
    numerator: Vec<f64>,
    integrand: Vec<f64>,
    integrand_mid: f64,
    secondary: Option<Vec<f64>>,
}

fn assemble(
    kind: BoundKind,
    grid: TimeGrid,
    series: Series,
    prefactor: Prefactor,
    factor: f64,
    opts: &BoundOptions,
    mut notes: Vec<String>,
    warnings: &[PropagationWarning],
) -> Result<BoundReport> {
    if !(opts.tolerance.is_finite() && opts.tolerance > -1.0) {
        return Err(QslError::InvalidParameter(format!(
            "tolerance must be finite and > -1, got {}",
            opts.tolerance
        )));
    }
    if series.integrand.iter().any(|v| !v.is_finite()) || !series.integrand_mid.is_finite() {
        return Err(QslError::NonFinite);
    }
    for w in warnings {
        let PropagationWarning::CoarseStep { dt_norm } = w;
        notes.push(format!("coarse propagation step: dt*|M| = {dt_norm}"));
    }
    let integrals = cumulative_integrals(&series.integrand, grid.dt(), series.integrand_mid);
    let mut rows = Vec::with_capacity(grid.steps());
    for k in 1..grid.len() {
        let t = grid.node(k);
        let numerator = series.numerator[k];
        let denominator = factor * integrals[k] / t;
        let (t_qsl, flag) = if numerator == 0.0 {
            (0.0, None)
        } else if denominator == 0.0 {
            (f64::INFINITY, Some(RowFlag::InfiniteBound))
        } else {
            (numerator / denominator, None)
        };
        let valid = t_qsl <= t * (1.0 + opts.tolerance);
        rows.push(BoundRow {
            t,
            measure_value: series.measure[k],
            numerator,
            denominator,
            t_qsl,
            ratio: t_qsl / t,
            valid,
            flag,
            secondary_measure: series.secondary.as_ref().map(|s| s[k]),
        });
    }
    Ok(BoundReport {
        bound_kind: kind,
        prefactor,
        denominator_factor: factor,
        tolerance: opts.tolerance,
        all_valid: rows.iter().all(|r| r.valid),
        rows,
        rate_checks: Vec::new(),
        notes,
    })
}

fn check_picture(traj: &Trajectory, gen: &Generator) -> Result<()> {
    if traj.picture != gen.picture() {
        return Err(QslError::InvalidParameter(format!(
            "trajectory picture {:?} differs from generator picture {:?}",
            traj.picture,
            gen.picture()
        )));
    }
    Ok(())
}

fn check_dim(a: &Operator, gen: &Generator) -> Result<()> {
    if a.dim() != gen.dim() {
        return Err(QslError::DimensionMismatch {
            expected: gen.dim(),
            found: a.dim(),
        });
    }
    Ok(())
}

/// State at `h/2`, propagated from the initial condition.
fn midpoint_state(traj: &Trajectory, gen: &Generator) -> Result<Operator> {
    let grid = TimeGrid::new(traj.grid.node(1), 2)?;
    let mid = propagate(gen, traj.initial(), grid)?;
    Ok(mid.states[1].clone())
}

/// `‖[B, L(X_t)]‖_HS` along a trajectory and at the first midpoint.
fn generator_commutator_norms(
    b: &CMatrix,
    traj: &Trajectory,
    gen: &Generator,
) -> Result<(Vec<f64>, f64)> {
    let mut samples = Vec::with_capacity(traj.states.len());
    for (k, x) in traj.states.iter().enumerate() {
        let lx = apply_generator(gen, x, traj.grid.node(k))?;
        samples.push(hs_norm(&commutator_matrix(b, lx.matrix())));
    }
    let mid = midpoint_state(traj, gen)?;
    let lmid = apply_generator(gen, &mid, 0.5 * traj.grid.node(1))?;
    Ok((samples, hs_norm(&commutator_matrix(b, lmid.matrix()))))
}

fn sqrt_quantumness(a: &CMatrix, b: &CMatrix) -> f64 {
    (2.0 * hs_norm_sqr(&commutator_matrix(a, b))).sqrt()
}

/// `T_Q = √Q(A_0, A_T) / (√2 <<‖[A_0, L(A_t)]‖_HS>>_T)`.
///
/// `gen` must be the generator that produced `traj`; with a Schrödinger
/// trajectory of states this is the state-quantumness variant.
pub fn bound_quantumness(
    a0: &Operator,
    traj: &Trajectory,
    gen: &Generator,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    check_picture(traj, gen)?;
    check_dim(a0, gen)?;
    let a = a0.matrix();
    let measure: Vec<f64> = traj
        .states
        .iter()
        .map(|x| 2.0 * hs_norm_sqr(&commutator_matrix(a, x.matrix())))
        .collect();
    let numerator = measure.iter().map(|q| q.sqrt()).collect();
    let (integrand, integrand_mid) = generator_commutator_norms(a, traj, gen)?;
    assemble(
        BoundKind::Quantumness,
        traj.grid,
        Series {
            measure,
            numerator,
            integrand,
            integrand_mid,
            secondary: None,
        },
        opts.prefactor,
        opts.prefactor.value(),
        opts,
        Vec::new(),
        &traj.warnings,
    )
}

/// `T_Q = |√Q(B_0, A_0) − √Q(B_0, A_T)| / (√2 <<‖[B_0, L(A_t)]‖_HS>>_T)`.
pub fn bound_quantumness_reference(
    b0: &Operator,
    traj: &Trajectory,
    gen: &Generator,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    check_picture(traj, gen)?;
    check_dim(b0, gen)?;
    let b = b0.matrix();
    let measure: Vec<f64> = traj
        .states
        .iter()
        .map(|x| 2.0 * hs_norm_sqr(&commutator_matrix(b, x.matrix())))
        .collect();
    let root0 = sqrt_quantumness(b, traj.initial().matrix());
    let numerator = traj
        .states
        .iter()
        .map(|x| (root0 - sqrt_quantumness(b, x.matrix())).abs())
        .collect();
    let (integrand, integrand_mid) = generator_commutator_norms(b, traj, gen)?;
    assemble(
        BoundKind::QuantumnessReference,
        traj.grid,
        Series {
            measure,
            numerator,
            integrand,
            integrand_mid,
            secondary: None,
        },
        opts.prefactor,
        opts.prefactor.value(),
        opts,
        Vec::new(),
        &traj.warnings,
    )
}

/// `T_Q = √2 |√I(ρ, A_T) − √I(ρ, A_0)| / <<‖[√ρ, L†(A_t)]‖_HS>>_T` for a
/// Heisenberg trajectory of observables.
pub fn bound_skew_information(
    rho: &Operator,
    traj: &Trajectory,
    gen: &Generator,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    check_picture(traj, gen)?;
    check_dim(rho, gen)?;
    if gen.picture() != Picture::Heisenberg {
        return Err(QslError::InvalidParameter(
            "skew-information bound needs a Heisenberg trajectory".into(),
        ));
    }
    if rho.kind() != OperatorKind::Density {
        Operator::density(rho.matrix().clone())?;
    }
    let root = sqrtm_psd(rho)?.into_matrix();
    let measure: Vec<f64> = traj
        .states
        .iter()
        .map(|x| 0.5 * hs_norm_sqr(&commutator_matrix(&root, x.matrix())))
        .collect();
    let root_i0 = measure[0].sqrt();
    let numerator = measure
        .iter()
        .map(|i| std::f64::consts::SQRT_2 * (i.sqrt() - root_i0).abs())
        .collect();
    let (integrand, integrand_mid) = generator_commutator_norms(&root, traj, gen)?;
    let mut notes = Vec::new();
    if opts.prefactor == Prefactor::Weak {
        notes.push("weak prefactor applies to quantumness bounds only".into());
    }
    assemble(
        BoundKind::SkewInformation,
        traj.grid,
        Series {
            measure,
            numerator,
            integrand,
            integrand_mid,
            secondary: None,
        },
        Prefactor::Tight,
        1.0,
        opts,
        notes,
        &traj.warnings,
    )
}

/// Hermitian `X` with `X√ρ + √ρX = dρ`.
pub fn sqrtm_derivative(rho: &Operator, drho: &Operator) -> Result<Operator> {
    if rho.dim() != drho.dim() {
        return Err(QslError::DimensionMismatch {
            expected: rho.dim(),
            found: drho.dim(),
        });
    }
    let n = rho.dim();
    let (mut values, vectors) = if is_diagonal(rho.matrix()) {
        let diag = (0..n).map(|i| rho.matrix()[(i, i)].re).collect();
        (diag, CMatrix::identity(n, n))
    } else {
        eigh(rho.matrix())
    };
    clamp_psd_spectrum(&mut values)?;
    let roots: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    let d = vectors.adjoint() * drho.matrix() * &vectors;
    let mut x = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let entry = d[(i, j)];
            if entry.norm() <= SINGULAR_PAIR_TOL {
                continue;
            }
            let denom = roots[i] + roots[j];
            if denom < SINGULAR_PAIR_TOL {
                return Err(QslError::SingularPair { i, j });
            }
            x[(i, j)] = entry / denom;
        }
    }
    let out = &vectors * x * vectors.adjoint();
    let herm = (&out + out.adjoint()) * c(0.5, 0.0);
    Ok(Operator::with_kind_unchecked(herm, OperatorKind::Hermitian))
}

fn regularized(rho: &Operator, drho: &Operator) -> (Operator, Operator) {
    let n = rho.dim();
    let keep = c(1.0 - REGULARIZATION_EPS, 0.0);
    let mix = CMatrix::identity(n, n) * c(REGULARIZATION_EPS / n as f64, 0.0);
    (
        Operator::with_kind_unchecked(rho.matrix() * keep + mix, OperatorKind::Density),
        Operator::with_kind_unchecked(drho.matrix() * keep, OperatorKind::General),
    )
}

/// `√(Σ_k ‖[∂_t√ρ, P_k]‖²)` at one state.
fn coherence_speed(
    rho: &Operator,
    t: f64,
    gen: &Generator,
    projectors: &[CMatrix],
    regularize: bool,
    label: &str,
    notes: &mut Vec<String>,
) -> Result<std::result::Result<f64, (usize, usize)>> {
    let drho = apply_generator(gen, rho, t)?;
    let x = match sqrtm_derivative(rho, &drho) {
        Ok(x) => x,
        Err(QslError::SingularPair { i, j }) => {
            if !regularize {
                return Ok(Err((i, j)));
            }
            let (r, dr) = regularized(rho, &drho);
            notes.push(format!(
                "{label}: rank-deficient state mixed with identity (eps = {REGULARIZATION_EPS:e})"
            ));
            sqrtm_derivative(&r, &dr)?
        }
        Err(e) => return Err(e),
    };
    let sum: f64 = projectors
        .iter()
        .map(|p| hs_norm_sqr(&commutator_matrix(x.matrix(), p)))
        .sum();
    Ok(Ok(sum.sqrt()))
}

fn derivative_at(values: &[f64], k: usize, h: f64) -> f64 {
    let n = values.len() - 1;
    let f = |i: usize| values[i];
    if n >= 4 {
        if k >= 2 && k + 2 <= n {
            (-f(k + 2) + 8.0 * f(k + 1) - 8.0 * f(k - 1) + f(k - 2)) / (12.0 * h)
        } else if k < 2 {
            (-3.0 * f(k - 1) - 10.0 * f(k) + 18.0 * f(k + 1) - 6.0 * f(k + 2) + f(k + 3)) / (12.0 * h)
        } else {
            (3.0 * f(k + 1) + 10.0 * f(k) - 18.0 * f(k - 1) + 6.0 * f(k - 2) - f(k - 3)) / (12.0 * h)
        }
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// `T_C = √2 |√C(ρ_0) − √C(ρ_T)| / <<√(Σ_k ‖[∂_t√ρ_t, |k><k|]‖²_HS)>>_T` for a
/// Schrödinger trajectory, together with the instantaneous rate check
/// `|dC/dt| ≤ √2 √(Σ_k ‖[∂_t√ρ_t, |k><k|]‖²) √C` at interior nodes.
pub fn bound_coherence(
    traj: &Trajectory,
    gen: &Generator,
    basis: &Basis,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    check_picture(traj, gen)?;
    if gen.picture() != Picture::Schrodinger {
        return Err(QslError::InvalidParameter(
            "coherence bound needs a Schrödinger trajectory".into(),
        ));
    }
    check_dim(traj.initial(), gen)?;
    if basis.dim() != gen.dim() {
        return Err(QslError::DimensionMismatch {
            expected: gen.dim(),
            found: basis.dim(),
        });
    }
    let projectors = basis.projectors();
    let grid = traj.grid;
    let mut notes = Vec::new();

    let mut measure = Vec::with_capacity(grid.len());
    let mut secondary = Vec::with_capacity(grid.len());
    for x in &traj.states {
        let root = sqrtm_psd(x)?;
        measure.push(coherence_from_root(root.matrix(), basis));
        secondary.push(l1_coherence(x, basis)?);
    }
    let root_c0 = measure[0].sqrt();
    let numerator = measure
        .iter()
        .map(|v| std::f64::consts::SQRT_2 * (root_c0 - v.sqrt()).abs())
        .collect();

    let mut integrand = vec![0.0; grid.len()];
    let mut node0_singular = false;
    for (k, x) in traj.states.iter().enumerate() {
        let label = format!("node {k}");
        // The initial node may be pure; it falls back to the neighbouring value.
        let regularize = opts.regularize && k > 0;
        match coherence_speed(x, grid.node(k), gen, &projectors, regularize, &label, &mut notes)? {
            Ok(v) => integrand[k] = v,
            Err(_) if k == 0 => node0_singular = true,
            Err((i, j)) => return Err(QslError::SingularPairAtNode { node: k, i, j }),
        }
    }
    if node0_singular {
        integrand[0] = integrand[1];
        notes.push("node 0: singular square-root derivative, one-sided value from node 1".into());
    }
    let mid = midpoint_state(traj, gen)?;
    let integrand_mid = match coherence_speed(
        &mid,
        0.5 * grid.node(1),
        gen,
        &projectors,
        opts.regularize,
        "first midpoint",
        &mut notes,
    )? {
        Ok(v) => v,
        Err((i, j)) => return Err(QslError::SingularPairAtNode { node: 0, i, j }),
    };

    let mut rate_checks = Vec::new();
    let h = grid.dt();
    for k in 1..grid.steps() {
        let rate = derivative_at(&measure, k, h);
        let limit = std::f64::consts::SQRT_2 * integrand[k] * measure[k].sqrt();
        rate_checks.push(RateCheck {
            node: k,
            t: grid.node(k),
            rate,
            limit,
            holds: rate.abs() <= limit + RATE_SLACK * (1.0 + rate.abs()),
        });
    }

    let mut notes_all = notes;
    if opts.prefactor == Prefactor::Weak {
        notes_all.push("weak prefactor applies to quantumness bounds only".into());
    }
    let mut report = assemble(
        BoundKind::Coherence,
        grid,
        Series {
            measure,
            numerator,
            integrand,
            integrand_mid,
            secondary: Some(secondary),
        },
        Prefactor::Tight,
        1.0,
        opts,
        notes_all,
        &traj.warnings,
    )?;
    report.rate_checks = rate_checks;
    Ok(report)
}
