//! Closed-form reference models for qubit dynamics.

use statrs::function::gamma::gamma;

use crate::dynamics::{ohmic_rate, Generator, Picture, RateSchedule, DEPHASING_FACTOR_TOL};
use crate::error::{QslError, Result};
use crate::measures::Basis;
use crate::opalg::{bloch_observable, bloch_state, c, pauli_x, projector, CMatrix, CVector, Operator};
use crate::quad::{self, Tolerance};

/// Ohmic exponents used for the default parameter sweeps.
pub const OHMIC_PRESETS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

const QUAD_TOL: Tolerance = Tolerance::new(1e-14, 1e-12);

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn combine(terms: &[(f64, [f64; 3])]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (w, v) in terms {
        for i in 0..3 {
            out[i] += w * v[i];
        }
    }
    out
}

fn check_unit(v: [f64; 3], name: &str) -> Result<()> {
    let norm = dot(v, v).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
        return Err(QslError::InvalidParameter(format!("{name} must be a unit vector, |{name}| = {norm}")));
    }
    Ok(())
}

/// Heisenberg evolution of `n̂·σ` under `H = m̂·σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryQubitModel {
    n_hat: [f64; 3],
    m_hat: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryClosedForms {
    pub a_t: CMatrix,
    pub q: f64,
    pub denom_norm: f64,
}

impl UnitaryQubitModel {
    pub fn new(n_hat: [f64; 3], m_hat: [f64; 3]) -> Result<Self> {
        check_unit(n_hat, "n_hat")?;
        check_unit(m_hat, "m_hat")?;
        Ok(Self { n_hat, m_hat })
    }

    /// `m̂ = x̂` and `n̂ = (cos θ, sin θ, 0)`.
    pub fn from_theta(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(QslError::InvalidParameter(format!("theta must be finite, got {theta}")));
        }
        Self::new([theta.cos(), theta.sin(), 0.0], [1.0, 0.0, 0.0])
    }

    pub fn n_hat(&self) -> [f64; 3] {
        self.n_hat
    }

    pub fn m_hat(&self) -> [f64; 3] {
        self.m_hat
    }

    pub fn theta(&self) -> f64 {
        dot(self.m_hat, self.n_hat).clamp(-1.0, 1.0).acos()
    }

    pub fn observable(&self) -> Operator {
        bloch_observable(self.n_hat)
    }

    pub fn hamiltonian(&self) -> Operator {
        bloch_observable(self.m_hat)
    }

    pub fn generator(&self) -> Generator {
        Generator::dephasing(self.hamiltonian(), RateSchedule::Constant { gamma: 0.0 }, Picture::Heisenberg)
            .expect("Bloch observables are Hermitian qubit operators")
    }

    /// Bloch vector of `A_t`.
    pub fn bloch_at(&self, t: f64) -> [f64; 3] {
        let cos_theta = dot(self.m_hat, self.n_hat);
        let mxn = cross(self.m_hat, self.n_hat);
        let s = t.sin();
        combine(&[
            ((2.0 * t).cos(), self.n_hat),
            (-(2.0 * t).sin(), mxn),
            (2.0 * cos_theta * s * s, self.m_hat),
        ])
    }

    /// `sin²2t sin²θ + sin⁴t sin²2θ`; the quantumness is 16 times this.
    fn shape(&self, t: f64) -> f64 {
        let theta = self.theta();
        let (s2, st) = ((2.0 * t).sin(), t.sin());
        s2 * s2 * theta.sin().powi(2) + st.powi(4) * (2.0 * theta).sin().powi(2)
    }

    /// `sin θ √(cos²2t + cos²θ sin²2t)`; the denominator norm is `4√2` times this.
    fn speed(&self, t: f64) -> f64 {
        let theta = self.theta();
        let (c2, s2) = ((2.0 * t).cos(), (2.0 * t).sin());
        theta.sin() * (c2 * c2 + theta.cos().powi(2) * s2 * s2).sqrt()
    }

    pub fn closed_forms(&self, t: f64) -> UnitaryClosedForms {
        UnitaryClosedForms {
            a_t: bloch_observable(self.bloch_at(t)).into_matrix(),
            q: 16.0 * self.shape(t),
            denom_norm: 4.0 * std::f64::consts::SQRT_2 * self.speed(t),
        }
    }

    /// The quantumness and denominator under the nominal half-weight normalization,
    /// kept for comparison with [`Self::closed_forms`].
    pub fn nominal_forms(&self, t: f64) -> (f64, f64) {
        let theta = self.theta();
        let (c2, s2) = ((2.0 * t).cos(), (2.0 * t).sin());
        let q = 8.0 * (s2 * s2 * theta.sin().powi(2) + t.sin().powi(4) * (2.0 * theta).sin().powi(2));
        let denom = 4.0 * (2.0 * (c2 * c2 + s2 * s2 * theta.cos().powi(2) * theta.sin().powi(2))).sqrt();
        (q, denom)
    }

    /// `T_Q(T) = √S(T) / (2 <<sin θ √(cos²2t + cos²θ sin²2t)>>_T)`.
    pub fn t_q(&self, t_end: f64) -> Result<f64> {
        let numerator = self.shape(t_end).sqrt();
        if numerator == 0.0 {
            return Ok(0.0);
        }
        let breaks: Vec<f64> = (1..)
            .map(|k| k as f64 * std::f64::consts::FRAC_PI_4)
            .take_while(|&b| b < t_end)
            .collect();
        let integral = quad::integrate_with_breaks(|t| self.speed(t), 0.0, t_end, &breaks, QUAD_TOL)?;
        Ok(numerator * t_end / (2.0 * integral))
    }
}

/// Observable, quantumness and denominator norm for `A_0 = σ_y`, `H = σ_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovClosedForms {
    pub a_t: CMatrix,
    pub q: f64,
    pub denom_norm: f64,
}

fn check_markov_gamma(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(QslError::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
    }
    if gamma >= 2.0 {
        return Err(QslError::InvalidParameter(format!(
            "gamma = {gamma} is outside the underdamped regime (gamma < 2)"
        )));
    }
    Ok(())
}

/// Heisenberg generator with `H = σ_x` and constant dephasing `γ`.
pub fn markov_generator(gamma: f64) -> Result<Generator> {
    Generator::dephasing(pauli_x(), RateSchedule::constant(gamma)?, Picture::Heisenberg)
}

fn y_z_observable(y: f64, z: f64) -> CMatrix {
    bloch_observable([0.0, y, z]).into_matrix()
}

/// Nominal first-order forms for the weakly dephased model:
/// `A_t = e^{-γt/2}[−sin 2t σ_z + (cos 2t − (γ/4) sin 2t) σ_y]`,
/// `Q = 16 e^{-γt} sin²2t`, norm `2√2 e^{-γt} |(γ/2) sin 2t − 2 cos 2t|`.
pub fn markov_dephasing_closed_forms(gamma: f64, t: f64) -> Result<MarkovClosedForms> {
    check_markov_gamma(gamma)?;
    let (s2, c2) = ((2.0 * t).sin(), (2.0 * t).cos());
    let half = (-0.5 * gamma * t).exp();
    Ok(MarkovClosedForms {
        a_t: y_z_observable(half * (c2 - 0.25 * gamma * s2), -half * s2),
        q: 16.0 * (-gamma * t).exp() * s2 * s2,
        denom_norm: 2.0 * std::f64::consts::SQRT_2 * (-gamma * t).exp() * (0.5 * gamma * s2 - 2.0 * c2).abs(),
    })
}

/// Exact underdamped solution `y = e^{-γt/2}(cos ωt − γ/(2ω) sin ωt)`,
/// `z = −(2/ω) e^{-γt/2} sin ωt` with `ω = √(4 − γ²/4)`.
pub fn markov_dephasing_exact(gamma: f64, t: f64) -> Result<MarkovClosedForms> {
    check_markov_gamma(gamma)?;
    let omega = (4.0 - 0.25 * gamma * gamma).sqrt();
    let decay = (-0.5 * gamma * t).exp();
    let (sw, cw) = ((omega * t).sin(), (omega * t).cos());
    let y = decay * (cw - gamma / (2.0 * omega) * sw);
    let z = -2.0 / omega * decay * sw;
    Ok(MarkovClosedForms {
        a_t: y_z_observable(y, z),
        q: 16.0 * z * z,
        denom_norm: 4.0 * std::f64::consts::SQRT_2 * y.abs(),
    })
}

/// Pure dephasing of the observable `a·σ` with an ohmic-family rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureDephasingModel {
    a: [f64; 3],
    s: f64,
    eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureDephasingClosedForms {
    pub gamma_t: f64,
    pub g: f64,
    pub a_t: CMatrix,
    pub q: f64,
    pub denom_norm: f64,
}

impl PureDephasingModel {
    pub fn new(a: [f64; 3], s: f64, eta: f64) -> Result<Self> {
        RateSchedule::ohmic(s, eta)?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(QslError::InvalidParameter("Bloch components must be finite".into()));
        }
        Ok(Self { a, s, eta })
    }

    pub fn a(&self) -> [f64; 3] {
        self.a
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn schedule(&self) -> RateSchedule {
        RateSchedule::OhmicFamily { s: self.s, eta: self.eta }
    }

    pub fn observable(&self) -> Operator {
        bloch_observable(self.a)
    }

    pub fn generator(&self) -> Generator {
        Generator::dephasing(Operator::zeros(2), self.schedule(), Picture::Heisenberg)
            .expect("zero Hamiltonian is a valid qubit Hamiltonian")
    }

    /// True when `a₃ = 0` or `a₁ = a₂ = 0`, so the quantumness stays zero.
    pub fn is_degenerate(&self) -> bool {
        self.a[2] == 0.0 || (self.a[0] == 0.0 && self.a[1] == 0.0)
    }

    /// Largest `T` with `γ_t ≥ 0` on `[0, T]` (infinite for `s ≤ 2`).
    pub fn nonnegative_rate_horizon(&self) -> f64 {
        if self.s <= 2.0 {
            f64::INFINITY
        } else {
            (std::f64::consts::PI / self.s).tan()
        }
    }

    fn amplitude(&self) -> f64 {
        self.a[2].abs() * (self.a[0] * self.a[0] + self.a[1] * self.a[1]).sqrt()
    }

    pub fn closed_forms(&self, t: f64) -> Result<PureDephasingClosedForms> {
        let gamma_t = ohmic_rate(self.s, self.eta, t);
        let g = self.schedule().dephasing_factor(t)?;
        let decay = (-g).exp();
        let a_t = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(self.a[2], 0.0),
                c(self.a[0], -self.a[1]) * decay,
                c(self.a[0], self.a[1]) * decay,
                c(-self.a[2], 0.0),
            ],
        );
        let growth = -(-g).exp_m1();
        let amp = self.amplitude();
        Ok(PureDephasingClosedForms {
            gamma_t,
            g,
            a_t,
            q: 16.0 * growth * growth * amp * amp,
            denom_norm: 2.0 * std::f64::consts::SQRT_2 * decay * gamma_t.abs() * amp,
        })
    }

    /// `T_Q(T) = (1 − e^{−g(T)}) / ((1/T) ∫_0^T |γ_t| e^{−g(t)} dt)`.
    pub fn t_q(&self, t_end: f64) -> Result<f64> {
        if self.is_degenerate() {
            return Ok(0.0);
        }
        let sched = self.schedule();
        let numerator = -(-sched.dephasing_factor(t_end)?).exp_m1();
        if numerator == 0.0 {
            return Ok(0.0);
        }
        let integrand = |t: f64| match sched.dephasing_factor(t) {
            Ok(g) => ohmic_rate(self.s, self.eta, t).abs() * (-g).exp(),
            Err(_) => f64::NAN,
        };
        let horizon = self.nonnegative_rate_horizon();
        let integral = quad::integrate_with_breaks(integrand, 0.0, t_end, &[horizon], QUAD_TOL)?;
        Ok(numerator * t_end / integral)
    }
}

/// `g(t) = η [1 − cos((s−1) atan t) / (1+t²)^{(s−1)/2}] Γ(s−1)` for `s > 1`,
/// `(η/2) ln(1+t²)` for `s = 1`, `None` otherwise.
pub fn g_closed_form(s: f64, eta: f64, t: f64) -> Option<f64> {
    if s == 1.0 {
        Some(0.5 * eta * (t * t).ln_1p())
    } else if s > 1.0 {
        let p = s - 1.0;
        Some(eta * (1.0 - (p * t.atan()).cos() * (1.0 + t * t).powf(-0.5 * p)) * gamma(p))
    } else {
        None
    }
}

/// Zero-temperature integral `∫_0^∞ J(ω)(1 − cos ωt)/ω² dω` for the spectrum
/// `J(ω) = η ω^s ω_c^{1−s} e^{−ω/ω_c}`.
pub fn dephasing_factor_from_spectral_density(s: f64, eta: f64, omega_c: f64, t: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(QslError::Quadrature(format!(
            "spectral integral diverges at the origin for s = {s}"
        )));
    }
    if !(eta.is_finite() && eta > 0.0) || !(omega_c.is_finite() && omega_c > 0.0) {
        return Err(QslError::InvalidParameter(format!(
            "eta and omega_c must be > 0, got {eta} and {omega_c}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let kernel = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        let half = (0.5 * w * t).sin();
        eta * w.powf(s - 2.0) * omega_c.powf(1.0 - s) * (-w / omega_c).exp() * 2.0 * half * half
    };
    let upper = omega_c * (80.0 + 10.0 * s);
    let breaks: Vec<f64> = (1..64).map(|k| k as f64 * upper / 64.0).collect();
    quad::integrate_with_breaks(kernel, 0.0, upper, &breaks, Tolerance::new(1e-14, 1e-12))
}

/// Quadrature tolerance used for the dephasing factor.
pub fn dephasing_factor_tolerance() -> Tolerance {
    DEPHASING_FACTOR_TOL
}

/// Coherence generated from `|0>` under `H = σ_x` with constant dephasing,
/// measured in the `σ_z` eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceGenerationModel {
    gamma: f64,
}

impl CoherenceGenerationModel {
    pub fn new(gamma: f64) -> Result<Self> {
        check_markov_gamma(gamma)?;
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn generator(&self) -> Generator {
        Generator::dephasing(pauli_x(), RateSchedule::Constant { gamma: self.gamma }, Picture::Schrodinger)
            .expect("σx is a valid qubit Hamiltonian")
    }

    pub fn initial_state(&self) -> Operator {
        projector(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]))
    }

    pub fn basis(&self) -> Basis {
        Basis::computational(2)
    }

    /// Exact Bloch vector `(0, r_y, r_z)` of `ρ_t`.
    pub fn exact_bloch(&self, t: f64) -> [f64; 3] {
        let omega = (4.0 - 0.25 * self.gamma * self.gamma).sqrt();
        let decay = (-0.5 * self.gamma * t).exp();
        let (sw, cw) = ((omega * t).sin(), (omega * t).cos());
        [
            0.0,
            -2.0 / omega * decay * sw,
            decay * (cw + self.gamma / (2.0 * omega) * sw),
        ]
    }

    pub fn exact_state(&self, t: f64) -> Result<Operator> {
        bloch_state(self.exact_bloch(t))
    }

    /// `|r_y|`, the l1 coherence of the exact state.
    pub fn exact_l1_coherence(&self, t: f64) -> f64 {
        self.exact_bloch(t)[1].abs()
    }

    /// The nominal first-order state (both diagonal entries shifted by the
    /// same amount, so the trace is not one for `t > 0`).
    pub fn nominal_state(&self, t: f64) -> CMatrix {
        let decay = (-0.5 * self.gamma * t).exp();
        let (s2, c2) = ((2.0 * t).sin(), (2.0 * t).cos());
        let diag = decay * (0.5 * c2 + 0.125 * self.gamma * s2);
        let off = c(0.0, 0.5 * decay * s2);
        CMatrix::from_row_slice(2, 2, &[c(0.5 + diag, 0.0), off, off.conj(), c(0.5 + diag, 0.0)])
    }

    /// First-order state with the sign of the lower diagonal entry corrected.
    pub fn first_order_state(&self, t: f64) -> CMatrix {
        let mut m = self.nominal_state(t);
        m[(1, 1)] = c(1.0, 0.0) - m[(0, 0)];
        m
    }

    /// `|sin 2t| e^{-γt/2}`.
    pub fn nominal_coherence(&self, t: f64) -> f64 {
        (2.0 * t).sin().abs() * (-0.5 * self.gamma * t).exp()
    }

    /// `2 e^{-γt/2} (½ + ½ cos 4t − (γ/4) sin 4t) / |sin 2t|`.
    pub fn nominal_integrand(&self, t: f64) -> f64 {
        let (s4, c4) = ((4.0 * t).sin(), (4.0 * t).cos());
        2.0 * (-0.5 * self.gamma * t).exp() * (0.5 + 0.5 * c4 - 0.25 * self.gamma * s4) / (2.0 * t).sin().abs()
    }
}
