//! Dephasing Liouvillians, their adjoints, and time propagation.

use statrs::function::gamma::gamma;

use crate::error::{QslError, Result};
use crate::opalg::{
    c, expm, hermiticity_deviation, hs_norm, kron, max_column_sum_norm, pauli_z, unvec_matrix,
    vec_matrix, CMatrix, CVector, Operator, OperatorKind, HERMITIAN_TOL,
};
use crate::quad::{self, Tolerance};

/// Tolerance used when integrating a time-dependent rate into `g(t)`.
pub const DEPHASING_FACTOR_TOL: Tolerance = Tolerance::new(1e-15, 1e-13);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSchedule {
    Constant { gamma: f64 },
    /// `γ_t = η (1+t²)^{-s/2} Γ(s) sin(s·atan t)`.
    OhmicFamily { s: f64, eta: f64 },
}

impl RateSchedule {
    pub fn constant(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(QslError::InvalidParameter(format!(
                "constant rate must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self::Constant { gamma })
    }

    pub fn ohmic(s: f64, eta: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(QslError::InvalidParameter(format!("ohmic exponent s must be > 0, got {s}")));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(QslError::InvalidParameter(format!("coupling eta must be > 0, got {eta}")));
        }
        Ok(Self::OhmicFamily { s, eta })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    /// Instantaneous rate `γ_t`.
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { gamma } => gamma,
            Self::OhmicFamily { s, eta } => ohmic_rate(s, eta, t),
        }
    }

    /// Dephasing factor `g(t) = ∫_0^t γ_u du`.
    pub fn dephasing_factor(&self, t: f64) -> Result<f64> {
        match *self {
            Self::Constant { gamma } => Ok(gamma * t),
            Self::OhmicFamily { s, eta } => {
                quad::integrate(|u| ohmic_rate(s, eta, u), 0.0, t, DEPHASING_FACTOR_TOL)
            }
        }
    }
}

pub(crate) fn ohmic_rate(s: f64, eta: f64, t: f64) -> f64 {
    eta * (1.0 + t * t).powf(-0.5 * s) * gamma(s) * (s * t.atan()).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

/// `L(x) = ∓i[H, x] + (γ_t/2)(J x J − ½{J², x})`, upper sign for the
/// Schrödinger picture.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    hamiltonian: Operator,
    jump: Operator,
    schedule: RateSchedule,
    picture: Picture,
}

fn require_hermitian(op: &Operator, what: &str) -> Result<()> {
    let deviation = op.hermiticity_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(QslError::InvalidParameter(format!(
            "{what} is not Hermitian (deviation {deviation:e})"
        )));
    }
    Ok(())
}

impl Generator {
    pub fn new(
        hamiltonian: Operator,
        jump: Operator,
        schedule: RateSchedule,
        picture: Picture,
    ) -> Result<Self> {
        require_hermitian(&hamiltonian, "Hamiltonian")?;
        require_hermitian(&jump, "jump operator")?;
        if hamiltonian.dim() != jump.dim() {
            return Err(QslError::DimensionMismatch {
                expected: hamiltonian.dim(),
                found: jump.dim(),
            });
        }
        Ok(Self {
            hamiltonian,
            jump,
            schedule,
            picture,
        })
    }

    /// Qubit generator with the default `σ_z` jump.
    pub fn dephasing(hamiltonian: Operator, schedule: RateSchedule, picture: Picture) -> Result<Self> {
        if hamiltonian.dim() != 2 {
            return Err(QslError::DimensionMismatch {
                expected: 2,
                found: hamiltonian.dim(),
            });
        }
        Self::new(hamiltonian, pauli_z(), schedule, picture)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jump(&self) -> &Operator {
        &self.jump
    }

    pub fn schedule(&self) -> RateSchedule {
        self.schedule
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn with_picture(&self, picture: Picture) -> Self {
        Self {
            picture,
            ..self.clone()
        }
    }

    fn hamiltonian_sign(&self) -> f64 {
        match self.picture {
            Picture::Schrodinger => -1.0,
            Picture::Heisenberg => 1.0,
        }
    }

    /// Hamiltonian part of the superoperator.
    pub fn unitary_part(&self) -> CMatrix {
        let h = self.hamiltonian.matrix();
        let id = CMatrix::identity(self.dim(), self.dim());
        (kron(&id, h) - kron(&h.transpose(), &id)) * c(0.0, self.hamiltonian_sign())
    }

    /// Dissipator superoperator at unit rate.
    pub fn dissipative_part(&self) -> CMatrix {
        let j = self.jump.matrix();
        let j2 = j * j;
        let id = CMatrix::identity(self.dim(), self.dim());
        let anti = (kron(&id, &j2) + kron(&j2.transpose(), &id)) * c(0.5, 0.0);
        (kron(&j.transpose(), j) - anti) * c(0.5, 0.0)
    }

    /// Whether the Hamiltonian and dissipative superoperators commute.
    pub fn parts_commute(&self) -> bool {
        let mh = self.unitary_part();
        let md = self.dissipative_part();
        let scale = 1.0 + hs_norm(&mh) * hs_norm(&md);
        hs_norm(&(&mh * &md - &md * &mh)) <= 1e-12 * scale
    }
}

pub fn apply_generator(g: &Generator, x: &Operator, t: f64) -> Result<Operator> {
    if x.dim() != g.dim() {
        return Err(QslError::DimensionMismatch {
            expected: g.dim(),
            found: x.dim(),
        });
    }
    let h = g.hamiltonian.matrix();
    let j = g.jump.matrix();
    let xm = x.matrix();
    let j2 = j * j;
    let unitary = (h * xm - xm * h) * c(0.0, g.hamiltonian_sign());
    let rate = g.schedule.rate(t);
    let dissipator = (j * xm * j - (&j2 * xm + xm * &j2) * c(0.5, 0.0)) * c(0.5 * rate, 0.0);
    Ok(Operator::with_kind_unchecked(unitary + dissipator, OperatorKind::General))
}

/// Matrix `M` with `vec(L_t(x)) = M vec(x)` in the column-stacking convention.
pub fn build_superoperator(g: &Generator, t: f64) -> CMatrix {
    g.unitary_part() + g.dissipative_part() * c(g.schedule.rate(t), 0.0)
}

/// Hilbert-Schmidt adjoint of a vectorized superoperator.
pub fn adjoint_superoperator(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(QslError::InvalidParameter(format!("t_max must be > 0, got {t_max}")));
        }
        if steps < 2 {
            return Err(QslError::InvalidParameter(format!("steps must be >= 2, got {steps}")));
        }
        Ok(Self { t_max, steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_max
        } else {
            self.t_max * k as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    /// One exponential `e^{Δt M}` reused at every step.
    ConstantExponential,
    /// `exp(t M_H + g(t) M_D)` evaluated afresh at every node.
    CommutingExact,
    /// Fixed-step classical Runge-Kutta.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagationWarning {
    /// `Δt·‖M‖` exceeded 1 (max-column-sum norm).
    CoarseStep { dt_norm: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<Operator>,
    pub picture: Picture,
    pub method: PropagationMethod,
    pub warnings: Vec<PropagationWarning>,
}

impl Trajectory {
    pub fn initial(&self) -> &Operator {
        &self.states[0]
    }

    pub fn last(&self) -> &Operator {
        &self.states[self.states.len() - 1]
    }
}

pub fn propagate(g: &Generator, x0: &Operator, grid: TimeGrid) -> Result<Trajectory> {
    if x0.dim() != g.dim() {
        return Err(QslError::DimensionMismatch {
            expected: g.dim(),
            found: x0.dim(),
        });
    }
    let kind = x0.kind();
    let dim = g.dim();
    let dt = grid.dt();
    let v0 = vec_matrix(x0.matrix());
    let mut vectors: Vec<CVector> = Vec::with_capacity(grid.len());
    vectors.push(v0.clone());
    let mh = g.unitary_part();
    let md = g.dissipative_part();
    let max_rate = grid
        .nodes()
        .iter()
        .map(|&t| g.schedule.rate(t).abs())
        .fold(0.0, f64::max);
    let norm_bound = max_column_sum_norm(&mh) + max_rate * max_column_sum_norm(&md);
    let mut warnings = Vec::new();
    if dt * norm_bound > 1.0 {
        warnings.push(PropagationWarning::CoarseStep {
            dt_norm: dt * norm_bound,
        });
    }

    let method = match g.schedule {
        RateSchedule::Constant { gamma } => {
            let step = expm(&((&mh + &md * c(gamma, 0.0)) * c(dt, 0.0)))?;
            let mut v = v0;
            for _ in 1..grid.len() {
                v = &step * v;
                vectors.push(v.clone());
            }
            PropagationMethod::ConstantExponential
        }
        RateSchedule::OhmicFamily { .. } if g.parts_commute() => {
            for k in 1..grid.len() {
                let t = grid.node(k);
                let gt = g.schedule.dephasing_factor(t)?;
                let prop = expm(&(&mh * c(t, 0.0) + &md * c(gt, 0.0)))?;
                vectors.push(prop * &v0);
            }
            PropagationMethod::CommutingExact
        }
        RateSchedule::OhmicFamily { .. } => {
            let at = |t: f64| &mh + &md * c(g.schedule.rate(t), 0.0);
            let mut v = v0;
            for k in 0..grid.steps() {
                let t = grid.node(k);
                let (m0, m1, m2) = (at(t), at(t + 0.5 * dt), at(t + dt));
                let half = c(0.5 * dt, 0.0);
                let k1 = &m0 * &v;
                let k2 = &m1 * (&v + &k1 * half);
                let k3 = &m1 * (&v + &k2 * half);
                let k4 = &m2 * (&v + &k3 * c(dt, 0.0));
                v = &v + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
                vectors.push(v.clone());
            }
            PropagationMethod::Rk4
        }
    };

    let mut states = Vec::with_capacity(vectors.len());
    states.push(x0.clone());
    for v in vectors.iter().skip(1) {
        let m = unvec_matrix(v, dim);
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QslError::NonFinite);
        }
        states.push(Operator::with_kind_unchecked(m, kind));
    }
    Ok(Trajectory {
        grid,
        states,
        picture: g.picture,
        method,
        warnings,
    })
}

/// Largest Hermiticity deviation over a trajectory.
pub fn max_hermiticity_deviation(traj: &Trajectory) -> f64 {
    traj.states
        .iter()
        .map(|s| hermiticity_deviation(s.matrix()))
        .fold(0.0, f64::max)
}
