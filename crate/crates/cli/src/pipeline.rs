use qslq_core::models::{
    markov_dephasing_closed_forms, markov_generator, CoherenceGenerationModel, PureDephasingModel,
    UnitaryQubitModel,
};
use qslq_core::opalg::pauli_y;
use qslq_core::{
    bound_coherence, bound_quantumness, bound_quantumness_reference, bound_skew_information, coherence,
    l1_coherence, propagate, quantumness, Basis, BoundKind, BoundOptions, BoundReport, Generator, Operator,
    Picture, QslError, RateSchedule, TimeGrid, Trajectory,
};
use serde::Serialize;

use crate::config::{MatrixSpec, ModelKind, PictureName, RunConfig};
use crate::CliError;

/// Tolerance on `|T_Q/T − 1|` for saturation checks.
pub const SATURATION_TOL: f64 = 1e-6;

enum Reference {
    Unitary(UnitaryQubitModel),
    Markov(f64),
    PureDephasing(PureDephasingModel),
    Coherence(CoherenceGenerationModel),
    None,
}

/// A model resolved from a configuration, ready to propagate.
pub struct Prepared {
    generator: Generator,
    initial: Operator,
    rho: Option<Operator>,
    b0: Option<Operator>,
    reference: Reference,
    bounds: Vec<BoundKind>,
}

fn model_error(e: QslError) -> CliError {
    CliError::Config(e.to_string())
}

fn numeric_error(e: QslError) -> CliError {
    CliError::Numerical(e.to_string())
}

fn require<T: Copy>(value: Option<T>, name: &str, model: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("model {model} needs parameter '{name}'")))
}

fn optional_state(spec: &Option<MatrixSpec>, name: &str) -> Result<Option<Operator>, CliError> {
    spec.as_ref().map(|s| s.state(name)).transpose()
}

fn optional_observable(spec: &Option<MatrixSpec>, name: &str) -> Result<Option<Operator>, CliError> {
    spec.as_ref().map(|s| s.observable(name)).transpose()
}

impl Prepared {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, CliError> {
        let p = &cfg.parameters;
        let rho = optional_state(&p.rho, "rho")?;
        let b0 = optional_observable(&p.b0, "b0")?;
        let (generator, initial, reference) = match cfg.model {
            ModelKind::Unitary => {
                let model = match (p.theta, p.n_hat, p.m_hat) {
                    (Some(theta), None, None) => UnitaryQubitModel::from_theta(theta),
                    (None, Some(n), Some(m)) => UnitaryQubitModel::new(n, m),
                    _ => {
                        return Err(CliError::Config(
                            "model unitary needs either 'theta' or both 'n_hat' and 'm_hat'".into(),
                        ))
                    }
                }
                .map_err(model_error)?;
                (model.generator(), model.observable(), Reference::Unitary(model))
            }
            ModelKind::MarkovDephasing => {
                let gamma = require(p.gamma, "gamma", "markov_dephasing")?;
                markov_dephasing_closed_forms(gamma, 0.0).map_err(model_error)?;
                let generator = markov_generator(gamma).map_err(model_error)?;
                (generator, pauli_y(), Reference::Markov(gamma))
            }
            ModelKind::PureDephasing => {
                let s = require(p.s, "s", "pure_dephasing")?;
                let eta = require(p.eta, "eta", "pure_dephasing")?;
                let a = require(p.a, "a", "pure_dephasing")?;
                let model = PureDephasingModel::new(a, s, eta).map_err(model_error)?;
                (model.generator(), model.observable(), Reference::PureDephasing(model))
            }
            ModelKind::CoherenceGeneration => {
                let gamma = require(p.gamma, "gamma", "coherence_generation")?;
                let model = CoherenceGenerationModel::new(gamma).map_err(model_error)?;
                (model.generator(), model.initial_state(), Reference::Coherence(model))
            }
            ModelKind::Custom => {
                let h = p
                    .hamiltonian
                    .as_ref()
                    .ok_or_else(|| CliError::Config("model custom needs parameter 'hamiltonian'".into()))?
                    .observable("hamiltonian")?;
                let gamma = p.gamma.unwrap_or(0.0);
                let schedule = RateSchedule::constant(gamma).map_err(model_error)?;
                let picture = match p.picture.unwrap_or(PictureName::Heisenberg) {
                    PictureName::Heisenberg => Picture::Heisenberg,
                    PictureName::Schrodinger => Picture::Schrodinger,
                };
                let generator = match &p.jump {
                    Some(j) => Generator::new(h, j.observable("jump")?, schedule, picture),
                    None => Generator::dephasing(h, schedule, picture),
                }
                .map_err(model_error)?;
                let initial = match picture {
                    Picture::Heisenberg => optional_observable(&p.a0, "a0")?.ok_or_else(|| {
                        CliError::Config("custom Heisenberg runs need parameter 'a0'".into())
                    })?,
                    Picture::Schrodinger => rho.clone().ok_or_else(|| {
                        CliError::Config("custom Schrödinger runs need parameter 'rho'".into())
                    })?,
                };
                (generator, initial, Reference::None)
            }
        };
        if initial.dim() != generator.dim() {
            return Err(CliError::Config(format!(
                "initial operator has dimension {}, generator acts on dimension {}",
                initial.dim(),
                generator.dim()
            )));
        }
        let bounds = match &cfg.bounds {
            Some(list) if list.is_empty() => return Err(CliError::Config("bounds list is empty".into())),
            Some(list) => list.clone(),
            None if generator.picture() == Picture::Schrodinger => vec![BoundKind::Coherence],
            None => vec![BoundKind::Quantumness],
        };
        for kind in &bounds {
            check_bound(*kind, &generator, rho.as_ref(), b0.as_ref())?;
        }
        Ok(Self {
            generator,
            initial,
            rho,
            b0,
            reference,
            bounds,
        })
    }

    pub fn propagate(&self, cfg: &RunConfig) -> Result<Trajectory, CliError> {
        let grid = TimeGrid::new(cfg.grid.t_max, cfg.grid.steps).map_err(model_error)?;
        propagate(&self.generator, &self.initial, grid).map_err(numeric_error)
    }

    /// Column names and data rows for the evolve table.
    pub fn evolve(&self, cfg: &RunConfig) -> Result<(Vec<&'static str>, Vec<Vec<f64>>), CliError> {
        let traj = self.propagate(cfg)?;
        let a0 = &self.initial;
        let mut rows = Vec::with_capacity(traj.states.len());
        let columns: Vec<&'static str> = match &self.reference {
            Reference::Unitary(_) | Reference::Markov(_) => vec!["t", "Q_numeric", "Q_closed", "abs_dev"],
            Reference::PureDephasing(_) => vec!["t", "gamma_t", "g_t", "Q_numeric", "Q_closed", "abs_dev"],
            Reference::Coherence(_) => vec!["t", "C_skew", "C_l1", "C_l1_closed", "abs_dev"],
            Reference::None if self.generator.picture() == Picture::Schrodinger => vec!["t", "C_skew", "C_l1"],
            Reference::None => vec!["t", "Q_numeric"],
        };
        for (k, x) in traj.states.iter().enumerate() {
            let t = traj.grid.node(k);
            let at_node = |e: QslError| CliError::Numerical(format!("node {k} (t = {t}): {e}"));
            let row = match &self.reference {
                Reference::Unitary(m) => {
                    let q = quantumness(a0, x).map_err(at_node)?;
                    let closed = m.closed_forms(t).q;
                    vec![t, q, closed, (q - closed).abs()]
                }
                Reference::Markov(gamma) => {
                    let q = quantumness(a0, x).map_err(at_node)?;
                    let closed = markov_dephasing_closed_forms(*gamma, t).map_err(at_node)?.q;
                    vec![t, q, closed, (q - closed).abs()]
                }
                Reference::PureDephasing(m) => {
                    let q = quantumness(a0, x).map_err(at_node)?;
                    let forms = m.closed_forms(t).map_err(at_node)?;
                    vec![t, forms.gamma_t, forms.g, q, forms.q, (q - forms.q).abs()]
                }
                Reference::Coherence(m) => {
                    let basis = m.basis();
                    let skew = coherence(x, &basis).map_err(at_node)?;
                    let l1 = l1_coherence(x, &basis).map_err(at_node)?;
                    let closed = m.exact_l1_coherence(t);
                    vec![t, skew, l1, closed, (l1 - closed).abs()]
                }
                Reference::None if self.generator.picture() == Picture::Schrodinger => {
                    let basis = Basis::computational(x.dim());
                    let skew = coherence(x, &basis).map_err(at_node)?;
                    let l1 = l1_coherence(x, &basis).map_err(at_node)?;
                    vec![t, skew, l1]
                }
                Reference::None => vec![t, quantumness(a0, x).map_err(at_node)?],
            };
            rows.push(row);
        }
        Ok((columns, rows))
    }

    pub fn verify(&self, cfg: &RunConfig) -> Result<Vec<BoundReport>, CliError> {
        let traj = self.propagate(cfg)?;
        let opts = BoundOptions {
            tolerance: cfg.tolerance,
            prefactor: cfg.prefactor,
            regularize: cfg.parameters.regularize.unwrap_or(true),
        };
        let gen = &self.generator;
        self.bounds
            .iter()
            .map(|kind| {
                match kind {
                    BoundKind::Quantumness => bound_quantumness(&self.initial, &traj, gen, &opts),
                    BoundKind::QuantumnessReference => {
                        bound_quantumness_reference(self.b0.as_ref().expect("checked"), &traj, gen, &opts)
                    }
                    BoundKind::SkewInformation => {
                        bound_skew_information(self.rho.as_ref().expect("checked"), &traj, gen, &opts)
                    }
                    BoundKind::Coherence => {
                        bound_coherence(&traj, gen, &Basis::computational(gen.dim()), &opts)
                    }
                }
                .map_err(numeric_error)
            })
            .collect()
    }

    /// Largest `T` up to which saturation is expected.
    pub fn saturation_horizon(&self) -> f64 {
        match &self.reference {
            Reference::PureDephasing(m) => m.nonnegative_rate_horizon(),
            _ => 0.0,
        }
    }
}

fn check_bound(
    kind: BoundKind,
    gen: &Generator,
    rho: Option<&Operator>,
    b0: Option<&Operator>,
) -> Result<(), CliError> {
    let need = |what: &str| CliError::Config(format!("bound {} needs parameter '{what}'", kind.name()));
    let dim_ok = |op: &Operator, what: &str| {
        if op.dim() == gen.dim() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "{what} has dimension {}, expected {}",
                op.dim(),
                gen.dim()
            )))
        }
    };
    match kind {
        BoundKind::Quantumness => Ok(()),
        BoundKind::QuantumnessReference => dim_ok(b0.ok_or_else(|| need("b0"))?, "b0"),
        BoundKind::SkewInformation => {
            if gen.picture() != Picture::Heisenberg {
                return Err(CliError::Config("skew_information needs a Heisenberg-picture model".into()));
            }
            dim_ok(rho.ok_or_else(|| need("rho"))?, "rho")
        }
        BoundKind::Coherence => {
            if gen.picture() != Picture::Schrodinger {
                return Err(CliError::Config("coherence needs a Schrödinger-picture model".into()));
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Violated,
    NotSaturated,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Valid => crate::EXIT_OK,
            Self::Violated => crate::EXIT_VIOLATION,
            Self::NotSaturated => crate::EXIT_NOT_SATURATED,
        }
    }

    pub fn worst(self, other: Self) -> Self {
        if self == Self::Violated || other == Self::Violated {
            Self::Violated
        } else if self == Self::NotSaturated || other == Self::NotSaturated {
            Self::NotSaturated
        } else {
            Self::Valid
        }
    }
}

/// Worst quantumness saturation gap over rows with `0 < t ≤ horizon`.
pub fn saturation_gap(reports: &[BoundReport], horizon: f64) -> f64 {
    reports
        .iter()
        .filter(|r| r.bound_kind == BoundKind::Quantumness)
        .flat_map(|r| r.rows.iter())
        .filter(|row| row.t <= horizon)
        .map(|row| (row.ratio - 1.0).abs())
        .fold(0.0, f64::max)
}

pub fn verdict(cfg: &RunConfig, prepared: &Prepared, reports: &[BoundReport]) -> Verdict {
    if reports.iter().any(|r| !r.all_valid || !r.rates_hold()) {
        return Verdict::Violated;
    }
    if cfg.saturation {
        let gap = saturation_gap(reports, prepared.saturation_horizon());
        if !(gap <= SATURATION_TOL) {
            return Verdict::NotSaturated;
        }
    }
    Verdict::Valid
}

#[derive(Debug, Serialize)]
pub struct SweepSection {
    pub set: serde_json::Map<String, serde_json::Value>,
    pub reports: Vec<BoundReport>,
}

/// Runs one configuration through verify, returning its reports and verdict.
pub fn run_verify(cfg: &RunConfig) -> Result<(Vec<BoundReport>, Verdict), CliError> {
    cfg.validate()?;
    let prepared = Prepared::from_config(cfg)?;
    let reports = prepared.verify(cfg)?;
    let v = verdict(cfg, &prepared, &reports);
    Ok((reports, v))
}
