//! The named experiments. Each returns a rendered-ready [`Table`].

use rayon::prelude::*;
use thiserror::Error;

use nhaqo_core::adiabatic::runtime_bound;
use nhaqo_core::evolve::{evolve_with, initial_state, EvolveConfig, EvolveError, InitialState};
use nhaqo_core::model::{grid, linear_schedule, AnnealSpec, IsingInstance, ModelError};
use nhaqo_core::reduction::TwoLevelParams;
use nhaqo_core::spectrum::{detect_exceptional_point, minimize_sampled, trace_gap, SpectrumError, CROSSOVER_TOLERANCE};

use crate::config::{
    ConfigError, Experiment, ExperimentConfig, InitialStateKind, ModelKind, TauUnits, FIG1_DEFAULT_QUBITS,
};
use crate::csv::{Cell, Table};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io { .. } => 4,
        }
    }
}

impl From<ModelError> for RunError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Linalg(_) => RunError::Numerical(e.to_string()),
            other => RunError::Config(ConfigError::Invalid {
                key: "model",
                reason: other.to_string(),
            }),
        }
    }
}

impl From<SpectrumError> for RunError {
    fn from(e: SpectrumError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<EvolveError> for RunError {
    fn from(e: EvolveError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

/// Default `delta0_list` of the figure reproduction, in units of `J*`.
pub const FIG1_DELTAS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

/// Validates `cfg` for `experiment` and runs it.
pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Table, RunError> {
    cfg.validate(experiment)?;
    match experiment {
        Experiment::Fig1 => run_fig1(cfg),
        Experiment::GapTrace => run_gap_trace(cfg),
        Experiment::Evolve => run_evolve(cfg),
        Experiment::TauSweep => run_tau_sweep(cfg),
        Experiment::EpScan => run_ep_scan(cfg),
    }
}

/// Builds the configured spec for one `delta0` and `tau`.
pub fn build_spec(cfg: &ExperimentConfig, delta0: f64, tau: f64) -> Result<AnnealSpec, RunError> {
    let schedule = linear_schedule(delta0);
    let spec = match cfg.model {
        ModelKind::TwoLevel => AnnealSpec::two_level(cfg.j_star, cfg.two_level_cos_alpha(cfg.n_qubits), schedule, tau)?,
        ModelKind::Ising => {
            let n = cfg.n_qubits.ok_or(ConfigError::Missing("n_qubits"))? as usize;
            let mut inst = IsingInstance::random(n, cfg.seed);
            if let Some(f) = &cfg.fields {
                inst.fields = f.clone();
            }
            if let Some(c) = &cfg.couplings {
                inst.couplings = c.iter().map(|t| (t[0] as usize, t[1] as usize, t[2])).collect();
            }
            inst.anneal_spec(schedule, tau)?
        }
    };
    Ok(spec.with_decaying_driver(cfg.decaying_driver)?)
}

fn column_name(prefix: &str, x: f64) -> String {
    format!("{prefix}_{x}")
}

/// Two-level gap curves `|dE|/J*` along the linear schedule, one column per
/// `delta0`, with per-curve minima in the footer.
pub fn run_fig1(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let n = cfg.n_qubits.unwrap_or(FIG1_DEFAULT_QUBITS);
    let cos = cfg.two_level_cos_alpha(Some(n));
    let deltas = cfg.delta0_list.clone().unwrap_or_else(|| FIG1_DELTAS.to_vec());
    let params = TwoLevelParams::symmetric(cfg.j_star, cos);
    let schedules: Vec<_> = deltas.iter().map(|&d| linear_schedule(d)).collect();
    let points: Vec<f64> = grid(cfg.grid_points).collect();

    let mut table =
        Table::new(std::iter::once("s".to_string()).chain(deltas.iter().map(|&d| column_name("gap_delta0", d))));
    let curves: Vec<Vec<f64>> = schedules
        .iter()
        .map(|sch| points.iter().map(|&s| params.gap(sch, s) / cfg.j_star).collect())
        .collect();
    for (i, &s) in points.iter().enumerate() {
        let mut row = vec![Cell::Real(s)];
        row.extend(curves.iter().map(|c| Cell::Real(c[i])));
        table.row(row);
    }
    table.footer("cos_alpha", vec![cos.into()]);
    for ((&d, sch), curve) in deltas.iter().zip(&schedules).zip(&curves) {
        let samples: Vec<(f64, f64)> = points.iter().copied().zip(curve.iter().copied()).collect();
        let min = minimize_sampled(
            &samples,
            |s| Ok::<_, RunError>(params.gap(sch, s) / cfg.j_star),
            CROSSOVER_TOLERANCE,
        )?;
        table.footer("minimum", vec![d.into(), min.s_c.into(), min.g_m.into()]);
    }
    Ok(table)
}

/// Two lowest eigenvalues and the gap along the anneal, with crossover and
/// exceptional-point footers.
pub fn run_gap_trace(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let spec = build_spec(cfg, cfg.delta0, cfg.tau)?;
    let trace = trace_gap(&spec, cfg.grid_points)?;
    let mut table = Table::new(["s", "ground_re", "ground_im", "excited_re", "excited_im", "gap"]);
    for snap in &trace.snapshots {
        let (g, e) = (snap.ground(), snap.excited());
        table.row(vec![
            snap.s.into(),
            g.re.into(),
            g.im.into(),
            e.re.into(),
            e.im.into(),
            snap.gap.into(),
        ]);
    }
    table.footer("s_c", vec![trace.s_c.into()]);
    table.footer("g_m", vec![trace.g_m.into()]);
    if let Some(mm) = &trace.multiple_minima {
        table.footer("competing_minimum", vec![mm.competing.0.into(), mm.competing.1.into()]);
    }
    if let Some(ep) = detect_exceptional_point(&spec, cfg.grid_points)? {
        table.footer("exceptional_point", vec![ep.s.into(), ep.gap.into(), ep.overlap.into()]);
    }
    Ok(table)
}

/// One row per `tau`: success probability, final norm and step count.
/// Integration failures are reported in the `error` column.
pub fn run_evolve(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let base = build_spec(cfg, cfg.delta0, 1.0)?;
    let which = match cfg.initial_state {
        InitialStateKind::Full => InitialState::FullHamiltonian,
        InitialStateKind::Driver => InitialState::DriverOnly,
    };
    let psi0 = initial_state(&base, which)?;
    let unit = match cfg.tau_units {
        TauUnits::Absolute => 1.0,
        TauUnits::InverseGapSquared => {
            let g_m = trace_gap(&base, cfg.grid_points)?.g_m;
            if g_m <= 0.0 {
                return Err(RunError::Numerical(
                    "minimum gap is zero; tau_units = inverse-gap-squared is undefined".into(),
                ));
            }
            1.0 / (g_m * g_m)
        }
    };
    let config = EvolveConfig {
        tolerance: cfg.tolerance,
        samples: cfg.samples,
        max_steps: cfg.max_steps,
    };
    let taus: Vec<f64> = cfg.tau_values().iter().map(|t| t * unit).collect();
    let rows: Vec<Vec<Cell>> = taus
        .par_iter()
        .map(|&tau| {
            let out = base
                .clone()
                .with_tau(tau)
                .map_err(|e| e.to_string())
                .and_then(|spec| evolve_with(&spec, &psi0, false, &config).map_err(|e| e.to_string()));
            match out {
                Ok(r) => vec![
                    tau.into(),
                    r.success_probability.into(),
                    r.final_norm().into(),
                    r.steps_taken.into(),
                    r.degenerate_target.into(),
                    Cell::Empty,
                ],
                Err(msg) => vec![
                    tau.into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Text(msg),
                ],
            }
        })
        .collect();
    let mut table = Table::new([
        "tau",
        "success_probability",
        "final_norm",
        "steps_taken",
        "degenerate_target",
        "error",
    ]);
    rows.into_iter().for_each(|r| table.row(r));
    if cfg.tau_units == TauUnits::InverseGapSquared {
        table.footer("tau_unit", vec![unit.into()]);
    }
    Ok(table)
}

/// Runtime bound over the `n` and `delta0` lists for the two-level model.
pub fn run_tau_sweep(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let ns = cfg.n_list.clone().unwrap_or_else(|| vec![cfg.n_qubits.unwrap_or(10)]);
    // the closed-form runtime uses the aligned limit unless told otherwise
    let cos = cfg.cos_alpha.unwrap_or(1.0);
    let params = TwoLevelParams::symmetric(cfg.j_star, cos);
    let jobs: Vec<(u32, f64)> = ns
        .iter()
        .flat_map(|&n| cfg.delta0_values().into_iter().map(move |d| (n, d)))
        .collect();
    let rows: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|&(n, d)| {
            let bound = runtime_bound(&linear_schedule(d), &params, n).and_then(|b| match cfg.delta_qubit {
                Some(dq) => b.with_delta_qubit(dq),
                None => Ok(b),
            });
            match bound {
                Ok(b) => vec![
                    n.into(),
                    d.into(),
                    b.min_gap.into(),
                    b.s_min_gap.into(),
                    b.tau_min.into(),
                    b.tau_max.into(),
                    b.feasible.into(),
                    b.sin_alpha_used.into(),
                    Cell::Empty,
                ],
                Err(e) => {
                    let mut row = vec![n.into(), d.into()];
                    row.extend(std::iter::repeat_n(Cell::Empty, 6));
                    row.push(Cell::Text(e.to_string()));
                    row
                }
            }
        })
        .collect();
    let mut table = Table::new([
        "n",
        "delta0",
        "min_gap",
        "s_min_gap",
        "tau0",
        "tau_max",
        "feasible",
        "sin_alpha_used",
        "error",
    ]);
    rows.into_iter().for_each(|r| table.row(r));
    table.footer("cos_alpha", vec![cos.into()]);
    Ok(table)
}

/// Exceptional-point search for every `delta0` in the list.
pub fn run_ep_scan(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let deltas = cfg.delta0_values();
    let rows: Vec<Vec<Cell>> = deltas
        .par_iter()
        .map(|&d| {
            let spec = build_spec(cfg, d, cfg.tau)?;
            let row = match detect_exceptional_point(&spec, cfg.grid_points)? {
                Some(ep) => vec![d.into(), true.into(), ep.s.into(), ep.gap.into(), ep.overlap.into()],
                None => vec![d.into(), false.into(), Cell::Empty, Cell::Empty, Cell::Empty],
            };
            Ok(row)
        })
        .collect::<Result<_, RunError>>()?;
    let mut table = Table::new(["delta0", "ep_found", "s", "gap", "overlap"]);
    rows.into_iter().for_each(|r| table.row(r));
    Ok(table)
}
