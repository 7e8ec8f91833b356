//! Time integration of du/dt = e^{-2u} \Delta u with Dirichlet boundary
//! policies taken from the barrier flows, plus exhaustion and truncated-plane
//! drivers.

mod exhaustion;
mod plane;
mod stepper;

pub use exhaustion::{exhaustion_solve, ExhaustionResult, ExhaustionRun};
pub use plane::{plane_solve, PlaneResult, PlaneRun};

use crate::error::{Result, RicciError};
use crate::exact::ExactFlow;
use crate::geometry::chart::Chart;
use crate::geometry::field::ConformalField;
use crate::geometry::hyperbolic::HyperbolicModel;
use crate::geometry::ops::{laplacian_into, volume};

/// How boundary nodes are pinned during evolution.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryPolicy {
    /// Boundary follows an exact flow at the current time.
    DirichletExact(ExactFlow),
    /// Boundary pinned to h(z) + (1/2) log(2t + M).
    DirichletBarrier { model: HyperbolicModel, m: f64 },
    /// Boundary pinned to its initial values. Control case: known to
    /// violate instantaneous completeness.
    DirichletFrozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExplicitRk2,
    ImplicitEuler,
}

/// Time-step selection and nonlinear-solve parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl StepControl {
    /// Adaptive explicit scheme: dt = min(dt_max, CFL bound).
    pub fn explicit_rk2(dt_max: f64) -> StepControl {
        StepControl {
            scheme: Scheme::ExplicitRk2,
            cfl_safety: 0.2,
            dt_max,
            dt_min: 0.0,
            newton_tol: 1e-10,
            newton_max_iters: 30,
        }
    }

    /// Fixed-dt implicit Euler with Newton.
    pub fn implicit_euler(dt: f64) -> StepControl {
        StepControl {
            scheme: Scheme::ImplicitEuler,
            cfl_safety: 0.2,
            dt_max: dt,
            dt_min: 0.0,
            newton_tol: 1e-10,
            newton_max_iters: 30,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0) {
            return Err(RicciError::InvalidStepControl(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        if self.dt_min > self.dt_max {
            return Err(RicciError::InvalidStepControl(format!(
                "dt_min {} exceeds dt_max {}",
                self.dt_min, self.dt_max
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(RicciError::InvalidStepControl(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

/// Field + time + step statistics.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub field: ConformalField,
    pub t: f64,
    pub dt_last: f64,
    pub steps_taken: u64,
}

impl FlowState {
    pub fn new(field: ConformalField, t: f64) -> FlowState {
        FlowState {
            field,
            t,
            dt_last: 0.0,
            steps_taken: 0,
        }
    }
}

/// Field snapshot at a caller-requested time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub field: ConformalField,
}

/// Per-step scalar record. Deviation norms are filled only when the run is
/// given a reference hyperbolic model.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub t: f64,
    pub volume: f64,
    pub min_k: f64,
    pub max_k: f64,
    pub deviation_c0: Option<f64>,
    pub deviation_c1: Option<f64>,
}

/// Ordered snapshots plus the per-step scalar series. A failed run carries
/// the partial trajectory and a failure message.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<StepRecord>,
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// Resolved boundary evaluation: policy plus the frozen initial values and
/// the time convention (physical t, or normalized s with t(s) = e^{2s}/2).
pub(crate) struct BoundaryEval {
    policy: BoundaryPolicy,
    frozen: Vec<(usize, f64)>,
    normalized: bool,
}

impl BoundaryEval {
    pub(crate) fn new(
        policy: &BoundaryPolicy,
        initial: &ConformalField,
        normalized: bool,
    ) -> BoundaryEval {
        let frozen = initial
            .chart()
            .boundary()
            .map(|idx| (idx, initial.value(idx)))
            .collect();
        BoundaryEval {
            policy: policy.clone(),
            frozen,
            normalized,
        }
    }

    pub(crate) fn apply(&self, chart: &Chart, u: &mut [f64], t: f64) -> Result<()> {
        match &self.policy {
            BoundaryPolicy::DirichletFrozen => {
                for &(idx, v) in &self.frozen {
                    u[idx] = v;
                }
            }
            BoundaryPolicy::DirichletExact(flow) => {
                for idx in chart.boundary() {
                    let r = chart.radius(idx);
                    u[idx] = if self.normalized {
                        let phys_t = 0.5 * (2.0 * t).exp();
                        flow.at_radius(phys_t, r)? - t
                    } else {
                        flow.at_radius(t, r)?
                    };
                }
            }
            BoundaryPolicy::DirichletBarrier { model, m } => {
                for idx in chart.boundary() {
                    let h = model.at_radius(chart.radius(idx))?;
                    u[idx] = if self.normalized {
                        // h + (1/2) log(e^{2s} + M) - s
                        h + 0.5 * ((2.0 * t).exp() + m).ln() - t
                    } else {
                        h + 0.5 * (2.0 * t + m).ln()
                    };
                }
            }
        }
        Ok(())
    }
}

/// One time step of du/dt = e^{-2u} \Delta u. The interior is advanced by
/// the configured scheme; boundary nodes are re-pinned at the new time.
pub fn step(state: &FlowState, control: &StepControl, policy: &BoundaryPolicy) -> Result<FlowState> {
    control.validate()?;
    let beval = BoundaryEval::new(policy, &state.field, false);
    let mut s = state.clone();
    stepper::advance(&mut s, control, &beval, 0.0, f64::INFINITY)?;
    Ok(s)
}

fn record(
    chart: &Chart,
    u: &[f64],
    t: f64,
    lap_buf: &mut [f64],
    reference: Option<&HyperbolicModel>,
    drift: f64,
) -> StepRecord {
    laplacian_into(chart, u, lap_buf);
    let mut min_k = f64::INFINITY;
    let mut max_k = f64::NEG_INFINITY;
    for idx in chart.interior() {
        let k = -(-2.0 * u[idx]).exp() * lap_buf[idx];
        min_k = min_k.min(k);
        max_k = max_k.max(k);
    }
    let f = ConformalField::new(chart.clone(), u.to_vec()).expect("finite samples");
    let vol = volume(&f);
    let (mut dev0, mut dev1) = (None, None);
    if let Some(model) = reference {
        // normalized runs evolve v = u - (1/2)log(2t) in s with t = e^{2s}/2
        let (t_phys, f_phys) = if drift != 0.0 {
            let shifted = ConformalField::new(
                chart.clone(),
                f.values().iter().map(|v| v + t).collect(),
            )
            .expect("finite samples");
            (0.5 * (2.0 * t).exp(), shifted)
        } else {
            (t, f)
        };
        if t_phys > 0.0 {
            dev0 = crate::geometry::ops::deviation_norm(&f_phys, model, t_phys, 0).ok();
            dev1 = crate::geometry::ops::deviation_norm(&f_phys, model, t_phys, 1).ok();
        }
    }
    StepRecord {
        t,
        volume: vol,
        min_k,
        max_k,
        deviation_c0: dev0,
        deviation_c1: dev1,
    }
}

const MAX_STEPS: u64 = 100_000_000;

#[allow(clippy::too_many_arguments)]
fn evolve_inner(
    u0: &ConformalField,
    t0: f64,
    t_end: f64,
    sample_times: &[f64],
    control: &StepControl,
    policy: &BoundaryPolicy,
    drift: f64,
    reference: Option<&HyperbolicModel>,
) -> Result<Trajectory> {
    control.validate()?;
    if !(t0 < t_end) {
        return Err(RicciError::InvalidTimeRange { t0, t_end });
    }
    let mut samples: Vec<f64> = sample_times.to_vec();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if samples.iter().any(|&s| s < t0 || s > t_end + 1e-12) {
        return Err(RicciError::Precondition(
            "sample times must lie within [t0, t_end]".into(),
        ));
    }

    let chart = u0.chart().clone();
    let beval = BoundaryEval::new(policy, u0, drift != 0.0);
    let mut state = FlowState::new(u0.clone(), t0);
    beval.apply(&chart, state.field.values_mut(), t0)?;

    let mut lap_buf = vec![0.0; chart.num_nodes()];
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        series: vec![record(
            &chart,
            state.field.values(),
            t0,
            &mut lap_buf,
            reference,
            drift,
        )],
        failure: None,
    };

    let mut next_sample = 0usize;
    // samples at (or numerically at) t0 are taken from the initial field
    while next_sample < samples.len() && samples[next_sample] <= t0 + 1e-12 {
        traj.snapshots.push(Snapshot {
            t: state.t,
            field: state.field.clone(),
        });
        next_sample += 1;
    }

    while state.t < t_end - 1e-12 {
        if state.steps_taken >= MAX_STEPS {
            traj.failure = Some(format!("step budget exceeded at t = {}", state.t));
            return Ok(traj);
        }
        let prev_field = state.field.clone();
        let prev_t = state.t;
        let remaining = t_end - state.t;
        if let Err(e) = stepper::advance(&mut state, control, &beval, drift, remaining) {
            traj.failure = Some(format!("step failed at t = {prev_t}: {e}"));
            return Ok(traj);
        }
        traj.series.push(record(
            &chart,
            state.field.values(),
            state.t,
            &mut lap_buf,
            reference,
            drift,
        ));
        while next_sample < samples.len() && samples[next_sample] <= state.t + 1e-12 {
            let s = samples[next_sample];
            if (state.t - s).abs() <= 1e-12 {
                traj.snapshots.push(Snapshot {
                    t: state.t,
                    field: state.field.clone(),
                });
            } else {
                // linear interpolation in t between adjacent steps
                let w = (s - prev_t) / (state.t - prev_t);
                let vals = prev_field
                    .values()
                    .iter()
                    .zip(state.field.values())
                    .map(|(a, b)| a + w * (b - a))
                    .collect();
                traj.snapshots.push(Snapshot {
                    t: s,
                    field: ConformalField::new(chart.clone(), vals)?,
                });
            }
            next_sample += 1;
        }
    }
    Ok(traj)
}

/// Evolve from t0 to t_end, recording scalar series every step and snapshots
/// at the requested sample times.
pub fn evolve(
    u0: &ConformalField,
    t0: f64,
    t_end: f64,
    sample_times: &[f64],
    control: &StepControl,
    policy: &BoundaryPolicy,
) -> Result<Trajectory> {
    evolve_inner(u0, t0, t_end, sample_times, control, policy, 0.0, None)
}

/// As `evolve`, additionally filling the per-step deviation-norm columns
/// against a reference hyperbolic model.
pub fn evolve_with_reference(
    u0: &ConformalField,
    t0: f64,
    t_end: f64,
    sample_times: &[f64],
    control: &StepControl,
    policy: &BoundaryPolicy,
    reference: &HyperbolicModel,
) -> Result<Trajectory> {
    evolve_inner(
        u0,
        t0,
        t_end,
        sample_times,
        control,
        policy,
        0.0,
        Some(reference),
    )
}

/// Evolve the normalized flow dv/ds = e^{-2v} \Delta v - 1 in the slow time
/// s related to physical time by t(s) = e^{2s}/2 (so v = u - (1/2)log(2t)).
pub fn evolve_normalized(
    v0: &ConformalField,
    s0: f64,
    s_end: f64,
    sample_times: &[f64],
    control: &StepControl,
    policy: &BoundaryPolicy,
) -> Result<Trajectory> {
    evolve_inner(v0, s0, s_end, sample_times, control, policy, 1.0, None)
}

/// As `evolve_normalized`, with per-step deviation norms against a reference
/// model (computed in physical variables).
pub fn evolve_normalized_with_reference(
    v0: &ConformalField,
    s0: f64,
    s_end: f64,
    sample_times: &[f64],
    control: &StepControl,
    policy: &BoundaryPolicy,
    reference: &HyperbolicModel,
) -> Result<Trajectory> {
    evolve_inner(
        v0,
        s0,
        s_end,
        sample_times,
        control,
        policy,
        1.0,
        Some(reference),
    )
}

/// Convert the snapshots of a normalized trajectory (v in slow time s) into
/// physical snapshots (u = v + s at t = e^{2s}/2).
pub fn normalized_to_physical(traj: &Trajectory) -> Result<Vec<Snapshot>> {
    traj.snapshots
        .iter()
        .map(|s| {
            let field = ConformalField::new(
                s.field.chart().clone(),
                s.field.values().iter().map(|v| v + s.t).collect(),
            )?;
            Ok(Snapshot {
                t: 0.5 * (2.0 * s.t).exp(),
                field,
            })
        })
        .collect()
}
