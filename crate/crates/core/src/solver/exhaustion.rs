//! Exhaustion driver on the disc: solve on the increasing family
//! D_j = D_{1 - 1/(j+1)} with barrier boundary data and compare the
//! per-j solutions on common nodes.

use crate::error::{Result, RicciError};
use crate::geometry::chart::Chart;
use crate::geometry::field::ConformalField;
use crate::geometry::hyperbolic::HyperbolicModel;

use super::{evolve, BoundaryPolicy, StepControl, Trajectory};

/// One per-j run of the exhaustion.
#[derive(Debug)]
pub struct ExhaustionRun {
    pub j: u32,
    pub disc_radius: f64,
    pub chart: Chart,
    /// M_j = exp(2 sup_{D_j}(u0 - h_{r_j})), the upper-barrier constant.
    pub m: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug)]
pub struct ExhaustionResult {
    pub runs: Vec<ExhaustionRun>,
    /// sup over consecutive pairs, common interior nodes and sample times of
    /// (u_{j+1} - u_j)^+; the continuum sequence is weakly decreasing.
    pub monotonicity_violation: f64,
    /// Final-time field of the largest disc: the limit estimate.
    pub limit: ConformalField,
}

/// Restrict `u0` (given on a radial master chart) to the nodes strictly
/// inside radius `r`, keeping the master spacing so node sets nest.
fn restrict(u0: &ConformalField, r: f64) -> Result<(Chart, ConformalField)> {
    let master = u0.chart();
    if !master.is_radial() {
        return Err(RicciError::Precondition(
            "exhaustion_solve requires a radial master chart".into(),
        ));
    }
    let dx = master.dx();
    let mut k = ((r - 1e-12) / dx).floor() as usize;
    if k >= master.n() {
        k = master.n() - 1;
    }
    if k < 2 {
        return Err(RicciError::ChartTooSmall { min: 3, got: k + 1 });
    }
    let chart = Chart::radial(k as f64 * dx, k + 1)?;
    let u = u0.values()[..=k].to_vec();
    let field = ConformalField::new(chart.clone(), u)?;
    Ok((chart, field))
}

/// Solve the flow on each exhaustion disc D_j, j in `j_values`, from the
/// restriction of `u0`, pinning the boundary to the upper barrier
/// h_{r_j} + (1/2) log(2t + M_j).
pub fn exhaustion_solve(
    u0: &ConformalField,
    j_values: &[u32],
    t_end: f64,
    sample_times: &[f64],
    control: &StepControl,
) -> Result<ExhaustionResult> {
    if j_values.is_empty() {
        return Err(RicciError::Precondition("empty j range".into()));
    }
    if j_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RicciError::Precondition("j range must increase".into()));
    }
    let mut runs = Vec::new();
    for &j in j_values {
        let r_j = 1.0 - 1.0 / (j as f64 + 1.0);
        let (chart, u0_j) = restrict(u0, r_j)?;
        let model = HyperbolicModel::disc(r_j);
        // C_j device: smallest multiple of H_j dominating the initial data
        let sup_gap = chart
            .interior()
            .chain(chart.boundary())
            .map(|idx| u0_j.value(idx) - model.at_radius(chart.radius(idx)).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let m = (2.0 * sup_gap).exp();
        let policy = BoundaryPolicy::DirichletBarrier { model, m };
        let trajectory = evolve(&u0_j, 0.0, t_end, sample_times, control, &policy)?;
        if let Some(msg) = &trajectory.failure {
            return Err(RicciError::Precondition(format!(
                "exhaustion run j = {j} failed: {msg}"
            )));
        }
        runs.push(ExhaustionRun {
            j,
            disc_radius: r_j,
            chart,
            m,
            trajectory,
        });
    }

    let mut violation = 0.0f64;
    for pair in runs.windows(2) {
        let (small, large) = (&pair[0], &pair[1]);
        let n_common = small.chart.n().min(large.chart.n());
        for (s_small, s_large) in small
            .trajectory
            .snapshots
            .iter()
            .zip(&large.trajectory.snapshots)
        {
            // interior nodes of the smaller chart present in both
            for i in 0..n_common.saturating_sub(1) {
                let gap = s_large.field.value(i) - s_small.field.value(i);
                violation = violation.max(gap);
            }
            debug_assert!((s_small.t - s_large.t).abs() < 1e-9);
        }
    }

    let limit = runs
        .last()
        .unwrap()
        .trajectory
        .final_state()
        .map(|s| s.field.clone())
        .ok_or_else(|| RicciError::Precondition("no snapshots recorded".into()))?;

    Ok(ExhaustionResult {
        runs,
        monotonicity_violation: violation.max(0.0),
        limit,
    })
}
