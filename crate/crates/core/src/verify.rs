//! Checkers turning the quantitative flow statements into pass/fail
//! verdicts with measured violation magnitudes and fitted rates.

use serde::Serialize;

use crate::error::{Result, RicciError};
use crate::exact::{ExactFlow, TopologyTag};
use crate::geometry::chart::Chart;
use crate::geometry::field::ConformalField;
use crate::geometry::hyperbolic::HyperbolicModel;
use crate::geometry::ops::{deviation_field, deviation_norm, gauss_curvature};
use crate::solver::{evolve, BoundaryPolicy, Snapshot, StepControl, Trajectory};

/// One verdict: passed iff worst_violation <= tolerance_used.
#[derive(Debug, Clone, Serialize)]
pub struct CheckVerdict {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    /// (t, node index) of the worst violation, when localizable.
    pub worst_location: Option<(f64, usize)>,
    pub fitted_rate: Option<f64>,
    pub tolerance_used: f64,
}

impl CheckVerdict {
    fn from_violation(name: &str, worst: f64, loc: Option<(f64, usize)>, tol: f64) -> CheckVerdict {
        CheckVerdict {
            name: name.into(),
            passed: worst <= tol,
            worst_violation: worst,
            worst_location: loc,
            fitted_rate: None,
            tolerance_used: tol,
        }
    }
}

/// Ordered collection of verdicts; each check name appears exactly once.
#[derive(Debug, Default, Serialize)]
pub struct DiagnosticsReport {
    pub verdicts: Vec<CheckVerdict>,
}

impl DiagnosticsReport {
    pub fn push(&mut self, v: CheckVerdict) -> Result<()> {
        if self.verdicts.iter().any(|w| w.name == v.name) {
            return Err(RicciError::Precondition(format!(
                "duplicate check name {}",
                v.name
            )));
        }
        self.verdicts.push(v);
        Ok(())
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Least-squares line fit; returns (slope, intercept).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(RicciError::Precondition(
            "line fit needs at least two points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(RicciError::Precondition("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Chen's bound: min interior K(t) >= -1/(2t) - tol at every recorded step
/// with t > 0.
pub fn check_chen(traj: &Trajectory, tol: f64) -> CheckVerdict {
    let mut worst = 0.0f64;
    let mut loc = None;
    for rec in &traj.series {
        if rec.t <= 0.0 {
            continue;
        }
        let violation = -(rec.min_k + 1.0 / (2.0 * rec.t));
        if violation > worst {
            worst = violation;
            loc = Some((rec.t, 0));
        }
    }
    CheckVerdict::from_violation("chen", worst, loc, tol)
}

fn interior_clearance_nodes(chart: &Chart) -> Vec<usize> {
    chart.interior_clearance(1.0).collect()
}

/// Barrier sandwich h + (1/2)log(2t) - tol <= u <= h + (1/2)log(2t+M) + tol
/// at every snapshot over interior nodes clear of the Dirichlet layer.
/// The precondition u(0) <= h + (1/2)log M + tol is an error when violated.
pub fn check_barriers(
    traj: &Trajectory,
    model: &HyperbolicModel,
    m: f64,
    tol: f64,
) -> Result<CheckVerdict> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| RicciError::Precondition("trajectory has no snapshots".into()))?;
    let chart = first.field.chart().clone();
    let nodes = interior_clearance_nodes(&chart);
    // precondition of the upper-barrier lemma
    for &idx in &nodes {
        let h = model.at_radius(chart.radius(idx))?;
        let bound = h + 0.5 * (2.0 * first.t + m).ln();
        if first.field.value(idx) > bound + tol {
            return Err(RicciError::Precondition(format!(
                "initial datum exceeds upper barrier by {} at node {idx}",
                first.field.value(idx) - bound
            )));
        }
    }
    let mut worst = 0.0f64;
    let mut loc = None;
    for snap in &traj.snapshots {
        for &idx in &nodes {
            let h = model.at_radius(chart.radius(idx))?;
            let u = snap.field.value(idx);
            let upper = u - (h + 0.5 * (2.0 * snap.t + m).ln());
            let lower = if snap.t > 0.0 {
                (h + 0.5 * (2.0 * snap.t).ln()) - u
            } else {
                f64::NEG_INFINITY
            };
            let v = upper.max(lower);
            if v > worst {
                worst = v;
                loc = Some((snap.t, idx));
            }
        }
    }
    Ok(CheckVerdict::from_violation("barriers", worst, loc, tol))
}

/// Fit of the volume series over `window` against the linear law
/// -8pi (sphere) / -4pi (plane). `correction` divides the fitted slope
/// before comparison (analytic truncation factor). Infinite-volume tags
/// degenerate to "no extinction inside the window".
pub fn check_volume_law(
    traj: &Trajectory,
    tag: &TopologyTag,
    window: (f64, f64),
    tol_rel: f64,
    correction: f64,
) -> Result<CheckVerdict> {
    use std::f64::consts::PI;
    let pts: Vec<(f64, f64)> = traj
        .series
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (r.t, r.volume))
        .collect();
    if pts.len() < 5 {
        return Err(RicciError::Precondition(format!(
            "volume fit window has {} < 5 samples",
            pts.len()
        )));
    }
    let expected = match tag {
        TopologyTag::Sphere { .. } => Some(-8.0 * PI),
        TopologyTag::Plane { volume } if volume.is_finite() => Some(-4.0 * PI),
        _ => None,
    };
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, _) = fit_line(&xs, &ys)?;
    let corrected = slope / correction;
    let (worst, passed, rate) = match expected {
        Some(e) => {
            let rel = (corrected - e).abs() / e.abs();
            (rel, rel <= tol_rel, corrected)
        }
        None => {
            // vacuous law: volume must stay positive (no extinction)
            let min_vol = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            (if min_vol > 0.0 { 0.0 } else { 1.0 }, min_vol > 0.0, corrected)
        }
    };
    Ok(CheckVerdict {
        name: "volume_law".into(),
        passed,
        worst_violation: worst,
        worst_location: None,
        fitted_rate: Some(rate),
        tolerance_used: tol_rel,
    })
}

/// Extrapolated extinction time from a linear fit of the volume series over
/// `window`: the root of the fitted line.
pub fn fit_extinction_time(traj: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = traj
        .series
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (r.t, r.volume))
        .collect();
    if pts.len() < 5 {
        return Err(RicciError::Precondition("window too short".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, intercept) = fit_line(&xs, &ys)?;
    Ok(-intercept / slope)
}

/// Sharp convergence to the hyperbolic metric over physical-time snapshots:
/// (a) sandwich -tol <= (1/2t) e^{2(u-h)} - 1 <= M/(2t) + tol everywhere,
/// (b) log-log decay of the C^0 deviation norm with slope <= -(1 - 0.2).
pub fn check_convergence(
    snapshots: &[Snapshot],
    model: &HyperbolicModel,
    m: f64,
    tol: f64,
) -> Result<CheckVerdict> {
    let positive: Vec<&Snapshot> = snapshots.iter().filter(|s| s.t > 0.0).collect();
    if positive.len() < 3 {
        return Err(RicciError::Precondition(
            "convergence check needs >= 3 snapshots at t > 0".into(),
        ));
    }
    let (t_min, t_max) = (positive.first().unwrap().t, positive.last().unwrap().t);
    if t_max / t_min < 10.0 {
        return Err(RicciError::Precondition(format!(
            "time range [{t_min}, {t_max}] spans less than one decade"
        )));
    }
    let mut worst = 0.0f64;
    let mut loc = None;
    let mut log_t = Vec::new();
    let mut log_dev = Vec::new();
    for snap in &positive {
        let chart = snap.field.chart();
        let w = deviation_field(&snap.field, model, snap.t)?;
        for idx in chart.interior_clearance(1.0) {
            let v = (-w.value(idx)).max(w.value(idx) - m / (2.0 * snap.t));
            if v > worst {
                worst = v;
                loc = Some((snap.t, idx));
            }
        }
        let dev = deviation_norm(&snap.field, model, snap.t, 0)?;
        if dev > 0.0 {
            log_t.push(snap.t.ln());
            log_dev.push(dev.ln());
        }
    }
    let (slope, _) = fit_line(&log_t, &log_dev)?;
    let eta = 0.2;
    let passed = worst <= tol && slope <= -(1.0 - eta);
    Ok(CheckVerdict {
        name: "convergence".into(),
        passed,
        worst_violation: worst,
        worst_location: loc,
        fitted_rate: Some(slope),
        tolerance_used: tol,
    })
}

/// Empirical B with sup |K(t)| * t <= B over recorded steps with t >= delta.
/// Passes when B is finite and below `bound` (pass infinity to assert
/// existence only).
pub fn check_curvature_decay(traj: &Trajectory, delta: f64, bound: f64) -> CheckVerdict {
    let mut b = 0.0f64;
    let mut loc = None;
    for rec in &traj.series {
        if rec.t < delta {
            continue;
        }
        let v = rec.min_k.abs().max(rec.max_k.abs()) * rec.t;
        if v > b {
            b = v;
            loc = Some((rec.t, 0));
        }
    }
    CheckVerdict {
        name: "curvature_decay".into(),
        passed: b.is_finite() && b <= bound,
        worst_violation: b,
        worst_location: loc,
        fitted_rate: Some(b),
        tolerance_used: bound,
    }
}

/// Nodewise ordering u1 <= u2 preserved at all common sample times.
/// Preconditions: common chart and sample times, ordering at the first
/// snapshot.
pub fn check_comparison(traj1: &Trajectory, traj2: &Trajectory, tol: f64) -> Result<CheckVerdict> {
    if traj1.snapshots.len() != traj2.snapshots.len() || traj1.snapshots.is_empty() {
        return Err(RicciError::Precondition(
            "trajectories must share sample times".into(),
        ));
    }
    let chart = traj1.snapshots[0].field.chart().clone();
    traj1.snapshots[0]
        .field
        .require_same_chart(&traj2.snapshots[0].field)?;
    for (a, b) in traj1.snapshots.iter().zip(&traj2.snapshots) {
        if (a.t - b.t).abs() > 1e-9 {
            return Err(RicciError::Precondition(format!(
                "sample times differ: {} vs {}",
                a.t, b.t
            )));
        }
    }
    // initial ordering is a precondition, not a finding
    for idx in chart.interior() {
        if traj1.snapshots[0].field.value(idx) > traj2.snapshots[0].field.value(idx) + tol {
            return Err(RicciError::Precondition(format!(
                "initial ordering violated at node {idx}"
            )));
        }
    }
    let mut worst = 0.0f64;
    let mut loc = None;
    for (a, b) in traj1.snapshots.iter().zip(&traj2.snapshots) {
        for idx in chart.interior() {
            let gap = a.field.value(idx) - b.field.value(idx);
            if gap > worst {
                worst = gap;
                loc = Some((a.t, idx));
            }
        }
    }
    Ok(CheckVerdict::from_violation("comparison", worst, loc, tol))
}

/// Yau's Schwarz lemma for the identity conformal map: with measured bounds
/// K[f1] >= -a1 and K[f2] <= -a2 < 0 and f1 complete, u2 <= u1 + (1/2)log(a1/a2).
pub fn check_yau(
    f1: &ConformalField,
    f2: &ConformalField,
    a1: f64,
    a2: f64,
    tol: f64,
) -> Result<CheckVerdict> {
    f1.require_same_chart(f2)?;
    if !(a1 >= 0.0) || !(a2 > 0.0) {
        return Err(RicciError::Precondition(
            "need a1 >= 0 and a2 > 0".into(),
        ));
    }
    let chart = f1.chart().clone();
    let k1 = gauss_curvature(f1)?;
    let k2 = gauss_curvature(f2)?;
    for idx in chart.interior_clearance(2.0) {
        if k1.value(idx) < -a1 - tol {
            return Err(RicciError::Precondition(format!(
                "K[f1] = {} < -a1 at node {idx}",
                k1.value(idx)
            )));
        }
        if k2.value(idx) > -a2 + tol {
            return Err(RicciError::Precondition(format!(
                "K[f2] = {} > -a2 at node {idx}",
                k2.value(idx)
            )));
        }
    }
    let shift = 0.5 * (a1 / a2).ln();
    let mut worst = 0.0f64;
    let mut loc = None;
    for idx in chart.interior_clearance(2.0) {
        let gap = f2.value(idx) - f1.value(idx) - shift;
        if gap > worst {
            worst = gap;
            loc = Some((0.0, idx));
        }
    }
    Ok(CheckVerdict::from_violation("yau", worst, loc, tol))
}

/// Smallest empirical C with u(t,z) >= -C - log(|z| log|z|) + (1/2)log(2t)
/// on |z| in [2, 0.9 R] over all positive-time snapshots.
pub fn empirical_plane_constant(traj: &Trajectory) -> Result<f64> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| RicciError::Precondition("no snapshots".into()))?;
    let chart = first.field.chart().clone();
    let r_max = 0.9 * chart.extent();
    if r_max <= 2.0 {
        return Err(RicciError::Precondition(
            "chart too small for the exterior bound (need radius > 2e)".into(),
        ));
    }
    let mut c = f64::NEG_INFINITY;
    for snap in &traj.snapshots {
        if snap.t <= 0.0 {
            continue;
        }
        for idx in chart.interior() {
            let r = chart.radius(idx);
            if !(2.0..=r_max).contains(&r) {
                continue;
            }
            let needed = -(r * r.ln()).ln() + 0.5 * (2.0 * snap.t).ln() - snap.field.value(idx);
            c = c.max(needed);
        }
    }
    if c.is_finite() {
        Ok(c)
    } else {
        Err(RicciError::Precondition(
            "no nodes/snapshots in the exterior window".into(),
        ))
    }
}

/// Exterior lower bound: the empirical C must be finite for every supplied
/// trajectory and stable across them within `rel_tol` (grid refinement /
/// domain growth).
pub fn check_plane_lower_bound(trajs: &[&Trajectory], rel_tol: f64) -> Result<CheckVerdict> {
    if trajs.is_empty() {
        return Err(RicciError::Precondition("no trajectories".into()));
    }
    let cs: Vec<f64> = trajs
        .iter()
        .map(|t| empirical_plane_constant(t))
        .collect::<Result<_>>()?;
    let c_max = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c_min = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if cs.len() > 1 && c_max.abs() > 1e-12 {
        (c_max - c_min) / c_max.abs()
    } else {
        0.0
    };
    Ok(CheckVerdict {
        name: "plane_lower_bound".into(),
        passed: c_max.is_finite() && spread <= rel_tol,
        worst_violation: spread,
        worst_location: None,
        fitted_rate: Some(c_max),
        tolerance_used: rel_tol,
    })
}

/// Result of an order-of-accuracy study.
#[derive(Debug, Clone, Serialize)]
pub struct OrderFit {
    /// (dx, sup error at the final time) per grid level.
    pub points: Vec<(f64, f64)>,
    /// Fitted slope of log(error) vs log(dx); None when the errors sit at
    /// machine precision (degenerate case).
    pub order: Option<f64>,
}

/// Evolve an exact flow on >= 3 factor-2-refined grids with DirichletExact
/// data and fit the convergence order of the final-time sup error. For the
/// implicit scheme dt_max is scaled with (dx/dx_0)^2.
pub fn order_of_accuracy(
    flow: &ExactFlow,
    charts: &[Chart],
    control: &StepControl,
    t_window: (f64, f64),
) -> Result<OrderFit> {
    if charts.len() < 3 {
        return Err(RicciError::Precondition(
            "order fit needs >= 3 grid levels".into(),
        ));
    }
    let dx0 = charts[0].dx();
    let mut points = Vec::new();
    for chart in charts {
        let u0 = flow.eval(t_window.0, chart)?;
        let mut c = control.clone();
        let scale = chart.dx() / dx0;
        c.dt_max = control.dt_max * scale * scale;
        let traj = evolve(
            &u0,
            t_window.0,
            t_window.1,
            &[t_window.1],
            &c,
            &BoundaryPolicy::DirichletExact(*flow),
        )?;
        if let Some(msg) = &traj.failure {
            return Err(RicciError::Precondition(format!("level failed: {msg}")));
        }
        let snap = traj.final_state().unwrap();
        let exact = flow.eval(snap.t, chart)?;
        let err = chart
            .interior()
            .map(|i| (snap.field.value(i) - exact.value(i)).abs())
            .fold(0.0, f64::max);
        points.push((chart.dx(), err));
    }
    let degenerate = points.iter().all(|&(_, e)| e < 1e-12);
    let order = if degenerate {
        None
    } else {
        let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1.max(1e-300).ln()).collect();
        Some(fit_line(&xs, &ys)?.0)
    };
    Ok(OrderFit { points, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{evolve, StepControl};

    fn bigbang_traj() -> (Trajectory, HyperbolicModel) {
        let chart = Chart::radial(0.9, 101).unwrap();
        let m = HyperbolicModel::disc(1.0);
        let flow = ExactFlow::BigBang(m);
        let u0 = flow.eval(0.5, &chart).unwrap();
        let traj = evolve(
            &u0,
            0.5,
            1.0,
            &[0.5, 0.75, 1.0],
            &StepControl::explicit_rk2(1.0),
            &BoundaryPolicy::DirichletExact(flow),
        )
        .unwrap();
        (traj, m)
    }

    #[test]
    fn chen_saturates_on_bigbang() {
        let (traj, _) = bigbang_traj();
        // discrete K carries O(dx^2 (1-r^2)^{-2}) error near the boundary:
        // ~3e-3 at n = 101
        let v = check_chen(&traj, 5e-3);
        assert!(v.passed, "violation {}", v.worst_violation);
        // equality case: the bound is nearly attained
        let rec = traj.series.last().unwrap();
        assert!((rec.min_k + 1.0 / (2.0 * rec.t)).abs() < 5e-3);
    }

    #[test]
    fn chen_passes_trivially_positive_curvature() {
        let chart = Chart::radial(3.0, 101).unwrap();
        let flow = ExactFlow::ShrinkingSphere;
        let u0 = flow.eval(0.0, &chart).unwrap();
        let traj = evolve(
            &u0,
            0.0,
            0.2,
            &[0.2],
            &StepControl::explicit_rk2(1e-3),
            &BoundaryPolicy::DirichletExact(flow),
        )
        .unwrap();
        let v = check_chen(&traj, 1e-3);
        assert!(v.passed);
    }

    #[test]
    fn chen_strict_margin_expanding() {
        // K = -1/(2t+1) > -1/(2t): margin 1/(2t) - 1/(2t+1)
        let chart = Chart::radial(0.9, 101).unwrap();
        let m = HyperbolicModel::disc(1.0);
        let flow = ExactFlow::ExpandingHyperbolic(m, 1.0);
        let u0 = flow.eval(0.1, &chart).unwrap();
        let traj = evolve(
            &u0,
            0.1,
            0.5,
            &[0.5],
            &StepControl::explicit_rk2(1.0),
            &BoundaryPolicy::DirichletExact(flow),
        )
        .unwrap();
        let v = check_chen(&traj, 1e-6);
        assert!(v.passed);
        let rec = traj.series.last().unwrap();
        let margin = 1.0 / (2.0 * rec.t) - 1.0 / (2.0 * rec.t + 1.0);
        assert!(rec.min_k + 1.0 / (2.0 * rec.t) > 0.5 * margin);
    }

    #[test]
    fn barriers_pass_on_expanding_exact() {
        let chart = Chart::radial(0.9, 101).unwrap();
        let m = HyperbolicModel::disc(1.0);
        let big_m = 2.0;
        let flow = ExactFlow::ExpandingHyperbolic(m, big_m);
        let u0 = flow.eval(0.0, &chart).unwrap();
        let traj = evolve(
            &u0,
            0.0,
            0.5,
            &[0.0, 0.25, 0.5],
            &StepControl::explicit_rk2(1.0),
            &BoundaryPolicy::DirichletExact(flow),
        )
        .unwrap();
        let v = check_barriers(&traj, &m, big_m, 1e-3).unwrap();
        assert!(v.passed, "violation {}", v.worst_violation);
    }

    #[test]
    fn comparison_identical_trajectories() {
        let (traj, _) = bigbang_traj();
        let v = check_comparison(&traj, &traj, 0.0).unwrap();
        assert!(v.passed);
        assert_eq!(v.worst_violation, 0.0);
    }

    #[test]
    fn yau_equality_and_barrier_rearrangement() {
        let chart = Chart::radial(0.8, 201).unwrap();
        let h1 = HyperbolicModel::disc(1.0).eval(&chart).unwrap();
        let v = check_yau(&h1, &h1, 1.0, 1.0, 1e-2).unwrap();
        assert!(v.passed);
        assert!(v.worst_violation < 1e-10);

        // f1 = h + (1/2)log(2t) with a1 = 1/(2t), f2 = h with a2 = 1:
        // the lower-barrier rearrangement
        let t = 0.3f64;
        let bb = ConformalField::new(
            chart.clone(),
            h1.values().iter().map(|v| v + 0.5 * (2.0 * t).ln()).collect(),
        )
        .unwrap();
        let v = check_yau(&bb, &h1, 1.0 / (2.0 * t), 1.0, 1e-2).unwrap();
        assert!(v.passed, "violation {}", v.worst_violation);
    }

    #[test]
    fn yau_precondition_violation() {
        // f2 = h + 0.1 has K = -e^{-0.2} > -1: precondition error, not failure
        let chart = Chart::radial(0.8, 201).unwrap();
        let h1 = HyperbolicModel::disc(1.0).eval(&chart).unwrap();
        let f2 = ConformalField::new(
            chart.clone(),
            h1.values().iter().map(|v| v + 0.1).collect(),
        )
        .unwrap();
        assert!(check_yau(&h1, &f2, 1.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn volume_law_flat_vacuous() {
        let chart = Chart::radial(5.0, 101).unwrap();
        let u0 = ConformalField::constant(&chart, 0.0).unwrap();
        let traj = evolve(
            &u0,
            0.0,
            0.2,
            &[0.2],
            &StepControl::explicit_rk2(2e-3),
            &BoundaryPolicy::DirichletFrozen,
        )
        .unwrap();
        let v = check_volume_law(
            &traj,
            &TopologyTag::Plane {
                volume: f64::INFINITY,
            },
            (0.0, 0.2),
            0.01,
            1.0,
        )
        .unwrap();
        assert!(v.passed);
    }

    #[test]
    fn convergence_exact_expanding() {
        // deviation = M/(2t) exactly: slope -1, sandwich tight
        let chart = Chart::radial(0.9, 65).unwrap();
        let m = HyperbolicModel::disc(1.0);
        let big_m = 1.0;
        let flow = ExactFlow::ExpandingHyperbolic(m, big_m);
        let snaps: Vec<Snapshot> = [1.0, 2.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&t| Snapshot {
                t,
                field: flow.eval(t, &chart).unwrap(),
            })
            .collect();
        let v = check_convergence(&snaps, &m, big_m, 1e-9).unwrap();
        assert!(v.passed, "violation {}", v.worst_violation);
        let slope = v.fitted_rate.unwrap();
        assert!((slope + 1.0).abs() < 1e-6, "slope {slope}");
    }

    #[test]
    fn curvature_decay_exact_values() {
        let (traj, _) = bigbang_traj();
        // |K| t = 1/2 exactly for the big-bang
        let v = check_curvature_decay(&traj, 0.5, 0.51);
        assert!(v.passed);
        let b = v.fitted_rate.unwrap();
        assert!((b - 0.5).abs() < 5e-3, "B = {b}");
    }

    #[test]
    fn order_of_accuracy_bigbang_explicit() {
        let flow = ExactFlow::BigBang(HyperbolicModel::disc(1.0));
        let charts = [
            Chart::radial(0.9, 26).unwrap(),
            Chart::radial(0.9, 51).unwrap(),
            Chart::radial(0.9, 101).unwrap(),
        ];
        let fit = order_of_accuracy(
            &flow,
            &charts,
            &StepControl::explicit_rk2(1.0),
            (0.5, 0.8),
        )
        .unwrap();
        let order = fit.order.unwrap();
        assert!((order - 2.0).abs() <= 0.25, "order {order}");
    }

    #[test]
    fn order_of_accuracy_flat_degenerate() {
        let flow = ExactFlow::FlatStatic;
        let charts = [
            Chart::radial(1.0, 26).unwrap(),
            Chart::radial(1.0, 51).unwrap(),
            Chart::radial(1.0, 101).unwrap(),
        ];
        let fit = order_of_accuracy(
            &flow,
            &charts,
            &StepControl::explicit_rk2(1e-3),
            (0.0, 0.05),
        )
        .unwrap();
        assert!(fit.order.is_none());
    }

    #[test]
    fn plane_lower_bound_stable_under_refinement() {
        use crate::solver::plane_solve;
        let charts = [
            Chart::radial(20.0, 201).unwrap(),
            Chart::radial(20.0, 401).unwrap(),
        ];
        let u0 = |x: f64, y: f64| (2.0 / (1.0 + x * x + y * y)).ln();
        let control = StepControl::implicit_euler(2e-3);
        let res = plane_solve(&u0, &charts, 0.2, &[0.1, 0.2], &control).unwrap();
        let trajs: Vec<&Trajectory> = res.runs.iter().map(|r| &r.trajectory).collect();
        let v = check_plane_lower_bound(&trajs, 0.2).unwrap();
        assert!(v.passed, "spread {}", v.worst_violation);
        assert!(v.fitted_rate.unwrap().is_finite());
    }

    #[test]
    fn report_rejects_duplicates() {
        let mut rep = DiagnosticsReport::default();
        rep.push(CheckVerdict::from_violation("chen", 0.0, None, 1e-3))
            .unwrap();
        assert!(rep
            .push(CheckVerdict::from_violation("chen", 0.0, None, 1e-3))
            .is_err());
    }
}
