//! Single-step advancement: explicit RK2 under a CFL bound, or implicit
//! Euler with Newton and a monotone (M-matrix) linearization.

use crate::error::{Result, RicciError};
use crate::geometry::chart::Chart;
use crate::geometry::field::ConformalField;
use crate::geometry::ops::laplacian_into;

use super::{BoundaryEval, FlowState, Scheme, StepControl};

pub(crate) fn advance(
    state: &mut FlowState,
    control: &StepControl,
    beval: &BoundaryEval,
    drift: f64,
    remaining: f64,
) -> Result<()> {
    let chart = state.field.chart().clone();
    let (new_u, dt) = match control.scheme {
        Scheme::ExplicitRk2 => explicit_rk2(&chart, state, control, beval, drift, remaining)?,
        Scheme::ImplicitEuler => implicit_euler(&chart, state, control, beval, drift, remaining)?,
    };
    state.field = ConformalField::new(chart, new_u)?;
    state.t += dt;
    state.dt_last = dt;
    state.steps_taken += 1;
    Ok(())
}

fn explicit_rk2(
    chart: &Chart,
    state: &FlowState,
    control: &StepControl,
    beval: &BoundaryEval,
    drift: f64,
    remaining: f64,
) -> Result<(Vec<f64>, f64)> {
    let u = state.field.values();
    let n = chart.num_nodes();
    let dx = chart.dx();

    let d_max = chart
        .interior()
        .map(|idx| (-2.0 * u[idx]).exp())
        .fold(0.0, f64::max);
    let bound = control.cfl_safety * dx * dx / (4.0 * d_max);
    if bound < control.dt_min {
        return Err(RicciError::CflCollapse {
            bound,
            dt_min: control.dt_min,
        });
    }
    let dt = control.dt_max.min(bound).min(remaining);
    let t_new = state.t + dt;

    let mut lap = vec![0.0; n];
    laplacian_into(chart, u, &mut lap);
    let mut k1 = vec![0.0; n];
    for idx in chart.interior() {
        k1[idx] = (-2.0 * u[idx]).exp() * lap[idx] - drift;
    }

    let mut u_star = u.to_vec();
    for idx in chart.interior() {
        u_star[idx] += dt * k1[idx];
    }
    beval.apply(chart, &mut u_star, t_new)?;

    laplacian_into(chart, &u_star, &mut lap);
    let mut out = u.to_vec();
    for idx in chart.interior() {
        let k2 = (-2.0 * u_star[idx]).exp() * lap[idx] - drift;
        out[idx] += 0.5 * dt * (k1[idx] + k2);
    }
    beval.apply(chart, &mut out, t_new)?;
    Ok((out, dt))
}

/// Off-diagonal Laplacian stencil weights for a radial node: (sub, sup).
fn radial_weights(i: usize, dx: f64) -> (f64, f64) {
    let inv_dx2 = 1.0 / (dx * dx);
    if i == 0 {
        (0.0, 4.0 * inv_dx2)
    } else {
        let r = i as f64 * dx;
        (inv_dx2 - 1.0 / (2.0 * dx * r), inv_dx2 + 1.0 / (2.0 * dx * r))
    }
}

fn radial_diag(i: usize, dx: f64) -> f64 {
    let inv_dx2 = 1.0 / (dx * dx);
    if i == 0 {
        -4.0 * inv_dx2
    } else {
        -2.0 * inv_dx2
    }
}

/// Residual of the implicit system,
/// G_i = e^{2u_i} (u_i - a_i + dt * drift) - dt (L u)_i
/// on interior nodes (zero elsewhere).
fn residual(
    chart: &Chart,
    u: &[f64],
    a: &[f64],
    dt: f64,
    drift: f64,
    lap: &mut [f64],
    g: &mut [f64],
) -> f64 {
    laplacian_into(chart, u, lap);
    let mut norm = 0.0f64;
    for v in g.iter_mut() {
        *v = 0.0;
    }
    for idx in chart.interior() {
        let gi = (2.0 * u[idx]).exp() * (u[idx] - a[idx] + dt * drift) - dt * lap[idx];
        g[idx] = gi;
        norm = norm.max(gi.abs());
    }
    norm
}

fn implicit_euler(
    chart: &Chart,
    state: &FlowState,
    control: &StepControl,
    beval: &BoundaryEval,
    drift: f64,
    remaining: f64,
) -> Result<(Vec<f64>, f64)> {
    let a = state.field.values();
    let n = chart.num_nodes();
    let dt = control.dt_max.min(remaining);
    let t_new = state.t + dt;

    let mut u = a.to_vec();
    beval.apply(chart, &mut u, t_new)?;

    let mut lap = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut g_norm = residual(chart, &u, a, dt, drift, &mut lap, &mut g);

    for iter in 0..control.newton_max_iters {
        if g_norm == 0.0 {
            return Ok((u, dt));
        }
        for v in delta.iter_mut() {
            *v = 0.0;
        }
        if chart.is_radial() {
            solve_tridiagonal(chart, &u, a, dt, drift, &g, &mut delta);
        } else {
            solve_gauss_seidel(chart, &u, a, dt, drift, &g, &mut delta).map_err(|_| {
                RicciError::NewtonDiverged {
                    iters: iter,
                    residual: g_norm,
                }
            })?;
        }

        // damped update: halve the step while the residual grows
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial = u.clone();
            for idx in chart.interior() {
                trial[idx] += scale * delta[idx];
            }
            let trial_norm = residual(chart, &trial, a, dt, drift, &mut lap, &mut g);
            if trial_norm <= g_norm || trial_norm < control.newton_tol {
                u = trial;
                g_norm = trial_norm;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(RicciError::NewtonDiverged {
                iters: iter + 1,
                residual: g_norm,
            });
        }
        let step_norm = chart
            .interior()
            .map(|idx| (scale * delta[idx]).abs())
            .fold(0.0, f64::max);
        if step_norm < control.newton_tol {
            return Ok((u, dt));
        }
    }
    Err(RicciError::NewtonDiverged {
        iters: control.newton_max_iters,
        residual: g_norm,
    })
}

/// Newton diagonal: d/du_i of e^{2u_i}(u_i - a_i + dt*drift).
fn newton_diag_term(u: f64, a: f64, dt: f64, drift: f64) -> f64 {
    (2.0 * u).exp() * (1.0 + 2.0 * (u - a + dt * drift))
}

/// Direct Thomas solve of J delta = -G on the contiguous radial interior
/// (indices 0..n-2).
fn solve_tridiagonal(
    chart: &Chart,
    u: &[f64],
    a: &[f64],
    dt: f64,
    drift: f64,
    g: &[f64],
    delta: &mut [f64],
) {
    let n = chart.n();
    let m = n - 1; // interior count
    let dx = chart.dx();
    let mut diag = vec![0.0; m];
    let mut sub = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let (w_sub, w_sup) = radial_weights(i, dx);
        diag[i] = newton_diag_term(u[i], a[i], dt, drift) - dt * radial_diag(i, dx);
        sub[i] = -dt * w_sub;
        // the coupling to the boundary node (i = m-1, neighbour m) drops:
        // boundary delta is zero
        sup[i] = if i + 1 < m { -dt * w_sup } else { 0.0 };
        rhs[i] = -g[i];
    }
    // forward elimination
    for i in 1..m {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    delta[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        delta[i] = (rhs[i] - sup[i] * delta[i + 1]) / diag[i];
    }
}

const GS_MAX_SWEEPS: usize = 20_000;

/// Gauss-Seidel solve of J delta = -G on the Cartesian interior. The system
/// is strictly diagonally dominant for parabolic dt, so sweeps contract.
fn solve_gauss_seidel(
    chart: &Chart,
    u: &[f64],
    a: &[f64],
    dt: f64,
    drift: f64,
    g: &[f64],
    delta: &mut [f64],
) -> std::result::Result<(), ()> {
    let n = chart.n();
    let dx = chart.dx();
    let inv_dx2 = 1.0 / (dx * dx);
    let interior: Vec<usize> = chart.interior().collect();
    let g_norm = interior.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
    let target = (1e-4 * g_norm).max(1e-16);
    for _ in 0..GS_MAX_SWEEPS {
        let mut res = 0.0f64;
        for &idx in &interior {
            let diag = newton_diag_term(u[idx], a[idx], dt, drift) + 4.0 * dt * inv_dx2;
            let off = dt
                * inv_dx2
                * (delta[idx - 1] + delta[idx + 1] + delta[idx - n] + delta[idx + n]);
            let new = (-g[idx] + off) / diag;
            res = res.max((new - delta[idx]).abs() * diag.abs());
            delta[idx] = new;
        }
        if res <= target {
            return Ok(());
        }
    }
    Err(())
}
