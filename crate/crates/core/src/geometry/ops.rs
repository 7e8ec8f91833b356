use std::f64::consts::PI;

use crate::error::{Result, RicciError};
use crate::geometry::chart::{Chart, NodeStatus};
use crate::geometry::field::ConformalField;
use crate::geometry::hyperbolic::HyperbolicModel;

/// Second-order discrete Laplacian written into `out`; non-interior entries
/// are zeroed. Radial charts use u_rr + u_r/r with the removable-singularity
/// closure 4(u_1 - u_0)/dx^2 at r = 0.
pub(crate) fn laplacian_into(chart: &Chart, u: &[f64], out: &mut [f64]) {
    let dx = chart.dx();
    let inv_dx2 = 1.0 / (dx * dx);
    if chart.is_radial() {
        let n = chart.n();
        out[0] = 4.0 * (u[1] - u[0]) * inv_dx2;
        for i in 1..n - 1 {
            let r = i as f64 * dx;
            out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2
                + (u[i + 1] - u[i - 1]) / (2.0 * dx * r);
        }
        out[n - 1] = 0.0;
    } else {
        let n = chart.n();
        for idx in 0..u.len() {
            out[idx] = if chart.status(idx) == NodeStatus::Interior {
                (u[idx - 1] + u[idx + 1] + u[idx - n] + u[idx + n] - 4.0 * u[idx]) * inv_dx2
            } else {
                0.0
            };
        }
    }
}

/// Discrete Laplacian of a field; boundary nodes carry zero and are excluded
/// from reductions by convention.
pub fn laplacian(f: &ConformalField) -> Result<ConformalField> {
    let chart = f.chart();
    if chart.n() < 3 {
        return Err(RicciError::ChartTooSmall {
            min: 3,
            got: chart.n(),
        });
    }
    let mut out = vec![0.0; chart.num_nodes()];
    laplacian_into(chart, f.values(), &mut out);
    ConformalField::new(chart.clone(), out)
}

/// Gaussian curvature K = -e^{-2u} \Delta u at interior nodes.
pub fn gauss_curvature(f: &ConformalField) -> Result<ConformalField> {
    let lap = laplacian(f)?;
    let chart = f.chart();
    let k = (0..chart.num_nodes())
        .map(|idx| {
            if chart.status(idx) == NodeStatus::Interior {
                -(-2.0 * f.value(idx)).exp() * lap.value(idx)
            } else {
                0.0
            }
        })
        .collect();
    ConformalField::new(chart.clone(), k)
}

/// Total area \int e^{2u} dA over the chart. Radial charts use the midpoint
/// rule on 2\pi \int e^{2u} r dr; Cartesian charts sum e^{2u} dx^2 over
/// in-mask nodes.
pub fn volume(f: &ConformalField) -> f64 {
    let chart = f.chart();
    let dx = chart.dx();
    if chart.is_radial() {
        let u = f.values();
        let n = chart.n();
        let mut acc = 0.0;
        for i in 0..n - 1 {
            let r_mid = (i as f64 + 0.5) * dx;
            let u_mid = 0.5 * (u[i] + u[i + 1]);
            acc += (2.0 * u_mid).exp() * r_mid * dx;
        }
        2.0 * PI * acc
    } else {
        let cell = dx * dx;
        (0..chart.num_nodes())
            .filter(|&idx| chart.status(idx) != NodeStatus::Exterior)
            .map(|idx| (2.0 * f.value(idx)).exp() * cell)
            .sum()
    }
}

/// Pointwise deviation scalar w = (1/2t) e^{2(u - h)} - 1, the conformal
/// expression of (1/2t) g(t) - H relative to H.
pub fn deviation_field(f: &ConformalField, m: &HyperbolicModel, t: f64) -> Result<ConformalField> {
    if !(t > 0.0) {
        return Err(RicciError::Precondition(format!(
            "deviation requires t > 0, got {t}"
        )));
    }
    let chart = f.chart();
    let mut w = vec![0.0; chart.num_nodes()];
    for (idx, v) in w.iter_mut().enumerate() {
        if chart.status(idx) != NodeStatus::Exterior {
            let h = m.at_radius(chart.radius(idx))?;
            *v = (2.0 * (f.value(idx) - h)).exp() / (2.0 * t) - 1.0;
        }
    }
    ConformalField::new(chart.clone(), w)
}

/// C^0 (k = 0) or C^1 (k = 1) norm of (1/2t) g(t) - H measured against H.
/// k = 1 adds the sup of the H-gradient magnitude e^{-h} |Dw| computed by
/// central first differences.
pub fn deviation_norm(
    f: &ConformalField,
    m: &HyperbolicModel,
    t: f64,
    k: u8,
) -> Result<f64> {
    let w = deviation_field(f, m, t)?;
    let chart = f.chart();
    let c0 = chart
        .interior()
        .map(|idx| w.value(idx).abs())
        .fold(0.0, f64::max);
    if k == 0 {
        return Ok(c0);
    }
    let dx = chart.dx();
    let mut c1 = 0.0f64;
    if chart.is_radial() {
        for i in chart.interior() {
            // dw/dr = 0 at the axis by symmetry
            let grad = if i == 0 {
                0.0
            } else {
                (w.value(i + 1) - w.value(i - 1)).abs() / (2.0 * dx)
            };
            let h = m.at_radius(chart.radius(i))?;
            c1 = c1.max((-h).exp() * grad);
        }
    } else {
        let n = chart.n();
        for idx in chart.interior() {
            let gx = (w.value(idx + 1) - w.value(idx - 1)) / (2.0 * dx);
            let gy = (w.value(idx + n) - w.value(idx - n)) / (2.0 * dx);
            let h = m.at_radius(chart.radius(idx))?;
            c1 = c1.max((-h).exp() * (gx * gx + gy * gy).sqrt());
        }
    }
    Ok(c0 + c1)
}
