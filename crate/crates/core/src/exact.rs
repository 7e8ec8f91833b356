//! Closed-form Ricci flows used as solver oracles, boundary data and
//! barrier generators, plus the maximal-existence-time formula.

use crate::error::{Result, RicciError};
use crate::geometry::chart::{Chart, NodeStatus};
use crate::geometry::field::ConformalField;
use crate::geometry::hyperbolic::HyperbolicModel;
use crate::geometry::ops::laplacian;

/// Closed-form solutions of du/dt = e^{-2u} \Delta u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactFlow {
    /// u(t,z) = h(z) + (1/2) log(2t), t > 0. Curvature -1/(2t); the
    /// universal lower barrier (2t)H.
    BigBang(HyperbolicModel),
    /// u(t,z) = h(z) + (1/2) log(2t + M), t >= 0, M > 0. Curvature
    /// -1/(2t+M); the upper barrier (2t+M)H.
    ExpandingHyperbolic(HyperbolicModel, f64),
    /// u(t,z) = log(2/(1+|z|^2)) + (1/2) log(1-2t), t in [0, 1/2).
    /// Curvature +1/(1-2t); round-sphere factor restricted to the plane.
    ShrinkingSphere,
    /// u = 0 for all t; the static flat plane.
    FlatStatic,
}

impl ExactFlow {
    pub fn name(&self) -> String {
        match self {
            ExactFlow::BigBang(m) => format!("BigBang({m:?})"),
            ExactFlow::ExpandingHyperbolic(m, big_m) => {
                format!("ExpandingHyperbolic({m:?}, M={big_m})")
            }
            ExactFlow::ShrinkingSphere => "ShrinkingSphere".into(),
            ExactFlow::FlatStatic => "FlatStatic".into(),
        }
    }

    /// Whether `t` lies in the flow's time domain.
    pub fn time_in_domain(&self, t: f64) -> bool {
        match self {
            ExactFlow::BigBang(_) => t > 0.0,
            ExactFlow::ExpandingHyperbolic(_, m) => 2.0 * t + m > 0.0,
            ExactFlow::ShrinkingSphere => (0.0..0.5).contains(&t),
            ExactFlow::FlatStatic => true,
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if self.time_in_domain(t) {
            Ok(())
        } else {
            Err(RicciError::TimeOutOfDomain {
                flow: self.name(),
                t,
            })
        }
    }

    /// Conformal factor at chart radius |z|.
    pub fn at_radius(&self, t: f64, radius: f64) -> Result<f64> {
        self.check_time(t)?;
        match self {
            ExactFlow::BigBang(m) => Ok(m.at_radius(radius)? + 0.5 * (2.0 * t).ln()),
            ExactFlow::ExpandingHyperbolic(m, big_m) => {
                Ok(m.at_radius(radius)? + 0.5 * (2.0 * t + big_m).ln())
            }
            ExactFlow::ShrinkingSphere => {
                Ok((2.0 / (1.0 + radius * radius)).ln() + 0.5 * (1.0 - 2.0 * t).ln())
            }
            ExactFlow::FlatStatic => Ok(0.0),
        }
    }

    /// Exact Gaussian curvature at time t (spatially constant for all kinds).
    pub fn curvature(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self {
            ExactFlow::BigBang(_) => -1.0 / (2.0 * t),
            ExactFlow::ExpandingHyperbolic(_, m) => -1.0 / (2.0 * t + m),
            ExactFlow::ShrinkingSphere => 1.0 / (1.0 - 2.0 * t),
            ExactFlow::FlatStatic => 0.0,
        })
    }

    /// Exact samples of u(t, .) on the chart.
    pub fn eval(&self, t: f64, chart: &Chart) -> Result<ConformalField> {
        self.check_time(t)?;
        let mut u = vec![0.0; chart.num_nodes()];
        for (idx, v) in u.iter_mut().enumerate() {
            if chart.status(idx) != NodeStatus::Exterior {
                *v = self.at_radius(t, chart.radius(idx))?;
            }
        }
        ConformalField::new(chart.clone(), u)
    }
}

/// Sup over interior nodes of |du/dt - e^{-2u} \Delta_d u| with the time
/// derivative approximated by a central difference of half-width `delta`
/// (default dx^2). Measures the discretization residual of an exact flow.
pub fn pde_residual(
    flow: &ExactFlow,
    t: f64,
    chart: &Chart,
    delta: Option<f64>,
) -> Result<f64> {
    let dx = chart.dx();
    let delta = delta.unwrap_or(dx * dx);
    flow.check_time(t - delta)?;
    flow.check_time(t + delta)?;
    let u = flow.eval(t, chart)?;
    let u_plus = flow.eval(t + delta, chart)?;
    let u_minus = flow.eval(t - delta, chart)?;
    let lap = laplacian(&u)?;
    let mut worst = 0.0f64;
    for idx in chart.interior() {
        let dudt = (u_plus.value(idx) - u_minus.value(idx)) / (2.0 * delta);
        let rhs = (-2.0 * u.value(idx)).exp() * lap.value(idx);
        worst = worst.max((dudt - rhs).abs());
    }
    Ok(worst)
}

/// Conformal type of the underlying surface, with its initial volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyTag {
    Sphere { volume: f64 },
    Plane { volume: f64 },
    HyperbolicType,
}

/// Maximal existence time: Vol/(8 pi) on the sphere, Vol/(4 pi) on the
/// plane (infinite if the volume is), infinite for hyperbolic type.
pub fn maximal_time(tag: &TopologyTag) -> f64 {
    use std::f64::consts::PI;
    match *tag {
        TopologyTag::Sphere { volume } => volume / (8.0 * PI),
        TopologyTag::Plane { volume } => {
            if volume.is_infinite() {
                f64::INFINITY
            } else {
                volume / (4.0 * PI)
            }
        }
        TopologyTag::HyperbolicType => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eval_exact_point_values() {
        let bb = ExactFlow::BigBang(HyperbolicModel::disc(1.0));
        // t = 1/2: (1/2) log(2 * 1/2) = 0, so u(0) = log 2
        let v = bb.at_radius(0.5, 0.0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);

        let ss = ExactFlow::ShrinkingSphere;
        let v = ss.at_radius(0.25, 0.0).unwrap();
        assert!((v - (2f64.ln() + 0.5 * 0.5f64.ln())).abs() < 1e-15);
        assert!((v - 0.346574).abs() < 1e-6);

        let eh = ExactFlow::ExpandingHyperbolic(HyperbolicModel::disc(1.0), 1.0);
        let chart = Chart::radial(0.9, 33).unwrap();
        let f = eh.eval(0.0, &chart).unwrap();
        let h = HyperbolicModel::disc(1.0).eval(&chart).unwrap();
        for idx in 0..chart.num_nodes() {
            assert!((f.value(idx) - h.value(idx)).abs() < 1e-14);
        }
    }

    #[test]
    fn time_domain_enforced() {
        assert!(ExactFlow::BigBang(HyperbolicModel::disc(1.0))
            .at_radius(0.0, 0.0)
            .is_err());
        assert!(ExactFlow::ShrinkingSphere.at_radius(0.5, 0.0).is_err());
        assert!(ExactFlow::ShrinkingSphere.at_radius(-0.1, 0.0).is_err());
    }

    #[test]
    fn residual_flat_is_zero() {
        let chart = Chart::cartesian(2.0, 2.0, 17).unwrap();
        let r = pde_residual(&ExactFlow::FlatStatic, 1.0, &chart, None).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn residual_bigbang_small() {
        let chart = Chart::radial(0.9, 201).unwrap();
        let flow = ExactFlow::BigBang(HyperbolicModel::disc(1.0));
        let r = pde_residual(&flow, 1.0, &chart, None).unwrap();
        assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn residual_sphere_small() {
        let chart = Chart::cartesian(4.0, 4.0, 257).unwrap();
        let r = pde_residual(&ExactFlow::ShrinkingSphere, 0.2, &chart, None).unwrap();
        assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn residual_second_order() {
        let chart1 = Chart::radial(0.9, 101).unwrap();
        let chart2 = Chart::radial(0.9, 201).unwrap();
        let flow = ExactFlow::BigBang(HyperbolicModel::disc(1.0));
        let r1 = pde_residual(&flow, 1.0, &chart1, None).unwrap();
        let r2 = pde_residual(&flow, 1.0, &chart2, None).unwrap();
        let ratio = r1 / r2;
        assert!((3.0..6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn barrier_ordering_on_samples() {
        // (1/2)log(2t) <= (1/2)log(2t+M) <= (1/2)log(2t) + (1/2)log(1+M/2t)
        let chart = Chart::radial(0.9, 65).unwrap();
        let m = HyperbolicModel::disc(1.0);
        let big_m = 3.0;
        for &t in &[0.1, 1.0, 10.0] {
            let lower = ExactFlow::BigBang(m).eval(t, &chart).unwrap();
            let mid = ExactFlow::ExpandingHyperbolic(m, big_m)
                .eval(t, &chart)
                .unwrap();
            let shift = 0.5 * (1.0 + big_m / (2.0 * t)).ln();
            for idx in chart.interior() {
                assert!(lower.value(idx) <= mid.value(idx) + 1e-14);
                assert!(mid.value(idx) <= lower.value(idx) + shift + 1e-14);
            }
        }
    }

    #[test]
    fn maximal_time_cases() {
        let t = maximal_time(&TopologyTag::Sphere { volume: 4.0 * PI });
        assert!((t - 0.5).abs() < 1e-15);
        let t = maximal_time(&TopologyTag::Plane { volume: 4.0 * PI });
        assert!((t - 1.0).abs() < 1e-15);
        assert!(maximal_time(&TopologyTag::HyperbolicType).is_infinite());
        assert!(maximal_time(&TopologyTag::Plane {
            volume: f64::INFINITY
        })
        .is_infinite());
    }

    #[test]
    fn shrinking_sphere_truncated_volume() {
        use crate::geometry::ops::volume;
        let r_max = 6.0;
        let chart = Chart::radial(r_max, 601).unwrap();
        for &t in &[0.0, 0.2, 0.4] {
            let f = ExactFlow::ShrinkingSphere.eval(t, &chart).unwrap();
            let expected = 4.0 * PI * (1.0 - 2.0 * t) * (1.0 - 1.0 / (1.0 + r_max * r_max));
            let v = volume(&f);
            assert!(
                (v - expected).abs() < 1e-3 * 4.0 * PI,
                "t={t}: vol {v} vs {expected}"
            );
        }
    }
}
