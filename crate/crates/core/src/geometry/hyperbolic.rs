use crate::error::{Result, RicciError};
use crate::geometry::chart::{Chart, NodeStatus};
use crate::geometry::field::ConformalField;

/// Model hyperbolic metrics e^{2h}|dz|^2 of constant curvature -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperbolicModel {
    /// h_r(z) = log(2r / (r^2 - |z|^2)) on the disc |z| < r.
    DiscOfRadius(f64),
    /// h(z) = -log(|z| log|z|) on |z| > 1.
    ExteriorOfUnitDisc,
}

impl HyperbolicModel {
    pub fn disc(r: f64) -> HyperbolicModel {
        HyperbolicModel::DiscOfRadius(r)
    }

    fn name(&self) -> String {
        match self {
            HyperbolicModel::DiscOfRadius(r) => format!("DiscOfRadius({r})"),
            HyperbolicModel::ExteriorOfUnitDisc => "ExteriorOfUnitDisc".into(),
        }
    }

    /// Conformal factor at radius |z|, or a domain error.
    pub fn at_radius(&self, radius: f64) -> Result<f64> {
        match *self {
            HyperbolicModel::DiscOfRadius(r) => {
                if radius < r {
                    Ok((2.0 * r / (r * r - radius * radius)).ln())
                } else {
                    Err(RicciError::OutsideModelDomain {
                        model: self.name(),
                        radius,
                    })
                }
            }
            HyperbolicModel::ExteriorOfUnitDisc => {
                if radius > 1.0 {
                    Ok(-(radius * radius.ln()).ln())
                } else {
                    Err(RicciError::OutsideModelDomain {
                        model: self.name(),
                        radius,
                    })
                }
            }
        }
    }

    pub fn at(&self, x: f64, y: f64) -> Result<f64> {
        self.at_radius((x * x + y * y).sqrt())
    }

    /// Exact pointwise evaluation on every non-exterior chart node.
    /// Fails if any such node lies on or outside the conformal boundary.
    pub fn eval(&self, chart: &Chart) -> Result<ConformalField> {
        let mut u = vec![0.0; chart.num_nodes()];
        for (idx, v) in u.iter_mut().enumerate() {
            if chart.status(idx) != NodeStatus::Exterior {
                *v = self.at_radius(chart.radius(idx))?;
            }
        }
        ConformalField::new(chart.clone(), u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_model_at_center() {
        let m = HyperbolicModel::disc(1.0);
        assert!((m.at(0.0, 0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let m = HyperbolicModel::disc(0.5);
        assert!((m.at(0.0, 0.0).unwrap() - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn exterior_model_at_e() {
        let m = HyperbolicModel::ExteriorOfUnitDisc;
        let v = m.at_radius(std::f64::consts::E).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_violations() {
        assert!(HyperbolicModel::disc(0.5).at_radius(0.5).is_err());
        assert!(HyperbolicModel::ExteriorOfUnitDisc.at_radius(1.0).is_err());
        // chart reaching the conformal boundary is rejected
        let chart = Chart::radial(1.0, 11).unwrap();
        assert!(HyperbolicModel::disc(1.0).eval(&chart).is_err());
    }
}
