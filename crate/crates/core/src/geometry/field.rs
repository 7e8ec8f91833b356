use crate::error::{Result, RicciError};
use crate::geometry::chart::{Chart, NodeStatus};

/// Samples of the conformal factor u on a chart; the metric is e^{2u}|dz|^2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalField {
    chart: Chart,
    u: Vec<f64>,
}

impl ConformalField {
    /// Wraps raw samples, checking length and finiteness. Exterior-node
    /// entries are zeroed (they never carry data).
    pub fn new(chart: Chart, mut u: Vec<f64>) -> Result<ConformalField> {
        if u.len() != chart.num_nodes() {
            return Err(RicciError::ChartMismatch);
        }
        for (idx, v) in u.iter_mut().enumerate() {
            match chart.status(idx) {
                NodeStatus::Exterior => *v = 0.0,
                _ => {
                    if !v.is_finite() {
                        return Err(RicciError::NonFiniteField { node: idx });
                    }
                }
            }
        }
        Ok(ConformalField { chart, u })
    }

    /// Pointwise construction from (x, y).
    pub fn from_fn(chart: &Chart, f: impl Fn(f64, f64) -> f64) -> Result<ConformalField> {
        let u = (0..chart.num_nodes())
            .map(|idx| {
                if chart.status(idx) == NodeStatus::Exterior {
                    0.0
                } else {
                    let (x, y) = chart.position(idx);
                    f(x, y)
                }
            })
            .collect();
        ConformalField::new(chart.clone(), u)
    }

    pub fn constant(chart: &Chart, c: f64) -> Result<ConformalField> {
        ConformalField::from_fn(chart, |_, _| c)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.u[idx]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn require_same_chart(&self, other: &ConformalField) -> Result<()> {
        if self.chart.same_chart(&other.chart) {
            Ok(())
        } else {
            Err(RicciError::ChartMismatch)
        }
    }

    /// sup over interior nodes of a node-indexed quantity.
    pub fn sup_interior(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.chart.interior().map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Outcome of the pointwise metric comparison g1 <= g2 (i.e. u1 <= u2).
#[derive(Debug, Clone, PartialEq)]
pub enum MetricOrder {
    OrderedLeq,
    Violated { max_gap: f64, node: usize },
}

/// Pointwise test of g1 <= g2 over interior nodes; reports the worst gap.
pub fn metric_order(f1: &ConformalField, f2: &ConformalField) -> Result<MetricOrder> {
    f1.require_same_chart(f2)?;
    let mut max_gap = 0.0;
    let mut worst = None;
    for idx in f1.chart().interior() {
        let gap = f1.value(idx) - f2.value(idx);
        if gap > max_gap {
            max_gap = gap;
            worst = Some(idx);
        }
    }
    Ok(match worst {
        None => MetricOrder::OrderedLeq,
        Some(node) => MetricOrder::Violated { max_gap, node },
    })
}
