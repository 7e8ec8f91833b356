use std::sync::Arc;

use crate::error::{Result, RicciError};

/// Classification of a grid node.
///
/// `Exterior` nodes (Cartesian only) lie on or outside the circular mask and
/// never carry data. `Boundary` nodes carry Dirichlet data; `Interior` nodes
/// are the ones evolved and the only ones entering sup/min reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
enum ChartKind {
    /// Radially symmetric chart on [0, rho], node r_i = i*dx, includes r = 0.
    Radial { rho: f64 },
    /// Uniform grid on [-half_width, half_width]^2 with circular mask of
    /// radius mask_radius <= half_width. Nodes with |z| >= mask_radius are
    /// exterior.
    Cartesian { half_width: f64, mask_radius: f64 },
}

#[derive(Debug, PartialEq)]
struct ChartInner {
    kind: ChartKind,
    n: usize,
    dx: f64,
    status: Vec<NodeStatus>,
}

/// Discretized domain: a radial interval or a masked Cartesian box.
///
/// Immutable after construction; cloning is cheap (shared storage).
#[derive(Debug, Clone)]
pub struct Chart {
    inner: Arc<ChartInner>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

impl Chart {
    /// Radial chart of outer radius `rho` with `n` nodes (r = 0 included,
    /// outermost node is the Dirichlet boundary).
    pub fn radial(rho: f64, n: usize) -> Result<Chart> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(RicciError::InvalidChart(format!(
                "radial extent must be positive and finite, got {rho}"
            )));
        }
        if n < 3 {
            return Err(RicciError::ChartTooSmall { min: 3, got: n });
        }
        let dx = rho / (n - 1) as f64;
        let mut status = vec![NodeStatus::Interior; n];
        status[n - 1] = NodeStatus::Boundary;
        Ok(Chart {
            inner: Arc::new(ChartInner {
                kind: ChartKind::Radial { rho },
                n,
                dx,
                status,
            }),
        })
    }

    /// Cartesian chart on [-half_width, half_width]^2, n nodes per axis,
    /// circular mask of radius `mask_radius` <= half_width. Interior nodes
    /// lie strictly inside the mask with all four neighbours inside; inside
    /// nodes with an exterior neighbour form the Dirichlet boundary layer.
    pub fn cartesian(half_width: f64, mask_radius: f64, n: usize) -> Result<Chart> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(RicciError::InvalidChart(format!(
                "half-width must be positive and finite, got {half_width}"
            )));
        }
        if !(mask_radius > 0.0) || mask_radius > half_width {
            return Err(RicciError::InvalidChart(format!(
                "mask radius must satisfy 0 < rho <= half-width, got {mask_radius}"
            )));
        }
        if n < 3 {
            return Err(RicciError::ChartTooSmall { min: 3, got: n });
        }
        let dx = 2.0 * half_width / (n - 1) as f64;
        let coord = |i: usize| -half_width + i as f64 * dx;
        let inside = |i: usize, j: usize| {
            let (x, y) = (coord(i), coord(j));
            (x * x + y * y).sqrt() < mask_radius
        };
        let mut status = vec![NodeStatus::Exterior; n * n];
        for j in 0..n {
            for i in 0..n {
                if !inside(i, j) {
                    continue;
                }
                // Inside nodes on the grid edge can only occur when the mask
                // touches the box; treat them as boundary.
                let interior = i > 0
                    && i + 1 < n
                    && j > 0
                    && j + 1 < n
                    && inside(i - 1, j)
                    && inside(i + 1, j)
                    && inside(i, j - 1)
                    && inside(i, j + 1);
                status[j * n + i] = if interior {
                    NodeStatus::Interior
                } else {
                    NodeStatus::Boundary
                };
            }
        }
        if !status.contains(&NodeStatus::Interior) {
            return Err(RicciError::InvalidChart(
                "mask too small: chart has no interior node".into(),
            ));
        }
        Ok(Chart {
            inner: Arc::new(ChartInner {
                kind: ChartKind::Cartesian {
                    half_width,
                    mask_radius,
                },
                n,
                dx,
                status,
            }),
        })
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.inner.kind, ChartKind::Radial { .. })
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Uniform grid spacing.
    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Total node count (n for radial, n^2 for Cartesian).
    pub fn num_nodes(&self) -> usize {
        self.inner.status.len()
    }

    /// Radius of the conformal boundary circle: the radial extent, or the
    /// Cartesian mask radius.
    pub fn extent(&self) -> f64 {
        match self.inner.kind {
            ChartKind::Radial { rho } => rho,
            ChartKind::Cartesian { mask_radius, .. } => mask_radius,
        }
    }

    /// Cartesian box half-width (equals the extent for radial charts).
    pub fn half_width(&self) -> f64 {
        match self.inner.kind {
            ChartKind::Radial { rho } => rho,
            ChartKind::Cartesian { half_width, .. } => half_width,
        }
    }

    pub fn status(&self, idx: usize) -> NodeStatus {
        self.inner.status[idx]
    }

    /// |z| at the node.
    pub fn radius(&self, idx: usize) -> f64 {
        match self.inner.kind {
            ChartKind::Radial { .. } => idx as f64 * self.inner.dx,
            ChartKind::Cartesian { half_width, .. } => {
                let n = self.inner.n;
                let (i, j) = (idx % n, idx / n);
                let x = -half_width + i as f64 * self.inner.dx;
                let y = -half_width + j as f64 * self.inner.dx;
                (x * x + y * y).sqrt()
            }
        }
    }

    /// (x, y) position; radial nodes sit on the positive x-axis.
    pub fn position(&self, idx: usize) -> (f64, f64) {
        match self.inner.kind {
            ChartKind::Radial { .. } => (idx as f64 * self.inner.dx, 0.0),
            ChartKind::Cartesian { half_width, .. } => {
                let n = self.inner.n;
                let (i, j) = (idx % n, idx / n);
                (
                    -half_width + i as f64 * self.inner.dx,
                    -half_width + j as f64 * self.inner.dx,
                )
            }
        }
    }

    /// Squared integer lattice radius for Cartesian nodes (exact annulus
    /// key), or the node index for radial charts.
    pub fn lattice_radius_sq(&self, idx: usize) -> i64 {
        match self.inner.kind {
            ChartKind::Radial { .. } => (idx as i64) * (idx as i64),
            ChartKind::Cartesian { .. } => {
                let n = self.inner.n as i64;
                let (i, j) = ((idx as i64) % n, (idx as i64) / n);
                // Doubled offsets keep the key integral for even n too.
                let (di, dj) = (2 * i - (n - 1), 2 * j - (n - 1));
                di * di + dj * dj
            }
        }
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        self.inner
            .status
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == NodeStatus::Interior)
            .map(|(i, _)| i)
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        self.inner
            .status
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == NodeStatus::Boundary)
            .map(|(i, _)| i)
    }

    /// Interior nodes at distance >= `cells * dx` from the conformal
    /// boundary circle. Inequality checks quantify over these to exclude the
    /// Dirichlet layer.
    pub fn interior_clearance(&self, cells: f64) -> impl Iterator<Item = usize> + '_ {
        let cut = self.extent() - cells * self.dx();
        self.interior().filter(move |&i| self.radius(i) <= cut)
    }

    pub fn same_chart(&self, other: &Chart) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_chart_basics() {
        let c = Chart::radial(0.9, 10).unwrap();
        assert_eq!(c.num_nodes(), 10);
        assert!((c.dx() - 0.1).abs() < 1e-15);
        assert_eq!(c.status(0), NodeStatus::Interior);
        assert_eq!(c.status(9), NodeStatus::Boundary);
        assert_eq!(c.interior().count(), 9);
        assert_eq!(c.radius(0), 0.0);
    }

    #[test]
    fn cartesian_mask_classification() {
        let c = Chart::cartesian(1.0, 1.0, 21).unwrap();
        for idx in 0..c.num_nodes() {
            match c.status(idx) {
                NodeStatus::Exterior => assert!(c.radius(idx) >= 1.0 - 1e-12),
                NodeStatus::Interior | NodeStatus::Boundary => assert!(c.radius(idx) < 1.0),
            }
        }
        // every interior node has four non-exterior neighbours
        let n = c.n();
        for idx in c.interior() {
            for nb in [idx - 1, idx + 1, idx - n, idx + n] {
                assert_ne!(c.status(nb), NodeStatus::Exterior);
            }
        }
    }

    #[test]
    fn rejects_degenerate_charts() {
        assert!(Chart::radial(0.0, 10).is_err());
        assert!(Chart::radial(1.0, 2).is_err());
        assert!(Chart::cartesian(1.0, 1.5, 10).is_err());
    }
}
