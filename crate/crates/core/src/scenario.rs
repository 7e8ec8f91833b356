//! TOML scenario schema: a declarative description of one flow run
//! (chart, initial data, boundary policy, time window, step control,
//! checks to evaluate, output location).

use serde::{Deserialize, Serialize};

use crate::error::{Result, RicciError};
use crate::exact::ExactFlow;
use crate::geometry::chart::Chart;
use crate::geometry::field::ConformalField;
use crate::geometry::hyperbolic::HyperbolicModel;
use crate::solver::{BoundaryPolicy, Scheme, StepControl};

/// Serializable mirror of `Chart` (which shares storage and is not serialized
/// directly). Used in scenario files and snapshot JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    Radial {
        radius: f64,
        n: usize,
    },
    Cartesian {
        half_width: f64,
        mask_radius: f64,
        n: usize,
    },
}

impl ChartSpec {
    pub fn build(&self) -> Result<Chart> {
        match *self {
            ChartSpec::Radial { radius, n } => Chart::radial(radius, n),
            ChartSpec::Cartesian {
                half_width,
                mask_radius,
                n,
            } => Chart::cartesian(half_width, mask_radius, n),
        }
    }

    pub fn of(chart: &Chart) -> ChartSpec {
        if chart.is_radial() {
            ChartSpec::Radial {
                radius: chart.extent(),
                n: chart.n(),
            }
        } else {
            ChartSpec::Cartesian {
                half_width: chart.half_width(),
                mask_radius: chart.extent(),
                n: chart.n(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Disc { radius: f64 },
    ExteriorOfUnitDisc,
}

impl ModelSpec {
    pub fn build(&self) -> HyperbolicModel {
        match *self {
            ModelSpec::Disc { radius } => HyperbolicModel::disc(radius),
            ModelSpec::ExteriorOfUnitDisc => HyperbolicModel::ExteriorOfUnitDisc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowSpec {
    BigBang { model: ModelSpec },
    ExpandingHyperbolic { model: ModelSpec, m: f64 },
    ShrinkingSphere,
    FlatStatic,
}

impl FlowSpec {
    pub fn build(&self) -> ExactFlow {
        match *self {
            FlowSpec::BigBang { model } => ExactFlow::BigBang(model.build()),
            FlowSpec::ExpandingHyperbolic { model, m } => {
                ExactFlow::ExpandingHyperbolic(model.build(), m)
            }
            FlowSpec::ShrinkingSphere => ExactFlow::ShrinkingSphere,
            FlowSpec::FlatStatic => ExactFlow::FlatStatic,
        }
    }
}

/// Optional additive Gaussian perturbation of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub amplitude: f64,
    #[serde(default)]
    pub center: [f64; 2],
    pub width: f64,
}

impl BumpSpec {
    fn at(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        self.amplitude * (-(dx * dx + dy * dy) / (self.width * self.width)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Exact flow evaluated at t0.
    Exact {
        flow: FlowSpec,
        #[serde(default)]
        bump: Option<BumpSpec>,
    },
    /// u = c everywhere.
    Flat {
        #[serde(default)]
        value: f64,
        #[serde(default)]
        bump: Option<BumpSpec>,
    },
    /// u = h + (1/2) log M: constant multiple M of the model metric.
    HyperbolicMultiple {
        model: ModelSpec,
        m: f64,
        #[serde(default)]
        bump: Option<BumpSpec>,
    },
    /// Round-sphere factor u = log(2 / (1 + |z|^2)).
    SphereFactor {
        #[serde(default)]
        bump: Option<BumpSpec>,
    },
}

impl InitialSpec {
    pub fn build(&self, chart: &Chart, t0: f64) -> Result<ConformalField> {
        let bump = match self {
            InitialSpec::Exact { bump, .. }
            | InitialSpec::Flat { bump, .. }
            | InitialSpec::HyperbolicMultiple { bump, .. }
            | InitialSpec::SphereFactor { bump } => *bump,
        };
        let base = match self {
            InitialSpec::Exact { flow, .. } => flow.build().eval(t0, chart)?,
            InitialSpec::Flat { value, .. } => ConformalField::constant(chart, *value)?,
            InitialSpec::HyperbolicMultiple { model, m, .. } => {
                if !(*m > 0.0) {
                    return Err(RicciError::Config(format!(
                        "hyperbolic multiple must be positive, got {m}"
                    )));
                }
                let h = model.build();
                let shift = 0.5 * m.ln();
                ConformalField::from_fn(chart, |x, y| {
                    h.at(x, y).map(|v| v + shift).unwrap_or(f64::NAN)
                })
                .map_err(|_| {
                    RicciError::Config("chart extends outside the model domain".into())
                })?
            }
            InitialSpec::SphereFactor { .. } => {
                ConformalField::from_fn(chart, |x, y| (2.0 / (1.0 + x * x + y * y)).ln())?
            }
        };
        match bump {
            None => Ok(base),
            Some(b) => {
                let chart = base.chart().clone();
                let vals = (0..chart.num_nodes())
                    .map(|idx| {
                        let (x, y) = chart.position(idx);
                        base.value(idx) + b.at(x, y)
                    })
                    .collect();
                ConformalField::new(chart, vals)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Exact { flow: FlowSpec },
    Barrier { model: ModelSpec, m: f64 },
    Frozen,
}

impl BoundarySpec {
    pub fn build(&self) -> BoundaryPolicy {
        match self {
            BoundarySpec::Exact { flow } => BoundaryPolicy::DirichletExact(flow.build()),
            BoundarySpec::Barrier { model, m } => BoundaryPolicy::DirichletBarrier {
                model: model.build(),
                m: *m,
            },
            BoundarySpec::Frozen => BoundaryPolicy::DirichletFrozen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t0: f64,
    pub t_end: f64,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    /// When set the run evolves the normalized flow in slow time s,
    /// t(s) = e^{2s}/2; t0/t_end/sample_times are then s-values.
    #[serde(default)]
    pub normalized: bool,
}

fn default_cfl() -> f64 {
    0.2
}

fn default_newton_tol() -> f64 {
    1e-10
}

fn default_newton_iters() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    ExplicitRk2 {
        dt_max: f64,
        #[serde(default = "default_cfl")]
        cfl_safety: f64,
        #[serde(default)]
        dt_min: f64,
    },
    ImplicitEuler {
        dt: f64,
        #[serde(default = "default_newton_tol")]
        newton_tol: f64,
        #[serde(default = "default_newton_iters")]
        newton_max_iters: usize,
    },
}

impl StepSpec {
    pub fn build(&self) -> StepControl {
        match *self {
            StepSpec::ExplicitRk2 {
                dt_max,
                cfl_safety,
                dt_min,
            } => StepControl {
                scheme: Scheme::ExplicitRk2,
                cfl_safety,
                dt_max,
                dt_min,
                newton_tol: default_newton_tol(),
                newton_max_iters: default_newton_iters(),
            },
            StepSpec::ImplicitEuler {
                dt,
                newton_tol,
                newton_max_iters,
            } => StepControl {
                scheme: Scheme::ImplicitEuler,
                cfl_safety: default_cfl(),
                dt_max: dt,
                dt_min: 0.0,
                newton_tol,
                newton_max_iters,
            },
        }
    }
}

/// One check evaluated on the finished trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// min K >= -1/(2t) - tolerance at every recorded step.
    Chen { tolerance: f64 },
    /// Sandwich between the lower barrier (2t)H and upper barrier (2t+M)H
    /// for the given model metric H.
    Barriers {
        model: ModelSpec,
        m: f64,
        tolerance: f64,
    },
    /// sup |K| t <= bound for t >= delta.
    CurvatureDecay { delta: f64, bound: f64 },
    /// Fitted volume slope over [window] against -8pi / -4pi within
    /// tolerance (relative); `correction` divides the fitted slope first.
    VolumeLaw {
        topology: TopologySpec,
        window: [f64; 2],
        tolerance: f64,
        #[serde(default = "one")]
        correction: f64,
    },
    /// Sharp convergence to the reference model (requires `output.reference`
    /// and a positive-time snapshot range spanning a decade).
    Convergence { m: f64, tolerance: f64 },
    /// Final-snapshot C^0 deviation from the reference model <= tolerance.
    FinalDeviation { tolerance: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Sphere { volume: f64 },
    Plane { volume: f64 },
    HyperbolicType,
}

impl TopologySpec {
    pub fn build(&self) -> crate::exact::TopologyTag {
        match *self {
            TopologySpec::Sphere { volume } => crate::exact::TopologyTag::Sphere { volume },
            TopologySpec::Plane { volume } => crate::exact::TopologyTag::Plane { volume },
            TopologySpec::HyperbolicType => crate::exact::TopologyTag::HyperbolicType,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory, relative to the output root (the scenario file's
    /// directory, or $RICCI2D_OUTPUT_ROOT when set).
    pub dir: String,
    /// Reference model for the per-step deviation columns in series.csv.
    #[serde(default)]
    pub reference: Option<ModelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub chart: ChartSpec,
    pub initial: InitialSpec,
    pub boundary: BoundarySpec,
    pub time: TimeSpec,
    pub step: StepSpec,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    pub output: OutputSpec,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let sc: Scenario =
            toml::from_str(text).map_err(|e| RicciError::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &std::path::Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(RicciError::Config("scenario name must be nonempty".into()));
        }
        if !(self.time.t0 < self.time.t_end) {
            return Err(RicciError::Config(format!(
                "time window [{}, {}] is empty",
                self.time.t0, self.time.t_end
            )));
        }
        self.step.build().validate().map_err(|e| match e {
            RicciError::InvalidStepControl(msg) => RicciError::Config(msg),
            other => other,
        })?;
        let needs_reference = self.checks.iter().any(|c| {
            matches!(
                c,
                CheckSpec::Convergence { .. } | CheckSpec::FinalDeviation { .. }
            )
        });
        if needs_reference && self.output.reference.is_none() {
            return Err(RicciError::Config(
                "convergence/final_deviation checks require output.reference".into(),
            ));
        }
        if self.output.dir.is_empty() {
            return Err(RicciError::Config("output.dir must be nonempty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
name = "bigbang_oracle"

[chart]
kind = "radial"
radius = 0.9
n = 101

[initial]
kind = "exact"
[initial.flow]
kind = "big_bang"
[initial.flow.model]
kind = "disc"
radius = 1.0

[boundary]
policy = "exact"
[boundary.flow]
kind = "big_bang"
[boundary.flow.model]
kind = "disc"
radius = 1.0

[time]
t0 = 0.5
t_end = 1.0
sample_times = [0.75, 1.0]

[step]
scheme = "explicit_rk2"
dt_max = 1.0

[[checks]]
name = "chen"
tolerance = 1e-3

[output]
dir = "out/bigbang"
[output.reference]
kind = "disc"
radius = 1.0
"#;

    #[test]
    fn parses_round_trip() {
        let sc = Scenario::from_toml(EXAMPLE).unwrap();
        assert_eq!(sc.name, "bigbang_oracle");
        let chart = sc.chart.build().unwrap();
        assert_eq!(chart.n(), 101);
        let u0 = sc.initial.build(&chart, sc.time.t0).unwrap();
        assert!((u0.value(0) - (2.0f64.ln())).abs() < 1e-12);
        assert!(matches!(sc.boundary.build(), BoundaryPolicy::DirichletExact(_)));
        assert_eq!(sc.checks.len(), 1);
    }

    #[test]
    fn rejects_unknown_field() {
        let bad = EXAMPLE.replace("dt_max = 1.0", "dt_max = 1.0\nbogus = 3");
        assert!(matches!(
            Scenario::from_toml(&bad),
            Err(RicciError::Config(_))
        ));
    }

    #[test]
    fn rejects_empty_window() {
        let bad = EXAMPLE.replace("t_end = 1.0", "t_end = 0.5");
        assert!(matches!(
            Scenario::from_toml(&bad),
            Err(RicciError::Config(_))
        ));
    }

    #[test]
    fn parses_barriers_check() {
        let text = EXAMPLE.replace(
            "name = \"chen\"\ntolerance = 1e-3",
            "name = \"barriers\"\nm = 1.0\ntolerance = 1e-2\n[checks.model]\nkind = \"disc\"\nradius = 1.0",
        );
        let sc = Scenario::from_toml(&text).unwrap();
        assert!(matches!(sc.checks[0], CheckSpec::Barriers { m, .. } if m == 1.0));
    }

    #[test]
    fn chart_spec_mirrors_chart() {
        let c = Chart::cartesian(2.0, 1.5, 33).unwrap();
        let spec = ChartSpec::of(&c);
        assert_eq!(spec.build().unwrap(), c);
        let r = Chart::radial(0.9, 65).unwrap();
        assert_eq!(ChartSpec::of(&r).build().unwrap(), r);
    }

    #[test]
    fn bump_applies_additively() {
        let sc = Scenario::from_toml(EXAMPLE).unwrap();
        let chart = sc.chart.build().unwrap();
        let plain = sc.initial.build(&chart, 0.5).unwrap();
        let bumped = InitialSpec::Exact {
            flow: FlowSpec::BigBang {
                model: ModelSpec::Disc { radius: 1.0 },
            },
            bump: Some(BumpSpec {
                amplitude: 0.25,
                center: [0.0, 0.0],
                width: 0.3,
            }),
        }
        .build(&chart, 0.5)
        .unwrap();
        assert!((bumped.value(0) - plain.value(0) - 0.25).abs() < 1e-12);
    }
}
