//! Domain types shared by the three ODE formulations.
//!
//! All types are immutable values after construction and safe to share
//! across threads. The two arclength variables in play (the `gamma`
//! arclength of the polynomial system and the fiber arclength of the
//! squared-scale system) are deliberately kept in separate state types:
//! a trajectory is tagged by its formulation and states are never mixed.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::integrator::{DenseOutput, EventHit, RawTermination, Solution};

/// One soliton problem instance: soliton constant, base dimension
/// parameter, bundle twist, and the Einstein constant of the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsatzParams {
    /// Soliton constant; steady `= 0`, shrinking `> 0`, expanding `< 0`.
    pub lambda: f64,
    /// Half the dimension of the base, so the base has dimension `2m`.
    pub m: u32,
    /// Bundle twist: `0` for a product (double warped) fiber, `1` for a
    /// circle bundle with curvature.
    pub q: u32,
    /// Einstein constant of the base metric.
    pub k: f64,
    /// Total dimension `2m + 2` of the ambient manifold.
    pub dim_total: u32,
}

impl AnsatzParams {
    pub fn new(lambda: f64, m: u32, q: u32, k: f64) -> Self {
        Self { lambda, m, q, k, dim_total: 2 * m + 2 }
    }

    /// Check the structural invariants, returning the parameters
    /// unchanged when they hold.
    pub fn validate(self) -> Result<Self, ParamError> {
        if self.q > 1 {
            return Err(ParamError::Reject { field: "q" });
        }
        if self.m < 1 {
            return Err(ParamError::Reject { field: "m" });
        }
        if self.dim_total != 2 * self.m + 2 {
            return Err(ParamError::Reject { field: "dim_total" });
        }
        Ok(self)
    }

    #[inline]
    pub fn two_m(&self) -> f64 {
        f64::from(2 * self.m)
    }

    #[inline]
    pub fn n(&self) -> f64 {
        f64::from(self.dim_total)
    }

    #[inline]
    pub fn q_sq(&self) -> f64 {
        f64::from(self.q * self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamError {
    Reject { field: &'static str },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::Reject { field } => write!(f, "parameter rejected: {field}"),
        }
    }
}

impl core::error::Error for ParamError {}

/// Phase-space point of the geometric system in arclength coordinates.
///
/// `h` is the fiber scale and `f` the base scale of the metric; `phi` is
/// the potential. Positivity of `h` and `f` is a property of regular
/// samples — violations terminate runs as events rather than living
/// inside states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateT {
    pub t: f64,
    /// Fiber scale.
    pub h: f64,
    pub dh: f64,
    /// Base scale.
    pub f: f64,
    pub df: f64,
    /// Potential value.
    pub phi: f64,
    pub dphi: f64,
}

/// Phase-space point of the squared-scale system in fiber arclength.
///
/// `alpha` and `beta` are the squared fiber and base scales; `phi` is the
/// same potential reparametrized. Dots denote derivatives in the fiber
/// arclength `s`, which is distinct from the arclength of
/// [`SpecialState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateS {
    pub s: f64,
    pub alpha: f64,
    pub dalpha: f64,
    pub beta: f64,
    pub dbeta: f64,
    pub phi: f64,
    pub dphi: f64,
}

/// Phase-space point of the polynomial blow-up system.
///
/// The independent variable is the `gamma` arclength (not the fiber
/// arclength of [`StateS`]). The first companion variable is identically
/// zero under the product assumptions and is not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialState {
    pub s: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

/// Per-sample curvature scalars and first integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Mean curvature of the level set.
    pub trl: f64,
    /// Trace of the squared shape operator.
    pub trl2: f64,
    /// Scalar curvature.
    pub scalar: f64,
    /// Conservation-law constant (first integral along solutions).
    pub c: f64,
    /// Hamilton constant (first integral along solutions).
    pub c1: f64,
}

impl Diagnostics {
    /// Cauchy-Schwarz bound for a diagonal shape operator with `2m + 1`
    /// entries: `trl2 >= trl^2 / (2m + 1)`.
    pub fn cauchy_schwarz_ok(&self, m: u32) -> bool {
        let n1 = f64::from(2 * m + 1);
        self.trl2 >= self.trl * self.trl / n1 - 1e-13 * (1.0 + self.trl2.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    T,
    S,
    Special,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formulation::T => write!(f, "t"),
            Formulation::S => write!(f, "s"),
            Formulation::Special => write!(f, "special"),
        }
    }
}

/// Why a trajectory ended. Set exactly once when the record is built.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Reached the requested end of the span.
    Horizon,
    /// Finite-time divergence detected on the named component; carries
    /// the extrapolated singular time.
    Blowup { t_estimate: f64, component: String },
    /// The named scale component reached zero.
    Vanishing { component: String },
    /// Adaptive step size underflowed at the recorded time.
    StepUnderflow { t: f64 },
    /// A named stop event fired.
    Event { name: String },
}

impl Termination {
    pub fn from_raw(raw: &RawTermination) -> Self {
        match raw {
            RawTermination::Horizon => Termination::Horizon,
            RawTermination::StepUnderflow { t } => Termination::StepUnderflow { t: *t },
            RawTermination::Event { name } => Termination::Event { name: name.clone() },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::Blowup { .. } => "blowup",
            Termination::Vanishing { .. } => "vanishing",
            Termination::StepUnderflow { .. } => "step_underflow",
            Termination::Event { .. } => "event",
        }
    }
}

/// A typed view over one integrator sample.
#[derive(Debug, Clone)]
pub struct Sample<St> {
    pub state: St,
    /// Quadrature components attached to the run, in declaration order.
    pub aux: Vec<f64>,
    /// Curvature scalars; populated for geometric-coordinate runs.
    pub diagnostics: Option<Diagnostics>,
}

/// State types that map to/from the integrator's flat component vector.
pub trait StateVector: Sized + Clone {
    const DIM: usize;
    const FORMULATION: Formulation;
    /// Component names in vector order (used for file output and event
    /// wiring by name).
    const COMPONENTS: &'static [&'static str];

    fn from_sample(x: f64, components: &[f64]) -> Self;
    fn write_components(&self, out: &mut [f64]);
    fn independent(&self) -> f64;
}

impl StateVector for StateT {
    const DIM: usize = 6;
    const FORMULATION: Formulation = Formulation::T;
    const COMPONENTS: &'static [&'static str] = &["H", "dH", "F", "dF", "f", "df"];

    fn from_sample(x: f64, c: &[f64]) -> Self {
        Self { t: x, h: c[0], dh: c[1], f: c[2], df: c[3], phi: c[4], dphi: c[5] }
    }

    fn write_components(&self, out: &mut [f64]) {
        out[0] = self.h;
        out[1] = self.dh;
        out[2] = self.f;
        out[3] = self.df;
        out[4] = self.phi;
        out[5] = self.dphi;
    }

    fn independent(&self) -> f64 {
        self.t
    }
}

impl StateVector for StateS {
    const DIM: usize = 6;
    const FORMULATION: Formulation = Formulation::S;
    const COMPONENTS: &'static [&'static str] = &["alpha", "dalpha", "beta", "dbeta", "phi", "dphi"];

    fn from_sample(x: f64, c: &[f64]) -> Self {
        Self { s: x, alpha: c[0], dalpha: c[1], beta: c[2], dbeta: c[3], phi: c[4], dphi: c[5] }
    }

    fn write_components(&self, out: &mut [f64]) {
        out[0] = self.alpha;
        out[1] = self.dalpha;
        out[2] = self.beta;
        out[3] = self.dbeta;
        out[4] = self.phi;
        out[5] = self.dphi;
    }

    fn independent(&self) -> f64 {
        self.s
    }
}

impl StateVector for SpecialState {
    const DIM: usize = 3;
    const FORMULATION: Formulation = Formulation::Special;
    const COMPONENTS: &'static [&'static str] = &["x2", "y1", "y2"];

    fn from_sample(x: f64, c: &[f64]) -> Self {
        Self { s: x, x2: c[0], y1: c[1], y2: c[2] }
    }

    fn write_components(&self, out: &mut [f64]) {
        out[0] = self.x2;
        out[1] = self.y1;
        out[2] = self.y2;
    }

    fn independent(&self) -> f64 {
        self.s
    }
}

/// An ordered, densely evaluable solution record for one formulation.
#[derive(Debug, Clone)]
pub struct Trajectory<St> {
    pub params: AnsatzParams,
    pub samples: Vec<Sample<St>>,
    pub termination: Termination,
    pub events: Vec<EventHit>,
    pub aux_names: Vec<String>,
    pub dense: Option<DenseOutput>,
}

impl<St: StateVector> Trajectory<St> {
    /// Wrap a raw solution. Panics if sample times are not strictly
    /// increasing (the integrator guarantees they are).
    pub fn from_solution(params: AnsatzParams, sol: &Solution, termination: Termination) -> Self {
        assert_eq!(sol.ncore, St::DIM, "component count mismatch for formulation");
        let samples: Vec<Sample<St>> = sol
            .ts
            .iter()
            .zip(sol.ys.iter())
            .map(|(&x, y)| Sample {
                state: St::from_sample(x, &y[..sol.ncore]),
                aux: y[sol.ncore..].to_vec(),
                diagnostics: None,
            })
            .collect();
        let traj = Self {
            params,
            samples,
            termination,
            events: sol.events.clone(),
            aux_names: Vec::new(),
            dense: Some(sol.dense.clone()),
        };
        debug_assert!(traj.times_strictly_increasing());
        traj
    }

    /// Build from bare states (used for sampled closed-form solutions).
    pub fn from_states(params: AnsatzParams, states: Vec<St>, termination: Termination) -> Self {
        let samples = states
            .into_iter()
            .map(|state| Sample { state, aux: Vec::new(), diagnostics: None })
            .collect();
        Self { params, samples, termination, events: Vec::new(), aux_names: Vec::new(), dense: None }
    }

    pub fn formulation(&self) -> Formulation {
        St::FORMULATION
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample<St>> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample<St>> {
        self.samples.last()
    }

    pub fn times_strictly_increasing(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[0].state.independent() < w[1].state.independent())
    }

    /// Dense evaluation of the raw component vector at `x`, when the
    /// trajectory carries interpolants.
    pub fn dense_eval(&self, x: f64) -> Option<Vec<f64>> {
        self.dense.as_ref()?.eval(x)
    }

    /// Aux (quadrature) component by name at sample `i`.
    pub fn aux_by_name(&self, i: usize, name: &str) -> Option<f64> {
        let j = self.aux_names.iter().position(|n| n == name)?;
        self.samples[i].aux.get(j).copied()
    }
}
