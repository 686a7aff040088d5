//! Adaptive embedded Runge-Kutta engine shared by the three ODE
//! formulations.
//!
//! The method is the Dormand-Prince 5(4) pair with the classical
//! fourth-order continuous extension, PI step-size control, and FSAL.
//! Three features beyond plain stepping:
//!
//! * **Dense output** — every accepted step stores interpolation
//!   coefficients, so the solution (and any augmented component) can be
//!   evaluated anywhere inside the covered span.
//! * **Events** — scalar functions of `(x, y)` are monitored across each
//!   accepted step; a trigger is localized on the dense interpolant by
//!   bisection to within `1e-12` in the independent variable and either
//!   recorded or used to stop the run.
//! * **Quadrature** — running integrals are carried as extra state
//!   components advanced by the same controller, so they inherit the
//!   step-wise error control instead of being reconstructed afterwards.
//!
//! The systems treated here are non-stiff away from their singular
//! times; step-size underflow near a singularity is reported as a
//! termination cause rather than an error, since it is the designed
//! stopping mechanism for finite-time blow-up runs.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Tolerances and step-size limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Relative tolerance (componentwise).
    pub rtol: f64,
    /// Absolute tolerance (componentwise).
    pub atol: f64,
    /// Initial step size.
    pub h0: f64,
    /// Steps below this threshold terminate the run with
    /// [`RawTermination::StepUnderflow`].
    pub hmin: f64,
    /// Maximum step size (infinite by default; always capped by the span).
    pub hmax: f64,
    /// Maximum number of accepted+rejected steps before giving up.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h0: 1e-4,
            hmin: 1e-14,
            hmax: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(IntegrateError::InvalidConfig("rtol and atol must be positive"));
        }
        if !(self.hmin > 0.0 && self.hmin <= self.h0 && self.h0 <= self.hmax) {
            return Err(IntegrateError::InvalidConfig("need 0 < hmin <= h0 <= hmax"));
        }
        Ok(())
    }
}

/// What an event watches for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trigger {
    /// Strict sign change of the scalar between step endpoints.
    SignChange,
    /// Scalar rises through the threshold.
    Exceeds(f64),
    /// Scalar falls through the threshold.
    FallsBelow(f64),
}

impl Trigger {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        match self {
            Trigger::Exceeds(c) | Trigger::FallsBelow(c) if !c.is_finite() => {
                Err(IntegrateError::InvalidConfig("event threshold must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Trigger status of a scalar value: an event fires when the status
    /// flips from `false` to `true` across a step (for sign changes, when
    /// the signed status changes).
    fn status(&self, g: f64) -> i8 {
        match *self {
            Trigger::SignChange => {
                if g > 0.0 {
                    1
                } else if g < 0.0 {
                    -1
                } else {
                    0
                }
            }
            Trigger::Exceeds(c) => i8::from(g > c),
            Trigger::FallsBelow(c) => i8::from(g < c),
        }
    }

    fn fires(&self, s0: i8, s1: i8) -> bool {
        match self {
            Trigger::SignChange => s0 != 0 && s1 != 0 && s0 != s1,
            _ => s0 == 0 && s1 == 1,
        }
    }
}

/// What to do when an event fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventAction {
    Stop,
    Record,
}

/// A scalar condition localized along the solution.
pub struct EventSpec {
    pub name: String,
    pub func: Box<dyn Fn(f64, &[f64]) -> f64>,
    pub trigger: Trigger,
    pub action: EventAction,
}

impl EventSpec {
    pub fn new(
        name: impl Into<String>,
        trigger: Trigger,
        action: EventAction,
        func: impl Fn(f64, &[f64]) -> f64 + 'static,
    ) -> Self {
        Self { name: name.into(), func: Box::new(func), trigger, action }
    }

    /// Event watching a single state component.
    pub fn component(
        name: impl Into<String>,
        index: usize,
        trigger: Trigger,
        action: EventAction,
    ) -> Self {
        Self::new(name, trigger, action, move |_, y| y[index])
    }

    /// Event watching the absolute value of a state component.
    pub fn component_abs(
        name: impl Into<String>,
        index: usize,
        trigger: Trigger,
        action: EventAction,
    ) -> Self {
        Self::new(name, trigger, action, move |_, y| y[index].abs())
    }
}

/// A running integral carried as an augmented state component.
///
/// The integrand sees only the core state; the integral starts at zero
/// at `x0` and is appended after the core components in every sample.
pub struct QuadratureSpec {
    pub name: String,
    pub integrand: Box<dyn Fn(f64, &[f64]) -> f64>,
}

impl QuadratureSpec {
    pub fn new(name: impl Into<String>, integrand: impl Fn(f64, &[f64]) -> f64 + 'static) -> Self {
        Self { name: name.into(), integrand: Box::new(integrand) }
    }
}

/// A localized event occurrence.
#[derive(Debug, Clone)]
pub struct EventHit {
    pub name: String,
    /// First dense-output point with flipped trigger status.
    pub t: f64,
    /// Bisection bracket: status is unflipped at `.0`, flipped at `.1`,
    /// and `.1 - .0 <= 1e-12`.
    pub bracket: (f64, f64),
    pub stopped: bool,
}

/// Why stepping ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RawTermination {
    /// Reached the end of the requested span.
    Horizon,
    /// Step size fell below `hmin` (or below resolution of the
    /// independent variable) at the recorded time.
    StepUnderflow { t: f64 },
    /// A stop event fired.
    Event { name: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrateError {
    /// The right-hand side was not finite at the initial state.
    NonFiniteRhs { t: f64 },
    /// `max_steps` exceeded before reaching the horizon.
    MaxSteps { t: f64 },
    InvalidConfig(&'static str),
    /// Requires `t0 < t1`.
    InvalidSpan,
}

impl fmt::Display for IntegrateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrateError::NonFiniteRhs { t } => write!(f, "right-hand side not finite at t = {t}"),
            IntegrateError::MaxSteps { t } => write!(f, "maximum step count exceeded at t = {t}"),
            IntegrateError::InvalidConfig(msg) => write!(f, "invalid integrator config: {msg}"),
            IntegrateError::InvalidSpan => write!(f, "integration span must satisfy t0 < t1"),
        }
    }
}

impl core::error::Error for IntegrateError {}

/// Interpolation coefficients for one accepted step.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    /// Step length the coefficients were built for (the interpolation
    /// parameter is `(t - t0)/h` even when the valid range is shorter).
    pub h: f64,
    /// End of the valid range; equals `t0 + h` except on a step cut
    /// short by a stop event.
    pub t_end: f64,
    /// Five contiguous coefficient blocks of `dim` values each.
    cont: Vec<f64>,
    dim: usize,
}

impl DenseSegment {
    #[inline]
    pub fn t1(&self) -> f64 {
        self.t_end
    }

    /// Evaluate component `i` at parameter `theta` in `[0, 1]`.
    #[inline]
    pub fn eval_component(&self, theta: f64, i: usize) -> f64 {
        let n = self.dim;
        let c = &self.cont;
        let th1 = 1.0 - theta;
        c[i] + theta * (c[n + i] + th1 * (c[2 * n + i] + theta * (c[3 * n + i] + th1 * c[4 * n + i])))
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = if self.h == 0.0 { 0.0 } else { (t - self.t0) / self.h };
        for i in 0..self.dim {
            out[i] = self.eval_component(theta, i);
        }
    }
}

/// Piecewise interpolant over all accepted steps of a run.
#[derive(Debug, Clone, Default)]
pub struct DenseOutput {
    pub segments: Vec<DenseSegment>,
}

impl DenseOutput {
    pub fn span(&self) -> Option<(f64, f64)> {
        let first = self.segments.first()?;
        let last = self.segments.last()?;
        Some((first.t0, last.t1()))
    }

    fn locate(&self, t: f64) -> Option<&DenseSegment> {
        if self.segments.is_empty() {
            return None;
        }
        let idx = self.segments.partition_point(|seg| seg.t1() < t);
        self.segments.get(idx).or_else(|| self.segments.last())
    }

    /// Evaluate the full state vector at `t` within the covered span.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let (lo, hi) = self.span()?;
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return None;
        }
        let seg = self.locate(t)?;
        let mut out = vec![0.0; seg.dim];
        seg.eval(t, &mut out);
        Some(out)
    }
}

/// Raw integration record: sample times, states (core components followed
/// by quadrature components), dense output, events, and termination cause.
#[derive(Debug, Clone)]
pub struct Solution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub ncore: usize,
    pub naux: usize,
    pub dense: DenseOutput,
    pub events: Vec<EventHit>,
    pub termination: RawTermination,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl Solution {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn last_t(&self) -> f64 {
        *self.ts.last().expect("solution has at least the initial sample")
    }

    /// Quadrature component `j` at sample `i`.
    pub fn aux(&self, i: usize, j: usize) -> f64 {
        self.ys[i][self.ncore + j]
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Error estimate: fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output weights for the continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller constants (Hairer's DOPRI5 settings).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN_SCALE: f64 = 0.2; // hnew >= h/5
const FAC_MAX_SCALE: f64 = 10.0; // hnew <= 10h

/// Absolute localization width for event times.
pub const EVENT_LOCALIZATION: f64 = 1e-12;

struct Stepper<'a> {
    rhs: &'a dyn Fn(f64, &[f64], &mut [f64]),
    quads: &'a [QuadratureSpec],
    ncore: usize,
}

impl Stepper<'_> {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.rhs)(t, &y[..self.ncore], &mut dy[..self.ncore]);
        for (j, q) in self.quads.iter().enumerate() {
            dy[self.ncore + j] = (q.integrand)(t, &y[..self.ncore]);
        }
    }
}

/// Integrate `dy/dt = rhs(t, y)` over `span = (t0, t1)`.
///
/// Quadrature components are appended to the state and advanced under
/// the same error control. Local error per step is held below
/// `atol + rtol * |y|` componentwise via the embedded pair. Termination
/// is `Horizon` when `t1` is reached, `StepUnderflow` when the step
/// drops below `hmin`, or `Event` when a stop event fires.
pub fn integrate(
    rhs: &dyn Fn(f64, &[f64], &mut [f64]),
    y0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
    events: &[EventSpec],
    quads: &[QuadratureSpec],
) -> Result<Solution, IntegrateError> {
    cfg.validate()?;
    for ev in events {
        ev.trigger.validate()?;
    }
    let (t0, t1) = span;
    if !(t0 < t1) {
        return Err(IntegrateError::InvalidSpan);
    }

    let ncore = y0.len();
    let naux = quads.len();
    let n = ncore + naux;
    let stepper = Stepper { rhs, quads, ncore };

    let mut y = vec![0.0; n];
    y[..ncore].copy_from_slice(y0);

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    stepper.eval(t0, &y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::NonFiniteRhs { t: t0 });
    }

    let mut t = t0;
    let mut h = cfg.h0.min(cfg.hmax).min(t1 - t0);

    let mut sol = Solution {
        ts: vec![t0],
        ys: vec![y.clone()],
        ncore,
        naux,
        dense: DenseOutput::default(),
        events: Vec::new(),
        termination: RawTermination::Horizon,
        n_accepted: 0,
        n_rejected: 0,
    };

    let mut event_status: Vec<i8> = events.iter().map(|ev| ev.trigger.status((ev.func)(t0, &y))).collect();

    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut nsteps = 0usize;

    'outer: while t < t1 {
        nsteps += 1;
        if nsteps > cfg.max_steps {
            return Err(IntegrateError::MaxSteps { t });
        }

        let mut hitting_end = false;
        if t + h >= t1 {
            h = t1 - t;
            hitting_end = true;
        }
        // Underflow only counts away from the horizon; the final capped
        // sliver is allowed to be arbitrarily small.
        if !hitting_end && (h < cfg.hmin || t + h == t) {
            sol.termination = RawTermination::StepUnderflow { t };
            break;
        }

        // Stages (k1 holds f(t, y) from FSAL).
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        stepper.eval(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        stepper.eval(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        stepper.eval(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        stepper.eval(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        stepper.eval(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        stepper.eval(t + h, &ynew, &mut k7);

        // Weighted RMS error of the embedded difference.
        let mut err_sq = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(ynew[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = math::sqrt(err_sq / n as f64);

        if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
            // Overflow in a trial step: retry much smaller.
            sol.n_rejected += 1;
            last_rejected = true;
            h *= 0.1;
            continue;
        }

        if err <= 1.0 {
            // Accept. Build the dense segment before y/k are overwritten.
            let mut cont = vec![0.0; 5 * n];
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k1[i] - dy;
                cont[i] = y[i];
                cont[n + i] = dy;
                cont[2 * n + i] = bspl;
                cont[3 * n + i] = dy - h * k7[i] - bspl;
                cont[4 * n + i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let t_new = if hitting_end { t1 } else { t + h };
            let segment = DenseSegment { t0: t, h, t_end: t_new, cont, dim: n };

            // Event scan across [t, t_new].
            let mut stop_at: Option<(f64, usize, (f64, f64))> = None;
            for (ie, ev) in events.iter().enumerate() {
                let g1 = (ev.func)(t_new, &ynew);
                let s1 = ev.trigger.status(g1);
                let s0 = event_status[ie];
                if ev.trigger.fires(s0, s1) {
                    let (lo, hi) = localize_event(ev, &segment, t, t_new, s0);
                    match ev.action {
                        EventAction::Record => {
                            sol.events.push(EventHit { name: ev.name.clone(), t: hi, bracket: (lo, hi), stopped: false });
                        }
                        EventAction::Stop => {
                            if stop_at.map_or(true, |(tb, _, _)| hi < tb) {
                                stop_at = Some((hi, ie, (lo, hi)));
                            }
                        }
                    }
                }
                event_status[ie] = s1;
            }

            if let Some((te, ie, bracket)) = stop_at {
                let mut yf = vec![0.0; n];
                segment.eval(te, &mut yf);
                sol.dense.segments.push(DenseSegment { t_end: te, ..segment });
                sol.ts.push(te);
                sol.ys.push(yf);
                sol.events.push(EventHit {
                    name: events[ie].name.clone(),
                    t: te,
                    bracket,
                    stopped: true,
                });
                sol.termination = RawTermination::Event { name: events[ie].name.clone() };
                sol.n_accepted += 1;
                break 'outer;
            }

            sol.dense.segments.push(segment);
            sol.ts.push(t_new);
            sol.ys.push(ynew.clone());
            sol.n_accepted += 1;

            // PI controller.
            let fac11 = math::powf(err.max(1e-30), EXPO1);
            let fac = fac11 / math::powf(facold, BETA);
            let fac = (fac / SAFETY).clamp(1.0 / FAC_MAX_SCALE, 1.0 / FAC_MIN_SCALE);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
                last_rejected = false;
            }
            facold = err.max(1e-4);

            t = t_new;
            core::mem::swap(&mut y, &mut ynew);
            core::mem::swap(&mut k1, &mut k7);
            h = hnew.min(cfg.hmax);
        } else {
            sol.n_rejected += 1;
            last_rejected = true;
            let fac11 = math::powf(err, EXPO1);
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN_SCALE);
        }
    }

    Ok(sol)
}

/// Bisect the dense interpolant until the event time is bracketed within
/// [`EVENT_LOCALIZATION`]; returns `(lo, hi)` with the flip at `hi`.
fn localize_event(ev: &EventSpec, seg: &DenseSegment, t_lo: f64, t_hi: f64, s0: i8) -> (f64, f64) {
    let mut lo = t_lo;
    let mut hi = t_hi;
    let mut buf = vec![0.0; seg.dim];
    while hi - lo > EVENT_LOCALIZATION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        seg.eval(mid, &mut buf);
        let sm = ev.trigger.status((ev.func)(mid, &buf));
        if ev.trigger.fires(s0, sm) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}
