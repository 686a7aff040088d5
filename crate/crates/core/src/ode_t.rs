//! The soliton system in geometric arclength coordinates: explicit
//! first-order field, singular-orbit Taylor step-off, curvature and
//! first-integral monitors, and qualitative trajectory reports.
//!
//! The second-order system couples the fiber scale `H`, the base scale
//! `F`, and the potential `f`; solved for the top derivatives it reads
//!
//! ```text
//! H'' = H [ 2m q^2 H^2/F^4 - 2m H'F'/(HF) + f'H'/H - lambda ]
//! F'' = F [ k/F^2 - 2 q^2 H^2/F^4 - (2m-1)(F'/F)^2 - H'F'/(FH) + f'F'/F - lambda ]
//! f'' = lambda + H''/H + 2m F''/F
//! ```
//!
//! Two scalars are first integrals along solutions and are monitored per
//! sample: the conservation-law constant
//! `C = f'' + (tr L) f' - (f')^2 + 2 lambda f` and the Hamilton constant
//! `C1 = S + (f')^2 - 2 lambda f`, where `tr L = H'/H + 2m F'/F` and the
//! scalar curvature is `S = lambda n - f'' - f' tr L`.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::integrator::{integrate, EventAction, EventSpec, IntegratorConfig, QuadratureSpec, Trigger};
use crate::model::{AnsatzParams, Diagnostics, StateT, StateVector, Termination, Trajectory};

pub type TrajectoryT = Trajectory<StateT>;

#[derive(Debug, Clone, PartialEq)]
pub enum TError {
    /// A scale factor vanished where the field or a monitor was evaluated.
    SingularState,
    InvalidShooting(&'static str),
    EmptyTrajectory,
    Integration(crate::integrator::IntegrateError),
}

impl fmt::Display for TError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TError::SingularState => write!(f, "singular state: H or F vanished"),
            TError::InvalidShooting(msg) => write!(f, "invalid shooting config: {msg}"),
            TError::EmptyTrajectory => write!(f, "empty trajectory"),
            TError::Integration(e) => write!(f, "integration failed: {e}"),
        }
    }
}

impl core::error::Error for TError {}

impl From<crate::integrator::IntegrateError> for TError {
    fn from(e: crate::integrator::IntegrateError) -> Self {
        TError::Integration(e)
    }
}

/// Derivative of a [`StateT`]: `(H', H'', F', F'', f', f'')`.
pub type TDerivative = [f64; 6];

/// Full second-order jet of a candidate solution at one time; the
/// potential value itself does not enter the field equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TJet {
    pub h: f64,
    pub dh: f64,
    pub ddh: f64,
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
}

impl TJet {
    pub fn state(&self, t: f64) -> StateT {
        StateT { t, h: self.h, dh: self.dh, f: self.f, df: self.df, phi: self.phi, dphi: self.dphi }
    }
}

/// Explicit first-order field of the geometric system.
pub fn rhs_t(p: &AnsatzParams, st: &StateT) -> Result<TDerivative, TError> {
    if st.h == 0.0 || st.f == 0.0 {
        return Err(TError::SingularState);
    }
    let two_m = p.two_m();
    let q2 = p.q_sq();
    let h2 = st.h * st.h;
    let f2 = st.f * st.f;
    let f4 = f2 * f2;

    let ddh = st.h
        * (two_m * q2 * h2 / f4 - two_m * st.dh * st.df / (st.h * st.f) + st.dphi * st.dh / st.h
            - p.lambda);
    let ddf = st.f
        * (p.k / f2
            - 2.0 * q2 * h2 / f4
            - (two_m - 1.0) * (st.df / st.f) * (st.df / st.f)
            - st.dh * st.df / (st.f * st.h)
            + st.dphi * st.df / st.f
            - p.lambda);
    let ddphi = p.lambda + ddh / st.h + two_m * ddf / st.f;

    Ok([st.dh, ddh, st.df, ddf, st.dphi, ddphi])
}

/// Residuals of the three field equations on a full jet; all three vanish
/// exactly when the jet solves the system.
pub fn residual_t(p: &AnsatzParams, jet: &TJet) -> Result<[f64; 3], TError> {
    if jet.h == 0.0 || jet.f == 0.0 {
        return Err(TError::SingularState);
    }
    let two_m = p.two_m();
    let q2 = p.q_sq();
    let h2 = jet.h * jet.h;
    let f2 = jet.f * jet.f;
    let f4 = f2 * f2;

    let r_a = -jet.ddh / jet.h - two_m * jet.ddf / jet.f + jet.ddphi - p.lambda;
    let r_b = two_m * q2 * h2 / f4 - jet.ddh / jet.h - two_m * jet.dh * jet.df / (jet.h * jet.f)
        + jet.dphi * jet.dh / jet.h
        - p.lambda;
    let r_c = p.k / f2
        - 2.0 * q2 * h2 / f4
        - jet.ddf / jet.f
        - (two_m - 1.0) * (jet.df / jet.f) * (jet.df / jet.f)
        - jet.dh * jet.df / (jet.f * jet.h)
        + jet.dphi * jet.df / jet.f
        - p.lambda;
    Ok([r_a, r_b, r_c])
}

/// Curvature scalars and first integrals at a state. The second potential
/// derivative is taken from the field, so this is a pure function of the
/// state.
pub fn monitors(p: &AnsatzParams, st: &StateT) -> Result<Diagnostics, TError> {
    let deriv = rhs_t(p, st)?;
    let ddphi = deriv[5];
    let two_m = p.two_m();
    let a = st.dh / st.h;
    let b = st.df / st.f;
    let trl = a + two_m * b;
    let trl2 = a * a + two_m * b * b;
    let scalar = p.lambda * p.n() - ddphi - st.dphi * trl;
    let c = ddphi + trl * st.dphi - st.dphi * st.dphi + 2.0 * p.lambda * st.phi;
    let c1 = scalar + st.dphi * st.dphi - 2.0 * p.lambda * st.phi;
    Ok(Diagnostics { trl, trl2, scalar, c, c1 })
}

/// Initial data for a singular-orbit shooting run: the fiber scale
/// vanishes at `t = 0` and the run starts from a parity expansion
/// evaluated at a small offset `eps`.
#[derive(Debug, Clone, Copy)]
pub struct ShootingConfig {
    /// Step-off offset.
    pub eps: f64,
    /// Initial fiber growth rate `H'(0)`; not fixed by the equations,
    /// exposed as data.
    pub h1: f64,
    /// Base scale at the singular orbit, `F(0)`.
    pub f0: f64,
    /// Half the second potential derivative at the orbit, `f''(0)/2`;
    /// exposed as data.
    pub phi2: f64,
    /// Potential value at the orbit.
    pub phi0: f64,
    /// Integration horizon.
    pub horizon: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { eps: 1e-3, h1: 1.0, f0: 1.0, phi2: 0.0, phi0: 0.0, horizon: 10.0 }
    }
}

/// Parity expansion at the collapsing orbit: `H` odd, `F` and `f` even,
/// truncated at the order fixed by the limits of the field equations.
///
/// The limits determine
/// `F2 = (k - lambda F0^2)/(4 F0)` and
/// `h3 = h1 (-lambda - 4m F2/F0 + 2 f2)/6`
/// (the two fiber equations have the same limit), leaving `(h1, F0, f2)`
/// free. The evaluated state solves the field equations to second order
/// in `eps`.
#[derive(Debug, Clone, Copy)]
pub struct StepOffExpansion {
    pub h1: f64,
    pub h3: f64,
    pub f0: f64,
    pub f2: f64,
    pub phi0: f64,
    pub phi2: f64,
}

impl StepOffExpansion {
    pub fn state_at(&self, t: f64) -> StateT {
        StateT {
            t,
            h: self.h1 * t + self.h3 * t * t * t,
            dh: self.h1 + 3.0 * self.h3 * t * t,
            f: self.f0 + self.f2 * t * t,
            df: 2.0 * self.f2 * t,
            phi: self.phi0 + self.phi2 * t * t,
            dphi: 2.0 * self.phi2 * t,
        }
    }

    /// Second derivatives of the truncated expansion.
    pub fn second_derivatives_at(&self, t: f64) -> (f64, f64, f64) {
        (6.0 * self.h3 * t, 2.0 * self.f2, 2.0 * self.phi2)
    }

    pub fn jet_at(&self, t: f64) -> TJet {
        let st = self.state_at(t);
        let (ddh, ddf, ddphi) = self.second_derivatives_at(t);
        TJet {
            h: st.h,
            dh: st.dh,
            ddh,
            f: st.f,
            df: st.df,
            ddf,
            phi: st.phi,
            dphi: st.dphi,
            ddphi,
        }
    }

    /// Field-equation residual of the truncated expansion at `t`; decays
    /// as `O(t^2)`.
    pub fn residual_at(&self, p: &AnsatzParams, t: f64) -> Result<[f64; 3], TError> {
        residual_t(p, &self.jet_at(t))
    }
}

/// Build the step-off expansion and evaluate it at the offset.
pub fn step_off(p: &AnsatzParams, shoot: &ShootingConfig) -> Result<(StateT, StepOffExpansion), TError> {
    if !(shoot.f0 > 0.0) {
        return Err(TError::InvalidShooting("F0 must be positive"));
    }
    if !(shoot.h1 > 0.0) {
        return Err(TError::InvalidShooting("h1 must be positive"));
    }
    if !(shoot.eps > 0.0) {
        return Err(TError::InvalidShooting("eps must be positive"));
    }
    let f2 = (p.k - p.lambda * shoot.f0 * shoot.f0) / (4.0 * shoot.f0);
    let h3 = shoot.h1 * (-p.lambda - 4.0 * f64::from(p.m) * f2 / shoot.f0 + 2.0 * shoot.phi2) / 6.0;
    let exp = StepOffExpansion {
        h1: shoot.h1,
        h3,
        f0: shoot.f0,
        f2,
        phi0: shoot.phi0,
        phi2: shoot.phi2,
    };
    Ok((exp.state_at(shoot.eps), exp))
}

/// Integrate the geometric field from `state0` to `horizon`, guarding the
/// scale factors with vanishing events and attaching per-sample
/// diagnostics.
pub fn integrate_t(
    p: &AnsatzParams,
    state0: &StateT,
    horizon: f64,
    cfg: &IntegratorConfig,
    extra_events: Vec<EventSpec>,
    quads: &[QuadratureSpec],
) -> Result<TrajectoryT, TError> {
    let params = *p;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let st = StateT::from_sample(0.0, y);
        match rhs_t(&params, &st) {
            Ok(d) => dy.copy_from_slice(&d),
            Err(_) => dy.fill(f64::NAN),
        }
    };

    let mut events = vec![
        EventSpec::component("H_vanishing", 0, Trigger::FallsBelow(0.0), EventAction::Stop),
        EventSpec::component("F_vanishing", 2, Trigger::FallsBelow(0.0), EventAction::Stop),
    ];
    events.extend(extra_events);

    let mut y0 = [0.0; 6];
    state0.write_components(&mut y0);
    let sol = integrate(&rhs, &y0, (state0.t, horizon), cfg, &events, quads)?;

    let termination = match &sol.termination {
        crate::integrator::RawTermination::Event { name } if name == "H_vanishing" => {
            Termination::Vanishing { component: "H".to_string() }
        }
        crate::integrator::RawTermination::Event { name } if name == "F_vanishing" => {
            Termination::Vanishing { component: "F".to_string() }
        }
        raw => Termination::from_raw(raw),
    };

    let mut traj = TrajectoryT::from_solution(*p, &sol, termination);
    traj.aux_names = quads.iter().map(|q| q.name.clone()).collect();
    for sample in &mut traj.samples {
        sample.diagnostics = monitors(p, &sample.state).ok();
    }
    Ok(traj)
}

/// Step off the singular orbit and integrate to the horizon.
pub fn shoot(p: &AnsatzParams, shoot_cfg: &ShootingConfig, cfg: &IntegratorConfig) -> Result<TrajectoryT, TError> {
    let (state0, _) = step_off(p, shoot_cfg)?;
    integrate_t(p, &state0, shoot_cfg.horizon, cfg, Vec::new(), &[])
}

/// Options for [`qualitative_report`].
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    /// Samples with `t` at or below this are excluded from the mean
    /// curvature bound (it diverges at the singular orbit).
    pub t_min: f64,
    /// Hysteresis band for sign-change counting; values inside the band
    /// neither arm nor trip the counter.
    pub hysteresis: f64,
    /// Slack for the monotonicity check on the scalar curvature.
    pub scalar_slack: f64,
    /// Additive margin on the mean curvature upper bound `n/t`.
    pub trl_margin: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        // Hysteresis ties to the default absolute tolerance: 10 * atol.
        Self { t_min: 1e-3, hysteresis: 1e-11, scalar_slack: 1e-8, trl_margin: 1e-11 }
    }
}

/// Qualitative trajectory properties checked against the structure
/// theorems: monotonicity of the scales, the mean curvature window
/// `0 < tr L <= n/t`, and decay of the scalar curvature.
#[derive(Debug, Clone)]
pub struct QualitativeReport {
    /// Strict sign changes of `H'` (with hysteresis).
    pub dh_sign_changes: u32,
    /// Strict sign changes of `F'`; equals the extremum count of `F`.
    pub df_sign_changes: u32,
    /// Strict sign changes of `f''`.
    pub ddphi_sign_changes: u32,
    /// `H'` never dips below the hysteresis band and rises above it.
    pub h_increasing: bool,
    /// `tr L` within `(0, n/t + margin]` at every sample past `t_min`.
    pub trl_in_bound: bool,
    /// Scalar curvature non-increasing within the slack.
    pub scalar_nonincreasing: bool,
    /// `F(end) / min F` over the run.
    pub f_growth: f64,
    pub min_f: f64,
    /// `tr L` stayed inside the hysteresis band everywhere; the positive
    /// lower bound is then vacuous (constant-scale solutions).
    pub trivial_soliton: bool,
    /// Scalar curvature at the first sample past `t_min` and at the end.
    pub scalar_at_tmin: f64,
    pub scalar_at_end: f64,
}

/// Count strict sign changes with a hysteresis band: the sign must leave
/// the band on both sides of a change for it to count.
pub fn sign_changes_with_hysteresis(values: impl Iterator<Item = f64>, band: f64) -> u32 {
    let mut armed: i8 = 0;
    let mut changes = 0;
    for v in values {
        let s = if v > band {
            1
        } else if v < -band {
            -1
        } else {
            0
        };
        if s != 0 {
            if armed != 0 && s != armed {
                changes += 1;
            }
            armed = s;
        }
    }
    changes
}

pub fn qualitative_report(traj: &TrajectoryT, opts: &ReportOptions) -> Result<QualitativeReport, TError> {
    if traj.is_empty() {
        return Err(TError::EmptyTrajectory);
    }
    let n = traj.params.n();
    let band = opts.hysteresis;

    let dh_sign_changes = sign_changes_with_hysteresis(traj.samples.iter().map(|s| s.state.dh), band);
    let df_sign_changes = sign_changes_with_hysteresis(traj.samples.iter().map(|s| s.state.df), band);
    let ddphi_sign_changes = sign_changes_with_hysteresis(
        traj.samples.iter().map(|s| rhs_t(&traj.params, &s.state).map_or(f64::NAN, |d| d[5])),
        band,
    );

    let mut h_increasing = false;
    let mut dips = false;
    for s in &traj.samples {
        if s.state.dh > band {
            h_increasing = true;
        }
        if s.state.dh < -band {
            dips = true;
        }
    }
    let h_increasing = h_increasing && !dips;

    let mut trl_in_bound = true;
    let mut trivial = true;
    let mut scalar_nonincreasing = true;
    let mut prev_scalar = f64::INFINITY;
    let mut min_f = f64::INFINITY;
    let mut scalar_at_tmin = f64::NAN;
    let mut scalar_at_end = f64::NAN;
    for s in &traj.samples {
        let t = s.state.t;
        min_f = min_f.min(s.state.f);
        let diag = match s.diagnostics {
            Some(d) => d,
            None => monitors(&traj.params, &s.state)?,
        };
        if diag.trl.abs() > band {
            trivial = false;
        }
        if t > opts.t_min {
            if !(diag.trl > 0.0 && diag.trl <= n / t + opts.trl_margin) {
                trl_in_bound = false;
            }
            if scalar_at_tmin.is_nan() {
                scalar_at_tmin = diag.scalar;
            }
        }
        if diag.scalar > prev_scalar + opts.scalar_slack {
            scalar_nonincreasing = false;
        }
        prev_scalar = diag.scalar;
        scalar_at_end = diag.scalar;
    }

    let f_end = traj.last().map(|s| s.state.f).unwrap_or(f64::NAN);
    Ok(QualitativeReport {
        dh_sign_changes,
        df_sign_changes,
        ddphi_sign_changes,
        h_increasing,
        trl_in_bound,
        scalar_nonincreasing,
        f_growth: f_end / min_f,
        min_f,
        trivial_soliton: trivial,
        scalar_at_tmin,
        scalar_at_end,
    })
}

/// Maximum drift of the two first integrals relative to their values at
/// the first sample: `(drift_C, drift_C1)`.
pub fn first_integral_drift(traj: &TrajectoryT) -> Result<(f64, f64), TError> {
    let first = traj.first().ok_or(TError::EmptyTrajectory)?;
    let d0 = match first.diagnostics {
        Some(d) => d,
        None => monitors(&traj.params, &first.state)?,
    };
    let mut drift_c: f64 = 0.0;
    let mut drift_c1: f64 = 0.0;
    for s in &traj.samples {
        let d = match s.diagnostics {
            Some(d) => d,
            None => monitors(&traj.params, &s.state)?,
        };
        drift_c = drift_c.max((d.c - d0.c).abs());
        drift_c1 = drift_c1.max((d.c1 - d0.c1).abs());
    }
    Ok((drift_c, drift_c1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{ConstantSolution, NewFamilySolution};

    fn steady_params() -> AnsatzParams {
        AnsatzParams::new(0.0, 1, 1, 2.0)
    }

    #[test]
    fn rhs_stationary_for_constant_scales() {
        // lambda = q = k = 0 with zero scale derivatives: only the
        // potential drifts linearly.
        let p = AnsatzParams::new(0.0, 1, 0, 0.0);
        let st = StateT { t: 0.0, h: 2.0, dh: 0.0, f: 3.0, df: 0.0, phi: 0.0, dphi: 5.0 };
        let d = rhs_t(&p, &st).unwrap();
        assert_eq!(d, [0.0, 0.0, 0.0, 0.0, 5.0, 0.0]);
    }

    #[test]
    fn rhs_constant_shrinker_balance() {
        // H^2 = lambda F^4/(2m), F^2 = k m/(lambda (m+1)) makes the scale
        // accelerations vanish and forces f'' = lambda.
        let p = AnsatzParams::new(0.5, 1, 1, 2.0);
        let st = StateT { t: 0.0, h: 1.0, dh: 0.0, f: core::f64::consts::SQRT_2, df: 0.0, phi: 0.0, dphi: 0.0 };
        let d = rhs_t(&p, &st).unwrap();
        for (i, v) in d.iter().enumerate().take(5) {
            assert!(v.abs() < 1e-15, "component {i} = {v}");
        }
        assert!((d[5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rhs_singular_state() {
        let p = steady_params();
        let st = StateT { t: 0.0, h: 0.0, dh: 1.0, f: 1.0, df: 0.0, phi: 0.0, dphi: 0.0 };
        assert_eq!(rhs_t(&p, &st), Err(TError::SingularState));
    }

    #[test]
    fn residual_vanishes_on_explicit_families() {
        let p = AnsatzParams::new(0.0, 1, 0, 0.0);
        // Hyperbolic-fiber family at t = 0 with unit constants:
        // H = 2, H' = 2, H'' = 4, F = 1, f' = 2, f'' = 2.
        let fam = NewFamilySolution::new(1.0, 1.0, 1.0).unwrap();
        let jet = fam.jet(0.0).unwrap();
        assert_eq!(jet.h, 2.0);
        assert_eq!(jet.dh, 2.0);
        assert_eq!(jet.dphi, 2.0);
        assert_eq!(jet.ddphi, 2.0);
        let r = residual_t(&p, &jet).unwrap();
        for v in r {
            assert!(v.abs() < 1e-14, "residual {v}");
        }

        let cst = ConstantSolution::new(2.0, 3.0, 0.0, 5.0).unwrap();
        let r = residual_t(&p, &cst.jet(1.3)).unwrap();
        for v in r {
            assert!(v.abs() < 1e-15);
        }

        // Perturbing f'' by +1 moves only the first residual, linearly.
        let mut jet2 = fam.jet(0.0).unwrap();
        jet2.ddphi += 1.0;
        let r = residual_t(&p, &jet2).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-14);
        assert!(r[1].abs() < 1e-14);
        assert!(r[2].abs() < 1e-14);
    }

    #[test]
    fn step_off_coefficients_and_state() {
        let p = steady_params();
        let shoot_cfg = ShootingConfig { eps: 1e-3, horizon: 1.0, ..Default::default() };
        let (st, exp) = step_off(&p, &shoot_cfg).unwrap();
        assert!((exp.f2 - 0.5).abs() < 1e-15);
        assert!((exp.h3 + 1.0 / 3.0).abs() < 1e-15);
        assert!((st.h - 9.999996666666667e-4).abs() < 1e-16, "H = {:e}", st.h);
        assert!((st.dh - 0.999999).abs() < 1e-12);
        assert!((st.f - (1.0 + 5e-7)).abs() < 1e-16);
        assert!((st.df - 1e-3).abs() < 1e-18);
        assert_eq!(st.phi, 0.0);
        assert_eq!(st.dphi, 0.0);
    }

    #[test]
    fn step_off_phi2_choice_kills_cubic_term() {
        let p = steady_params();
        let mut cfg = ShootingConfig::default();
        // h3 = 0 requires 2 f2 = lambda + 4m F2/F0.
        let f2 = (p.k - p.lambda * cfg.f0 * cfg.f0) / (4.0 * cfg.f0);
        cfg.phi2 = p.lambda / 2.0 + 2.0 * f64::from(p.m) * f2 / cfg.f0;
        let (_, exp) = step_off(&p, &cfg).unwrap();
        assert!(exp.h3.abs() < 1e-15);
    }

    #[test]
    fn step_off_residual_quadratic_in_eps() {
        let p = steady_params();
        let (_, exp) = step_off(&p, &ShootingConfig::default()).unwrap();
        let norm = |eps: f64| -> f64 {
            let r = exp.residual_at(&p, eps).unwrap();
            r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let r1 = norm(1e-3);
        let r2 = norm(5e-4);
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn step_off_rejects_bad_inputs() {
        let p = steady_params();
        let bad = ShootingConfig { f0: 0.0, ..Default::default() };
        assert!(matches!(step_off(&p, &bad), Err(TError::InvalidShooting(_))));
        let bad = ShootingConfig { h1: -1.0, ..Default::default() };
        assert!(matches!(step_off(&p, &bad), Err(TError::InvalidShooting(_))));
    }

    #[test]
    fn monitors_on_explicit_families() {
        let p = AnsatzParams::new(0.0, 1, 0, 0.0);
        let fam = NewFamilySolution::new(1.0, 1.0, 1.0).unwrap();
        let d = monitors(&p, &fam.jet(0.0).unwrap().state(0.0)).unwrap();
        assert!((d.trl - 1.0).abs() < 1e-14);
        assert!((d.scalar + 4.0).abs() < 1e-13);
        assert!(d.c.abs() < 1e-13);
        assert!(d.c1.abs() < 1e-13);

        let c4 = 1.7;
        let cst = ConstantSolution::new(2.0, 3.0, 0.0, c4).unwrap();
        let d = monitors(&p, &cst.jet(0.4).state(0.4)).unwrap();
        assert_eq!(d.trl, 0.0);
        assert_eq!(d.scalar, 0.0);
        assert!((d.c + c4 * c4).abs() < 1e-15);
        assert!((d.c1 - c4 * c4).abs() < 1e-15);

        // Constant shrinker: tr L = 0 and S = lambda (n - 1).
        let p = AnsatzParams::new(0.5, 1, 1, 2.0);
        let st = StateT { t: 0.0, h: 1.0, dh: 0.0, f: core::f64::consts::SQRT_2, df: 0.0, phi: 0.0, dphi: 0.0 };
        let d = monitors(&p, &st).unwrap();
        assert_eq!(d.trl, 0.0);
        assert!((d.scalar - 0.5 * 3.0).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_satisfy_cauchy_schwarz() {
        let p = steady_params();
        let (st, _) = step_off(&p, &ShootingConfig::default()).unwrap();
        let d = monitors(&p, &st).unwrap();
        assert!(d.cauchy_schwarz_ok(p.m));
    }

    #[test]
    fn hysteresis_sign_counting() {
        let band = 1e-3;
        // Noise inside the band must not count.
        let vals = [1.0, 1e-4, -1e-4, 1.0, -1.0, 1e-5, -2.0, 0.5];
        assert_eq!(sign_changes_with_hysteresis(vals.iter().copied(), band), 2);
        let vals = [0.5, 0.2, 0.9];
        assert_eq!(sign_changes_with_hysteresis(vals.iter().copied(), band), 0);
    }

    #[test]
    fn qualitative_report_on_new_family() {
        // The hyperbolic-fiber family has H strictly increasing on
        // [0, 0.9]; F is constant.
        let fam = NewFamilySolution::new(1.0, 1.0, 1.0).unwrap();
        let traj = fam.trajectory(0.0, 0.9, 200).unwrap();
        let rep = qualitative_report(&traj, &ReportOptions::default()).unwrap();
        assert_eq!(rep.dh_sign_changes, 0);
        assert!(rep.h_increasing);
        assert!(!rep.trivial_soliton);
    }

    #[test]
    fn qualitative_report_flags_trivial_soliton() {
        let cst = ConstantSolution::new(2.0, 3.0, 0.0, 5.0).unwrap();
        let traj = cst.trajectory(0.0, 1.0, 50);
        let rep = qualitative_report(&traj, &ReportOptions::default()).unwrap();
        assert_eq!(rep.dh_sign_changes, 0);
        assert_eq!(rep.df_sign_changes, 0);
        assert_eq!(rep.ddphi_sign_changes, 0);
        assert!(rep.trivial_soliton);
        assert!(!rep.trl_in_bound, "trl = 0 fails the strict positivity bound");
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let traj = TrajectoryT::from_states(steady_params(), Vec::new(), Termination::Horizon);
        assert!(matches!(
            qualitative_report(&traj, &ReportOptions::default()),
            Err(TError::EmptyTrajectory)
        ));
    }

    #[test]
    fn first_integrals_drift_slowly_on_short_shooting_run() {
        let p = steady_params();
        let shoot_cfg = ShootingConfig { horizon: 2.0, ..Default::default() };
        let traj = shoot(&p, &shoot_cfg, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.termination, Termination::Horizon);
        let (dc, dc1) = first_integral_drift(&traj).unwrap();
        assert!(dc < 1e-8, "C drift {dc}");
        assert!(dc1 < 1e-8, "C1 drift {dc1}");
    }

    #[test]
    fn trl_rate_matches_field_identity() {
        // d(trL)/dt = f'' - trL2 - lambda, checked with nonuniform
        // central differences on a shooting run.
        let p = steady_params();
        let shoot_cfg = ShootingConfig { horizon: 5.0, ..Default::default() };
        let traj = shoot(&p, &shoot_cfg, &IntegratorConfig::default()).unwrap();
        let mut checked = 0;
        for w in traj.samples.windows(3) {
            let t0 = w[0].state.t;
            let t1 = w[1].state.t;
            let t2 = w[2].state.t;
            if t1 < 0.1 {
                continue;
            }
            let h1 = t1 - t0;
            let h2 = t2 - t1;
            let g0 = w[0].diagnostics.unwrap().trl;
            let g1 = w[1].diagnostics.unwrap().trl;
            let g2 = w[2].diagnostics.unwrap().trl;
            let fd = (h1 * h1 * g2 - h2 * h2 * g0 + (h2 * h2 - h1 * h1) * g1) / (h1 * h2 * (h1 + h2));
            let d1 = w[1].diagnostics.unwrap();
            let ddphi = rhs_t(&p, &w[1].state).unwrap()[5];
            let expected = ddphi - d1.trl2 - p.lambda;
            let h = h1.max(h2);
            assert!(
                (fd - expected).abs() <= 200.0 * h * h * (1.0 + expected.abs()),
                "t = {t1}: fd {fd} vs {expected} (h = {h})"
            );
            checked += 1;
        }
        assert!(checked > 50);
    }
}
