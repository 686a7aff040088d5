//! The polynomial system in the variables `(X2, Y1, Y2)` reached from the
//! steady untwisted case with constant fiber, its closed forms, and the
//! finite-time blow-up bounds.
//!
//! The field is polynomial,
//!
//! ```text
//! X2' = X2 (X2^2 - 1) + k Y2^2 / sqrt(2m)
//! Y1' = Y1 X2^2
//! Y2' = Y2 (X2^2 - X2/sqrt(2m))
//! ```
//!
//! so `Y1` and `Y2` satisfy linear homogeneous equations and admit the
//! closed forms `Y1(s) = Y1(0) exp(int X2^2)` and
//! `(Y2/Y1)(s) = (Y2/Y1)(0) exp(-int X2 / sqrt(2m))`; the integrals are
//! carried as augmented quadrature components on every run so the closed
//! forms can be checked against the integrated components.
//!
//! Two hypotheses produce finite-time singularities with explicit upper
//! bounds on the singular time:
//! `X2(s0) > 1` (with nonnegative base constant) forces `Y2` to blow up
//! no later than `s0 + 1/((X2(s0)-1) X2(s0))`, and `X2(s0) < -1` (with
//! nonpositive base constant) forces the ratio `Y2/Y1` to grow without
//! bound no later than `s0 + 1/((X2(s0)+1) X2(s0))`.

use alloc::vec::Vec;
use core::fmt;

use crate::blowup::{BlowupEstimate, ThresholdLadder};
use crate::integrator::{integrate, IntegratorConfig, QuadratureSpec, RawTermination};
use crate::math;
use crate::model::{AnsatzParams, SpecialState, StateT, StateVector, Termination, Trajectory};

pub type TrajectorySpecial = Trajectory<SpecialState>;

pub const AUX_INT_X2: &str = "int_x2";
pub const AUX_INT_X2_SQ: &str = "int_x2_sq";

#[derive(Debug, Clone, PartialEq)]
pub enum SpecialError {
    /// The arclength density vanished; the change of variables is
    /// undefined there.
    GammaZero,
    /// The stated inequality of the applicable proposition fails.
    HypothesisViolated(&'static str),
    /// Comparison bound evaluated outside its validity interval.
    OutOfInterval,
    /// The reduction requires the steady untwisted constant-fiber case.
    AssumptionViolated(&'static str),
    MissingQuadrature(&'static str),
    EmptyTrajectory,
    Integration(crate::integrator::IntegrateError),
}

impl fmt::Display for SpecialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecialError::GammaZero => write!(f, "gamma vanished: arclength undefined"),
            SpecialError::HypothesisViolated(which) => write!(f, "hypothesis violated: {which}"),
            SpecialError::OutOfInterval => write!(f, "outside the comparison bound's interval"),
            SpecialError::AssumptionViolated(which) => write!(f, "assumption violated: {which}"),
            SpecialError::MissingQuadrature(name) => write!(f, "trajectory lacks quadrature {name}"),
            SpecialError::EmptyTrajectory => write!(f, "empty trajectory"),
            SpecialError::Integration(e) => write!(f, "integration failed: {e}"),
        }
    }
}

impl core::error::Error for SpecialError {}

impl From<crate::integrator::IntegrateError> for SpecialError {
    fn from(e: crate::integrator::IntegrateError) -> Self {
        SpecialError::Integration(e)
    }
}

/// Polynomial field; no singular states.
pub fn rhs_special(m: u32, k: f64, st: &SpecialState) -> [f64; 3] {
    let sq2m = math::sqrt(f64::from(2 * m));
    let x2sq = st.x2 * st.x2;
    [
        st.x2 * (x2sq - 1.0) + k * st.y2 * st.y2 / sq2m,
        st.y1 * x2sq,
        st.y2 * (x2sq - st.x2 / sq2m),
    ]
}

/// Change of variables from a geometric state in the steady untwisted
/// case with constant fiber: with `gamma = -f' + 2m F'/F` and arclength
/// density `gamma`,
/// `X2 = sqrt(2m) F'/(gamma F)`, `Y1 = 1/gamma`, `Y2 = sqrt(2m)/(gamma F)`.
/// Returns the state and `gamma`; the signs of `Y1`, `Y2` follow the sign
/// of `gamma`.
pub fn from_t(p: &AnsatzParams, st: &StateT) -> Result<(SpecialState, f64), SpecialError> {
    if p.lambda != 0.0 {
        return Err(SpecialError::AssumptionViolated("lambda must be 0"));
    }
    if p.q != 0 {
        return Err(SpecialError::AssumptionViolated("q must be 0"));
    }
    if st.dh != 0.0 {
        return Err(SpecialError::AssumptionViolated("H' must be 0"));
    }
    let two_m = p.two_m();
    let gamma = -st.dphi + two_m * st.df / st.f;
    if gamma == 0.0 {
        return Err(SpecialError::GammaZero);
    }
    let sq2m = math::sqrt(two_m);
    Ok((
        SpecialState {
            s: 0.0,
            x2: sq2m * st.df / (gamma * st.f),
            y1: 1.0 / gamma,
            y2: sq2m / (gamma * st.f),
        },
        gamma,
    ))
}

/// Integrate the polynomial system with the two companion quadratures
/// attached, optionally watching a component through a blow-up ladder.
///
/// With a ladder, a run that ends by hitting the top rung or by step
/// underflow after at least one rung crossing is classified as a
/// finite-time blow-up of the watched component, carrying the
/// extrapolated singular time.
pub fn integrate_special(
    m: u32,
    k: f64,
    state0: &SpecialState,
    s_end: f64,
    cfg: &IntegratorConfig,
    ladder: Option<&ThresholdLadder>,
) -> Result<(TrajectorySpecial, Option<BlowupEstimate>), SpecialError> {
    let params = AnsatzParams::new(0.0, m, 0, k);
    let rhs = move |_s: f64, y: &[f64], dy: &mut [f64]| {
        let st = SpecialState::from_sample(0.0, y);
        dy.copy_from_slice(&rhs_special(m, k, &st));
    };
    let quads = [
        QuadratureSpec::new(AUX_INT_X2, |_s, y: &[f64]| y[0]),
        QuadratureSpec::new(AUX_INT_X2_SQ, |_s, y: &[f64]| y[0] * y[0]),
    ];
    let events = ladder.map(ThresholdLadder::events).unwrap_or_default();

    let mut y0 = [0.0; 3];
    state0.write_components(&mut y0);
    let sol = integrate(&rhs, &y0, (state0.s, s_end), cfg, &events, &quads)?;

    let estimate = ladder.map(|l| l.estimate(&sol));
    let termination = match (&sol.termination, &estimate) {
        (RawTermination::Event { name }, Some(est))
            if ladder.is_some_and(|l| name == &l.event_name(*l.thresholds.last().unwrap())) =>
        {
            Termination::Blowup { t_estimate: est.estimate, component: est.component.clone() }
        }
        (RawTermination::StepUnderflow { .. }, Some(est)) if est.detected() => {
            Termination::Blowup { t_estimate: est.estimate, component: est.component.clone() }
        }
        (raw, _) => Termination::from_raw(raw),
    };

    let mut traj = TrajectorySpecial::from_solution(params, &sol, termination);
    traj.aux_names = quads.iter().map(|q| q.name.clone()).collect();
    Ok((traj, estimate))
}

/// Closed form for `Y1` from the attached quadrature of `X2^2`.
pub fn y1_closed_form(traj: &TrajectorySpecial) -> Result<Vec<f64>, SpecialError> {
    let first = traj.first().ok_or(SpecialError::EmptyTrajectory)?;
    let y1_0 = first.state.y1;
    (0..traj.len())
        .map(|i| {
            traj.aux_by_name(i, AUX_INT_X2_SQ)
                .map(|q| y1_0 * math::exp(q))
                .ok_or(SpecialError::MissingQuadrature(AUX_INT_X2_SQ))
        })
        .collect()
}

/// Closed form for the ratio `Y2/Y1` from the attached quadrature of `X2`.
pub fn ratio_closed_form(traj: &TrajectorySpecial) -> Result<Vec<f64>, SpecialError> {
    let first = traj.first().ok_or(SpecialError::EmptyTrajectory)?;
    let ratio0 = first.state.y2 / first.state.y1;
    let sq2m = math::sqrt(traj.params.two_m());
    (0..traj.len())
        .map(|i| {
            traj.aux_by_name(i, AUX_INT_X2)
                .map(|q| ratio0 * math::exp(-q / sq2m))
                .ok_or(SpecialError::MissingQuadrature(AUX_INT_X2))
        })
        .collect()
}

/// Base scale implied by the ratio: `F = sqrt(2m) Y1/Y2`.
pub fn implied_base_scale(m: u32, ratio: f64) -> f64 {
    math::sqrt(f64::from(2 * m)) / ratio
}

/// Upper bound on the `Y2` blow-up time for initial `X2 > 1`:
/// `s0 + 1/((X2(s0) - 1) X2(s0))`.
pub fn y2_blowup_bound(x2_0: f64, s0: f64) -> Result<f64, SpecialError> {
    if !(x2_0 > 1.0) {
        return Err(SpecialError::HypothesisViolated("requires X2(s0) > 1"));
    }
    Ok(s0 + 1.0 / ((x2_0 - 1.0) * x2_0))
}

/// Upper bound on the ratio blow-up time for initial `X2 < -1`:
/// `s0 + 1/((X2(s0) + 1) X2(s0))`.
pub fn ratio_blowup_bound(x2_0: f64, s0: f64) -> Result<f64, SpecialError> {
    if !(x2_0 < -1.0) {
        return Err(SpecialError::HypothesisViolated("requires X2(s0) < -1"));
    }
    Ok(s0 + 1.0 / ((x2_0 + 1.0) * x2_0))
}

/// Pointwise comparison bound under the `X2(s0) > 1` hypothesis:
/// `X2(s) >= X2(s0) / (1 - (s - s0)(X2(s0) - 1) X2(s0))` on the interval
/// where the denominator stays positive.
pub fn comparison_lower_bound(x2_0: f64, s0: f64, s: f64) -> Result<f64, SpecialError> {
    if !(x2_0 > 1.0) {
        return Err(SpecialError::HypothesisViolated("requires X2(s0) > 1"));
    }
    let rate = (x2_0 - 1.0) * x2_0;
    let denom = 1.0 - (s - s0) * rate;
    if s < s0 || denom <= 0.0 {
        return Err(SpecialError::OutOfInterval);
    }
    Ok(x2_0 / denom)
}

/// Which singularity hypothesis a data set satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupHypothesis {
    /// `k in {0, 1}`, `X2(s0) > 1`, `Y2(s0) > 0`: `Y2` blows up.
    Y2Blowup,
    /// `k in {-1, 0}`, `X2(s0) < -1`, `Y1, Y2 > 0`: the ratio blows up.
    RatioBlowup,
}

/// One blow-up desk experiment: initial data plus the base constant.
#[derive(Debug, Clone, Copy)]
pub struct BlowupExperiment {
    pub m: u32,
    pub k: f64,
    pub x2_0: f64,
    pub y1_0: f64,
    pub y2_0: f64,
}

impl BlowupExperiment {
    /// Classify the data, reporting which inequality fails if neither
    /// hypothesis holds.
    pub fn hypothesis(&self) -> Result<BlowupHypothesis, SpecialError> {
        if self.x2_0 > 1.0 {
            if !(self.k == 0.0 || self.k == 1.0) {
                return Err(SpecialError::HypothesisViolated("X2(s0) > 1 requires k in {0, 1}"));
            }
            if !(self.y2_0 > 0.0) {
                return Err(SpecialError::HypothesisViolated("requires Y2(s0) > 0"));
            }
            Ok(BlowupHypothesis::Y2Blowup)
        } else if self.x2_0 < -1.0 {
            if !(self.k == 0.0 || self.k == -1.0) {
                return Err(SpecialError::HypothesisViolated("X2(s0) < -1 requires k in {-1, 0}"));
            }
            if !(self.y2_0 > 0.0) {
                return Err(SpecialError::HypothesisViolated("requires Y2(s0) > 0"));
            }
            if !(self.y1_0 > 0.0) {
                return Err(SpecialError::HypothesisViolated("requires Y1(s0) > 0"));
            }
            Ok(BlowupHypothesis::RatioBlowup)
        } else {
            Err(SpecialError::HypothesisViolated("requires |X2(s0)| > 1"))
        }
    }

    pub fn bound(&self) -> Result<f64, SpecialError> {
        match self.hypothesis()? {
            BlowupHypothesis::Y2Blowup => y2_blowup_bound(self.x2_0, 0.0),
            BlowupHypothesis::RatioBlowup => ratio_blowup_bound(self.x2_0, 0.0),
        }
    }

    /// Run the experiment: integrate with the ladder on the diverging
    /// component and collect the singular-time estimate plus the
    /// per-sample property checks.
    pub fn run(&self, cfg: &IntegratorConfig) -> Result<BlowupRunReport, SpecialError> {
        let hypothesis = self.hypothesis()?;
        let bound = self.bound()?;
        let (component, name) = match hypothesis {
            BlowupHypothesis::Y2Blowup => (2, "y2"),
            BlowupHypothesis::RatioBlowup => (0, "x2"),
        };
        let ladder = ThresholdLadder::new(component, name);
        let state0 = SpecialState { s: 0.0, x2: self.x2_0, y1: self.y1_0, y2: self.y2_0 };
        let s_end = 1.5 * bound + 0.5;
        let (traj, estimate) = integrate_special(self.m, k_of(self.k), &state0, s_end, cfg, Some(&ladder))?;
        let estimate = estimate.expect("ladder attached");

        let terminal = traj.last().map(|s| s.state.s).unwrap_or(f64::NAN);
        let within_bound = estimate.detected() && terminal <= bound + 1e-9 && estimate.estimate <= bound + 1e-9;

        // Monotonicity of X2 in the direction forced by the hypothesis.
        let mut x2_monotone = true;
        for w in traj.samples.windows(2) {
            let (a, b) = (w[0].state.x2, w[1].state.x2);
            let slack = 1e-9 * (1.0 + a.abs());
            let ok = match hypothesis {
                BlowupHypothesis::Y2Blowup => b >= a - slack,
                BlowupHypothesis::RatioBlowup => b <= a + slack,
            };
            if !ok {
                x2_monotone = false;
            }
        }

        // Pointwise comparison bound (only meaningful for X2 > 1).
        let mut comparison_violations = 0usize;
        if hypothesis == BlowupHypothesis::Y2Blowup {
            for sample in &traj.samples {
                match comparison_lower_bound(self.x2_0, 0.0, sample.state.s) {
                    Ok(lo) => {
                        if sample.state.x2 < lo * (1.0 - 1e-9) {
                            comparison_violations += 1;
                        }
                    }
                    Err(SpecialError::OutOfInterval) => {}
                    Err(e) => return Err(e),
                }
            }
        }

        // Closed forms against the integrated components, away from the
        // singular tail.
        let margin = 0.01;
        let y1_cf = y1_closed_form(&traj)?;
        let ratio_cf = ratio_closed_form(&traj)?;
        let mut y1_rel_err = 0.0f64;
        let mut ratio_rel_err = 0.0f64;
        for (i, sample) in traj.samples.iter().enumerate() {
            if sample.state.s > terminal - margin {
                break;
            }
            let y1 = sample.state.y1;
            let ratio = sample.state.y2 / sample.state.y1;
            y1_rel_err = y1_rel_err.max((y1_cf[i] - y1).abs() / y1.abs().max(1e-300));
            ratio_rel_err = ratio_rel_err.max((ratio_cf[i] - ratio).abs() / ratio.abs().max(1e-300));
        }

        // Ratio growth near the terminal time.
        let tail_start = terminal - 0.1 * (terminal - traj.first().unwrap().state.s);
        let mut ratio_increasing_near_end = true;
        let mut prev: Option<f64> = None;
        for sample in &traj.samples {
            if sample.state.s < tail_start {
                continue;
            }
            let r = sample.state.y2 / sample.state.y1;
            if let Some(p) = prev {
                if r < p * (1.0 - 1e-9) {
                    ratio_increasing_near_end = false;
                }
            }
            prev = Some(r);
        }

        let signs_preserved = traj
            .samples
            .iter()
            .all(|s| s.state.y1.signum() == self.y1_0.signum() && s.state.y2.signum() == self.y2_0.signum());

        Ok(BlowupRunReport {
            hypothesis,
            bound,
            estimate,
            terminal,
            within_bound,
            x2_monotone,
            comparison_violations,
            y1_rel_err,
            ratio_rel_err,
            closed_form_margin: margin,
            ratio_increasing_near_end,
            signs_preserved,
            traj,
        })
    }
}

fn k_of(k: f64) -> f64 {
    k
}

/// Everything a blow-up desk experiment reports.
#[derive(Debug, Clone)]
pub struct BlowupRunReport {
    pub hypothesis: BlowupHypothesis,
    /// Upper bound on the singular time from the applicable proposition.
    pub bound: f64,
    pub estimate: BlowupEstimate,
    /// Last time the integrator reached.
    pub terminal: f64,
    pub within_bound: bool,
    pub x2_monotone: bool,
    /// Samples violating the pointwise comparison bound (zero expected).
    pub comparison_violations: usize,
    /// Max relative closed-form errors up to `closed_form_margin` before
    /// the terminal time.
    pub y1_rel_err: f64,
    pub ratio_rel_err: f64,
    pub closed_form_margin: f64,
    pub ratio_increasing_near_end: bool,
    pub signs_preserved: bool,
    pub traj: TrajectorySpecial,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_hand_values() {
        let st = SpecialState { s: 0.0, x2: 2.0, y1: 1.0, y2: 1.0 };
        let d = rhs_special(1, 0.0, &st);
        assert!((d[0] - 6.0).abs() < 1e-15);
        assert!((d[1] - 4.0).abs() < 1e-15);
        assert!((d[2] - (4.0 - core::f64::consts::SQRT_2)).abs() < 1e-15);

        let origin_ray = SpecialState { s: 0.0, x2: 0.0, y1: 3.0, y2: 0.0 };
        assert_eq!(rhs_special(1, 0.0, &origin_ray), [0.0, 0.0, 0.0]);

        let st = SpecialState { s: 0.0, x2: 1.0, y1: 1.0, y2: 1.0 };
        let d = rhs_special(1, 1.0, &st);
        let inv_sq2 = 1.0 / core::f64::consts::SQRT_2;
        assert!((d[0] - inv_sq2).abs() < 1e-15);
        assert!((d[1] - 1.0).abs() < 1e-15);
        assert!((d[2] - (1.0 - inv_sq2)).abs() < 1e-15);
    }

    #[test]
    fn from_t_values_and_errors() {
        let p = AnsatzParams::new(0.0, 1, 0, 0.0);
        let st = StateT { t: 0.0, h: 1.0, dh: 0.0, f: 1.0, df: 1.0, phi: 0.0, dphi: 0.0 };
        let (sp, gamma) = from_t(&p, &st).unwrap();
        assert!((gamma - 2.0).abs() < 1e-15);
        let inv_sq2 = core::f64::consts::FRAC_1_SQRT_2;
        assert!((sp.x2 - inv_sq2).abs() < 1e-15);
        assert!((sp.y1 - 0.5).abs() < 1e-15);
        assert!((sp.y2 - inv_sq2).abs() < 1e-15);

        // f' equal to the mean curvature makes gamma vanish.
        let st = StateT { t: 0.0, h: 1.0, dh: 0.0, f: 1.0, df: 1.0, phi: 0.0, dphi: 2.0 };
        assert_eq!(from_t(&p, &st).unwrap_err(), SpecialError::GammaZero);

        let st = StateT { t: 0.0, h: 1.0, dh: 0.0, f: 1.0, df: 0.0, phi: 0.0, dphi: -1.0 };
        let (sp, gamma) = from_t(&p, &st).unwrap();
        assert!((gamma - 1.0).abs() < 1e-15);
        assert_eq!(sp.x2, 0.0);
        assert!((sp.y1 - 1.0).abs() < 1e-15);
        assert!((sp.y2 - core::f64::consts::SQRT_2).abs() < 1e-15);

        let p_twisted = AnsatzParams::new(0.0, 1, 1, 0.0);
        assert!(matches!(
            from_t(&p_twisted, &st),
            Err(SpecialError::AssumptionViolated(_))
        ));
    }

    #[test]
    fn bounds_arithmetic() {
        assert!((y2_blowup_bound(2.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((y2_blowup_bound(1.5, 1.0).unwrap() - (1.0 + 1.0 / 0.75)).abs() < 1e-15);
        assert!(matches!(
            y2_blowup_bound(1.0, 0.0),
            Err(SpecialError::HypothesisViolated(_))
        ));

        assert!((ratio_blowup_bound(-2.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((ratio_blowup_bound(-3.0, 0.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            ratio_blowup_bound(-1.0, 0.0),
            Err(SpecialError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn comparison_bound_arithmetic() {
        assert!((comparison_lower_bound(2.0, 0.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((comparison_lower_bound(2.0, 0.0, 0.25).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(comparison_lower_bound(2.0, 0.0, 0.6), Err(SpecialError::OutOfInterval));
    }

    #[test]
    fn closed_forms_on_trivial_ray() {
        // X2 = 0 keeps Y1 and the ratio constant.
        let state0 = SpecialState { s: 0.0, x2: 0.0, y1: 2.0, y2: 3.0 };
        let (traj, _) =
            integrate_special(1, 0.0, &state0, 1.0, &IntegratorConfig::default(), None).unwrap();
        let y1 = y1_closed_form(&traj).unwrap();
        let ratio = ratio_closed_form(&traj).unwrap();
        for (a, b) in y1.iter().zip(ratio.iter()) {
            assert!((a - 2.0).abs() < 1e-12);
            assert!((b - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_formulas_handle_negative_integrals() {
        // With a negative attached integral the closed form contracts
        // Y1; checked against a synthetic trajectory record.
        let params = AnsatzParams::new(0.0, 1, 0, 0.0);
        let mut traj = TrajectorySpecial::from_states(
            params,
            vec![
                SpecialState { s: 0.0, x2: 0.0, y1: 2.0, y2: 2.0 },
                SpecialState { s: 1.0, x2: 0.0, y1: 2.0, y2: 2.0 },
            ],
            Termination::Horizon,
        );
        traj.aux_names = vec![AUX_INT_X2.to_string(), AUX_INT_X2_SQ.to_string()];
        traj.samples[0].aux = vec![0.0, 0.0];
        traj.samples[1].aux = vec![-1.0, -0.5];
        let y1 = y1_closed_form(&traj).unwrap();
        assert!((y1[1] - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        let ratio = ratio_closed_form(&traj).unwrap();
        assert!((ratio[1] - (1.0f64 / core::f64::consts::SQRT_2).exp()).abs() < 1e-15);
    }

    #[test]
    fn implied_base_scale_inverts_ratio() {
        assert!((implied_base_scale(1, core::f64::consts::SQRT_2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_y1_on_expanding_run() {
        // Along the X2 > 1 run the attached integral of X2^2 equals
        // ln(Y1(s)/Y1(0)); check the dense value at s = 0.1 against the
        // closed form of the decoupled field (base constant zero).
        let exp = BlowupExperiment { m: 1, k: 0.0, x2_0: 2.0, y1_0: 1.0, y2_0: 1.0 };
        let report = exp.run(&IntegratorConfig::default()).unwrap();
        let traj = &report.traj;
        let dense = traj.dense.as_ref().unwrap();
        let v = dense.eval(0.1).unwrap();
        // Components: [x2, y1, y2, int_x2, int_x2_sq].
        let int_x2_sq = v[4];
        let y1 = v[1];
        assert!((int_x2_sq - y1.ln()).abs() < 1e-9, "{int_x2_sq} vs {}", y1.ln());
        // Exact value: (1/2) ln(e^{2s}/(4 - 3 e^{2s})) at s = 0.1.
        let e2s = (0.2f64).exp();
        let exact = 0.5 * (e2s / (4.0 - 3.0 * e2s)).ln();
        assert!((int_x2_sq - exact).abs() < 1e-9, "{int_x2_sq} vs exact {exact}");
    }

    #[test]
    fn hypothesis_classification() {
        let good42 = BlowupExperiment { m: 1, k: 1.0, x2_0: 2.0, y1_0: 1.0, y2_0: 1.0 };
        assert_eq!(good42.hypothesis().unwrap(), BlowupHypothesis::Y2Blowup);
        let good43 = BlowupExperiment { m: 1, k: -1.0, x2_0: -2.0, y1_0: 1.0, y2_0: 1.0 };
        assert_eq!(good43.hypothesis().unwrap(), BlowupHypothesis::RatioBlowup);
        let boundary = BlowupExperiment { m: 1, k: 0.0, x2_0: 1.0, y1_0: 1.0, y2_0: 1.0 };
        assert!(boundary.hypothesis().is_err());
        let bad_k = BlowupExperiment { m: 1, k: -1.0, x2_0: 2.0, y1_0: 1.0, y2_0: 1.0 };
        assert!(bad_k.hypothesis().is_err());
    }

    #[test]
    fn expanding_run_blows_up_within_bound() {
        let exp = BlowupExperiment { m: 1, k: 0.0, x2_0: 2.0, y1_0: 1.0, y2_0: 1.0 };
        let report = exp.run(&IntegratorConfig::default()).unwrap();
        assert!(report.within_bound, "terminal {} bound {}", report.terminal, report.bound);
        assert!(report.x2_monotone);
        assert_eq!(report.comparison_violations, 0);
        assert!(report.signs_preserved);
        // Separable quadrature of the decoupled equation.
        let exact = 0.5 * (4.0f64 / 3.0).ln();
        assert!(
            (report.estimate.estimate - exact).abs() < 1e-3,
            "estimate {} vs {exact}",
            report.estimate.estimate
        );
        assert!(matches!(report.traj.termination, Termination::Blowup { .. }));
    }

    #[test]
    fn contracting_run_hits_singularity_within_bound() {
        for k in [0.0, -1.0] {
            let exp = BlowupExperiment { m: 1, k, x2_0: -2.0, y1_0: 1.0, y2_0: 1.0 };
            let report = exp.run(&IntegratorConfig::default()).unwrap();
            assert!(report.within_bound, "k = {k}: terminal {} bound {}", report.terminal, report.bound);
            assert!(report.x2_monotone, "k = {k}");
            assert!(report.ratio_increasing_near_end, "k = {k}");
            assert!(report.signs_preserved);
            // The system variable reaches at least the first rungs before
            // the step size underflows.
            let last_x2 = report.traj.last().unwrap().state.x2;
            assert!(last_x2 < -1e5, "k = {k}: X2 only reached {last_x2}");
        }
    }

    #[test]
    fn large_initial_data_reaches_top_rung() {
        // With a large starting Y2 the top rung of the ladder fires as a
        // stop event before the step size underflows.
        let exp = BlowupExperiment { m: 1, k: 0.0, x2_0: 2.0, y1_0: 1.0, y2_0: 1e3 };
        let report = exp.run(&IntegratorConfig::default()).unwrap();
        assert!(report.within_bound);
        let top = report.estimate.crossings.iter().map(|&(thr, _)| thr).fold(0.0f64, f64::max);
        assert!(top >= 1e8, "top rung crossed: {top:?}");
        assert!(report.traj.last().unwrap().state.y2 >= 1e8);
    }
}
