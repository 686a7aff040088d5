//! Closed-form solution families used as ground truth for residual,
//! monitor, and transform tests.
//!
//! Three families are available: constant scales with a linear
//! potential, a hyperbolic fiber scale over a constant base with a
//! logarithmic potential, and the constant shrinker forced by the field
//! equations when both scale derivatives vanish. Each produces the full
//! second-order jet at any admissible time, so the field residual can be
//! checked pointwise to roundoff.

use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::model::{AnsatzParams, StateT, Termination, Trajectory};
use crate::ode_t::{monitors, TJet, TrajectoryT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleError {
    Invalid(&'static str),
    /// Evaluation outside the family's domain.
    Domain,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Invalid(msg) => write!(f, "invalid oracle parameters: {msg}"),
            OracleError::Domain => write!(f, "evaluation outside the solution's domain"),
        }
    }
}

impl core::error::Error for OracleError {}

/// Constant scales `H = C1`, `F = C2` with linear potential
/// `f = C3 + C4 t`; solves the steady untwisted system with flat base.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSolution {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl ConstantSolution {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self, OracleError> {
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(OracleError::Invalid("scales must be positive"));
        }
        Ok(Self { c1, c2, c3, c4 })
    }

    /// Parameters this family solves: steady, untwisted, flat base.
    pub fn params(&self, m: u32) -> AnsatzParams {
        AnsatzParams::new(0.0, m, 0, 0.0)
    }

    pub fn jet(&self, t: f64) -> TJet {
        TJet {
            h: self.c1,
            dh: 0.0,
            ddh: 0.0,
            f: self.c2,
            df: 0.0,
            ddf: 0.0,
            phi: self.c3 + self.c4 * t,
            dphi: self.c4,
            ddphi: 0.0,
        }
    }

    pub fn state(&self, t: f64) -> StateT {
        self.jet(t).state(t)
    }

    pub fn trajectory(&self, t0: f64, t1: f64, n: usize) -> TrajectoryT {
        let states = linspace(t0, t1, n).map(|t| self.state(t)).collect();
        with_diagnostics(Trajectory::from_states(self.params(1), states, Termination::Horizon))
    }
}

/// Hyperbolic fiber over a constant base:
/// `F = C`, `H = 2/(c1 (c3 - t))`, `f = -2 ln(sqrt(c1) (c3 - t)/2)`,
/// defined for `t < c3`. Solves the steady untwisted flat-base system;
/// both first integrals vanish identically along it.
#[derive(Debug, Clone, Copy)]
pub struct NewFamilySolution {
    /// Constant base scale.
    pub scale: f64,
    pub c1: f64,
    pub c3: f64,
}

impl NewFamilySolution {
    pub fn new(scale: f64, c1: f64, c3: f64) -> Result<Self, OracleError> {
        if !(c1 > 0.0) {
            return Err(OracleError::Invalid("c1 must be positive"));
        }
        if !(scale > 0.0) {
            return Err(OracleError::Invalid("scale must be positive"));
        }
        Ok(Self { scale, c1, c3 })
    }

    pub fn params(&self) -> AnsatzParams {
        AnsatzParams::new(0.0, 1, 0, 0.0)
    }

    pub fn jet(&self, t: f64) -> Result<TJet, OracleError> {
        if t >= self.c3 {
            return Err(OracleError::Domain);
        }
        let u = 1.0 / (self.c3 - t);
        Ok(TJet {
            h: 2.0 * u / self.c1,
            dh: 2.0 * u * u / self.c1,
            ddh: 4.0 * u * u * u / self.c1,
            f: self.scale,
            df: 0.0,
            ddf: 0.0,
            phi: -2.0 * math::ln(math::sqrt(self.c1) * (self.c3 - t) / 2.0),
            dphi: 2.0 * u,
            ddphi: 2.0 * u * u,
        })
    }

    pub fn state(&self, t: f64) -> Result<StateT, OracleError> {
        Ok(self.jet(t)?.state(t))
    }

    pub fn trajectory(&self, t0: f64, t1: f64, n: usize) -> Result<TrajectoryT, OracleError> {
        let states = linspace(t0, t1, n)
            .map(|t| self.state(t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(with_diagnostics(Trajectory::from_states(self.params(), states, Termination::Horizon)))
    }
}

/// Constant shrinker: with both scale derivatives zero the field
/// equations force `F^2 = k m/(lambda (m+1))` and `H^2 = lambda F^4/(2m)`
/// with quadratic potential `f = lambda t^2/2`. Requires the twisted
/// bundle and positive `lambda`, `k`.
#[derive(Debug, Clone, Copy)]
pub struct CylinderSolution {
    pub m: u32,
    pub lambda: f64,
    pub k: f64,
    h: f64,
    f: f64,
}

impl CylinderSolution {
    pub fn new(m: u32, lambda: f64, k: f64) -> Result<Self, OracleError> {
        if !(lambda > 0.0) {
            return Err(OracleError::Invalid("lambda must be positive"));
        }
        if !(k > 0.0) {
            return Err(OracleError::Invalid("k must be positive"));
        }
        if m < 1 {
            return Err(OracleError::Invalid("m must be at least 1"));
        }
        let mf = f64::from(m);
        let f_sq = k * mf / (lambda * (mf + 1.0));
        let h_sq = lambda * f_sq * f_sq / (2.0 * mf);
        Ok(Self { m, lambda, k, h: math::sqrt(h_sq), f: math::sqrt(f_sq) })
    }

    pub fn params(&self) -> AnsatzParams {
        AnsatzParams::new(self.lambda, self.m, 1, self.k)
    }

    pub fn jet(&self, t: f64) -> TJet {
        TJet {
            h: self.h,
            dh: 0.0,
            ddh: 0.0,
            f: self.f,
            df: 0.0,
            ddf: 0.0,
            phi: self.lambda * t * t / 2.0,
            dphi: self.lambda * t,
            ddphi: self.lambda,
        }
    }

    pub fn state(&self, t: f64) -> StateT {
        self.jet(t).state(t)
    }

    pub fn trajectory(&self, t0: f64, t1: f64, n: usize) -> TrajectoryT {
        let states = linspace(t0, t1, n).map(|t| self.state(t)).collect();
        with_diagnostics(Trajectory::from_states(self.params(), states, Termination::Horizon))
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { b } else { a + step * i as f64 })
}

fn with_diagnostics(mut traj: TrajectoryT) -> TrajectoryT {
    let p = traj.params;
    for s in &mut traj.samples {
        s.diagnostics = monitors(&p, &s.state).ok();
    }
    traj
}

/// Sample times log-spaced in distance from `pole`, from `pole - far`
/// down to `pole - near`.
pub fn logspaced_from_pole(pole: f64, near: f64, far: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let l0 = math::ln(near);
    let l1 = math::ln(far);
    (0..n)
        .map(|i| {
            let frac = i as f64 / (n - 1) as f64;
            pole - math::exp(l1 + (l0 - l1) * frac)
        })
        .collect()
}
