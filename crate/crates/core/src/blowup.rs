//! Finite-time blow-up detection.
//!
//! A diverging component is watched through a ladder of magnitude
//! thresholds (`1e4 ... 1e8` by default). Crossings of the lower rungs
//! are recorded; the top rung stops the run. The singular time is then
//! estimated by extrapolating the geometric tail of the crossing-time
//! differences, with the step-underflow time of the integrator as the
//! fallback witness when fewer than two rungs were reached.
//!
//! For the power-law singularities of the polynomial system the state
//! grows like `(s* - s)^{-1/2}`, so successive decade rungs are crossed
//! at distances from `s*` shrinking by a factor of 100; the tail-sum
//! correction uses that ratio when only two crossings are available.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::integrator::{EventAction, EventSpec, Solution, Trigger};

/// Default magnitude rungs.
pub const DEFAULT_THRESHOLDS: [f64; 5] = [1e4, 1e5, 1e6, 1e7, 1e8];

/// Watches `|y[component]|` through a rung ladder.
#[derive(Debug, Clone)]
pub struct ThresholdLadder {
    pub component: usize,
    pub component_name: String,
    pub thresholds: Vec<f64>,
    /// Stop the run when the top rung is crossed.
    pub stop_at_top: bool,
}

impl ThresholdLadder {
    pub fn new(component: usize, component_name: impl Into<String>) -> Self {
        Self {
            component,
            component_name: component_name.into(),
            thresholds: DEFAULT_THRESHOLDS.into(),
            stop_at_top: true,
        }
    }

    pub fn event_name(&self, threshold: f64) -> String {
        format!("{}_exceeds_{threshold:e}", self.component_name)
    }

    pub fn events(&self) -> Vec<EventSpec> {
        let n = self.thresholds.len();
        self.thresholds
            .iter()
            .enumerate()
            .map(|(i, &thr)| {
                let action = if self.stop_at_top && i + 1 == n {
                    EventAction::Stop
                } else {
                    EventAction::Record
                };
                EventSpec::component_abs(self.event_name(thr), self.component, Trigger::Exceeds(thr), action)
            })
            .collect()
    }

    /// Crossing times per rung, in rung order, from a finished run.
    pub fn crossings(&self, sol: &Solution) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &thr in &self.thresholds {
            let name = self.event_name(thr);
            if let Some(hit) = sol.events.iter().find(|e| e.name == name) {
                out.push((thr, hit.t));
            }
        }
        out
    }

    /// Estimate the singular time from a finished run.
    pub fn estimate(&self, sol: &Solution) -> BlowupEstimate {
        let crossings = self.crossings(sol);
        let terminal = sol.last_t();
        let estimate = extrapolate_crossings(&crossings, terminal);
        let last_crossing = crossings.last().map(|&(_, t)| t);
        BlowupEstimate {
            component: self.component_name.clone(),
            crossings,
            estimate,
            last_crossing,
            terminal,
        }
    }
}

/// Result of the ladder analysis for one run.
#[derive(Debug, Clone)]
pub struct BlowupEstimate {
    pub component: String,
    /// `(threshold, crossing time)` pairs actually observed.
    pub crossings: Vec<(f64, f64)>,
    /// Extrapolated singular time.
    pub estimate: f64,
    pub last_crossing: Option<f64>,
    /// Final time the integrator reached (stop event or underflow).
    pub terminal: f64,
}

impl BlowupEstimate {
    /// The singular time is bracketed below by the furthest point the
    /// run actually reached and above by the extrapolated value.
    pub fn bracket(&self) -> (f64, f64) {
        (self.last_crossing.unwrap_or(self.terminal).max(self.terminal.min(self.estimate)), self.estimate)
    }

    pub fn detected(&self) -> bool {
        !self.crossings.is_empty()
    }
}

/// Geometric-tail extrapolation of rung crossing times.
///
/// With three or more crossings the contraction ratio is measured from
/// the last two differences; with exactly two it defaults to the 1/100
/// decade ratio of inverse-square-root blow-up. The result is never
/// allowed below the terminal time the integrator reached.
fn extrapolate_crossings(crossings: &[(f64, f64)], terminal: f64) -> f64 {
    let ts: Vec<f64> = crossings.iter().map(|&(_, t)| t).collect();
    let raw = match ts.len() {
        0 | 1 => terminal,
        2 => {
            let d = ts[1] - ts[0];
            ts[1] + d * (0.01 / 0.99)
        }
        _ => {
            let n = ts.len();
            let d_last = ts[n - 1] - ts[n - 2];
            let d_before = ts[n - 2] - ts[n - 3];
            let rho = if d_before > 0.0 { d_last / d_before } else { 0.0 };
            if rho > 0.0 && rho < 1.0 {
                ts[n - 1] + d_last * rho / (1.0 - rho)
            } else {
                ts[n - 1]
            }
        }
    };
    raw.max(terminal)
}
