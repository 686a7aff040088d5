//! Trajectory CSV and JSON report writers.
//!
//! CSV values carry 17 significant digits so downstream plotting and
//! regression baselines are exact; identical runs produce byte-identical
//! files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use grslab_core::model::{SpecialState, StateS, StateT, Termination, Trajectory};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

/// CSV of a geometric-coordinate trajectory:
/// `t,H,dH,F,dF,f,df,trL,S,C,C1`.
pub fn trajectory_t_csv(traj: &Trajectory<StateT>) -> String {
    let mut out = String::from("t,H,dH,F,dF,f,df,trL,S,C,C1\n");
    for s in &traj.samples {
        let st = &s.state;
        let d = s.diagnostics.expect("geometric trajectories carry diagnostics");
        push_row(
            &mut out,
            &[st.t, st.h, st.dh, st.f, st.df, st.phi, st.dphi, d.trl, d.scalar, d.c, d.c1],
        );
    }
    out
}

/// CSV of a fiber-arclength trajectory:
/// `s,alpha,dalpha,beta,dbeta,phi,dphi`.
pub fn trajectory_s_csv(traj: &Trajectory<StateS>) -> String {
    let mut out = String::from("s,alpha,dalpha,beta,dbeta,phi,dphi\n");
    for s in &traj.samples {
        let st = &s.state;
        push_row(&mut out, &[st.s, st.alpha, st.dalpha, st.beta, st.dbeta, st.phi, st.dphi]);
    }
    out
}

/// CSV of a polynomial-system trajectory: `s,x2,y1,y2,ratio`.
pub fn trajectory_special_csv(traj: &Trajectory<SpecialState>) -> String {
    let mut out = String::from("s,x2,y1,y2,ratio\n");
    for s in &traj.samples {
        let st = &s.state;
        push_row(&mut out, &[st.s, st.x2, st.y1, st.y2, st.y2 / st.y1]);
    }
    out
}

/// JSON-friendly termination record.
#[derive(Debug, Serialize)]
pub struct TerminationJson {
    pub cause: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
}

impl TerminationJson {
    pub fn from(t: &Termination) -> Self {
        let mut out = Self { cause: t.label(), t: None, t_estimate: None, component: None, event: None };
        match t {
            Termination::Horizon => {}
            Termination::Blowup { t_estimate, component } => {
                out.t_estimate = Some(*t_estimate);
                out.component = Some(component.clone());
            }
            Termination::Vanishing { component } => out.component = Some(component.clone()),
            Termination::StepUnderflow { t } => out.t = Some(*t),
            Termination::Event { name } => out.event = Some(name.clone()),
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct EventJson {
    pub name: String,
    pub t: f64,
    pub bracket: (f64, f64),
    pub stopped: bool,
}

pub fn events_json<St>(traj: &Trajectory<St>) -> Vec<EventJson> {
    traj.events
        .iter()
        .map(|e| EventJson { name: e.name.clone(), t: e.t, bracket: e.bracket, stopped: e.stopped })
        .collect()
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}
