//! JSON run configuration: one structured document with top-level
//! sections for parameters, initial data, shooting data, integrator
//! settings, events, output, and sweep grids.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use grslab_core::integrator::{EventAction, EventSpec, IntegratorConfig, Trigger};
use grslab_core::model::{AnsatzParams, Formulation, SpecialState, StateS, StateT, StateVector};
use grslab_core::ode_t::ShootingConfig;

/// Errors that make a run impossible before any numerics start; these
/// exit with code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FormulationCfg {
    T,
    S,
    Special,
}

impl From<FormulationCfg> for Formulation {
    fn from(f: FormulationCfg) -> Self {
        match f {
            FormulationCfg::T => Formulation::T,
            FormulationCfg::S => Formulation::S,
            FormulationCfg::Special => Formulation::Special,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsCfg {
    #[serde(default)]
    pub lambda: f64,
    pub m: u32,
    #[serde(default)]
    pub q: u32,
    #[serde(default)]
    pub k: f64,
    /// Optional; defaults to `2m + 2` and is validated against it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_total: Option<u32>,
}

impl ParamsCfg {
    pub fn build(&self) -> Result<AnsatzParams, ConfigError> {
        let mut p = AnsatzParams::new(self.lambda, self.m, self.q, self.k);
        if let Some(d) = self.dim_total {
            p.dim_total = d;
        }
        p.validate().map_err(|e| err(format!("params: {e}")))
    }
}

/// Initial state; which fields are required depends on the formulation.
#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCfg {
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub s0: f64,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(rename = "dH", skip_serializing_if = "Option::is_none")]
    pub dh: Option<f64>,
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(rename = "dF", skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    #[serde(rename = "f", skip_serializing_if = "Option::is_none")]
    pub pot: Option<f64>,
    #[serde(rename = "df", skip_serializing_if = "Option::is_none")]
    pub dpot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dalpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dbeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dphi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y2: Option<f64>,
}

fn need(v: Option<f64>, name: &str) -> Result<f64, ConfigError> {
    v.ok_or_else(|| err(format!("initial: missing field {name}")))
}

impl InitialCfg {
    pub fn state_t(&self) -> Result<StateT, ConfigError> {
        Ok(StateT {
            t: self.t0,
            h: need(self.h, "H")?,
            dh: need(self.dh, "dH")?,
            f: need(self.f, "F")?,
            df: need(self.df, "dF")?,
            phi: self.pot.unwrap_or(0.0),
            dphi: need(self.dpot, "df")?,
        })
    }

    pub fn state_s(&self) -> Result<StateS, ConfigError> {
        Ok(StateS {
            s: self.s0,
            alpha: need(self.alpha, "alpha")?,
            dalpha: need(self.dalpha, "dalpha")?,
            beta: need(self.beta, "beta")?,
            dbeta: need(self.dbeta, "dbeta")?,
            phi: self.phi.unwrap_or(0.0),
            dphi: need(self.dphi, "dphi")?,
        })
    }

    pub fn state_special(&self) -> Result<SpecialState, ConfigError> {
        Ok(SpecialState {
            s: self.s0,
            x2: need(self.x2, "x2")?,
            y1: need(self.y1, "y1")?,
            y2: need(self.y2, "y2")?,
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ShootingCfg {
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_one")]
    pub h1: f64,
    #[serde(rename = "F0", default = "default_one")]
    pub f0: f64,
    /// Half the second potential derivative at the singular orbit.
    #[serde(rename = "f2", default)]
    pub phi2: f64,
    /// Potential value at the singular orbit.
    #[serde(rename = "f0", default)]
    pub phi0: f64,
}

fn default_eps() -> f64 {
    1e-3
}

fn default_one() -> f64 {
    1.0
}

impl Default for ShootingCfg {
    fn default() -> Self {
        Self { eps: 1e-3, h1: 1.0, f0: 1.0, phi2: 0.0, phi0: 0.0 }
    }
}

impl ShootingCfg {
    pub fn build(&self, horizon: f64) -> ShootingConfig {
        ShootingConfig {
            eps: self.eps,
            h1: self.h1,
            f0: self.f0,
            phi2: self.phi2,
            phi0: self.phi0,
            horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorCfg {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub hmin: f64,
    /// Unlimited when absent.
    pub hmax: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorCfg {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self { rtol: d.rtol, atol: d.atol, h0: d.h0, hmin: d.hmin, hmax: None, max_steps: d.max_steps }
    }
}

impl IntegratorCfg {
    pub fn build(&self) -> Result<IntegratorConfig, ConfigError> {
        let cfg = IntegratorConfig {
            rtol: self.rtol,
            atol: self.atol,
            h0: self.h0,
            hmin: self.hmin,
            hmax: self.hmax.unwrap_or(f64::INFINITY),
            max_steps: self.max_steps,
        };
        cfg.validate().map_err(|e| err(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum TriggerCfg {
    SignChange,
    Exceeds(f64),
    FallsBelow(f64),
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ActionCfg {
    Stop,
    Record,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EventCfg {
    pub name: String,
    /// State component watched by the event, named per formulation
    /// (`H,dH,F,dF,f,df`, `alpha,...`, or `x2,y1,y2`).
    pub component: String,
    pub trigger: TriggerCfg,
    pub action: ActionCfg,
}

impl EventCfg {
    pub fn build(&self, formulation: Formulation) -> Result<EventSpec, ConfigError> {
        let components: &[&str] = match formulation {
            Formulation::T => StateT::COMPONENTS,
            Formulation::S => StateS::COMPONENTS,
            Formulation::Special => SpecialState::COMPONENTS,
        };
        let index = components
            .iter()
            .position(|c| *c == self.component)
            .ok_or_else(|| {
                err(format!(
                    "events: unknown component {:?} for formulation (expected one of {components:?})",
                    self.component
                ))
            })?;
        let trigger = match self.trigger {
            TriggerCfg::SignChange => Trigger::SignChange,
            TriggerCfg::Exceeds(c) => Trigger::Exceeds(c),
            TriggerCfg::FallsBelow(c) => Trigger::FallsBelow(c),
        };
        let action = match self.action {
            ActionCfg::Stop => EventAction::Stop,
            ActionCfg::Record => EventAction::Record,
        };
        trigger.validate().map_err(|e| err(e.to_string()))?;
        Ok(EventSpec::component(self.name.clone(), index, trigger, action))
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputCfg {
    /// Output directory; overridden by `--out`.
    pub dir: Option<String>,
    /// File name prefix for this run's artifacts.
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    /// Which subcommand each grid point runs.
    pub command: SweepCommand,
    /// Dotted config paths to lists of values; the grid is the cartesian
    /// product in sorted field order.
    pub grid: BTreeMap<String, Vec<serde_json::Value>>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SweepCommand {
    Integrate,
    Shoot,
    Blowup,
    Transform,
}

/// The whole run configuration document.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub formulation: FormulationCfg,
    pub params: ParamsCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shooting: Option<ShootingCfg>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub integrator: IntegratorCfg,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepCfg>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn horizon(&self) -> Result<f64, ConfigError> {
        self.horizon.ok_or_else(|| err("missing horizon"))
    }

    pub fn events(&self) -> Result<Vec<EventSpec>, ConfigError> {
        self.events.iter().map(|e| e.build(self.formulation.into())).collect()
    }
}

/// Apply one dotted-path override to a JSON document (`shooting.f2`,
/// `params.k`, `integrator.rtol`, ...). Intermediate objects are created
/// as needed.
pub fn apply_override(
    doc: &mut serde_json::Value,
    path: &str,
    value: &serde_json::Value,
) -> Result<(), ConfigError> {
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| err(format!("override path {path}: {part} is not an object")))?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), value.clone());
            return Ok(());
        }
        node = obj.entry((*part).to_string()).or_insert_with(|| serde_json::json!({}));
    }
    Err(err(format!("empty override path {path:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_t_config_parses() {
        let cfg = RunConfig::from_json(
            r#"{
                "formulation": "t",
                "params": { "lambda": 0.0, "m": 1, "q": 1, "k": 2.0 },
                "shooting": { "eps": 1e-3, "h1": 1.0, "F0": 1.0, "f2": 0.0 },
                "horizon": 5.0
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.formulation, FormulationCfg::T);
        let p = cfg.params.build().unwrap();
        assert_eq!(p.dim_total, 4);
        let shoot = cfg.shooting.unwrap().build(cfg.horizon().unwrap());
        assert_eq!(shoot.phi2, 0.0);
        assert_eq!(shoot.f0, 1.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let res = RunConfig::from_json(
            r#"{ "formulation": "t", "params": { "m": 1 }, "horizont": 1.0 }"#,
        );
        assert!(res.is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let cfg = RunConfig::from_json(
            r#"{ "formulation": "t", "params": { "m": 1, "q": 2 }, "horizon": 1.0 }"#,
        )
        .unwrap();
        assert!(cfg.params.build().is_err());
    }

    #[test]
    fn event_component_mapping() {
        let ev = EventCfg {
            name: "big".into(),
            component: "y2".into(),
            trigger: TriggerCfg::Exceeds(1e8),
            action: ActionCfg::Stop,
        };
        assert!(ev.build(Formulation::Special).is_ok());
        assert!(ev.build(Formulation::T).is_err());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let mut doc = serde_json::json!({
            "formulation": "t",
            "params": { "m": 1, "k": 1.0 },
            "horizon": 1.0
        });
        apply_override(&mut doc, "params.k", &serde_json::json!(2.5)).unwrap();
        apply_override(&mut doc, "shooting.f2", &serde_json::json!(-0.5)).unwrap();
        assert_eq!(doc["params"]["k"], serde_json::json!(2.5));
        assert_eq!(doc["shooting"]["f2"], serde_json::json!(-0.5));
    }

    #[test]
    fn trigger_serde_shapes() {
        let t: TriggerCfg = serde_json::from_str(r#""sign_change""#).unwrap();
        assert_eq!(t, TriggerCfg::SignChange);
        let t: TriggerCfg = serde_json::from_str(r#"{ "exceeds": 1e8 }"#).unwrap();
        assert_eq!(t, TriggerCfg::Exceeds(1e8));
        let t: TriggerCfg = serde_json::from_str(r#"{ "falls_below": 0.5 }"#).unwrap();
        assert_eq!(t, TriggerCfg::FallsBelow(0.5));
    }
}
