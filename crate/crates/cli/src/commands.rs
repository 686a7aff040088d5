//! Subcommand implementations. All file output goes through `output`;
//! exit codes are 0 (success / all checks pass), 1 (a check or run
//! failed), 2 (config error — handled in `main`).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use serde::Serialize;

use grslab_core::checks;
use grslab_core::integrator::IntegratorConfig;
use grslab_core::model::StateVector;
use grslab_core::ode_s::{to_s, to_t};
use grslab_core::ode_t::{
    first_integral_drift, integrate_t, qualitative_report, step_off, ReportOptions,
};
use grslab_core::special::BlowupExperiment;

use crate::config::{ConfigError, FormulationCfg, RunConfig};
use crate::output::{
    events_json, fmt_f64, trajectory_s_csv, trajectory_special_csv, trajectory_t_csv, write_json,
    write_text, EventJson, TerminationJson,
};

pub struct Ctx {
    pub cfg: RunConfig,
    pub int_cfg: IntegratorConfig,
    pub out_dir: PathBuf,
    pub prefix: String,
}

impl Ctx {
    pub fn new(cfg: RunConfig, out_override: Option<&Path>, rtol: Option<f64>, atol: Option<f64>) -> Result<Self> {
        let mut int_cfg = cfg.integrator.build()?;
        if let Some(r) = rtol {
            int_cfg.rtol = r;
        }
        if let Some(a) = atol {
            int_cfg.atol = a;
        }
        int_cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        let out = cfg.output.clone().unwrap_or_default();
        let out_dir = out_override
            .map(Path::to_path_buf)
            .or_else(|| out.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let prefix = out.prefix.unwrap_or_else(|| "run".into());
        Ok(Self { cfg, int_cfg, out_dir, prefix })
    }

    fn file(&self, suffix: &str) -> String {
        format!("{}_{suffix}", self.prefix)
    }
}

/// Run the verification table; exit 0 iff everything passes.
pub fn cmd_verify(int_cfg: &IntegratorConfig, tolerance_override: Option<f64>) -> i32 {
    let results = checks::run_all(int_cfg, tolerance_override);
    println!("{:<50} {:>13} {:>10} {:>6}", "check", "max error", "tolerance", "status");
    println!("{}", "-".repeat(83));
    let mut failures = 0;
    for r in &results {
        println!(
            "{:<50} {:>13.4e} {:>10.1e} {:>6}",
            r.name,
            r.value,
            r.tol,
            if r.pass { "pass" } else { "FAIL" }
        );
        if !r.pass {
            failures += 1;
            println!("    {}", r.detail);
        }
    }
    println!("{}", "-".repeat(83));
    println!("{} checks, {} failed", results.len(), failures);
    i32::from(failures > 0)
}

#[derive(Serialize)]
struct SummaryJson {
    formulation: &'static str,
    samples: usize,
    span: (f64, f64),
    termination: TerminationJson,
    events: Vec<EventJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift_c: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift_c1: Option<String>,
}

/// Integrate one configured run and write the trajectory plus a summary
/// record.
pub fn cmd_integrate(ctx: &Ctx) -> Result<i32> {
    let p = ctx.cfg.params.build()?;
    let horizon = ctx.cfg.horizon()?;
    let events = ctx.cfg.events()?;

    match ctx.cfg.formulation {
        FormulationCfg::T => {
            let state0 = initial_state_t(&ctx.cfg)?;
            let traj = integrate_t(&p, &state0, horizon, &ctx.int_cfg, events, &[])
                .map_err(|e| anyhow!("{e}"))?;
            let (dc, dc1) = first_integral_drift(&traj).map_err(|e| anyhow!("{e}"))?;
            let summary = SummaryJson {
                formulation: "t",
                samples: traj.len(),
                span: (
                    traj.first().map(|s| s.state.t).unwrap_or(f64::NAN),
                    traj.last().map(|s| s.state.t).unwrap_or(f64::NAN),
                ),
                termination: TerminationJson::from(&traj.termination),
                events: events_json(&traj),
                drift_c: Some(fmt_f64(dc)),
                drift_c1: Some(fmt_f64(dc1)),
            };
            write_text(&ctx.out_dir, &ctx.file("trajectory.csv"), &trajectory_t_csv(&traj))?;
            write_json(&ctx.out_dir, &ctx.file("summary.json"), &summary)?;
        }
        FormulationCfg::S => {
            let initial = ctx.cfg.initial.ok_or(ConfigError("missing initial section".into()))?;
            let state0 = initial.state_s()?;
            let traj = grslab_core::ode_s::integrate_s(&p, &state0, horizon, &ctx.int_cfg, events, &[])
                .map_err(|e| anyhow!("{e}"))?;
            let summary = SummaryJson {
                formulation: "s",
                samples: traj.len(),
                span: (
                    traj.first().map(|s| s.state.s).unwrap_or(f64::NAN),
                    traj.last().map(|s| s.state.s).unwrap_or(f64::NAN),
                ),
                termination: TerminationJson::from(&traj.termination),
                events: events_json(&traj),
                drift_c: None,
                drift_c1: None,
            };
            write_text(&ctx.out_dir, &ctx.file("trajectory.csv"), &trajectory_s_csv(&traj))?;
            write_json(&ctx.out_dir, &ctx.file("summary.json"), &summary)?;
        }
        FormulationCfg::Special => {
            let initial = ctx.cfg.initial.ok_or(ConfigError("missing initial section".into()))?;
            let state0 = initial.state_special()?;
            if !ctx.cfg.events.is_empty() {
                return Err(ConfigError(
                    "events on the polynomial system are managed by the blowup command".into(),
                )
                .into());
            }
            let (traj, _) =
                grslab_core::special::integrate_special(p.m, p.k, &state0, horizon, &ctx.int_cfg, None)
                    .map_err(|e| anyhow!("{e}"))?;
            let summary = SummaryJson {
                formulation: "special",
                samples: traj.len(),
                span: (
                    traj.first().map(|s| s.state.s).unwrap_or(f64::NAN),
                    traj.last().map(|s| s.state.s).unwrap_or(f64::NAN),
                ),
                termination: TerminationJson::from(&traj.termination),
                events: events_json(&traj),
                drift_c: None,
                drift_c1: None,
            };
            write_text(&ctx.out_dir, &ctx.file("trajectory.csv"), &trajectory_special_csv(&traj))?;
            write_json(&ctx.out_dir, &ctx.file("summary.json"), &summary)?;
        }
    }
    Ok(0)
}

fn initial_state_t(cfg: &RunConfig) -> Result<grslab_core::model::StateT> {
    let p = cfg.params.build()?;
    if let Some(shooting) = &cfg.shooting {
        let sc = shooting.build(cfg.horizon()?);
        let (state0, _) = step_off(&p, &sc).map_err(|e| ConfigError(e.to_string()))?;
        Ok(state0)
    } else if let Some(initial) = &cfg.initial {
        Ok(initial.state_t()?)
    } else {
        Err(ConfigError("need an initial or shooting section".into()).into())
    }
}

#[derive(Serialize)]
struct ShootReportJson {
    h_increasing: bool,
    dh_sign_changes: u32,
    f_extremum_count: u32,
    f_growth: String,
    min_f: String,
    trl_in_window: bool,
    scalar_nonincreasing: bool,
    scalar_at_tmin: String,
    scalar_at_end: String,
    scalar_decayed_10x: bool,
    trivial_soliton: bool,
    drift_c: String,
    drift_c1: String,
    termination: TerminationJson,
}

/// Singular-orbit shooting run plus the qualitative report.
pub fn cmd_shoot(ctx: &Ctx) -> Result<i32> {
    if ctx.cfg.formulation != FormulationCfg::T {
        return Err(ConfigError("shoot requires the t formulation".into()).into());
    }
    let p = ctx.cfg.params.build()?;
    let shooting = ctx.cfg.shooting.ok_or(ConfigError("missing shooting section".into()))?;
    let sc = shooting.build(ctx.cfg.horizon()?);
    let traj = grslab_core::ode_t::shoot(&p, &sc, &ctx.int_cfg).map_err(|e| anyhow!("{e}"))?;

    let opts = ReportOptions {
        t_min: 10.0 * sc.eps,
        hysteresis: 10.0 * ctx.int_cfg.atol,
        scalar_slack: 1e-8,
        trl_margin: 1e-6,
    };
    let rep = qualitative_report(&traj, &opts).map_err(|e| anyhow!("{e}"))?;
    let (dc, dc1) = first_integral_drift(&traj).map_err(|e| anyhow!("{e}"))?;

    let report = ShootReportJson {
        h_increasing: rep.h_increasing && rep.dh_sign_changes == 0,
        dh_sign_changes: rep.dh_sign_changes,
        f_extremum_count: rep.df_sign_changes,
        f_growth: fmt_f64(rep.f_growth),
        min_f: fmt_f64(rep.min_f),
        trl_in_window: rep.trl_in_bound,
        scalar_nonincreasing: rep.scalar_nonincreasing,
        scalar_at_tmin: fmt_f64(rep.scalar_at_tmin),
        scalar_at_end: fmt_f64(rep.scalar_at_end),
        scalar_decayed_10x: rep.scalar_at_end < 0.1 * rep.scalar_at_tmin,
        trivial_soliton: rep.trivial_soliton,
        drift_c: fmt_f64(dc),
        drift_c1: fmt_f64(dc1),
        termination: TerminationJson::from(&traj.termination),
    };
    write_text(&ctx.out_dir, &ctx.file("trajectory.csv"), &trajectory_t_csv(&traj))?;
    write_json(&ctx.out_dir, &ctx.file("report.json"), &report)?;
    println!(
        "shoot: H increasing = {}, F extrema = {}, F growth = {:.3}, trL window = {}, S nonincreasing = {}",
        report.h_increasing, report.f_extremum_count, rep.f_growth, report.trl_in_window,
        report.scalar_nonincreasing
    );
    Ok(0)
}

#[derive(Serialize)]
struct BlowupReportJson {
    hypothesis: &'static str,
    m: u32,
    k: f64,
    initial: (f64, f64, f64),
    bound: String,
    detected_time: String,
    bracket: (String, String),
    terminal: String,
    crossings: Vec<(String, String)>,
    time_within_bound: bool,
    x2_monotone: bool,
    ratio_increasing_near_end: bool,
    signs_preserved: bool,
    comparison_violations: usize,
    closed_form_y1_rel_err: String,
    closed_form_ratio_rel_err: String,
    closed_form_margin: f64,
    termination: TerminationJson,
}

/// Blow-up desk experiment with hypothesis checking, the singular-time
/// estimate against the proposition bound, and closed-form equivalences.
pub fn cmd_blowup(ctx: &Ctx) -> Result<i32> {
    if ctx.cfg.formulation != FormulationCfg::Special {
        return Err(ConfigError("blowup requires the special formulation".into()).into());
    }
    let p = ctx.cfg.params.build()?;
    let initial = ctx.cfg.initial.ok_or(ConfigError("missing initial section".into()))?;
    let st = initial.state_special()?;
    let exp = BlowupExperiment { m: p.m, k: p.k, x2_0: st.x2, y1_0: st.y1, y2_0: st.y2 };
    if let Err(e) = exp.hypothesis() {
        return Err(ConfigError(e.to_string()).into());
    }
    let report = exp.run(&ctx.int_cfg).map_err(|e| anyhow!("{e}"))?;

    let json = BlowupReportJson {
        hypothesis: match report.hypothesis {
            grslab_core::special::BlowupHypothesis::Y2Blowup => "y2_blowup",
            grslab_core::special::BlowupHypothesis::RatioBlowup => "ratio_blowup",
        },
        m: p.m,
        k: p.k,
        initial: (st.x2, st.y1, st.y2),
        bound: fmt_f64(report.bound),
        detected_time: fmt_f64(report.estimate.estimate),
        bracket: {
            let (lo, hi) = report.estimate.bracket();
            (fmt_f64(lo), fmt_f64(hi))
        },
        terminal: fmt_f64(report.terminal),
        crossings: report
            .estimate
            .crossings
            .iter()
            .map(|&(thr, t)| (fmt_f64(thr), fmt_f64(t)))
            .collect(),
        time_within_bound: report.within_bound,
        x2_monotone: report.x2_monotone,
        ratio_increasing_near_end: report.ratio_increasing_near_end,
        signs_preserved: report.signs_preserved,
        comparison_violations: report.comparison_violations,
        closed_form_y1_rel_err: fmt_f64(report.y1_rel_err),
        closed_form_ratio_rel_err: fmt_f64(report.ratio_rel_err),
        closed_form_margin: report.closed_form_margin,
        termination: TerminationJson::from(&report.traj.termination),
    };
    write_text(&ctx.out_dir, &ctx.file("trajectory.csv"), &trajectory_special_csv(&report.traj))?;
    write_json(&ctx.out_dir, &ctx.file("report.json"), &json)?;
    println!(
        "blowup: detected time {} vs bound {} -> {}",
        json.detected_time,
        json.bound,
        if report.within_bound { "within bound" } else { "BOUND VIOLATED" }
    );
    Ok(i32::from(!report.within_bound))
}

#[derive(Serialize)]
struct TransformReportJson {
    samples: usize,
    s_span: (String, String),
    roundtrip_sup_error: String,
    termination: TerminationJson,
}

/// Integrate in geometric coordinates, emit the arclength trajectory,
/// and report the roundtrip reconstruction error.
pub fn cmd_transform(ctx: &Ctx) -> Result<i32> {
    if ctx.cfg.formulation != FormulationCfg::T {
        return Err(ConfigError("transform requires the t formulation".into()).into());
    }
    let p = ctx.cfg.params.build()?;
    let horizon = ctx.cfg.horizon()?;
    let state0 = initial_state_t(&ctx.cfg)?;
    let traj = integrate_t(&p, &state0, horizon, &ctx.int_cfg, ctx.cfg.events()?, &[])
        .map_err(|e| anyhow!("{e}"))?;
    let s_traj = to_s(&traj).map_err(|e| anyhow!("{e}"))?;
    let round = to_t(&s_traj).map_err(|e| anyhow!("{e}"))?;

    let mut sup = 0.0f64;
    for (a, b) in traj.samples.iter().zip(round.samples.iter()) {
        let mut va = [0.0; 6];
        let mut vb = [0.0; 6];
        a.state.write_components(&mut va);
        b.state.write_components(&mut vb);
        for (x, y) in va.iter().zip(vb.iter()) {
            sup = sup.max((x - y).abs());
        }
        // The time map is normalized to the first sample on both legs.
        let ta = a.state.t - traj.first().unwrap().state.t;
        sup = sup.max((ta - b.state.t).abs());
    }

    let report = TransformReportJson {
        samples: s_traj.len(),
        s_span: (
            fmt_f64(s_traj.first().map(|s| s.state.s).unwrap_or(f64::NAN)),
            fmt_f64(s_traj.last().map(|s| s.state.s).unwrap_or(f64::NAN)),
        ),
        roundtrip_sup_error: fmt_f64(sup),
        termination: TerminationJson::from(&s_traj.termination),
    };
    write_text(&ctx.out_dir, &ctx.file("trajectory_t.csv"), &trajectory_t_csv(&traj))?;
    write_text(&ctx.out_dir, &ctx.file("trajectory_s.csv"), &trajectory_s_csv(&s_traj))?;
    write_json(&ctx.out_dir, &ctx.file("transform.json"), &report)?;
    println!("transform: {} samples, roundtrip sup error {}", s_traj.len(), report.roundtrip_sup_error);
    Ok(0)
}

