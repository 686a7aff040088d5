//! Parameter sweeps: a grid over dotted config paths, each point run as
//! an independent configured command into its own directory, with an
//! index written last in deterministic order.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::Result;
use serde::Serialize;

use crate::commands::{cmd_blowup, cmd_integrate, cmd_shoot, cmd_transform, Ctx};
use crate::config::{apply_override, ConfigError, RunConfig, SweepCommand};

#[derive(Serialize)]
struct IndexEntry {
    index: usize,
    key: String,
    overrides: serde_json::Map<String, serde_json::Value>,
    dir: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn value_key(v: &serde_json::Value) -> String {
    v.to_string().replace(['/', '\\', '"', ' '], "_")
}

/// Expand the grid (cartesian product, fields in sorted order, values in
/// listed order) into per-point override lists.
fn grid_points(
    grid: &std::collections::BTreeMap<String, Vec<serde_json::Value>>,
) -> Vec<Vec<(String, serde_json::Value)>> {
    let mut points: Vec<Vec<(String, serde_json::Value)>> = vec![Vec::new()];
    for (field, values) in grid {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for base in &points {
            for v in values {
                let mut p = base.clone();
                p.push((field.clone(), v.clone()));
                next.push(p);
            }
        }
        points = next;
    }
    points
}

/// Run every grid point concurrently (distinct output directories), then
/// write the index in key order.
pub fn cmd_sweep(
    doc: &serde_json::Value,
    cfg: &RunConfig,
    out_dir: &Path,
    rtol: Option<f64>,
    atol: Option<f64>,
) -> Result<i32> {
    let sweep = cfg.sweep.as_ref().ok_or(ConfigError("missing sweep section".into()))?;
    if sweep.grid.is_empty() {
        return Err(ConfigError("sweep grid is empty".into()).into());
    }
    let points = grid_points(&sweep.grid);
    let command = sweep.command;

    // Base document without the sweep section.
    let mut base = doc.clone();
    if let Some(obj) = base.as_object_mut() {
        obj.remove("sweep");
    }

    let entries: Vec<Mutex<Option<IndexEntry>>> = (0..points.len()).map(|_| Mutex::new(None)).collect();
    let next_point = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2).min(points.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next_point.fetch_add(1, Ordering::Relaxed);
                if i >= points.len() {
                    break;
                }
                let overrides = &points[i];
                let mut key = format!("p{i:04}");
                for (field, value) in overrides {
                    let short = field.rsplit('.').next().unwrap_or(field);
                    key.push_str(&format!("_{short}={}", value_key(value)));
                }
                let dir = out_dir.join(&key);

                let run = || -> Result<i32> {
                    let mut point_doc = base.clone();
                    for (field, value) in overrides {
                        apply_override(&mut point_doc, field, value)?;
                    }
                    let point_cfg = RunConfig::from_json(&point_doc.to_string())?;
                    let ctx = Ctx::new(point_cfg, Some(dir.as_path()), rtol, atol)?;
                    match command {
                        SweepCommand::Integrate => cmd_integrate(&ctx),
                        SweepCommand::Shoot => cmd_shoot(&ctx),
                        SweepCommand::Blowup => cmd_blowup(&ctx),
                        SweepCommand::Transform => cmd_transform(&ctx),
                    }
                };
                let (exit_code, error) = match run() {
                    Ok(code) => (code, None),
                    Err(e) => (if e.is::<ConfigError>() { 2 } else { 1 }, Some(e.to_string())),
                };

                let mut map = serde_json::Map::new();
                for (field, value) in overrides {
                    map.insert(field.clone(), value.clone());
                }
                *entries[i].lock().unwrap() = Some(IndexEntry {
                    index: i,
                    key,
                    overrides: map,
                    dir: dir.to_string_lossy().into_owned(),
                    exit_code,
                    error,
                });
            });
        }
    });

    let index: Vec<IndexEntry> =
        entries.into_iter().map(|m| m.into_inner().unwrap().expect("every point ran")).collect();
    let all_ok = index.iter().all(|e| e.exit_code == 0);
    crate::output::write_json(out_dir, "index.json", &index)?;
    println!("sweep: {} points into {}", index.len(), out_dir.display());
    Ok(i32::from(!all_ok))
}
