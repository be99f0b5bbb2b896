//! Run configuration: a flat JSON document mapped onto the scenario catalog
//! and the pipeline driver.

use crate::analysis::BenchmarkRow;
use crate::coupling::{run, DtSpec, FrontDriver, Pipeline, RunOptions, SimState};
use crate::ns::NsOptions;
use crate::scenario::init_scenario;
use crate::{Error, Result};
use serde::Deserialize;
use serde_json::Value;
use std::collections::HashMap;
use std::path::PathBuf;

/// Mesh source: either a file (xmesh text format or Gmsh MSH 4.1 ASCII by
/// extension) or a generated rectangle.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
}

fn default_cadence() -> usize {
    1
}

fn default_write_vtk() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default)]
    pub overrides: HashMap<String, Value>,
    #[serde(default)]
    pub mesh: Option<MeshSource>,
    /// Time step: a number, or "auto" for 0.9x the capillary bound.
    #[serde(default)]
    pub dt: Option<Value>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Output cadence in steps.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Rest-relaxation rate per step.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Relative element-area floor.
    #[serde(default)]
    pub eps_area: Option<f64>,
    #[serde(default)]
    pub newton_rel_tol: Option<f64>,
    #[serde(default)]
    pub newton_abs_tol: Option<f64>,
    #[serde(default = "default_write_vtk")]
    pub write_vtk: bool,
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if let Some(t) = cfg.t_end {
        if !(t >= 0.0) {
            return Err(Error::Config(format!("t_end must be >= 0, got {t}")));
        }
    }
    if cfg.cadence == 0 {
        return Err(Error::Config("cadence must be >= 1".into()));
    }
    if let Some(a) = cfg.alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Config(format!("alpha must be in [0, 1], got {a}")));
        }
    }
    if let Some(e) = cfg.eps_area {
        if !(e > 0.0) {
            return Err(Error::Config(format!("eps_area must be > 0, got {e}")));
        }
    }
    if let Some(dt) = &cfg.dt {
        match dt {
            Value::String(s) if s == "auto" => {}
            Value::Number(n) if n.as_f64().map(|v| v > 0.0).unwrap_or(false) => {}
            other => {
                return Err(Error::Config(format!(
                    "dt must be a positive number or \"auto\", got {other}"
                )))
            }
        }
    }
    Ok(())
}

fn dt_spec(cfg: &RunConfig, scenario_default: DtSpec) -> DtSpec {
    match &cfg.dt {
        None => scenario_default,
        Some(Value::String(_)) => DtSpec::Auto,
        Some(Value::Number(n)) => DtSpec::Fixed(n.as_f64().unwrap()),
        Some(_) => scenario_default,
    }
}

/// Builds the scenario and executes the run loop described by the config.
pub fn execute(cfg: &RunConfig) -> Result<(SimState, Vec<BenchmarkRow>)> {
    let mut overrides = cfg.overrides.clone();
    if let Some(mesh_src) = &cfg.mesh {
        if mesh_src.file.is_some() {
            return Err(Error::Config(
                "mesh files are supported through the library API; scenario runs \
                 generate their rectangle meshes (set mesh.nx / mesh.ny)"
                    .into(),
            ));
        }
        if let Some(nx) = mesh_src.nx {
            overrides.insert("nx".into(), Value::from(nx));
        }
        if let Some(ny) = mesh_src.ny {
            overrides.insert("ny".into(), Value::from(ny));
        }
    }
    let scenario = init_scenario(&cfg.scenario, &overrides)?;

    let mut opts = NsOptions::default();
    if let Some(e) = cfg.eps_area {
        opts.eps_area = e;
    }
    if let Some(t) = cfg.newton_rel_tol {
        opts.newton_rel_tol = t;
    }
    if let Some(t) = cfg.newton_abs_tol {
        opts.newton_abs_tol = t;
    }

    let mut pipeline = match scenario.driver {
        FrontDriver::Flow => Pipeline::new(
            &scenario.state.mesh,
            &scenario.bcs,
            scenario.pin_node,
            scenario.props,
            opts,
        )?,
        driver => Pipeline::with_driver(&scenario.state.mesh, scenario.props, driver),
    };
    pipeline.alpha = cfg.alpha.unwrap_or(scenario.alpha);

    let out_dir = cfg.out_dir.clone().or_else(|| {
        std::env::var_os("XMESH_OUT_DIR")
            .map(|root| PathBuf::from(root).join(&scenario.name))
    });

    let run_opts = RunOptions {
        dt: dt_spec(cfg, scenario.default_dt),
        t_end: cfg.t_end.unwrap_or(scenario.default_t_end),
        out_dir,
        cadence: cfg.cadence,
        write_vtk: cfg.write_vtk,
    };
    run(&mut pipeline, scenario.state, &run_opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(r#"{"scenario":"static_bubble","t_end":0.1,"dt":"auto"}"#).unwrap();
        assert_eq!(cfg.scenario, "static_bubble");
        assert_eq!(cfg.t_end, Some(0.1));
        assert_eq!(cfg.cadence, 1);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config(r#"{"scenario":"hysing","frobnicate":1}"#).is_err());
    }

    #[test]
    fn bad_cadence_rejected() {
        assert!(parse_config(r#"{"scenario":"hysing","cadence":0}"#).is_err());
    }

    #[test]
    fn bad_dt_rejected() {
        assert!(parse_config(r#"{"scenario":"hysing","dt":"fast"}"#).is_err());
        assert!(parse_config(r#"{"scenario":"hysing","dt":-0.1}"#).is_err());
        assert!(parse_config(r#"{"scenario":"hysing","dt":"auto"}"#).is_ok());
    }

    #[test]
    fn unknown_scenario_surfaces_at_execute() {
        let cfg = parse_config(r#"{"scenario":"nope","t_end":0.0}"#).unwrap();
        assert!(matches!(
            execute(&cfg),
            Err(crate::Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn zero_steps_run() {
        let cfg = parse_config(
            r#"{"scenario":"spiral","t_end":0.0,"write_vtk":false,
                "mesh":{"nx":12,"ny":12}}"#,
        )
        .unwrap();
        let (state, _) = execute(&cfg).unwrap();
        assert_eq!(state.n, 0);
    }
}
