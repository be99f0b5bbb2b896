//! Sequential per-step coupling: Navier-Stokes solve, level-set advection,
//! front relay, fast-marching redistance, rest relaxation, phase and
//! curvature refresh. One immutable snapshot per step; no fixed-point
//! iteration between mesh motion and the flow solve.

use crate::analysis::{benchmark_quantities, mass_per_phase, BenchmarkRow};
use crate::fastmarch::fast_march;
use crate::front::{capillary_dt_max, curvature_field, extract_front_chains, front_h_min, FrontChains};
use crate::io::{save_benchmark_csv, save_relay_csv, save_vtk, RelayDiagRow, VtkFields};
use crate::levelset::{classify_elements, LevelSetSolver, PhaseLabels};
use crate::mesh::{Mesh, DEFAULT_ANGLE_TOL};
use crate::ns::{
    mesh_velocity, nodal_modified_pressure, BoundaryConditions, FlowState, FluidProperties,
    NsOptions, NsSolver, StepInputs,
};
use crate::relay::{check_conformity, move_front, relax_to_rest, snap_front_levelset, RelayOutcome};
use crate::{Error, Result, Vec2};
use std::path::{Path, PathBuf};

/// Default rest-relaxation rate per step.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Per-step diagnostics carried in the snapshot.
#[derive(Debug, Clone, Default)]
pub struct StepDiagnostics {
    pub mass_omega1: f64,
    pub mass_omega2: f64,
    pub min_area: f64,
    pub max_cap_band: usize,
    pub relay: RelayOutcome,
    pub newton_iters: usize,
}

/// One immutable snapshot of the simulation.
#[derive(Clone)]
pub struct SimState {
    pub t: f64,
    pub n: usize,
    pub mesh: Mesh,
    /// Positions at the previous step (equal to current at n = 0).
    pub prev_positions: Vec<Vec2>,
    pub flow: FlowState,
    pub phi: Vec<f64>,
    pub phases: PhaseLabels,
    pub chains: FrontChains,
    pub kappa: Vec<f64>,
    pub diagnostics: StepDiagnostics,
}

impl SimState {
    pub fn mass(&self) -> (f64, f64) {
        (self.diagnostics.mass_omega1, self.diagnostics.mass_omega2)
    }
}

/// How the front is driven. The full pipeline solves Navier-Stokes; the test
/// drivers substitute that stage (the stage sequence is unchanged), which is
/// how the relay and transport machinery are exercised in isolation.
pub enum FrontDriver {
    /// Full flow solve.
    Flow,
    /// Prescribed nodal velocity u(x, t); the level set is still advected.
    PrescribedVelocity(Box<dyn Fn(Vec2, f64) -> Vec2>),
    /// Prescribed level set phi(x, t); flow and advection are bypassed.
    PrescribedLevelSet(Box<dyn Fn(Vec2, f64) -> f64>),
}

pub struct Pipeline {
    pub driver: FrontDriver,
    ns: Option<NsSolver>,
    pub ls: LevelSetSolver,
    pub props: FluidProperties,
    pub alpha: f64,
    /// Abort threshold for inverted elements, relative to the largest rest
    /// area (exact zeros are legal, genuine inversions are not).
    inversion_tol: f64,
}

impl Pipeline {
    /// Builds the full flow pipeline.
    pub fn new(
        mesh: &Mesh,
        bcs: &BoundaryConditions,
        pin_node: Option<usize>,
        props: FluidProperties,
        opts: NsOptions,
    ) -> Result<Pipeline> {
        Ok(Pipeline {
            driver: FrontDriver::Flow,
            ns: Some(NsSolver::new(mesh, bcs, pin_node, opts)?),
            ls: LevelSetSolver::new(mesh),
            props,
            alpha: DEFAULT_ALPHA,
            inversion_tol: 1e-12,
        })
    }

    /// Pipeline with a substituted front driver (no flow solve).
    pub fn with_driver(mesh: &Mesh, props: FluidProperties, driver: FrontDriver) -> Pipeline {
        Pipeline {
            driver,
            ns: None,
            ls: LevelSetSolver::new(mesh),
            props,
            alpha: DEFAULT_ALPHA,
            inversion_tol: 1e-12,
        }
    }

    /// Executes one coupled step and returns the next snapshot.
    ///
    /// Stage order: mesh velocity, flow solve, level-set advection, relay,
    /// relaxation, fast marching, then phase classification, chain and
    /// curvature refresh, diagnostics.
    pub fn advance_step(&mut self, state: &SimState, dt: f64) -> Result<SimState> {
        assert!(dt > 0.0);
        let t_next = state.t + dt;
        let nn = state.mesh.node_count();

        // 1. Mesh velocity from the last two position snapshots.
        let u_mesh = mesh_velocity(state.mesh.positions(), &state.prev_positions, dt);

        // 2. Flow solve (or prescribed velocity).
        let flow_next: FlowState = match &self.driver {
            FrontDriver::Flow => {
                let ns = self.ns.as_mut().expect("flow pipeline has an NS solver");
                let inputs = StepInputs {
                    mesh: &state.mesh,
                    u_mesh: &u_mesh,
                    phases: &state.phases,
                    kappa: &state.kappa,
                    props: &self.props,
                    dt,
                };
                ns.step(&inputs, &state.flow)
                    .map_err(|e| e.in_stage("navier-stokes"))?
            }
            FrontDriver::PrescribedVelocity(f) => FlowState {
                u: state
                    .mesh
                    .positions()
                    .iter()
                    .map(|&p| f(p, t_next))
                    .collect(),
                p: vec![0.0; nn],
            },
            FrontDriver::PrescribedLevelSet(_) => FlowState::quiescent(nn),
        };

        // 3. Level-set advection on the frozen mesh.
        let phi_adv: Vec<f64> = match &self.driver {
            FrontDriver::PrescribedLevelSet(f) => state
                .mesh
                .positions()
                .iter()
                .map(|&p| f(p, t_next))
                .collect(),
            _ => self
                .ls
                .advect(&state.mesh, &state.phi, &flow_next.u, dt)
                .map_err(|e| e.in_stage("level-set advection"))?,
        };

        // 4. Front relay on a fresh mesh snapshot.
        let mut mesh_next = state.mesh.clone();
        let relay = move_front(&mut mesh_next, &phi_adv, &state.phi)
            .map_err(|e| e.in_stage("front relay"))?;
        let mut phi_snapped = phi_adv;
        snap_front_levelset(&mut phi_snapped, mesh_next.front_flags());
        check_conformity(&mesh_next, &phi_snapped).map_err(|e| e.in_stage("front relay"))?;

        // 5. Relaxation of retired nodes toward rest positions. This runs
        // before the redistancing pass so the rebuilt level set measures
        // distances at the final node positions; redistancing first would
        // leave stale values on every relaxed node and bias the next
        // transport step.
        let protected: Vec<bool> = mesh_next.front_flags().to_vec();
        relax_to_rest(&mut mesh_next, self.alpha, &protected);

        // 6. Fast-marching redistance, seeded at the new front.
        let has_front = mesh_next.front_flags().iter().any(|&f| f);
        let phi_next = if has_front {
            let fm = fast_march(&mesh_next, mesh_next.front_flags(), &phi_snapped)
                .map_err(|e| e.in_stage("fast marching"))?;
            if !fm.unreachable.is_empty() {
                return Err(Error::Mesh(format!(
                    "{} nodes unreachable from the front seeds",
                    fm.unreachable.len()
                ))
                .in_stage("fast marching"));
            }
            fm.phi
        } else {
            phi_snapped
        };

        // Inversion guard over the whole mesh.
        let max_rest = (0..mesh_next.triangle_count())
            .map(|t| mesh_next.rest_area(t))
            .fold(0.0f64, f64::max);
        let min_area = mesh_next.min_area();
        if min_area < -self.inversion_tol * max_rest {
            return Err(Error::Mesh(format!(
                "inverted triangle after relay/relaxation: min area {min_area:.3e}"
            ))
            .in_stage("front relay"));
        }

        // 7-8. Phase classification, chains, curvature.
        let phases = classify_elements(&mesh_next, &phi_next, &state.phases)
            .map_err(|e| e.in_stage("phase classification"))?;
        let chains = extract_front_chains(&mesh_next, &phases);
        let kappa = curvature_field(&mesh_next, &chains);

        // 9. Diagnostics.
        let (m1, m2) = mass_per_phase(&mesh_next, &phases);
        let diagnostics = StepDiagnostics {
            mass_omega1: m1,
            mass_omega2: m2,
            min_area,
            max_cap_band: mesh_next.cap_band_census(DEFAULT_ANGLE_TOL),
            relay,
            newton_iters: self.ns.as_ref().map(|s| s.last_newton_iters).unwrap_or(0),
        };

        Ok(SimState {
            t: t_next,
            n: state.n + 1,
            prev_positions: state.mesh.positions().to_vec(),
            mesh: mesh_next,
            flow: flow_next,
            phi: phi_next,
            phases,
            chains,
            kappa,
            diagnostics,
        })
    }
}

/// Builds the initial snapshot from a conformed mesh and its fields.
pub fn initial_state(
    mesh: Mesh,
    flow: FlowState,
    phi: Vec<f64>,
    phases: PhaseLabels,
) -> SimState {
    let chains = extract_front_chains(&mesh, &phases);
    let kappa = curvature_field(&mesh, &chains);
    let (m1, m2) = mass_per_phase(&mesh, &phases);
    let diagnostics = StepDiagnostics {
        mass_omega1: m1,
        mass_omega2: m2,
        min_area: mesh.min_area(),
        max_cap_band: mesh.cap_band_census(DEFAULT_ANGLE_TOL),
        relay: RelayOutcome::default(),
        newton_iters: 0,
    };
    SimState {
        t: 0.0,
        n: 0,
        prev_positions: mesh.positions().to_vec(),
        mesh,
        flow,
        phi,
        phases,
        chains,
        kappa,
        diagnostics,
    }
}

/// Time-step request: fixed or 0.9 times the capillary bound at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSpec {
    Fixed(f64),
    Auto,
}

/// Driver options for [`run`].
pub struct RunOptions {
    pub dt: DtSpec,
    pub t_end: f64,
    pub out_dir: Option<PathBuf>,
    /// Output cadence in steps (>= 1).
    pub cadence: usize,
    pub write_vtk: bool,
}

#[derive(Debug, serde::Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t_end: f64,
    pub dt: f64,
    pub wall_time_s: f64,
    pub mass_omega1: f64,
    pub mass_omega2: f64,
    pub min_area: f64,
    pub max_cap_band: usize,
    pub factorizations_hint: usize,
}

/// Resolves the time step: auto = 0.9x the capillary bound evaluated on the
/// initial front.
pub fn resolve_dt(spec: DtSpec, state: &SimState, props: &FluidProperties) -> Result<f64> {
    match spec {
        DtSpec::Fixed(dt) if dt > 0.0 => Ok(dt),
        DtSpec::Fixed(dt) => Err(Error::Config(format!("dt must be positive, got {dt}"))),
        DtSpec::Auto => {
            if props.sigma <= 0.0 {
                return Err(Error::Config(
                    "dt \"auto\" uses the capillary bound and needs sigma > 0".into(),
                ));
            }
            let h = front_h_min(&state.mesh, &state.chains).ok_or_else(|| {
                Error::Config("dt \"auto\" needs a nonempty front at t = 0".into())
            })?;
            Ok(0.9 * capillary_dt_max(props.rho[0], props.rho[1], h, props.sigma))
        }
    }
}

fn write_snapshot(dir: &Path, state: &SimState, sigma: f64) -> Result<()> {
    let pbar = nodal_modified_pressure(&state.flow.p, &state.kappa, sigma);
    let fields = VtkFields {
        phi: Some(&state.phi),
        pressure: Some(&state.flow.p),
        modified_pressure: Some(&pbar),
        velocity: Some(&state.flow.u),
        phases: Some(&state.phases),
    };
    save_vtk(
        &dir.join(format!("snapshot_{:06}.vtk", state.n)),
        &state.mesh,
        &fields,
    )
}

/// Runs the pipeline to `t_end`, writing VTK snapshots, the benchmark CSV,
/// the relay diagnostics CSV and a JSON run summary at the configured
/// cadence. On a stage failure the last good snapshot is written before the
/// error propagates.
pub fn run(
    pipeline: &mut Pipeline,
    state0: SimState,
    opts: &RunOptions,
) -> Result<(SimState, Vec<BenchmarkRow>)> {
    let start = std::time::Instant::now();
    let dt = resolve_dt(opts.dt, &state0, &pipeline.props)?;
    let steps = if opts.t_end <= 0.0 {
        0
    } else {
        ((opts.t_end / dt) - 1e-9).ceil() as usize
    };
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut bench: Vec<BenchmarkRow> = Vec::new();
    let mut relay_rows: Vec<RelayDiagRow> = Vec::new();
    let sigma = pipeline.props.sigma;

    let record = |state: &SimState, bench: &mut Vec<BenchmarkRow>, rows: &mut Vec<RelayDiagRow>| {
        if state.diagnostics.mass_omega2 > 0.0 {
            if let Ok(row) = benchmark_quantities(
                state.t,
                &state.mesh,
                &state.phases,
                &state.flow.u,
                &state.chains,
            ) {
                bench.push(row);
            }
        }
        rows.push(RelayDiagRow {
            step: state.n,
            n_active: state.diagnostics.relay.n_active,
            n_moved: state.diagnostics.relay.n_moved,
            n_caps: 0,
            max_cap_band: state.diagnostics.max_cap_band,
            min_area: state.diagnostics.min_area,
        });
    };

    let mut state = state0;
    record(&state, &mut bench, &mut relay_rows);
    if let Some(dir) = &opts.out_dir {
        if opts.write_vtk {
            write_snapshot(dir, &state, sigma)?;
        }
    }

    for k in 1..=steps {
        match pipeline.advance_step(&state, dt) {
            Ok(next) => state = next,
            Err(e) => {
                // Preserve the last good snapshot for post-mortem.
                if let Some(dir) = &opts.out_dir {
                    let _ = write_snapshot(dir, &state, sigma);
                    let _ = save_relay_csv(&dir.join("relay_diag.csv"), &relay_rows);
                    if !bench.is_empty() {
                        let _ = save_benchmark_csv(&dir.join("bench.csv"), &bench);
                    }
                }
                return Err(e);
            }
        }
        record(&state, &mut bench, &mut relay_rows);
        if let Some(dir) = &opts.out_dir {
            if opts.write_vtk && (k % opts.cadence == 0 || k == steps) {
                write_snapshot(dir, &state, sigma)?;
            }
        }
    }

    if let Some(dir) = &opts.out_dir {
        save_relay_csv(&dir.join("relay_diag.csv"), &relay_rows)?;
        if !bench.is_empty() {
            save_benchmark_csv(&dir.join("bench.csv"), &bench)?;
        }
        let summary = RunSummary {
            steps: state.n,
            t_end: state.t,
            dt,
            wall_time_s: start.elapsed().as_secs_f64(),
            mass_omega1: state.diagnostics.mass_omega1,
            mass_omega2: state.diagnostics.mass_omega2,
            min_area: state.diagnostics.min_area,
            max_cap_band: state.diagnostics.max_cap_band,
            factorizations_hint: 0,
        };
        let f = std::fs::File::create(dir.join("summary.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), &summary)
            .map_err(|e| Error::Config(format!("summary serialization failed: {e}")))?;
    }
    Ok((state, bench))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_rect_mesh;
    use crate::levelset::Phase;
    use crate::relay::conform_initial;

    fn single_fluid_state(mesh: Mesh) -> SimState {
        let nn = mesh.node_count();
        let phases = PhaseLabels {
            label: vec![Phase::Omega1; mesh.triangle_count()],
            triple_zero: vec![false; mesh.triangle_count()],
        };
        initial_state(mesh, FlowState::quiescent(nn), vec![-1.0; nn], phases)
    }

    #[test]
    fn quiescent_single_fluid_five_steps() {
        // Gravity on, no front: velocity stays at solver precision and the
        // mesh never moves.
        let mesh = generate_rect_mesh(1.0, 1.0, 6, 6).unwrap();
        let props = FluidProperties {
            rho: [1000.0, 1000.0],
            mu: [1.0, 1.0],
            gravity: Vec2::new(0.0, -9.81),
            sigma: 0.0,
        };
        let bcs = BoundaryConditions::free_slip_everywhere();
        let mut pipe =
            Pipeline::new(&mesh, &bcs, Some(0), props, NsOptions::default()).unwrap();
        let mut state = single_fluid_state(mesh);
        let rest = state.mesh.positions().to_vec();
        for _ in 0..5 {
            state = pipe.advance_step(&state, 0.02).unwrap();
            let umax = state.flow.u.iter().map(|v| v.norm()).fold(0f64, f64::max);
            assert!(umax <= 1e-10, "umax = {umax}");
            assert_eq!(state.mesh.positions(), rest.as_slice());
        }
        assert_eq!(state.n, 5);
        assert!((state.t - 0.1).abs() < 1e-12);
    }

    #[test]
    fn prescribed_velocity_translates_front() {
        // Planar front, uniform prescribed velocity: after k steps the front
        // sits at initial + k dt u within a fast-march tolerance.
        let n = 32;
        let mut mesh = generate_rect_mesh(1.0, 1.0, n, n).unwrap();
        let h = 1.0 / n as f64;
        let x0 = 0.31 + 0.13 * h;
        let phi0: Vec<f64> = (0..mesh.node_count())
            .map(|i| mesh.position(i).x - x0)
            .collect();
        let phi = conform_initial(&mut mesh, &phi0).unwrap();
        let phases = PhaseLabels::from_centroid_signs(&mesh, &phi);
        let nn = mesh.node_count();
        let state0 = initial_state(mesh, FlowState::quiescent(nn), phi, phases);

        let props = FluidProperties {
            rho: [1.0, 1.0],
            mu: [1.0, 1.0],
            gravity: Vec2::ZERO,
            sigma: 0.0,
        };
        let speed = 0.37;
        let mut pipe = Pipeline::with_driver(
            &state0.mesh,
            props,
            FrontDriver::PrescribedVelocity(Box::new(move |_, _| Vec2::new(speed, 0.0))),
        );
        let dt = 0.4 * h / speed;
        let k = 12;
        let mut state = state0;
        for _ in 0..k {
            state = pipe.advance_step(&state, dt).unwrap();
        }
        let expect = x0 + k as f64 * dt * speed;
        // Every front node must sit on the plane x = expect within a
        // fast-march-level tolerance.
        let mut n_front = 0;
        for i in 0..state.mesh.node_count() {
            if state.mesh.is_front(i) {
                n_front += 1;
                let x = state.mesh.position(i).x;
                assert!((x - expect).abs() <= 0.5 * h, "front node at x = {x}, expect {expect}");
            }
        }
        assert!(n_front >= n);
    }

    #[test]
    fn zero_t_end_writes_initial_only() {
        let mesh = generate_rect_mesh(1.0, 1.0, 4, 4).unwrap();
        let props = FluidProperties {
            rho: [1.0, 1.0],
            mu: [1.0, 1.0],
            gravity: Vec2::ZERO,
            sigma: 0.0,
        };
        let bcs = BoundaryConditions::free_slip_everywhere();
        let mut pipe =
            Pipeline::new(&mesh, &bcs, Some(0), props, NsOptions::default()).unwrap();
        let state = single_fluid_state(mesh);
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            dt: DtSpec::Fixed(0.1),
            t_end: 0.0,
            out_dir: Some(dir.path().to_path_buf()),
            cadence: 1,
            write_vtk: true,
        };
        let (final_state, _) = run(&mut pipe, state, &opts).unwrap();
        assert_eq!(final_state.n, 0);
        assert!(dir.path().join("snapshot_000000.vtk").exists());
        assert!(dir.path().join("summary.json").exists());
    }
}
