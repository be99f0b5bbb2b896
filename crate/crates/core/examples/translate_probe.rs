// probe: area conservation of a translated circle through the pipeline
use xmesh_core::coupling::{initial_state, FrontDriver, Pipeline};
use xmesh_core::io::generate_rect_mesh;
use xmesh_core::levelset::{Phase, PhaseLabels};
use xmesh_core::ns::{FlowState, FluidProperties};
use xmesh_core::relay::{conform_initial, snap_front_levelset};
use xmesh_core::Vec2;

fn main() {
    let mode = std::env::args().nth(1).unwrap_or("vel".into());
    let n = 80usize;
    let mut mesh = generate_rect_mesh(2.0, 1.0, 2 * n, n).unwrap();
    let r = 0.2;
    let c0 = Vec2::new(0.5, 0.5);
    let speed = 0.25;
    let phi_fn = move |p: Vec2, t: f64| r - (p - (c0 + Vec2::new(speed * t, 0.0))).norm();
    let phi0: Vec<f64> = mesh.positions().iter().map(|&p| phi_fn(p, 0.0)).collect();
    let mut phi = conform_initial(&mut mesh, &phi0).unwrap();
    // project front nodes exactly onto the circle
    for i in 0..mesh.node_count() {
        if mesh.is_front(i) {
            let p = mesh.position(i);
            let d = p - c0;
            mesh.set_position(i, c0 + d * (r / d.norm()));
        }
    }
    phi = mesh.positions().iter().map(|&p| phi_fn(p, 0.0)).collect();
    snap_front_levelset(&mut phi, mesh.front_flags());
    let labels = PhaseLabels::from_centroid_signs(&mesh, &phi);
    let nn = mesh.node_count();
    let state0 = initial_state(mesh, FlowState::quiescent(nn), phi, labels);
    let props = FluidProperties { rho: [1.0, 1.0], mu: [1.0, 1.0], gravity: Vec2::ZERO, sigma: 0.0 };
    let driver = if mode == "vel" {
        FrontDriver::PrescribedVelocity(Box::new(move |_, _| Vec2::new(speed, 0.0)))
    } else {
        FrontDriver::PrescribedLevelSet(Box::new(phi_fn))
    };
    let mut pipe = Pipeline::with_driver(&state0.mesh, props, driver);
    if let Ok(ts) = std::env::var("TAU_SCALE") {
        pipe.ls.tau_scale = ts.parse().unwrap();
    }
    let mut state = state0;
    let a0 = state.diagnostics.mass_omega2;
    let exact = std::f64::consts::PI * r * r;
    println!("# mode={mode} a0={a0:.6} exact={exact:.6} h={:.4}", 1.0 / n as f64);
    let cfl: f64 = std::env::var("CFL").ok().and_then(|v| v.parse().ok()).unwrap_or(0.4);
    let dt = cfl * (1.0 / n as f64) / speed;
    let steps = ((4.0 / speed) / dt * 0.25) as usize; // cross 1.0 in x
    for s in 1..=steps {
        state = pipe.advance_step(&state, dt).unwrap();
        if s % (steps / 10).max(1) == 0 {
            let da = (state.diagnostics.mass_omega2 - a0) / a0;
            // signed radial error of front nodes by sector w.r.t. motion
            let c = c0 + Vec2::new(speed * state.t, 0.0);
            let mut sums = [0.0f64; 3];
            let mut counts = [0usize; 3];
            let mut mean = 0.0;
            let mut nf = 0;
            for i in 0..state.mesh.node_count() {
                if !state.mesh.is_front(i) { continue; }
                let d = state.mesh.position(i) - c;
                let e = d.norm() - r;
                let th = d.y.atan2(d.x).abs().to_degrees();
                let sector = if th < 45.0 { 0 } else if th < 135.0 { 1 } else { 2 };
                sums[sector] += e; counts[sector] += 1;
                mean += e; nf += 1;
            }
            println!("step {s:4} t={:.3} drel={da:+.4e} e_mean={:+.2e} lead={:+.2e} lat={:+.2e} trail={:+.2e} nf={nf}",
                state.t, mean / nf as f64,
                sums[0] / counts[0].max(1) as f64,
                sums[1] / counts[1].max(1) as f64,
                sums[2] / counts[2].max(1) as f64);
        }
    }
}
