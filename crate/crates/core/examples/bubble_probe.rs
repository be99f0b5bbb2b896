// probe: static bubble relaxation trace
use std::collections::HashMap;
use xmesh_core::coupling::{resolve_dt, Pipeline};
use xmesh_core::ns::NsOptions;
use xmesh_core::scenario::init_scenario;
use xmesh_core::Vec2;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let mu: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8.0);
    let mut ov = HashMap::new();
    ov.insert("mu".to_string(), serde_json::Value::from(mu));
    let sc = init_scenario("static_bubble", &ov).unwrap();
    let dt = resolve_dt(sc.default_dt, &sc.state, &sc.props).unwrap();
    println!("dt = {dt:.4e}, t_end_default = {}, steps_needed = {}", sc.default_t_end, (sc.default_t_end/dt).ceil());
    let mut pipe = Pipeline::new(&sc.state.mesh, &sc.bcs, sc.pin_node, sc.props, NsOptions::default()).unwrap();
    let mut state = sc.state;

    // nearest node to center / corner for pressure probe
    let center = Vec2::new(1.0, 1.0);
    let mut c_node = 0; let mut best = f64::INFINITY;
    for i in 0..state.mesh.node_count() {
        let d = (state.mesh.position(i) - center).norm();
        if d < best { best = d; c_node = i; }
    }
    let t0 = std::time::Instant::now();
    for k in 1..=steps {
        state = pipe.advance_step(&state, dt).unwrap();
        if k % (steps/20).max(1) == 0 || k <= 5 {
            let umax = state.flow.u.iter().map(|v| v.norm()).fold(0f64, f64::max);
            let dp = state.flow.p[c_node] - state.flow.p[0];
            let kmin = state.kappa.iter().cloned().filter(|&x| x != 0.0).fold(f64::INFINITY, f64::min);
            let kmax = state.kappa.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            println!("step {k:5} t={:.3} umax={umax:.3e} dp={dp:.6} kappa=[{kmin:.4},{kmax:.4}] newton={} active={} moved={} minA={:.2e} capband={}",
                state.t, state.diagnostics.newton_iters, state.diagnostics.relay.n_active,
                state.diagnostics.relay.n_moved, state.diagnostics.min_area, state.diagnostics.max_cap_band);
        }
    }
    println!("wall: {:.1}s for {steps} steps", t0.elapsed().as_secs_f64());
}
