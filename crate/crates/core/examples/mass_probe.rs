// probe: attribute per-step Omega2 area changes to label-change mechanisms
use std::collections::HashMap;
use xmesh_core::coupling::{resolve_dt, FrontDriver, Pipeline};
use xmesh_core::levelset::Phase;
use xmesh_core::ns::NsOptions;
use xmesh_core::scenario::init_scenario;

fn main() {
    let steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let sc = init_scenario("hysing", &HashMap::new()).unwrap();
    let dt = resolve_dt(sc.default_dt, &sc.state, &sc.props).unwrap();
    let mut pipe = match sc.driver {
        FrontDriver::Flow => Pipeline::new(&sc.state.mesh, &sc.bcs, sc.pin_node, sc.props, NsOptions::default()).unwrap(),
        d => Pipeline::with_driver(&sc.state.mesh, sc.props, d),
    };
    let mut state = sc.state;
    let mut tz_flip_gain = 0.0f64;   // area gained by fresh triple-zero flips
    let mut tz_flip_loss = 0.0f64;
    let mut normal_gain = 0.0f64;    // area change of elements whose label changed by sign
    let mut normal_loss = 0.0f64;
    let mut geom_drift = 0.0f64;     // area change of elements keeping their label
    let m0 = state.diagnostics.mass_omega2;
    for s in 1..=steps {
        let prev = state.clone();
        state = pipe.advance_step(&state, dt).unwrap();
        for t in 0..state.mesh.triangle_count() {
            let a_new = state.mesh.area(t);
            let a_old = prev.mesh.area(t);
            let was = prev.phases.label[t] == Phase::Omega2;
            let is = state.phases.label[t] == Phase::Omega2;
            if was != is {
                let signed = if is { a_new } else { -a_old };
                if state.phases.triple_zero[t] && !prev.phases.triple_zero[t] {
                    if signed > 0.0 { tz_flip_gain += signed } else { tz_flip_loss += signed }
                } else if signed > 0.0 { normal_gain += signed } else { normal_loss += signed }
            } else if is {
                geom_drift += a_new - a_old;
            }
        }
        if s % 50 == 0 {
            let dm = state.diagnostics.mass_omega2 - m0;
            // integral of div(u) over Omega2 and globally
            let mut div2 = 0.0;
            let mut divall = 0.0;
            for t in 0..state.mesh.triangle_count() {
                let tri = state.mesh.triangle(t);
                let p = state.mesh.triangle_positions(t);
                let a = xmesh_core::mesh::signed_area(p[0], p[1], p[2]);
                if a <= 0.0 { continue; }
                let g = xmesh_core::fem::p1_gradients(&p, a);
                let mut div = 0.0;
                for k in 0..3 { div += state.flow.u[tri[k]].dot(g[k]); }
                divall += a * div;
                if state.phases.label[t] == Phase::Omega2 { div2 += a * div; }
            }
            let kmax = state.kappa.iter().cloned().fold(0.0f64, |m, x| m.max(x.abs()));
            println!("step {s}: dmass={dm:+.4e} geom={geom_drift:+.3e} divA2={:+.3e} divAll={:+.3e} dA_pred={:+.3e} kmax={kmax:.1}",
                div2, divall, div2 * dt * s as f64);
        }
    }
}
