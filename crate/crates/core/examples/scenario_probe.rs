// probe: run any scenario briefly and trace benchmark quantities
use std::collections::HashMap;
use xmesh_core::analysis::benchmark_quantities;
use xmesh_core::coupling::{resolve_dt, DtSpec, FrontDriver, Pipeline};
use xmesh_core::invlap::{sloshing_amplitude, InversionMethod};
use xmesh_core::ns::NsOptions;
use xmesh_core::scenario::init_scenario;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(|s| s.as_str()).unwrap_or("sloshing");
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100);
    let every: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    let dt_arg: Option<f64> = args.get(4).and_then(|s| s.parse().ok()).filter(|&v| v > 0.0);
    let mut ov = HashMap::new();
    for kv in args.iter().skip(5) {
        let (k, v) = kv.split_once('=').unwrap();
        ov.insert(k.to_string(), serde_json::Value::from(v.parse::<f64>().unwrap()));
    }
    let sc = init_scenario(name, &ov).unwrap();
    let dt = dt_arg.unwrap_or_else(|| resolve_dt(sc.default_dt, &sc.state, &sc.props).unwrap());
    println!("# scenario={name} dt={dt:.4e} t_end_default={:.3} nodes={}", sc.default_t_end, sc.state.mesh.node_count());
    for (k, v) in &sc.numbers { println!("#   {k} = {v}"); }
    let mut pipe = match sc.driver {
        FrontDriver::Flow => Pipeline::new(&sc.state.mesh, &sc.bcs, sc.pin_node, sc.props, NsOptions::default()).unwrap(),
        d => Pipeline::with_driver(&sc.state.mesh, sc.props, d),
    };
    pipe.alpha = sc.alpha;
    if let Ok(ts) = std::env::var("TAU_SCALE") {
        pipe.ls.tau_scale = ts.parse().unwrap();
    }
    if let Ok(a) = std::env::var("ALPHA") {
        pipe.alpha = a.parse().unwrap();
    }
    let mut state = sc.state;
    let m2_0 = state.diagnostics.mass_omega2;
    // left-wall interface height for sloshing
    let eta_probe = |state: &xmesh_core::coupling::SimState| -> f64 {
        let mut best = f64::NAN; let mut bx = f64::INFINITY;
        for i in 0..state.mesh.node_count() {
            if state.mesh.is_front(i) {
                let p = state.mesh.position(i);
                if p.x < bx { bx = p.x; best = p.y; }
            }
        }
        best
    };
    let (nu, k, g) = (0.01, std::f64::consts::PI, 9.81);
    let t0 = std::time::Instant::now();
    for s in 1..=steps {
        state = pipe.advance_step(&state, dt).unwrap();
        if s % every == 0 {
            let row = benchmark_quantities(state.t, &state.mesh, &state.phases, &state.flow.u, &state.chains);
            let (com, rise, circ, mass) = row.map(|r| (r.com_y, r.rise_velocity, r.circularity, r.mass)).unwrap_or((0.0,0.0,0.0,0.0));
            if name == "sloshing" {
                let eta = (eta_probe(&state) - 1.0) / 0.01;
                let oracle = sloshing_amplitude(InversionMethod::Talbot, state.t, nu, k, g).unwrap();
                println!("{:.4} {eta:+.5} {oracle:+.5} d={:.4}", state.t, (eta - oracle).abs());
            } else {
                let kmax = state.kappa.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let kmin = state.kappa.iter().cloned().fold(f64::INFINITY, f64::min);
                let tz = state.phases.triple_zero.iter().filter(|&&z| z).count();
                println!("t={:.4} com_y={com:.5} rise={rise:+.5e} circ={circ:.5} dmass={:+.3e} chains={} k=[{kmin:.1},{kmax:.1}] capped={} tz={tz} newton={}",
                    state.t, (mass - m2_0) / m2_0, state.chains.chains.len(),
                    state.diagnostics.relay.n_capped, state.diagnostics.newton_iters);
            }
        }
    }
    println!("# wall {:.1}s for {steps} steps", t0.elapsed().as_secs_f64());
}
