// probe: front geometry statistics during a hysing run
use std::collections::HashMap;
use xmesh_core::coupling::{resolve_dt, FrontDriver, Pipeline};
use xmesh_core::ns::NsOptions;
use xmesh_core::scenario::init_scenario;

fn main() {
    let steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(150);
    let sc = init_scenario("hysing", &HashMap::new()).unwrap();
    let dt = resolve_dt(sc.default_dt, &sc.state, &sc.props).unwrap();
    let mut pipe = match sc.driver {
        FrontDriver::Flow => Pipeline::new(&sc.state.mesh, &sc.bcs, sc.pin_node, sc.props, NsOptions::default()).unwrap(),
        d => Pipeline::with_driver(&sc.state.mesh, sc.props, d),
    };
    let mut state = sc.state;
    for _ in 0..steps {
        state = pipe.advance_step(&state, dt).unwrap();
    }
    let h = 1.0 / 40.0;
    for c in &state.chains.chains {
        let n = c.nodes.len();
        println!("# chain len {n} closed {}", c.closed);
        let pos: Vec<_> = c.nodes.iter().map(|&i| state.mesh.position(i)).collect();
        let mut lens: Vec<f64> = Vec::new();
        let mut angles: Vec<f64> = Vec::new();
        for k in 0..n {
            let a = pos[k];
            let b = pos[(k + 1) % n];
            if !c.closed && k + 1 == n { break; }
            lens.push(a.dist(b) / h);
            let prev = pos[(k + n - 1) % n];
            if c.closed || (k > 0) {
                let e1 = a - prev;
                let e2 = b - a;
                if e1.norm() > 0.0 && e2.norm() > 0.0 {
                    angles.push(e1.cross(e2).atan2(e1.dot(e2)).to_degrees());
                }
            }
        }
        lens.sort_by(f64::total_cmp);
        let q = |v: &Vec<f64>, f: f64| v[(f * (v.len() - 1) as f64) as usize];
        println!("edge/h: min={:.3} q25={:.3} med={:.3} q75={:.3} max={:.3}",
                 q(&lens,0.0), q(&lens,0.25), q(&lens,0.5), q(&lens,0.75), q(&lens,1.0));
        let mut aa: Vec<f64> = angles.iter().map(|a| a.abs()).collect();
        aa.sort_by(f64::total_cmp);
        println!("turn deg: med={:.1} q90={:.1} max={:.1}; turns>60deg: {}",
                 q(&aa,0.5), q(&aa,0.9), q(&aa,1.0), aa.iter().filter(|&&a| a > 60.0).count());
        // print a stretch of positions around the max turn
        let mut worst = 0; let mut wa = 0.0;
        for (i, a) in angles.iter().enumerate() { if a.abs() > wa { wa = a.abs(); worst = i; } }
        for k in worst.saturating_sub(3)..(worst + 4).min(n - 1) {
            println!("  node {k}: ({:.4}, {:.4})", pos[k].x, pos[k].y);
        }
    }
}
