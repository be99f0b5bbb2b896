// probe: step-by-step motion of the leading pole node
use xmesh_core::coupling::{initial_state, FrontDriver, Pipeline};
use xmesh_core::io::generate_rect_mesh;
use xmesh_core::levelset::PhaseLabels;
use xmesh_core::ns::{FlowState, FluidProperties};
use xmesh_core::relay::{conform_initial, snap_front_levelset};
use xmesh_core::Vec2;

fn main() {
    let n = 80usize;
    let mut mesh = generate_rect_mesh(2.0, 1.0, 2 * n, n).unwrap();
    let r = 0.2;
    let c0 = Vec2::new(0.5, 0.5);
    let speed = 0.25;
    let phi_fn = move |p: Vec2, t: f64| r - (p - (c0 + Vec2::new(speed * t, 0.0))).norm();
    let phi0: Vec<f64> = mesh.positions().iter().map(|&p| phi_fn(p, 0.0)).collect();
    let mut phi = conform_initial(&mut mesh, &phi0).unwrap();
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
    let mut pipe = Pipeline::with_driver(
        &state0.mesh, props,
        FrontDriver::PrescribedVelocity(Box::new(move |_, _| Vec2::new(speed, 0.0))));
    let mut state = state0;
    let dt = 0.4 * (1.0 / n as f64) / speed;
    for s in 1..=40 {
        // leading pole before step
        let mut pole = 0; let mut px = f64::NEG_INFINITY;
        for i in 0..state.mesh.node_count() {
            if state.mesh.is_front(i) && state.mesh.position(i).x > px {
                px = state.mesh.position(i).x; pole = i;
            }
        }
        let exact_front = 0.7 + speed * state.t;
        let prev_t = state.t;
        state = pipe.advance_step(&state, dt).unwrap();
        if s == 36 {
            // one-step forensic: all forward front nodes, their phi_adv
            // crossings and their achieved moves
            let mut ls2 = xmesh_core::levelset::LevelSetSolver::new(&state.mesh);
            let u = vec![Vec2::new(speed, 0.0); state.mesh.node_count()];
            let phi_a = ls2.advect(&state.mesh, &state.phi, &u, dt).unwrap();
            let mut fronts: Vec<usize> = (0..state.mesh.node_count())
                .filter(|&i| state.mesh.is_front(i))
                .collect();
            fronts.sort_by(|&a, &b| state.mesh.position(b).x.total_cmp(&state.mesh.position(a).x));
            println!("  === step {s} forensic (u dt = {:.4e}):", speed * dt);
            {
                // neighborhood dump of the forward-most front node
                let mut fronts2: Vec<usize> = (0..state.mesh.node_count())
                    .filter(|&i| state.mesh.is_front(i))
                    .collect();
                fronts2.sort_by(|&a, &b| state.mesh.position(b).x.total_cmp(&state.mesh.position(a).x));
                let lead = fronts2[0];
                let p = state.mesh.position(lead);
                println!("  lead {lead} @({:.5},{:.5}) phi={:+.3e} rest=({:.5},{:.5})",
                    p.x, p.y, state.phi[lead],
                    state.mesh.rest_position(lead).x, state.mesh.rest_position(lead).y);
                for &j in state.mesh.neighbors(lead) {
                    let q = state.mesh.position(j);
                    println!("    nbr {j} @({:.5},{:.5}) phi={:+.4e} phi_adv={:+.4e} front={} rest=({:.5},{:.5})",
                        q.x, q.y, state.phi[j], phi_a[j], state.mesh.is_front(j),
                        state.mesh.rest_position(j).x, state.mesh.rest_position(j).y);
                }
            }
            for &i in fronts.iter().take(6) {
                let p = state.mesh.position(i);
                print!("  node {i} @({:.5},{:.5}) phi_adv={:+.3e} tgts:", p.x, p.y, phi_a[i]);
                for &j in state.mesh.neighbors(i) {
                    let (pi, pj) = (phi_a[i], phi_a[j]);
                    if pi * pj < 0.0 || ((pi == 0.0) != (pj == 0.0)) {
                        let ss = if pi == 0.0 { 0.0 } else if pj == 0.0 { 1.0 } else { pi / (pi - pj) };
                        let pos = p.lerp(state.mesh.position(j), ss);
                        print!(" [{j}:d={:.3e} dx={:+.3e}]", (pos - p).norm(), pos.x - p.x);
                    }
                }
                println!();
            }
        }
        if s >= 36 {
            let mut pole2 = 0; let mut px2 = f64::NEG_INFINITY;
            for i in 0..state.mesh.node_count() {
                if state.mesh.is_front(i) && state.mesh.position(i).x > px2 {
                    px2 = state.mesh.position(i).x; pole2 = i;
                }
            }
            let exact2 = 0.7 + speed * state.t;
            println!("step {s}: pole {pole}@{px:.5} (lag {:+.5}) -> {pole2}@{px2:.5} (lag {:+.5})",
                px - exact_front, px2 - exact2);
            // phi error near the pole (within 2.5h, ahead-ish), vs exact distance
            let c = c0 + Vec2::new(speed * state.t, 0.0);
            let h = 1.0 / n as f64;
            let pp = state.mesh.position(pole2);
            let mut rows: Vec<(f64, f64, f64, bool)> = Vec::new();
            for i in 0..state.mesh.node_count() {
                let q = state.mesh.position(i);
                if (q - pp).norm() < 2.5 * h {
                    let exact_phi = r - (q - c).norm();
                    rows.push((q.x, state.phi[i] - exact_phi, state.phi[i], state.mesh.is_front(i)));
                }
            }
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (x, err, phi, f) in rows.iter().take(4) {
                println!("    x={x:.5} phi={phi:+.5} err={err:+.2e}{}", if *f { " FRONT" } else { "" });
            }
            // Isolated advection of the current FMM field: zero along the
            // center row before and after one advect, vs u dt.
            let mut ls2 = xmesh_core::levelset::LevelSetSolver::new(&state.mesh);
            let u = vec![Vec2::new(speed, 0.0); state.mesh.node_count()];
            let phi_a = ls2.advect(&state.mesh, &state.phi, &u, dt).unwrap();
            let mut row: Vec<(f64, usize)> = (0..state.mesh.node_count())
                .filter(|&i| (state.mesh.position(i).y - 0.5).abs() < 0.2 * h)
                .map(|i| (state.mesh.position(i).x, i))
                .collect();
            row.sort_by(|a, b| a.0.total_cmp(&b.0));
            let zero_of = |vals: &Vec<f64>| -> f64 {
                let mut z = f64::NAN;
                for w in row.windows(2) {
                    let (x0, i0) = w[0];
                    let (x1, i1) = w[1];
                    if x0 < 0.8 { continue; }
                    if vals[i0] > 0.0 && vals[i1] < 0.0 {
                        z = x0 + (x1 - x0) * vals[i0] / (vals[i0] - vals[i1]);
                    }
                }
                z
            };
            let _ = zero_of(&state.phi);
            // crossing along the pole's most-forward edge
            let pp2 = state.mesh.position(pole2);
            let mut ahead = None;
            let mut best_dx = 0.0;
            for &j in state.mesh.neighbors(pole2) {
                let dx = state.mesh.position(j).x - pp2.x;
                if dx > best_dx {
                    best_dx = dx;
                    ahead = Some(j);
                }
            }
            let a = ahead.unwrap();
            let (fp, fa) = (phi_a[pole2], phi_a[a]);
            let ell = (state.mesh.position(a) - pp2).norm();
            let s_frac = fp / (fp - fa);
            let slope = (fp - fa) / ell;
            let slope_fmm = (state.phi[pole2] - state.phi[a]) / ell;
            // exact distance slope at A (circle at current exact time)
            let c_now = c0 + Vec2::new(speed * state.t, 0.0);
            let exact_a = r - (state.mesh.position(a) - c_now).norm();
            println!("    edge (P,A): ell={ell:.4e} phi_fmm(A)={:+.5e} (exact-circle {exact_a:+.5e}) slope_fmm={slope_fmm:.4} slope_adv={slope:.4} phi_adv(P)={fp:+.5e} crossing deficit={:+.2e}",
                state.phi[a], s_frac * ell - speed * dt);
            let _ = prev_t;
        }
    }
}
