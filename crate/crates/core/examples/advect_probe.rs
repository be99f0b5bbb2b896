// probe: pure CN+SUPG advection of a cone field, zero-crossing tracking
use xmesh_core::io::generate_rect_mesh;
use xmesh_core::levelset::LevelSetSolver;
use xmesh_core::Vec2;

fn main() {
    let n = 80usize;
    let mesh = generate_rect_mesh(2.0, 1.0, 2 * n, n).unwrap();
    let h = 1.0 / n as f64;
    let r = 0.2;
    let c0 = Vec2::new(0.5, 0.5);
    let speed = 0.25;
    let mut phi: Vec<f64> = mesh.positions().iter().map(|&p| r - (p - c0).norm()).collect();
    let u = vec![Vec2::new(speed, 0.0); mesh.node_count()];
    let mut ls = LevelSetSolver::new(&mesh);
    let dt = 0.4 * h / speed;
    let steps = 120usize;
    // nodes along the centerline y = 0.5
    let mut line: Vec<(f64, usize)> = (0..mesh.node_count())
        .filter(|&i| (mesh.position(i).y - 0.5).abs() < 1e-12)
        .map(|i| (mesh.position(i).x, i))
        .collect();
    line.sort_by(|a, b| a.0.total_cmp(&b.0));
    let zero_at = |phi: &Vec<f64>, right: bool| -> f64 {
        // rightmost (or leftmost) sign change along the line
        let mut cross = Vec::new();
        for w in line.windows(2) {
            let (x0, i0) = w[0];
            let (x1, i1) = w[1];
            if phi[i0] * phi[i1] < 0.0 {
                cross.push(x0 + (x1 - x0) * phi[i0] / (phi[i0] - phi[i1]));
            }
        }
        if right { *cross.last().unwrap() } else { cross[0] }
    };
    println!("# start: left={:.5} right={:.5}", zero_at(&phi, false), zero_at(&phi, true));
    for s in 1..=steps {
        phi = ls.advect(&mesh, &phi, &u, dt).unwrap();
        if s % 20 == 0 {
            let t = s as f64 * dt;
            let l = zero_at(&phi, false);
            let rr = zero_at(&phi, true);
            let le = 0.3 + speed * t;
            let re = 0.7 + speed * t;
            println!("step {s:3} t={t:.3} left={l:.5} (exact {le:.5}, err {:+.2e}) right={rr:.5} (exact {re:.5}, err {:+.2e}) width={:.5}",
                     l - le, rr - re, rr - l);
        }
    }
}
