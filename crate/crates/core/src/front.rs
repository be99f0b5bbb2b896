//! Front-chain extraction, circumcircle curvature and the capillary
//! time-step bound.
//!
//! The interface is the set of mesh edges whose two incident triangles carry
//! different phases. Those edges are walked into maximal chains oriented with
//! the positive phase (Omega2) on the left; curvature at a front node is the
//! inverse circumradius of three consecutive chain nodes, which is exact when
//! the nodes lie on a circle.

use crate::levelset::{Phase, PhaseLabels};
use crate::mesh::Mesh;
use crate::Vec2;

/// A maximal front polyline. For closed chains the first node is not
/// repeated at the end; `closed` says whether the walk wrapped around.
#[derive(Debug, Clone)]
pub struct Chain {
    pub nodes: Vec<usize>,
    pub closed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct FrontChains {
    pub chains: Vec<Chain>,
    /// Nodes where more than two front edges meet; chains split there.
    pub branch_nodes: Vec<usize>,
}

impl FrontChains {
    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// Total length of all front edges at current positions.
    pub fn total_length(&self, mesh: &Mesh) -> f64 {
        let mut len = 0.0;
        for c in &self.chains {
            for w in c.nodes.windows(2) {
                len += mesh.position(w[0]).dist(mesh.position(w[1]));
            }
            if c.closed && c.nodes.len() > 2 {
                len += mesh
                    .position(*c.nodes.last().unwrap())
                    .dist(mesh.position(c.nodes[0]));
            }
        }
        len
    }

    pub fn polylines(&self, mesh: &Mesh) -> Vec<Vec<Vec2>> {
        self.chains
            .iter()
            .map(|c| {
                let mut pts: Vec<Vec2> = c.nodes.iter().map(|&i| mesh.position(i)).collect();
                if c.closed {
                    pts.push(mesh.position(c.nodes[0]));
                }
                pts
            })
            .collect()
    }
}

/// Partitions front edges into maximal chains, oriented so Omega2 lies to
/// the left of the walking direction. Nodes with more than two incident
/// front edges are branch points: chains terminate there.
pub fn extract_front_chains(mesh: &Mesh, phases: &PhaseLabels) -> FrontChains {
    // Oriented front edges: (from, to) with Omega2 on the left.
    let mut oriented: Vec<(usize, usize)> = Vec::new();
    for e in mesh.edges() {
        if let (Some(tl), Some(tr)) = (e.tri_left, e.tri_right) {
            if phases.label[tl] != phases.label[tr] {
                if phases.label[tl] == Phase::Omega2 {
                    oriented.push((e.a, e.b));
                } else {
                    oriented.push((e.b, e.a));
                }
            }
        }
    }

    let nn = mesh.node_count();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); nn];
    let mut degree = vec![0usize; nn];
    for (k, &(a, b)) in oriented.iter().enumerate() {
        out_edges[a].push(k);
        degree[a] += 1;
        degree[b] += 1;
    }

    let mut branch_nodes: Vec<usize> = (0..nn).filter(|&i| degree[i] > 2).collect();
    branch_nodes.sort_unstable();
    let is_branch = |i: usize| degree[i] > 2;

    let mut visited = vec![false; oriented.len()];
    let mut chains = Vec::new();

    // Start walks from chain terminals first (endpoints and branch nodes),
    // in edge index order for determinism; whatever remains is closed loops.
    let mut start_order: Vec<usize> = (0..oriented.len()).collect();
    start_order.sort_by_key(|&k| {
        let (a, _) = oriented[k];
        let terminal = degree[a] == 1 || is_branch(a);
        (if terminal { 0 } else { 1 }, k)
    });

    for start in start_order {
        if visited[start] {
            continue;
        }
        let (a0, mut b) = oriented[start];
        visited[start] = true;
        let mut nodes = vec![a0, b];
        let mut closed = false;
        loop {
            if is_branch(b) {
                break;
            }
            // Follow the unvisited edge leaving b, if any.
            let mut next = None;
            for &k in &out_edges[b] {
                if !visited[k] {
                    next = Some(k);
                    break;
                }
            }
            match next {
                None => break,
                Some(k) => {
                    visited[k] = true;
                    let (_, to) = oriented[k];
                    if to == a0 {
                        closed = true;
                        break;
                    }
                    nodes.push(to);
                    b = to;
                }
            }
        }
        chains.push(Chain { nodes, closed });
    }

    FrontChains {
        chains,
        branch_nodes,
    }
}

/// Signed curvature of the circumcircle through three consecutive front
/// nodes: |kappa| = 1/R, positive when the chain turns left (the center of
/// curvature on the Omega2 side), so a convex Omega2 bubble has positive
/// curvature everywhere. Collinear or coincident points give 0.
pub fn curvature_circumcircle(p_prev: Vec2, p_i: Vec2, p_next: Vec2) -> f64 {
    let e1 = p_i - p_prev;
    let e2 = p_next - p_i;
    let e3 = p_next - p_prev;
    let denom = e1.norm() * e2.norm() * e3.norm();
    if denom == 0.0 {
        // Coincident nodes (zero-length front edge after a relay collision).
        return 0.0;
    }
    2.0 * e1.cross(e2) / denom
}

/// Nodal curvature field: circumcircle curvature at interior chain nodes,
/// constant extrapolation at open-chain endpoints, zero at branch nodes and
/// off the front.
///
/// Relayed fronts carry nodes that momentarily (almost) coincide - needles
/// hand the interface over at near-zero edge lengths. A circumcircle through
/// such a pair measures sub-grid noise, not interface curvature, so triples
/// are formed from the nearest chain neighbors at least a fraction of the
/// local rest mesh size away.
pub fn curvature_field(mesh: &Mesh, chains: &FrontChains) -> Vec<f64> {
    // Fraction of the local rest edge below which chain neighbors count as
    // coincident for curvature sampling.
    const SPACING_FRAC: f64 = 0.35;
    let nn = mesh.node_count();
    let mut kappa = vec![0.0; nn];
    let local_h = |i: usize| -> f64 {
        let mut h = f64::INFINITY;
        for &t in mesh.triangles_of_node(i) {
            let tri = mesh.triangle(t);
            for k in 0..3 {
                h = h.min(
                    mesh.rest_position(tri[k])
                        .dist(mesh.rest_position(tri[(k + 1) % 3])),
                );
            }
        }
        if h.is_finite() {
            h
        } else {
            0.0
        }
    };
    for chain in &chains.chains {
        let n = chain.nodes.len();
        if n < 3 {
            continue;
        }
        let pos = |k: usize| mesh.position(chain.nodes[k]);
        let mut vals = vec![None; n];
        for k in 0..n {
            if !chain.closed && (k == 0 || k == n - 1) {
                continue;
            }
            let p_i = pos(k);
            let tol = SPACING_FRAC * local_h(chain.nodes[k]);
            let mut prev = None;
            let mut step = 1;
            while step < n {
                let idx = (k + n - step % n) % n;
                if !chain.closed && idx >= k {
                    break;
                }
                if (pos(idx) - p_i).norm() >= tol {
                    prev = Some(pos(idx));
                    break;
                }
                step += 1;
            }
            let mut next = None;
            step = 1;
            while step < n {
                let idx = (k + step) % n;
                if !chain.closed && idx <= k {
                    break;
                }
                if (pos(idx) - p_i).norm() >= tol {
                    next = Some(pos(idx));
                    break;
                }
                step += 1;
            }
            if let (Some(pp), Some(pn)) = (prev, next) {
                vals[k] = Some(curvature_circumcircle(pp, p_i, pn));
            }
        }
        if !chain.closed {
            // Endpoints copy the nearest interior value.
            let first_interior = vals.iter().flatten().next().copied().unwrap_or(0.0);
            let last_interior = vals.iter().rev().flatten().next().copied().unwrap_or(0.0);
            vals[0] = Some(first_interior);
            vals[n - 1] = Some(last_interior);
        }
        for k in 0..n {
            if let Some(v) = vals[k] {
                kappa[chain.nodes[k]] = v;
            }
        }
    }
    for &b in &chains.branch_nodes {
        kappa[b] = 0.0;
    }
    kappa
}

/// Explicit surface-tension stability bound on the time step:
/// dt < sqrt((rho1 + rho2) h^3 / (4 pi sigma)). Returns +inf for sigma = 0.
pub fn capillary_dt_max(rho1: f64, rho2: f64, h_min: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return f64::INFINITY;
    }
    assert!(h_min > 0.0);
    ((rho1 + rho2) * h_min.powi(3) / (4.0 * std::f64::consts::PI * sigma)).sqrt()
}

/// Mesh size h for the capillary bound: the smallest rest edge length among
/// elements incident to a front node.
///
/// Rest geometry, not current: relayed elements degenerate to zero measure
/// by design, and a bound evaluated on them would collapse the time step,
/// while the stability scale is set by the undeformed mesh around the front.
pub fn front_h_min(mesh: &Mesh, chains: &FrontChains) -> Option<f64> {
    let mut h = f64::INFINITY;
    let mut any = false;
    for chain in &chains.chains {
        for &i in &chain.nodes {
            for &t in mesh.triangles_of_node(i) {
                let tri = mesh.triangle(t);
                for k in 0..3 {
                    let e = mesh
                        .rest_position(tri[k])
                        .dist(mesh.rest_position(tri[(k + 1) % 3]));
                    h = h.min(e);
                }
                any = true;
            }
        }
    }
    any.then_some(h)
}
