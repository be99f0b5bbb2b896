//! Front relaying: the mesh deformation that hands the interface from node
//! to node without changing connectivity.
//!
//! Nodes whose level-set sign changed over the step (with sign(0) its own
//! class, so previous front nodes count) are active. Each active node looks
//! for zero crossings of the new level set on its incident edges (cut-edges)
//! and moves onto the closest one; boundary nodes first try crossings along
//! the boundary so the polygonal domain shape is preserved, and otherwise
//! push their closest interior cut-neighbor onto its crossing instead.
//! Targets are computed from the pre-move snapshot for every node before any
//! movement, and each node moves at most once per call.

use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};

/// Sign class with zero as its own class.
#[inline]
fn sign_class(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Nodes eligible to move: every node whose sign class changed, which
/// includes previous front nodes (level set exactly zero) that now carry a
/// nonzero value.
pub fn find_active(phi_prev: &[f64], phi_new: &[f64]) -> Vec<bool> {
    phi_prev
        .iter()
        .zip(phi_new)
        .map(|(&a, &b)| sign_class(a) != sign_class(b))
        .collect()
}

/// All zero crossings of the linear interpolant of `phi` on the edges from
/// `i` to `neighbors`, sorted by distance from `i` (ties by neighbor
/// index). A cut-edge has strictly opposite signs or exactly one endpoint
/// zero.
pub fn candidate_targets(
    mesh: &Mesh,
    i: usize,
    neighbors: &[usize],
    phi: &[f64],
) -> Vec<(Vec2, usize, f64)> {
    let xi = mesh.position(i);
    let pi = phi[i];
    let mut out: Vec<(Vec2, usize, f64)> = Vec::new();
    for &j in neighbors {
        let pj = phi[j];
        let strictly_cut = pi * pj < 0.0;
        let one_zero = (pi == 0.0) != (pj == 0.0);
        if !(strictly_cut || one_zero) {
            continue;
        }
        let s = if pi == 0.0 {
            0.0
        } else if pj == 0.0 {
            1.0
        } else {
            pi / (pi - pj)
        };
        let pos = xi.lerp(mesh.position(j), s);
        out.push((pos, j, (pos - xi).norm()));
    }
    out.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.1.cmp(&b.1)));
    out
}

/// Closest zero crossing; see [`candidate_targets`]. Ties go to the lowest
/// neighbor index.
pub fn determine_closest_target(
    mesh: &Mesh,
    i: usize,
    neighbors: &[usize],
    phi: &[f64],
) -> Option<(Vec2, usize)> {
    candidate_targets(mesh, i, neighbors, phi)
        .first()
        .map(|&(pos, j, _)| (pos, j))
}

/// Statistics of one relay call.
#[derive(Debug, Clone, Copy, Default)]
pub struct RelayOutcome {
    pub n_active: usize,
    pub n_moved: usize,
    /// Active nodes whose chosen target node had already moved this call
    /// (left where they were; recorded as a diagnostic).
    pub n_collisions: usize,
    /// Moves shortened by the inversion cap (the node stopped where an
    /// incident triangle reached zero area instead of the interpolated
    /// zero).
    pub n_capped: usize,
}

/// One move decision: `target_node` is placed on one of the ranked
/// candidate positions (closest first). For interior movers the target node
/// is the active node itself; for the boundary fallback it is the pushed
/// bulk neighbor.
struct Decision {
    target_node: usize,
    candidates: Vec<Vec2>,
}

/// Deforms the mesh so that the zero set of `phi_new` lies on mesh edges,
/// updating positions and front flags in place.
///
/// `phi_prev` and `phi_new` both live on the pre-move mesh. Previous front
/// nodes must carry `phi_prev == 0`.
pub fn move_front(mesh: &mut Mesh, phi_new: &[f64], phi_prev: &[f64]) -> Result<RelayOutcome> {
    let nn = mesh.node_count();
    assert_eq!(phi_new.len(), nn);
    assert_eq!(phi_prev.len(), nn);
    for i in 0..nn {
        if mesh.is_front(i) && phi_prev[i] != 0.0 {
            return Err(Error::Mesh(format!(
                "front node {i} carries nonzero previous level set {}",
                phi_prev[i]
            )));
        }
    }

    let active = find_active(phi_prev, phi_new);
    let n_active = active.iter().filter(|&&a| a).count();

    // Decision pass: all targets from the pre-move snapshot.
    let mut decisions: Vec<Decision> = Vec::new();
    let mut decided = vec![false; nn]; // node i produced a decision
    for i in 0..nn {
        if !active[i] {
            continue;
        }
        if mesh.is_boundary(i) {
            // Corner nodes pin the polygon shape and never slide; they go
            // straight to the bulk fallback.
            if !mesh.is_corner(i) {
                let cands = candidate_targets(mesh, i, mesh.boundary_neighbors(i), phi_new);
                if !cands.is_empty() {
                    decisions.push(Decision {
                        target_node: i,
                        candidates: cands.into_iter().map(|(p, _, _)| p).collect(),
                    });
                    decided[i] = true;
                    continue;
                }
            }
            let bulk: Vec<usize> = mesh
                .neighbors(i)
                .iter()
                .copied()
                .filter(|&j| !mesh.is_boundary(j))
                .collect();
            let cands = candidate_targets(mesh, i, &bulk, phi_new);
            if let Some(&(_, j, _)) = cands.first() {
                // The pushed neighbor takes the crossing on its own edge.
                let pos = cands[0].0;
                decisions.push(Decision {
                    target_node: j,
                    candidates: vec![pos],
                });
                decided[i] = true;
            }
        } else {
            let cands = candidate_targets(mesh, i, mesh.neighbors(i), phi_new);
            if !cands.is_empty() {
                decisions.push(Decision {
                    target_node: i,
                    candidates: cands.into_iter().map(|(p, _, _)| p).collect(),
                });
                decided[i] = true;
            }
        }
    }

    // Apply pass in deciding-node order; first assignment to a node wins.
    // Each move is capped at the first point where an incident triangle
    // area hits zero (area is linear along the segment, so the cap is
    // exact): elements may degenerate to zero measure but never invert.
    let mut front_new: Vec<bool> = mesh.front_flags().to_vec();
    let mut moved = vec![false; nn];
    let mut n_moved = 0;
    let mut n_collisions = 0;
    let mut n_capped = 0;
    for d in &decisions {
        if moved[d.target_node] {
            n_collisions += 1;
            continue;
        }
        // Prefer the closest target reachable without degenerating an
        // incident triangle; if every candidate is blocked, take the
        // closest one shortened to the first area-zero.
        let mut choice: Option<(Vec2, bool)> = None;
        for &cand in &d.candidates {
            let (pos, capped) = capped_move(mesh, d.target_node, cand);
            if !capped {
                choice = Some((pos, false));
                break;
            }
            if choice.is_none() {
                choice = Some((pos, true));
            }
        }
        let Some((pos, capped)) = choice else { continue };
        moved[d.target_node] = true;
        mesh.set_position(d.target_node, pos);
        front_new[d.target_node] = true;
        n_moved += 1;
        if capped {
            n_capped += 1;
        }
    }

    // Active nodes that ended up neither moved nor relocated leave the
    // front: their side is now decided by the level-set sign alone (this is
    // how seeding and engulfment manifest on a fixed mesh).
    for i in 0..nn {
        if active[i] && !moved[i] {
            front_new[i] = false;
        }
    }
    mesh.set_front_flags(front_new);

    Ok(RelayOutcome {
        n_active,
        n_moved,
        n_collisions,
        n_capped,
    })
}

/// Largest allowed move of `node` toward `target` keeping every incident
/// triangle area nonnegative. Area varies linearly along the segment, so
/// the admissible fraction is exact. Returns the final position and whether
/// the move was shortened.
fn capped_move(mesh: &Mesh, node: usize, target: Vec2) -> (Vec2, bool) {
    let x0 = mesh.position(node);
    let mut s_max = 1.0f64;
    for &t in mesh.triangles_of_node(node) {
        let tri = mesh.triangle(t);
        let at = |pos: Vec2| {
            let p: Vec<Vec2> = tri
                .iter()
                .map(|&v| if v == node { pos } else { mesh.position(v) })
                .collect();
            crate::mesh::signed_area(p[0], p[1], p[2])
        };
        let a1 = at(target);
        if a1 < 0.0 {
            let a0 = at(x0);
            let s = if a0 <= 0.0 { 0.0 } else { a0 / (a0 - a1) };
            s_max = s_max.min(s);
        }
    }
    if s_max >= 1.0 {
        (target, false)
    } else {
        (x0.lerp(target, s_max), true)
    }
}

/// Relaxes every unprotected node toward its rest position:
/// x <- (1 - alpha) x + alpha x0. A move that would invert an incident
/// triangle is shortened by bisection (up to 20 halvings) or skipped.
pub fn relax_to_rest(mesh: &mut Mesh, alpha: f64, protected: &[bool]) {
    assert!((0.0..=1.0).contains(&alpha));
    if alpha == 0.0 {
        return;
    }
    let nn = mesh.node_count();
    for i in 0..nn {
        if protected[i] {
            continue;
        }
        let x = mesh.position(i);
        let x0 = mesh.rest_position(i);
        if x == x0 {
            continue;
        }
        let mut step = alpha;
        'tries: for _ in 0..=20 {
            let cand = x.lerp(x0, step);
            let mut ok = true;
            for &t in mesh.triangles_of_node(i) {
                let tri = mesh.triangle(t);
                let p: Vec<Vec2> = tri
                    .iter()
                    .map(|&v| if v == i { cand } else { mesh.position(v) })
                    .collect();
                if crate::mesh::signed_area(p[0], p[1], p[2]) < 0.0 {
                    ok = false;
                    break;
                }
            }
            if ok {
                mesh.set_position(i, cand);
                break 'tries;
            }
            step *= 0.5;
        }
    }
}

/// Forces exact zeros at front nodes; other values untouched.
pub fn snap_front_levelset(phi: &mut [f64], front: &[bool]) {
    for (v, &f) in phi.iter_mut().zip(front) {
        if f {
            *v = 0.0;
        }
    }
}

/// Exhaustive edge scan: no edge may join strictly opposite signs.
pub fn check_conformity(mesh: &Mesh, phi: &[f64]) -> Result<()> {
    for e in mesh.edges() {
        if phi[e.a] * phi[e.b] < 0.0 {
            return Err(Error::Conformity(e.a, e.b));
        }
    }
    Ok(())
}

/// Deforms a fresh mesh (no front yet) so the zero set of the analytic
/// initial level set lies on mesh edges, then returns the snapped nodal
/// values ready for the initial classification.
///
/// Initialization works per cut-edge: the nearer movable endpoint is placed
/// on the edge's zero crossing, one move at a time, each guarded against
/// inverting an incident triangle (a blocked move is retried on a later
/// pass, then the far endpoint is tried). Every applied move turns all
/// edges of that node conformal and creates no new cut edge, so the loop
/// terminates. Boundary nodes move only along boundary edges; corners never
/// move.
pub fn conform_initial(mesh: &mut Mesh, phi0: &[f64]) -> Result<Vec<f64>> {
    let nn = mesh.node_count();
    assert_eq!(phi0.len(), nn);
    let mut front = vec![false; nn];
    for i in 0..nn {
        if phi0[i] == 0.0 {
            front[i] = true;
        }
    }
    let phi_of = |i: usize, front: &[bool]| if front[i] { 0.0 } else { phi0[i] };

    // A node may slide along edge (i, j) if it is not a corner and, when on
    // the boundary, only along boundary edges.
    let movable = |mesh: &Mesh, i: usize, j: usize| -> bool {
        if mesh.is_corner(i) {
            return false;
        }
        if mesh.is_boundary(i) {
            mesh.boundary_neighbors(i).contains(&j)
        } else {
            true
        }
    };

    let try_move = |mesh: &mut Mesh, node: usize, pos: Vec2| -> bool {
        let old = mesh.position(node);
        mesh.set_position(node, pos);
        for &t in mesh.triangles_of_node(node) {
            if mesh.area(t) < 0.0 {
                mesh.set_position(node, old);
                return false;
            }
        }
        true
    };

    for pass in 0..16 {
        let mut remaining = 0usize;
        let mut progress = false;
        for e in 0..mesh.edges().len() {
            let (a, b) = {
                let e = &mesh.edges()[e];
                (e.a, e.b)
            };
            let (pa, pb) = (phi_of(a, &front), phi_of(b, &front));
            if pa * pb >= 0.0 {
                continue;
            }
            // Candidate movers ordered: nearer endpoint first; far endpoint
            // allowed from the second half of the passes as a fallback.
            let nearer_is_a = pa.abs() < pb.abs() || (pa.abs() == pb.abs() && a < b);
            let order = if nearer_is_a { [a, b] } else { [b, a] };
            let candidates: &[usize] = if pass < 8 { &order[..1] } else { &order };
            let mut resolved = false;
            for &m in candidates {
                let other = if m == a { b } else { a };
                if !movable(mesh, m, other) {
                    continue;
                }
                let (pm, po) = (phi_of(m, &front), phi_of(other, &front));
                let s = pm / (pm - po);
                let pos = mesh.position(m).lerp(mesh.position(other), s);
                if try_move(mesh, m, pos) {
                    front[m] = true;
                    resolved = true;
                    progress = true;
                    break;
                }
            }
            if !resolved {
                remaining += 1;
            }
        }
        if remaining == 0 {
            break;
        }
        if !progress && pass >= 8 {
            return Err(Error::Mesh(format!(
                "initial interface conforming stalled with {remaining} cut edges"
            )));
        }
    }

    mesh.set_front_flags(front);
    let mut phi = phi0.to_vec();
    snap_front_levelset(&mut phi, mesh.front_flags());
    check_conformity(mesh, &phi)?;
    debug_assert!((0..mesh.triangle_count()).all(|t| mesh.area(t) >= 0.0));
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_rect_mesh;

    #[test]
    fn active_flags() {
        // Previous front node leaving the front, an interior flip, and a
        // node that merely changed magnitude.
        let prev = [0.0, -0.1, -0.1];
        let new = [0.2, 0.1, -0.3];
        let a = find_active(&prev, &new);
        assert_eq!(a, vec![true, true, false]);
    }

    #[test]
    fn closest_target_midpoints() {
        let mut mesh = generate_rect_mesh(2.0, 2.0, 2, 2).unwrap();
        // Node 4 is the center at (1,1); neighbors include (0,1)=3, (2,1)=5,
        // (1,0)=1, (1,2)=7 and diagonal corners.
        let mut phi = vec![1.0; 9];
        phi[4] = -1.0;
        // Zero at the midpoint of every cut edge; the closest are the
        // axis-aligned ones (distance 0.5); tie broken by lowest index (1).
        let (pos, j) = determine_closest_target(&mesh, 4, mesh.neighbors(4), &phi).unwrap();
        assert_eq!(j, 1);
        assert!((pos - Vec2::new(1.0, 0.5)).norm() < 1e-15);

        // All same sign: no target.
        let phi_same = vec![1.0; 9];
        assert!(determine_closest_target(&mesh, 4, mesh.neighbors(4), &phi_same).is_none());

        // Endpoint zero: target exactly at the neighbor.
        let mut phi_zero = vec![1.0; 9];
        phi_zero[4] = -1.0;
        phi_zero[1] = 0.0;
        let (pos, j) = determine_closest_target(&mesh, 4, &[1], &phi_zero).unwrap();
        assert_eq!(j, 1);
        assert_eq!(pos, mesh.position(1));
        let _ = &mut mesh;
    }

    #[test]
    fn no_sign_change_no_motion() {
        let mut mesh = generate_rect_mesh(1.0, 1.0, 4, 4).unwrap();
        let phi_prev: Vec<f64> = (0..mesh.node_count())
            .map(|i| mesh.position(i).x - 0.51)
            .collect();
        let before = mesh.positions().to_vec();
        let fronts = mesh.front_flags().to_vec();
        let out = move_front(&mut mesh, &phi_prev.clone(), &phi_prev).unwrap();
        assert_eq!(out.n_active, 0);
        assert_eq!(out.n_moved, 0);
        assert_eq!(mesh.positions(), before.as_slice());
        assert_eq!(mesh.front_flags(), fronts.as_slice());
    }

    #[test]
    fn planar_front_conforms() {
        // Initial conformity via the sign-flip trick, then advance the plane
        // by 0.4 h and relay; after each step no strictly-cut edge remains
        // and no triangle inverts.
        let n = 16;
        let mut mesh = generate_rect_mesh(1.0, 1.0, n, n).unwrap();
        let h = 1.0 / n as f64;
        let plane = |x0: f64, mesh: &Mesh| -> Vec<f64> {
            (0..mesh.node_count())
                .map(|i| mesh.position(i).x - x0)
                .collect()
        };
        let mut x0 = 0.3 + 0.21 * h;
        let phi0 = plane(x0, &mesh);
        let mut phi = conform_initial(&mut mesh, &phi0).unwrap();
        assert!(mesh.front_flags().iter().any(|&f| f));
        for _ in 0..10 {
            x0 += 0.4 * h;
            let phi_new = plane(x0, &mesh);
            move_front(&mut mesh, &phi_new, &phi).unwrap();
            let mut snapped = phi_new;
            snap_front_levelset(&mut snapped, mesh.front_flags());
            check_conformity(&mesh, &snapped).unwrap();
            for t in 0..mesh.triangle_count() {
                assert!(mesh.area(t) >= -1e-15, "triangle {t} inverted");
            }
            phi = snapped;
        }
    }

    #[test]
    fn boundary_nodes_stay_on_wall() {
        // A tilted plane crossing the bottom wall: wall nodes must slide
        // along the wall, never off it.
        let n = 12;
        let mut mesh = generate_rect_mesh(1.0, 1.0, n, n).unwrap();
        let field = |mesh: &Mesh, c: f64| -> Vec<f64> {
            (0..mesh.node_count())
                .map(|i| {
                    let p = mesh.position(i);
                    p.x + 0.3 * p.y - c
                })
                .collect()
        };
        let phi0 = field(&mesh, 0.4);
        let mut phi = conform_initial(&mut mesh, &phi0).unwrap();
        for k in 1..=6 {
            let phi_new = field(&mesh, 0.4 + 0.03 * k as f64);
            move_front(&mut mesh, &phi_new, &phi).unwrap();
            let mut snapped = phi_new;
            snap_front_levelset(&mut snapped, mesh.front_flags());
            check_conformity(&mesh, &snapped).unwrap();
            phi = snapped;
        }
        for i in 0..mesh.node_count() {
            if mesh.is_boundary(i) {
                let p = mesh.position(i);
                let on_wall = p.x.abs() < 1e-14
                    || (p.x - 1.0).abs() < 1e-14
                    || p.y.abs() < 1e-14
                    || (p.y - 1.0).abs() < 1e-14;
                assert!(on_wall, "boundary node {i} left the wall: {p:?}");
            }
        }
        // Corners never move.
        for i in 0..mesh.node_count() {
            if mesh.is_corner(i) {
                assert_eq!(mesh.position(i), mesh.rest_position(i));
            }
        }
    }

    #[test]
    fn relax_snap_and_guard() {
        let mut mesh = generate_rect_mesh(1.0, 1.0, 4, 4).unwrap();
        let protected = vec![false; mesh.node_count()];
        // Displace an interior node, then relax fully back.
        mesh.set_position(6, Vec2::new(0.3, 0.22));
        relax_to_rest(&mut mesh, 1.0, &protected);
        assert_eq!(mesh.position(6), mesh.rest_position(6));

        // alpha = 0: nothing happens.
        mesh.set_position(6, Vec2::new(0.3, 0.22));
        relax_to_rest(&mut mesh, 0.0, &protected);
        assert_eq!(mesh.position(6), Vec2::new(0.3, 0.22));

        // Protected nodes stay.
        let mut prot = vec![false; mesh.node_count()];
        prot[6] = true;
        relax_to_rest(&mut mesh, 0.5, &prot);
        assert_eq!(mesh.position(6), Vec2::new(0.3, 0.22));

        // Halfway for unprotected.
        prot[6] = false;
        relax_to_rest(&mut mesh, 0.5, &prot);
        let expect = Vec2::new(0.3, 0.22).lerp(mesh.rest_position(6), 0.5);
        assert!((mesh.position(6) - expect).norm() < 1e-15);
    }

    #[test]
    fn snap_zeroes_front_only() {
        let mut phi = vec![1e-14, -0.3, 0.7];
        snap_front_levelset(&mut phi, &[true, false, false]);
        assert_eq!(phi, vec![0.0, -0.3, 0.7]);
        let mut phi2 = vec![0.5];
        snap_front_levelset(&mut phi2, &[false]);
        assert_eq!(phi2, vec![0.5]);
    }
}
