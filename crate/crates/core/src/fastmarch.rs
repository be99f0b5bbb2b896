//! Fast marching on the triangulation: rebuilds an approximate signed
//! distance to the front after the mesh has moved.
//!
//! Seeds are the front nodes (distance exactly zero); values propagate in
//! causal order through a min-heap. Acute triangles use the planar two-point
//! update; obtuse or degenerate configurations fall back to edge-wise
//! Dijkstra updates, which is what keeps the method robust on the caps and
//! needles the relay produces near the front.

use crate::mesh::Mesh;
use crate::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Heap entry ordered as a min-heap on distance.
struct Entry {
    dist: f64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for min-heap; tie-break on node index for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

#[derive(Debug)]
pub struct FastMarchResult {
    pub phi: Vec<f64>,
    /// Nodes not reachable from any seed; their phi is +-infinity.
    pub unreachable: Vec<usize>,
}

/// Planar two-point update of vertex C from known values at A and B.
///
/// Solves for the arrival time t at C of a plane wave consistent with
/// t(A) = da and t(B) = db; valid only when the characteristic enters the
/// triangle through the edge AB, otherwise returns None.
fn face_update(da: f64, db: f64, pa: crate::Vec2, pb: crate::Vec2, pc: crate::Vec2) -> Option<f64> {
    // Order so that u = t(B) - t(A) >= 0.
    let (da, db, pa, pb) = if db >= da {
        (da, db, pa, pb)
    } else {
        (db, da, pb, pa)
    };
    let u = db - da;
    let a = (pb - pc).norm();
    let b = (pa - pc).norm();
    if a <= 0.0 || b <= 0.0 {
        return None;
    }
    let cos_c = ((pa - pc).dot(pb - pc) / (a * b)).clamp(-1.0, 1.0);
    if cos_c <= 0.0 {
        // Obtuse (or right) at C: no in-triangle characteristic; let the
        // caller fall back to edge updates.
        return None;
    }
    let sin2_c = (1.0 - cos_c * cos_c).max(0.0);
    let qa = a * a + b * b - 2.0 * a * b * cos_c;
    let qb = 2.0 * b * u * (a * cos_c - b);
    let qc = b * b * (u * u - a * a * sin2_c);
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 || qa <= 0.0 {
        return None;
    }
    let t = (-qb + disc.sqrt()) / (2.0 * qa);
    if t <= u {
        return None;
    }
    // The wave must cross the interior of AB: b(t-u)/t between a*cos and a/cos.
    let w = b * (t - u) / t;
    if w <= a * cos_c || w >= a / cos_c {
        return None;
    }
    Some(da + t)
}

/// Reconstructs |phi| as distance-to-front over the triangulation and applies
/// the given signs. Seed nodes get exactly zero.
///
/// `seed` marks the front nodes; `sign_source` provides the side of each
/// non-seed node (negative value = negative phase).
pub fn fast_march(mesh: &Mesh, seed: &[bool], sign_source: &[f64]) -> Result<FastMarchResult> {
    let nn = mesh.node_count();
    assert_eq!(seed.len(), nn);
    assert_eq!(sign_source.len(), nn);
    if !seed.iter().any(|&s| s) {
        return Err(Error::Mesh("fast marching requires at least one seed node".into()));
    }

    let mut dist = vec![f64::INFINITY; nn];
    let mut known = vec![false; nn];
    let mut heap = BinaryHeap::new();
    for i in 0..nn {
        if seed[i] {
            dist[i] = 0.0;
            heap.push(Entry { dist: 0.0, node: i });
        }
    }

    // The front is the polyline through the seed nodes, not the seed point
    // set, and the triangles straddling it are routinely degenerate (the
    // relay parks needles and caps there), where the causal updates lose
    // accuracy exactly where it matters most. The whole one-ring band
    // around the front is therefore initialized with exact point-to-segment
    // distances to every front edge; marching only propagates beyond it.
    let mut front_segments: Vec<(crate::Vec2, crate::Vec2)> = Vec::new();
    for e in mesh.edges() {
        if seed[e.a] && seed[e.b] {
            let pa = mesh.position(e.a);
            let pb = mesh.position(e.b);
            if (pb - pa).norm_sq() > 0.0 {
                front_segments.push((pa, pb));
            }
        }
    }
    if !front_segments.is_empty() {
        // Two rings: the relay and the rest relaxation deform the mesh in a
        // band about two elements wide around the front, and the marching
        // updates are least accurate on exactly those distorted triangles.
        let mut band: Vec<usize> = Vec::new();
        let mut in_band = vec![false; nn];
        for i in 0..nn {
            if !seed[i] {
                continue;
            }
            for &t in mesh.triangles_of_node(i) {
                for &c in &mesh.triangle(t) {
                    if !seed[c] && !in_band[c] {
                        in_band[c] = true;
                        band.push(c);
                    }
                }
            }
        }
        let ring1 = band.clone();
        for &i in &ring1 {
            for &t in mesh.triangles_of_node(i) {
                for &c in &mesh.triangle(t) {
                    if !seed[c] && !in_band[c] {
                        in_band[c] = true;
                        band.push(c);
                    }
                }
            }
        }
        for &c in &band {
            let pc = mesh.position(c);
            let mut d = f64::INFINITY;
            for &(pa, pb) in &front_segments {
                let ab = pb - pa;
                let s = ((pc - pa).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
                d = d.min(pc.dist(pa + ab * s));
            }
            if d < dist[c] {
                dist[c] = d;
                heap.push(Entry { dist: d, node: c });
            }
        }
    }

    while let Some(Entry { dist: d, node: i }) = heap.pop() {
        if known[i] || d > dist[i] {
            continue;
        }
        known[i] = true;

        // Update the non-known vertices of every triangle incident to i.
        for &t in mesh.triangles_of_node(i) {
            let tri = mesh.triangle(t);
            for k in 0..3 {
                let c = tri[k];
                if known[c] {
                    continue;
                }
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let pc = mesh.position(c);
                let mut cand = f64::INFINITY;
                for &v in &[a, b] {
                    if known[v] {
                        cand = cand.min(dist[v] + (mesh.position(v) - pc).norm());
                    }
                }
                if known[a] && known[b] {
                    if let Some(tf) =
                        face_update(dist[a], dist[b], mesh.position(a), mesh.position(b), pc)
                    {
                        cand = cand.min(tf);
                    }
                }
                if cand < dist[c] {
                    dist[c] = cand;
                    heap.push(Entry { dist: cand, node: c });
                }
            }
        }
    }

    let mut unreachable = Vec::new();
    let mut phi = vec![0.0; nn];
    for i in 0..nn {
        if seed[i] {
            phi[i] = 0.0;
            continue;
        }
        if !known[i] {
            unreachable.push(i);
        }
        let s = if sign_source[i] < 0.0 { -1.0 } else { 1.0 };
        phi[i] = s * dist[i];
    }
    Ok(FastMarchResult { phi, unreachable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_rect_mesh;
    use crate::Vec2;

    #[test]
    fn all_seeded_is_zero() {
        let mesh = generate_rect_mesh(1.0, 1.0, 4, 4).unwrap();
        let seed = vec![true; mesh.node_count()];
        let signs = vec![1.0; mesh.node_count()];
        let r = fast_march(&mesh, &seed, &signs).unwrap();
        assert!(r.phi.iter().all(|&v| v == 0.0));
        assert!(r.unreachable.is_empty());
    }

    #[test]
    fn straight_front_distance() {
        // Front x = 0.5 on a structured unit square mesh, h = 1/32. Nodes on
        // the line exist because 32 is even.
        let n = 32;
        let mut mesh = generate_rect_mesh(1.0, 1.0, n, n).unwrap();
        let h = 1.0 / n as f64;
        let mut seed = vec![false; mesh.node_count()];
        let mut signs = vec![0.0; mesh.node_count()];
        for i in 0..mesh.node_count() {
            let x = mesh.position(i).x;
            if (x - 0.5).abs() < 1e-12 {
                seed[i] = true;
            }
            signs[i] = x - 0.5;
        }
        let _ = &mut mesh;
        let r = fast_march(&mesh, &seed, &signs).unwrap();
        let mut max_err = 0f64;
        for i in 0..mesh.node_count() {
            let exact = mesh.position(i).x - 0.5;
            max_err = max_err.max((r.phi[i].abs() - exact.abs()).abs());
        }
        assert!(max_err <= 2.0 * h, "max_err = {max_err}, 2h = {}", 2.0 * h);
    }

    #[test]
    fn circular_front_distance() {
        // Seeds snapped onto the circle |x - c| = 0.3 by moving the nearest
        // ring of nodes onto it; distance error must stay within 2h.
        let n = 64;
        let mut mesh = generate_rect_mesh(1.0, 1.0, n, n).unwrap();
        let h = 1.0 / n as f64;
        let c = Vec2::new(0.5, 0.5);
        let radius = 0.3;
        let mut seed = vec![false; mesh.node_count()];
        let mut signs = vec![0.0; mesh.node_count()];
        for i in 0..mesh.node_count() {
            let p = mesh.position(i);
            let d = (p - c).norm() - radius;
            signs[i] = d;
            // Move nodes whose distance to the circle is under half an edge
            // onto the circle: a crude stand-in for the relay.
            if d.abs() < 0.4 * h && !mesh.is_boundary(i) {
                let dir = (p - c) * (1.0 / (p - c).norm());
                mesh.set_position(i, c + dir * radius);
                seed[i] = true;
                signs[i] = 0.0;
            }
        }
        let r = fast_march(&mesh, &seed, &signs).unwrap();
        let mut max_err = 0f64;
        for i in 0..mesh.node_count() {
            let exact = ((mesh.position(i) - c).norm() - radius).abs();
            max_err = max_err.max((r.phi[i].abs() - exact).abs());
        }
        assert!(max_err <= 2.0 * h, "max_err = {max_err}, 2h = {}", 2.0 * h);
        assert!(r.unreachable.is_empty());
    }

    #[test]
    fn no_seeds_is_error() {
        let mesh = generate_rect_mesh(1.0, 1.0, 2, 2).unwrap();
        let seed = vec![false; mesh.node_count()];
        let signs = vec![1.0; mesh.node_count()];
        assert!(fast_march(&mesh, &seed, &signs).is_err());
    }
}
