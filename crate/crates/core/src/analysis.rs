//! Benchmark quantity extraction: bubble center of mass, rise velocity,
//! circularity, phase mass, growth-rate fits and interface distances.

use crate::front::FrontChains;
use crate::levelset::{Phase, PhaseLabels};
use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};

/// One sample of the rising-bubble benchmark time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRow {
    pub t: f64,
    pub com_y: f64,
    pub rise_velocity: f64,
    pub circularity: f64,
    pub mass: f64,
    pub max_speed: f64,
}

/// Areas of the two phases (sum of triangle areas per label).
pub fn mass_per_phase(mesh: &Mesh, phases: &PhaseLabels) -> (f64, f64) {
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    for t in 0..mesh.triangle_count() {
        let a = mesh.area(t);
        match phases.label[t] {
            Phase::Omega1 => a1 += a,
            Phase::Omega2 => a2 += a,
        }
    }
    (a1, a2)
}

/// Benchmark quantities over the Omega2 region (disjoint patches are treated
/// as their union):
/// center of mass = area-weighted centroid, rise velocity = mean of u_y over
/// the region, circularity = perimeter of the area-equivalent circle over the
/// front perimeter, mass = area.
pub fn benchmark_quantities(
    t: f64,
    mesh: &Mesh,
    phases: &PhaseLabels,
    u: &[Vec2],
    chains: &FrontChains,
) -> Result<BenchmarkRow> {
    let mut area = 0.0;
    let mut com_y = 0.0;
    let mut uy_int = 0.0;
    for tr in 0..mesh.triangle_count() {
        if phases.label[tr] != Phase::Omega2 {
            continue;
        }
        let a = mesh.area(tr);
        let tri = mesh.triangle(tr);
        let c = (mesh.position(tri[0]) + mesh.position(tri[1]) + mesh.position(tri[2])) / 3.0;
        area += a;
        com_y += a * c.y;
        // Exact integral of the P1 interpolant: area times the vertex mean.
        uy_int += a * (u[tri[0]].y + u[tri[1]].y + u[tri[2]].y) / 3.0;
    }
    if area <= 0.0 {
        return Err(Error::Mesh("benchmark quantities need a nonempty Omega2".into()));
    }
    let perimeter = chains.total_length(mesh);
    let circularity = if perimeter > 0.0 {
        2.0 * (std::f64::consts::PI * area).sqrt() / perimeter
    } else {
        f64::NAN
    };
    let max_speed = u.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(BenchmarkRow {
        t,
        com_y: com_y / area,
        rise_velocity: uy_int / area,
        circularity,
        mass: area,
        max_speed,
    })
}

/// Least-squares slope of ln(h) against t. Needs at least 5 samples with
/// strictly positive h.
pub fn fit_growth_rate(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::Mesh(format!(
            "growth-rate fit needs at least 5 samples, got {}",
            samples.len()
        )));
    }
    if let Some((t, h)) = samples.iter().find(|(_, h)| *h <= 0.0) {
        return Err(Error::Mesh(format!(
            "growth-rate fit: nonpositive amplitude h = {h} at t = {t}"
        )));
    }
    let n = samples.len() as f64;
    let mut st = 0.0;
    let mut sy = 0.0;
    for &(t, h) in samples {
        st += t;
        sy += h.ln();
    }
    let (mt, my) = (st / n, sy / n);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, h) in samples {
        num += (t - mt) * (h.ln() - my);
        den += (t - mt) * (t - mt);
    }
    if den == 0.0 {
        return Err(Error::Mesh("growth-rate fit: all samples at the same time".into()));
    }
    Ok(num / den)
}

fn point_segment_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

fn directed_hausdorff(from: &[Vec<Vec2>], to: &[Vec<Vec2>]) -> f64 {
    let mut worst = 0f64;
    for poly in from {
        for &p in poly {
            let mut best = f64::INFINITY;
            for other in to {
                if other.len() == 1 {
                    best = best.min(p.dist(other[0]));
                }
                for w in other.windows(2) {
                    best = best.min(point_segment_dist(p, w[0], w[1]));
                }
            }
            worst = worst.max(best);
        }
    }
    worst
}

/// Symmetric Hausdorff distance between two interfaces given as polyline
/// collections (node positions against the other side's segments).
pub fn hausdorff_distance(a: &[Vec<Vec2>], b: &[Vec<Vec2>]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_rect_mesh;
    use crate::levelset::PhaseLabels;

    #[test]
    fn mass_split_square()
    {
        let mesh = generate_rect_mesh(1.0, 1.0, 8, 8).unwrap();
        let all1 = PhaseLabels {
            label: vec![Phase::Omega1; mesh.triangle_count()],
            triple_zero: vec![false; mesh.triangle_count()],
        };
        let (a1, a2) = mass_per_phase(&mesh, &all1);
        assert!((a1 - 1.0).abs() < 1e-13);
        assert_eq!(a2, 0.0);

        // Lower half Omega1, upper half Omega2.
        let label = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let cy = (mesh.position(tri[0]).y + mesh.position(tri[1]).y
                    + mesh.position(tri[2]).y)
                    / 3.0;
                if cy > 0.5 {
                    Phase::Omega2
                } else {
                    Phase::Omega1
                }
            })
            .collect();
        let half = PhaseLabels {
            label,
            triple_zero: vec![false; mesh.triangle_count()],
        };
        let (a1, a2) = mass_per_phase(&mesh, &half);
        assert!((a1 - 0.5).abs() < 1e-13);
        assert!((a2 - 0.5).abs() < 1e-13);
    }

    #[test]
    fn growth_rate_exact_and_constant() {
        let samples: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.01;
                (t, 0.05 * (9.3 * t).exp())
            })
            .collect();
        let alpha = fit_growth_rate(&samples).unwrap();
        assert!((alpha - 9.3).abs() < 1e-10);

        let flat: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 2.0)).collect();
        assert!(fit_growth_rate(&flat).unwrap().abs() < 1e-14);

        assert!(fit_growth_rate(&samples[..3]).is_err());
        assert!(fit_growth_rate(&[(0.0, 1.0), (1.0, -1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
    }

    #[test]
    fn growth_rate_noise_tolerance() {
        // 1 percent multiplicative noise, deterministic pseudo-random signs.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let samples: Vec<(f64, f64)> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.005;
                (t, 0.05 * (9.3 * t).exp() * (1.0 + 0.01 * 2.0 * rand()))
            })
            .collect();
        let alpha = fit_growth_rate(&samples).unwrap();
        assert!((alpha - 9.3).abs() < 0.1, "alpha = {alpha}");
    }

    #[test]
    fn hausdorff_translated_segments() {
        let a = vec![vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]];
        let b = vec![vec![Vec2::new(0.0, 0.2), Vec2::new(1.0, 0.2)]];
        let d = hausdorff_distance(&a, &b);
        assert!((d - 0.2).abs() < 1e-14);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
    }

    #[test]
    fn uniform_rise_velocity() {
        let mesh = generate_rect_mesh(1.0, 1.0, 8, 8).unwrap();
        let label = mesh
            .triangles()
            .iter()
            .map(|_| Phase::Omega2)
            .collect();
        let phases = PhaseLabels {
            label,
            triple_zero: vec![false; mesh.triangle_count()],
        };
        let u = vec![Vec2::new(0.0, 0.37); mesh.node_count()];
        let chains = FrontChains::default();
        let row = benchmark_quantities(0.0, &mesh, &phases, &u, &chains).unwrap();
        assert!((row.rise_velocity - 0.37).abs() < 1e-13);
        assert!((row.mass - 1.0).abs() < 1e-12);
        assert!((row.com_y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn circularity_square_patch() {
        // A square Omega2 patch has circularity sqrt(pi)/2.
        let mesh = generate_rect_mesh(3.0, 3.0, 12, 12).unwrap();
        let inside = |p: Vec2| p.x > 1.0 && p.x < 2.0 && p.y > 1.0 && p.y < 2.0;
        let label = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let c = (mesh.position(tri[0]) + mesh.position(tri[1]) + mesh.position(tri[2]))
                    / 3.0;
                if inside(c) {
                    Phase::Omega2
                } else {
                    Phase::Omega1
                }
            })
            .collect();
        let phases = PhaseLabels {
            label,
            triple_zero: vec![false; mesh.triangle_count()],
        };
        let chains = crate::front::extract_front_chains(&mesh, &phases);
        let u = vec![Vec2::ZERO; mesh.node_count()];
        let row = benchmark_quantities(0.0, &mesh, &phases, &u, &chains).unwrap();
        let expect = std::f64::consts::PI.sqrt() / 2.0;
        assert!(
            (row.circularity - expect).abs() < 1e-12,
            "circ = {} vs {expect}",
            row.circularity
        );
    }
}
