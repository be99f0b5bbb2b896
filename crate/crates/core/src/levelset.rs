//! Level-set transport and element phase classification.
//!
//! The level set is advected with a Crank-Nicolson scheme in time and SUPG
//! stabilization in space, on the frozen pre-relay mesh. After the relay the
//! nodal values are rebuilt by fast marching (see [`crate::fastmarch`]); this
//! module only deals with the transport step and with turning signs into
//! per-element phase labels.

use crate::fem::{clamp_area, edge_normals, mass_matrix, FemSpace, DEFAULT_EPS_AREA};
use crate::linsolve::LinearSolver;
use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};

/// Fluid phase of an element. `Omega2` is the phase where the level set is
/// positive (the bubble / light phase in the benchmark conventions).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Omega1,
    Omega2,
}

impl Phase {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Phase::Omega1 => 0,
            Phase::Omega2 => 1,
        }
    }

    #[inline]
    pub fn other(self) -> Phase {
        match self {
            Phase::Omega1 => Phase::Omega2,
            Phase::Omega2 => Phase::Omega1,
        }
    }

    fn from_sign(v: f64) -> Phase {
        if v > 0.0 {
            Phase::Omega2
        } else {
            Phase::Omega1
        }
    }
}

/// Per-element phase labels plus the triple-zero bookkeeping that resolves
/// elements whose three vertices all sit on the front.
#[derive(Debug, Clone)]
pub struct PhaseLabels {
    pub label: Vec<Phase>,
    pub triple_zero: Vec<bool>,
}

impl PhaseLabels {
    /// Initial labels from the sign of the level set at element centroids;
    /// triple-zero flags start false.
    pub fn from_centroid_signs(mesh: &Mesh, phi: &[f64]) -> PhaseLabels {
        let label = mesh
            .triangles()
            .iter()
            .map(|tri| Phase::from_sign((phi[tri[0]] + phi[tri[1]] + phi[tri[2]]) / 3.0))
            .collect();
        PhaseLabels {
            label,
            triple_zero: vec![false; mesh.triangle_count()],
        }
    }
}

/// Classifies every element from vertex level-set signs.
///
/// Assumes post-relay conformity: no element may have strictly opposite
/// nonzero signs (that is an upstream relay failure and is reported as such).
/// All-zero elements follow the history rule: a previously triple-zero
/// element keeps its phase, a fresh one flips it - this is what lets phases
/// merge through topology changes.
pub fn classify_elements(mesh: &Mesh, phi: &[f64], prev: &PhaseLabels) -> Result<PhaseLabels> {
    let nt = mesh.triangle_count();
    let mut label = Vec::with_capacity(nt);
    let mut triple_zero = Vec::with_capacity(nt);
    for t in 0..nt {
        let tri = mesh.triangle(t);
        let v = [phi[tri[0]], phi[tri[1]], phi[tri[2]]];
        let pos = v.iter().any(|&x| x > 0.0);
        let neg = v.iter().any(|&x| x < 0.0);
        if pos && neg {
            // Find the offending edge for the report.
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if phi[a] * phi[b] < 0.0 {
                    return Err(Error::Conformity(a, b));
                }
            }
            return Err(Error::Conformity(tri[0], tri[1]));
        }
        if pos {
            label.push(Phase::Omega2);
            triple_zero.push(false);
        } else if neg {
            label.push(Phase::Omega1);
            triple_zero.push(false);
        } else {
            let l = if prev.triple_zero[t] {
                prev.label[t]
            } else {
                prev.label[t].other()
            };
            label.push(l);
            triple_zero.push(true);
        }
    }
    Ok(PhaseLabels { label, triple_zero })
}

/// Crank-Nicolson + SUPG level-set advection on a frozen mesh.
pub struct LevelSetSolver {
    space: FemSpace,
    solver: LinearSolver,
    pub eps_area: f64,
    /// Scale on the SUPG coefficient (1 = standard).
    pub tau_scale: f64,
}

impl LevelSetSolver {
    pub fn new(mesh: &Mesh) -> LevelSetSolver {
        LevelSetSolver {
            space: FemSpace::new(mesh, 1),
            solver: LinearSolver::new(),
            eps_area: DEFAULT_EPS_AREA,
            tau_scale: 1.0,
        }
    }

    /// One advection step: solves the discrete Crank-Nicolson form including
    /// the phi div(u) terms and the SUPG residual term.
    pub fn advect(&mut self, mesh: &Mesh, phi_n: &[f64], u: &[Vec2], dt: f64) -> Result<Vec<f64>> {
        assert!(dt > 0.0);
        assert_eq!(phi_n.len(), mesh.node_count());
        assert_eq!(u.len(), mesh.node_count());

        // Pure identity when the velocity vanishes: the discrete system
        // reduces to M (phi' - phi) = 0.
        if u.iter().all(|v| v.x == 0.0 && v.y == 0.0) {
            return Ok(phi_n.to_vec());
        }

        let eps = self.eps_area;
        let tau_scale = self.tau_scale;
        let (values, rhs) = self.space.assemble(mesh, |t, local, rhs_local| {
            let tri = mesh.triangle(t);
            let p = mesh.triangle_positions(t);
            let geom = mesh.triangle_geometry(t);
            let area = geom.area;
            let area_cl = clamp_area(area, mesh.rest_area(t), eps);
            let d = edge_normals(&p);
            let grad = [
                d[0] / (2.0 * area_cl),
                d[1] / (2.0 * area_cl),
                d[2] / (2.0 * area_cl),
            ];
            let un = [u[tri[0]], u[tri[1]], u[tri[2]]];
            let div_u = un[0].dot(grad[0]) + un[1].dot(grad[1]) + un[2].dot(grad[2]);
            let m = mass_matrix(area);

            // tau from the advective/temporal limits; no viscosity, no
            // density scaling for the scalar transport equation. The length
            // scale is the smallest element altitude (2A/h_max), not the
            // longest edge: the SUPG test gradients grow like 1/A on the
            // degenerate elements the relay parks along the front, and only
            // an area-proportional tau keeps their stabilization bounded
            // (and vanishing with the element measure).
            let u_mid = (un[0] + un[1] + un[2]) / 3.0;
            let h_alt = (2.0 * area_cl / geom.h.max(1e-300)).max(1e-300);
            let inv = (2.0 / dt).powi(2) + (2.0 * u_mid.norm() / h_alt).powi(2);
            let tau = tau_scale * inv.sqrt().recip();

            // Galerkin: (M/dt + C/2) phi' = (M/dt - C/2) phi
            // with C_ab = sum_c M_ac (U_c . grad_b) + M_ab div_u.
            for a in 0..3 {
                for b in 0..3 {
                    let mut c_ab = m[a][b] * div_u;
                    for c in 0..3 {
                        c_ab += m[a][c] * un[c].dot(grad[b]);
                    }
                    local[a * 3 + b] += m[a][b] / dt + 0.5 * c_ab;
                    rhs_local[a] += (m[a][b] / dt - 0.5 * c_ab) * phi_n[tri[b]];
                }
            }

            // SUPG on the three edge midpoints (exact for the quadratic
            // integrand), with the raw area as weight: with the altitude-
            // scaled tau the contribution of a degenerate element then goes
            // to zero with its measure.
            let w = area.max(0.0) / 3.0;
            const MID: [[f64; 3]; 3] = [
                [0.5, 0.5, 0.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
            ];
            for q in MID.iter() {
                let uq = un[0] * q[0] + un[1] * q[1] + un[2] * q[2];
                let test = [uq.dot(grad[0]), uq.dot(grad[1]), uq.dot(grad[2])];
                for b in 0..3 {
                    // Coefficient of phi'_b and phi_b in the strong residual
                    // at this quadrature point.
                    let adv = uq.dot(grad[b]) + q[b] * div_u;
                    let lhs_coef = q[b] / dt + 0.5 * adv;
                    let rhs_coef = q[b] / dt - 0.5 * adv;
                    for a in 0..3 {
                        local[a * 3 + b] += tau * w * test[a] * lhs_coef;
                        rhs_local[a] += tau * w * test[a] * rhs_coef * phi_n[tri[b]];
                    }
                }
            }
        })?;

        self.solver.solve(&self.space.pattern, &values, &rhs)
    }
}
