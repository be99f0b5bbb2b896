//! One implicit Euler step of the SUPG/PSPG-stabilized incompressible
//! Navier-Stokes equations with per-phase properties, ALE mesh-velocity
//! correction, and surface tension imposed as a sharp nodal pressure jump.
//!
//! Unknowns are nodal (u, v, p), interleaved. The pressure gradient is used
//! in non-integrated-by-parts form and acts on the modified pressure: inside
//! the positive phase, front-node pressures are augmented by sigma * kappa,
//! which is what balances surface tension against the discrete pressure
//! gradient exactly and keeps spurious currents at solver precision.
//!
//! The momentum advection is implicit in u_{n+1}; the ALE correction
//! -u_mesh . grad(u_n) stays explicit in the lagged velocity. SUPG and PSPG
//! share one stabilization coefficient evaluated at the element centroid.

use crate::fem::{clamp_area, edge_normals, mass_matrix, FemSpace, DEFAULT_EPS_AREA};
use crate::levelset::{Phase, PhaseLabels};
use crate::linsolve::LinearSolver;
use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};
use std::collections::HashMap;

/// Per-phase material constants plus gravity and surface tension.
#[derive(Debug, Clone, Copy)]
pub struct FluidProperties {
    /// Densities indexed by `Phase::index()`.
    pub rho: [f64; 2],
    /// Dynamic viscosities indexed by `Phase::index()`.
    pub mu: [f64; 2],
    pub gravity: Vec2,
    pub sigma: f64,
}

impl FluidProperties {
    pub fn validate(&self) -> Result<()> {
        if self.rho.iter().any(|&r| !(r > 0.0)) || self.mu.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Config(
                "densities and viscosities must be strictly positive".into(),
            ));
        }
        if self.sigma < 0.0 {
            return Err(Error::Config("surface tension must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Velocity and pressure at the mesh nodes.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: Vec<Vec2>,
    pub p: Vec<f64>,
}

impl FlowState {
    pub fn quiescent(n: usize) -> FlowState {
        FlowState {
            u: vec![Vec2::ZERO; n],
            p: vec![0.0; n],
        }
    }
}

/// Wall condition per boundary tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallBc {
    /// Zero normal velocity, strongly imposed (axis-aligned walls only).
    FreeSlip,
    /// Zero velocity.
    NoSlip,
}

#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    pub default: WallBc,
    pub per_tag: HashMap<String, WallBc>,
}

impl BoundaryConditions {
    pub fn free_slip_everywhere() -> Self {
        BoundaryConditions {
            default: WallBc::FreeSlip,
            per_tag: HashMap::new(),
        }
    }

    pub fn with_tag(mut self, tag: &str, bc: WallBc) -> Self {
        self.per_tag.insert(tag.to_string(), bc);
        self
    }

    fn of_tag(&self, tag: &str) -> WallBc {
        *self.per_tag.get(tag).unwrap_or(&self.default)
    }
}

/// Per-node strong velocity constraints derived from wall conditions.
/// A corner shared by two orthogonal free-slip walls ends up fully fixed.
#[derive(Debug, Clone)]
pub struct NodeConstraints {
    pub fix_ux: Vec<bool>,
    pub fix_uy: Vec<bool>,
}

impl NodeConstraints {
    pub fn build(mesh: &Mesh, bcs: &BoundaryConditions) -> Result<NodeConstraints> {
        let nn = mesh.node_count();
        let mut fix_ux = vec![false; nn];
        let mut fix_uy = vec![false; nn];
        for be in mesh.boundary_edges() {
            let bc = bcs.of_tag(&be.tag);
            let a = mesh.rest_position(be.a);
            let b = mesh.rest_position(be.b);
            let d = b - a;
            let len = d.norm();
            match bc {
                WallBc::NoSlip => {
                    for &i in &[be.a, be.b] {
                        fix_ux[i] = true;
                        fix_uy[i] = true;
                    }
                }
                WallBc::FreeSlip => {
                    if d.x.abs() <= 1e-12 * len {
                        // vertical wall: normal along x
                        fix_ux[be.a] = true;
                        fix_ux[be.b] = true;
                    } else if d.y.abs() <= 1e-12 * len {
                        fix_uy[be.a] = true;
                        fix_uy[be.b] = true;
                    } else {
                        return Err(Error::Config(format!(
                            "free-slip requires axis-aligned walls; edge ({}, {}) is oblique",
                            be.a, be.b
                        )));
                    }
                }
            }
        }
        Ok(NodeConstraints { fix_ux, fix_uy })
    }
}

/// Modified pressure seen by an element of the given phase.
#[inline]
pub fn modified_pressure(p_i: f64, kappa_i: f64, sigma: f64, element_phase: Phase) -> f64 {
    match element_phase {
        Phase::Omega1 => p_i,
        Phase::Omega2 => p_i + sigma * kappa_i,
    }
}

/// Nodal modified pressure for output: p + sigma kappa (kappa is zero off
/// the front, so the jump shows up only at interface nodes).
pub fn nodal_modified_pressure(p: &[f64], kappa: &[f64], sigma: f64) -> Vec<f64> {
    p.iter()
        .zip(kappa)
        .map(|(&pi, &ki)| pi + sigma * ki)
        .collect()
}

/// Shared SUPG/PSPG coefficient: inverse-square-sum of the temporal,
/// advective and viscous limits, scaled by 1/rho.
#[inline]
pub fn stabilization_tau(u_norm: f64, h: f64, rho: f64, nu: f64, dt: f64) -> f64 {
    let h = h.max(1e-300);
    let inv = (2.0 / dt).powi(2) + (2.0 * u_norm / h).powi(2) + (4.0 * nu / (h * h)).powi(2);
    inv.sqrt().recip() / rho
}

/// Nodal mesh velocity (x_n - x_{n-1}) / dt.
pub fn mesh_velocity(x_n: &[Vec2], x_nm1: &[Vec2], dt: f64) -> Vec<Vec2> {
    assert!(dt > 0.0);
    assert_eq!(x_n.len(), x_nm1.len());
    x_n.iter()
        .zip(x_nm1)
        .map(|(&a, &b)| (a - b) / dt)
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct NsOptions {
    pub eps_area: f64,
    pub newton_rel_tol: f64,
    pub newton_abs_tol: f64,
    pub max_newton: usize,
    /// Non-decreasing residuals tolerated before dropping the reaction
    /// (Newton) terms and continuing with Picard linearization.
    pub picard_after: usize,
}

impl Default for NsOptions {
    fn default() -> Self {
        NsOptions {
            eps_area: DEFAULT_EPS_AREA,
            newton_rel_tol: 1e-8,
            newton_abs_tol: 1e-12,
            max_newton: 25,
            picard_after: 3,
        }
    }
}

/// Inputs to one step that change every time step.
pub struct StepInputs<'a> {
    pub mesh: &'a Mesh,
    pub u_mesh: &'a [Vec2],
    pub phases: &'a PhaseLabels,
    pub kappa: &'a [f64],
    pub props: &'a FluidProperties,
    pub dt: f64,
}

pub struct NsSolver {
    space: FemSpace,
    solver: LinearSolver,
    constraints: NodeConstraints,
    pin_node: Option<usize>,
    /// Slots of each constrained row in the CSC pattern, plus its diagonal.
    row_fixups: Vec<(usize, Vec<u32>, u32)>,
    pub opts: NsOptions,
    pub last_newton_iters: usize,
    pub last_residuals: Vec<f64>,
}

impl NsSolver {
    pub fn new(
        mesh: &Mesh,
        bcs: &BoundaryConditions,
        pin_node: Option<usize>,
        opts: NsOptions,
    ) -> Result<NsSolver> {
        let space = FemSpace::new(mesh, 3);
        let constraints = NodeConstraints::build(mesh, bcs)?;
        let mut rows: Vec<usize> = Vec::new();
        for i in 0..mesh.node_count() {
            if constraints.fix_ux[i] {
                rows.push(3 * i);
            }
            if constraints.fix_uy[i] {
                rows.push(3 * i + 1);
            }
        }
        if let Some(pin) = pin_node {
            rows.push(3 * pin + 2);
        }
        let pattern = &space.pattern;
        let row_fixups = rows
            .iter()
            .map(|&r| {
                // All slots with row index r: walk the columns adjacent to
                // node r/3 (structural symmetry makes this exhaustive).
                let node = r / 3;
                let mut cols: Vec<usize> = mesh
                    .neighbors(node)
                    .iter()
                    .flat_map(|&j| (0..3).map(move |c| 3 * j + c))
                    .collect();
                cols.extend((0..3).map(|c| 3 * node + c));
                let slots = cols
                    .iter()
                    .map(|&c| pattern.slot(r, c) as u32)
                    .collect::<Vec<_>>();
                let diag = pattern.slot(r, r) as u32;
                (r, slots, diag)
            })
            .collect();
        Ok(NsSolver {
            space,
            solver: LinearSolver::new(),
            constraints,
            pin_node,
            row_fixups,
            opts,
            last_newton_iters: 0,
            last_residuals: Vec::new(),
        })
    }

    pub fn constraints(&self) -> &NodeConstraints {
        &self.constraints
    }

    /// Solves for (u, p) at the next time level by Newton iteration with a
    /// Picard fallback, starting from the previous state.
    pub fn step(&mut self, inputs: &StepInputs, state_n: &FlowState) -> Result<FlowState> {
        inputs.props.validate()?;
        let nn = inputs.mesh.node_count();
        assert_eq!(state_n.u.len(), nn);
        let n = 3 * nn;

        let mut z = vec![0.0f64; n];
        for i in 0..nn {
            z[3 * i] = state_n.u[i].x;
            z[3 * i + 1] = state_n.u[i].y;
            z[3 * i + 2] = state_n.p[i];
        }

        let mut history = Vec::new();
        let mut failures = 0usize;
        let mut picard = false;
        let mut norm0 = None;

        for it in 0..=self.opts.max_newton {
            let (values, residual) = self.assemble(inputs, state_n, &z, picard)?;
            let norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
            history.push(norm);
            let norm0 = *norm0.get_or_insert(norm);
            if norm <= (self.opts.newton_rel_tol * norm0).max(self.opts.newton_abs_tol) {
                self.last_newton_iters = it;
                self.last_residuals = history;
                let mut u = Vec::with_capacity(nn);
                let mut p = Vec::with_capacity(nn);
                for i in 0..nn {
                    u.push(Vec2::new(z[3 * i], z[3 * i + 1]));
                    p.push(z[3 * i + 2]);
                }
                return Ok(FlowState { u, p });
            }
            if it == self.opts.max_newton {
                break;
            }
            if history.len() >= 2 && norm >= history[history.len() - 2] {
                failures += 1;
                if failures >= self.opts.picard_after {
                    picard = true;
                }
            }
            let neg_f: Vec<f64> = residual.iter().map(|v| -v).collect();
            let delta = self
                .solver
                .solve(&self.space.pattern, &values, &neg_f)
                .map_err(|e| e.in_stage("navier-stokes linear solve"))?;
            for (zi, di) in z.iter_mut().zip(&delta) {
                *zi += di;
            }
        }
        Err(Error::NewtonDiverged {
            iterations: self.opts.max_newton,
            history,
        })
    }

    /// Assembles the Jacobian and residual of the fully discrete system at
    /// the iterate `z`. With `picard` set, the advection reaction terms are
    /// dropped from the Jacobian (the residual is untouched).
    fn assemble(
        &self,
        inputs: &StepInputs,
        state_n: &FlowState,
        z: &[f64],
        picard: bool,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mesh = inputs.mesh;
        let props = inputs.props;
        let dt = inputs.dt;
        let eps = self.opts.eps_area;
        let reaction = if picard { 0.0 } else { 1.0 };

        const MID: [[f64; 3]; 3] = [
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];

        let (mut values, mut residual) = self.space.assemble(mesh, |t, local, res| {
            let tri = mesh.triangle(t);
            let p_pos = mesh.triangle_positions(t);
            let geom = mesh.triangle_geometry(t);
            let area = geom.area;
            let area_cl = clamp_area(area, mesh.rest_area(t), eps);
            let d = edge_normals(&p_pos);
            let g = [
                d[0] / (2.0 * area_cl),
                d[1] / (2.0 * area_cl),
                d[2] / (2.0 * area_cl),
            ];
            let phase = inputs.phases.label[t];
            let rho = props.rho[phase.index()];
            let mu = props.mu[phase.index()];
            let grav = props.gravity;
            let m = mass_matrix(area);
            let k_visc = {
                let s = 1.0 / (4.0 * area_cl);
                let mut k = [[0.0; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        k[a][b] = d[a].dot(d[b]) * s;
                    }
                }
                k
            };

            let u_now: [Vec2; 3] = std::array::from_fn(|a| {
                Vec2::new(z[3 * tri[a]], z[3 * tri[a] + 1])
            });
            let p_now: [f64; 3] = std::array::from_fn(|a| z[3 * tri[a] + 2]);
            let u_old: [Vec2; 3] = std::array::from_fn(|a| state_n.u[tri[a]]);
            let u_msh: [Vec2; 3] = std::array::from_fn(|a| inputs.u_mesh[tri[a]]);
            let pbar: [f64; 3] = std::array::from_fn(|a| {
                modified_pressure(p_now[a], inputs.kappa[tri[a]], props.sigma, phase)
            });

            // Constant gradients of the P1 fields.
            let grad_u = [
                g[0] * u_now[0].x + g[1] * u_now[1].x + g[2] * u_now[2].x,
                g[0] * u_now[0].y + g[1] * u_now[1].y + g[2] * u_now[2].y,
            ];
            let grad_uo = [
                g[0] * u_old[0].x + g[1] * u_old[1].x + g[2] * u_old[2].x,
                g[0] * u_old[0].y + g[1] * u_old[1].y + g[2] * u_old[2].y,
            ];
            let div_u = grad_u[0].x + grad_u[1].y;
            let grad_pbar = g[0] * pbar[0] + g[1] * pbar[1] + g[2] * pbar[2];

            let cent_u = (u_now[0] + u_now[1] + u_now[2]) / 3.0;
            let nu = mu / rho;
            // Stabilization length scale: the smallest element altitude.
            // On the degenerate elements the relay leaves along the front,
            // test gradients grow like 1/area; only an area-proportional
            // tau keeps SUPG/PSPG contributions bounded there.
            let h_alt = (2.0 * area_cl / geom.h.max(1e-300)).max(1e-300);
            let tau = stabilization_tau(cent_u.norm(), h_alt, rho, nu, dt);

            let idx = |a: usize, c: usize| a * 3 + c; // local dof index
            let bs = 9;

            // --- Galerkin momentum ---
            for b in 0..3 {
                for j in 0..2 {
                    let row = idx(b, j);
                    let mut r = 0.0;
                    for a in 0..3 {
                        let uj = if j == 0 { u_now[a].x } else { u_now[a].y };
                        let uoj = if j == 0 { u_old[a].x } else { u_old[a].y };
                        r += m[a][b] * rho / dt * (uj - uoj);
                        r += rho * m[a][b] * u_now[a].dot(grad_u[j]);
                        r -= rho * m[a][b] * u_msh[a].dot(grad_uo[j]);
                        r += mu * k_visc[a][b] * uj;
                    }
                    let gj = if j == 0 { grav.x } else { grav.y };
                    let gp = if j == 0 { grad_pbar.x } else { grad_pbar.y };
                    r += area / 3.0 * gp;
                    r -= rho * area / 3.0 * gj;
                    res[row] += r;

                    for c in 0..3 {
                        // d/dU[c][m]
                        for mm in 0..2 {
                            let col = idx(c, mm);
                            let mut jac = 0.0;
                            if j == mm {
                                jac += m[c][b] * rho / dt;
                                jac += mu * k_visc[c][b];
                                // advection through the advected field
                                let mut s = 0.0;
                                for a in 0..3 {
                                    s += m[a][b] * u_now[a].dot(g[c]);
                                }
                                jac += rho * s;
                            }
                            // advection through the advecting field (reaction)
                            let gu = if mm == 0 { grad_u[j].x } else { grad_u[j].y };
                            jac += reaction * rho * m[c][b] * gu;
                            local[row * bs + col] += jac;
                        }
                        // d/dP[c]
                        let col = idx(c, 2);
                        let gc = if j == 0 { g[c].x } else { g[c].y };
                        local[row * bs + col] += area / 3.0 * gc;
                    }
                }
            }

            // --- SUPG momentum (3 midpoints, raw-area weight: degenerate
            // elements contribute nothing, like their Galerkin terms) ---
            let w = area.max(0.0) / 3.0;
            for q in MID.iter() {
                let uq = u_now[0] * q[0] + u_now[1] * q[1] + u_now[2] * q[2];
                let uoq = u_old[0] * q[0] + u_old[1] * q[1] + u_old[2] * q[2];
                let umq = u_msh[0] * q[0] + u_msh[1] * q[1] + u_msh[2] * q[2];
                let rel = uq - umq;
                // Strong residual at the quadrature point.
                let r_strong = [
                    rho * (uq.x - uoq.x) / dt + rho * rel.dot(grad_u[0]) + grad_pbar.x
                        - rho * grav.x,
                    rho * (uq.y - uoq.y) / dt + rho * rel.dot(grad_u[1]) + grad_pbar.y
                        - rho * grav.y,
                ];
                for b in 0..3 {
                    let wtest = rel.dot(g[b]);
                    for j in 0..2 {
                        let row = idx(b, j);
                        res[row] += tau * w * wtest * r_strong[j];
                        for c in 0..3 {
                            let nc = q[c];
                            for mm in 0..2 {
                                let col = idx(c, mm);
                                let gbm = if mm == 0 { g[b].x } else { g[b].y };
                                let gu = if mm == 0 { grad_u[j].x } else { grad_u[j].y };
                                let mut dr = rho * nc * gu; // reaction part
                                dr *= reaction;
                                if j == mm {
                                    dr += rho * nc / dt + rho * rel.dot(g[c]);
                                }
                                let mut jac = tau * w * wtest * dr;
                                // test-function dependence on u (reaction-like)
                                jac += reaction * tau * w * nc * gbm * r_strong[j];
                                local[row * bs + col] += jac;
                            }
                            let col = idx(c, 2);
                            let gcj = if j == 0 { g[c].x } else { g[c].y };
                            local[row * bs + col] += tau * w * wtest * gcj;
                        }
                    }
                }
            }

            // --- Continuity + PSPG (centroid rule) ---
            let cent_uo = (u_old[0] + u_old[1] + u_old[2]) / 3.0;
            let cent_um = (u_msh[0] + u_msh[1] + u_msh[2]) / 3.0;
            let rel_c = cent_u - cent_um;
            let r_cent = [
                rho * (cent_u.x - cent_uo.x) / dt + rho * rel_c.dot(grad_u[0]) + grad_pbar.x
                    - rho * grav.x,
                rho * (cent_u.y - cent_uo.y) / dt + rho * rel_c.dot(grad_u[1]) + grad_pbar.y
                    - rho * grav.y,
            ];
            // PSPG keeps the clamped area: with the altitude-scaled tau the
            // term stays bounded, and a raw weight would zero out the whole
            // pressure row of a node whose star has fully collapsed.
            let w_pspg = area_cl;
            for b in 0..3 {
                let row = idx(b, 2);
                res[row] += area / 3.0 * div_u
                    + tau * w_pspg * (g[b].x * r_cent[0] + g[b].y * r_cent[1]);
                for c in 0..3 {
                    for mm in 0..2 {
                        let col = idx(c, mm);
                        let gcm = if mm == 0 { g[c].x } else { g[c].y };
                        let mut jac = area / 3.0 * gcm;
                        // PSPG: derivative of the strong residual.
                        for j in 0..2 {
                            let gbj = if j == 0 { g[b].x } else { g[b].y };
                            let gu = if mm == 0 { grad_u[j].x } else { grad_u[j].y };
                            let mut dr = reaction * rho * (1.0 / 3.0) * gu;
                            if j == mm {
                                dr += rho / (3.0 * dt) + rho * rel_c.dot(g[c]);
                            }
                            jac += tau * w_pspg * gbj * dr;
                        }
                        local[row * bs + col] += jac;
                    }
                    let col = idx(c, 2);
                    local[row * bs + col] += tau * w_pspg * g[b].dot(g[c]);
                }
            }
        })?;

        // Strong constraints: replace rows by identity, residual by the
        // current dof value so the Newton update drives it to zero.
        for (r, slots, diag) in &self.row_fixups {
            for &s in slots {
                values[s as usize] = 0.0;
            }
            values[*diag as usize] = 1.0;
            residual[*r] = z[*r];
        }
        let _ = self.pin_node;
        Ok((values, residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_rect_mesh;

    fn uniform_phases(mesh: &Mesh, phase: Phase) -> PhaseLabels {
        PhaseLabels {
            label: vec![phase; mesh.triangle_count()],
            triple_zero: vec![false; mesh.triangle_count()],
        }
    }

    fn props_single(rho: f64, mu: f64, g: Vec2, sigma: f64) -> FluidProperties {
        FluidProperties {
            rho: [rho, rho],
            mu: [mu, mu],
            gravity: g,
            sigma,
        }
    }

    #[test]
    fn tau_limits() {
        // Diffusion-dominated: tau -> 0 as nu grows.
        let t1 = stabilization_tau(0.0, 0.1, 1.0, 1e6, 1.0);
        assert!(t1 < 1e-8);
        // dt -> 0: tau -> dt/2 / rho.
        let dt = 1e-9;
        let t2 = stabilization_tau(1.0, 0.1, 2.0, 1e-3, dt);
        assert!((t2 - dt / 2.0 / 2.0).abs() < 1e-3 * dt);
        // Advective limit: tau ~ h / (2 |u| rho).
        let t3 = stabilization_tau(1e8, 0.1, 3.0, 1e-3, 1.0);
        assert!((t3 - 0.1 / (2.0 * 1e8) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_velocity_basic() {
        let a = vec![Vec2::new(0.1, 0.0), Vec2::new(1.0, 1.0)];
        let b = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)];
        let v = mesh_velocity(&a, &b, 0.05);
        assert!((v[0] - Vec2::new(2.0, 0.0)).norm() < 1e-14);
        assert_eq!(v[1], Vec2::ZERO);
        let v2 = mesh_velocity(&a, &b, 0.1);
        assert!((v2[0] - Vec2::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn modified_pressure_cases() {
        assert_eq!(modified_pressure(0.0, 2.0, 100.0, Phase::Omega2), 200.0);
        assert_eq!(modified_pressure(7.0, 2.0, 100.0, Phase::Omega1), 7.0);
        assert_eq!(modified_pressure(7.0, 2.0, 0.0, Phase::Omega2), 7.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // Random-ish state on a small mesh with two phases, gravity, mesh
        // motion and curvature: the hand-coded Jacobian must agree with
        // central differences through all terms.
        let mesh = generate_rect_mesh(1.0, 0.8, 3, 3).unwrap();
        let nn = mesh.node_count();
        let mut labels = uniform_phases(&mesh, Phase::Omega1);
        for t in 0..mesh.triangle_count() {
            if t % 3 == 0 {
                labels.label[t] = Phase::Omega2;
            }
        }
        let props = FluidProperties {
            rho: [1000.0, 1.3],
            mu: [1.0, 0.01],
            gravity: Vec2::new(0.1, -9.81),
            sigma: 5.0,
        };
        let mut lcg = 12345u64;
        let mut rnd = move || {
            lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((lcg >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let kappa: Vec<f64> = (0..nn).map(|_| rnd()).collect();
        let u_mesh: Vec<Vec2> = (0..nn).map(|_| Vec2::new(rnd(), rnd()) * 0.2).collect();
        let state_n = FlowState {
            u: (0..nn).map(|_| Vec2::new(rnd(), rnd())).collect(),
            p: (0..nn).map(|_| rnd() * 10.0).collect(),
        };
        let z: Vec<f64> = (0..3 * nn).map(|_| rnd()).collect();

        let bcs = BoundaryConditions::free_slip_everywhere();
        let ns = NsSolver::new(&mesh, &bcs, Some(0), NsOptions::default()).unwrap();
        let inputs = StepInputs {
            mesh: &mesh,
            u_mesh: &u_mesh,
            phases: &labels,
            kappa: &kappa,
            props: &props,
            dt: 0.01,
        };
        let (values, _) = ns.assemble(&inputs, &state_n, &z, false).unwrap();

        let eps = 1e-6;
        let n = 3 * nn;
        let mut worst = 0f64;
        for col in 0..n {
            let mut zp = z.clone();
            zp[col] += eps;
            let (_, fp) = ns.assemble(&inputs, &state_n, &zp, false).unwrap();
            let mut zm = z.clone();
            zm[col] -= eps;
            let (_, fm) = ns.assemble(&inputs, &state_n, &zm, false).unwrap();
            for row in 0..n {
                let fd = (fp[row] - fm[row]) / (2.0 * eps);
                let lo = ns.space.pattern.col_ptr[col];
                let hi = ns.space.pattern.col_ptr[col + 1];
                let an = match ns.space.pattern.row_idx[lo..hi].binary_search(&row) {
                    Ok(k) => values[lo + k],
                    Err(_) => 0.0,
                };
                let err = (fd - an).abs();
                worst = worst.max(err);
            }
        }
        assert!(worst < 5e-5, "max Jacobian mismatch {worst}");
    }

    #[test]
    fn quiescent_single_fluid_preserved() {
        let mesh = generate_rect_mesh(1.0, 1.0, 6, 6).unwrap();
        let nn = mesh.node_count();
        let labels = uniform_phases(&mesh, Phase::Omega1);
        let props = props_single(1000.0, 1.0, Vec2::ZERO, 0.0);
        let bcs = BoundaryConditions::free_slip_everywhere();
        let mut ns = NsSolver::new(&mesh, &bcs, Some(0), NsOptions::default()).unwrap();
        let kappa = vec![0.0; nn];
        let u_mesh = vec![Vec2::ZERO; nn];
        let state = FlowState::quiescent(nn);
        let inputs = StepInputs {
            mesh: &mesh,
            u_mesh: &u_mesh,
            phases: &labels,
            kappa: &kappa,
            props: &props,
            dt: 0.1,
        };
        let next = ns.step(&inputs, &state).unwrap();
        let umax = next.u.iter().map(|v| v.norm()).fold(0f64, f64::max);
        let pspread = next
            .p
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        assert!(umax <= 1e-12, "umax = {umax}");
        assert!(pspread.1 - pspread.0 <= 1e-12);
        assert_eq!(ns.last_newton_iters, 0);
    }

    #[test]
    fn hydrostatic_balance_exact() {
        // Gravity on, from rest: the P1 hydrostatic pressure balances
        // exactly, so velocity stays at solver precision and the pressure
        // gradient equals rho g elementwise.
        let mesh = generate_rect_mesh(1.0, 1.0, 6, 6).unwrap();
        let nn = mesh.node_count();
        let labels = uniform_phases(&mesh, Phase::Omega1);
        let rho = 1000.0;
        let props = props_single(rho, 1.0, Vec2::new(0.0, -9.81), 0.0);
        let bcs = BoundaryConditions::free_slip_everywhere();
        let mut ns = NsSolver::new(&mesh, &bcs, Some(0), NsOptions::default()).unwrap();
        let kappa = vec![0.0; nn];
        let u_mesh = vec![Vec2::ZERO; nn];
        let mut state = FlowState::quiescent(nn);
        let inputs = StepInputs {
            mesh: &mesh,
            u_mesh: &u_mesh,
            phases: &labels,
            kappa: &kappa,
            props: &props,
            dt: 0.05,
        };
        for _ in 0..3 {
            state = ns.step(&inputs, &state).unwrap();
        }
        let umax = state.u.iter().map(|v| v.norm()).fold(0f64, f64::max);
        assert!(umax <= 1e-10, "umax = {umax}");
        // dp/dy = -rho g everywhere.
        for t in 0..mesh.triangle_count() {
            let tri = mesh.triangle(t);
            let p_pos = mesh.triangle_positions(t);
            let area = crate::mesh::signed_area(p_pos[0], p_pos[1], p_pos[2]);
            let g = crate::fem::p1_gradients(&p_pos, area);
            let mut grad = Vec2::ZERO;
            for a in 0..3 {
                grad += g[a] * state.p[tri[a]];
            }
            assert!((grad.y - (-rho * 9.81)).abs() < 1e-6, "grad.y = {}", grad.y);
            assert!(grad.x.abs() < 1e-6);
        }
    }

    #[test]
    fn free_slip_constraints_on_walls_and_corners() {
        let mesh = generate_rect_mesh(1.0, 1.0, 4, 4).unwrap();
        let bcs = BoundaryConditions::free_slip_everywhere();
        let c = NodeConstraints::build(&mesh, &bcs).unwrap();
        for i in 0..mesh.node_count() {
            let p = mesh.rest_position(i);
            let on_left = p.x == 0.0;
            let on_right = (p.x - 1.0).abs() < 1e-14;
            let on_bottom = p.y == 0.0;
            let on_top = (p.y - 1.0).abs() < 1e-14;
            assert_eq!(c.fix_ux[i], on_left || on_right);
            assert_eq!(c.fix_uy[i], on_bottom || on_top);
        }
        // No-slip override on one wall.
        let bcs2 = BoundaryConditions::free_slip_everywhere().with_tag("bottom", WallBc::NoSlip);
        let c2 = NodeConstraints::build(&mesh, &bcs2).unwrap();
        for i in 0..mesh.node_count() {
            let p = mesh.rest_position(i);
            if p.y == 0.0 {
                assert!(c2.fix_ux[i] && c2.fix_uy[i]);
            }
        }
    }

    #[test]
    fn pressure_offset_invariance() {
        // Adding a constant to the initial pressure must not change the
        // velocity solution when a reference node is pinned.
        let mesh = generate_rect_mesh(1.0, 1.0, 5, 5).unwrap();
        let nn = mesh.node_count();
        let labels = uniform_phases(&mesh, Phase::Omega1);
        let props = props_single(100.0, 0.5, Vec2::new(0.0, -1.0), 0.0);
        let bcs = BoundaryConditions::free_slip_everywhere();
        let kappa = vec![0.0; nn];
        let u_mesh = vec![Vec2::ZERO; nn];
        let inputs = StepInputs {
            mesh: &mesh,
            u_mesh: &u_mesh,
            phases: &labels,
            kappa: &kappa,
            props: &props,
            dt: 0.02,
        };
        let run = |p0: f64| {
            let mut ns = NsSolver::new(&mesh, &bcs, Some(0), NsOptions::default()).unwrap();
            let state = FlowState {
                u: vec![Vec2::ZERO; nn],
                p: vec![p0; nn],
            };
            ns.step(&inputs, &state).unwrap()
        };
        let a = run(0.0);
        let b = run(137.0);
        for i in 0..nn {
            assert!((a.u[i] - b.u[i]).norm() <= 1e-12);
        }
    }
}
