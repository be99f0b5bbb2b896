//! Benchmark scenario catalog: initial conditions, material properties,
//! boundary conditions and analytic oracles.
//!
//! Every scenario builds a mesh conformed to its analytic initial interface
//! (exact signed distance), quiescent flow, phase labels from the level-set
//! sign at element centroids, and the dimensionless numbers that pin the
//! dimensional parameter choices.

use crate::coupling::{initial_state, DtSpec, FrontDriver, SimState};
use crate::io::generate_rect_mesh;
use crate::levelset::{Phase, PhaseLabels};
use crate::mesh::Mesh;
use crate::ns::{BoundaryConditions, FlowState, FluidProperties, WallBc};
use crate::relay::{conform_initial, snap_front_levelset};
use crate::{Error, Result, Vec2};
use serde_json::Value;
use std::collections::HashMap;

pub const SCENARIO_NAMES: [&str; 8] = [
    "static_bubble",
    "sloshing",
    "dambreak",
    "rayleigh_taylor",
    "hysing",
    "grace",
    "bubble_merging",
    "spiral",
];

/// A fully assembled initial configuration.
pub struct Scenario {
    pub name: String,
    pub state: SimState,
    pub props: FluidProperties,
    pub bcs: BoundaryConditions,
    pub pin_node: Option<usize>,
    pub driver: FrontDriver,
    pub default_dt: DtSpec,
    pub default_t_end: f64,
    /// Relaxation rate toward rest positions.
    pub alpha: f64,
    /// Dimensionless numbers and derived scales for reporting.
    pub numbers: Vec<(String, f64)>,
}

/// Typed access to the flat override map with unknown-key rejection.
struct Overrides<'a> {
    map: &'a HashMap<String, Value>,
    used: std::cell::RefCell<Vec<String>>,
}

impl<'a> Overrides<'a> {
    fn new(map: &'a HashMap<String, Value>) -> Self {
        Overrides {
            map,
            used: std::cell::RefCell::new(Vec::new()),
        }
    }

    fn num(&self, key: &str, default: f64) -> Result<f64> {
        self.used.borrow_mut().push(key.to_string());
        match self.map.get(key) {
            None => Ok(default),
            Some(Value::Number(n)) => n
                .as_f64()
                .ok_or_else(|| Error::Config(format!("override {key:?} is not a finite number"))),
            Some(v) => Err(Error::Config(format!(
                "override {key:?} must be a number, got {v}"
            ))),
        }
    }

    fn usize_(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.num(key, default as f64)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::Config(format!(
                "override {key:?} must be a positive integer, got {v}"
            )));
        }
        Ok(v as usize)
    }

    fn string(&self, key: &str, default: &str) -> Result<String> {
        self.used.borrow_mut().push(key.to_string());
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(Error::Config(format!(
                "override {key:?} must be a string, got {v}"
            ))),
        }
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for key in self.map.keys() {
            if !used.iter().any(|u| u == key) {
                return Err(Error::Config(format!("unknown override key {key:?}")));
            }
        }
        Ok(())
    }
}

/// Exact signed distance to the circle |x - c| = r, positive inside.
pub fn circle_distance(p: Vec2, c: Vec2, r: f64) -> f64 {
    r - (p - c).norm()
}

/// Exact signed distance to the graph y = f(x) restricted to x in
/// [x_lo, x_hi], positive above the curve, together with the closest point
/// on the curve. The footpoint is found by dense sampling followed by
/// Newton polishing of (x - px) + (f(x) - py) f'(x) = 0 to residual <= 1e-12.
pub fn curve_closest<F, G, H>(
    p: Vec2,
    f: F,
    fp: G,
    fpp: H,
    x_lo: f64,
    x_hi: f64,
) -> (f64, Vec2)
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let n = 256;
    let mut best_x = x_lo;
    let mut best_d2 = f64::INFINITY;
    for i in 0..=n {
        let x = x_lo + (x_hi - x_lo) * i as f64 / n as f64;
        let d2 = (x - p.x).powi(2) + (f(x) - p.y).powi(2);
        if d2 < best_d2 {
            best_d2 = d2;
            best_x = x;
        }
    }
    let mut x = best_x;
    for _ in 0..100 {
        let fx = f(x);
        let g = (x - p.x) + (fx - p.y) * fp(x);
        let gp = 1.0 + fp(x) * fp(x) + (fx - p.y) * fpp(x);
        let step = g / gp;
        let mut xn = x - step;
        if xn < x_lo {
            xn = x_lo;
        }
        if xn > x_hi {
            xn = x_hi;
        }
        let moved = (xn - x).abs();
        x = xn;
        if moved <= 1e-15 * (x_hi - x_lo) {
            break;
        }
        if g.abs() <= 1e-13 {
            break;
        }
    }
    let d = ((x - p.x).powi(2) + (f(x) - p.y).powi(2)).sqrt();
    let signed = if p.y >= f(p.x.clamp(x_lo, x_hi)) { d } else { -d };
    (signed, Vec2::new(x, f(x)))
}

/// Signed distance only; see [`curve_closest`].
pub fn curve_distance<F, G, H>(p: Vec2, f: F, fp: G, fpp: H, x_lo: f64, x_hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    curve_closest(p, f, fp, fpp, x_lo, x_hi).0
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Assembles mesh + initial snapshot from an analytic level set.
/// The mesh is first deformed so the zero set lies on edges; front nodes are
/// then projected exactly onto the analytic interface (the conforming moves
/// land on chord zeros, an O(h^2) offset that would pollute the initial
/// curvature), and the level set is re-evaluated analytically at the final
/// positions.
fn assemble<PF>(
    mut mesh: Mesh,
    phi_fn: PF,
    project: Option<&dyn Fn(Vec2) -> Vec2>,
) -> Result<(SimState, Mesh)>
where
    PF: Fn(Vec2) -> f64,
{
    let phi_raw: Vec<f64> = mesh.positions().iter().map(|&p| phi_fn(p)).collect();
    conform_initial(&mut mesh, &phi_raw)?;
    if let Some(project) = project {
        for i in 0..mesh.node_count() {
            if !mesh.is_front(i) || mesh.is_corner(i) {
                continue;
            }
            let old = mesh.position(i);
            let mut target = project(old);
            if mesh.is_boundary(i) {
                // Keep wall nodes on their wall: project the target back
                // onto the line through the rest position along the wall.
                let nb = mesh.boundary_neighbors(i);
                let a = mesh.rest_position(nb[0]);
                let b = mesh.rest_position(nb[1]);
                let dir = (b - a) * (1.0 / (b - a).norm());
                target = a + dir * (target - a).dot(dir);
            }
            mesh.set_position(i, target);
            let inverted = mesh
                .triangles_of_node(i)
                .iter()
                .any(|&t| mesh.area(t) < 0.0);
            if inverted {
                mesh.set_position(i, old);
            }
        }
    }
    let mut phi0: Vec<f64> = mesh.positions().iter().map(|&p| phi_fn(p)).collect();
    snap_front_levelset(&mut phi0, mesh.front_flags());

    let label = mesh
        .triangles()
        .iter()
        .map(|tri| {
            let c = (mesh.position(tri[0]) + mesh.position(tri[1]) + mesh.position(tri[2])) / 3.0;
            if phi_fn(c) > 0.0 {
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
    let nn = mesh.node_count();
    let state = initial_state(mesh.clone(), FlowState::quiescent(nn), phi0, phases);
    Ok((state, mesh))
}

fn single_fluid_state(mesh: Mesh) -> SimState {
    let nn = mesh.node_count();
    let phases = PhaseLabels {
        label: vec![Phase::Omega1; mesh.triangle_count()],
        triple_zero: vec![false; mesh.triangle_count()],
    };
    initial_state(mesh, FlowState::quiescent(nn), vec![-1.0; nn], phases)
}
const _: fn(Mesh) -> SimState = single_fluid_state;

/// Laplace pressure of a static bubble, exterior-zero convention.
pub fn laplace_pressure(sigma: f64, r: f64) -> f64 {
    assert!(r > 0.0);
    sigma / r
}

/// Builds the named scenario with the given overrides. See the module
/// documentation for the catalog; every numeric parameter can be overridden
/// through the flat map.
pub fn init_scenario(name: &str, overrides: &HashMap<String, Value>) -> Result<Scenario> {
    let ov = Overrides::new(overrides);
    let scenario = match name {
        "static_bubble" => static_bubble(&ov)?,
        "sloshing" => sloshing(&ov)?,
        "dambreak" => dambreak(&ov)?,
        "rayleigh_taylor" => rayleigh_taylor(&ov)?,
        "hysing" => hysing(&ov)?,
        "grace" => grace(&ov)?,
        "bubble_merging" => bubble_merging(&ov)?,
        "spiral" => spiral(&ov)?,
        _ => return Err(Error::UnknownScenario(name.to_string())),
    };
    ov.finish()?;
    Ok(scenario)
}

fn static_bubble(ov: &Overrides) -> Result<Scenario> {
    let width = ov.num("width", 2.0)?;
    let height = ov.num("height", 2.0)?;
    let nx = ov.usize_("nx", 54)?;
    let ny = ov.usize_("ny", 54)?;
    let r = ov.num("radius", 0.5)?;
    let sigma = ov.num("sigma", 100.0)?;
    let rho = ov.num("rho", 1000.0)?;
    let mu = ov.num("mu", 5.0)?;
    let c = Vec2::new(width / 2.0, height / 2.0);

    let mesh = generate_rect_mesh(width, height, nx, ny)?;
    let project = move |p: Vec2| {
        let d = p - c;
        let n = d.norm();
        if n == 0.0 {
            p
        } else {
            c + d * (r / n)
        }
    };
    let (state, _) = assemble(mesh, |p| circle_distance(p, c, r), Some(&project))?;
    let props = FluidProperties {
        rho: [rho, rho],
        mu: [mu, mu],
        gravity: Vec2::ZERO,
        sigma,
    };
    let d = 2.0 * r;
    let t_char = d * mu / sigma;
    Ok(Scenario {
        name: "static_bubble".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere(),
        pin_node: Some(0),
        driver: FrontDriver::Flow,
        default_dt: DtSpec::Auto,
        default_t_end: 250.0 * t_char,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![
            ("t_char".into(), t_char),
            ("laplace_pressure".into(), laplace_pressure(sigma, r)),
        ],
    })
}

fn sloshing(ov: &Overrides) -> Result<Scenario> {
    let d = ov.num("d", 1.0)?;
    let nx = ov.usize_("nx", 54)?;
    let ny = ov.usize_("ny", 70)?;
    let eta0 = ov.num("eta0", 0.01)?;
    // Wave number: fundamental free-slip standing mode, one half-wave
    // across the tank.
    let k = ov.num("k", std::f64::consts::PI / d)?;
    let rho1 = ov.num("rho1", 1000.0)?;
    let rho2 = ov.num("rho2", 1.0)?;
    let nu = ov.num("nu", 0.01)?;
    let g = ov.num("g", 9.81)?;

    let eta = move |x: f64| d + eta0 * (k * (d / 2.0 - x)).sin();
    let etap = move |x: f64| -k * eta0 * (k * (d / 2.0 - x)).cos();
    let etapp = move |x: f64| -k * k * eta0 * (k * (d / 2.0 - x)).sin();

    let mesh = generate_rect_mesh(d, 1.3 * d, nx, ny)?;
    let project = move |p: Vec2| curve_closest(p, eta, etap, etapp, 0.0, d).1;
    let (state, _) = assemble(
        mesh,
        |p| curve_distance(p, eta, etap, etapp, 0.0, d),
        Some(&project),
    )?;
    let props = FluidProperties {
        rho: [rho1, rho2],
        mu: [rho1 * nu, rho2 * nu],
        gravity: Vec2::new(0.0, -g),
        sigma: 0.0,
    };
    let kappa = g / (nu * nu * k * k * k);
    let omega = (g * k).sqrt();
    Ok(Scenario {
        name: "sloshing".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere(),
        pin_node: Some(0),
        driver: FrontDriver::Flow,
        default_dt: DtSpec::Fixed(4e-4),
        default_t_end: 2.0 * std::f64::consts::TAU / omega,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![
            ("kappa".into(), kappa),
            ("k".into(), k),
            ("nu".into(), nu),
            ("omega_deep".into(), omega),
        ],
    })
}

fn dambreak(ov: &Overrides) -> Result<Scenario> {
    let width = ov.num("width", 1.4)?;
    let height = ov.num("height", 1.1)?;
    let nx = ov.usize_("nx", 64)?;
    let ny = ov.usize_("ny", 50)?;
    let col_h = ov.num("column_height", 0.4)?;
    let col_w = ov.num("column_width", 0.4)?;
    let rho1 = ov.num("rho1", 1000.0)?;
    let rho0 = ov.num("rho0", 10.0)?;
    let nu = ov.num("nu", 1e-3)?;
    let g = ov.num("g", 9.81)?;

    // Water column in the lower-left corner (Omega1); air elsewhere
    // (Omega2). Signed distance to the L-shaped column boundary, positive
    // outside the column.
    let corner_w = col_w;
    let corner_h = col_h;
    let phi = move |p: Vec2| {
        let a = Vec2::new(corner_w, 0.0);
        let b = Vec2::new(corner_w, corner_h);
        let c = Vec2::new(0.0, corner_h);
        let d = point_segment_distance(p, a, b).min(point_segment_distance(p, b, c));
        let inside = p.x < corner_w && p.y < corner_h;
        if inside {
            -d
        } else {
            d
        }
    };

    let project = move |p: Vec2| {
        // Closest point on the two-segment column outline.
        let a = Vec2::new(corner_w, 0.0);
        let b = Vec2::new(corner_w, corner_h);
        let c = Vec2::new(0.0, corner_h);
        let proj_seg = |p: Vec2, a: Vec2, b: Vec2| {
            let ab = b - a;
            let s = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            a + ab * s
        };
        let p1 = proj_seg(p, a, b);
        let p2 = proj_seg(p, b, c);
        if p.dist(p1) <= p.dist(p2) {
            p1
        } else {
            p2
        }
    };
    let mesh = generate_rect_mesh(width, height, nx, ny)?;
    let (state, _) = assemble(mesh, phi, Some(&project))?;
    let props = FluidProperties {
        rho: [rho1, rho0],
        mu: [rho1 * nu, rho0 * nu],
        gravity: Vec2::new(0.0, -g),
        sigma: 0.0,
    };
    let t_ref = (col_h / g).sqrt();
    Ok(Scenario {
        name: "dambreak".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere(),
        pin_node: Some(0),
        driver: FrontDriver::Flow,
        default_dt: DtSpec::Fixed(2e-3),
        default_t_end: 22.5 * t_ref,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![("t_ref".into(), t_ref)],
    })
}

fn rayleigh_taylor(ov: &Overrides) -> Result<Scenario> {
    let w = ov.num("width", 1.0)?;
    let height = ov.num("height", 4.0)?;
    let nx = ov.usize_("nx", 45)?;
    let ny = ov.usize_("ny", 180)?;
    let re = ov.num("re", 256.0)?;
    let rho1 = ov.num("rho1", 3.0)?; // heavy, on top
    let rho2 = ov.num("rho2", 1.0)?; // light, below
    let amp = ov.num("amplitude", 0.05)?;
    let y0 = ov.num("interface_y", 2.0)?;
    // Gravity chosen so the analytic (viscous) growth rate of the k = 2 pi
    // mode is alpha_hat; with nu = sqrt(W g) W / Re both phases share one
    // kinematic viscosity and Re round-trips exactly.
    let alpha_hat = ov.num("alpha_hat", 9.3)?;
    let k = 2.0 * std::f64::consts::PI / w;
    let at = (rho1 - rho2) / (rho1 + rho2);
    let coeff = (at * k + k.powi(4) / (re * re)).sqrt() - k * k / re;
    let g = (alpha_hat / coeff).powi(2) / w.powi(3).sqrt().powi(2); // w = 1 default
    let nu = (w * g).sqrt() * w / re;

    let f = move |x: f64| y0 + amp * (k * x).cos();
    let fp = move |x: f64| -amp * k * (k * x).sin();
    let fpp = move |x: f64| -amp * k * k * (k * x).cos();

    let mesh = generate_rect_mesh(w, height, nx, ny)?;
    let project = move |p: Vec2| curve_closest(p, f, fp, fpp, 0.0, w).1;
    // Light phase below the curve: positive below.
    let (state, _) = assemble(
        mesh,
        |p| -curve_distance(p, f, fp, fpp, 0.0, w),
        Some(&project),
    )?;
    let props = FluidProperties {
        rho: [rho1, rho2],
        mu: [rho1 * nu, rho2 * nu],
        gravity: Vec2::new(0.0, -g),
        sigma: 0.0,
    };
    Ok(Scenario {
        name: "rayleigh_taylor".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere(),
        pin_node: Some(0),
        driver: FrontDriver::Flow,
        default_dt: DtSpec::Fixed(1e-3),
        default_t_end: 0.5,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![
            ("At".into(), at),
            ("Re".into(), (w * g).sqrt() * w / nu),
            ("g".into(), g),
            ("nu".into(), nu),
            ("alpha_hat_target".into(), alpha_hat),
        ],
    })
}

fn hysing(ov: &Overrides) -> Result<Scenario> {
    let nx = ov.usize_("nx", 40)?;
    let ny = ov.usize_("ny", 80)?;
    let r = ov.num("radius", 0.25)?;
    let rho1 = ov.num("rho1", 1000.0)?;
    let rho2 = ov.num("rho2", 100.0)?;
    let mu1 = ov.num("mu1", 10.0)?;
    let mu2 = ov.num("mu2", 1.0)?;
    let g = ov.num("g", 0.98)?;
    let sigma = ov.num("sigma", 24.5)?;
    let c = Vec2::new(0.5, 0.5);

    let mesh = generate_rect_mesh(1.0, 2.0, nx, ny)?;
    let project = move |p: Vec2| {
        let d = p - c;
        let n = d.norm();
        if n == 0.0 {
            p
        } else {
            c + d * (r / n)
        }
    };
    let (state, _) = assemble(mesh, |p| circle_distance(p, c, r), Some(&project))?;
    let props = FluidProperties {
        rho: [rho1, rho2],
        mu: [mu1, mu2],
        gravity: Vec2::new(0.0, -g),
        sigma,
    };
    let d = 2.0 * r;
    let re = rho1 * g.sqrt() * d.powf(1.5) / mu1;
    let bo = rho1 * g * d * d / sigma;
    Ok(Scenario {
        name: "hysing".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere()
            .with_tag("top", WallBc::NoSlip)
            .with_tag("bottom", WallBc::NoSlip),
        pin_node: Some(0),
        driver: FrontDriver::Flow,
        default_dt: DtSpec::Auto,
        default_t_end: 3.0,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![("Re".into(), re), ("Bo".into(), bo)],
    })
}

fn grace(ov: &Overrides) -> Result<Scenario> {
    let case = ov.string("case", "a")?;
    let (re, bo) = match case.as_str() {
        "a" => (10.0, 10.0),
        "b" => (10.0, 50.0),
        "c" => (100.0, 50.0),
        other => {
            return Err(Error::Config(format!(
                "grace case must be \"a\", \"b\" or \"c\", got {other:?}"
            )))
        }
    };
    let re = ov.num("re", re)?;
    let bo = ov.num("bo", bo)?;
    let nx = ov.usize_("nx", 48)?;
    let ny = ov.usize_("ny", 96)?;
    let rho1 = ov.num("rho1", 1000.0)?;
    let g = ov.num("g", 9.81)?;
    let d: f64 = 1.0; // bubble diameter
    let r = d / 2.0;
    let mu1 = rho1 * g.sqrt() * d.powf(1.5) / re;
    let sigma = rho1 * g * d * d / bo;
    let c = Vec2::new(3.0, 1.5);

    let mesh = generate_rect_mesh(6.0, 12.0, nx, ny)?;
    let project = move |p: Vec2| {
        let d = p - c;
        let n = d.norm();
        if n == 0.0 {
            p
        } else {
            c + d * (r / n)
        }
    };
    let (state, _) = assemble(mesh, |p| circle_distance(p, c, r), Some(&project))?;
    let props = FluidProperties {
        rho: [rho1, rho1 / 1000.0],
        mu: [mu1, mu1 / 100.0],
        gravity: Vec2::new(0.0, -g),
        sigma,
    };
    Ok(Scenario {
        name: "grace".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere(),
        pin_node: Some(0),
        driver: FrontDriver::Flow,
        default_dt: DtSpec::Auto,
        default_t_end: 6.0,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![("Re".into(), re), ("Bo".into(), bo), ("sigma".into(), sigma)],
    })
}

fn bubble_merging(ov: &Overrides) -> Result<Scenario> {
    let nx = ov.usize_("nx", 40)?;
    let ny = ov.usize_("ny", 80)?;
    let rho1 = ov.num("rho1", 1000.0)?;
    let g = ov.num("g", 9.81)?;
    let re = ov.num("re", 104.0)?;
    let bo = ov.num("bo", 313.0)?;
    let surface_y = ov.num("surface_y", 4.0)?;
    // Re and Bo are defined with the diameter of the larger bubble.
    let d: f64 = 1.0;
    let mu1 = rho1 * g.sqrt() * d.powf(1.5) / re;
    let sigma = rho1 * g * d * d / bo;
    let b1 = (Vec2::new(1.5, 1.0), 0.4);
    let b2 = (Vec2::new(1.5, 2.0), 0.5);

    // Light phase: both bubbles plus everything above the free surface.
    let phi = move |p: Vec2| {
        let d1 = circle_distance(p, b1.0, b1.1);
        let d2 = circle_distance(p, b2.0, b2.1);
        let ds = p.y - surface_y;
        d1.max(d2).max(ds)
    };

    let project = move |p: Vec2| {
        // Project onto whichever light-phase primitive is nearest in level
        // set (the bubbles and the free surface are disjoint).
        let d1 = circle_distance(p, b1.0, b1.1);
        let d2 = circle_distance(p, b2.0, b2.1);
        let ds = p.y - surface_y;
        if d1 >= d2 && d1 >= ds {
            let d = p - b1.0;
            b1.0 + d * (b1.1 / d.norm())
        } else if d2 >= ds {
            let d = p - b2.0;
            b2.0 + d * (b2.1 / d.norm())
        } else {
            Vec2::new(p.x, surface_y)
        }
    };
    let mesh = generate_rect_mesh(3.0, 6.0, nx, ny)?;
    let (state, _) = assemble(mesh, phi, Some(&project))?;
    let props = FluidProperties {
        rho: [rho1, rho1 / 1000.0],
        mu: [mu1, mu1 / 2.0],
        gravity: Vec2::new(0.0, -g),
        sigma,
    };
    Ok(Scenario {
        name: "bubble_merging".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere(),
        pin_node: Some(0),
        driver: FrontDriver::Flow,
        default_dt: DtSpec::Auto,
        default_t_end: 3.85,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![("Re".into(), re), ("Bo".into(), bo), ("sigma".into(), sigma)],
    })
}

fn spiral(ov: &Overrides) -> Result<Scenario> {
    let n = ov.usize_("nx", 66)?;
    let ny = ov.usize_("ny", n)?;
    let r = ov.num("radius", 0.15)?;
    let r_max = ov.num("spiral_radius", 0.42)?;
    let turns = ov.num("turns", 2.0)?;
    let t_end = ov.num("t_end", 1.0)?;

    let center = Vec2::new(0.5, 0.5);
    let path = move |t: f64| -> Vec2 {
        // Forward along the spiral for the first half, retrace for the
        // second; s in [0, 1].
        let s = if t <= t_end / 2.0 {
            2.0 * t / t_end
        } else {
            2.0 * (1.0 - t / t_end)
        };
        let theta = turns * std::f64::consts::TAU * s;
        center + Vec2::new(theta.cos(), theta.sin()) * (r_max * s)
    };
    let phi_of = move |p: Vec2, t: f64| circle_distance(p, path(t), r);

    let c0 = path(0.0);
    let project = move |p: Vec2| {
        let d = p - c0;
        let n = d.norm();
        if n == 0.0 {
            p
        } else {
            c0 + d * (r / n)
        }
    };
    let mesh = generate_rect_mesh(1.0, 1.0, n, ny)?;
    let (state, _) = assemble(mesh, |p| phi_of(p, 0.0), Some(&project))?;
    let props = FluidProperties {
        rho: [1.0, 1.0],
        mu: [1.0, 1.0],
        gravity: Vec2::ZERO,
        sigma: 0.0,
    };
    Ok(Scenario {
        name: "spiral".into(),
        state,
        props,
        bcs: BoundaryConditions::free_slip_everywhere(),
        pin_node: None,
        driver: FrontDriver::PrescribedLevelSet(Box::new(move |p, t| phi_of(p, t))),
        default_dt: DtSpec::Fixed(5e-4),
        default_t_end: t_end,
        alpha: crate::coupling::DEFAULT_ALPHA,
        numbers: vec![("circle_radius".into(), r), ("spiral_radius".into(), r_max)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_overrides() -> HashMap<String, Value> {
        HashMap::new()
    }

    #[test]
    fn catalog_builds() {
        for name in SCENARIO_NAMES {
            let sc = init_scenario(name, &no_overrides()).unwrap();
            assert_eq!(sc.name, name);
            assert!(sc.state.mesh.node_count() > 100, "{name}");
            // Every scenario except the single-fluid ones has a front.
            let has_front = sc.state.mesh.front_flags().iter().any(|&f| f);
            assert!(has_front, "{name} should start with an interface");
        }
    }

    #[test]
    fn unknown_scenario_and_keys() {
        assert!(matches!(
            init_scenario("nope", &no_overrides()),
            Err(Error::UnknownScenario(_))
        ));
        let mut m = HashMap::new();
        m.insert("bogus_key".to_string(), Value::from(1.0));
        assert!(init_scenario("hysing", &m).is_err());
    }

    #[test]
    fn static_bubble_parameters() {
        let sc = init_scenario("static_bubble", &no_overrides()).unwrap();
        assert_eq!(sc.props.sigma, 100.0);
        assert_eq!(sc.props.gravity, Vec2::ZERO);
        let lp = sc
            .numbers
            .iter()
            .find(|(k, _)| k == "laplace_pressure")
            .unwrap()
            .1;
        assert_eq!(lp, 200.0);
    }

    #[test]
    fn laplace_pressure_values() {
        assert_eq!(laplace_pressure(100.0, 0.5), 200.0);
        assert_eq!(laplace_pressure(0.0, 0.5), 0.0);
        assert!((laplace_pressure(24.5, 0.25) - 98.0).abs() < 1e-12);
    }

    #[test]
    fn hysing_dimensionless_round_trip() {
        let sc = init_scenario("hysing", &no_overrides()).unwrap();
        let re = sc.numbers.iter().find(|(k, _)| k == "Re").unwrap().1;
        let bo = sc.numbers.iter().find(|(k, _)| k == "Bo").unwrap().1;
        assert!((re - 35.0).abs() < 1e-12);
        assert!((bo - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_taylor_round_trip() {
        let sc = init_scenario("rayleigh_taylor", &no_overrides()).unwrap();
        let at = sc.numbers.iter().find(|(k, _)| k == "At").unwrap().1;
        let re = sc.numbers.iter().find(|(k, _)| k == "Re").unwrap().1;
        assert!((at - 0.5).abs() < 1e-12);
        assert!((re - 256.0).abs() < 1e-10, "Re = {re}");
        // Interface initialized at y = 2 +- 0.05.
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for i in 0..sc.state.mesh.node_count() {
            if sc.state.mesh.is_front(i) {
                let y = sc.state.mesh.position(i).y;
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
        assert!((y_max - 2.05).abs() < 0.02, "y_max = {y_max}");
        assert!((y_min - 1.95).abs() < 0.02, "y_min = {y_min}");
    }

    #[test]
    fn curve_distance_is_exact() {
        // Compare against brute-force dense sampling for the RT cosine.
        let f = |x: f64| 2.0 + 0.05 * (2.0 * std::f64::consts::PI * x).cos();
        let fp = |x: f64| -0.1 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).sin();
        let fpp =
            |x: f64| -0.2 * std::f64::consts::PI.powi(2) * (2.0 * std::f64::consts::PI * x).cos();
        for &(px, py) in &[(0.3, 2.2), (0.77, 1.6), (0.01, 2.049), (0.5, 1.951)] {
            let p = Vec2::new(px, py);
            let d = curve_distance(p, f, fp, fpp, 0.0, 1.0);
            let mut brute = f64::INFINITY;
            let n = 2_000_000;
            for i in 0..=n {
                let x = i as f64 / n as f64;
                let dd = ((x - px).powi(2) + (f(x) - py).powi(2)).sqrt();
                brute = brute.min(dd);
            }
            assert!(
                (d.abs() - brute).abs() < 1e-9,
                "point {p:?}: {} vs brute {brute}",
                d.abs()
            );
            // Sign: above the curve is positive.
            assert_eq!(d > 0.0, py > f(px));
        }
    }

    #[test]
    fn scenario_phi_is_signed_distance_on_front_nodes() {
        // After the conforming relay, front nodes carry exactly zero and
        // neighbors carry values bounded by the local mesh size.
        let sc = init_scenario("hysing", &no_overrides()).unwrap();
        let mesh = &sc.state.mesh;
        let h = 1.0 / 40.0;
        for i in 0..mesh.node_count() {
            if mesh.is_front(i) {
                assert_eq!(sc.state.phi[i], 0.0);
            } else {
                assert!(sc.state.phi[i].abs() > 0.0);
            }
            assert!(sc.state.phi[i].abs() <= 2.3 + h);
        }
    }

    #[test]
    fn bubble_merging_initial_mass() {
        let sc = init_scenario("bubble_merging", &no_overrides()).unwrap();
        // Omega2 = two bubbles + the layer above the free surface:
        // pi (0.4^2 + 0.5^2) + 3 * (6 - 4), within mesh resolution.
        let expect = std::f64::consts::PI * (0.16 + 0.25) + 3.0 * 2.0;
        let m2 = sc.state.diagnostics.mass_omega2;
        assert!(
            (m2 - expect).abs() / expect < 0.02,
            "mass {m2} vs {expect}"
        );
    }
}
