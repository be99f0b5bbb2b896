//! Two-phase incompressible Navier-Stokes on a fixed-connectivity triangle
//! mesh that deforms to conform to the fluid-fluid interface at every step.
//!
//! The mesh never changes topology: interface motion is realized by sliding
//! vertices along mesh edges onto the zero level set ("front relaying"),
//! letting elements degenerate to zero measure where needed. Surface tension
//! is imposed as a sharp nodal pressure jump through a modified pressure
//! gradient, and the level set is kept a signed distance by fast marching
//! from the front nodes.
//!
//! Module map:
//! - [`mesh`]: fixed-connectivity triangle mesh, geometry, degeneracy classes
//! - [`fem`]: P1 kernels, area clamping, sparse patterns and assembly
//! - [`linsolve`]: direct sparse LU with factor reuse (GMRES acceleration)
//! - [`levelset`]: Crank-Nicolson SUPG advection and phase classification
//! - [`fastmarch`]: signed-distance reconstruction on the triangulation
//! - [`relay`]: the front-relaying mesh deformation and rest relaxation
//! - [`front`]: front-chain extraction, circumcircle curvature, capillary dt
//! - [`ns`]: one implicit Euler step of stabilized Navier-Stokes
//! - [`coupling`]: the sequential per-step pipeline and the run loop
//! - [`scenario`]: benchmark initial conditions and analytic oracles
//! - [`invlap`]: numerical inverse Laplace transforms (Talbot, de Hoog)
//! - [`analysis`]: benchmark quantity extraction and fits
//! - [`config`], [`io`]: run configuration, mesh/VTK/CSV formats

pub mod analysis;
pub mod config;
pub mod coupling;
pub mod fastmarch;
pub mod fem;
pub mod front;
pub mod invlap;
pub mod io;
pub mod levelset;
pub mod linsolve;
pub mod mesh;
pub mod ns;
pub mod relay;
pub mod scenario;
pub mod vec2;

pub use vec2::Vec2;

/// Errors produced by mesh construction and the solver pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("non-manifold edge ({0}, {1}) shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("triangle {0} is inverted at rest (negative signed area)")]
    InvertedTriangle(usize),
    #[error("dangling boundary edge ({0}, {1}): not an edge of any triangle")]
    DanglingBoundaryEdge(usize, usize),
    #[error("element {0} produced a non-finite value during assembly")]
    NonFiniteElement(usize),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("Newton did not converge after {iterations} iterations (residuals: {history:?})")]
    NewtonDiverged { iterations: usize, history: Vec<f64> },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("conformity violated: edge ({0}, {1}) joins strictly opposite level-set signs")]
    Conformity(usize, usize),
    #[error("boundary condition references non-boundary node {0}")]
    BcOffBoundary(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown scenario \"{0}\"")]
    UnknownScenario(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("inverse Laplace transform did not converge: {0}")]
    InverseLaplace(String),
}

impl Error {
    /// Tags an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
