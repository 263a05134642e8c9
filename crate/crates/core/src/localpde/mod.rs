//! Ornstein–Uhlenbeck PDEs on planar symmetric domains.
//!
//! `𝓛u = Δu − x·∇u` is discretised in divergence form on a lattice masked by a
//! body, Dirichlet data are imposed at the first exterior nodes, and the
//! resulting solutions feed the functional `∫‖∇²u‖²_HS + |∇u|² dγ_K`.

pub mod functional;
pub mod grid;
pub mod radial;
pub mod slab;
pub mod solve;

pub use functional::{
    convergence_ladder, field_derivatives, g_functional, kl_functional, BrascampLiebDiagnostic,
    Decomposition, FunctionalReport, Ladder, LadderLevel, NodeDerivatives,
};
pub use grid::{ou_apply, ou_apply_field, GridField, MaskedGrid, NodeClass};
pub use radial::{radial_derivative, radial_functional, radial_solution, RadialProfile};
pub use slab::{kl_lower_bound, slab_experiment, slab_study, SlabReport, SlabStudy, MIN_NODES_ACROSS};
pub use solve::{solve_dirichlet, solve_on_grid, BoundaryData, PdeSolution, DEFAULT_TOLERANCE};
