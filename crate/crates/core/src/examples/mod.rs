//! Worked constrained systems, each with a closed form and a route through the generic pipeline.

pub mod flpr;
pub mod noncompact;
pub mod ppkernel;
pub mod second_class;
pub mod sphere;
pub mod su2;

pub use flpr::{flpr_closed, flpr_leakage, flpr_numeric, FlprLabel, FlprParams, FlprRoute, L3Sectors};
pub use noncompact::noncompact_u1_analogue_projector;
pub use ppkernel::{compressed_momentum_projector, limit_kernel, projected_p_exact, projected_p_family, projected_p_leading};
pub use second_class::{path_action, second_class_full, SecondClassSystem};
pub use sphere::{
    e2_reduced_kernel, hypersphere_second_class_kernel, sphere_projected_kernel, surface_constant_profile, Fiducial,
    HypersphereParams, NodalQuadrature, SphereKernelParams, Zeta,
};
pub use su2::{su2_generators, su2_projected_kernel, su2_projector, Su2Generators};
