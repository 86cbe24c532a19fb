//! Points, rotations, quadrature and sampling on `S^d` and `SO(d+1)`.

mod point;
mod quadrature;
mod rotation;
mod sampling;

pub use point::SpherePoint;
pub(crate) use quadrature::EulerGrid;
pub use quadrature::{
    fibonacci_grid, gauss_legendre, product_quadrature, so2_quadrature, so3_axis_angle_quadrature,
    so3_quadrature, sphere_area, RotationQuadrature, SphereQuadrature,
};
pub(crate) use rotation::{euler_matrix3, gen_r};
pub use rotation::{Rotation, RotationParams};
pub use sampling::{
    derive_seed, sample_error, sample_haar_so3, sample_vmf_sphere, InverseCdfTable,
};
