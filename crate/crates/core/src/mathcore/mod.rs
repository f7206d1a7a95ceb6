//! Special functions and exact integrals on the sphere.
//!
//! Double factorials and powers of `2π` overflow `f64` long before the
//! dimensions of interest (`(2d-1)!!` at `d = 32` is ~1e42, at `d = 128`
//! it is past `f64::MAX`), while every ratio that actually appears in the
//! fidelity formulas is `O(1)`. Everything here is therefore combined in
//! log space and exponentiated only after cancellation.

mod integrals;
mod logvalue;
mod quadrature;

pub use integrals::{
    kernel_integrand, ln_sphere_surface, poisson_kernel_integral, sin_power_integral,
    sin_power_integrand, sphere_surface, KernelVariant,
};
pub use logvalue::{
    double_factorial_log, ln_double_factorial, ln_double_factorial_ratio, LogValue,
};
pub use quadrature::{adaptive_quadrature, QuadResult, Quadrature};

pub(crate) use integrals::{concentrated_breakpoints, ln_kernel_base, ln_sin_power};
pub(crate) use quadrature::gk21_value;
