use std::f64::consts::PI;

use super::logvalue::{ln_double_factorial, ln_double_factorial_ratio};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `∫₀^π sin^k(θ) dθ`: `π (k-1)!!/k!!` for even `k`, `2 (k-1)!!/k!!` for odd.
pub fn sin_power_integral(k: u32) -> f64 {
    let lead = if k.is_multiple_of(2) { PI } else { 2.0 };
    lead * ln_double_factorial_ratio(u64::from(k)).exp()
}

/// `sin^k(θ)` with `sin^0 ≡ 1`, the raw integrand behind [`sin_power_integral`].
pub fn sin_power_integrand(k: u32, theta: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        theta.sin().powi(k as i32)
    }
}

/// `ln |S^D|`, the log surface measure of the unit sphere in `R^{D+1}`.
///
/// `D = 0` gives `ln 2` (two points).
pub fn ln_sphere_surface(dim: u32) -> f64 {
    let half = i64::from(dim / 2);
    if dim.is_multiple_of(2) {
        // |S^{2d}| = 2 (2π)^d / (2d-1)!!
        std::f64::consts::LN_2 + half as f64 * LN_2PI - ln_double_factorial(2 * half - 1)
    } else {
        // |S^{2d-1}| = (2π)^d / (2d-2)!!
        let d = half + 1;
        d as f64 * LN_2PI - ln_double_factorial(2 * d - 2)
    }
}

/// `|S^D|`, the surface measure of the unit sphere in `R^{D+1}`.
pub fn sphere_surface(dim: u32) -> f64 {
    ln_sphere_surface(dim).exp()
}

/// The three Poisson-kernel-type integrals over `θ ∈ [0, π]` with kernel
/// `K(θ) = 1 + σ² - 2σ cos θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KernelVariant {
    /// `sin^{2d-2}(θ) / K^d`
    Sin2dMinus2,
    /// `cos(θ) sin^{2d-2}(θ) / K^d`
    CosSin2dMinus2,
    /// `sin^{2d}(θ) / K^d`
    Sin2d,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 3] = [
        KernelVariant::Sin2dMinus2,
        KernelVariant::CosSin2dMinus2,
        KernelVariant::Sin2d,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelVariant::Sin2dMinus2 => "SIN_2D_MINUS_2",
            KernelVariant::CosSin2dMinus2 => "COS_SIN_2D_MINUS_2",
            KernelVariant::Sin2d => "SIN_2D",
        }
    }
}

fn check_kernel_args(d: u32, sigma: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("kernel half-dimension d must be at least 1"));
    }
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::invalid(format!(
            "kernel parameter sigma = {sigma} outside [0, 1)"
        )));
    }
    Ok(())
}

/// `ln(1 + σ² - 2σ cos θ)`, written as `(1-σ)² + 4σ sin²(θ/2)` so it stays
/// accurate near `θ = 0` when `σ → 1`.
pub(crate) fn ln_kernel_base(sigma: f64, theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    ((1.0 - sigma) * (1.0 - sigma) + 4.0 * sigma * s * s).ln()
}

/// `k · ln sin θ` with `sin^0 ≡ 1`.
pub(crate) fn ln_sin_power(k: u32, theta: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        f64::from(k) * theta.sin().abs().ln()
    }
}

/// Raw integrand of `variant`, evaluated in log space.
pub fn kernel_integrand(d: u32, sigma: f64, variant: KernelVariant, theta: f64) -> f64 {
    let power = match variant {
        KernelVariant::Sin2d => 2 * d,
        _ => 2 * d - 2,
    };
    let v = (ln_sin_power(power, theta) - f64::from(d) * ln_kernel_base(sigma, theta)).exp();
    match variant {
        KernelVariant::CosSin2dMinus2 => theta.cos() * v,
        _ => v,
    }
}

/// Closed form of `∫₀^π kernel_integrand(d, σ, variant, θ) dθ`.
///
/// * `Sin2dMinus2`: `(2d-3)!!/(2d-2)!! · π/(1-σ²)`
/// * `CosSin2dMinus2`: `(2d-3)!!/(2d-2)!! · σπ/(1-σ²)`
/// * `Sin2d`: `(2d-1)!!/(2d)!! · π`, independent of `σ`
pub fn poisson_kernel_integral(d: u32, sigma: f64, variant: KernelVariant) -> Result<f64> {
    check_kernel_args(d, sigma)?;
    let d = u64::from(d);
    let value = match variant {
        KernelVariant::Sin2dMinus2 => {
            ln_double_factorial_ratio(2 * d - 2).exp() * PI / (1.0 - sigma * sigma)
        }
        KernelVariant::CosSin2dMinus2 => {
            ln_double_factorial_ratio(2 * d - 2).exp() * sigma * PI / (1.0 - sigma * sigma)
        }
        KernelVariant::Sin2d => ln_double_factorial_ratio(2 * d).exp() * PI,
    };
    Ok(value)
}

/// Geometric breakpoints `w, 2w, 4w, …` below `π`, concentrating the
/// initial partition where a kernel of width `w` peaks at `θ = 0`.
pub(crate) fn concentrated_breakpoints(width: f64) -> Vec<f64> {
    let mut points = Vec::new();
    let mut p = width.max(1e-12);
    while p < PI {
        points.push(p);
        p *= 2.0;
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::{adaptive_quadrature, Quadrature};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn sin_power_examples() {
        assert!(rel(sin_power_integral(0), PI) < 1e-15);
        assert_eq!(sin_power_integral(1), 2.0);
        assert!(rel(sin_power_integral(4), 3.0 * PI / 8.0) < 1e-15);
        let q = adaptive_quadrature(|t| sin_power_integrand(4, t), 0.0, PI, 1e-13).unwrap();
        assert!(rel(sin_power_integral(4), q) < 1e-12);
    }

    #[test]
    fn sin_power_62_matches_quadrature() {
        let q = adaptive_quadrature(|t| sin_power_integrand(62, t), 0.0, PI, 1e-13).unwrap();
        assert!(rel(sin_power_integral(62), q) < 1e-10);
    }

    #[test]
    fn sphere_surface_examples() {
        assert!(rel(sphere_surface(1), 2.0 * PI) < 1e-15);
        assert!(rel(sphere_surface(2), 4.0 * PI) < 1e-15);
        assert!(rel(sphere_surface(3), 2.0 * PI * PI) < 1e-15);
        assert!(rel(sphere_surface(0), 2.0) < 1e-15);
        // |S^3| = 2π · ∫sin · ∫sin²
        let product = 2.0 * PI * sin_power_integral(1) * sin_power_integral(2);
        assert!(rel(sphere_surface(3), product) < 1e-12);
    }

    #[test]
    fn kernel_examples() {
        let v = poisson_kernel_integral(1, 0.0, KernelVariant::Sin2dMinus2).unwrap();
        assert!(rel(v, PI) < 1e-15);
        let v = poisson_kernel_integral(2, 0.5, KernelVariant::Sin2d).unwrap();
        assert!(rel(v, 3.0 * PI / 8.0) < 1e-15);
        let v = poisson_kernel_integral(2, 0.3, KernelVariant::CosSin2dMinus2).unwrap();
        assert!(rel(v, 0.5 * 0.3 * PI / 0.91) < 1e-15);
        assert!((v - 0.517_845).abs() < 1e-6);
        let q = adaptive_quadrature(
            |t| kernel_integrand(2, 0.3, KernelVariant::CosSin2dMinus2, t),
            0.0,
            PI,
            1e-13,
        )
        .unwrap();
        assert!(rel(v, q) < 1e-10);
    }

    #[test]
    fn kernel_d32_sigma09_sin2d_matches_quadrature() {
        let v = poisson_kernel_integral(32, 0.9, KernelVariant::Sin2d).unwrap();
        let q = Quadrature::new(1e-13)
            .breakpoints(concentrated_breakpoints(0.1))
            .integrate(
                |t| kernel_integrand(32, 0.9, KernelVariant::Sin2d, t),
                0.0,
                PI,
            )
            .unwrap()
            .value;
        assert!(rel(v, q) < 1e-9);
    }

    #[test]
    fn kernel_rejects_singular_sigma() {
        assert!(poisson_kernel_integral(3, 1.0, KernelVariant::Sin2d).is_err());
        assert!(poisson_kernel_integral(3, -0.1, KernelVariant::Sin2d).is_err());
        assert!(poisson_kernel_integral(0, 0.1, KernelVariant::Sin2d).is_err());
    }
}
