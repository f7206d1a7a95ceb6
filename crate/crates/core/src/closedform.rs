//! Closed-form fidelities of the raw state `Ψ`, the uncoded state `Ψ0`, and
//! the code-corrected state `Φ̃`, with the bounds relating them to the
//! error variances.
//!
//! Every function returns `F²`; take the square root only for display.

use serde::Serialize;

use crate::distributions::{variance_split, CodeParams, DensityKind, IsotropicDensity};
use crate::error::{Error, Result};
use crate::mathcore::{ln_double_factorial, LogValue};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Which denominator to use in the corrected-state upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundVariant {
    /// `1 - (d - d″)/(2d - 1) · v_c`, the bound that follows from the
    /// derivation's final step.
    #[default]
    Proof,
    /// `1 - (d - d″)/(2d′ - 1) · v_c`, as originally printed. Violated by the
    /// normal family; kept to document the erratum.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub params: CodeParams,
    pub n_steps: u32,
    pub sigma_c: Option<f64>,
    pub sigma_u: Option<f64>,
    pub v_c: f64,
    pub v_u: f64,
    /// `F²(Ψ)`: encoded state after the error, no correction.
    pub f2_psi: f64,
    /// `F²(Φ̃)`: encoded state after syndrome measurement and correction.
    pub f2_phi_tilde: f64,
    /// `F²(Ψ0)`: unencoded logical state after the error.
    pub f2_psi0: f64,
    pub lb_psi0: f64,
    /// Upper bound on `F²(Φ̃)`, [`BoundVariant::Proof`].
    pub ub_phi_tilde: f64,
    pub ub_phi_tilde_printed: f64,
    pub cond18: bool,
    pub cond18_value: f64,
}

impl FidelityReport {
    /// `F(Ψ0) ≥ F(Φ̃) ≥ F(Ψ)` up to `tol`.
    pub fn ordering_holds(&self, tol: f64) -> bool {
        self.f2_psi0 + tol >= self.f2_phi_tilde && self.f2_phi_tilde + tol >= self.f2_psi
    }
}

fn check_dim(density: &IsotropicDensity, d: usize, what: &str) -> Result<()> {
    if density.d() as usize != d {
        return Err(Error::invalid(format!(
            "{what}: density half-dimension {} does not match {d}",
            density.d()
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::invalid(format!("sigma = {sigma} outside [0, 1)")))
    }
}

fn check_variance(v: f64) -> Result<()> {
    if (0.0..=4.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("variance {v} outside [0, 4]")))
    }
}

/// `1 - 4 (2π)^{d-1}/(2d-1)!! · weight · Ē[sin^{2d}]`, combined in log space.
fn one_minus_weighted_bar(d: usize, weight: usize, bar: LogValue) -> f64 {
    if weight == 0 || bar.is_zero() {
        return 1.0;
    }
    let df = d as f64;
    let ln_prefactor = 4f64.ln() + (weight as f64).ln() + (df - 1.0) * LN_2PI
        - ln_double_factorial(2 * d as i64 - 1);
    1.0 - (ln_prefactor + bar.log_magnitude()).exp()
}

/// `F²(Ψ) = 1 - 4 (2π)^{d-1}/(2d-1)!! (d-1) Ē[sin^{2d}(θ0)]`.
pub fn fidelity_psi(density: &IsotropicDensity, d: usize) -> Result<f64> {
    check_dim(density, d, "fidelity_psi")?;
    let bar = density.moment_sin_2d_bar_log()?;
    Ok(one_minus_weighted_bar(d, d - 1, bar))
}

/// `1 - (2d-2)/(2d-1) · E[sin² θ0]`, the same quantity through the second
/// moment of the polar marginal.
pub fn fidelity_psi_from_sin2(density: &IsotropicDensity) -> Result<f64> {
    let two_d = 2.0 * f64::from(density.d());
    Ok(1.0 - (two_d - 2.0) / (two_d - 1.0) * density.moment_sin2()?)
}

/// `F²(Ψ) = (1 + (d-1)σ_c²)/d` for the normal family.
pub fn fidelity_psi_normal(sigma_c: f64, d: usize) -> Result<f64> {
    check_sigma(sigma_c)?;
    if d == 0 {
        return Err(Error::invalid("d must be positive"));
    }
    let df = d as f64;
    Ok((1.0 + (df - 1.0) * sigma_c * sigma_c) / df)
}

/// `F²(Ψ0)`: the raw-state formula at the logical half-dimension `d′`.
/// Uses the normal closed form when the density is normal.
pub fn fidelity_psi0(density: &IsotropicDensity, d_prime: usize) -> Result<f64> {
    check_dim(density, d_prime, "fidelity_psi0")?;
    match density.kind() {
        DensityKind::Normal { sigma } => fidelity_psi_normal(*sigma, d_prime),
        _ => fidelity_psi(density, d_prime),
    }
}

/// `F²(Φ̃) = 1 - 4 (2π)^{d-1}/(2d-1)!! (d-d″) Ē[sin^{2d}(θ0)]`.
pub fn fidelity_corrected(density: &IsotropicDensity, params: &CodeParams) -> Result<f64> {
    check_dim(density, params.d, "fidelity_corrected")?;
    let bar = density.moment_sin_2d_bar_log()?;
    Ok(one_minus_weighted_bar(
        params.d,
        params.d - params.d_dprime,
        bar,
    ))
}

/// `F²(Φ̃) = (1 + (d′-1)σ_c²)/d′` for the normal family.
pub fn fidelity_corrected_normal(sigma_c: f64, params: &CodeParams) -> Result<f64> {
    fidelity_psi_normal(sigma_c, params.d_prime)
}

/// Lower bound `1 - (2d′-2)/(2d′-1) · (v_u - (v_u/2)²)` on `F²(Ψ0)`.
pub fn bound_psi0_lower(v_u: f64, d_prime: usize) -> Result<f64> {
    check_variance(v_u)?;
    if d_prime == 0 {
        return Err(Error::invalid("d' must be positive"));
    }
    let two_dp = 2.0 * d_prime as f64;
    Ok(1.0 - (two_dp - 2.0) / (two_dp - 1.0) * (v_u - 0.25 * v_u * v_u))
}

/// Upper bound on `F²(Φ̃)` in terms of the coded variance; valid (for the
/// [`BoundVariant::Proof`] form) whenever the density satisfies
/// `E[(1 - cos θ0) cos θ0] ≥ 0`.
pub fn bound_corrected_upper(v_c: f64, params: &CodeParams, variant: BoundVariant) -> Result<f64> {
    check_variance(v_c)?;
    let numerator = (params.d - params.d_dprime) as f64;
    let denominator = match variant {
        BoundVariant::Proof => 2.0 * params.d as f64 - 1.0,
        BoundVariant::Printed => 2.0 * params.d_prime as f64 - 1.0,
    };
    Ok(1.0 - numerator / denominator * v_c)
}

/// `g(n, x) = 2 - 2(1 - x/2)^n - (x - (x/2)²)`, evaluated as
/// `1 + y² - 2yⁿ` with `y = 1 - x/2`.
pub fn lemma_g(n: u32, x: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("lemma_g needs n >= 2, got {n}")));
    }
    if !(0.0..=4.0).contains(&x) {
        return Err(Error::invalid(format!(
            "lemma_g needs x in [0, 4], got {x}"
        )));
    }
    let y = 1.0 - 0.5 * x;
    Ok(1.0 + y * y - 2.0 * y.powi(n as i32))
}

/// Assembles the three fidelities and their bounds for a normal coded
/// density; the uncoded density is `NORMAL(σ_c^{1/n_steps})` at `d′`.
pub fn full_report(
    density_coded: &IsotropicDensity,
    params: &CodeParams,
    n_steps: u32,
) -> Result<FidelityReport> {
    let sigma_c = density_coded.sigma().ok_or(Error::MissingUncodedDensity)?;
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be positive"));
    }
    let sigma_u = sigma_c.powf(1.0 / f64::from(n_steps));
    let uncoded = IsotropicDensity::normal(sigma_u, params.d_prime as u32)?;
    full_report_with_uncoded(density_coded, &uncoded, params, n_steps)
}

/// [`full_report`] for `NORMAL(σ_c)` using only the closed forms; needs no
/// density construction, so `σ_c` may sit arbitrarily close to 1.
pub fn normal_report(sigma_c: f64, params: &CodeParams, n_steps: u32) -> Result<FidelityReport> {
    check_sigma(sigma_c)?;
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be positive"));
    }
    let sigma_u = sigma_c.powf(1.0 / f64::from(n_steps));
    let v_c = 2.0 * (1.0 - sigma_c);
    let v_u = 2.0 * (1.0 - sigma_u);
    let two_d = 2.0 * params.d as f64;
    let cond18_value = sigma_c - 1.0 + (two_d - 1.0) * (1.0 - sigma_c * sigma_c) / two_d;
    Ok(FidelityReport {
        params: *params,
        n_steps,
        sigma_c: Some(sigma_c),
        sigma_u: Some(sigma_u),
        v_c,
        v_u,
        f2_psi: fidelity_psi_normal(sigma_c, params.d)?,
        f2_phi_tilde: fidelity_corrected_normal(sigma_c, params)?,
        f2_psi0: fidelity_psi_normal(sigma_u, params.d_prime)?,
        lb_psi0: bound_psi0_lower(v_u, params.d_prime)?,
        ub_phi_tilde: bound_corrected_upper(v_c, params, BoundVariant::Proof)?,
        ub_phi_tilde_printed: bound_corrected_upper(v_c, params, BoundVariant::Printed)?,
        cond18: cond18_value >= 0.0,
        cond18_value,
    })
}

/// [`full_report`] with an explicitly supplied uncoded density at `d′`.
pub fn full_report_with_uncoded(
    density_coded: &IsotropicDensity,
    density_uncoded: &IsotropicDensity,
    params: &CodeParams,
    n_steps: u32,
) -> Result<FidelityReport> {
    check_dim(density_coded, params.d, "coded density")?;
    check_dim(density_uncoded, params.d_prime, "uncoded density")?;
    let v_c = density_coded.variance_of()?.v;
    let v_u = density_uncoded.variance_of()?.v;
    let (f2_psi, f2_phi_tilde) = match density_coded.kind() {
        DensityKind::Normal { sigma } => (
            fidelity_psi_normal(*sigma, params.d)?,
            fidelity_corrected_normal(*sigma, params)?,
        ),
        _ => (
            fidelity_psi(density_coded, params.d)?,
            fidelity_corrected(density_coded, params)?,
        ),
    };
    let f2_psi0 = fidelity_psi0(density_uncoded, params.d_prime)?;
    let (cond18, cond18_value) = density_coded.condition_18()?;
    Ok(FidelityReport {
        params: *params,
        n_steps,
        sigma_c: density_coded.sigma(),
        sigma_u: density_uncoded.sigma(),
        v_c,
        v_u,
        f2_psi,
        f2_phi_tilde,
        f2_psi0,
        lb_psi0: bound_psi0_lower(v_u, params.d_prime)?,
        ub_phi_tilde: bound_corrected_upper(v_c, params, BoundVariant::Proof)?,
        ub_phi_tilde_printed: bound_corrected_upper(v_c, params, BoundVariant::Printed)?,
        cond18,
        cond18_value,
    })
}

/// `v_u` paired with `v_c` through `n_steps` composed errors.
pub fn uncoded_variance(v_c: f64, n_steps: u32) -> Result<f64> {
    variance_split(v_c, n_steps)
}
