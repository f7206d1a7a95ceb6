use crate::error::{Error, Result};

fn check_variance(name: &str, v: f64) -> Result<()> {
    if (0.0..=4.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} outside [0, 4]")))
    }
}

/// Variance of the sum of two independent isotropic errors:
/// `v1 + v2 - v1·v2/2`.
pub fn variance_compose(v1: f64, v2: f64) -> Result<f64> {
    check_variance("v1", v1)?;
    check_variance("v2", v2)?;
    Ok((v1 + v2 - 0.5 * v1 * v2).clamp(0.0, 4.0))
}

/// Variance of `n` composed independent errors of variance `v_u`:
/// `2 - 2(1 - v_u/2)^n`.
pub fn variance_compose_n(v_u: f64, n: u32) -> Result<f64> {
    check_variance("v_u", v_u)?;
    if n == 0 {
        return Err(Error::invalid("number of composed errors must be positive"));
    }
    Ok(2.0 - 2.0 * (1.0 - 0.5 * v_u).powi(n as i32))
}

/// Inverse of [`variance_compose_n`]: `v_u = 2 - 2((2 - v_c)/2)^{1/n}`.
///
/// For `v_c > 2` the base is negative; only odd `n` have a real root there.
pub fn variance_split(v_c: f64, n: u32) -> Result<f64> {
    check_variance("v_c", v_c)?;
    if n == 0 {
        return Err(Error::invalid("number of composed errors must be positive"));
    }
    let base = 0.5 * (2.0 - v_c);
    if base < 0.0 && n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "v_c = {v_c} > 2 has no real {n}-th root split"
        )));
    }
    let root = if n == 1 {
        base
    } else {
        base.signum() * base.abs().powf(1.0 / f64::from(n))
    };
    Ok(2.0 - 2.0 * root)
}
