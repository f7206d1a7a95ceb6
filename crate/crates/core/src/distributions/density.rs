use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::{VarianceReport, VarianceSource};
use crate::error::{Error, Result};
use crate::mathcore::{concentrated_breakpoints, ln_kernel_base, ln_sin_power};
use crate::mathcore::{
    ln_double_factorial, ln_double_factorial_ratio, ln_sphere_surface, LogValue, Quadrature,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative tolerance for every moment computed by quadrature.
pub(crate) const MOMENT_REL_TOL: f64 = 1e-12;

/// Tolerance on the full-sphere normalization checked at construction.
pub(crate) const NORMALIZATION_TOL: f64 = 1e-8;

/// A user-supplied polar density, tabulated as `(θ0, ln f(θ0))` with
/// log-linear interpolation between nodes and zero outside the table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarTable {
    theta: Vec<f64>,
    log_f: Vec<f64>,
}

impl PolarTable {
    /// Builds a table from raw (unnormalized) density values.
    pub fn from_values(theta: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if f.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "polar table density values must be finite and >= 0",
            ));
        }
        let log_f = f.iter().map(|v| v.ln()).collect();
        Self::from_log_values(theta, log_f)
    }

    pub fn from_log_values(theta: Vec<f64>, log_f: Vec<f64>) -> Result<Self> {
        if theta.len() != log_f.len() {
            return Err(Error::invalid("polar table columns differ in length"));
        }
        if theta.len() < 2 {
            return Err(Error::invalid("polar table needs at least two nodes"));
        }
        if theta.iter().any(|t| !(0.0..=PI).contains(t)) {
            return Err(Error::invalid("polar table angles must lie in [0, pi]"));
        }
        if theta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "polar table angles must be strictly increasing",
            ));
        }
        if log_f.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::invalid(
                "polar table log-density must be finite or -inf",
            ));
        }
        if log_f.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::Normalization(
                "polar table is identically zero".into(),
            ));
        }
        Ok(PolarTable { theta, log_f })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn log_f(&self) -> &[f64] {
        &self.log_f
    }

    fn ln_eval(&self, t: f64) -> f64 {
        let n = self.theta.len();
        if t < self.theta[0] || t > self.theta[n - 1] {
            return f64::NEG_INFINITY;
        }
        let i = self.theta.partition_point(|&x| x <= t);
        if i == 0 {
            return self.log_f[0];
        }
        if i == n {
            return self.log_f[n - 1];
        }
        let (t0, t1) = (self.theta[i - 1], self.theta[i]);
        let (l0, l1) = (self.log_f[i - 1], self.log_f[i]);
        if t == t0 {
            return l0;
        }
        if l0 == f64::NEG_INFINITY || l1 == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let w = (t - t0) / (t1 - t0);
        l0 + w * (l1 - l0)
    }

    /// `[θ_first, θ_last]` restricted to the nodes adjacent to a non-zero value.
    fn support(&self) -> (f64, f64) {
        let n = self.theta.len();
        let first = self.log_f.iter().position(|v| v.is_finite()).unwrap_or(0);
        let last = self
            .log_f
            .iter()
            .rposition(|v| v.is_finite())
            .unwrap_or(n - 1);
        (
            self.theta[first.saturating_sub(1)],
            self.theta[(last + 1).min(n - 1)],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DensityKind {
    /// Poisson-kernel family `∝ (1-σ²)/(1+σ²-2σ cos θ0)^d`; `σ = 0` is uniform.
    Normal {
        sigma: f64,
    },
    PolarTable(Arc<PolarTable>),
    /// Uniform on the cap `θ0 ≤ theta_max`.
    UniformCap {
        theta_max: f64,
    },
}

/// A rotationally symmetric error density on `S^{2d-1}`, given by its
/// polar-angle profile `f(θ0)`. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropicDensity {
    kind: DensityKind,
    d: u32,
    /// Subtracted from the raw log profile so the density integrates to one.
    ln_norm: f64,
}

/// `ln f_n(σ, θ0)` for the normal isotropic family:
/// `((2d-2)!!/(2π)^d) · (1-σ²)/(1+σ²-2σ cos θ0)^d`.
pub fn normal_density_eval(sigma: f64, d: u32, theta0: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_dim(d)?;
    if !(0.0..=PI).contains(&theta0) {
        return Err(Error::invalid(format!("theta0 = {theta0} outside [0, pi]")));
    }
    Ok(ln_normal(sigma, d, theta0))
}

fn ln_normal(sigma: f64, d: u32, theta0: f64) -> f64 {
    let df = f64::from(d);
    ln_double_factorial(2 * i64::from(d) - 2) - df * LN_2PI + (-sigma * sigma).ln_1p()
        - df * ln_kernel_base(sigma, theta0)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::invalid(format!("sigma = {sigma} outside [0, 1)")))
    }
}

fn check_dim(d: u32) -> Result<()> {
    if d == 0 {
        Err(Error::invalid("half-dimension d must be at least 1"))
    } else {
        Ok(())
    }
}

impl IsotropicDensity {
    pub fn normal(sigma: f64, d: u32) -> Result<Self> {
        check_sigma(sigma)?;
        check_dim(d)?;
        let density = IsotropicDensity {
            kind: DensityKind::Normal { sigma },
            d,
            ln_norm: 0.0,
        };
        let total = density.ln_total_mass()?.exp();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization(format!(
                "normal density (sigma = {sigma}, d = {d}) integrates to {total}"
            )));
        }
        Ok(density)
    }

    pub fn uniform(d: u32) -> Result<Self> {
        Self::normal(0.0, d)
    }

    pub fn uniform_cap(theta_max: f64, d: u32) -> Result<Self> {
        check_dim(d)?;
        if !(theta_max > 0.0 && theta_max <= PI) {
            return Err(Error::invalid(format!(
                "cap angle {theta_max} outside (0, pi]"
            )));
        }
        Self::normalized(DensityKind::UniformCap { theta_max }, d)
    }

    pub fn polar_table(table: PolarTable, d: u32) -> Result<Self> {
        check_dim(d)?;
        Self::normalized(DensityKind::PolarTable(Arc::new(table)), d)
    }

    /// Reads a `theta0,f` CSV (radians, raw density values). Returns the
    /// density together with the normalization constant that was divided out.
    pub fn from_csv_reader<R: Read>(reader: R, d: u32) -> Result<(Self, f64)> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::invalid(format!("polar table header: {e}")))?
            .clone();
        if headers.len() != 2 || &headers[0] != "theta0" || &headers[1] != "f" {
            return Err(Error::invalid(format!(
                "polar table header must be `theta0,f`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut theta = Vec::new();
        let mut f = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec =
                rec.map_err(|e| Error::invalid(format!("polar table row {}: {e}", line + 2)))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("polar table row {}: {e}", line + 2)))
            };
            theta.push(parse(&rec[0])?);
            f.push(parse(&rec[1])?);
        }
        let density = Self::polar_table(PolarTable::from_values(theta, f)?, d)?;
        let constant = density.ln_norm.exp();
        Ok((density, constant))
    }

    pub fn from_csv_path(path: &Path, d: u32) -> Result<(Self, f64)> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, d)
    }

    fn normalized(kind: DensityKind, d: u32) -> Result<Self> {
        let raw = IsotropicDensity {
            kind,
            d,
            ln_norm: 0.0,
        };
        let ln_total = raw.ln_total_mass()?;
        if !ln_total.is_finite() {
            return Err(Error::Normalization(format!(
                "total mass exp({ln_total}) cannot be normalized"
            )));
        }
        let density = IsotropicDensity {
            ln_norm: ln_total,
            ..raw
        };
        let check = density.ln_total_mass()?.exp();
        if (check - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization(format!(
                "renormalized density integrates to {check}"
            )));
        }
        Ok(density)
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Half-dimension: the state lives on `S^{2d-1} ⊂ R^{2d}`.
    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.kind {
            DensityKind::Normal { sigma } => Some(sigma),
            _ => None,
        }
    }

    /// Constant divided out of the raw profile at construction (1 for normal).
    pub fn normalization_constant(&self) -> f64 {
        self.ln_norm.exp()
    }

    /// Short human-readable descriptor, e.g. `NORMAL(sigma=0.9,d=32)`.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            DensityKind::Normal { sigma } => format!("NORMAL(sigma={sigma},d={})", self.d),
            DensityKind::UniformCap { theta_max } => {
                format!("UNIFORM_CAP(theta_max={theta_max},d={})", self.d)
            }
            DensityKind::PolarTable(t) => {
                format!("POLAR_TABLE(nodes={},d={})", t.theta.len(), self.d)
            }
        }
    }

    /// The same profile on a sphere of another half-dimension.
    pub fn with_dimension(&self, d: u32) -> Result<Self> {
        match &self.kind {
            DensityKind::Normal { sigma } => Self::normal(*sigma, d),
            DensityKind::UniformCap { theta_max } => Self::uniform_cap(*theta_max, d),
            DensityKind::PolarTable(t) => {
                check_dim(d)?;
                Self::normalized(DensityKind::PolarTable(Arc::clone(t)), d)
            }
        }
    }

    fn ln_raw(&self, theta: f64) -> f64 {
        match &self.kind {
            DensityKind::Normal { sigma } => ln_normal(*sigma, self.d, theta),
            DensityKind::UniformCap { theta_max } => {
                if theta <= *theta_max {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            DensityKind::PolarTable(t) => t.ln_eval(theta),
        }
    }

    /// `ln f(θ0)`, the normalized density on the sphere at polar angle `θ0`.
    pub fn log_density(&self, theta0: f64) -> f64 {
        if !(0.0..=PI).contains(&theta0) {
            return f64::NEG_INFINITY;
        }
        self.ln_raw(theta0) - self.ln_norm
    }

    /// `ln g(θ0) = ln(|S^{2d-2}| f(θ0) sin^{2d-2}(θ0))`.
    pub fn log_marginal(&self, theta0: f64) -> f64 {
        let lf = self.log_density(theta0);
        if lf == f64::NEG_INFINITY {
            return lf;
        }
        ln_sphere_surface(2 * self.d - 2) + lf + ln_sin_power(2 * self.d - 2, theta0)
    }

    pub fn marginal_pdf(&self, theta0: f64) -> f64 {
        self.log_marginal(theta0).exp()
    }

    /// Interval outside which `f` vanishes.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            DensityKind::Normal { .. } => (0.0, PI),
            DensityKind::UniformCap { theta_max } => (0.0, *theta_max),
            DensityKind::PolarTable(t) => t.support(),
        }
    }

    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            DensityKind::Normal { sigma } => concentrated_breakpoints(1.0 - sigma),
            DensityKind::UniformCap { theta_max } => concentrated_breakpoints(theta_max / 64.0)
                .into_iter()
                .filter(|p| p < theta_max)
                .collect(),
            DensityKind::PolarTable(t) => t.theta.clone(),
        }
    }

    fn quadrature(&self) -> Quadrature {
        Quadrature::new(MOMENT_REL_TOL).breakpoints(self.breakpoints())
    }

    /// `ln(|S^{2d-2}| ∫ f sin^{2d-2})` by quadrature, scaled so that neither
    /// tiny caps nor sharp kernels leave the `f64` range.
    fn ln_total_mass(&self) -> Result<f64> {
        let (a, b) = self.support();
        let samples = 2048;
        let mut scale = f64::NEG_INFINITY;
        for i in 0..=samples {
            let t = a + (b - a) * i as f64 / samples as f64;
            scale = scale.max(self.log_marginal(t));
        }
        for p in self.breakpoints() {
            if p >= a && p <= b {
                scale = scale.max(self.log_marginal(p));
            }
        }
        if !scale.is_finite() {
            return Err(Error::Normalization(format!(
                "{} has no mass on its support",
                self.descriptor()
            )));
        }
        let mass = self
            .quadrature()
            .integrate(|t| (self.log_marginal(t) - scale).exp(), a, b)?
            .value;
        if !(mass > 0.0) {
            return Err(Error::Normalization(format!(
                "{} has zero mass",
                self.descriptor()
            )));
        }
        Ok(scale + mass.ln())
    }

    /// `E[h(θ0)]` under the polar marginal, by adaptive quadrature.
    pub fn expect<H: Fn(f64) -> f64>(&self, h: H) -> Result<f64> {
        let (a, b) = self.support();
        self.quadrature()
            .integrate(|t| self.marginal_pdf(t) * h(t), a, b)
            .map(|r| r.value)
    }

    /// `V = 2 - 2E[cos θ0]`; closed form `2(1-σ)` for the normal family.
    pub fn variance_of(&self) -> Result<VarianceReport> {
        match self.kind {
            DensityKind::Normal { sigma } => Ok(VarianceReport {
                v: 2.0 * (1.0 - sigma),
                source: VarianceSource::ClosedForm,
            }),
            _ => self.variance_by_quadrature(),
        }
    }

    pub fn variance_by_quadrature(&self) -> Result<VarianceReport> {
        let mean_cos = self.expect(f64::cos)?;
        Ok(VarianceReport {
            v: (2.0 - 2.0 * mean_cos).clamp(0.0, 4.0),
            source: VarianceSource::Quadrature,
        })
    }

    /// `E[sin² θ0]`; closed form `(2d-1)(1-σ²)/(2d)` for the normal family.
    pub fn moment_sin2(&self) -> Result<f64> {
        match self.kind {
            DensityKind::Normal { sigma } => {
                let two_d = 2.0 * f64::from(self.d);
                Ok((two_d - 1.0) * (1.0 - sigma * sigma) / two_d)
            }
            _ => self.moment_sin2_by_quadrature(),
        }
    }

    pub fn moment_sin2_by_quadrature(&self) -> Result<f64> {
        self.expect(|t| {
            let s = t.sin();
            s * s
        })
    }

    /// `Ē[sin^{2d} θ0] = ∫₀^π f(θ0) sin^{2d}(θ0) dθ0` (no Jacobian), in log form.
    pub fn moment_sin_2d_bar_log(&self) -> Result<LogValue> {
        match self.kind {
            DensityKind::Normal { sigma } => {
                let d = u64::from(self.d);
                let ln = ln_double_factorial(2 * d as i64 - 2) - self.d as f64 * LN_2PI
                    + (-sigma * sigma).ln_1p()
                    + ln_double_factorial_ratio(2 * d)
                    + PI.ln();
                if sigma == 0.0 || ln.is_finite() {
                    Ok(LogValue::from_ln(ln))
                } else {
                    Ok(LogValue::ZERO)
                }
            }
            _ => self.moment_sin_2d_bar_log_by_quadrature(),
        }
    }

    pub fn moment_sin_2d_bar_log_by_quadrature(&self) -> Result<LogValue> {
        // f·sin^{2d} = (g · sin²) / |S^{2d-2}|; integrate the O(1) part.
        let ln_surface = ln_sphere_surface(2 * self.d - 2);
        let (a, b) = self.support();
        let twice_d = 2 * self.d;
        let scaled = self
            .quadrature()
            .integrate(
                |t| (self.log_density(t) + ln_sin_power(twice_d, t) + ln_surface).exp(),
                a,
                b,
            )?
            .value;
        if scaled <= 0.0 {
            return Ok(LogValue::ZERO);
        }
        Ok(LogValue::from_ln(scaled.ln() - ln_surface))
    }

    pub fn moment_sin_2d_bar(&self) -> Result<f64> {
        self.moment_sin_2d_bar_log().map(|v| v.to_f64())
    }

    /// `E[(1 - cos θ0) cos θ0]` under the full spherical marginal, and
    /// whether it is non-negative.
    pub fn condition_18(&self) -> Result<(bool, f64)> {
        let value = match self.kind {
            DensityKind::Normal { sigma } => sigma - 1.0 + self.moment_sin2()?,
            _ => self.condition_18_by_quadrature()?,
        };
        Ok((value >= 0.0, value))
    }

    pub fn condition_18_by_quadrature(&self) -> Result<f64> {
        self.expect(|t| {
            let c = t.cos();
            (1.0 - c) * c
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::sphere_surface;

    #[test]
    fn uniform_is_constant() {
        for d in [1, 2, 4, 32] {
            let u = IsotropicDensity::uniform(d).unwrap();
            let expected = -sphere_surface(2 * d - 1).ln();
            for t in [0.0, 0.3, 1.5, PI] {
                assert!((u.log_density(t) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_at_pole_matches_naive() {
        // d = 4, σ = 0.5: (6!!/(2π)^4)·(1+σ)/(1-σ)^7
        let naive = (48.0 / (2.0 * PI).powi(4)) * 1.5 / 0.5f64.powi(7);
        let got = normal_density_eval(0.5, 4, 0.0).unwrap().exp();
        assert!((got - naive).abs() / naive < 1e-13);
        let t: f64 = 1.1;
        let naive = (48.0 / (2.0 * PI).powi(4)) * 0.75 / (1.25 - t.cos()).powi(4);
        let got = normal_density_eval(0.5, 4, t).unwrap().exp();
        assert!((got - naive).abs() / naive < 1e-13);
        assert!(normal_density_eval(1.0, 4, 0.0).is_err());
    }

    #[test]
    fn normalization_over_grid() {
        for &d in &[1, 2, 4, 16, 32, 64] {
            for &s in &[0.0, 0.5, 0.9, 0.99] {
                let dens = IsotropicDensity::normal(s, d).unwrap();
                let total = dens.expect(|_| 1.0).unwrap();
                assert!((total - 1.0).abs() < 1e-8, "d={d} sigma={s} total={total}");
            }
        }
    }

    #[test]
    fn variance_examples() {
        let n = IsotropicDensity::normal(0.5, 8).unwrap();
        assert_eq!(n.variance_of().unwrap().v, 1.0);
        for d in [1, 3, 32] {
            let u = IsotropicDensity::uniform(d).unwrap();
            assert!((u.variance_by_quadrature().unwrap().v - 2.0).abs() < 1e-10);
        }
        let cap = IsotropicDensity::uniform_cap(1e-4, 4).unwrap();
        assert!(cap.variance_of().unwrap().v < 1e-8);
    }

    #[test]
    fn sin2_moment_examples() {
        let n = IsotropicDensity::normal(0.7, 4).unwrap();
        let closed = 7.0 * (1.0 - 0.49) / 8.0;
        assert!((n.moment_sin2().unwrap() - closed).abs() < 1e-15);
        assert!((n.moment_sin2_by_quadrature().unwrap() - closed).abs() < 1e-10);
        let u = IsotropicDensity::uniform(1).unwrap();
        assert!((u.moment_sin2_by_quadrature().unwrap() - 0.5).abs() < 1e-12);
        let near_one = IsotropicDensity::normal(0.999_999, 3).unwrap();
        assert!(near_one.moment_sin2().unwrap() < 1e-5);
    }

    #[test]
    fn sin_2d_bar_examples() {
        let u = IsotropicDensity::uniform(1).unwrap();
        let bar = u.moment_sin_2d_bar().unwrap();
        assert!((bar - 0.25).abs() < 1e-15);
        let q = u.moment_sin_2d_bar_log_by_quadrature().unwrap().to_f64();
        assert!((q - 0.25).abs() < 1e-12);
        for &(s, d) in &[(0.9, 32), (0.3, 5), (0.99, 16)] {
            let n = IsotropicDensity::normal(s, d).unwrap();
            let c = n.moment_sin_2d_bar().unwrap();
            let q = n.moment_sin_2d_bar_log_by_quadrature().unwrap().to_f64();
            assert!((c - q).abs() / c < 1e-9, "sigma={s} d={d}");
        }
    }

    #[test]
    fn condition_18_examples() {
        let cap = IsotropicDensity::uniform_cap(PI / 2.0, 8).unwrap();
        assert!(cap.condition_18().unwrap().0);
        let u = IsotropicDensity::uniform(32).unwrap();
        let (holds, value) = u.condition_18().unwrap();
        assert!(!holds);
        let cos2 = u.expect(|t| t.cos() * t.cos()).unwrap();
        assert!((value + cos2).abs() < 1e-12);
        let n = IsotropicDensity::normal(0.9, 32).unwrap();
        let (holds, value) = n.condition_18().unwrap();
        assert!(holds);
        assert!((value - n.condition_18_by_quadrature().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn polar_table_renormalizes() {
        let theta: Vec<f64> = (0..=200).map(|i| PI * i as f64 / 200.0).collect();
        let f: Vec<f64> = theta.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let dens =
            IsotropicDensity::polar_table(PolarTable::from_values(theta, f).unwrap(), 2).unwrap();
        assert!((dens.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(dens.normalization_constant() > 0.0);
    }

    #[test]
    fn polar_table_csv() {
        let csv = "theta0,f\n0.0,1.0\n1.0,0.5\n3.141592653589793,0.25\n";
        let (dens, c) = IsotropicDensity::from_csv_reader(csv.as_bytes(), 3).unwrap();
        assert!(c > 0.0);
        assert!((dens.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(IsotropicDensity::from_csv_reader("t,f\n0,1\n1,1\n".as_bytes(), 3).is_err());
        assert!(IsotropicDensity::from_csv_reader("theta0,f\n0,1\n".as_bytes(), 3).is_err());
        assert!(IsotropicDensity::from_csv_reader("theta0,f\n0,-1\n1,1\n".as_bytes(), 3).is_err());
        assert!(IsotropicDensity::from_csv_reader("theta0,f\n0,0\n1,0\n".as_bytes(), 3).is_err());
    }

    #[test]
    fn tiny_cap_stays_finite() {
        let cap = IsotropicDensity::uniform_cap(1e-6, 32).unwrap();
        let v = cap.variance_of().unwrap().v;
        assert!((0.0..1e-11).contains(&v));
        assert!(cap.moment_sin2().unwrap() < 1e-11);
    }
}
