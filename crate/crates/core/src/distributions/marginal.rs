use rand::Rng;

use super::density::{IsotropicDensity, NORMALIZATION_TOL};
use crate::error::{Error, Result};
use crate::mathcore::gk21_value;

pub const MIN_MARGINAL_NODES: usize = 4096;

/// Refinement stops once a panel's log-density jump is below this.
const MAX_LOG_JUMP: f64 = 0.25;
/// Panels whose density is below this fraction of the peak are left alone.
const NEGLIGIBLE: f64 = 1e-13;
const MAX_REFINE_FACTOR: usize = 16;

/// The polar marginal `g(θ0) = |S^{2d-2}| f(θ0) sin^{2d-2}(θ0)` tabulated
/// on an adaptive grid, with its CDF for inverse-transform sampling.
#[derive(Debug, Clone)]
pub struct PolarMarginal {
    density: IsotropicDensity,
    theta: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    raw_mass: f64,
}

/// Tabulates the polar marginal of `density` on at least
/// [`MIN_MARGINAL_NODES`] nodes.
pub fn marginal_polar(density: &IsotropicDensity) -> Result<PolarMarginal> {
    PolarMarginal::build(density, MIN_MARGINAL_NODES)
}

impl PolarMarginal {
    pub fn build(density: &IsotropicDensity, min_nodes: usize) -> Result<Self> {
        let min_nodes = min_nodes.max(2);
        let (a, b) = density.support();
        let mut theta: Vec<f64> = (0..min_nodes)
            .map(|i| a + (b - a) * i as f64 / (min_nodes - 1) as f64)
            .collect();
        let mut log_g: Vec<f64> = theta.iter().map(|&t| density.log_marginal(t)).collect();

        let min_width = (b - a) / (min_nodes as f64 * 4096.0);
        let cap = min_nodes * MAX_REFINE_FACTOR;
        loop {
            let peak = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let floor = peak + NEGLIGIBLE.ln();
            let mut next_theta = Vec::with_capacity(theta.len() * 2);
            let mut next_log = Vec::with_capacity(theta.len() * 2);
            let mut inserted = 0usize;
            for i in 0..theta.len() - 1 {
                next_theta.push(theta[i]);
                next_log.push(log_g[i]);
                let (l0, l1) = (log_g[i], log_g[i + 1]);
                let jump = if l0.is_finite() && l1.is_finite() {
                    (l1 - l0).abs()
                } else if l0.is_finite() || l1.is_finite() {
                    f64::INFINITY
                } else {
                    0.0
                };
                let significant = l0.max(l1) > floor;
                if jump > MAX_LOG_JUMP
                    && significant
                    && theta[i + 1] - theta[i] > min_width
                    && theta.len() + inserted < cap
                {
                    let mid = 0.5 * (theta[i] + theta[i + 1]);
                    next_theta.push(mid);
                    next_log.push(density.log_marginal(mid));
                    inserted += 1;
                }
            }
            next_theta.push(*theta.last().expect("grid has nodes"));
            next_log.push(*log_g.last().expect("grid has nodes"));
            theta = next_theta;
            log_g = next_log;
            if inserted == 0 {
                break;
            }
        }

        let pdf_at = |t: f64| density.marginal_pdf(t);
        let mut cdf = Vec::with_capacity(theta.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in theta.windows(2) {
            acc += gk21_value(&pdf_at, w[0], w[1]);
            cdf.push(acc);
        }
        let raw_mass = acc;
        if !((raw_mass - 1.0).abs() <= NORMALIZATION_TOL) {
            return Err(Error::Normalization(format!(
                "marginal of {} integrates to {raw_mass}",
                density.descriptor()
            )));
        }
        for c in &mut cdf {
            *c /= raw_mass;
        }
        let pdf = log_g.iter().map(|l| l.exp() / raw_mass).collect();

        Ok(PolarMarginal {
            density: density.clone(),
            theta,
            pdf,
            cdf,
            raw_mass,
        })
    }

    pub fn density(&self) -> &IsotropicDensity {
        &self.density
    }

    pub fn nodes(&self) -> &[f64] {
        &self.theta
    }

    pub fn pdf_at_nodes(&self) -> &[f64] {
        &self.pdf
    }

    pub fn cdf_at_nodes(&self) -> &[f64] {
        &self.cdf
    }

    /// `∫g` over the grid before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// Exact marginal density at `θ0`.
    pub fn pdf(&self, theta0: f64) -> f64 {
        self.density.marginal_pdf(theta0)
    }

    /// Location of the largest density: the best grid node, refined by
    /// golden-section search on the exact log-density of its two panels.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .pdf
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            });
        let last = self.theta.len() - 1;
        let (mut a, mut b) = (
            self.theta[i.saturating_sub(1)],
            self.theta[(i + 1).min(last)],
        );
        let f = |t: f64| self.density.log_marginal(t);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > 1e-14 * (1.0 + a.abs()) {
            if fc >= fd {
                b = d;
                (d, fd) = (c, fc);
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                (c, fc) = (d, fd);
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        let t = 0.5 * (a + b);
        if f(t) >= f(self.theta[i]) {
            t
        } else {
            self.theta[i]
        }
    }

    fn panel_shape(&self, i: usize) -> (f64, f64, f64) {
        let h = self.theta[i + 1] - self.theta[i];
        let mass = self.cdf[i + 1] - self.cdf[i];
        let alpha = self.pdf[i] * h / mass;
        let beta = self.pdf[i + 1] * h / mass;
        (mass, alpha, beta)
    }

    /// Interpolated CDF at `θ0`.
    pub fn cdf(&self, theta0: f64) -> f64 {
        let n = self.theta.len();
        if theta0 <= self.theta[0] {
            return 0.0;
        }
        if theta0 >= self.theta[n - 1] {
            return 1.0;
        }
        let i = self.theta.partition_point(|&t| t <= theta0) - 1;
        let (mass, alpha, beta) = self.panel_shape(i);
        if mass <= 0.0 {
            return self.cdf[i];
        }
        let t = (theta0 - self.theta[i]) / (self.theta[i + 1] - self.theta[i]);
        self.cdf[i] + mass * panel_cdf(t, alpha, beta)
    }

    /// Inverse CDF, monotone in `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.theta.len();
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let (mass, alpha, beta) = self.panel_shape(i);
        if !(mass > 0.0) {
            return self.theta[i];
        }
        let target = ((u - self.cdf[i]) / mass).clamp(0.0, 1.0);
        let t = invert_panel(target, alpha, beta);
        self.theta[i] + t * (self.theta[i + 1] - self.theta[i])
    }

    /// One inverse-transform draw of `θ0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Cubic Hermite CDF on a unit panel with end slopes `alpha`, `beta` (mass
/// normalized to 1), or linear when the cubic would not be monotone.
fn panel_cdf(t: f64, alpha: f64, beta: f64) -> f64 {
    if is_monotone(alpha, beta) {
        let t2 = t * t;
        let t3 = t2 * t;
        alpha * (t3 - 2.0 * t2 + t) + (3.0 * t2 - 2.0 * t3) + beta * (t3 - t2)
    } else {
        t
    }
}

fn panel_slope(t: f64, alpha: f64, beta: f64) -> f64 {
    alpha * (3.0 * t * t - 4.0 * t + 1.0) + 6.0 * t * (1.0 - t) + beta * (3.0 * t * t - 2.0 * t)
}

fn is_monotone(alpha: f64, beta: f64) -> bool {
    alpha.is_finite() && beta.is_finite() && alpha * alpha + beta * beta <= 9.0
}

fn invert_panel(target: f64, alpha: f64, beta: f64) -> f64 {
    if !is_monotone(alpha, beta) {
        return target;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut t = target;
    for _ in 0..60 {
        let r = panel_cdf(t, alpha, beta) - target;
        if r.abs() <= 1e-15 {
            break;
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let slope = panel_slope(t, alpha, beta);
        let newton = t - r / slope;
        t = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 {
            break;
        }
    }
    t
}
