//! Monte Carlo generation of isotropic error states on `S^{2d-1}`.
//!
//! A state is `x0 = cos θ0`, `(x1, …, x_{2d-1}) = sin θ0 · u` with `θ0` drawn
//! from the tabulated polar marginal and `u` uniform on `S^{2d-2}`.
//!
//! Estimates are split into fixed-size chunks. Chunk `k` draws from its own
//! ChaCha stream `(seed, k)`, and per-chunk moments are merged in chunk
//! order, so the result depends on `(seed, n_samples, chunk_size)` only and
//! not on how many workers ran the chunks.

use std::f64::consts::PI;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::{IsotropicDensity, PolarMarginal};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const SAMPLER_TABLE_NODES: usize = 8192;
pub const DEFAULT_CHUNK_SIZE: usize = 4096;

/// Builds the inverse-CDF table used for sampling `θ0`.
pub fn sampling_table(density: &IsotropicDensity) -> Result<PolarMarginal> {
    PolarMarginal::build(density, SAMPLER_TABLE_NODES)
}

/// A point of `S^{2d-1} ⊂ R^{2d}`; complex amplitude `k` is
/// `x_{2k} + i·x_{2k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    coords: Vec<f64>,
}

impl StateVector {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "state needs an even, non-zero number of real coordinates, got {}",
                coords.len()
            )));
        }
        let norm2: f64 = coords.iter().map(|x| x * x).sum();
        if (norm2 - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::invalid(format!("state norm² = {norm2}, expected 1")));
        }
        Ok(StateVector { coords })
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.len().is_multiple_of(2));
        StateVector { coords }
    }

    /// The basis vector `e_j` of `R^{2d}`.
    pub fn basis(d: usize, j: usize) -> Self {
        assert!(j < 2 * d, "basis index {j} out of range for d = {d}");
        let mut coords = vec![0.0; 2 * d];
        coords[j] = 1.0;
        StateVector { coords }
    }

    /// Half-dimension `d`.
    pub fn d(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum()
    }

    /// `|⟨Ψ|0⟩|² = x0² + x1²`.
    pub fn fidelity_term(&self) -> f64 {
        self.coords[0] * self.coords[0] + self.coords[1] * self.coords[1]
    }

    /// `‖Ψ - |0⟩‖² = 2 - 2x0`.
    pub fn variance_term(&self) -> f64 {
        2.0 - 2.0 * self.coords[0]
    }
}

/// Hyperspherical angles `θ0 … θ_{2d-2}` of a point on `S^{2d-1}`, with
/// `x_j = sin θ0 ⋯ sin θ_{j-1} cos θ_j` and the last angle in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPoint {
    pub angles: Vec<f64>,
}

impl SphericalPoint {
    pub fn from_cartesian(state: &StateVector) -> Self {
        let x = state.coords();
        let n = x.len();
        let mut tail2: f64 = x.iter().map(|v| v * v).sum();
        let mut angles = Vec::with_capacity(n - 1);
        for &xj in &x[..n - 2] {
            tail2 -= xj * xj;
            angles.push(tail2.max(0.0).sqrt().atan2(xj));
        }
        let last = x[n - 1].atan2(x[n - 2]);
        angles.push(if last < 0.0 { last + 2.0 * PI } else { last });
        SphericalPoint { angles }
    }

    pub fn to_cartesian(&self) -> StateVector {
        let n = self.angles.len() + 1;
        let mut coords = Vec::with_capacity(n);
        let mut prefix = 1.0;
        for &a in &self.angles {
            coords.push(prefix * a.cos());
            prefix *= a.sin();
        }
        coords.push(prefix);
        StateVector::from_raw(coords)
    }
}

/// Mean with standard error `sample_std / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: Option<u64>,
}

impl McEstimate {
    /// `|mean - expected| / std_error`, or 0/inf when the error is zero.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = (self.mean - expected).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, expected: f64, n_se: f64) -> bool {
        (self.mean - expected).abs() <= n_se * self.std_error
    }
}

/// Combined standard error of two independent estimates.
pub fn combined_se(a: &McEstimate, b: &McEstimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    fn estimate(&self, seed: Option<u64>) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            n_samples: self.n,
            seed,
        }
    }
}

/// Sample count, master seed, and chunking policy of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub chunk_size: usize,
}

impl McConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McConfig {
            n_samples,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    /// The same run with an independent master seed, for a second
    /// estimator that must not share draws with the first.
    pub fn derive(&self, salt: u64) -> Self {
        McConfig {
            seed: splitmix64(self.seed ^ splitmix64(salt)),
            ..*self
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::EmptySamples);
        }
        if self.chunk_size == 0 {
            return Err(Error::invalid("chunk size must be positive"));
        }
        Ok(())
    }

    fn chunks(&self) -> usize {
        self.n_samples.div_ceil(self.chunk_size as u64) as usize
    }

    fn chunk_len(&self, k: usize) -> u64 {
        let start = k as u64 * self.chunk_size as u64;
        (self.n_samples - start).min(self.chunk_size as u64)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent RNG stream for chunk `chunk` of a run with master `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Averages `per_sample` over `config.n_samples` draws.
pub fn estimate<F>(config: &McConfig, exec: Exec, per_sample: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    Ok(estimate_many::<1, _>(config, exec, |rng| [per_sample(rng)])?[0])
}

/// Averages `K` statistics computed from the same draw.
pub fn estimate_many<const K: usize, F>(
    config: &McConfig,
    exec: Exec,
    per_sample: F,
) -> Result<[McEstimate; K]>
where
    F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync + Send,
{
    config.check()?;
    let chunks = exec.map_indexed(config.chunks(), |k| {
        let mut rng = chunk_rng(config.seed, k as u64);
        let mut acc = [Moments::default(); K];
        for _ in 0..config.chunk_len(k) {
            let values = per_sample(&mut rng);
            for (m, v) in acc.iter_mut().zip(values) {
                m.push(v);
            }
        }
        acc
    });
    let total = chunks
        .into_iter()
        .fold([Moments::default(); K], |mut acc, c| {
            for (a, b) in acc.iter_mut().zip(c) {
                *a = a.merge(b);
            }
            acc
        });
    Ok(total.map(|m| m.estimate(Some(config.seed))))
}

/// Draws `θ0` from a tabulated marginal.
pub fn sample_theta0<R: Rng + ?Sized>(marginal: &PolarMarginal, rng: &mut R) -> f64 {
    marginal.sample(rng)
}

/// Uniform point on `S^D ⊂ R^{D+1}` from normalized Gaussian coordinates.
pub fn sample_uniform_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; dim + 1];
    loop {
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if norm2 > 0.0 {
            let inv = norm2.sqrt().recip();
            v.iter_mut().for_each(|x| *x *= inv);
            return v;
        }
    }
}

/// One isotropic state about `|0⟩` with the marginal's polar density.
pub fn sample_state<R: Rng + ?Sized>(marginal: &PolarMarginal, rng: &mut R) -> StateVector {
    let d = marginal.density().d() as usize;
    let theta0 = marginal.sample(rng);
    let (s, c) = theta0.sin_cos();
    let mut coords = Vec::with_capacity(2 * d);
    coords.push(c);
    if d == 1 {
        // S^0 = {±1}
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        coords.push(sign * s);
    } else {
        coords.extend(
            sample_uniform_direction(2 * d - 2, rng)
                .into_iter()
                .map(|u| s * u),
        );
    }
    StateVector::from_raw(coords)
}

/// Applies the reflection `H = I - 2vvᵀ/vᵀv`, `v = e0 - base`, which is
/// orthogonal and maps `e0` to `base`.
pub fn transport_from_origin(base: &StateVector, x: &StateVector) -> StateVector {
    let b = base.coords();
    let mut v: Vec<f64> = b.iter().map(|bi| -bi).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|t| t * t).sum();
    if vv == 0.0 {
        return x.clone();
    }
    let vx: f64 = v.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
    let scale = 2.0 * vx / vv;
    StateVector::from_raw(
        x.coords()
            .iter()
            .zip(&v)
            .map(|(xi, vi)| xi - scale * vi)
            .collect(),
    )
}

/// Applies a fresh isotropic error (drawn about `|0⟩`) on top of `base`.
pub fn compose_error<R: Rng + ?Sized>(
    base: &StateVector,
    marginal: &PolarMarginal,
    rng: &mut R,
) -> StateVector {
    let fresh = sample_state(marginal, rng);
    transport_from_origin(base, &fresh)
}

fn moments_of<I: Iterator<Item = f64>>(values: I) -> Moments {
    values.fold(Moments::default(), |mut m, v| {
        m.push(v);
        m
    })
}

fn check_samples(samples: &[StateVector]) -> Result<()> {
    let first = samples.first().ok_or(Error::EmptySamples)?;
    if samples.iter().any(|s| s.d() != first.d()) {
        return Err(Error::invalid("samples have differing dimensions"));
    }
    Ok(())
}

/// Mean of `2 - 2x0` with its standard error.
pub fn empirical_variance(samples: &[StateVector]) -> Result<McEstimate> {
    check_samples(samples)?;
    Ok(moments_of(samples.iter().map(StateVector::variance_term)).estimate(None))
}

/// Mean of `x0² + x1²` (`F²`) with its standard error.
pub fn empirical_fidelity(samples: &[StateVector]) -> Result<McEstimate> {
    check_samples(samples)?;
    Ok(moments_of(samples.iter().map(StateVector::fidelity_term)).estimate(None))
}

/// Draws `config.n_samples` states, in chunk order.
pub fn sample_states(
    marginal: &PolarMarginal,
    config: &McConfig,
    exec: Exec,
) -> Result<Vec<StateVector>> {
    config.check()?;
    let chunks = exec.map_indexed(config.chunks(), |k| {
        let mut rng = chunk_rng(config.seed, k as u64);
        (0..config.chunk_len(k))
            .map(|_| sample_state(marginal, &mut rng))
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Sidecar metadata of a raw sample dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub d: usize,
    pub n_samples: u64,
    pub seed: u64,
    pub density: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes samples as little-endian `f64`, row-major `n_samples × 2d`, plus a
/// JSON sidecar at `<path>.json`.
pub fn write_sample_dump(
    path: &Path,
    samples: &[StateVector],
    seed: u64,
    density: &IsotropicDensity,
) -> Result<DumpMeta> {
    check_samples(samples)?;
    let meta = DumpMeta {
        d: samples[0].d(),
        n_samples: samples.len() as u64,
        seed,
        density: serde_json::to_value(density).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?,
    };
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        for x in s.coords() {
            w.write_all(&x.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json {
        path: side.clone(),
        source: e,
    })?;
    std::fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
    Ok(meta)
}

pub fn read_sample_dump(path: &Path) -> Result<(DumpMeta, Vec<StateVector>)> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: DumpMeta = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: side.clone(),
        source: e,
    })?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let row = 2 * meta.d * 8;
    if row == 0 || bytes.len() as u64 != meta.n_samples * row as u64 {
        return Err(Error::invalid(format!(
            "{}: {} bytes does not match {} samples of d = {}",
            path.display(),
            bytes.len(),
            meta.n_samples,
            meta.d
        )));
    }
    let samples = bytes
        .chunks_exact(row)
        .map(|r| {
            StateVector::from_raw(
                r.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                    .collect(),
            )
        })
        .collect();
    Ok((meta, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_examples() {
        let e0 = StateVector::basis(3, 0);
        let v = empirical_variance(std::slice::from_ref(&e0)).unwrap();
        assert_eq!(v.mean, 0.0);
        let neg = StateVector::new(vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(empirical_variance(&[e0.clone(), neg]).unwrap().mean, 2.0);
        assert_eq!(
            empirical_fidelity(&[StateVector::basis(3, 1)])
                .unwrap()
                .mean,
            1.0
        );
        assert_eq!(
            empirical_fidelity(&[StateVector::basis(3, 2)])
                .unwrap()
                .mean,
            0.0
        );
        assert!(matches!(empirical_fidelity(&[]), Err(Error::EmptySamples)));
        assert!(empirical_fidelity(&[e0, StateVector::basis(2, 0)]).is_err());
    }

    #[test]
    fn state_vector_validation() {
        assert!(StateVector::new(vec![1.0, 0.0, 0.0]).is_err());
        assert!(StateVector::new(vec![1.0, 1.0]).is_err());
        assert!(StateVector::new(vec![]).is_err());
    }

    #[test]
    fn spherical_round_trip() {
        let mut rng = chunk_rng(7, 0);
        for d in [1usize, 2, 5] {
            for _ in 0..100 {
                let x = StateVector::from_raw(sample_uniform_direction(2 * d - 1, &mut rng));
                let p = SphericalPoint::from_cartesian(&x);
                assert_eq!(p.angles.len(), 2 * d - 1);
                let y = p.to_cartesian();
                for (a, b) in x.coords().iter().zip(y.coords()) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn transport_maps_origin_to_base() {
        let mut rng = chunk_rng(11, 0);
        let base = StateVector::from_raw(sample_uniform_direction(7, &mut rng));
        let image = transport_from_origin(&base, &StateVector::basis(4, 0));
        for (a, b) in image.coords().iter().zip(base.coords()) {
            assert!((a - b).abs() < 1e-14);
        }
        let same = transport_from_origin(&StateVector::basis(4, 0), &base);
        assert_eq!(same, base);
    }

    #[test]
    fn determinism_across_policies() {
        let cfg = McConfig::new(10_001, 99).with_chunk_size(512);
        let f = |rng: &mut ChaCha8Rng| rng.random::<f64>();
        let a = estimate(&cfg, Exec::Sequential, f).unwrap();
        let b = estimate(&cfg, Exec::Parallel, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_samples, 10_001);
        assert!(a.within(0.5, 4.0));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let whole = moments_of(xs.iter().copied());
        let split =
            moments_of(xs[..313].iter().copied()).merge(moments_of(xs[313..].iter().copied()));
        assert!((whole.mean - split.mean).abs() < 1e-14);
        assert!((whole.m2 - split.m2).abs() < 1e-10);
    }

    #[test]
    fn dump_round_trip() {
        let dens = IsotropicDensity::normal(0.5, 2).unwrap();
        let table = sampling_table(&dens).unwrap();
        let samples = sample_states(&table, &McConfig::new(10, 5), Exec::Sequential).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.bin");
        let meta = write_sample_dump(&path, &samples, 5, &dens).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 10 * 4 * 8);
        let (meta2, back) = read_sample_dump(&path).unwrap();
        assert_eq!(meta, meta2);
        assert_eq!(back, samples);
    }
}
