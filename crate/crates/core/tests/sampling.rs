//! Statistical checks of the samplers and the block-code Monte Carlo.
//!
//! Every run uses a fixed seed, so results are deterministic; tolerances are
//! three standard errors unless stated otherwise.

use std::f64::consts::PI;

use isoqec::codesim::{corrected_fidelity_mc, raw_fidelity_mc};
use isoqec::distributions::{marginal_polar, variance_compose_n};
use isoqec::sampler::{
    chunk_rng, combined_se, compose_error, empirical_fidelity, empirical_variance, estimate,
    estimate_many, read_sample_dump, sample_states, sample_uniform_direction, sampling_table,
    write_sample_dump,
};
use isoqec::{
    BlockCode, CodeParams, Estimator, Exec, IsotropicDensity, McConfig, McEstimate, PolarMarginal,
    StateVector,
};

fn table(d: u32, sigma: f64) -> PolarMarginal {
    sampling_table(&IsotropicDensity::normal(sigma, d).unwrap()).unwrap()
}

fn assert_within(est: &McEstimate, expected: f64, what: &str) {
    assert!(
        est.within(expected, 3.0),
        "{what}: {} ± {} vs {expected} (z = {:.2})",
        est.mean,
        est.std_error,
        est.z_score(expected)
    );
}

#[test]
fn polar_angle_passes_ks() {
    let m = table(32, 0.9);
    let mut rng = chunk_rng(1, 0);
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n).map(|_| m.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = m.cdf(x);
            (c - i as f64 / n as f64)
                .abs()
                .max((i + 1) as f64 / n as f64 - c)
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS statistic {ks}");
}

#[test]
fn polar_angle_chi_square_d1() {
    let m = table(1, 0.0);
    let mut rng = chunk_rng(2, 0);
    let (n, bins) = (100_000, 20);
    let mut counts = vec![0usize; bins];
    for _ in 0..n {
        let t = m.sample(&mut rng);
        counts[((t / PI * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = n as f64 / bins as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 99.9% quantile of chi-square with 19 degrees of freedom.
    assert!(chi2 < 43.82, "chi-square {chi2}");
}

#[test]
fn uniform_direction_second_moment() {
    let config = McConfig::new(100_000, 3);
    let est = estimate(&config, Exec::Parallel, |rng| {
        sample_uniform_direction(62, rng)[0].powi(2)
    })
    .unwrap();
    assert_within(&est, 1.0 / 63.0, "E[u0^2] on S^62");
}

#[test]
fn transverse_direction_is_isotropic() {
    let d = 4;
    let m = table(d, 0.5);
    let samples = sample_states(&m, &McConfig::new(100_000, 4), Exec::Parallel).unwrap();
    let dirs: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let tail = &s.coords()[1..];
            let norm = tail.iter().map(|x| x * x).sum::<f64>().sqrt();
            tail.iter().map(|x| x / norm).collect()
        })
        .collect();
    let n = dirs.len() as f64;
    let k = 2 * d as usize - 1;
    let mean_se = |f: &dyn Fn(&[f64]) -> f64| {
        let vals: Vec<f64> = dirs.iter().map(|u| f(u)).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    for i in 0..k {
        let (mean, se) = mean_se(&|u| u[i]);
        assert!(
            mean.abs() <= 3.0 * se,
            "coordinate {i}: mean {mean} (se {se})"
        );
        for j in i + 1..k {
            let (mean, se) = mean_se(&|u| u[i] * u[j]);
            assert!(
                mean.abs() <= 3.0 * se,
                "pair ({i}, {j}): mean {mean} (se {se})"
            );
        }
    }
}

#[test]
fn sampled_states_have_unit_norm() {
    for (d, sigma) in [(1, 0.3), (2, 0.0), (32, 0.99)] {
        let m = table(d, sigma);
        let samples = sample_states(&m, &McConfig::new(2_000, 5), Exec::Sequential).unwrap();
        assert!(samples.iter().all(|s| (s.norm_sqr() - 1.0).abs() < 1e-12));
    }
}

#[test]
fn empirical_estimators() {
    let e0 = StateVector::basis(4, 0);
    let minus = StateVector::new(e0.coords().iter().map(|x| -x).collect()).unwrap();
    assert_eq!(
        empirical_variance(std::slice::from_ref(&e0)).unwrap().mean,
        0.0
    );
    assert_eq!(empirical_variance(&[e0.clone(), minus]).unwrap().mean, 2.0);
    assert_eq!(
        empirical_fidelity(&[StateVector::basis(4, 1)])
            .unwrap()
            .mean,
        1.0
    );
    assert_eq!(
        empirical_fidelity(&[StateVector::basis(4, 2)])
            .unwrap()
            .mean,
        0.0
    );
    assert!(empirical_variance(&[]).is_err());

    let uniform4 =
        sample_states(&table(4, 0.0), &McConfig::new(100_000, 6), Exec::Parallel).unwrap();
    assert_within(
        &empirical_variance(&uniform4).unwrap(),
        2.0,
        "uniform variance, d=4",
    );
    let uniform32 =
        sample_states(&table(32, 0.0), &McConfig::new(100_000, 7), Exec::Parallel).unwrap();
    assert_within(
        &empirical_fidelity(&uniform32).unwrap(),
        1.0 / 32.0,
        "uniform F², d=32",
    );

    let n = IsotropicDensity::normal(0.9, 32).unwrap();
    let samples = sample_states(
        &sampling_table(&n).unwrap(),
        &McConfig::new(100_000, 8),
        Exec::Parallel,
    )
    .unwrap();
    assert_within(
        &empirical_fidelity(&samples).unwrap(),
        0.8159375,
        "NORMAL(0.9) F², d=32",
    );
    assert_within(
        &empirical_variance(&samples).unwrap(),
        n.variance_of().unwrap().v,
        "NORMAL(0.9) variance, d=32",
    );
}

fn chain_estimate(m: &PolarMarginal, steps: u32, config: &McConfig) -> [McEstimate; 2] {
    let d = m.density().d() as usize;
    estimate_many(config, Exec::Parallel, |rng| {
        let mut state = StateVector::basis(d, 0);
        for _ in 0..steps {
            state = compose_error(&state, m, rng);
        }
        [state.variance_term(), state.fidelity_term()]
    })
    .unwrap()
}

#[test]
fn composition_variance_law() {
    let d = 4;
    let densities = [
        IsotropicDensity::uniform(d).unwrap(),
        IsotropicDensity::normal(0.5, d).unwrap(),
        IsotropicDensity::normal(0.9, d).unwrap(),
        IsotropicDensity::uniform_cap(PI / 4.0, d).unwrap(),
    ];
    for (i, density) in densities.iter().enumerate() {
        let m = sampling_table(density).unwrap();
        let v1 = density.variance_of().unwrap().v;
        for steps in [2, 3, 5] {
            let config = McConfig::new(40_000, 100 + 10 * i as u64 + u64::from(steps));
            let [v, _] = chain_estimate(&m, steps, &config);
            let expected = variance_compose_n(v1, steps).unwrap();
            assert_within(&v, expected, &format!("{} x{steps}", density.descriptor()));
        }
    }
}

#[test]
fn composed_normal_fidelity() {
    let m = table(32, 0.9f64.powf(0.2));
    let [_, f] = chain_estimate(&m, 5, &McConfig::new(100_000, 9));
    assert_within(&f, 0.8159375, "five composed NORMAL(0.9^(1/5)), d=32");
}

#[test]
fn composition_preserves_norm_and_identity() {
    let m = table(8, 0.7);
    let tiny = sampling_table(&IsotropicDensity::uniform_cap(1e-7, 8).unwrap()).unwrap();
    let mut rng = chunk_rng(10, 0);
    let mut state = StateVector::basis(8, 0);
    for _ in 0..50 {
        state = compose_error(&state, &m, &mut rng);
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        let next = compose_error(&state, &tiny, &mut rng);
        let dist: f64 = next
            .coords()
            .iter()
            .zip(state.coords())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 1e-6, "tiny error moved the state by {dist}");
    }
}

#[test]
fn dump_round_trip() {
    let density = IsotropicDensity::normal(0.4, 2).unwrap();
    let samples = sample_states(
        &sampling_table(&density).unwrap(),
        &McConfig::new(500, 12),
        Exec::Sequential,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.bin");
    write_sample_dump(&path, &samples, 12, &density).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 500 * 4 * 8);
    let (meta, back) = read_sample_dump(&path).unwrap();
    assert_eq!((meta.d, meta.n_samples, meta.seed), (2, 500, 12));
    assert_eq!(back, samples);
}

#[test]
fn syndrome_blocks_are_exchangeable() {
    let code = BlockCode::new(CodeParams::new(5, 1).unwrap());
    let m = table(32, 0.0);
    let probs: [McEstimate; 16] =
        estimate_many(&McConfig::new(100_000, 13), Exec::Parallel, |rng| {
            let p = code
                .syndrome_probabilities(&isoqec::sampler::sample_state(&m, rng))
                .unwrap();
            std::array::from_fn(|j| p[j])
        })
        .unwrap();
    // Sixteen simultaneous comparisons: Bonferroni-correct the 3-SE level
    // (two-sided 0.27% family-wise) to 3.76 SE per block.
    for (j, p) in probs.iter().enumerate() {
        let z = p.z_score(1.0 / 16.0);
        assert!(
            z <= 3.76,
            "P_{j}: {} ± {} (z = {z:.2})",
            p.mean,
            p.std_error
        );
    }

    let m = table(32, 0.6);
    let probs: [McEstimate; 16] =
        estimate_many(&McConfig::new(100_000, 14), Exec::Parallel, |rng| {
            let p = code
                .syndrome_probabilities(&isoqec::sampler::sample_state(&m, rng))
                .unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            std::array::from_fn(|j| p[j])
        })
        .unwrap();
    for j in 2..16 {
        let z = (probs[j].mean - probs[1].mean).abs() / combined_se(&probs[j], &probs[1]);
        assert!(z <= 3.76, "P_{j} vs P_1: z = {z}");
    }
    assert!(probs[0].mean > probs[1].mean);
}

#[test]
fn corrected_fidelity_examples() {
    let m = table(32, 0.9);
    let code = BlockCode::new(CodeParams::new(5, 1).unwrap());
    let config = McConfig::new(200_000, 15);
    let block =
        corrected_fidelity_mc(&m, &code, &config, Estimator::BlockSum, Exec::Parallel).unwrap();
    assert_within(&block, 0.905, "(5,1) NORMAL(0.9)");
    let sampled = corrected_fidelity_mc(
        &m,
        &code,
        &config,
        Estimator::SyndromeSampled,
        Exec::Parallel,
    )
    .unwrap();
    assert!((block.mean - sampled.mean).abs() <= 3.0 * combined_se(&block, &sampled));
    assert!(block.std_error < sampled.std_error);

    let u = table(32, 0.0);
    let code54 = BlockCode::new(CodeParams::new(5, 4).unwrap());
    let est =
        corrected_fidelity_mc(&u, &code54, &config, Estimator::BlockSum, Exec::Parallel).unwrap();
    assert_within(&est, 1.0 / 16.0, "(5,4) uniform");
}

#[test]
fn estimators_agree_and_correction_helps_across_grid() {
    for (n, mm) in [(3, 1), (4, 2), (5, 1), (5, 4)] {
        let p = CodeParams::new(n, mm).unwrap();
        let code = BlockCode::new(p);
        for (i, sigma) in [0.0, 0.5, 0.9].into_iter().enumerate() {
            let m = table(p.d as u32, sigma);
            let config = McConfig::new(20_000, 1000 * u64::from(n) + 10 * u64::from(mm) + i as u64);
            let a = corrected_fidelity_mc(&m, &code, &config, Estimator::BlockSum, Exec::Parallel)
                .unwrap();
            let b = corrected_fidelity_mc(
                &m,
                &code,
                &config.derive(1),
                Estimator::SyndromeSampled,
                Exec::Parallel,
            )
            .unwrap();
            let raw = raw_fidelity_mc(&m, &config.derive(2), Exec::Parallel).unwrap();
            let label = format!("({n},{mm}) sigma={sigma}");
            assert!(
                (a.mean - b.mean).abs() <= 3.0 * combined_se(&a, &b),
                "{label}: estimators"
            );
            assert!(
                a.mean >= raw.mean - 3.0 * combined_se(&a, &raw),
                "{label}: ordering"
            );
        }
    }
}

#[test]
fn raw_fidelity_examples() {
    let config = McConfig::new(200_000, 16);
    let est = raw_fidelity_mc(&table(32, 0.9), &config, Exec::Parallel).unwrap();
    assert_within(&est, 0.8159375, "d=32 NORMAL(0.9)");
    let s = 0.9f64.powf(0.2);
    let est = raw_fidelity_mc(&table(2, s), &config, Exec::Parallel).unwrap();
    assert_within(&est, (1.0 + s * s) / 2.0, "d=2 NORMAL(0.9^(1/5))");
    let est = raw_fidelity_mc(&table(2, 0.0), &config, Exec::Parallel).unwrap();
    assert_within(&est, 0.5, "d=2 uniform");
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let m = marginal_polar(&IsotropicDensity::normal(0.8, 8).unwrap()).unwrap();
    let config = McConfig::new(30_000, 17).with_chunk_size(1000);
    let seq = raw_fidelity_mc(&m, &config, Exec::Sequential).unwrap();
    for workers in [2, 3, 4] {
        let par = isoqec::exec::with_workers(workers, |exec| raw_fidelity_mc(&m, &config, exec))
            .unwrap()
            .unwrap();
        assert_eq!(seq.mean.to_bits(), par.mean.to_bits());
        assert_eq!(seq.std_error.to_bits(), par.std_error.to_bits());
    }
}
