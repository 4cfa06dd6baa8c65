//! Randomized invariants across the public API.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spectral_lab::ensembles::{
    build_variance_profile, check_doubly_stochastic, sample_matrix, truncate_atom, AtomFamily, AtomSpec,
    EnsembleSpec,
};
use spectral_lab::hermitization::{dilate, shift};
use spectral_lab::metrics::{
    disk_law_distance, kolmogorov_distance, log_potential, log_window_bound_check, truncated_log_split,
    uniform_disk_log_potential, EmpiricalMeasure,
};
use spectral_lab::spectra::{
    empirical_stieltjes, hermitian_eigen, hermitian_spectrum, interval_count, singular_values,
    singular_values_from_dilation,
};
use spectral_lab::{CMat, C64};

fn random_matrix(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMat::from_fn(n, n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

fn measure() -> impl Strategy<Value = EmpiricalMeasure> {
    proptest::collection::vec((0.0..5.0f64, 0.05..1.0f64), 1..12).prop_map(|pairs| {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let (pts, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().map(|(x, w)| ((x * 4.0).round() / 4.0, w / total)).unzip();
        EmpiricalMeasure::new(pts, w).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kolmogorov_is_a_metric(a in measure(), b in measure(), c in measure()) {
        let ab = kolmogorov_distance(&a, &b);
        prop_assert_eq!(ab, kolmogorov_distance(&b, &a));
        prop_assert_eq!(kolmogorov_distance(&a, &a), 0.0);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&ab));
        let ac = kolmogorov_distance(&a, &c);
        let cb = kolmogorov_distance(&c, &b);
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn log_split_partitions_the_potential(
        sv in proptest::collection::vec(1e-6..1e3f64, 1..40),
        threshold in 1e-7..1e4f64,
    ) {
        let split = truncated_log_split(&sv, threshold).unwrap();
        let total = log_potential(&sv).unwrap();
        prop_assert!((split.head + split.tail - total).abs() <= 1e-12 * (1.0 + total.abs()));
        prop_assert_eq!(split.tail_count, sv.iter().filter(|s| **s <= threshold).count());
    }

    #[test]
    fn interval_counts_add_up_over_a_partition(
        eigs in proptest::collection::vec(-4.0..4.0f64, 0..60),
        cuts in proptest::collection::vec(-3.0..3.0f64, 0..6),
    ) {
        let k = 3.0;
        let mut edges = vec![-k];
        let mut inner = cuts.clone();
        inner.sort_by(f64::total_cmp);
        edges.extend(inner);
        edges.push(k);
        // half-open pieces [e_i, e_{i+1}) plus the closed last piece
        let mut total = 0;
        for w in edges.windows(2) {
            let closed = interval_count(&eigs, w[0], w[1]).unwrap();
            let right = eigs.iter().filter(|l| **l == w[1]).count();
            total += closed - right;
        }
        total += eigs.iter().filter(|l| **l == k).count();
        prop_assert_eq!(total, interval_count(&eigs, -k, k).unwrap());
    }

    #[test]
    fn dilation_spectrum_is_symmetric(n in 1usize..12, seed in any::<u64>(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let x = random_matrix(n, seed);
        let y = dilate(&shift(&x, C64::new(re, im)).unwrap()).unwrap();
        let spec = hermitian_spectrum(&y, false).unwrap();
        let len = spec.values.len();
        for k in 0..len {
            prop_assert!((spec.values[k] + spec.values[len - 1 - k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn dilation_stieltjes_on_imaginary_axis_is_imaginary(n in 1usize..10, seed in any::<u64>(), tau in 0.01..5.0f64) {
        let x = random_matrix(n, seed);
        let y = dilate(&shift(&x, C64::new(0.3, -0.1)).unwrap()).unwrap();
        let m = empirical_stieltjes(&y, C64::new(0.0, tau)).unwrap();
        prop_assert!(m.re.abs() <= 1e-9);
        prop_assert!(m.im > 0.0);
    }
}

#[test]
fn singular_values_match_dilation_up_to_200() {
    for (k, n) in [1usize, 7, 50, 200].into_iter().enumerate() {
        let x = random_matrix(n, 100 + k as u64);
        for z in [C64::new(0.0, 0.0), C64::new(0.5, 0.5)] {
            let xz = shift(&x, z).unwrap();
            let direct = singular_values(&xz).unwrap();
            let via = singular_values_from_dilation(&dilate(&xz).unwrap()).unwrap();
            let scale = direct[0].max(1.0);
            for (a, b) in direct.iter().zip(&via) {
                assert!((a - b).abs() <= 1e-9 * scale, "n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn squared_singular_values_are_eigenvalues_of_gram() {
    for (k, n) in [3usize, 30, 100].into_iter().enumerate() {
        let m = random_matrix(n, 7 + k as u64);
        let sv = singular_values(&m).unwrap();
        let gram = &m * m.adjoint();
        let mut eig = hermitian_eigen(&gram, false).unwrap().values;
        eig.reverse();
        for (s, l) in sv.iter().zip(&eig) {
            assert!((s * s - l).abs() <= 1e-8 * l.abs().max(sv[0] * sv[0] * 1e-6), "{} vs {l}", s * s);
        }
    }
}

#[test]
fn every_builtin_profile_is_doubly_stochastic() {
    let specs = [
        EnsembleSpec::block_band(9, 3),
        EnsembleSpec::block_band(12, 6),
        EnsembleSpec::block_band(8, 8),
        EnsembleSpec::block_band(1024, 256),
        EnsembleSpec::periodic_band(10, 5),
        EnsembleSpec::periodic_band(7, 7),
        EnsembleSpec::periodic_band(1024, 257),
        EnsembleSpec::iid_gaussian(4),
        EnsembleSpec::iid_gaussian(1000),
        EnsembleSpec::product_linearization(100, 3),
        EnsembleSpec::product_linearization(5, 1),
    ];
    for spec in specs {
        let p = build_variance_profile(&spec).unwrap();
        let r = check_doubly_stochastic(&p, 1e-12);
        assert!(r.pass, "{spec:?}: {r:?}");
    }
}

#[test]
fn per_entry_variance_matches_profile() {
    let trials = 10_000u64;
    for (atom, fourth) in [
        (AtomSpec::real_gaussian(), 3.0),
        (AtomSpec::new(AtomFamily::UniformSymmetric), 9.0 / 5.0),
        (AtomSpec::complex_gaussian(), 2.0),
    ] {
        let spec = EnsembleSpec::periodic_band(6, 3).with_atom(atom.clone());
        let p = build_variance_profile(&spec).unwrap();
        let n = p.n();
        let mut sums = vec![0.0f64; n * n];
        for t in 0..trials {
            let x = sample_matrix(&spec, 77, t).unwrap().values;
            for i in 0..n {
                for j in 0..n {
                    sums[i * n + j] += x[(i, j)].norm_sqr();
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let b2 = p.get(i, j).powi(2);
                let mean = sums[i * n + j] / trials as f64;
                // Var |ξ|² = E|ξ|⁴ − 1
                let se = b2 * ((fourth - 1.0) / trials as f64).sqrt();
                if b2 == 0.0 {
                    assert_eq!(mean, 0.0);
                } else {
                    assert!((mean - b2).abs() <= 5.0 * se, "{atom:?} ({i},{j}): {mean} vs {b2} (se {se})");
                }
            }
        }
    }
}

#[test]
fn truncated_symmetric_atoms_stay_centered() {
    let samples = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (family, d) in [
        (AtomFamily::RealGaussian, 0.7),
        (AtomFamily::UniformSymmetric, 1.0),
        (AtomFamily::Rademacher, 2.0),
        (AtomFamily::BernoulliSymmetric { p: 0.25 }, 3.0),
    ] {
        let atom = truncate_atom(&AtomSpec::new(family), d).unwrap();
        let mean: f64 = (0..samples).map(|_| atom.draw(&mut rng).re).sum::<f64>() / samples as f64;
        assert!(mean.abs() <= 3.0 / (samples as f64).sqrt(), "{family:?}: {mean}");
    }
}

#[test]
fn log_window_bound_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let measure = |rng: &mut ChaCha8Rng| {
        let pts: Vec<f64> = (0..20).map(|_| rng.random_range(0.1..10.0)).collect();
        let w: Vec<f64> = (0..20).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        EmpiricalMeasure::new(pts, w.into_iter().map(|v| v / total).collect()).unwrap()
    };
    for _ in 0..1000 {
        let mu = measure(&mut rng);
        let nu = measure(&mut rng);
        let r = log_window_bound_check(&mu, &nu, 0.5, 5.0).unwrap();
        assert!(r.holds, "{r:?}");
    }
}

fn uniform_disk(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let r = rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(r, theta)
        })
        .collect()
}

#[test]
fn disk_distance_of_uniform_points_decays() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1_000usize, 10_000] {
        let bound = 3.0 / (n as f64).sqrt();
        let failures = (0..20)
            .filter(|_| disk_law_distance(&uniform_disk(n, &mut rng)).unwrap() > bound)
            .count();
        assert!(failures <= 1, "n={n}: {failures} of 20 above {bound}");
    }
}

#[test]
fn ginibre_log_potential_matches_disk() {
    let n = 512;
    let spec = EnsembleSpec::iid_gaussian(n);
    for z in [C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.9, 0.0)] {
        let target = uniform_disk_log_potential(z);
        let good = (0..20)
            .filter(|&t| {
                let x = sample_matrix(&spec, 2024, t).unwrap().values;
                let sv = singular_values(&shift(&x, z).unwrap()).unwrap();
                (log_potential(&sv).unwrap() - target).abs() <= 0.1
            })
            .count();
        assert!(good >= 18, "z={z}: {good}/20");
    }
}
