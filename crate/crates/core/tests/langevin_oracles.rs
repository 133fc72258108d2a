use pspin_core::langevin::*;
use pspin_core::mesh::Triangle;
use pspin_core::model::{MixturePolynomial, SoftPotential};
use pspin_core::twotime::solve_spherical;
use pspin_core::Error;

fn sample_variance(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

#[test]
fn coupling_variances_match_multiplicities() {
    let draws = 100_000;
    let p2 = MixturePolynomial::pure(2, 1.0).unwrap();
    let p3 = MixturePolynomial::pure(3, 1.0).unwrap();
    let mut diag2 = Vec::with_capacity(draws);
    let mut off2 = Vec::with_capacity(draws);
    let mut distinct3 = Vec::with_capacity(draws);
    let mut pair3 = Vec::with_capacity(draws);
    for seed in 0..draws as u64 {
        let d = sample_disorder(&p2, 2, seed).unwrap();
        diag2.push(d.coupling(2, &[1, 1]).unwrap());
        off2.push(d.coupling(2, &[0, 1]).unwrap());
        let d = sample_disorder(&p3, 3, seed).unwrap();
        distinct3.push(d.coupling(3, &[0, 1, 2]).unwrap());
        pair3.push(d.coupling(3, &[2, 0, 2]).unwrap());
    }
    for (values, target) in [
        (&diag2, 2.0 / 2.0),
        (&off2, 1.0 / 2.0),
        (&distinct3, 1.0 / 9.0),
        (&pair3, 2.0 / 9.0),
    ] {
        let v = sample_variance(values);
        assert!(
            (v / target - 1.0).abs() < 0.03,
            "variance {v}, target {target}"
        );
    }
}

#[test]
fn energy_covariance_is_n_nu() {
    let mix = MixturePolynomial::new([(2, 1.0), (3, 1.2), (4, 0.8)]).unwrap();
    let n = 4;
    let x = [1.2, -0.4, 0.9, 1.1];
    let y = [0.8, 0.3, 1.3, -0.2];
    let overlap = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let samples = 40_000;
    let prods: Vec<f64> = (0..samples as u64)
        .map(|s| {
            let d = sample_disorder(&mix, n, 1_000_000 + s).unwrap();
            d.hamiltonian(&x) * d.hamiltonian(&y)
        })
        .collect();
    let mean = prods.iter().sum::<f64>() / samples as f64;
    let se = (sample_variance(&prods) / samples as f64).sqrt();
    let target = n as f64 * mix.nu(overlap);
    assert!(
        (mean - target).abs() < 5.0 * se,
        "{mean} vs {target} (se {se})"
    );
}

#[test]
fn gradient_matches_finite_differences() {
    let mix = MixturePolynomial::new([(2, 0.5), (3, 1.0), (4, 0.7), (5, 0.3)]).unwrap();
    let n = 10;
    let d = sample_disorder(&mix, n, 42).unwrap();
    let x: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7).sin() + 0.3).collect();
    let mut g = vec![0.0; n];
    d.gradient(&x, &mut g);
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let step = 1e-5;
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        let fd = (d.hamiltonian(&xp) - d.hamiltonian(&xm)) / (2.0 * step);
        assert!(
            (fd - g[i]).abs() / scale < 1e-6,
            "component {i}: {fd} vs {}",
            g[i]
        );
    }
    let mut g2 = vec![0.0; n];
    d.scaled(2.0).gradient(&x, &mut g2);
    for (a, b) in g.iter().zip(&g2) {
        assert_eq!(2.0 * a, *b);
    }
}

fn small_params(seed: u64) -> LangevinParams {
    LangevinParams {
        n: 60,
        dt: 0.002,
        horizon: 1.0,
        replicas: 3,
        seed,
        save_stride: 50,
    }
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let mix = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
    let pot = SoftPotential::new(100.0, 1).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&mix, 0.05, pot, &small_params(9)).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, simulate(&mix, 0.05, pot, &small_params(9)).unwrap());
    assert_ne!(
        a.c_mean,
        simulate(&mix, 0.05, pot, &small_params(10)).unwrap().c_mean
    );
}

#[test]
fn observables_respect_bounds() {
    let mix = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
    let pot = SoftPotential::new(100.0, 1).unwrap();
    let params = LangevinParams {
        n: 100,
        horizon: 2.0,
        replicas: 4,
        save_stride: 25,
        ..small_params(5)
    };
    let run = simulate(&mix, 0.1, pot, &params).unwrap();
    let slack = 1.0 + 5.0 * (2.0 / params.n as f64).sqrt();
    for (c, chi) in run.replica_c.iter().zip(&run.replica_chi) {
        for a in 0..run.times.len() {
            let k = c.get(a, a);
            assert!((0.7..=1.5).contains(&k), "K_N = {k}");
            for b in 0..=a {
                let t = run.times[b];
                assert!(chi.get(a, b).powi(2) <= k * t * slack + 1e-12);
            }
        }
    }
    assert_eq!(run.times.len(), 41);
    assert_eq!(run.k_mean().len(), 41);
}

#[test]
fn comparison_against_its_own_grid_is_zero() {
    let mix = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
    let grid = solve_spherical(&mix, 0.05, 0.01, 2.0).unwrap();
    let stride = 10;
    let times: Vec<f64> = (0..=20).map(|m| (m * stride) as f64 * 0.01).collect();
    let points = times.len();
    let c = Triangle::from_fn(points, |a, b| grid.correlation(a * stride, b * stride));
    let chi = Triangle::from_fn(points, |a, b| {
        grid.integrated_response(a * stride, b * stride)
    });
    let run = LangevinRun {
        params: LangevinParams {
            n: 2,
            dt: 0.01,
            horizon: 2.0,
            replicas: 1,
            seed: 0,
            save_stride: stride,
        },
        beta: 0.05,
        times,
        replica_c: vec![c.clone()],
        replica_chi: vec![chi.clone()],
        c_mean: c,
        c_se: Triangle::zeros(points),
        chi_mean: chi,
        chi_se: Triangle::zeros(points),
    };
    let d = compare_to_limit(&run, &grid).unwrap();
    assert!(
        d.sup() < 1e-14 && d.c_rms < 1e-14 && d.chi_rms < 1e-14,
        "{d:?}"
    );
    let short = solve_spherical(&mix, 0.05, 0.01, 1.0).unwrap();
    assert!(matches!(
        compare_to_limit(&run, &short),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn parameter_guards() {
    let mix = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
    let pot = SoftPotential::new(100.0, 1).unwrap();
    let stiff = LangevinParams {
        dt: 0.01,
        ..small_params(1)
    };
    assert!(matches!(
        simulate(&mix, 0.05, pot, &stiff),
        Err(Error::InvalidArgument(_))
    ));
    let big = LangevinParams {
        n: 400,
        ..small_params(1)
    };
    assert!(matches!(
        simulate(&mix, 0.05, pot, &big),
        Err(Error::ResourceLimit(_))
    ));
    let p4 = MixturePolynomial::pure(4, 1.0).unwrap();
    assert!(simulate(&p4, 0.05, pot, &small_params(1)).is_err());
    let zero = LangevinParams {
        replicas: 0,
        ..small_params(1)
    };
    assert!(simulate(&mix, 0.05, pot, &zero).is_err());
}
