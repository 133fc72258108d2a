use std::collections::HashSet;

use pspin_core::mesh::Triangle;
use pspin_core::model::{Covariance, MixturePolynomial};
use pspin_core::noncrossing::*;

/// Every fixed-point-free involution of `{1..2n}` without crossing pairs.
fn brute_force(n: usize) -> HashSet<Vec<(usize, usize)>> {
    fn go(
        free: &mut Vec<usize>,
        acc: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if free.is_empty() {
            let mut p = acc.clone();
            p.sort();
            out.push(p);
            return;
        }
        let a = free.remove(0);
        for k in 0..free.len() {
            let b = free.remove(k);
            acc.push((a, b));
            go(free, acc, out);
            acc.pop();
            free.insert(k, b);
        }
        free.insert(0, a);
    }
    let mut all = Vec::new();
    go(&mut (1..=2 * n).collect(), &mut Vec::new(), &mut all);
    all.into_iter()
        .filter(|p| {
            p.iter()
                .all(|&(a, b)| p.iter().all(|&(c, d)| !(a < c && c < b && b < d)))
        })
        .collect()
}

#[test]
fn enumeration_matches_brute_force() {
    for n in 1..=5 {
        let got: HashSet<_> = enumerate_nc(n).unwrap().iter().map(|p| p.pairs()).collect();
        assert_eq!(got, brute_force(n), "n = {n}");
    }
    assert_eq!(brute_force(3).len(), 5);
    assert_eq!(brute_force(5).len(), 42);
}

#[test]
fn enumeration_counts_and_structure() {
    for n in 1..=8 {
        let all = enumerate_nc(n).unwrap();
        assert_eq!(all.len() as u128, catalan(n as u32).unwrap());
        let distinct: HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), all.len());
        for p in &all {
            assert!(p.is_noncrossing());
            assert_eq!(p.cr().len(), n);
            for i in 1..=2 * n {
                assert_ne!(p.sigma(i), i);
                assert_eq!(p.sigma(p.sigma(i)), i);
            }
        }
    }
}

#[test]
fn catalan_bounds() {
    assert_eq!(catalan(0).unwrap(), 1);
    assert_eq!(catalan(4).unwrap(), enumerate_nc(4).unwrap().len() as u128);
    for n in 0..=20u32 {
        assert!(catalan(n).unwrap() <= 4u128.pow(n));
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn constant_kernel_series_oracle() {
    // C ≡ 1 with ν'' ≡ 1: H(s,t) = Σ Catalan(n) β^{2n} (s-t)^{2n}/(2n)!
    let mix = MixturePolynomial::pure(2, 1.0).unwrap();
    let (h, beta) = (0.01, 0.3);
    let c = Triangle::from_fn(201, |_, _| 1.0);
    let oracle: f64 = (0..=30)
        .map(|n| {
            catalan(n as u32).unwrap() as f64 * (beta * beta * 4.0f64).powi(n as i32)
                / factorial(2 * n)
        })
        .sum();
    let (value, tail) = h_series(&c, &mix, beta, h, 200, 0, 8).unwrap();
    assert!((value - oracle).abs() < 1e-5, "{value} vs {oracle}");
    assert!(tail < 1e-8);
    let ode = h_ode(&c, &mix, beta, h).unwrap();
    assert!((ode.get(200, 0) - oracle).abs() < 1e-5);
    // stationary kernel: H depends on s - t only
    for lag in [10, 50, 120] {
        let first = ode.get(lag, 0);
        for j in [5, 30, 200 - lag] {
            assert!((ode.get(j + lag, j) - first).abs() < 1e-12);
        }
    }
}

fn exp_kernel(points: usize, h: f64) -> Triangle {
    Triangle::from_fn(points, |i, j| (-0.5 * (i - j) as f64 * h).exp())
}

#[test]
fn ode_and_series_agree_on_two_unit_grids() {
    let h = 0.01;
    for mix in [
        MixturePolynomial::pure(3, 6f64.sqrt()).unwrap(),
        MixturePolynomial::new([(2, 0.5), (3, 1.0)]).unwrap(),
    ] {
        let c = exp_kernel(201, h);
        let ode = h_ode(&c, &mix, 0.3, h).unwrap();
        let series = h_series_grid(&c, &mix, 0.3, h, 8).unwrap();
        let gap = ode.values.sup_distance(&series.values);
        assert!(
            gap < series.tail_bound.max(1e-8),
            "gap {gap}, tail {}",
            series.tail_bound
        );
    }
}

#[test]
fn series_respects_semicircle_bound() {
    let mix = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
    let (h, beta) = (0.02, 0.3);
    let c = exp_kernel(101, h);
    let series = h_series_grid(&c, &mix, beta, h, 8).unwrap();
    let c1 = semicircle_c1();
    let r = beta * mix.nu_d2(c.max()).sqrt();
    for i in 0..101 {
        for j in 0..=i {
            let tau = (i - j) as f64 * h;
            let bound = c1 * (1.0 + r * tau).powf(-1.5) * (2.0 * r * tau).exp();
            assert!(series.get(i, j) <= bound + 1e-12);
        }
    }
}

#[test]
fn ode_is_monotone_and_second_order() {
    let mix = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
    let beta = 0.3;
    let coarse = h_ode(&exp_kernel(41, 0.05), &mix, beta, 0.05).unwrap();
    let mid = h_ode(&exp_kernel(81, 0.025), &mix, beta, 0.025).unwrap();
    let fine = h_ode(&exp_kernel(161, 0.0125), &mix, beta, 0.0125).unwrap();
    for i in 0..161 {
        for j in 0..=i {
            assert!(fine.get(i, j) >= 1.0);
            if i > j {
                assert!(fine.get(i, j) >= fine.get(i - 1, j));
            }
        }
    }
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    for i in 0..41 {
        for j in 0..=i {
            e1 = e1.max((coarse.get(i, j) - mid.get(2 * i, 2 * j)).abs());
            e2 = e2.max((mid.get(2 * i, 2 * j) - fine.get(4 * i, 4 * j)).abs());
        }
    }
    let order = (e1 / e2).log2();
    assert!(order >= 1.8, "order {order}");
}

#[test]
fn rejects_bad_kernels() {
    let mix = MixturePolynomial::pure(2, 1.0).unwrap();
    let neg = Triangle::from_fn(3, |_, _| -1.0);
    assert!(h_ode(&neg, &mix, 0.1, 0.1).is_err());
    assert!(h_ode(&exp_kernel(3, 0.1), &mix, -1.0, 0.1).is_err());
    assert!(h_series(&exp_kernel(3, 0.1), &mix, 0.1, 0.1, 1, 2, 3).is_err());
}
