use pspin_core::model::*;

fn two_spin() -> MixturePolynomial {
    MixturePolynomial::pure(2, 1.0).unwrap()
}

fn three_spin() -> MixturePolynomial {
    MixturePolynomial::pure(3, 6f64.sqrt()).unwrap()
}

fn mixed() -> MixturePolynomial {
    MixturePolynomial::new([(2, 0.4), (3, 1.0), (4, 0.7)]).unwrap()
}

/// Dense scan of `h` followed by golden-section refinement.
fn beta_c_oracle(mix: &MixturePolynomial) -> (f64, f64) {
    let m = 100_000;
    let mut best = (0.0, mix.h(0.0));
    for k in 1..m {
        let x = k as f64 / m as f64;
        let v = mix.h(x);
        if v >= best.1 {
            best = (x, v);
        }
    }
    if best.0 == 0.0 {
        return (1.0 / (2.0 * best.1.sqrt()), 0.0);
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best.0 - 1.0 / m as f64, best.0 + 1.0 / m as f64);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if mix.h(c) > mix.h(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    (1.0 / (2.0 * mix.h(x).sqrt()), x)
}

/// Largest root of `4β²g(x) - 1` by a dense downward scan and bisection.
fn q_oracle(mix: &MixturePolynomial, beta: f64) -> f64 {
    let f = |x: f64| 4.0 * beta * beta * mix.g(x) - 1.0;
    let m = 100_000;
    for k in (0..m).rev() {
        let (lo, hi) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
        if f(lo) >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f(mid) >= 0.0 {
                    a = mid
                } else {
                    b = mid
                }
            }
            return a;
        }
    }
    0.0
}

#[test]
fn beta_c_matches_scan_oracle() {
    for mix in [two_spin(), three_spin(), mixed()] {
        let (bc, x) = beta_c(&mix, DEFAULT_TOL).unwrap();
        let (bo, xo) = beta_c_oracle(&mix);
        assert!((bc - bo).abs() < 1e-9, "{bc} vs {bo}");
        assert!((x - xo).abs() < 1e-6, "{x} vs {xo}");
        assert!(1.0 / (4.0 * bc * bc) >= mix.nu_d2(0.0));
    }
    let (bc, x) = beta_c(&two_spin(), DEFAULT_TOL).unwrap();
    assert!((bc - 0.5).abs() < 1e-12 && x == 0.0);
    let (bc, x) = beta_c(&three_spin(), DEFAULT_TOL).unwrap();
    assert!((bc - 1.0 / 3f64.sqrt()).abs() < 1e-9 && (x - 0.5).abs() < 1e-9);
}

#[test]
fn q_matches_bisection_oracle() {
    for mix in [two_spin(), three_spin(), mixed()] {
        for beta in [0.3, 0.55, 0.7, 1.0, 1.5, 3.0] {
            let q = q_of_beta(&mix, beta, DEFAULT_TOL).unwrap();
            assert!((q.q - q_oracle(&mix, beta)).abs() < 1e-9, "beta {beta}");
        }
    }
    assert!((q_of_beta(&two_spin(), 1.0, DEFAULT_TOL).unwrap().q - 0.5).abs() < 1e-12);
    let low = q_of_beta(&two_spin(), 0.25, DEFAULT_TOL).unwrap();
    assert_eq!((low.q, low.trivial), (0.0, true));
}

#[test]
fn q_at_critical_point_reaches_x_star() {
    for mix in [three_spin(), mixed()] {
        let (bc, x) = beta_c(&mix, DEFAULT_TOL).unwrap();
        let q = q_of_beta(&mix, bc, DEFAULT_TOL).unwrap().q;
        assert!(q >= x - 1e-6, "{q} < {x}");
        if x > 0.0 {
            assert!((mix.g(x) - mix.h(x)).abs() < 1e-9);
            assert!((mix.g(x) - 1.0 / (4.0 * bc * bc)).abs() < 1e-9);
        }
        assert_eq!(mix.g(0.0), mix.h(0.0));
    }
}

#[test]
fn three_spin_gamma_golden() {
    let mix = three_spin();
    let q = q_oracle(&mix, 0.7);
    let oracle = 2.0 * 0.49 * (mix.nu_d2(q) * (1.0 - q) - mix.nu_d1(q));
    let gamma = gamma_of_beta(&mix, 0.7).unwrap();
    assert!((gamma - oracle).abs() < 1e-9);
    assert!((gamma - 0.184_368_833_260_271_4).abs() < 1e-12);
    assert!(i_gamma(&mix, 0.7, gamma, 0.5).unwrap() > 0.0);
}

#[test]
fn gamma_and_i_gamma_phase_values() {
    assert_eq!(gamma_of_beta(&two_spin(), 0.3).unwrap(), 0.5);
    assert!(gamma_of_beta(&two_spin(), 1.0).unwrap().abs() < 1e-12);
    assert_eq!(i_gamma(&three_spin(), 0.3, 0.5, 0.5).unwrap(), 0.0);
    assert!(i_gamma(&two_spin(), 1.0, 0.0, 0.5).unwrap().abs() < 1e-12);
}

#[test]
fn profile_invariants_on_beta_grid() {
    for mix in [two_spin(), three_spin(), mixed()] {
        let (bc, x_star) = beta_c(&mix, DEFAULT_TOL).unwrap();
        let mut last_q = -1.0;
        for k in 1..=40 {
            let beta = bc * (0.05 * k as f64);
            let p = CriticalProfile::compute(&mix, beta, DEFAULT_TOL).unwrap();
            if beta < bc {
                assert_eq!((p.q, p.gamma, p.i_gamma), (0.0, 0.5, 0.0), "beta {beta}");
                assert!(p.exp_necessary);
                continue;
            }
            assert!(p.q >= x_star - 1e-9 && p.q < 1.0);
            assert!(p.q > last_q, "q not increasing at {beta}");
            last_q = p.q;
            let b2 = beta * beta;
            let alt = p.gamma - 0.5 + 2.0 * b2 * p.q * mix.nu_d1(p.q);
            assert!((p.i_gamma - alt).abs() < 1e-10);
            let rhs = 4.0 * b2 * (1.0 - p.q) * (mix.nu_d2(p.q) - mix.nu_d1(p.q)) - 1.0;
            assert!((2.0 * p.i_gamma - rhs).abs() < 1e-8);
        }
    }
}

#[test]
fn d_infinity_postconditions() {
    let tol = DEFAULT_TOL;
    for mix in [two_spin(), three_spin(), mixed()] {
        for beta in [0.2, 0.6, 0.9, 1.4] {
            let gamma = gamma_of_beta(&mix, beta).unwrap();
            let phi = Phi::mixture(&mix, beta, gamma);
            let d = d_infinity(&phi, 0.5, tol).unwrap();
            assert!(phi.value(d) * (1.0 - d) >= 0.5 - 10.0 * tol);
            for k in 0..=1000 {
                let x = k as f64 / 1000.0;
                if x > d + 10.0 * tol {
                    assert!(phi.value(x) * (1.0 - x) < 0.5);
                }
            }
        }
    }
    assert_eq!(d_infinity(&Phi::constant(0.5), 0.5, tol).unwrap(), 0.0);
    let two = Phi::mixture(&two_spin(), 1.0, 0.0);
    assert!((d_infinity(&two, 0.5, tol).unwrap() - 0.5).abs() < 1e-12);
    let below = Phi::mixture(&three_spin(), 0.3, 0.5);
    assert_eq!(d_infinity(&below, 0.5, tol).unwrap(), 0.0);
}

#[test]
fn exp_criteria_cases() {
    assert_eq!(
        exp_decay_criterion(&Phi::constant(0.5), 0.5, 0.0),
        (true, true)
    );
    let two = Phi::mixture(&two_spin(), 1.0, 0.0);
    assert_eq!(exp_decay_criterion(&two, 0.5, 0.5), (false, false));
    for beta in [0.1, 0.3, 0.5] {
        let phi = Phi::mixture(&three_spin(), beta, 0.5);
        assert!(exp_decay_criterion(&phi, 0.5, 0.0).1);
    }
}

#[test]
fn nu_prime_below_x_nu_second() {
    for mix in [two_spin(), three_spin(), mixed()] {
        assert_eq!(mix.nu_d1(0.0), 0.0);
        for k in 1..=1000 {
            let x = k as f64 / 1000.0;
            assert!(mix.nu_d1(x) <= x * mix.nu_d2(x));
            if mix.degree() > 2 {
                assert!(mix.nu_d1(x) < x * mix.nu_d2(x));
            }
        }
    }
}

#[test]
fn soft_potential_examples() {
    let p = SoftPotential::new(10.0, 1).unwrap();
    assert_eq!(p.eval(1.0, 1).unwrap(), 0.5);
    assert_eq!(
        SoftPotential::new(0.0, 1).unwrap().eval(2.0, 0).unwrap(),
        1.0
    );
    assert_eq!(
        SoftPotential::new(5.0, 2).unwrap().eval(1.0, 2).unwrap(),
        11.5
    );
    assert!(p.eval(1.0, 3).is_err());
    assert!(SoftPotential::new(1.0, 1)
        .unwrap()
        .check_against(&MixturePolynomial::pure(4, 1.0).unwrap())
        .is_err());
}
