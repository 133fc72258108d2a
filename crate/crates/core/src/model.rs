//! The p-spin mixture, the soft confining potential and the closed-form
//! critical constants of the dynamics.
//!
//! The mixture is `ν(r) = Σ_p a_p² / p! · r^p` over `p >= 2`. Everything the
//! limiting equations need from the disorder enters through `ν` and its first
//! three derivatives.

use crate::error::{invalid, Error, Result};
use crate::roots;

/// Default absolute accuracy for the critical-constant root searches.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Relative slack used when comparing the two sides of a strict inequality
/// that may hold with equality in exact arithmetic.
const STRICT_SLACK: f64 = 1e-9;

/// Covariance function of the disorder, seen through its derivatives.
///
/// The two-time solvers are generic over this trait so alternative kernels
/// can be substituted in tests.
pub trait Covariance: Sync {
    fn nu_d1(&self, r: f64) -> f64;
    fn nu_d2(&self, r: f64) -> f64;
    fn nu_d3(&self, r: f64) -> f64;

    /// `ψ(r) = ν'(r) + r ν''(r) = d/dr [r ν'(r)]`.
    fn psi(&self, r: f64) -> f64 {
        self.nu_d1(r) + r * self.nu_d2(r)
    }

    /// `ψ'(r) = 2ν''(r) + r ν'''(r)`.
    fn psi_d1(&self, r: f64) -> f64 {
        2.0 * self.nu_d2(r) + r * self.nu_d3(r)
    }

    /// Mixture terms `(p, a_p)` when the kernel is a mixture polynomial.
    fn mixture_terms(&self) -> Vec<(u32, f64)> {
        Vec::new()
    }
}

fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

/// Polynomial `ν(r) = Σ_p a_p²/p! r^p`, stored sparsely as `(p, a_p)` pairs
/// sorted by degree.
#[derive(Clone, Debug, PartialEq)]
pub struct MixturePolynomial {
    terms: Vec<(u32, f64)>,
    // a_p² / p!, aligned with `terms`
    coef: Vec<f64>,
}

impl MixturePolynomial {
    pub fn new(terms: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut terms: Vec<(u32, f64)> = terms.into_iter().collect();
        if terms.is_empty() {
            return invalid("mixture needs at least one term");
        }
        for &(p, a) in &terms {
            if p < 2 {
                return invalid(format!("mixture degree p={p} must be >= 2"));
            }
            if p > 40 {
                return invalid(format!("mixture degree p={p} is unreasonably large"));
            }
            if !a.is_finite() {
                return invalid(format!("coefficient a_{p} is not finite"));
            }
        }
        terms.sort_by_key(|&(p, _)| p);
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return invalid("duplicate degree in mixture terms");
        }
        let &(m, a_m) = terms.last().unwrap();
        if a_m == 0.0 {
            return invalid(format!("leading coefficient a_{m} must be non-zero"));
        }
        terms.retain(|&(_, a)| a != 0.0);
        let coef = terms.iter().map(|&(p, a)| a * a / factorial(p)).collect();
        Ok(MixturePolynomial { terms, coef })
    }

    /// Single-term mixture `a²/p! r^p`.
    pub fn pure(p: u32, a: f64) -> Result<Self> {
        Self::new([(p, a)])
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    /// Largest degree `m`.
    pub fn degree(&self) -> u32 {
        self.terms.last().unwrap().0
    }

    /// `order`-th derivative of `ν` at `r`, `order ∈ {0,1,2,3}`.
    pub fn eval(&self, r: f64, order: u32) -> Result<f64> {
        if order > 3 {
            return invalid(format!("derivative order {order} not in 0..=3"));
        }
        if !(r >= 0.0) {
            return invalid(format!("ν is evaluated on r >= 0, got {r}"));
        }
        Ok(self.derivative(r, order))
    }

    fn derivative(&self, r: f64, order: u32) -> f64 {
        self.terms
            .iter()
            .zip(&self.coef)
            .filter(|((p, _), _)| *p >= order)
            .map(|(&(p, _), &c)| {
                let falling: f64 = (0..order).map(|k| f64::from(p - k)).product();
                c * falling * r.powi((p - order) as i32)
            })
            .sum()
    }

    pub fn nu(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }

    /// `ν'(x)/x` as a polynomial (finite at `x = 0`, where it equals `ν''(0)`).
    fn nu_d1_over_x(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .zip(&self.coef)
            .map(|(&(p, _), &c)| c * f64::from(p) * x.powi(p as i32 - 2))
            .sum()
    }

    fn nu_d1_over_x_d1(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .zip(&self.coef)
            .filter(|((p, _), _)| *p > 2)
            .map(|(&(p, _), &c)| c * f64::from(p) * f64::from(p - 2) * x.powi(p as i32 - 3))
            .sum()
    }

    /// `h(x) = ν'(x)(1-x)/x`, with `h(0) = ν''(0)`.
    pub fn h(&self, x: f64) -> f64 {
        self.nu_d1_over_x(x) * (1.0 - x)
    }

    fn h_d1(&self, x: f64) -> f64 {
        self.nu_d1_over_x_d1(x) * (1.0 - x) - self.nu_d1_over_x(x)
    }

    /// `g(x) = ν''(x)(1-x)²`.
    pub fn g(&self, x: f64) -> f64 {
        self.nu_d2(x) * (1.0 - x).powi(2)
    }

    fn g_d1(&self, x: f64) -> f64 {
        self.nu_d3(x) * (1.0 - x).powi(2) - 2.0 * self.nu_d2(x) * (1.0 - x)
    }
}

impl Covariance for MixturePolynomial {
    fn nu_d1(&self, r: f64) -> f64 {
        self.derivative(r, 1)
    }
    fn nu_d2(&self, r: f64) -> f64 {
        self.derivative(r, 2)
    }
    fn nu_d3(&self, r: f64) -> f64 {
        self.derivative(r, 3)
    }
    fn mixture_terms(&self) -> Vec<(u32, f64)> {
        self.terms.clone()
    }
}

/// Soft confinement `f_L(r) = L(r-1)² + r^{2k}/(4k)` with `4k > m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftPotential {
    pub l: f64,
    pub k: u32,
}

impl SoftPotential {
    pub fn new(l: f64, k: u32) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return invalid(format!("L must be finite and >= 0, got {l}"));
        }
        if k == 0 {
            return invalid("k must be a positive integer");
        }
        Ok(SoftPotential { l, k })
    }

    /// Checks `4k > m` against a mixture.
    pub fn check_against(&self, mix: &MixturePolynomial) -> Result<()> {
        if 4 * self.k <= mix.degree() {
            return invalid(format!(
                "soft potential needs k > m/4 (k={}, m={})",
                self.k,
                mix.degree()
            ));
        }
        Ok(())
    }

    /// `order`-th derivative of `f_L`, `order ∈ {0,1,2}`.
    pub fn eval(&self, r: f64, order: u32) -> Result<f64> {
        match order {
            0 => Ok(self.f(r)),
            1 => Ok(self.f_d1(r)),
            2 => Ok(self.f_d2(r)),
            _ => invalid(format!("derivative order {order} not in 0..=2")),
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        let k = self.k as i32;
        self.l * (r - 1.0).powi(2) + r.powi(2 * k) / (4.0 * self.k as f64)
    }

    pub fn f_d1(&self, r: f64) -> f64 {
        let k = self.k as i32;
        2.0 * self.l * (r - 1.0) + 0.5 * r.powi(2 * k - 1)
    }

    pub fn f_d2(&self, r: f64) -> f64 {
        let k = self.k as i32;
        2.0 * self.l + 0.5 * f64::from(2 * self.k - 1) * r.powi(2 * k - 2)
    }
}

/// Kernel `φ` of the stationary equation `D' = -∫ φ(D(v)) D'(s-v) dv - b`.
#[derive(Clone, Debug, PartialEq)]
pub enum Phi {
    /// `φ(x) = γ + 2β² ν'(x)`.
    Mixture {
        gamma: f64,
        beta: f64,
        mix: MixturePolynomial,
    },
    /// `φ(x) = Σ_k c_k x^k`.
    Polynomial(Vec<f64>),
}

impl Phi {
    pub fn mixture(mix: &MixturePolynomial, beta: f64, gamma: f64) -> Self {
        Phi::Mixture {
            gamma,
            beta,
            mix: mix.clone(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Phi::Polynomial(vec![c])
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Phi::Mixture { gamma, beta, mix } => gamma + 2.0 * beta * beta * mix.nu_d1(x),
            Phi::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Phi::Mixture { beta, mix, .. } => 2.0 * beta * beta * mix.nu_d2(x),
            Phi::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self {
            Phi::Mixture { beta, mix, .. } => 2.0 * beta * beta * mix.nu_d3(x),
            Phi::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * x + (k * (k - 1)) as f64 * ck),
        }
    }

    /// Checks that `φ` is non-decreasing on `[0,1]` (sampled).
    pub fn check_monotone(&self) -> Result<()> {
        let bad = (0..=256)
            .map(|k| k as f64 / 256.0)
            .find(|&x| self.deriv(x) < -1e-12);
        match bad {
            Some(x) => invalid(format!("φ must be non-decreasing on [0,1]; φ'({x}) < 0")),
            None => Ok(()),
        }
    }

    /// Sampled convexity check on `[0,1]`.
    pub fn is_convex(&self) -> bool {
        (0..=256).all(|k| self.deriv2(k as f64 / 256.0) >= -1e-12)
    }
}

/// `D_∞ = sup{x ∈ [0,1] : φ(x)(1-x) >= b}`.
///
/// Fails with an infeasible-model error when the set is empty.
pub fn d_infinity(phi: &Phi, b: f64, tol: f64) -> Result<f64> {
    if !(b > 0.0) {
        return invalid(format!("b must be positive, got {b}"));
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let f = |x: f64| phi.value(x) * (1.0 - x) - b;
    let df = |x: f64| phi.deriv(x) * (1.0 - x) - phi.value(x);
    roots::sup_nonneg(&f, &df, tol)
        .ok_or_else(|| Error::InfeasibleModel(format!("sup_x φ(x)(1-x) < b = {b}")))
}

/// Inverse critical temperature and the largest maximiser `x*` of `h`.
pub fn beta_c(mix: &MixturePolynomial, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let h = |x: f64| mix.h(x);
    let dh = |x: f64| mix.h_d1(x);
    let (x_star, sup_h) = roots::largest_argmax(&h, &dh);
    Ok((1.0 / (2.0 * sup_h.sqrt()), x_star))
}

/// Result of the `q(β)` search; `trivial` flags an empty feasibility set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QValue {
    pub q: f64,
    pub trivial: bool,
}

/// `q(β) = sup{x ∈ [0,1] : 4β² ν''(x)(1-x)² >= 1}`, or `0` (flagged trivial)
/// when no `x` qualifies.
pub fn q_of_beta(mix: &MixturePolynomial, beta: f64, tol: f64) -> Result<QValue> {
    if !(beta >= 0.0) {
        return invalid(format!("beta must be >= 0, got {beta}"));
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let b2 = 4.0 * beta * beta;
    let f = |x: f64| b2 * mix.g(x) - 1.0;
    let df = |x: f64| b2 * mix.g_d1(x);
    // resolved to machine precision: γ(β) and the touching root of D_∞ inherit its error
    Ok(match roots::sup_nonneg(&f, &df, 0.0) {
        Some(q) => QValue { q, trivial: false },
        None => QValue {
            q: 0.0,
            trivial: true,
        },
    })
}

/// `γ(β) = 2β²[ν''(q)(1-q) - ν'(q)]` at `q = q(β)` for `β >= β_c`, and
/// `1/2` below `β_c`.
pub fn gamma_of_beta(mix: &MixturePolynomial, beta: f64) -> Result<f64> {
    let (bc, _) = beta_c(mix, DEFAULT_TOL)?;
    let qv = fdt_phase_q(mix, beta, bc, DEFAULT_TOL)?;
    Ok(gamma_at(mix, beta, qv))
}

/// `q(β)` with the high-temperature convention: below `β_c` the plateau is
/// reported as trivial even when the defining set is non-empty.
fn fdt_phase_q(mix: &MixturePolynomial, beta: f64, bc: f64, tol: f64) -> Result<QValue> {
    if beta < bc {
        if !(beta >= 0.0) {
            return invalid(format!("beta must be >= 0, got {beta}"));
        }
        return Ok(QValue {
            q: 0.0,
            trivial: true,
        });
    }
    q_of_beta(mix, beta, tol)
}

fn gamma_at(mix: &MixturePolynomial, beta: f64, qv: QValue) -> f64 {
    if qv.trivial {
        return 0.5;
    }
    let q = qv.q;
    2.0 * beta * beta * (mix.nu_d2(q) * (1.0 - q) - mix.nu_d1(q))
}

/// `I_γ = γ - b + D_∞(φ(D_∞) - γ)` for `φ = γ + 2β²ν'`.
pub fn i_gamma(mix: &MixturePolynomial, beta: f64, gamma: f64, b: f64) -> Result<f64> {
    let phi = Phi::mixture(mix, beta, gamma);
    let d_inf = d_infinity(&phi, b, DEFAULT_TOL)?;
    Ok(gamma - b + d_inf * (phi.value(d_inf) - gamma))
}

/// Strict exponential-decay criteria for the stationary equation.
///
/// Returns `(φ(1) > 2√(bφ'(1)), φ(D_∞) > φ'(D_∞)(1-D_∞))`. Both comparisons
/// treat a relative gap below `1e-9` as equality.
pub fn exp_decay_criterion(phi: &Phi, b: f64, d_inf: f64) -> (bool, bool) {
    let strict =
        |lhs: f64, rhs: f64| lhs - rhs > STRICT_SLACK * lhs.abs().max(rhs.abs()).max(1e-300);
    let first = strict(phi.value(1.0), 2.0 * (b * phi.deriv(1.0)).max(0.0).sqrt());
    let second = strict(phi.value(d_inf), phi.deriv(d_inf) * (1.0 - d_inf));
    (first, second)
}

/// All critical constants of a mixture at one inverse temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalProfile {
    pub beta: f64,
    pub beta_c: f64,
    pub x_star: f64,
    pub q: f64,
    /// Set below `β_c` (where `q` is reported as 0) or when the defining set is empty.
    pub q_is_trivial: bool,
    pub gamma: f64,
    pub d_infinity: f64,
    pub i_gamma: f64,
    /// `φ(1) > 2√(bφ'(1))`
    pub exp_criterion: bool,
    /// `φ(D_∞) > φ'(D_∞)(1-D_∞)`
    pub exp_necessary: bool,
}

impl CriticalProfile {
    /// Constants for `b = 1/2` and `φ = γ(β) + 2β²ν'`.
    pub fn compute(mix: &MixturePolynomial, beta: f64, tol: f64) -> Result<Self> {
        let b = 0.5;
        let (bc, x_star) = beta_c(mix, tol)?;
        let qv = fdt_phase_q(mix, beta, bc, tol)?;
        let gamma = gamma_at(mix, beta, qv);
        let phi = Phi::mixture(mix, beta, gamma);
        let d_inf = d_infinity(&phi, b, tol)?;
        let i_g = gamma - b + d_inf * (phi.value(d_inf) - gamma);
        let (exp_criterion, exp_necessary) = exp_decay_criterion(&phi, b, d_inf);
        Ok(CriticalProfile {
            beta,
            beta_c: bc,
            x_star,
            q: qv.q,
            q_is_trivial: qv.trivial,
            gamma,
            d_infinity: d_inf,
            i_gamma: i_g,
            exp_criterion,
            exp_necessary,
        })
    }
}
