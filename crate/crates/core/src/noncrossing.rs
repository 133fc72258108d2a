//! Non-crossing pairings of `{1, …, 2n}` and the kernel
//! `H(s,t)` solving `∂_s H(s,t) = β² ∫_t^s H(s,u) H(u,t) ν''(C(s,u)) du`,
//! `H(t,t) = 1`.
//!
//! `H` is computed two ways. [`h_ode`] marches the equation in `s`;
//! [`h_series`] sums the expansion in powers of `β²`, whose `n`-th
//! coefficient is the sum over the Catalan-many non-crossing pairings of
//! `2n` points.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::mesh::{trap_weight, Triangle};
use crate::model::Covariance;

/// Largest `n` accepted by [`enumerate_nc`].
pub const MAX_ENUM_PAIRS: usize = 8;

/// A fixed-point-free non-crossing involution of `{1, …, 2n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NcPairing {
    // 1-based partner of each point; index 0 unused
    partner: Vec<usize>,
}

impl NcPairing {
    /// Builds a pairing from `(i, j)` pairs, validating the involution and
    /// the non-crossing condition.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.len() != n {
            return invalid(format!("expected {n} pairs, got {}", pairs.len()));
        }
        let mut partner = vec![0usize; 2 * n + 1];
        for &(a, b) in pairs {
            if a == b || a == 0 || b == 0 || a > 2 * n || b > 2 * n {
                return invalid(format!("pair ({a}, {b}) is not valid on 1..={}", 2 * n));
            }
            if partner[a] != 0 || partner[b] != 0 {
                return invalid(format!("index reused in pair ({a}, {b})"));
            }
            partner[a] = b;
            partner[b] = a;
        }
        let p = NcPairing { partner };
        if !p.is_noncrossing() {
            return invalid("pairs cross");
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        (self.partner.len() - 1) / 2
    }

    /// `σ(i)` for `1 <= i <= 2n`.
    pub fn sigma(&self, i: usize) -> usize {
        self.partner[i]
    }

    /// Pairs `(i, σ(i))` with `i < σ(i)`, ordered by `i`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (1..self.partner.len())
            .filter(|&i| i < self.partner[i])
            .map(|i| (i, self.partner[i]))
            .collect()
    }

    /// Openers `{i : i < σ(i)}`.
    pub fn cr(&self) -> Vec<usize> {
        self.pairs().into_iter().map(|(i, _)| i).collect()
    }

    pub fn is_noncrossing(&self) -> bool {
        let pairs = self.pairs();
        pairs
            .iter()
            .all(|&(a, b)| pairs.iter().all(|&(c, d)| !(a < c && c < b && b < d)))
    }
}

/// All non-crossing pairings of `{1, …, 2n}` in lexicographic order of the
/// partner sequence `(σ(1), σ(2), …)`.
pub fn enumerate_nc(n: usize) -> Result<Vec<NcPairing>> {
    if n == 0 {
        return invalid("pairings need n >= 1");
    }
    if n > MAX_ENUM_PAIRS {
        return Err(Error::ResourceLimit(format!(
            "enumeration limited to n <= {MAX_ENUM_PAIRS}, got {n}"
        )));
    }
    let mut out = Vec::new();
    let mut partner = vec![0usize; 2 * n + 1];
    fill(&mut partner, 1, &mut out);
    Ok(out)
}

// Pairs the first open index with every admissible later one; points
// enclosed by a pair must be matched among themselves.
fn fill(partner: &mut Vec<usize>, from: usize, out: &mut Vec<NcPairing>) {
    let len = partner.len() - 1;
    let Some(i) = (from..=len).find(|&k| partner[k] == 0) else {
        out.push(NcPairing {
            partner: partner.clone(),
        });
        return;
    };
    let mut j = i + 1;
    while j <= len {
        if partner[j] != 0 {
            break;
        }
        if (j - i) % 2 == 1 {
            partner[i] = j;
            partner[j] = i;
            fill(partner, i + 1, out);
            partner[i] = 0;
            partner[j] = 0;
        }
        j += 1;
    }
}

/// `n`-th Catalan number; errors when it exceeds `u128`.
pub fn catalan(n: u32) -> Result<u128> {
    let mut c: u128 = 1;
    for k in 0..n {
        let k = u128::from(k);
        // C_{k+1} = C_k * 2(2k+1) / (k+2), exact in integers
        c = c
            .checked_mul(2 * (2 * k + 1))
            .ok_or_else(|| Error::ResourceLimit(format!("catalan({n}) overflows u128")))?
            / (k + 2);
    }
    Ok(c)
}

/// Semicircle moment generating function scaled by `e^{-2θ}`:
/// `e^{-2θ} (2π)^{-1} ∫_{-2}^{2} e^{θx} √(4-x²) dx`.
pub fn semicircle_mgf_scaled(theta: f64) -> f64 {
    // x = 2cos φ; integrand is smooth and periodic, so the trapezoid rule
    // converges spectrally
    let m = 4096;
    let h = PI / m as f64;
    let sum: f64 = (1..m)
        .map(|k| {
            let phi = k as f64 * h;
            (2.0 * theta.abs() * (phi.cos() - 1.0)).exp() * phi.sin().powi(2)
        })
        .sum();
    2.0 / PI * h * sum
}

/// `(2π)^{-1} ∫_{-2}^{2} e^{θx} √(4-x²) dx`.
pub fn semicircle_mgf(theta: f64) -> f64 {
    semicircle_mgf_scaled(theta) * (2.0 * theta.abs()).exp()
}

/// Smallest `c₁` with `m(θ) <= c₁ (1+|θ|)^{-3/2} e^{2|θ|}`, evaluated over a
/// log-spaced `θ` grid up to `10⁴`. The ratio tends to `1/(2√π)` as `θ → ∞`.
pub fn semicircle_c1() -> f64 {
    let mut best: f64 = 1.0;
    for k in 0..=600 {
        let theta = if k == 0 {
            0.0
        } else {
            10f64.powf(-3.0 + 7.0 * k as f64 / 600.0)
        };
        let v = semicircle_mgf_scaled(theta) * (1.0 + theta).powf(1.5);
        best = best.max(v);
    }
    best
}

/// `H` sampled on the lower triangle of a uniform mesh.
#[derive(Clone, Debug)]
pub struct HKernel {
    pub delta: f64,
    pub values: Triangle,
    /// Highest series order kept, `None` for the ODE solution.
    pub truncation_order: Option<usize>,
    /// Bound on the discarded series tail (0 for the ODE solution).
    pub tail_bound: f64,
}

impl HKernel {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }
}

fn check_kernel(c: &Triangle, delta: f64, beta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return invalid("mesh step must be positive");
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return invalid(format!("beta must be finite and >= 0, got {beta}"));
    }
    if c.points() == 0 {
        return invalid("empty correlation kernel");
    }
    if c.min() < 0.0 {
        return invalid("correlation kernel must be non-negative");
    }
    Ok(())
}

/// Marches the kernel equation with the implicit trapezoid rule.
///
/// Within a new row the unknowns `H(s_{i+1}, t_j)` are resolved for `j`
/// descending; each appears linearly and is found in closed form.
pub fn h_ode<V: Covariance>(c: &Triangle, mix: &V, beta: f64, delta: f64) -> Result<HKernel> {
    check_kernel(c, delta, beta)?;
    let n = c.points();
    let b2 = beta * beta;
    let mut h = Triangle::zeros(n);
    // f[j] = ∂_s H(s_i, t_j) on the current row
    let mut f_prev = vec![0.0; n];
    h.set(0, 0, 1.0);
    let mut nu2 = vec![0.0; n];
    let mut f_new = vec![0.0; n];
    for i in 1..n {
        for u in 0..=i {
            nu2[u] = mix.nu_d2(c.get(i, u));
        }
        h.set(i, i, 1.0);
        f_new[i] = 0.0;
        for j in (0..i).rev() {
            // F(i,j) = Δ Σ_u w H(i,u) H(u,j) ν''(C(i,u)); ends u=j and u=i
            // both carry H(i,j)
            let mut interior = 0.0;
            for u in (j + 1)..i {
                interior += h.get(i, u) * h.get(u, j) * nu2[u];
            }
            let lin = 0.5 * delta * (nu2[j] + nu2[i]);
            // H(i,j) = H(i-1,j) + Δ/2 (F_prev + b2(Δ interior + lin H(i,j)))
            let rhs = h.get(i - 1, j) + 0.5 * delta * (f_prev[j] + b2 * delta * interior);
            let hij = rhs / (1.0 - 0.5 * delta * b2 * lin);
            h.set(i, j, hij);
            f_new[j] = b2 * (delta * interior + lin * hij);
        }
        std::mem::swap(&mut f_prev, &mut f_new);
    }
    Ok(HKernel {
        delta,
        values: h,
        truncation_order: None,
        tail_bound: 0.0,
    })
}

/// `Σ_{n > n_max} x^{2n}/(2n)!` for `x >= 0`.
fn even_exp_tail(x: f64, n_max: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=2 * n_max {
        term *= x / k as f64;
    }
    let mut sum = 0.0;
    let mut n = n_max;
    loop {
        n += 1;
        term *= x / (2 * n - 1) as f64 * x / (2 * n) as f64;
        sum += term;
        if term <= 1e-18 * sum || n > n_max + 10_000 {
            break;
        }
    }
    sum
}

/// Tail bound `Σ_{n>n_max} (2β√ν''(c))^{2n} τ^{2n}/(2n)!`.
pub fn series_tail_bound<V: Covariance>(
    mix: &V,
    beta: f64,
    c_bound: f64,
    tau: f64,
    n_max: usize,
) -> f64 {
    let x = 2.0 * beta * mix.nu_d2(c_bound).sqrt() * tau;
    even_exp_tail(x, n_max)
}

/// Per-order coefficients `H_n` of `H = Σ β^{2n} H_n`.
///
/// `H_n(s,t) = ∫_t^s Σ_{a+b=n-1} ∫_t^{s'} H_a(s',u) H_b(u,t) ν''(C(s',u)) du ds'`
/// with trapezoid quadrature in both integrals.
fn series_orders<V: Covariance>(c: &Triangle, mix: &V, delta: f64, n_max: usize) -> Vec<Triangle> {
    let m = c.points();
    let nu2 = Triangle::from_fn(m, |i, u| mix.nu_d2(c.get(i, u)));
    let mut orders = vec![Triangle::from_fn(m, |_, _| 1.0)];
    for n in 1..=n_max {
        let mut f = Triangle::zeros(m);
        for i in 0..m {
            for j in 0..=i {
                let mut acc = 0.0;
                for u in j..=i {
                    let w = trap_weight(u, j, i);
                    if w == 0.0 {
                        continue;
                    }
                    let mut conv = 0.0;
                    for a in 0..n {
                        conv += orders[a].get(i, u) * orders[n - 1 - a].get(u, j);
                    }
                    acc += w * conv * nu2.get(i, u);
                }
                f.set(i, j, delta * acc);
            }
        }
        let mut hn = Triangle::zeros(m);
        for j in 0..m {
            for i in (j + 1)..m {
                let v = hn.get(i - 1, j) + 0.5 * delta * (f.get(i - 1, j) + f.get(i, j));
                hn.set(i, j, v);
            }
        }
        orders.push(hn);
    }
    orders
}

/// Truncated series value `H(s_i, t_j)` up to order `n_max` together with
/// its tail bound.
pub fn h_series<V: Covariance>(
    c: &Triangle,
    mix: &V,
    beta: f64,
    delta: f64,
    i: usize,
    j: usize,
    n_max: usize,
) -> Result<(f64, f64)> {
    check_kernel(c, delta, beta)?;
    if n_max < 1 {
        return invalid("series order n_max must be >= 1");
    }
    if j > i || i >= c.points() {
        return invalid(format!("need t_j <= s_i on the mesh, got i={i}, j={j}"));
    }
    let sub = Triangle::from_fn(i + 1 - j, |a, b| c.get(a + j, b + j));
    let grid = h_series_grid(&sub, mix, beta, delta, n_max)?;
    Ok((grid.get(i - j, 0), grid.tail_bound))
}

/// Truncated series on the whole triangle. The tail bound uses the largest
/// `C` value and the full horizon.
pub fn h_series_grid<V: Covariance>(
    c: &Triangle,
    mix: &V,
    beta: f64,
    delta: f64,
    n_max: usize,
) -> Result<HKernel> {
    check_kernel(c, delta, beta)?;
    if n_max < 1 {
        return invalid("series order n_max must be >= 1");
    }
    let m = c.points();
    let b2 = beta * beta;
    let orders = series_orders(c, mix, delta, n_max);
    let values = Triangle::from_fn(m, |i, j| {
        let mut v = 0.0;
        for hn in orders.iter().rev() {
            v = v * b2 + hn.get(i, j);
        }
        v
    });
    let tail_bound = if beta == 0.0 {
        0.0
    } else {
        series_tail_bound(mix, beta, c.max(), (m - 1) as f64 * delta, n_max)
    };
    Ok(HKernel {
        delta,
        values,
        truncation_order: Some(n_max),
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixturePolynomial;

    #[test]
    fn small_enumerations() {
        let one = enumerate_nc(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].pairs(), vec![(1, 2)]);
        let two = enumerate_nc(2).unwrap();
        assert_eq!(two[0].pairs(), vec![(1, 2), (3, 4)]);
        assert_eq!(two[1].pairs(), vec![(1, 4), (2, 3)]);
        assert!(enumerate_nc(9).is_err());
        assert!(enumerate_nc(0).is_err());
    }

    #[test]
    fn catalan_values() {
        assert_eq!(catalan(0).unwrap(), 1);
        assert_eq!(catalan(4).unwrap(), 14);
        assert_eq!(catalan(10).unwrap(), 16796);
        assert!(catalan(60).is_ok());
        assert!(catalan(200).is_err());
    }

    #[test]
    fn crossing_pairs_rejected() {
        assert!(NcPairing::from_pairs(2, &[(1, 3), (2, 4)]).is_err());
        assert!(NcPairing::from_pairs(2, &[(1, 2), (2, 4)]).is_err());
        let p = NcPairing::from_pairs(3, &[(1, 6), (2, 3), (4, 5)]).unwrap();
        assert_eq!(p.cr(), vec![1, 2, 4]);
        assert_eq!(p.sigma(5), 4);
    }

    #[test]
    fn zero_beta_is_identity_kernel() {
        let mix = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
        let c = Triangle::from_fn(21, |i, j| (-0.05 * (i - j) as f64).exp());
        let h = h_ode(&c, &mix, 0.0, 0.1).unwrap();
        assert!(h.values.iter().all(|v| v == 1.0));
        let (v, tail) = h_series(&c, &mix, 0.0, 0.1, 20, 0, 3).unwrap();
        assert_eq!((v, tail), (1.0, 0.0));
        assert!(h_series(&c, &mix, 0.1, 0.1, 20, 0, 0).is_err());
    }

    #[test]
    fn semicircle_moments() {
        assert!((semicircle_mgf(0.0) - 1.0).abs() < 1e-12);
        // second moment of the semicircle is 1: m(θ) ≈ 1 + θ²/2
        let t = 1e-3;
        assert!(((semicircle_mgf(t) - 1.0) / (t * t) - 0.5).abs() < 1e-4);
        let c1 = semicircle_c1();
        assert!((1.0..2.0).contains(&c1), "{c1}");
    }
}
