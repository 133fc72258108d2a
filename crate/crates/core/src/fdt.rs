//! The one-time stationary equation
//! `D'(s) = -∫_0^s φ(D(v)) D'(s-v) dv - b`, `D(0) = 1`,
//! solved by direct marching and by a monotone fixed-point iteration.

use crate::error::{invalid, Error, Result};
use crate::mesh::{steps_for, trap_weight};
use crate::model::{d_infinity, Covariance, MixturePolynomial, Phi, DEFAULT_TOL};

#[derive(Clone, Debug)]
pub struct FdtProblem {
    pub b: f64,
    pub phi: Phi,
    pub d_infinity: f64,
    pub delta: f64,
    pub horizon: f64,
}

impl FdtProblem {
    /// Validates `φ` and `b` and computes `D_∞`.
    pub fn new(phi: Phi, b: f64, delta: f64, horizon: f64) -> Result<Self> {
        steps_for(delta, horizon)?;
        phi.check_monotone()?;
        let d_inf = d_infinity(&phi, b, DEFAULT_TOL)?;
        Ok(FdtProblem {
            b,
            phi,
            d_infinity: d_inf,
            delta,
            horizon,
        })
    }

    /// `b = 1/2`, `φ = γ + 2β²ν'`.
    pub fn for_mixture(
        mix: &MixturePolynomial,
        beta: f64,
        gamma: f64,
        delta: f64,
        horizon: f64,
    ) -> Result<Self> {
        Self::new(Phi::mixture(mix, beta, gamma), 0.5, delta, horizon)
    }

    pub fn steps(&self) -> usize {
        steps_for(self.delta, self.horizon).expect("validated in constructor")
    }

    /// `μ = φ(1)`.
    pub fn mu(&self) -> f64 {
        self.phi.value(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    FixedPoint,
}

#[derive(Clone, Debug)]
pub struct FdtSolution {
    pub delta: f64,
    pub d: Vec<f64>,
    pub d_prime: Vec<f64>,
    pub mu: f64,
    pub method: Method,
    pub iterations: usize,
    /// Last sup-norm change for the fixed point, 0 for direct marching.
    pub residual: f64,
}

impl FdtSolution {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.d.len()).map(move |k| k as f64 * self.delta)
    }
}

/// Quadrature used for the memory convolution in [`solve_direct_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    /// Trapezoid over the mesh nodes.
    Trapezoid,
    /// Midpoint rule with both factors interpolated linearly to the cell
    /// centres.
    Midpoint,
}

pub fn solve_direct(problem: &FdtProblem) -> Result<FdtSolution> {
    solve_direct_with(problem, Quadrature::Trapezoid)
}

/// Marches the equation forward; the newest `D'` value is implicit and is
/// found by a scalar fixed-point iteration (contraction factor `O(Δ)`).
pub fn solve_direct_with(problem: &FdtProblem, quad: Quadrature) -> Result<FdtSolution> {
    let n = problem.steps();
    let (b, h) = (problem.b, problem.delta);
    let phi = &problem.phi;
    let mut d = vec![0.0; n + 1];
    let mut y = vec![0.0; n + 1];
    // φ(D) at the nodes, and at the cell centres for the midpoint rule
    let mut phi_node = vec![0.0; n + 1];
    let mut phi_mid = vec![0.0; n];
    d[0] = 1.0;
    y[0] = -b;
    phi_node[0] = phi.value(1.0);
    let slack = 10.0 * h * h;
    for i in 1..=n {
        let (d_prev, y_prev) = (d[i - 1], y[i - 1]);
        let next_d = move |yi: f64| d_prev + 0.5 * h * (y_prev + yi);
        // convolution = known + newest(y_i)
        let known = match quad {
            Quadrature::Trapezoid => h * (1..i).map(|v| phi_node[v] * y[i - v]).sum::<f64>(),
            Quadrature::Midpoint => {
                h * (1..i.saturating_sub(1))
                    .map(|k| phi_mid[k] * 0.5 * (y[i - k] + y[i - k - 1]))
                    .sum::<f64>()
            }
        };
        let yi = {
            let newest = |yi: f64| -> f64 {
                let di = next_d(yi);
                match quad {
                    Quadrature::Trapezoid => 0.5 * h * (phi_node[0] * yi + phi.value(di) * y[0]),
                    Quadrature::Midpoint if i == 1 => {
                        h * phi.value(0.5 * (d[0] + di)) * 0.5 * (yi + y[0])
                    }
                    Quadrature::Midpoint => {
                        h * (phi_mid[0] * 0.5 * (yi + y[i - 1])
                            + phi.value(0.5 * (d[i - 1] + di)) * 0.5 * (y[1] + y[0]))
                    }
                }
            };
            let mut yi = y[i - 1];
            for _ in 0..200 {
                let new = -b - known - newest(yi);
                let done = (new - yi).abs() <= 1e-15 * (1.0 + new.abs());
                yi = new;
                if done {
                    break;
                }
            }
            yi
        };
        y[i] = yi;
        d[i] = next_d(yi);
        if !d[i].is_finite() || d[i] < -slack || d[i] > 1.0 + slack {
            return Err(Error::Instability(format!(
                "D left [0,1] at s = {:.4} (value {}); reduce the step",
                i as f64 * h,
                d[i]
            )));
        }
        phi_node[i] = phi.value(d[i]);
        phi_mid[i - 1] = phi.value(0.5 * (d[i - 1] + d[i]));
    }
    Ok(FdtSolution {
        delta: h,
        d,
        d_prime: y,
        mu: problem.mu(),
        method: Method::Direct,
        iterations: n,
        residual: 0.0,
    })
}

/// `H_s` solving `dH/ds = b ∫_0^s φ'(E(s-v) + D_∞) H_{s-v} H_v dv`, `H_0 = 1`,
/// by the implicit trapezoid rule.
fn stationary_kernel(problem: &FdtProblem, e: &[f64]) -> Vec<f64> {
    let h = problem.delta;
    let k: Vec<f64> = e
        .iter()
        .map(|&x| problem.b * problem.phi.deriv(x + problem.d_infinity))
        .collect();
    let n = e.len();
    let mut hv = vec![0.0; n];
    hv[0] = 1.0;
    let mut f_prev = 0.0;
    for i in 1..n {
        let interior: f64 = (1..i).map(|v| k[i - v] * hv[i - v] * hv[v]).sum();
        let lin = 0.5 * h * (k[i] + k[0]);
        let hi = (hv[i - 1] + 0.5 * h * (f_prev + h * interior)) / (1.0 - 0.5 * h * lin);
        hv[i] = hi;
        f_prev = h * interior + lin * hi;
    }
    hv
}

/// `1 - D_∞ - b ∫_0^s e^{-μv} H_v(E) dv` before truncation at zero, and the
/// kernel `H` it was built from.
fn phi_map_raw(problem: &FdtProblem, e: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = problem.delta;
    let mu = problem.mu();
    let hv = stationary_kernel(problem, e);
    let g: Vec<f64> = hv
        .iter()
        .enumerate()
        .map(|(v, &x)| (-mu * v as f64 * h).exp() * x)
        .collect();
    let mut out = vec![0.0; e.len()];
    out[0] = 1.0 - problem.d_infinity;
    let mut acc = 0.0;
    for i in 1..e.len() {
        acc += 0.5 * h * (g[i - 1] + g[i]);
        out[i] = 1.0 - problem.d_infinity - problem.b * acc;
    }
    (out, hv)
}

/// The monotone map `E ↦ (1 - D_∞ - b ∫_0^s e^{-μv} H_v(E) dv) ∨ 0` on the
/// mesh. `e` holds `E` at the mesh nodes.
pub fn phi_map(problem: &FdtProblem, e: &[f64]) -> Result<Vec<f64>> {
    if e.len() != problem.steps() + 1 {
        return invalid(format!(
            "profile has {} values, mesh has {}",
            e.len(),
            problem.steps() + 1
        ));
    }
    let (raw, _) = phi_map_raw(problem, e);
    Ok(raw.into_iter().map(|x| x.max(0.0)).collect())
}

/// Iterates `E ↦ Φ(E)` from `E ≡ 1 - D_∞` until the sup-norm change drops
/// below `tol`; the first five steps are damped by one half. Early iterates
/// may be truncated at zero; the converged profile may not.
pub fn solve_fixed_point(problem: &FdtProblem, tol: f64, max_iter: usize) -> Result<FdtSolution> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let n = problem.steps();
    let h = problem.delta;
    let slack = 10.0 * h * h;
    let mut e = vec![1.0 - problem.d_infinity; n + 1];
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let (raw, _) = phi_map_raw(problem, &e);
        let damping = if iter <= 5 { 0.5 } else { 1.0 };
        residual = 0.0;
        for (old, new) in e.iter_mut().zip(&raw) {
            let next = (1.0 - damping) * *old + damping * new.max(0.0);
            residual = f64::max(residual, (next - *old).abs());
            *old = next;
        }
        if residual < tol {
            // the fixed point itself must not sit on the truncation
            let (raw, hv) = phi_map_raw(problem, &e);
            if let Some((k, &x)) = raw.iter().enumerate().find(|(_, &x)| x < -slack) {
                return Err(Error::Instability(format!(
                    "fixed point truncated at s = {:.4} (value {x})",
                    k as f64 * h
                )));
            }
            let mu = problem.mu();
            let d_prime = hv
                .iter()
                .enumerate()
                .map(|(v, &x)| -problem.b * (-mu * v as f64 * h).exp() * x)
                .collect();
            return Ok(FdtSolution {
                delta: h,
                d: e.iter().map(|x| x + problem.d_infinity).collect(),
                d_prime,
                mu,
                method: Method::FixedPoint,
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `(C, R) = (D, -D'/b)`.
pub fn fdt_pair(sol: &FdtSolution, b: f64) -> (Vec<f64>, Vec<f64>) {
    (sol.d.clone(), sol.d_prime.iter().map(|x| -x / b).collect())
}

/// Mesh derivative: central differences inside, second-order one-sided at
/// both ends.
pub fn mesh_derivative(values: &[f64], delta: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![0.0],
        2 => {
            let d = (values[1] - values[0]) / delta;
            return vec![d, d];
        }
        _ => {}
    }
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * delta);
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * delta);
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * delta);
    }
    out
}

/// Sup-norm residuals of the three stationary equations on `τ <= T/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryResiduals {
    pub response: f64,
    pub correlation: f64,
    /// `|μ - b - b∫ψ̂_γ(C)R - I_γ|` with `μ = φ(1)`.
    pub mu: f64,
    /// `b + b∫ψ̂_γ(C)R + I_γ`.
    pub mu_recovered: f64,
    pub i_gamma: f64,
    pub tau_max: f64,
}

/// Level below which the profiles are treated as fully decayed.
pub const TAIL_LEVEL: f64 = 1e-8;

/// Plugs mesh profiles `C(τ)`, `R(τ)` into the stationary system with
/// `μ = φ(1)`, `ψ̂_γ(x) = xφ'(x) + φ(x) - γ` and `I_γ` from `D_∞`.
/// Integrals over `[0, ∞)` are truncated at the mesh horizon.
pub fn stationary_residuals(
    c: &[f64],
    r: &[f64],
    delta: f64,
    phi: &Phi,
    gamma: f64,
    b: f64,
) -> Result<StationaryResiduals> {
    if c.len() != r.len() || c.len() < 5 {
        return invalid("profiles must have equal length >= 5");
    }
    let n = c.len() - 1;
    let d_inf = d_infinity(phi, b, DEFAULT_TOL)?;
    if r[n].abs() > TAIL_LEVEL || (c[n] - d_inf).abs() > TAIL_LEVEL {
        return Err(Error::HorizonTooShort(format!(
            "profiles not decayed at τ = {} (R = {:e}, C - D_∞ = {:e})",
            n as f64 * delta,
            r[n],
            c[n] - d_inf
        )));
    }
    let mu = phi.value(1.0);
    let i_gamma = gamma - b + d_inf * (phi.value(d_inf) - gamma);
    let dphi: Vec<f64> = c.iter().map(|&x| phi.deriv(x)).collect();
    let phi_c: Vec<f64> = c.iter().map(|&x| phi.value(x)).collect();
    let rd = mesh_derivative(r, delta);
    let cd = mesh_derivative(c, delta);
    let half = n / 2;
    let mut res_r: f64 = 0.0;
    let mut res_c: f64 = 0.0;
    for k in 0..=half {
        let conv_r: f64 = (0..=k)
            .map(|th| trap_weight(th, 0, k) * r[k - th] * r[th] * dphi[th])
            .sum::<f64>()
            * delta;
        res_r = res_r.max((rd[k] + mu * r[k] - b * conv_r).abs());
        let memory: f64 = (0..=n)
            .map(|th| trap_weight(th, 0, n) * c[k.abs_diff(th)] * r[th] * dphi[th])
            .sum::<f64>()
            * delta;
        let forcing: f64 = (k..=n)
            .map(|th| trap_weight(th, k, n) * (phi_c[th] - gamma) * r[th - k])
            .sum::<f64>()
            * delta;
        res_c = res_c.max((cd[k] + mu * c[k] - b * memory - b * forcing - i_gamma).abs());
    }
    let psi_int: f64 = (0..=n)
        .map(|th| trap_weight(th, 0, n) * (c[th] * dphi[th] + phi_c[th] - gamma) * r[th])
        .sum::<f64>()
        * delta;
    let mu_recovered = b + b * psi_int + i_gamma;
    Ok(StationaryResiduals {
        response: res_r,
        correlation: res_c,
        mu: (mu - mu_recovered).abs(),
        mu_recovered,
        i_gamma,
        tau_max: half as f64 * delta,
    })
}

/// Least-squares decay rate of `log(profile)` over `s ∈ [s0, s1]`, with the
/// coefficient of determination of the fit.
pub fn decay_rate_fit(profile: &[f64], delta: f64, window: (f64, f64)) -> Result<(f64, f64)> {
    let (s0, s1) = window;
    if !(s0 < s1) || s0 < 0.0 || !(delta > 0.0) {
        return Err(Error::InvalidWindow(format!("bad window [{s0}, {s1}]")));
    }
    let eps = 1e-9 * delta;
    let lo = ((s0 - eps) / delta).ceil().max(0.0) as usize;
    let hi = (((s1 + eps) / delta).floor() as usize).min(profile.len().saturating_sub(1));
    if hi <= lo {
        return Err(Error::InvalidWindow(format!(
            "window [{s0}, {s1}] holds fewer than two mesh points"
        )));
    }
    let mut pts = Vec::with_capacity(hi - lo + 1);
    for k in lo..=hi {
        let v = profile[k];
        if !(v > 0.0) {
            return Err(Error::InvalidWindow(format!(
                "profile is not positive at s = {}",
                k as f64 * delta
            )));
        }
        pts.push((k as f64 * delta, v.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok((-slope, r2))
}

/// Default horizon `max(20, 10/ε)` with `ε = max(1/2 - 2β²ν''(0), 0.05)`.
pub fn default_horizon(mix: &MixturePolynomial, beta: f64) -> f64 {
    let eps = (0.5 - 2.0 * beta * beta * mix.nu_d2(0.0)).max(0.05);
    (10.0 / eps).max(20.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_problem(delta: f64, horizon: f64) -> FdtProblem {
        FdtProblem::new(Phi::constant(0.5), 0.5, delta, horizon).unwrap()
    }

    #[test]
    fn constant_kernel_is_exponential() {
        let sol = solve_direct(&constant_problem(1e-3, 2.0)).unwrap();
        assert_eq!(sol.d[0], 1.0);
        assert_eq!(sol.d_prime[0], -0.5);
        assert!((sol.d[2000] - (-1f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn fixed_point_constant_kernel() {
        let p = constant_problem(2e-3, 10.0);
        let fixed = solve_fixed_point(&p, 1e-12, 100).unwrap();
        let direct = solve_direct(&p).unwrap();
        let gap = fixed
            .d
            .iter()
            .zip(&direct.d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn infeasible_problem_rejected() {
        assert!(matches!(
            FdtProblem::new(Phi::constant(0.1), 0.5, 0.1, 1.0),
            Err(Error::InfeasibleModel(_))
        ));
        assert!(FdtProblem::new(Phi::Polynomial(vec![1.0, -0.5]), 0.5, 0.1, 1.0).is_err());
    }

    #[test]
    fn pair_starts_at_one() {
        let sol = solve_direct(&constant_problem(1e-2, 5.0)).unwrap();
        let (c, r) = fdt_pair(&sol, 0.5);
        assert_eq!((c[0], r[0]), (1.0, 1.0));
        for (k, (cv, rv)) in c.iter().zip(&r).enumerate() {
            let exact = (-0.5 * k as f64 * 1e-2).exp();
            assert!((cv - exact).abs() < 1e-5 && (rv - exact).abs() < 1e-5);
        }
    }

    #[test]
    fn decay_fit_exact_exponential() {
        let p: Vec<f64> = (0..=1000).map(|k| (-0.5 * k as f64 * 0.01).exp()).collect();
        let (rate, r2) = decay_rate_fit(&p, 0.01, (1.0, 8.0)).unwrap();
        assert!((rate - 0.5).abs() < 1e-10);
        assert!(r2 > 0.9999);
        let mut bad = p.clone();
        bad[300] = 0.0;
        assert!(matches!(
            decay_rate_fit(&bad, 0.01, (1.0, 8.0)),
            Err(Error::InvalidWindow(_))
        ));
        assert!(decay_rate_fit(&p, 0.01, (3.0, 3.001)).is_err());
    }

    #[test]
    fn residuals_vanish_for_free_profiles() {
        let delta = 2e-3;
        let n = 20_000;
        let e: Vec<f64> = (0..=n).map(|k| (-0.5 * k as f64 * delta).exp()).collect();
        let res = stationary_residuals(&e, &e, delta, &Phi::constant(0.5), 0.5, 0.5).unwrap();
        assert!(
            res.response < 1e-6 && res.correlation < 1e-6 && res.mu < 1e-6,
            "{res:?}"
        );
        let short: Vec<f64> = e[..2000].to_vec();
        assert!(matches!(
            stationary_residuals(&short, &short, delta, &Phi::constant(0.5), 0.5, 0.5),
            Err(Error::HorizonTooShort(_))
        ));
    }

    #[test]
    fn horizon_default() {
        let three = MixturePolynomial::pure(3, 6f64.sqrt()).unwrap();
        assert_eq!(default_horizon(&three, 0.05), 20.0);
        let two = MixturePolynomial::pure(2, 1.0).unwrap();
        assert_eq!(default_horizon(&two, 1.0), 200.0);
    }
}
