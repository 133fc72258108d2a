use super::memory::{memory_row, psi_integral};
use super::{Mode, TwoTimeGrid};
use crate::error::{invalid, Error, Result};
use crate::mesh::{steps_for, Triangle};
use crate::model::{Covariance, SoftPotential};

/// Largest number of mesh intervals accepted by the solvers.
pub const MAX_STEPS: usize = 20_000;

/// Upper bound on `Δ·L` in soft mode.
pub const SOFT_STIFFNESS_LIMIT: f64 = 10.0;

/// Spherical closure: `C(t,t) = 1`,
/// `μ(s) = 1/2 + β² ∫_0^s ψ(C(s,u)) R(s,u) du`.
pub fn solve_spherical<V: Covariance>(
    cov: &V,
    beta: f64,
    delta: f64,
    horizon: f64,
) -> Result<TwoTimeGrid> {
    march(cov, beta, Mode::Spherical, delta, horizon)
}

/// Soft closure with confining potential `f_L`: `μ(s) = f'(K(s))` and
/// `K' = -2f'(K)K + 1 + 2β² ∫_0^s ψ(C(s,u)) R(s,u) du`, `K(0) = k0`.
pub fn solve_soft<V: Covariance>(
    cov: &V,
    beta: f64,
    potential: SoftPotential,
    k0: f64,
    delta: f64,
    horizon: f64,
) -> Result<TwoTimeGrid> {
    if !(k0 > 0.0) || !k0.is_finite() {
        return invalid(format!("K0 must be positive, got {k0}"));
    }
    if let Some(&(m, _)) = cov.mixture_terms().iter().max_by_key(|t| t.0) {
        if 4 * potential.k <= m {
            return invalid(format!(
                "soft potential needs k > m/4 (k={}, m={m})",
                potential.k
            ));
        }
    }
    if delta * potential.l > SOFT_STIFFNESS_LIMIT {
        return invalid(format!(
            "stiffness guard: Δ·L = {} exceeds {SOFT_STIFFNESS_LIMIT}; reduce the step",
            delta * potential.l
        ));
    }
    march(cov, beta, Mode::Soft { potential, k0 }, delta, horizon)
}

/// Diagonal closure state.
struct Closure {
    mode: Mode,
    beta: f64,
    delta: f64,
}

impl Closure {
    /// Sets `C(i,i)` and returns `(K_i, μ_i, K'_i)` for the current row.
    fn diagonal<V: Covariance>(
        &self,
        cov: &V,
        r: &Triangle,
        c: &mut Triangle,
        i: usize,
        prev: Option<(f64, f64)>,
    ) -> Result<(f64, f64, f64)> {
        let b2 = self.beta * self.beta;
        match self.mode {
            Mode::Spherical => {
                c.set(i, i, 1.0);
                let mu = 0.5 + b2 * psi_integral(r, c, cov, i, i, self.delta);
                Ok((1.0, mu, 0.0))
            }
            Mode::Soft { potential, k0 } => {
                let h = self.delta;
                let partial = if i == 0 {
                    0.0
                } else {
                    psi_integral(r, c, cov, i, i - 1, h)
                };
                let diag_w = if i == 0 { 0.0 } else { 0.5 * h };
                let rate = |k: f64| {
                    -2.0 * potential.f_d1(k) * k + 1.0 + 2.0 * b2 * (partial + diag_w * cov.psi(k))
                };
                let k = match prev {
                    None => k0,
                    Some((k_prev, rate_prev)) => {
                        // implicit trapezoid for K, scalar Newton
                        let mut k = k_prev;
                        let mut converged = false;
                        for _ in 0..60 {
                            let res = k - k_prev - 0.5 * h * (rate_prev + rate(k));
                            let drate = -2.0 * potential.f_d2(k) * k - 2.0 * potential.f_d1(k)
                                + 2.0 * b2 * diag_w * cov.psi_d1(k);
                            let step = res / (1.0 - 0.5 * h * drate);
                            k -= step;
                            if step.abs() <= 1e-15 * k.abs().max(1.0) {
                                converged = true;
                                break;
                            }
                        }
                        if !converged || !(k > 0.0) || !k.is_finite() {
                            return Err(Error::Instability(format!(
                                "K equation failed at s = {:.4} (K = {k}); reduce the step",
                                i as f64 * h
                            )));
                        }
                        k
                    }
                };
                c.set(i, i, k);
                Ok((k, potential.f_d1(k), rate(k)))
            }
        }
    }
}

fn march<V: Covariance>(
    cov: &V,
    beta: f64,
    mode: Mode,
    delta: f64,
    horizon: f64,
) -> Result<TwoTimeGrid> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return invalid(format!("beta must be finite and >= 0, got {beta}"));
    }
    let n = steps_for(delta, horizon)?;
    if n > MAX_STEPS {
        return Err(Error::ResourceLimit(format!(
            "{n} steps exceed the cap of {MAX_STEPS}"
        )));
    }
    let b2 = beta * beta;
    let closure = Closure { mode, beta, delta };
    let mut r = Triangle::zeros(n + 1);
    let mut c = Triangle::zeros(n + 1);
    let mut k = vec![0.0; n + 1];
    let mut mu = vec![0.0; n + 1];

    r.set(0, 0, 1.0);
    let (k0, mu0, rate0) = closure.diagonal(cov, &r, &mut c, 0, None)?;
    k[0] = k0;
    mu[0] = mu0;
    let mut rate_prev = rate0;
    // derivatives ∂_s R, ∂_s C on the last finished row
    let mut fr = vec![-mu0];
    let mut fc = vec![-mu0 * k0];
    let mut mr = vec![0.0; n + 1];
    let mut mc = vec![0.0; n + 1];
    let tol = 10.0 * delta;

    for i in 1..=n {
        // predictor
        for j in 0..i {
            r.set(i, j, r.get(i - 1, j) + delta * fr[j]);
            c.set(i, j, c.get(i - 1, j) + delta * fc[j]);
        }
        r.set(i, i, 1.0);
        let (_, mu_p, _) = closure.diagonal(cov, &r, &mut c, i, Some((k[i - 1], rate_prev)))?;
        memory_row(&r, &c, cov, i, delta, &mut mr, &mut mc);
        // corrector
        for j in 0..i {
            let dr = -mu_p * r.get(i, j) + b2 * mr[j];
            let dc = -mu_p * c.get(i, j) + b2 * mc[j];
            r.set(i, j, r.get(i - 1, j) + 0.5 * delta * (fr[j] + dr));
            c.set(i, j, c.get(i - 1, j) + 0.5 * delta * (fc[j] + dc));
        }
        let (ki, mui, ratei) = closure.diagonal(cov, &r, &mut c, i, Some((k[i - 1], rate_prev)))?;
        k[i] = ki;
        mu[i] = mui;
        rate_prev = ratei;
        memory_row(&r, &c, cov, i, delta, &mut mr, &mut mc);
        fr.clear();
        fc.clear();
        for j in 0..=i {
            fr.push(-mui * r.get(i, j) + b2 * mr[j]);
            fc.push(-mui * c.get(i, j) + b2 * mc[j]);
        }
        check_row(&r, &c, i, tol, matches!(mode, Mode::Spherical), delta)?;
    }
    Ok(TwoTimeGrid {
        delta,
        horizon,
        beta,
        mode,
        terms: cov.mixture_terms(),
        r,
        c,
        k,
        mu,
    })
}

fn check_row(
    r: &Triangle,
    c: &Triangle,
    i: usize,
    tol: f64,
    spherical: bool,
    delta: f64,
) -> Result<()> {
    let s = i as f64 * delta;
    for (j, (&rv, &cv)) in r.row(i).iter().zip(c.row(i)).enumerate() {
        let t = j as f64 * delta;
        if !rv.is_finite() || !cv.is_finite() {
            return Err(Error::Instability(format!(
                "non-finite value at (s, t) = ({s:.4}, {t:.4}); reduce the step"
            )));
        }
        if rv < -tol || cv < -tol {
            return Err(Error::Instability(format!(
                "negative field at (s, t) = ({s:.4}, {t:.4}): R = {rv}, C = {cv}; reduce the step"
            )));
        }
        if spherical && cv > 1.0 + tol {
            return Err(Error::Instability(format!(
                "C = {cv} exceeds 1 at (s, t) = ({s:.4}, {t:.4}); reduce the step"
            )));
        }
    }
    Ok(())
}
