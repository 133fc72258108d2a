use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::disorder::{sample_disorder, DisorderSample};
use crate::error::{invalid, Error, Result};
use crate::mesh::{steps_for, Triangle};
use crate::model::{Covariance, MixturePolynomial, SoftPotential};

/// Bound on `Δt·(2L + 2β√ν''(1))` accepted by [`simulate`].
pub const STABILITY_LIMIT: f64 = 0.5;

/// Trajectories are declared unstable once `‖x‖²/N` exceeds this.
pub const BLOWUP_LEVEL: f64 = 10.0;

// replica noise streams sit above every disorder stream (one per degree)
const DYNAMICS_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq)]
pub struct LangevinParams {
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Observables are stored every `save_stride` steps.
    pub save_stride: usize,
}

/// Empirical two-time observables of a finite-N run.
///
/// Fields are lower triangles over the stored times: `C_N(s_a, s_b)` and
/// `χ_N(s_a, s_b) = x_{s_a}·B_{s_b}/N` for `a >= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LangevinRun {
    pub params: LangevinParams,
    pub beta: f64,
    pub times: Vec<f64>,
    pub replica_c: Vec<Triangle>,
    pub replica_chi: Vec<Triangle>,
    pub c_mean: Triangle,
    pub c_se: Triangle,
    pub chi_mean: Triangle,
    pub chi_se: Triangle,
}

impl LangevinRun {
    /// `K_N(s_a) = C_N(s_a, s_a)` averaged over replicas.
    pub fn k_mean(&self) -> Vec<f64> {
        (0..self.times.len())
            .map(|a| self.c_mean.get(a, a))
            .collect()
    }
}

/// Euler–Maruyama integration of
/// `dx = -f'(‖x‖²/N) x dt - β∇H(x) dt + dB` from `x₀ ~ N(0, I)`.
///
/// The couplings are drawn once from `seed`; each replica gets its own
/// initial condition and noise stream, so results do not depend on how
/// replicas are scheduled.
pub fn simulate(
    mix: &MixturePolynomial,
    beta: f64,
    pot: SoftPotential,
    params: &LangevinParams,
) -> Result<LangevinRun> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return invalid(format!("beta must be finite and >= 0, got {beta}"));
    }
    if params.n < 2 {
        return invalid(format!("N must be >= 2, got {}", params.n));
    }
    if params.replicas == 0 || params.save_stride == 0 {
        return invalid("replicas and save stride must be positive");
    }
    pot.check_against(mix)?;
    let steps = steps_for(params.dt, params.horizon)?;
    let scale = params.dt * (2.0 * pot.l + 2.0 * beta * mix.nu_d2(1.0).sqrt());
    if scale > STABILITY_LIMIT {
        return invalid(format!(
            "stability guard: Δt·(2L + 2β√ν''(1)) = {scale} exceeds {STABILITY_LIMIT}"
        ));
    }
    let disorder = if beta > 0.0 {
        Some(sample_disorder(mix, params.n, params.seed)?)
    } else {
        None
    };
    let saves = steps / params.save_stride;
    let times: Vec<f64> = (0..=saves)
        .map(|m| (m * params.save_stride) as f64 * params.dt)
        .collect();

    let per_replica: Vec<(Triangle, Triangle)> = (0..params.replicas)
        .into_par_iter()
        .map(|rep| run_replica(disorder.as_ref(), beta, pot, params, steps, rep))
        .collect::<Result<_>>()?;

    let points = saves + 1;
    let (replica_c, replica_chi): (Vec<_>, Vec<_>) = per_replica.into_iter().unzip();
    let (c_mean, c_se) = mean_and_se(&replica_c, points);
    let (chi_mean, chi_se) = mean_and_se(&replica_chi, points);
    Ok(LangevinRun {
        params: params.clone(),
        beta,
        times,
        replica_c,
        replica_chi,
        c_mean,
        c_se,
        chi_mean,
        chi_se,
    })
}

fn run_replica(
    disorder: Option<&DisorderSample>,
    beta: f64,
    pot: SoftPotential,
    params: &LangevinParams,
    steps: usize,
    rep: usize,
) -> Result<(Triangle, Triangle)> {
    let n = params.n;
    let nf = n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(DYNAMICS_STREAM_BASE + rep as u64);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut b = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let sq = params.dt.sqrt();
    let mut xs = vec![x.clone()];
    let mut bs = vec![b.clone()];
    for step in 1..=steps {
        let norm = x.iter().map(|v| v * v).sum::<f64>() / nf;
        let fp = pot.f_d1(norm);
        match disorder {
            Some(d) => d.gradient(&x, &mut grad),
            None => grad.fill(0.0),
        }
        for i in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let db = sq * z;
            x[i] += params.dt * (-fp * x[i] - beta * grad[i]) + db;
            b[i] += db;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>() / nf;
        if !(norm <= BLOWUP_LEVEL) {
            return Err(Error::Instability(format!(
                "replica {rep}: ‖x‖²/N = {norm} at t = {:.4}; reduce the step",
                step as f64 * params.dt
            )));
        }
        if step % params.save_stride == 0 {
            xs.push(x.clone());
            bs.push(b.clone());
        }
    }
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / nf;
    let points = xs.len();
    let c = Triangle::from_fn(points, |a, bb| dot(&xs[a], &xs[bb]));
    let chi = Triangle::from_fn(points, |a, bb| dot(&xs[a], &bs[bb]));
    Ok((c, chi))
}

fn mean_and_se(fields: &[Triangle], points: usize) -> (Triangle, Triangle) {
    let r = fields.len() as f64;
    let mut mean = Triangle::zeros(points);
    let mut se = Triangle::zeros(points);
    for a in 0..points {
        for b in 0..=a {
            let m = fields.iter().map(|f| f.get(a, b)).sum::<f64>() / r;
            mean.set(a, b, m);
            if fields.len() > 1 {
                let var = fields
                    .iter()
                    .map(|f| (f.get(a, b) - m).powi(2))
                    .sum::<f64>()
                    / (r - 1.0);
                se.set(a, b, (var / r).sqrt());
            }
        }
    }
    (mean, se)
}
