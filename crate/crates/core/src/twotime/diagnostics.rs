use rayon::prelude::*;

use super::TwoTimeGrid;
use crate::error::{invalid, Result};
use crate::fdt::mesh_derivative;
use crate::mesh::Triangle;
use crate::model::Covariance;

/// Default length of the window `τ̄ <= 3` used to estimate `Î`.
pub const DEFAULT_I_HAT_WINDOW: f64 = 3.0;

/// Slices `C(t+τ, t)` and `R(t+τ, t)` for `τ = 0, Δ, …, tau_max`.
pub fn fdt_section(grid: &TwoTimeGrid, t: f64, tau_max: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let j = grid.index_of(t)?;
    if !(tau_max >= 0.0) {
        return invalid(format!("tau_max must be >= 0, got {tau_max}"));
    }
    let m = (tau_max / grid.delta + 1e-9).floor() as usize;
    if j + m > grid.steps() {
        return invalid(format!(
            "section t + tau_max = {} exceeds the horizon {}",
            t + tau_max,
            grid.horizon
        ));
    }
    let c = (0..=m).map(|k| grid.c.get(j + k, j)).collect();
    let r = (0..=m).map(|k| grid.r.get(j + k, j)).collect();
    Ok((c, r))
}

/// Departure from the stationary response relation.
#[derive(Clone, Debug)]
pub struct FdtDiagnostics {
    /// `G(s,t) = R(s,t) - 2∂_t C(s,t)`.
    pub g: Triangle,
    pub i: Triangle,
    /// `1/2 + 2β²ν'(1)`.
    pub rho: f64,
    /// Mean of `I(T, T-τ̄)` over `τ̄` in the estimation window.
    pub i_hat: f64,
    /// `sup_s |I(s,s) - (μ(s) - ρ)|`.
    pub diagonal_identity_error: f64,
    pub delta: f64,
}

impl FdtDiagnostics {
    /// `sup |G(t+τ, t)|` over `t >= t_min`, `τ <= tau_max`.
    pub fn g_sup(&self, t_min: f64, tau_max: f64) -> f64 {
        let n = self.g.points() - 1;
        let j0 = (t_min / self.delta - 1e-9).ceil().max(0.0) as usize;
        let m = (tau_max / self.delta + 1e-9).floor() as usize;
        let mut best: f64 = 0.0;
        for j in j0..=n {
            for i in j..=(j + m).min(n) {
                best = best.max(self.g.get(i, j).abs());
            }
        }
        best
    }
}

/// `∂_t C(s_i, t)` along row `i`, with the diagonal end taken from below.
fn row_time_derivative(grid: &TwoTimeGrid, i: usize) -> Vec<f64> {
    let h = grid.delta;
    let row = grid.c.row(i);
    match i {
        0 => {
            // d/dt K = ∂_1 C + ∂_2 C at the origin
            if grid.steps() == 0 {
                vec![0.0]
            } else {
                vec![(grid.k[1] - grid.c.get(1, 0)) / h]
            }
        }
        _ => mesh_derivative(row, h),
    }
}

pub fn fdt_violation<V: Covariance>(
    grid: &TwoTimeGrid,
    cov: &V,
    beta: f64,
    i_hat_window: f64,
) -> FdtDiagnostics {
    let n = grid.steps();
    let h = grid.delta;
    let b2 = beta * beta;
    let mut g = Triangle::zeros(n + 1);
    for i in 0..=n {
        let dc = row_time_derivative(grid, i);
        for (j, v) in g.row_mut(i).iter_mut().enumerate() {
            *v = grid.r.get(i, j) - 2.0 * dc[j];
        }
    }
    let rows: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let ci = grid.c.row(i);
            let nu1: Vec<f64> = ci.iter().map(|&x| cov.nu_d1(x)).collect();
            let a: Vec<f64> = ci
                .iter()
                .zip(g.row(i))
                .map(|(&x, &gv)| gv * cov.nu_d2(x))
                .collect();
            (0..=i)
                .map(|j| {
                    let gj = g.row(j);
                    let mut acc = 0.0;
                    if j > 0 {
                        for u in 0..=j {
                            let w = if u == 0 || u == j { 0.5 } else { 1.0 };
                            acc += w * (grid.c.sym(j, u) * a[u] + nu1[u] * gj[u]);
                        }
                    }
                    b2 * h * acc - 2.0 * b2 * nu1[0] * grid.c.get(j, 0)
                })
                .collect()
        })
        .collect();
    let mut i_field = Triangle::zeros(n + 1);
    for (i, row) in rows.into_iter().enumerate() {
        i_field.row_mut(i).copy_from_slice(&row);
    }
    let rho = 0.5 + 2.0 * b2 * cov.nu_d1(1.0);
    let diagonal_identity_error = (0..=n)
        .map(|s| (i_field.get(s, s) - (grid.mu[s] - rho)).abs())
        .fold(0.0, f64::max);
    let m = ((i_hat_window / h + 1e-9).floor() as usize).min(n);
    let i_hat = (0..=m).map(|k| i_field.get(n, n - k)).sum::<f64>() / (m + 1) as f64;
    FdtDiagnostics {
        g,
        i: i_field,
        rho,
        i_hat,
        diagonal_identity_error,
        delta: h,
    }
}

/// Largest `|∫_{t₁}^{t₂} R(s,u) du|² / ((t₂-t₁) sup K)` over sampled
/// `t₁ < t₂ <= s`. Rows `s` and left ends `t₁` are sampled with a stride
/// that keeps about 300 of each; right ends `t₂` are scanned exhaustively.
pub fn response_bound_check(grid: &TwoTimeGrid) -> f64 {
    let n = grid.steps();
    let h = grid.delta;
    let k_sup = grid.k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stride = (n / 300).max(1);
    let mut rows: Vec<usize> = (0..=n).step_by(stride).collect();
    if *rows.last().unwrap() != n {
        rows.push(n);
    }
    rows.par_iter()
        .map(|&s| {
            let row = grid.r.row(s);
            let mut prefix = vec![0.0; s + 1];
            for u in 1..=s {
                prefix[u] = prefix[u - 1] + 0.5 * h * (row[u - 1] + row[u]);
            }
            let mut best: f64 = 0.0;
            for a in (0..s).step_by(stride) {
                for b in (a + 1)..=s {
                    let v = prefix[b] - prefix[a];
                    best = best.max(v * v / ((b - a) as f64 * h * k_sup));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}
