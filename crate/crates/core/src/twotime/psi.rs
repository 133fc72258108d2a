use super::memory::{memory_row, psi_integral};
use super::{Mode, TwoTimeGrid};
use crate::error::{invalid, Result};
use crate::mesh::Triangle;
use crate::model::Covariance;

/// The map `(R, C) ↦ (R̃, C̃)` whose fixed point is the spherical solution.
///
/// `μ` is computed from the input pair; `R̃` solves the response equation
/// with its own memory (quadratic in `R̃`, driven by the input `C`), and
/// `C̃` solves the correlation equation with memory taken entirely from the
/// input pair. Both use the implicit trapezoid rule in `s`.
pub fn apply_psi<V: Covariance>(grid: &TwoTimeGrid, cov: &V, beta: f64) -> Result<TwoTimeGrid> {
    if !grid.is_spherical() {
        return invalid("the map acts on spherical grids only");
    }
    let n = grid.steps();
    let h = grid.delta;
    let b2 = beta * beta;
    let (r_in, c_in) = (&grid.r, &grid.c);

    let mu: Vec<f64> = (0..=n)
        .map(|i| 0.5 + b2 * psi_integral(r_in, c_in, cov, i, i, h))
        .collect();

    // correlation forcing from the input pair, row by row
    let mut force = Triangle::zeros(n + 1);
    let mut scratch_r = vec![0.0; n + 1];
    let mut scratch_c = vec![0.0; n + 1];
    for i in 0..=n {
        memory_row(r_in, c_in, cov, i, h, &mut scratch_r, &mut scratch_c);
        force.row_mut(i).copy_from_slice(&scratch_c[..=i]);
    }

    let mut c_out = Triangle::zeros(n + 1);
    for j in 0..=n {
        c_out.set(j, j, 1.0);
        for i in (j + 1)..=n {
            let prev = c_out.get(i - 1, j);
            let explicit = prev * (1.0 - 0.5 * h * mu[i - 1])
                + 0.5 * h * b2 * (force.get(i - 1, j) + force.get(i, j));
            c_out.set(i, j, explicit / (1.0 + 0.5 * h * mu[i]));
        }
    }

    // response: column-major copy for contiguous memory sums
    let mut cols: Vec<Vec<f64>> = (0..=n).map(|_| vec![1.0]).collect();
    let mut r_out = Triangle::zeros(n + 1);
    r_out.set(0, 0, 1.0);
    let mut f_prev = vec![-mu[0]];
    let mut q = vec![0.0; n + 1];
    for i in 1..=n {
        let nu2: Vec<f64> = c_in.row(i).iter().map(|&x| cov.nu_d2(x)).collect();
        r_out.set(i, i, 1.0);
        q[i] = nu2[i];
        let mut f_new = vec![0.0; i + 1];
        f_new[i] = -mu[i];
        for j in (0..i).rev() {
            // Σ_{u=j+1}^{i-1} R̃(u,j) R̃(i,u) ν''(C(i,u))
            let col = &cols[j];
            let interior: f64 = col[1..i - j]
                .iter()
                .zip(&q[j + 1..i])
                .map(|(a, b)| a * b)
                .sum();
            let lin = -mu[i] + 0.5 * b2 * h * (nu2[j] + nu2[i]);
            let explicit = r_out.get(i - 1, j) + 0.5 * h * (f_prev[j] + b2 * h * interior);
            let v = explicit / (1.0 - 0.5 * h * lin);
            r_out.set(i, j, v);
            q[j] = v * nu2[j];
            f_new[j] = lin * v + b2 * h * interior;
        }
        for j in 0..i {
            cols[j].push(r_out.get(i, j));
        }
        f_prev = f_new;
    }

    Ok(TwoTimeGrid {
        delta: h,
        horizon: grid.horizon,
        beta,
        mode: Mode::Spherical,
        terms: cov.mixture_terms(),
        r: r_out,
        c: c_out,
        k: vec![1.0; n + 1],
        mu,
    })
}
