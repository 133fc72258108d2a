use rayon::prelude::*;

use crate::mesh::Triangle;
use crate::model::Covariance;

const CHUNK: usize = 64;

/// Memory integrals of the response and correlation equations on row `i`.
///
/// For every `j <= i` writes
/// `resp[j] = ∫_{t_j}^{s_i} R(u,t_j) R(s_i,u) ν''(C(s_i,u)) du` and
/// `corr[j] = ∫_0^{s_i} C(u,t_j) R(s_i,u) ν''(C(s_i,u)) du
///          + ∫_0^{t_j} ν'(C(s_i,u)) R(t_j,u) du`,
/// all by the trapezoid rule. Rows `0..=i` of both fields must be filled.
pub(crate) fn memory_row<V: Covariance>(
    r: &Triangle,
    c: &Triangle,
    cov: &V,
    i: usize,
    delta: f64,
    resp: &mut [f64],
    corr: &mut [f64],
) {
    let ri = r.row(i);
    let ci = c.row(i);
    let g: Vec<f64> = ri
        .iter()
        .zip(ci)
        .map(|(&rv, &cv)| rv * cov.nu_d2(cv))
        .collect();
    let v: Vec<f64> = ci.iter().map(|&cv| cov.nu_d1(cv)).collect();
    let (g, v) = (&g[..], &v[..]);
    resp[..=i]
        .par_chunks_mut(CHUNK)
        .zip(corr[..=i].par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(chunk, (out_r, out_c))| {
            let j0 = chunk * CHUNK;
            let len = out_r.len();
            let j1 = j0 + len - 1;
            // column sums over u >= j, accumulated row by row
            let mut col_r = vec![0.0; len];
            let mut col_c = vec![0.0; len];
            for u in j0..=i {
                let gu = g[u];
                let hi = u.min(j1);
                let ru = &r.row(u)[j0..=hi];
                let cu = &c.row(u)[j0..=hi];
                for k in 0..ru.len() {
                    col_r[k] += gu * ru[k];
                    col_c[k] += gu * cu[k];
                }
            }
            for k in 0..len {
                let j = j0 + k;
                let sr = col_r[k] - 0.5 * g[j] * r.get(j, j) - 0.5 * g[i] * ri[j];
                out_r[k] = delta * sr;
                let cj = c.row(j);
                let below: f64 = cj[..j].iter().zip(&g[..j]).map(|(a, b)| a * b).sum();
                let sc = below + col_c[k] - 0.5 * g[0] * c.sym(0, j) - 0.5 * g[i] * ci[j];
                let rj = r.row(j);
                let tail = if j == 0 {
                    0.0
                } else {
                    rj.iter().zip(&v[..=j]).map(|(a, b)| a * b).sum::<f64>()
                        - 0.5 * (rj[0] * v[0] + rj[j] * v[j])
                };
                out_c[k] = delta * (sc + tail);
            }
        });
}

/// `∫_0^{s_i} ψ(C(s_i,u)) R(s_i,u) du` over the first `upto` nodes of row
/// `i` with trapezoid weights for the full interval `[0, s_i]` (the node
/// `u = i` is excluded when `upto == i`).
pub(crate) fn psi_integral<V: Covariance>(
    r: &Triangle,
    c: &Triangle,
    cov: &V,
    i: usize,
    upto: usize,
    delta: f64,
) -> f64 {
    if i == 0 {
        return 0.0;
    }
    let ri = r.row(i);
    let ci = c.row(i);
    let mut acc = 0.0;
    for u in 0..=upto.min(i) {
        let w = if u == 0 || u == i { 0.5 } else { 1.0 };
        acc += w * cov.psi(ci[u]) * ri[u];
    }
    delta * acc
}
