use super::simulate::LangevinRun;
use crate::error::{invalid, Result};
use crate::twotime::TwoTimeGrid;

/// Discrepancies between replica-averaged empirical observables and a
/// solved grid, over all stored pairs `s >= t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub c_sup: f64,
    pub c_rms: f64,
    pub chi_sup: f64,
    pub chi_rms: f64,
    /// Replica standard errors at the location of each sup.
    pub c_sup_se: f64,
    pub chi_sup_se: f64,
    /// `max(|difference| - 3·se)` over both observables and all pairs.
    pub excess_over_3se: f64,
    pub pairs: usize,
}

impl Discrepancy {
    pub fn sup(&self) -> f64 {
        self.c_sup.max(self.chi_sup)
    }
}

/// Bilinear interpolation of a mesh function `f(i, j)` at `(x, y)` in
/// units of the mesh step.
fn bilinear(f: impl Fn(usize, usize) -> f64, x: f64, y: f64, last: usize) -> f64 {
    let split = |v: f64| {
        let i = (v.floor() as usize).min(last.saturating_sub(1));
        (i, (v - i as f64).clamp(0.0, 1.0))
    };
    if last == 0 {
        return f(0, 0);
    }
    let (i, fx) = split(x);
    let (j, fy) = split(y);
    let lo = f(i, j) * (1.0 - fy) + f(i, j + 1) * fy;
    let hi = f(i + 1, j) * (1.0 - fy) + f(i + 1, j + 1) * fy;
    lo * (1.0 - fx) + hi * fx
}

/// Interpolated `C(s,t)` and `χ(s,t) = ∫_0^t R(s,u) du` from a grid.
pub fn grid_observables(grid: &TwoTimeGrid, s: f64, t: f64) -> (f64, f64) {
    let last = grid.steps();
    let (x, y) = (s / grid.delta, t / grid.delta);
    let c = bilinear(|i, j| grid.correlation(i, j), x, y, last);
    let chi = bilinear(|i, j| grid.integrated_response(i, j), x, y, last);
    (c, chi)
}

pub fn compare_to_limit(run: &LangevinRun, grid: &TwoTimeGrid) -> Result<Discrepancy> {
    let t_end = *run.times.last().unwrap();
    if t_end > grid.horizon * (1.0 + 1e-9) {
        return invalid(format!(
            "grid horizon {} does not cover the run up to {t_end}",
            grid.horizon
        ));
    }
    let mut d = Discrepancy {
        c_sup: 0.0,
        c_rms: 0.0,
        chi_sup: 0.0,
        chi_rms: 0.0,
        c_sup_se: 0.0,
        chi_sup_se: 0.0,
        excess_over_3se: f64::NEG_INFINITY,
        pairs: 0,
    };
    for (a, &s) in run.times.iter().enumerate() {
        for (b, &t) in run.times[..=a].iter().enumerate() {
            let (c, chi) = grid_observables(grid, s, t);
            let dc = (run.c_mean.get(a, b) - c).abs();
            let dchi = (run.chi_mean.get(a, b) - chi).abs();
            let (sc, schi) = (run.c_se.get(a, b), run.chi_se.get(a, b));
            if dc > d.c_sup {
                d.c_sup = dc;
                d.c_sup_se = sc;
            }
            if dchi > d.chi_sup {
                d.chi_sup = dchi;
                d.chi_sup_se = schi;
            }
            d.c_rms += dc * dc;
            d.chi_rms += dchi * dchi;
            d.excess_over_3se = d.excess_over_3se.max(dc - 3.0 * sc).max(dchi - 3.0 * schi);
            d.pairs += 1;
        }
    }
    d.c_rms = (d.c_rms / d.pairs as f64).sqrt();
    d.chi_rms = (d.chi_rms / d.pairs as f64).sqrt();
    Ok(d)
}
