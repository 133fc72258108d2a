//! Two-time integro-differential systems for the correlation `C(s,t)` and
//! response `R(s,t)` on a uniform triangular mesh.
//!
//! Two closures of the system are supported: the spherical one, where
//! `C(t,t) = 1` and the Lagrange multiplier `μ(s)` is fixed by the memory,
//! and the soft one, where `K(s) = C(s,s)` evolves under a confining
//! potential and `μ(s) = f'(K(s))`.

mod checkpoint;
mod diagnostics;
mod memory;
mod psi;
mod solver;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
};
pub use diagnostics::{
    fdt_section, fdt_violation, response_bound_check, FdtDiagnostics, DEFAULT_I_HAT_WINDOW,
};
pub use psi::apply_psi;
pub use solver::{solve_soft, solve_spherical, MAX_STEPS, SOFT_STIFFNESS_LIMIT};

use crate::error::{invalid, Result};
use crate::mesh::Triangle;
use crate::model::SoftPotential;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Spherical,
    Soft { potential: SoftPotential, k0: f64 },
}

/// Solved (or mapped) two-time fields on the mesh `s_i = iΔ`, `0 <= i <= n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoTimeGrid {
    pub delta: f64,
    pub horizon: f64,
    pub beta: f64,
    pub mode: Mode,
    /// Mixture terms `(p, a_p)` the grid was solved for, when known.
    pub terms: Vec<(u32, f64)>,
    pub r: Triangle,
    /// Lower triangle of the symmetric correlation.
    pub c: Triangle,
    /// Diagonal `K(s) = C(s,s)`.
    pub k: Vec<f64>,
    pub mu: Vec<f64>,
}

impl TwoTimeGrid {
    /// Number of mesh intervals.
    pub fn steps(&self) -> usize {
        self.r.points() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    /// Mesh index of time `t`, which must be a mesh point within the horizon.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.delta;
        let k = x.round();
        if !(t >= 0.0) || (x - k).abs() > 1e-9 * x.max(1.0) || k as usize > self.steps() {
            return invalid(format!(
                "time {t} is not a mesh point in [0, {}]",
                self.horizon
            ));
        }
        Ok(k as usize)
    }

    /// `C(s_i, s_j)` for any order of the arguments.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.c.sym(i, j)
    }

    /// `R(s_i, s_j)`, zero above the diagonal.
    pub fn response(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.r.get(i, j)
        }
    }

    /// Integrated response `χ(s_i, s_j) = ∫_0^{s_j} R(s_i, u) du`
    /// (trapezoid rule, `s_j` capped at `s_i`).
    pub fn integrated_response(&self, i: usize, j: usize) -> f64 {
        let j = j.min(i);
        let row = self.r.row(i);
        let mut acc = 0.0;
        for u in 1..=j {
            acc += 0.5 * self.delta * (row[u - 1] + row[u]);
        }
        acc
    }

    pub fn is_spherical(&self) -> bool {
        matches!(self.mode, Mode::Spherical)
    }
}
