//! Uniform time meshes and lower-triangular two-time fields.

use crate::error::{invalid, Result};

/// Number of mesh intervals for horizon `horizon` and step `delta`.
///
/// The horizon must be an integer multiple of the step up to a relative
/// slack of `1e-9`.
pub fn steps_for(delta: f64, horizon: f64) -> Result<usize> {
    if !(delta > 0.0) || !delta.is_finite() {
        return invalid(format!("step must be positive and finite, got {delta}"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return invalid(format!(
            "horizon must be positive and finite, got {horizon}"
        ));
    }
    let ratio = horizon / delta;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return invalid(format!(
            "horizon {horizon} is not an integer multiple of the step {delta}"
        ));
    }
    Ok(n as usize)
}

/// Trapezoid weight of node `u` on the closed index range `[lo, hi]`.
#[inline]
pub fn trap_weight(u: usize, lo: usize, hi: usize) -> f64 {
    if lo == hi {
        0.0
    } else if u == lo || u == hi {
        0.5
    } else {
        1.0
    }
}

/// Lower-triangular field `F[i][j]`, `0 <= j <= i < points`, stored row-major
/// in a single flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangle {
    points: usize,
    data: Vec<f64>,
}

impl Triangle {
    pub fn zeros(points: usize) -> Self {
        Triangle {
            points,
            data: vec![0.0; points * (points + 1) / 2],
        }
    }

    pub fn from_fn(points: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Triangle::zeros(points);
        for i in 0..points {
            for (j, v) in t.row_mut(i).iter_mut().enumerate() {
                *v = f(i, j);
            }
        }
        t
    }

    pub fn from_raw(points: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != points * (points + 1) / 2 {
            return invalid(format!(
                "triangle with {points} points needs {} values, got {}",
                points * (points + 1) / 2,
                data.len()
            ));
        }
        Ok(Triangle { points, data })
    }

    /// Number of mesh points per side (steps + 1).
    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    fn offset(i: usize) -> usize {
        i * (i + 1) / 2
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i && i < self.points);
        self.data[Self::offset(i) + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i < self.points);
        self.data[Self::offset(i) + j] = v;
    }

    /// Symmetric read: `F(i, j)` for `i >= j`, `F(j, i)` otherwise.
    #[inline]
    pub fn sym(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.get(i, j)
        } else {
            self.get(j, i)
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let o = Self::offset(i);
        &self.data[o..o + i + 1]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let o = Self::offset(i);
        &mut self.data[o..o + i + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn min(&self) -> f64 {
        self.iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup |self - other|` over the common triangle.
    pub fn sup_distance(&self, other: &Triangle) -> f64 {
        assert_eq!(self.points, other.points, "triangle sizes differ");
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Linear interpolation of mesh samples `values[k] = f(k * delta)` at `x`.
pub fn interp1(values: &[f64], delta: f64, x: f64) -> f64 {
    let pos = (x / delta).max(0.0);
    let k = (pos.floor() as usize).min(values.len() - 1);
    if k + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let w = pos - k as f64;
    values[k] * (1.0 - w) + values[k + 1] * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_rejects_non_multiple() {
        assert_eq!(steps_for(0.01, 12.0).unwrap(), 1200);
        assert!(steps_for(0.3, 1.0).is_err());
        assert!(steps_for(0.0, 1.0).is_err());
        assert!(steps_for(0.1, -1.0).is_err());
    }

    #[test]
    fn triangle_symmetric_read() {
        let t = Triangle::from_fn(5, |i, j| (10 * i + j) as f64);
        assert_eq!(t.get(3, 1), 31.0);
        assert_eq!(t.sym(1, 3), 31.0);
        assert_eq!(t.row(2), &[20.0, 21.0, 22.0]);
        assert_eq!(t.as_slice().len(), 15);
    }

    #[test]
    fn interpolation_hits_nodes() {
        let v = [0.0, 1.0, 4.0];
        assert_eq!(interp1(&v, 0.5, 0.5), 1.0);
        assert_eq!(interp1(&v, 0.5, 0.75), 2.5);
        assert_eq!(interp1(&v, 0.5, 3.0), 4.0);
    }
}
