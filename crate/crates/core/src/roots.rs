//! Bracketing scans and bisection on `[0, 1]`.
//!
//! All searches run a downward scan on a `2^12`-interval grid followed by
//! bisection. Touching (double) roots are located through the derivative,
//! since a sign scan of the function alone cannot bracket them.

pub(crate) const SCAN_INTERVALS: usize = 1 << 12;

/// Slack under which a local maximum of `f` is treated as touching zero.
pub(crate) const TOUCH_SLACK: f64 = 1e-12;

/// Bisection for a sign change of `f` on `[lo, hi]`, where `f(lo) >= 0` iff
/// `lo_nonneg`. Returns the final bracket.
fn bisect(
    f: &dyn Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    lo_nonneg: bool,
) -> (f64, f64) {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) >= 0.0) == lo_nonneg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Root of a derivative that changes sign from `>= 0` at `lo` to `<= 0` at `hi`.
fn critical_point(df: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if df(lo) == 0.0 {
        return lo;
    }
    if df(hi) == 0.0 {
        return hi;
    }
    let (a, b) = bisect(df, lo, hi, 0.0, true);
    0.5 * (a + b)
}

/// `sup { x in [0,1] : f(x) >= 0 }`, or `None` when the set is empty.
///
/// `df` must be the derivative of `f`. The result is accurate to `tol` for
/// transversal crossings; touching roots are resolved to machine precision
/// through the critical point of `f`.
pub(crate) fn sup_nonneg(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, tol: f64) -> Option<f64> {
    let m = SCAN_INTERVALS;
    let x = |k: usize| k as f64 / m as f64;
    if f(1.0) >= 0.0 {
        return Some(1.0);
    }
    let mut f_hi = f(1.0);
    let mut df_hi = df(1.0);
    for k in (0..m).rev() {
        let (lo, hi) = (x(k), x(k + 1));
        let f_lo = f(lo);
        let df_lo = df(lo);
        debug_assert!(f_hi < 0.0);
        // interior local maximum that may touch zero
        if df_lo >= 0.0 && df_hi <= 0.0 {
            let c = critical_point(df, lo, hi);
            let fc = f(c);
            // a maximum within the slack of zero is a touching root; the
            // crossings of such a bump are only defined to O(√slack)
            if fc.abs() <= TOUCH_SLACK {
                return Some(c);
            }
            if fc > 0.0 {
                let (a, _) = bisect(f, c, hi, tol, true);
                return Some(a);
            }
        }
        if f_lo >= 0.0 {
            let (a, _) = bisect(f, lo, hi, tol, true);
            return Some(a);
        }
        f_hi = f_lo;
        df_hi = df_lo;
    }
    None
}

/// Largest maximiser of `f` on `[0,1]` together with the maximum value.
///
/// Candidates are the endpoints and all interior critical points bracketed by
/// the grid scan; ties within `TOUCH_SLACK` (relative) go to the largest `x`.
pub(crate) fn largest_argmax(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let m = SCAN_INTERVALS;
    let x = |k: usize| k as f64 / m as f64;
    let mut candidates = vec![0.0, 1.0];
    let mut df_hi = df(1.0);
    for k in (0..m).rev() {
        let (lo, hi) = (x(k), x(k + 1));
        let df_lo = df(lo);
        if df_lo >= 0.0 && df_hi <= 0.0 {
            candidates.push(critical_point(df, lo, hi));
        }
        df_hi = df_lo;
    }
    let best = candidates
        .iter()
        .map(|&c| f(c))
        .fold(f64::NEG_INFINITY, f64::max);
    let slack = TOUCH_SLACK * best.abs().max(1.0);
    let arg = candidates
        .iter()
        .copied()
        .filter(|&c| f(c) >= best - slack)
        .fold(f64::NEG_INFINITY, f64::max);
    (arg, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transversal_crossing() {
        // 4(1-x)^2 - 1 >= 0 iff x <= 1/2
        let f = |x: f64| 4.0 * (1.0 - x).powi(2) - 1.0;
        let df = |x: f64| -8.0 * (1.0 - x);
        let s = sup_nonneg(&f, &df, 1e-14).unwrap();
        assert!((s - 0.5).abs() < 1e-13);
    }

    #[test]
    fn touching_root_off_grid() {
        let c = 0.3 + 1e-5;
        let f = |x: f64| -(x - c) * (x - c);
        let df = |x: f64| -2.0 * (x - c);
        let s = sup_nonneg(&f, &df, 1e-14).unwrap();
        assert!((s - c).abs() < 1e-12, "{s}");
    }

    #[test]
    fn empty_set() {
        let f = |x: f64| -1.0 - x;
        let df = |_: f64| -1.0;
        assert!(sup_nonneg(&f, &df, 1e-12).is_none());
    }

    #[test]
    fn argmax_prefers_largest_tie() {
        // two equal maxima at 0.25 and 0.75
        let f = |x: f64| -((x - 0.25) * (x - 0.75)).powi(2);
        let df = |x: f64| -2.0 * (x - 0.25) * (x - 0.75) * (2.0 * x - 1.0);
        let (arg, best) = largest_argmax(&f, &df);
        assert!((arg - 0.75).abs() < 1e-12);
        assert!(best.abs() < 1e-20);
    }
}
