//! Safeguarded Newton iteration for monotone scalar equations.

use crate::error::{Error, Result};

/// Root of an increasing function on `[lo, hi]` with `g(lo) ≤ 0 ≤ g(hi)`.
///
/// `eval` returns `(g(x), g′(x))`. Newton steps that leave the current
/// bracket, or that come from a non-positive derivative, fall back to
/// bisection. Iteration stops once the bracket or the step has shrunk to a
/// few ulps, so two calls with different brackets land on the same double up
/// to rounding.
pub(crate) fn increasing_root(
    eval: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    max_iter: usize,
) -> Result<(f64, usize)> {
    debug_assert!(lo <= hi);
    let mut x = start.clamp(lo, hi);
    let mut last = (f64::NAN, f64::NAN);
    for iter in 1..=max_iter {
        let (g, dg) = eval(x);
        last = (x, g);
        if g == 0.0 {
            return Ok((x, iter));
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / dg;
        let next = if dg > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = next.abs().max(f64::MIN_POSITIVE);
        if (next - x).abs() <= 2.0 * f64::EPSILON * scale || hi - lo <= 4.0 * f64::EPSILON * scale {
            // final polish: take whichever endpoint-free estimate has the
            // smaller residual
            let (g_next, _) = eval(next);
            return Ok(if g_next.abs() <= g.abs() { (next, iter + 1) } else { (x, iter) });
        }
        x = next;
    }
    Err(Error::RootNotConverged {
        iterations: max_iter,
        lo,
        hi,
        residual: last.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let (x, _) = increasing_root(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 2.0, 100).unwrap();
        assert!((x - 2f64.cbrt()).abs() < 4e-16);
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        let (x, _) = increasing_root(|x| (x - 0.3, 0.0), 0.0, 1.0, 0.9, 200).unwrap();
        assert!((x - 0.3).abs() < 1e-15);
    }

    #[test]
    fn exhaustion_reports_bracket() {
        let err = increasing_root(|x| (x - 0.3, 0.0), 0.0, 1.0, 0.9, 3).unwrap_err();
        match err {
            Error::RootNotConverged { iterations, lo, hi, .. } => {
                assert_eq!(iterations, 3);
                assert!(lo <= 0.3 && 0.3 <= hi);
            }
            other => panic!("{other}"),
        }
    }
}
