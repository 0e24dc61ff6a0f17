//! Bisection for non-decreasing functions.
//!
//! The conditional CDFs inverted by the sampler have flat stretches and a
//! jump on the diagonal, so the solver only assumes monotonicity: it keeps
//! the invariant g(lo) <= target <= g(hi) and converges to the left edge of
//! any jump that crosses the target.

use crate::error::{Error, Result};

/// Find `t` in `[lo, hi]` with `g(t)` as close to `target` as monotone
/// bisection allows: either `|g(t) - target| <= tol` or the final bracket
/// width is below `tol`.
///
/// `g` must be non-decreasing. A jump crossing the target converges to the
/// jump location; a flat stretch at the target returns a point inside it.
pub fn find_root_monotone<G: Fn(f64) -> f64>(
    g: G,
    lo: f64,
    hi: f64,
    target: f64,
    tol: f64,
) -> Result<f64> {
    debug_assert!(tol > 0.0);
    let g_lo = g(lo);
    let g_hi = g(hi);
    // the bracket check gets a little slack so callers may pass targets that
    // equal an endpoint value up to rounding
    let slack = tol.max(1e-9 * (1.0 + target.abs()));
    if !(g_lo <= target + slack) || !(g_hi >= target - slack) {
        return Err(Error::Bracket {
            lo,
            hi,
            target,
            g_lo,
            g_hi,
        });
    }

    let mut a = lo;
    let mut b = hi;
    // 2^-200 of the initial width is far below any tol in use; the loop is
    // really bounded by the width test
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm == target {
            return Ok(mid);
        }
        if gm < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_hits_target() {
        let t = find_root_monotone(|x| x, 0.0, 1.0, 0.3, 1e-12).unwrap();
        assert!((t - 0.3).abs() < 1e-11);
    }

    #[test]
    fn quadratic_hits_target() {
        let t = find_root_monotone(|x| x * x, 0.0, 1.0, 0.25, 1e-12).unwrap();
        assert!((t - 0.5).abs() < 1e-11);
    }

    #[test]
    fn jump_crossing_returns_jump_location() {
        // g jumps 0.4 -> 0.7 at t = 0.5; target 0.6 lies inside the jump
        let g = |x: f64| if x < 0.5 { 0.8 * x } else { 0.4 * x + 0.5 };
        let t = find_root_monotone(g, 0.0, 1.0, 0.6, 1e-12).unwrap();
        assert!((t - 0.5).abs() < 1e-11);
    }

    #[test]
    fn flat_stretch_returns_interior_point() {
        let g = |x: f64| {
            if x < 0.25 {
                x
            } else if x < 0.75 {
                0.25
            } else {
                x - 0.5
            }
        };
        let t = find_root_monotone(g, 0.0, 1.0, 0.25, 1e-12).unwrap();
        assert!((g(t) - 0.25).abs() < 1e-12);
        assert!((0.25..=0.75).contains(&t));
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(matches!(
            find_root_monotone(|x| x, 0.0, 1.0, 2.0, 1e-9),
            Err(Error::Bracket { .. })
        ));
    }
}
