//! Bracketed scalar root finding.

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Bisection for a continuous `f` with `f(lo)` and `f(hi)` of opposite sign
/// (either orientation). Stops when `|f| <= tol`, the bracket collapses to
/// machine width, or after `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Root {
    let f_lo = f(lo);
    if f_lo.abs() <= tol {
        return Root {
            x: lo,
            value: f_lo,
            iterations: 0,
        };
    }
    let positive_at_lo = f_lo > 0.0;
    let mut best = Root {
        x: lo,
        value: f_lo,
        iterations: 0,
    };
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() < best.value.abs() {
            best = Root {
                x: mid,
                value: v,
                iterations: it,
            };
        }
        if v.abs() <= tol {
            return Root {
                x: mid,
                value: v,
                iterations: it,
            };
        }
        if (v > 0.0) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= f64::EPSILON * mid.abs().max(1e-300) {
            return Root {
                x: mid,
                value: v,
                iterations: it,
            };
        }
        best.iterations = it;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200);
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn decreasing_orientation() {
        let r = bisect(|i| 2.0 - i, 0.0, 5.0, 1e-12, 200);
        assert!((r.x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sixty_halvings_reach_machine_width_on_0_4() {
        // 4 * 2^-60 < 1e-15
        let mut lo = 0.0f64;
        let mut hi = 4.0f64;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid > std::f64::consts::E / 2.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(hi - lo <= 1e-15);
    }
}
