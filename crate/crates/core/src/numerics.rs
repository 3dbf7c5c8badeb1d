//! Scalar root bracketing and 1-D minimization shared by the quantile
//! solvers and the tuning code.

/// Default relative tolerance in the abscissa for bisection solvers.
pub const XTOL_REL: f64 = 1e-12;

/// Default tolerance on |f(x) - target| for CDF inversion.
pub const FTOL: f64 = 1e-14;

const MAX_BISECT_ITER: usize = 400;

/// Finds `x` in `[lo, hi]` with `f(x) = target` for nondecreasing `f`,
/// assuming `f(lo) <= target <= f(hi)`.
///
/// Stops when the bracket is below `xtol_rel` relative to its endpoints or
/// when `|f(mid) - target| <= ftol`. The bracket is maintained throughout, so
/// the result is always inside the initial interval.
pub fn bisect_increasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    xtol_rel: f64,
    ftol: f64,
) -> f64 {
    debug_assert!(lo <= hi);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECT_ITER {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval no longer splittable in f64
        }
        let fm = f(mid);
        if (fm - target).abs() <= ftol {
            return mid;
        }
        if fm < target {
            lo = mid;
        } else {
            hi = mid;
        }
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        if hi - lo <= xtol_rel * scale {
            break;
        }
    }
    mid
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f_min)`. `f` is assumed unimodal on the interval.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const PHI: f64 = 1.618_033_988_749_895;
    const RESP: f64 = 2.0 - PHI;

    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);

    while (b - a).abs() > xtol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = f(x2);
        }
    }

    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
