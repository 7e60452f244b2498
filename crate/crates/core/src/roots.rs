//! Bisection for monotone scalar functions.

/// Finds `z` in `[lo, hi]` with `f(z) = target` for nondecreasing `f`, given
/// `f(lo) <= target <= f(hi)`. Stops when the bracket is narrower than
/// `rel_tol * hi` or after `max_iter` halvings. Returns the upper end of the
/// final bracket, so `f(result) >= target`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Upper bracket for nondecreasing `f`: doubles from `start` until
/// `f(hi) >= target`. `None` if no finite `hi` reaches the target.
pub fn expand_upper<F: Fn(f64) -> f64>(f: F, target: f64, start: f64) -> Option<f64> {
    let mut hi = start;
    loop {
        if f(hi) >= target {
            return Some(hi);
        }
        let next = hi * 2.0;
        if !next.is_finite() {
            return None;
        }
        hi = next;
    }
}
