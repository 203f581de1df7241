//! Bracketing root search: geometric bracket expansion plus bisection.

/// Failure modes of the bracketing solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("no sign change found between {lo} and {hi} after bracket expansion")]
    NoBracket { lo: f64, hi: f64 },
    #[error("bisection did not reach tolerance {tol} within {max_iter} iterations")]
    MaxIterations { tol: f64, max_iter: u32 },
    #[error("objective returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

fn check(x: f64, v: f64) -> Result<f64, RootError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(RootError::NonFinite { x })
    }
}

/// Bisect `f` on `[lo, hi]`, which must straddle a sign change, until the
/// bracket width is at most `tol`.
pub fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: u32,
) -> Result<f64, RootError> {
    let mut flo = check(lo, f(lo))?;
    let fhi = check(hi, f(hi))?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NoBracket { lo, hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol {
            return Ok(mid);
        }
        let fm = check(mid, f(mid))?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(RootError::MaxIterations { tol, max_iter })
}

/// Expand a bracket for a root of a monotone increasing `f` starting at
/// `x0`, doubling the step toward the side indicated by `f(x0)`'s sign and
/// clamping to `(lo_limit, hi_limit)`. Returns `(lo, hi)` straddling the
/// root.
pub fn bracket_monotone<F: Fn(f64) -> f64>(
    f: &F,
    x0: f64,
    lo_limit: f64,
    hi_limit: f64,
    max_expansions: u32,
) -> Result<(f64, f64), RootError> {
    let f0 = check(x0, f(x0))?;
    if f0 == 0.0 {
        return Ok((x0, x0));
    }
    let go_right = f0 < 0.0;
    let mut step = 1e-3 * (1.0 + x0.abs());
    let mut prev = x0;
    for _ in 0..max_expansions {
        let cand = if go_right {
            (x0 + step).min(hi_limit)
        } else {
            (x0 - step).max(lo_limit)
        };
        let fc = check(cand, f(cand))?;
        if fc == 0.0 {
            return Ok((cand, cand));
        }
        if fc.signum() != f0.signum() {
            return Ok(if go_right { (prev, cand) } else { (cand, prev) });
        }
        if cand == lo_limit || cand == hi_limit {
            // Hit the domain edge without a sign change.
            return Err(RootError::NoBracket { lo: lo_limit, hi: hi_limit });
        }
        prev = cand;
        step *= 2.0;
    }
    Err(RootError::NoBracket { lo: lo_limit, hi: hi_limit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_cubic_root() {
        let r = bisect(&|x: f64| x * x * x - 2.0, 0.0, 2.0, 1e-12, 200).unwrap();
        assert!((r - 2.0f64.cbrt()).abs() < 1e-10);
    }

    #[test]
    fn bracket_then_bisect_on_log() {
        let f = |x: f64| x.ln() - 3.0;
        let (lo, hi) = bracket_monotone(&f, 1.0, 1e-6, 1e6, 200).unwrap();
        let r = bisect(&f, lo, hi, 1e-12, 200).unwrap();
        assert!((r - 3.0f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn unbracketable_target_errors() {
        // ln(x) - 100 has its root far beyond the clamp.
        let f = |x: f64| x.ln() - 100.0;
        assert!(matches!(
            bracket_monotone(&f, 1.0, 1e-6, 1e6, 200),
            Err(RootError::NoBracket { .. })
        ));
    }
}
