//! Adaptive Simpson integration.

use crate::error::{Result, SwarmError};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_SUBDIVISIONS: usize = 1_000_000;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, splitting at
/// most `max_subdivisions` times.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_subdivisions: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(SwarmError::invalid("integration bounds must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(f, b, a, tol, max_subdivisions).map(|v| -v);
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol,
        depth: 0,
    }];
    let mut total = 0.0;
    let mut splits = 0usize;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let (lm, rm) = (0.5 * (p.a + m), 0.5 * (m + p.b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || p.depth >= 60 || m <= p.a || m >= p.b {
            total += left + right + delta / 15.0;
            continue;
        }
        splits += 1;
        if splits > max_subdivisions {
            return Err(SwarmError::invalid(
                "quadrature did not converge within the subdivision cap",
            ));
        }
        let half = 0.5 * p.tol;
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: half,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: half,
            depth: p.depth + 1,
        });
    }
    Ok(total)
}

/// Integrates over consecutive pieces of `breaks` (which must be ascending),
/// sharing the tolerance equally.
pub fn piecewise_simpson<F>(f: F, breaks: &[f64], tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    breaks
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], tol / pieces, MAX_SUBDIVISIONS))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_bounds_negate() {
        let v = adaptive_simpson(f64::exp, 1.0, 0.0, 1e-12, 10_000).unwrap();
        assert!((v + (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = adaptive_simpson(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-11, 100_000)
            .unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn subdivision_cap_is_enforced() {
        let r = adaptive_simpson(|x| (1.0 / x).sin(), 1e-6, 1.0, 1e-15, 10);
        assert!(r.is_err());
    }
}
