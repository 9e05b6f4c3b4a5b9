//! Transmission costs and the generalized gamma law that describes them.
//!
//! A satellite broadcasting to its k nearest neighbours pays the squared
//! distance to the k-th one. Under a Poisson approximation of the
//! neighbourhood that cost follows a generalized gamma law with
//! `a = (4πn/3)^(-2/3)`, `d = 3k/2`, `p = 3/2`; because `d/p = k` is an
//! integer, its CDF is a finite Poisson sum in `λ(c) = (c/a)^p`.
//!
//! At moderate `n` the cube boundary inflates costs. The corrected model
//! keeps `d` and `p` and replaces the scale with `0.685 · n^(-0.73)`, an
//! empirical fit valid for `n` in `[100, 1000]` and `k` in `{4, 5, 6}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Result, SwarmError};
use crate::geometry::{knn_all, PointSet};
use crate::quadrature::{piecewise_simpson, DEFAULT_TOLERANCE};

pub const CORRECTION_PREFACTOR: f64 = 0.685;
pub const CORRECTION_EXPONENT: f64 = -0.73;
pub const CORRECTION_RANGE: (usize, usize) = (100, 1000);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenGammaParams {
    /// Scale, in energy units.
    pub a: f64,
    pub d: f64,
    pub p: f64,
}

impl GenGammaParams {
    pub fn new(a: f64, d: f64, p: f64) -> Result<Self> {
        if !(a > 0.0 && d > 0.0 && p > 0.0) || !(a.is_finite() && d.is_finite() && p.is_finite())
        {
            return Err(SwarmError::invalid(format!(
                "generalized gamma parameters must be positive and finite (a={a}, d={d}, p={p})"
            )));
        }
        Ok(GenGammaParams { a, d, p })
    }

    /// `d/p` when it is a positive integer.
    pub fn integer_shape(&self) -> Option<u32> {
        let r = self.d / self.p;
        let k = r.round();
        ((r - k).abs() < 1e-12 && k >= 1.0 && k < u32::MAX as f64).then_some(k as u32)
    }

    pub fn mean(&self) -> f64 {
        let s = self.d / self.p;
        self.a * (ln_gamma(s + 1.0 / self.p) - ln_gamma_shape(s, self.integer_shape())).exp()
    }
}

fn ln_factorial(m: u32) -> f64 {
    (2..=m).map(|j| (j as f64).ln()).sum()
}

fn ln_gamma_shape(s: f64, integer: Option<u32>) -> f64 {
    match integer {
        // Γ(k) = (k-1)!
        Some(k) => ln_factorial(k - 1),
        None => ln_gamma(s),
    }
}

/// P(Poisson(λ) ≥ k), i.e. `1 - e^-λ Σ_{j<k} λ^j/j!`. Below the mean the
/// upper tail is summed directly to avoid cancellation.
pub fn poisson_upper_tail(lambda: f64, k: u32) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if k == 0 {
        return 1.0;
    }
    if lambda.is_infinite() {
        return 1.0;
    }
    if lambda < k as f64 {
        let mut term = (-lambda + k as f64 * lambda.ln() - ln_factorial(k)).exp();
        let mut sum = 0.0;
        let mut j = k as f64;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term;
            j += 1.0;
            term *= lambda / j;
            if term == 0.0 {
                break;
            }
        }
        sum.min(1.0)
    } else {
        let mut term = (-lambda).exp();
        let mut head = 0.0;
        for j in 0..k {
            head += term;
            term *= lambda / (j as f64 + 1.0);
        }
        (1.0 - head).clamp(0.0, 1.0)
    }
}

pub fn gg_pdf(x: f64, params: &GenGammaParams) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(SwarmError::invalid(format!("density needs x >= 0, got {x}")));
    }
    let GenGammaParams { a, d, p } = *params;
    let ln_norm = p.ln() - d * a.ln() - ln_gamma_shape(d / p, params.integer_shape());
    if x == 0.0 {
        return Ok(if d > 1.0 {
            0.0
        } else if d == 1.0 {
            ln_norm.exp()
        } else {
            f64::INFINITY
        });
    }
    Ok((ln_norm + (d - 1.0) * x.ln() - (x / a).powf(p)).exp())
}

pub fn gg_cdf(x: f64, params: &GenGammaParams) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(SwarmError::invalid(format!("CDF needs x >= 0, got {x}")));
    }
    let y = (x / params.a).powf(params.p);
    Ok(match params.integer_shape() {
        Some(k) => poisson_upper_tail(y, k),
        None if y.is_infinite() => 1.0,
        None => gamma_lr(params.d / params.p, y),
    })
}

/// λ(c) = (4πn/3) c^(3/2), the expected number of points in a ball of
/// radius √c.
pub fn ball_intensity(c: f64, n: usize) -> f64 {
    4.0 * PI * n as f64 / 3.0 * c.powf(1.5)
}

/// CDF of the k-th nearest neighbour's squared distance in the Poisson
/// approximation.
pub fn cost_cdf(c: f64, n: usize, k: usize) -> Result<f64> {
    if c < 0.0 || c.is_nan() {
        return Err(SwarmError::invalid(format!("cost must be >= 0, got {c}")));
    }
    if n == 0 || k == 0 {
        return Err(SwarmError::invalid("n and k must be positive"));
    }
    Ok(poisson_upper_tail(ball_intensity(c, n), k as u32))
}

fn check_probability(u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(SwarmError::invalid(format!(
            "quantile level must lie in (0, 1), got {u}"
        )));
    }
    Ok(())
}

/// Inverts a strictly increasing CDF on `[0, ∞)` by doubling a bracket from
/// `start` and bisecting until the bracket cannot shrink further.
fn invert_cdf(u: f64, start: f64, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = start.max(f64::MIN_POSITIVE);
    while cdf(hi) <= u {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::MAX;
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (cdf(lo) - u).abs() < (cdf(hi) - u).abs() {
        lo
    } else {
        hi
    }
}

/// Quantile of a generalized gamma law. Integer `d/p` uses the Poisson-sum
/// CDF, anything else the regularized incomplete gamma function.
pub fn gg_quantile(u: f64, params: &GenGammaParams) -> Result<f64> {
    check_probability(u)?;
    let params = *params;
    Ok(invert_cdf(u, params.a, |x| {
        gg_cdf(x, &params).expect("x is non-negative")
    }))
}

/// Quantile of [`cost_cdf`] for the uncorrected `(n, k)` law.
pub fn cost_quantile(u: f64, n: usize, k: usize) -> Result<f64> {
    check_probability(u)?;
    cost_cdf(0.0, n, k)?;
    let start = uncorrected_scale(n);
    Ok(invert_cdf(u, start, |c| {
        poisson_upper_tail(ball_intensity(c, n), k as u32)
    }))
}

pub fn uncorrected_scale(n: usize) -> f64 {
    (4.0 * PI * n as f64 / 3.0).powf(-2.0 / 3.0)
}

/// `0.685 · n^(-0.73)`. Values of `n` outside [`CORRECTION_RANGE`] are
/// allowed; check [`within_correction_range`] to flag extrapolation.
pub fn corrected_scale(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(SwarmError::invalid("n must be positive"));
    }
    Ok(CORRECTION_PREFACTOR * (n as f64).powf(CORRECTION_EXPONENT))
}

pub fn within_correction_range(n: usize) -> bool {
    (CORRECTION_RANGE.0..=CORRECTION_RANGE.1).contains(&n)
}

/// The cost law for a `(n, k)` swarm, with or without the finite-size
/// correction of the scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub n: usize,
    pub k: usize,
    pub params: GenGammaParams,
    pub corrected: bool,
    /// Corrected scale evaluated outside the fitted range of `n`.
    pub extrapolated: bool,
}

impl CostModel {
    pub fn new(n: usize, k: usize, corrected: bool) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(SwarmError::invalid("n and k must be positive"));
        }
        let a = if corrected {
            corrected_scale(n)?
        } else {
            uncorrected_scale(n)
        };
        Ok(CostModel {
            n,
            k,
            params: GenGammaParams::new(a, 1.5 * k as f64, 1.5)?,
            corrected,
            extrapolated: corrected && !within_correction_range(n),
        })
    }

    /// Same shape, caller-chosen scale (e.g. a fitted one).
    pub fn with_scale(n: usize, k: usize, a: f64) -> Result<Self> {
        Ok(CostModel {
            n,
            k,
            params: GenGammaParams::new(a, 1.5 * k as f64, 1.5)?,
            corrected: false,
            extrapolated: false,
        })
    }

    pub fn pdf(&self, c: f64) -> Result<f64> {
        gg_pdf(c, &self.params)
    }

    pub fn cdf(&self, c: f64) -> Result<f64> {
        gg_cdf(c, &self.params)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        gg_quantile(u, &self.params)
    }

    pub fn mean(&self) -> f64 {
        self.params.mean()
    }
}

/// Squared distance from every vertex to its k-th nearest neighbour.
pub fn transmission_costs(points: &PointSet, k: usize) -> Result<Vec<f64>> {
    Ok(knn_all(points, k)?
        .iter()
        .map(|nl| {
            let r = nl.radius().expect("k >= 1");
            r * r
        })
        .collect())
}

/// Maximum-likelihood scale with `d = 3k/2`, `p = 3/2` held fixed:
/// `â = (mean(x^(3/2)) / k)^(2/3)`.
pub fn fit_scale_mle(samples: &[f64], k: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(SwarmError::invalid("need at least one sample"));
    }
    if k == 0 {
        return Err(SwarmError::invalid("k must be positive"));
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(SwarmError::invalid(format!(
            "samples must be positive and finite, found {bad}"
        )));
    }
    let m = samples.iter().map(|x| x.powf(1.5)).sum::<f64>() / samples.len() as f64;
    Ok((m / k as f64).powf(2.0 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// Standard errors of log(prefactor) and the exponent; `None` with
    /// fewer than three points.
    pub log_prefactor_se: Option<f64>,
    pub exponent_se: Option<f64>,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<PowerLawFit> {
    if pairs.len() < 2 {
        return Err(SwarmError::invalid("power-law fit needs at least two points"));
    }
    if pairs.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(SwarmError::invalid("power-law fit needs positive data"));
    }
    let m = pairs.len() as f64;
    let lx: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SwarmError::invalid("power-law fit needs distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (log_prefactor_se, exponent_se) = if pairs.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        let s2 = rss / (m - 2.0);
        let se_slope = (s2 / sxx).sqrt();
        let se_int = (s2 * (1.0 / m + mx * mx / sxx)).sqrt();
        (Some(se_int), Some(se_slope))
    } else {
        (None, None)
    };
    Ok(PowerLawFit {
        prefactor: intercept.exp(),
        exponent: slope,
        log_prefactor_se,
        exponent_se,
    })
}

/// Energy left after paying `cost`, floored at zero.
pub fn residual_energy(e_max: f64, cost: f64) -> f64 {
    (e_max - cost).max(0.0)
}

/// Breakpoints at octaves of the mean so that adaptive Simpson never steps
/// over the bulk of the density.
fn density_breaks(upper: f64, mean: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut b = mean / 16.0;
    while b < upper {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(upper);
    breaks
}

/// E[(e_max - C)₊] for the model cost C: `∫₀^e_max (e_max - c) f(c) dc`.
pub fn expected_residual(e_max: f64, n: usize, k: usize, corrected: bool) -> Result<f64> {
    if !(e_max >= 0.0) {
        return Err(SwarmError::invalid(format!("e_max must be >= 0, got {e_max}")));
    }
    let model = CostModel::new(n, k, corrected)?;
    expected_residual_under(e_max, &model)
}

pub fn expected_residual_under(e_max: f64, model: &CostModel) -> Result<f64> {
    if e_max == 0.0 {
        return Ok(0.0);
    }
    if !e_max.is_finite() {
        return Err(SwarmError::invalid("e_max must be finite"));
    }
    let breaks = density_breaks(e_max, model.mean());
    piecewise_simpson(
        |c| (e_max - c) * model.pdf(c).unwrap_or(0.0),
        &breaks,
        DEFAULT_TOLERANCE,
    )
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and
/// `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(SwarmError::invalid("KS statistic needs samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, PointSet};

    #[test]
    fn collinear_cost() {
        let ps = PointSet::from_points(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(0.1, 0.0, 0.0),
                Point::new(0.5, 0.0, 0.0),
            ],
            0,
        )
        .unwrap();
        let c = transmission_costs(&ps, 2).unwrap();
        assert!((c[0] - 0.25).abs() < 1e-15);
        let c1 = transmission_costs(&ps, 1).unwrap();
        assert!(c.iter().zip(&c1).all(|(a, b)| a >= b));
    }

    #[test]
    fn pdf_edge_cases() {
        let p = GenGammaParams::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(gg_pdf(0.0, &p).unwrap(), 0.0);
        assert!(gg_pdf(-1.0, &p).is_err());
        let expo = GenGammaParams::new(1.0, 1.0, 1.0).unwrap();
        for x in [0.0, 0.3, 1.0, 4.5] {
            assert!((gg_pdf(x, &expo).unwrap() - (-x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_params_rejected() {
        assert!(GenGammaParams::new(0.0, 1.0, 1.0).is_err());
        assert!(GenGammaParams::new(1.0, -1.0, 1.0).is_err());
        assert!(GenGammaParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn cost_cdf_examples() {
        assert_eq!(cost_cdf(0.0, 100, 5).unwrap(), 0.0);
        // choose c so that λ(c) = 1
        let n = 10;
        let c = (3.0 / (4.0 * PI * n as f64)).powf(2.0 / 3.0);
        let v = cost_cdf(c, n, 1).unwrap();
        assert!((v - (1.0 - (-1f64).exp())).abs() < 1e-14);
        assert!(cost_cdf(-1e-3, 10, 1).is_err());
        assert!((cost_cdf(10.0, 100, 5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_tail_branches_agree() {
        for k in 1..12u32 {
            for &lam in &[0.01, 0.5, 2.0, k as f64 - 0.001, k as f64, k as f64 + 0.5, 20.0] {
                let mut term = (-lam as f64).exp();
                let mut head = 0.0;
                for j in 0..k {
                    head += term;
                    term *= lam / (j as f64 + 1.0);
                }
                assert!((poisson_upper_tail(lam, k) - (1.0 - head)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn poisson_cdf_matches_incomplete_gamma() {
        let params = GenGammaParams::new(0.01, 7.5, 1.5).unwrap();
        for &x in &[0.001, 0.005, 0.01, 0.02, 0.05] {
            let y = (x / 0.01f64).powf(1.5);
            assert!((gg_cdf(x, &params).unwrap() - gamma_lr(5.0, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_quantile() {
        let p = GenGammaParams::new(1.0, 1.0, 1.0).unwrap();
        let q = gg_quantile(1.0 - (-1f64).exp(), &p).unwrap();
        assert!((q - 1.0).abs() < 1e-12);
        assert!(gg_quantile(0.0, &p).is_err());
        assert!(gg_quantile(1.0, &p).is_err());
    }

    #[test]
    fn non_integer_shape_quantile_round_trip() {
        let p = GenGammaParams::new(2.0, 1.7, 0.8).unwrap();
        for u in [0.05, 0.5, 0.95] {
            let q = gg_quantile(u, &p).unwrap();
            assert!((gg_cdf(q, &p).unwrap() - u).abs() < 1e-10);
        }
    }

    #[test]
    fn cost_quantile_inverts_cost_cdf() {
        for &c in &[1e-4, 1e-3, 5e-3, 0.01, 0.03] {
            let u = cost_cdf(c, 600, 5).unwrap();
            if u > 0.0 && u < 1.0 {
                let q = cost_quantile(u, 600, 5).unwrap();
                assert!((q - c).abs() < 1e-10, "{c} -> {u} -> {q}");
            }
        }
    }

    #[test]
    fn corrected_scale_values() {
        assert!((corrected_scale(100).unwrap() - 0.685 * 100f64.powf(-0.73)).abs() < 1e-15);
        assert!((corrected_scale(100).unwrap() - 0.023751).abs() < 5e-6);
        assert!((corrected_scale(600).unwrap() - 0.00642).abs() < 5e-6);
        assert!(corrected_scale(0).is_err());
        let xs: Vec<f64> = (1..50).map(|n| corrected_scale(n * 37).unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[1] < w[0]));
        assert!(CostModel::new(50, 5, true).unwrap().extrapolated);
        assert!(!CostModel::new(500, 5, true).unwrap().extrapolated);
    }

    #[test]
    fn mle_degenerate_sample() {
        assert!((fit_scale_mle(&[0.3; 10], 1).unwrap() - 0.3).abs() < 1e-15);
        assert!(fit_scale_mle(&[], 3).is_err());
        assert!(fit_scale_mle(&[0.1, 0.0], 3).is_err());
        assert!(fit_scale_mle(&[0.1, -2.0], 3).is_err());
    }

    #[test]
    fn power_law_exact() {
        let pairs: Vec<(f64, f64)> = [100.0, 250.0, 700.0, 1000.0]
            .iter()
            .map(|&n: &f64| (n, 0.7 * n.powf(-0.74)))
            .collect();
        let fit = fit_power_law(&pairs).unwrap();
        assert!((fit.prefactor - 0.7).abs() < 1e-12);
        assert!((fit.exponent + 0.74).abs() < 1e-12);
        assert!(fit.exponent_se.unwrap() < 1e-12);

        let two = fit_power_law(&[(2.0, 3.0), (8.0, 12.0)]).unwrap();
        assert!((two.exponent - 1.0).abs() < 1e-12);
        assert!((two.prefactor - 1.5).abs() < 1e-12);
        assert!(two.exponent_se.is_none());

        assert!(fit_power_law(&[(1.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, -1.0)]).is_err());
    }

    #[test]
    fn residual_clamps() {
        assert_eq!(residual_energy(5.0, 3.0), 2.0);
        assert_eq!(residual_energy(3.0, 5.0), 0.0);
        assert_eq!(residual_energy(4.0, 4.0), 0.0);
    }

    #[test]
    fn expected_residual_limits() {
        assert_eq!(expected_residual(0.0, 500, 5, true).unwrap(), 0.0);
        let model = CostModel::new(500, 5, true).unwrap();
        let big = 50.0 * model.mean();
        let v = expected_residual(big, 500, 5, true).unwrap();
        assert!((v - (big - model.mean())).abs() < 1e-9);
        assert!(expected_residual(-1.0, 500, 5, true).is_err());
    }

    #[test]
    fn ks_of_perfect_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.005).abs() < 1e-12);
    }
}
