//! Special functions and root finders shared by the solvers: the principal
//! branch of the Lambert W function and a monotone bisection search.

use crate::error::{Error, Result};

/// `-1/e`, the left edge of the domain of the principal Lambert W branch.
pub const NEG_INV_E: f64 = -0.367_879_441_171_442_33;

/// Absolute slack below `-1/e` that is still clamped onto the domain edge
/// instead of being reported as a domain error.
pub const LAMBERT_CLAMP: f64 = 1e-15;

/// Principal branch `W0` of the Lambert W function: the solution `w >= -1`
/// of `w * exp(w) = x` for `x >= -1/e`.
///
/// Inputs within `LAMBERT_CLAMP` below `-1/e` are clamped to the branch
/// point (where the result is exactly `-1`); anything further below is a
/// domain error. The returned value satisfies
/// `|w * exp(w) - x| <= 1e-12 * max(1, |x|)`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::LambertDomain(x));
    }
    if x < NEG_INV_E - LAMBERT_CLAMP {
        return Err(Error::LambertDomain(x));
    }
    let x = x.max(NEG_INV_E);

    // Distance from the branch point controls both the series expansion and
    // the choice of seed: w = -1 + p - p^2/3 + 11 p^3/72 - 43 p^4/540 + ...
    // with p = sqrt(2 (e x + 1)) = sqrt(2 e (x + 1/e)).
    let u = x - NEG_INV_E;
    let p = (2.0 * std::f64::consts::E * u).sqrt();
    let series = -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0 - 43.0 * p * p * p * p / 540.0;
    if p < 1e-4 {
        // Within O(p^5) of the root; Halley's division by (w + 1) ~ p is
        // already losing digits here, while the series is exact to ~1e-20.
        return Ok(series);
    }

    let mut w = if x < -0.25 {
        series
    } else if x < 0.5 {
        // Two terms of the Maclaurin series W(x) = x - x^2 + ...
        x * (1.0 - x)
    } else if x <= 10.0 {
        (1.0 + x).ln()
    } else {
        // Asymptotic W(x) = L1 - L2 + L2/L1 + ... with L1 = ln x, L2 = ln L1.
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    // Halley iteration on f(w) = w e^w - x; quadratic-plus convergence from
    // any of the seeds above, capped defensively.
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= 0.25e-12 * x.abs().max(1.0) {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if !denom.is_finite() || denom == 0.0 {
            break;
        }
        let next = w - f / denom;
        if !next.is_finite() {
            break;
        }
        w = if next < -1.0 { (-1.0 + w) / 2.0 } else { next };
    }
    Ok(w)
}

/// Controls for [`bisect_decreasing`].
#[derive(Debug, Clone)]
pub struct BisectionSpec {
    /// Left end of the initial bracket.
    pub lower: f64,
    /// Right end of the initial bracket; doubled away from `lower` until the
    /// function value falls to or below the target.
    pub upper: f64,
    /// Absolute tolerance on `|f(root) - target|`.
    pub tolerance: f64,
    /// Iteration cap for the halving phase.
    pub max_iterations: usize,
}

impl Default for BisectionSpec {
    fn default() -> Self {
        Self { lower: 0.0, upper: 1.0, tolerance: 1e-9, max_iterations: 200 }
    }
}

/// Outcome of a bisection search.
#[derive(Debug, Clone, Copy)]
pub struct Bisection {
    /// Argument at which the search stopped.
    pub root: f64,
    /// `f(root) - target` at the returned point.
    pub residual: f64,
    /// Halving steps consumed.
    pub iterations: usize,
    /// Whether the residual tolerance was met.
    pub converged: bool,
}

/// Finds `root` with `f(root) = target` for a monotone non-increasing `f`.
///
/// The upper end of the bracket is doubled (up to 60 times) until
/// `f(upper) <= target`; the bracket is then halved until the residual
/// tolerance is met or `max_iterations` is exhausted, in which case the last
/// midpoint is returned with `converged = false`.
pub fn bisect_decreasing(
    mut f: impl FnMut(f64) -> f64,
    target: f64,
    spec: &BisectionSpec,
) -> Result<Bisection> {
    if !(spec.lower < spec.upper) {
        return Err(Error::BracketFailure(format!(
            "empty bracket [{:e}, {:e}]",
            spec.lower, spec.upper
        )));
    }
    if !(spec.tolerance > 0.0) {
        return Err(Error::BracketFailure(format!(
            "non-positive tolerance {:e}",
            spec.tolerance
        )));
    }

    let flo = f(spec.lower);
    if (flo - target).abs() <= spec.tolerance {
        return Ok(Bisection { root: spec.lower, residual: flo - target, iterations: 0, converged: true });
    }
    if flo < target {
        return Err(Error::BracketFailure(format!(
            "f(lower) = {flo:e} is already below the target {target:e} for a non-increasing f"
        )));
    }

    let mut lo = spec.lower;
    let mut hi = spec.upper;
    let mut doublings = 0;
    loop {
        let fhi = f(hi);
        if fhi <= target {
            break;
        }
        doublings += 1;
        if doublings > 60 {
            return Err(Error::BracketFailure(format!(
                "f({hi:e}) = {fhi:e} never crossed the target {target:e} after 60 doublings"
            )));
        }
        hi = lo + (hi - lo) * 2.0;
    }

    let mut mid = 0.5 * (lo + hi);
    let mut residual = f(mid) - target;
    for i in 1..=spec.max_iterations {
        if residual.abs() <= spec.tolerance {
            return Ok(Bisection { root: mid, residual, iterations: i, converged: true });
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        residual = f(mid) - target;
    }
    Ok(Bisection { root: mid, residual, iterations: spec.max_iterations, converged: false })
}

/// Minimizes a unimodal `f` on `[lo, hi]` by golden-section search with a
/// parabolic polish, and returns the argmin.
///
/// Pure golden section cannot place the minimizer more precisely than about
/// `sqrt(ε)` in relative terms — inside that window the function values are
/// flat to machine precision and the bracket updates degenerate into a
/// random walk. The polish therefore fits parabolas through three points
/// spaced outside the flat zone. A three-point fit at spacing `h` carries
/// rounding noise of order `ε |f| / (f'' h)` and truncation bias of order
/// `f''' h² / f''`, so the total error is smallest near
/// `h* ≈ (ε |f| (hi - lo) / f'')^(1/3)`. A probe fit widens its spacing
/// until the curvature signal clearly dominates rounding noise and estimates
/// `h*` from the measured curvature; refinement fits then descend to that
/// spacing and land the argmin within roughly `(ε / κ)^(2/3) · (hi - lo)`,
/// where `κ = f'' (hi - lo)² / |f|` is the valley's conditioning.
pub fn golden_section_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let range = hi - lo;
    let coarse_width = 1e-5 * range;

    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > coarse_width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut x = 0.5 * (a + b);

    // Probe fit: widen the spacing until the curvature term in the central
    // second difference rises well above rounding noise, then derive the
    // noise-optimal refinement spacing from the measured curvature. The fit
    // window is shifted inside the domain near a boundary, so minimizers
    // hugging (or clipped to) a bound are still resolved; the vertex step is
    // trust-clamped to one spacing per fit.
    let mut h = 1e-4 * range;
    let mut refine_h = None;
    for _ in 0..6 {
        if 2.0 * h >= range {
            break;
        }
        let m = x.clamp(lo + h, hi - h);
        let f_lo = f(m - h);
        let f_mid = f(m);
        let f_hi = f(m + h);
        let denom = f_lo - 2.0 * f_mid + f_hi;
        let noise = f64::EPSILON * (f_lo.abs() + 2.0 * f_mid.abs() + f_hi.abs());
        if !(denom > 100.0 * noise) {
            // Too flat at this spacing (or a boundary plateau): widen.
            h *= 8.0;
            continue;
        }
        let step = (0.5 * h * (f_lo - f_hi) / denom).clamp(-h, h);
        x = (m + step).clamp(lo, hi);
        refine_h = Some((noise * range * h * h / denom).cbrt());
        break;
    }

    // Refinement: descend from the probe spacing to the noise-optimal one,
    // re-fitting at each level. A fit's truncation bias scales with h², so
    // each quartered spacing cuts the residual error sixteenfold while the
    // trust window only quarters — the walk toward the vertex never outruns
    // its clamp — and two final fits at the optimal spacing settle the
    // argmin at the rounding/truncation balance point.
    if let Some(refine_h) = refine_h {
        let floor = refine_h.clamp(1e-8 * range, 0.125 * range);
        let mut h = (0.25 * h).max(floor);
        let mut floor_fits = 0;
        for _ in 0..24 {
            let m = x.clamp(lo + h, hi - h);
            let f_lo = f(m - h);
            let f_mid = f(m);
            let f_hi = f(m + h);
            let denom = f_lo - 2.0 * f_mid + f_hi;
            if denom <= 0.0 {
                break;
            }
            let step = (0.5 * h * (f_lo - f_hi) / denom).clamp(-h, h);
            x = (m + step).clamp(lo, hi);
            if h <= floor {
                floor_fits += 1;
                if floor_fits >= 2 {
                    break;
                }
            }
            h = (0.25 * h).max(floor);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(x: f64) -> f64 {
        let w = lambert_w0(x).unwrap();
        (w * w.exp() - x).abs()
    }

    #[test]
    fn lambert_at_zero_is_zero() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
    }

    #[test]
    fn lambert_at_e_is_one() {
        let w = lambert_w0(std::f64::consts::E).unwrap();
        assert!((w - 1.0).abs() <= 1e-12, "W(e) = {w}");
    }

    #[test]
    fn lambert_at_one_matches_newton_oracle() {
        // Frozen from an independent high-precision Newton solve of w e^w = 1.
        let w = lambert_w0(1.0).unwrap();
        assert!((w - 5.671_432_904_097_838e-1).abs() <= 1e-14, "W(1) = {w}");
    }

    #[test]
    fn lambert_at_branch_point_is_minus_one() {
        assert_eq!(lambert_w0(NEG_INV_E).unwrap(), -1.0);
        // Slightly below, within the clamp band.
        assert_eq!(lambert_w0(NEG_INV_E - 0.9e-15).unwrap(), -1.0);
    }

    #[test]
    fn lambert_domain_error_below_branch_point() {
        assert!(lambert_w0(NEG_INV_E - 1e-9).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn lambert_roundtrip_residual_on_log_grid() {
        // 10^4 log-spaced offsets above the branch point, spanning to 1e9.
        let lo: f64 = 1e-12;
        let hi: f64 = 1e9 + 1.0 / std::f64::consts::E;
        let n = 10_000;
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            let u = lo * (hi / lo).powf(t);
            let x = NEG_INV_E + u;
            let res = roundtrip(x);
            assert!(
                res <= 1e-12 * x.abs().max(1.0),
                "residual {res:e} too large at x = {x:e}"
            );
        }
    }

    #[test]
    fn lambert_monotone_on_grid() {
        let mut prev = -1.0;
        for i in 0..5000 {
            let x = NEG_INV_E + (i as f64 / 4999.0).powi(3) * 50.0;
            let w = lambert_w0(x).unwrap();
            assert!(w >= prev - 1e-14, "not monotone at x = {x}");
            prev = w;
        }
    }

    #[test]
    fn bisect_linear() {
        let spec = BisectionSpec { lower: 0.0, upper: 1.0, tolerance: 1e-12, max_iterations: 200 };
        let out = bisect_decreasing(|l| -l, -2.0, &spec).unwrap();
        assert!(out.converged);
        assert!((out.root - 2.0).abs() <= 1e-11);
    }

    #[test]
    fn bisect_reciprocal() {
        let spec = BisectionSpec { lower: 0.0, upper: 0.5, tolerance: 1e-12, max_iterations: 200 };
        let out = bisect_decreasing(|l| 1.0 / (1.0 + l), 0.5, &spec).unwrap();
        assert!(out.converged);
        assert!((out.root - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn bisect_bracket_failure_when_flat() {
        let spec = BisectionSpec::default();
        assert!(bisect_decreasing(|_| 1.0, 0.0, &spec).is_err());
    }

    #[test]
    fn bisect_rejects_target_above_lower_value() {
        let spec = BisectionSpec::default();
        assert!(bisect_decreasing(|l| -l, 1.0, &spec).is_err());
    }

    #[test]
    fn bisect_upper_bound_choice_is_immaterial() {
        let f = |l: f64| 100.0 / (1.0 + l);
        let tol = 1e-9;
        let a = bisect_decreasing(f, 4.0, &BisectionSpec { lower: 0.0, upper: 1.0, tolerance: tol, max_iterations: 200 })
            .unwrap();
        let b = bisect_decreasing(f, 4.0, &BisectionSpec { lower: 0.0, upper: 1e6, tolerance: tol, max_iterations: 200 })
            .unwrap();
        // Both residuals are within tol, and f has slope ~ -4 near the root,
        // so the roots agree to within 2 * tol in function value.
        assert!((f(a.root) - f(b.root)).abs() <= 2.0 * tol);
    }

    #[test]
    fn golden_min_locates_a_quadratic_vertex() {
        let x = golden_section_min(|x| (x - 0.37).powi(2) + 4.0, 0.0, 1.0);
        assert!((x - 0.37).abs() <= 1e-9, "vertex at {x}");
    }

    #[test]
    fn golden_min_beats_the_flatness_limit_on_a_stiff_valley() {
        // A sharp exponential valley akin to the transfer-energy objective.
        let f = |t: f64| (1.0 / t).exp2() * t + 40.0 * t;
        let x = golden_section_min(f, 0.05, 4.0);
        // Reference vertex from a fine scan refined analytically:
        // d/dt [t 2^(1/t)] = 2^(1/t) (1 - ln2 / t), so the stationarity
        // condition is 2^(1/t)(1 - ln2/t) = -40.
        let residual = (1.0 / x).exp2() * (1.0 - std::f64::consts::LN_2 / x) + 40.0;
        assert!(residual.abs() <= 1e-5, "stationarity residual {residual}");
    }

    #[test]
    fn golden_min_returns_the_boundary_for_monotone_input() {
        let hi = golden_section_min(|x| -x, 0.0, 2.0);
        assert!((hi - 2.0).abs() <= 1e-4);
        let lo = golden_section_min(|x| x, 0.0, 2.0);
        assert!(lo <= 1e-4);
    }
}
