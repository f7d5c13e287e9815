//! Beta-distribution numerics and central-interval fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower and upper tail masses of the central 95% interval.
pub const LOWER_TAIL: f64 = 0.025;
pub const UPPER_TAIL: f64 = 0.975;

/// Largest upper bound accepted by [`fit_central_interval`].
pub const MAX_UPPER: f64 = 1.0 - 1e-6;

const FIT_TOLERANCE: f64 = 1e-6;
const FIT_MAX_ITERATIONS: usize = 200;

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(Error::InvalidBeta { a, b });
        }
        Ok(BetaParams { a, b })
    }

    pub fn uniform() -> Self {
        BetaParams { a: 1.0, b: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    /// Log density, `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        let ln_x = if self.a == 1.0 { 0.0 } else { (self.a - 1.0) * x.ln() };
        let ln_1mx = if self.b == 1.0 {
            0.0
        } else {
            (self.b - 1.0) * (-x).ln_1p()
        };
        ln_x + ln_1mx - ln_beta(self.a, self.b)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        regularized_incomplete_beta(x, self.a, self.b)
    }

    /// Inverse CDF by bracketed Newton iteration with bisection fallback.
    pub fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x = self.mean().clamp(1e-300, 1.0 - 1e-16);
        for _ in 0..400 {
            let f = self.cdf(x) - q;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let density = self.pdf(x);
            let mut next = if density > 0.0 && density.is_finite() {
                x - f / density
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * next || hi - lo <= 1e-15 * hi {
                return next;
            }
            x = next;
        }
        x
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    // Continued fraction converges fast only below the mean-ish split point.
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_continued_fraction(x, a, b) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_continued_fraction(1.0 - x, b, a) / b).clamp(0.0, 1.0)
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Beta distribution whose 2.5% and 97.5% quantiles are `lower` and `upper`.
///
/// Solves the two tail-mass equations by damped Newton iteration on
/// `(ln a, ln b)`, starting from the moment match of a normal with mean
/// `(lower + upper) / 2` and standard deviation `(upper - lower) / 3.92`.
pub fn fit_central_interval(lower: f64, upper: f64) -> Result<BetaParams> {
    if !(lower > 0.0 && lower < upper && upper <= MAX_UPPER) {
        return Err(Error::InvalidInterval { lower, upper });
    }
    if upper - lower < 1e-9 {
        return Err(Error::DegenerateInterval { lower, upper });
    }

    let residual = |theta: [f64; 2]| -> [f64; 2] {
        let (a, b) = (theta[0].exp(), theta[1].exp());
        [
            regularized_incomplete_beta(lower, a, b) - LOWER_TAIL,
            regularized_incomplete_beta(upper, a, b) - UPPER_TAIL,
        ]
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());

    let mean = 0.5 * (lower + upper);
    let sd = (upper - lower) / 3.92;
    let concentration = mean * (1.0 - mean) / (sd * sd) - 1.0;
    let mut theta = if concentration.is_finite() && concentration > 0.0 {
        [(mean * concentration).ln(), ((1.0 - mean) * concentration).ln()]
    } else {
        [0.0, 0.0]
    };
    let mut r = residual(theta);

    for _ in 0..FIT_MAX_ITERATIONS {
        if norm(r) < 1e-14 {
            break;
        }
        let h = 1e-6;
        let ra = residual([theta[0] + h, theta[1]]);
        let rb = residual([theta[0], theta[1] + h]);
        let j = [
            [(ra[0] - r[0]) / h, (rb[0] - r[0]) / h],
            [(ra[1] - r[1]) / h, (rb[1] - r[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let step = if det.abs() > 1e-300 {
            [
                (j[1][1] * r[0] - j[0][1] * r[1]) / det,
                (-j[1][0] * r[0] + j[0][0] * r[1]) / det,
            ]
        } else {
            [r[0].signum() * 0.1, r[1].signum() * 0.1]
        };
        // Backtrack until the residual shrinks; cap each move in log space.
        let mut scale = 1.0f64;
        let longest = step[0].abs().max(step[1].abs());
        if longest > 2.0 {
            scale = 2.0 / longest;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = [theta[0] - scale * step[0], theta[1] - scale * step[1]];
            let rc = residual(candidate);
            if norm(rc) < norm(r) {
                theta = candidate;
                r = rc;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let params = BetaParams {
        a: theta[0].exp(),
        b: theta[1].exp(),
    };
    let dl = params.quantile(LOWER_TAIL) - lower;
    let du = params.quantile(UPPER_TAIL) - upper;
    if dl.abs() > FIT_TOLERANCE || du.abs() > FIT_TOLERANCE || !params.a.is_finite() || !params.b.is_finite() {
        return Err(Error::FitNonConvergence(dl, du));
    }
    Ok(params)
}

/// Mean of a beta distribution, `a / (a + b)`.
pub fn beta_mean(params: &BetaParams) -> f64 {
    params.mean()
}

/// Convenience wrapper: `params.quantile(q)`.
pub fn beta_quantile(params: &BetaParams, q: f64) -> f64 {
    params.quantile(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // ln 10! = ln 3628800
        assert!((ln_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_cdfs() {
        // I_x(1, 2) = 1 - (1 - x)^2
        for &x in &[0.01, 0.3, 0.77] {
            let b = BetaParams::new(1.0, 2.0).unwrap();
            assert!((b.cdf(x) - (1.0 - (1.0 - x) * (1.0 - x))).abs() < 1e-14);
        }
        let u = BetaParams::uniform();
        assert!((u.cdf(0.123) - 0.123).abs() < 1e-15);
    }

    #[test]
    fn uniform_median() {
        assert!((BetaParams::uniform().quantile(0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quantile_closed_form() {
        let b = BetaParams::new(1.0, 2.0).unwrap();
        let expected = 1.0 - 0.975f64.sqrt();
        assert!((b.quantile(0.025) - expected).abs() < 1e-12);
        assert!((expected - 0.012579).abs() < 1e-6);
    }

    #[test]
    fn quantile_is_monotone() {
        let b = BetaParams::new(1.72, 246.2).unwrap();
        let mut last = 0.0;
        for i in 1..100 {
            let x = b.quantile(i as f64 / 100.0);
            assert!(x > last);
            last = x;
        }
    }

    #[test]
    fn paper_prior_lower_quantile_is_far_from_its_interval() {
        // beta(2.5, 120): the 2.5% quantile sits well below 0.01.
        let b = BetaParams::new(2.5, 120.0).unwrap();
        let q = b.quantile(0.025);
        assert!((q - 0.003436).abs() < 1e-5, "{q}");
    }

    #[test]
    fn fit_uniform_interval() {
        let fit = fit_central_interval(0.025, 0.975).unwrap();
        assert!((fit.a - 1.0).abs() < 0.01 && (fit.b - 1.0).abs() < 0.01, "{fit:?}");
    }

    #[test]
    fn fit_reproduces_quantiles() {
        for &(l, u) in &[(0.01, 0.05), (0.005, 0.02), (0.001_138, 0.004_553), (0.3, 0.999_999)] {
            let fit = fit_central_interval(l, u).unwrap();
            assert!((fit.quantile(LOWER_TAIL) - l).abs() < 1e-9);
            assert!((fit.quantile(UPPER_TAIL) - u).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_rejects_bad_intervals() {
        assert!(matches!(
            fit_central_interval(0.05, 0.01),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            fit_central_interval(0.0, 0.01),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            fit_central_interval(0.1, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            fit_central_interval(0.1, 0.1 + 1e-10),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn means() {
        assert!((beta_mean(&BetaParams::new(2.5, 120.0).unwrap()) - 0.020_41).abs() < 1e-5);
        assert_eq!(beta_mean(&BetaParams::uniform()), 0.5);
        assert!((beta_mean(&BetaParams::new(2.70, 113.7).unwrap()) - 0.0232).abs() < 1e-4);
    }
}
