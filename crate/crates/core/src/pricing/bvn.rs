//! Standardized bivariate normal cdf.
//!
//! Gauss–Legendre quadrature over the correlation-integral representation
//! following Genz (2004): 6/12/20-point rules selected by |ρ|, with the
//! tail-transformed variant above |ρ| = 0.925. Absolute error is far below
//! the 1e-7 the pricing layer needs.

use crate::special::{gauss_legendre, norm_cdf};
use std::f64::consts::PI;
use std::sync::OnceLock;

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static R6: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R12: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R20: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        6 => R6.get_or_init(|| gauss_legendre(6)),
        12 => R12.get_or_init(|| gauss_legendre(12)),
        _ => R20.get_or_init(|| gauss_legendre(20)),
    }
}

/// `P(Z1 ≤ h, Z2 ≤ k)` for a standard bivariate normal with correlation
/// `corr ∈ [-1, 1]`. The comonotone boundaries reduce to `min(Φ(h), Φ(k))`
/// and `max(Φ(h) + Φ(k) - 1, 0)`.
pub fn bvn_cdf(h: f64, k: f64, corr: f64) -> f64 {
    assert!(
        (-1.0..=1.0).contains(&corr),
        "correlation {corr} outside [-1, 1]"
    );
    if h.is_nan() || k.is_nan() {
        return f64::NAN;
    }
    if corr >= 1.0 {
        return norm_cdf(h).min(norm_cdf(k));
    }
    if corr <= -1.0 {
        return (norm_cdf(h) + norm_cdf(k) - 1.0).max(0.0);
    }
    bvnu(-h, -k, corr).clamp(0.0, 1.0)
}

/// Upper-quadrant probability `P(Z1 > dh, Z2 > dk)`.
fn bvnu(dh: f64, dk: f64, r: f64) -> f64 {
    if dh == f64::INFINITY || dk == f64::INFINITY {
        return 0.0;
    }
    if dh == f64::NEG_INFINITY {
        return if dk == f64::NEG_INFINITY {
            1.0
        } else {
            norm_cdf(-dk)
        };
    }
    if dk == f64::NEG_INFINITY {
        return norm_cdf(-dh);
    }

    let order = if r.abs() < 0.3 {
        6
    } else if r.abs() < 0.75 {
        12
    } else {
        20
    };
    let (nodes, weights) = rule(order);

    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        if r.abs() > 0.0 {
            let hs = 0.5 * (h * h + k * k);
            let asr = r.asin();
            for (x, w) in nodes.iter().zip(weights) {
                let sn = (asr * 0.5 * (x + 1.0)).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
            bvn *= asr / (4.0 * PI);
        }
        bvn + norm_cdf(-h) * norm_cdf(-k)
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let a_sq = (1.0 - r) * (1.0 + r);
            let a = a_sq.sqrt();
            let b_sq = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            let exponent = -0.5 * (b_sq / a_sq + hk);
            if exponent > -100.0 {
                bvn = a
                    * exponent.exp()
                    * (1.0 - c * (b_sq - a_sq) * (1.0 - d * b_sq / 5.0) / 3.0
                        + c * d * a_sq * a_sq / 5.0);
            }
            if -hk < 100.0 {
                let b = b_sq.sqrt();
                let sp = (2.0 * PI).sqrt() * norm_cdf(-b / a);
                bvn -= (-0.5 * hk).exp() * sp * b * (1.0 - c * b_sq * (1.0 - d * b_sq / 5.0) / 3.0);
            }
            let half_a = 0.5 * a;
            for (x, w) in nodes.iter().zip(weights) {
                let t = half_a * (x + 1.0);
                let xs = t * t;
                let rs = (1.0 - xs).sqrt();
                let exponent = -0.5 * (b_sq / xs + hk);
                if exponent > -100.0 {
                    let sp = 1.0 + c * xs * (1.0 + d * xs);
                    let ep = (-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs;
                    bvn += half_a * w * exponent.exp() * (ep - sp);
                }
            }
            bvn = -bvn / (2.0 * PI);
        }
        if r > 0.0 {
            bvn + norm_cdf(-h.max(k))
        } else {
            bvn = -bvn;
            if k > h {
                bvn += norm_cdf(k) - norm_cdf(h);
            }
            bvn
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::special::norm_pdf;
    use rand::Rng;

    /// High-resolution tensor Gauss–Legendre quadrature of the bivariate
    /// density over [-9, h] × [-9, k]; fully independent of `bvn_cdf`.
    pub(super) fn bvn_quadrature_oracle(h: f64, k: f64, rho: f64) -> f64 {
        let (nodes, weights) = gauss_legendre(24);
        let lo = -9.0;
        let panels = 36;
        let density = |x: f64, y: f64| {
            let det = 1.0 - rho * rho;
            (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp()
                / (2.0 * PI * det.sqrt())
        };
        let axis = |hi: f64| -> Vec<(f64, f64)> {
            let mut pts = Vec::new();
            let step = (hi - lo) / panels as f64;
            for p in 0..panels {
                let a = lo + p as f64 * step;
                for (x, w) in nodes.iter().zip(&weights.clone()) {
                    pts.push((a + 0.5 * step * (x + 1.0), 0.5 * step * w));
                }
            }
            pts
        };
        let xs = axis(h);
        let ys = axis(k);
        let mut total = 0.0;
        for &(x, wx) in &xs {
            let mut inner = 0.0;
            for &(y, wy) in &ys {
                inner += wy * density(x, y);
            }
            total += wx * inner;
        }
        total
    }

    #[test]
    fn independence_factorizes() {
        assert!((bvn_cdf(0.0, 0.0, 0.0) - 0.25).abs() < 1e-15);
        let (h, k) = (0.7, -1.1);
        assert!((bvn_cdf(h, k, 0.0) - norm_cdf(h) * norm_cdf(k)).abs() < 1e-15);
    }

    #[test]
    fn orthant_closed_form_across_correlations() {
        // P(Z1 ≤ 0, Z2 ≤ 0) = 1/4 + arcsin(ρ)/(2π)
        let mut max_err: f64 = 0.0;
        let mut rho: f64 = -0.95;
        while rho <= 0.95 + 1e-12 {
            let expect = 0.25 + rho.asin() / (2.0 * PI);
            max_err = max_err.max((bvn_cdf(0.0, 0.0, rho) - expect).abs());
            rho += 0.05;
        }
        assert!(max_err < 1e-14, "orthant max err {max_err}");
        assert!((bvn_cdf(0.0, 0.0, 0.5) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn matches_quadrature_oracle_at_random_points() {
        let mut r = rng::stream(55);
        let mut max_err: f64 = 0.0;
        for _ in 0..50 {
            let h: f64 = r.random_range(-3.0..3.0);
            let k: f64 = r.random_range(-3.0..3.0);
            let rho: f64 = r.random_range(-0.99..0.99);
            let oracle = bvn_quadrature_oracle(h, k, rho);
            let err = (bvn_cdf(h, k, rho) - oracle).abs();
            max_err = max_err.max(err);
        }
        assert!(max_err < 1e-7, "max |bvn - oracle| = {max_err}");
    }

    #[test]
    fn boundary_correlations() {
        for &(h, k) in &[(0.3, -0.4), (-1.0, -1.0), (2.0, 0.5)] {
            let hi = bvn_cdf(h, k, 1.0);
            assert!((hi - norm_cdf(h).min(norm_cdf(k))).abs() < 1e-15);
            let lo = bvn_cdf(h, k, -1.0);
            assert!((lo - (norm_cdf(h) + norm_cdf(k) - 1.0).max(0.0)).abs() < 1e-15);
        }
    }

    /// Conditional-probability reduction, an independent route:
    /// `Φ₂(h, k; ρ) = ∫_{-∞}^{h} φ(x) Φ((k - ρx)/√(1-ρ²)) dx`.
    fn conditional_oracle(h: f64, k: f64, rho: f64) -> f64 {
        let comp = (1.0 - rho * rho).sqrt();
        let f = |x: f64| norm_pdf(x) * norm_cdf((k - rho * x) / comp);
        crate::special::adaptive_simpson(&f, -9.0, h, 1e-12)
    }

    #[test]
    fn tail_transformed_branch_matches_conditional_oracle() {
        // the |ρ| > 0.925 branch, including correlations very close to ±1
        for &rho in &[0.93, 0.97, 0.99, 0.999, 0.99999, -0.95, -0.999] {
            for &(h, k) in &[(0.3, -0.4), (-1.0, -1.0), (2.0, 0.5), (0.0, 0.0)] {
                let oracle = conditional_oracle(h, k, rho);
                let got = bvn_cdf(h, k, rho);
                assert!(
                    (got - oracle).abs() < 1e-9,
                    "rho {rho} h {h} k {k}: {got} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn infinite_arguments() {
        assert_eq!(bvn_cdf(f64::INFINITY, f64::INFINITY, 0.4), 1.0);
        assert!((bvn_cdf(f64::INFINITY, 0.3, 0.4) - norm_cdf(0.3)).abs() < 1e-15);
        assert_eq!(bvn_cdf(f64::NEG_INFINITY, 0.3, 0.4), 0.0);
    }

    #[test]
    fn high_correlation_region_consistency() {
        // derivative sanity: P must increase in h and k, and sit inside
        // Fréchet bounds even in the tail-transformed branch
        for &rho in &[0.93, 0.97, -0.95, -0.99] {
            let mut last = 0.0;
            for i in 0..60 {
                let h = -3.0 + 0.1 * i as f64;
                let p = bvn_cdf(h, 0.8, rho);
                assert!(p >= last - 1e-14, "rho {rho} h {h}");
                let lower = (norm_cdf(h) + norm_cdf(0.8) - 1.0).max(0.0);
                let upper = norm_cdf(h).min(norm_cdf(0.8));
                assert!(p >= lower - 1e-12 && p <= upper + 1e-12);
                last = p;
            }
        }
    }

    #[test]
    fn derivative_in_rho_matches_density_identity() {
        // ∂Φ₂/∂ρ = φ₂(h, k; ρ); check by central differences
        let (h, k, rho) = (0.4, -0.2, 0.6);
        let eps = 1e-5;
        let numeric = (bvn_cdf(h, k, rho + eps) - bvn_cdf(h, k, rho - eps)) / (2.0 * eps);
        let det = 1.0 - rho * rho;
        let density = (-(h * h - 2.0 * rho * h * k + k * k) / (2.0 * det)).exp()
            / (2.0 * PI * det.sqrt());
        assert!((numeric - density).abs() < 1e-7);
        let _ = norm_pdf(0.0);
    }
}
