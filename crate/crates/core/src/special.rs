//! Shared scalar numerics: standard-normal functions, Gauss quadrature rules,
//! adaptive Simpson integration, and safeguarded root bracketing.

use statrs::function::erf;
use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal cdf.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

/// Standard normal survival function, accurate deep into the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erf::erfc(x / SQRT_2)
}

/// Standard normal quantile. `p = 0` and `p = 1` map to ∓∞.
pub fn norm_quantile(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "quantile arg {p} outside [0,1]");
    -SQRT_2 * erf::erfc_inv(2.0 * p)
}

/// Inverse of [`norm_sf`], accurate for small tail probabilities.
pub fn norm_sf_inv(q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&q), "survival arg {q} outside [0,1]");
    SQRT_2 * erf::erfc_inv(2.0 * q)
}

/// ln of the normal survival function; switches to the asymptotic expansion
/// once `erfc` would underflow.
pub fn ln_norm_sf(x: f64) -> f64 {
    if x < 30.0 {
        norm_sf(x).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (x * (2.0 * PI).sqrt()).ln() + (-1.0 / x2 + 3.0 / (x2 * x2)).ln_1p()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            let pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                nodes[i] = -z;
                nodes[n - 1 - i] = z;
                weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
                weights[n - 1 - i] = weights[i];
                break;
            }
        }
    }
    (nodes, weights)
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule (weight e^{-x²}).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

const NORMAL_QUAD_ORDER: usize = 96;

/// Cached Gauss–Hermite rule rescaled for expectations against the standard
/// normal density: `E[g(Z)] ≈ Σ wᵢ g(zᵢ)` with `Σ wᵢ = 1`.
pub fn normal_quadrature() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_hermite(NORMAL_QUAD_ORDER);
        let norm = PI.sqrt();
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| (SQRT_2 * xi, wi / norm))
            .collect()
    })
}

/// Adaptive Simpson integration of `f` over [a, b] to the given relative
/// tolerance (floored in absolute terms by a coarse pass over the interval).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Coarse composite pass to set the absolute error scale; generous panel
    // count so spiky integrands over wide domains still give a sane scale.
    let mut coarse = 0.0;
    let panels = 512;
    let h = (b - a) / panels as f64;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        coarse += simpson(f, lo, lo + h);
    }
    let eps = rel_tol * coarse.abs().max(1e-300);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_vals(a, b, fa, fm, fb);
    simpson_step(f, a, m, b, fa, fm, fb, whole, eps, 55)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    simpson_vals(a, b, f(a), f(0.5 * (a + b)), f(b))
}

fn simpson_vals(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_vals(a, m, fa, flm, fm);
    let right = simpson_vals(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
}

/// Brent root finder on [lo, hi]; requires a sign change over the bracket.
///
/// Converges to a combined absolute/relative x tolerance.
pub fn brent_root<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, x_tol: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    assert!(
        fa * fb < 0.0,
        "brent_root: no sign change over [{a}, {b}] (f: {fa}, {fb})"
    );
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(xm) };
        fb = f(b);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_points() {
        // the erf backend carries ~1e-12 absolute error; tolerances reflect that
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 5e-12);
        assert!((norm_sf(5.0) / 2.866515719235352e-7 - 1.0).abs() < 1e-9);
        // deep tail survival stays positive and log-consistent
        let q = norm_sf(20.0);
        assert!(q > 0.0 && (q.ln() - ln_norm_sf(20.0)).abs() < 1e-9);
        assert!((ln_norm_sf(40.0) - (-804.608442013754)).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-9] {
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() < 5e-12, "p={p}");
        }
        for &q in &[1e-300, 1e-30, 1e-8, 0.5] {
            let x = norm_sf_inv(q);
            assert!(
                (norm_sf(x) / q - 1.0).abs() < 1e-9,
                "q={q} sf={}",
                norm_sf(x)
            );
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(20);
        // exact for degree ≤ 39: ∫_{-1}^{1} x^8 dx = 2/9
        let val: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((val - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_hermite_matches_normal_moments() {
        let rule = normal_quadrature();
        let total: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let m2: f64 = rule.iter().map(|&(z, w)| w * z * z).sum();
        assert!((m2 - 1.0).abs() < 1e-12);
        // E[e^{tZ}] = e^{t²/2} with a heavy exponent typical of σ ≈ 1.85 severities
        let t = 3.7;
        let mgf: f64 = rule.iter().map(|&(z, w)| w * (t * z).exp()).sum();
        assert!(
            (mgf / (0.5 * t * t).exp() - 1.0).abs() < 1e-10,
            "mgf err {}",
            mgf / (0.5 * t * t).exp() - 1.0
        );
    }

    #[test]
    fn adaptive_simpson_hits_tolerance() {
        let f = |x: f64| (-x).exp();
        let val = adaptive_simpson(&f, 0.0, 10.0, 1e-10);
        let truth = 1.0 - (-10.0_f64).exp();
        assert!((val / truth - 1.0).abs() < 1e-9);
    }

    #[test]
    fn brent_finds_root() {
        let f = |x: f64| x * x * x - 2.0;
        let r = brent_root(&f, 0.0, 2.0, 1e-14);
        assert!((r - 2.0_f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }
}
