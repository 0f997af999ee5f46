//! Single radial measurement: Cheeger ratio of centered disks and regular
//! polygons, their maximizing radii, and the closed-form amplitude.
//!
//! Everything works with the raw radial profile `g` (`phi(x) = g(|x|)`), so
//! `G(R) = (1/R) int_0^R r g(r) dr` is the Cheeger ratio of `B(0, R)` with
//! the common factor `2 pi` cancelled.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::quadrature::GaussLegendre;

pub trait RadialProfile: Sync {
    fn value(&self, r: f64) -> f64;
    /// Characteristic length used to size search brackets.
    fn scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub sigma: f64,
}

impl RadialProfile for GaussianProfile {
    fn value(&self, r: f64) -> f64 {
        (-r * r / (2.0 * self.sigma * self.sigma)).exp()
    }
    fn scale(&self) -> f64 {
        self.sigma
    }
}

/// A profile given by an arbitrary function.
pub struct FnProfile<F> {
    pub g: F,
    pub scale: f64,
}

impl<F: Fn(f64) -> f64 + Sync> RadialProfile for FnProfile<F> {
    fn value(&self, r: f64) -> f64 {
        (self.g)(r)
    }
    fn scale(&self) -> f64 {
        self.scale
    }
}

const ASSUMPTION_GRID: usize = 10_000;

/// Numerical check that `g` is positive and decreasing and that
/// `f(r) = r g(r)` increases then decreases with `r f(r) -> 0`.
pub fn check_assumption<P: RadialProfile + ?Sized>(profile: &P) -> Result<()> {
    let s = profile.scale();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::AssumptionViolated("profile scale must be positive".into()));
    }
    let f = |r: f64| r * profile.value(r);
    let f_ref = (0..=40).map(|k| f(s * 0.1 * k as f64)).fold(0.0f64, f64::max);
    if !(f_ref > 0.0) {
        return Err(Error::AssumptionViolated("profile is not positive".into()));
    }
    // upper end of the scan: where r f(r) has become negligible
    let mut r_max = s;
    while r_max * f(r_max) > 1e-10 * f_ref * s {
        r_max *= 2.0;
        if r_max > 1e6 * s {
            return Err(Error::AssumptionViolated(
                "r * f(r) does not vanish at infinity".into(),
            ));
        }
    }
    let r_min = 1e-4 * s;
    let ratio = (r_max / r_min).ln() / (ASSUMPTION_GRID - 1) as f64;
    let rs: Vec<f64> = (0..ASSUMPTION_GRID).map(|k| r_min * (ratio * k as f64).exp()).collect();
    let gs: Vec<f64> = rs.iter().map(|&r| profile.value(r)).collect();
    if gs.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return Err(Error::AssumptionViolated("profile is not positive on the scan".into()));
    }
    if gs.windows(2).any(|w| w[1] > w[0]) || !(gs[gs.len() - 1] < gs[0]) {
        return Err(Error::AssumptionViolated("profile is not decreasing".into()));
    }
    let mut changes = 0;
    let mut last = 0.0f64;
    for k in 1..rs.len() {
        let d = rs[k] * gs[k] - rs[k - 1] * gs[k - 1];
        if d == 0.0 {
            continue;
        }
        if last == 0.0 {
            if d < 0.0 {
                return Err(Error::AssumptionViolated("r g(r) is not initially increasing".into()));
            }
        } else if d.signum() != last.signum() {
            changes += 1;
        }
        last = d;
    }
    if changes != 1 {
        return Err(Error::AssumptionViolated(format!(
            "r g(r) must change monotonicity exactly once, found {changes} changes"
        )));
    }
    Ok(())
}

/// Adaptive Gauss-Legendre on `[a, b]` with bisection.
fn integrate_1d(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    thread_local! {
        static RULE: GaussLegendre = GaussLegendre::new(10);
    }
    let est = |a: f64, b: f64| -> f64 {
        RULE.with(|g| {
            g.nodes
                .iter()
                .zip(&g.weights)
                .map(|(x, w)| w * f(a + (b - a) * x))
                .sum::<f64>()
                * (b - a)
        })
    };
    fn rec(est: &dyn Fn(f64, f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (est(a, m), est(m, b));
        if (l + r - whole).abs() <= tol || depth >= 40 {
            return l + r;
        }
        rec(est, a, m, l, 0.5 * tol, depth + 1) + rec(est, m, b, r, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = est(a, b);
    rec(&est, a, b, whole, tol, 0)
}

/// `int_0^rho r g(r) dr`.
fn radial_mass<P: RadialProfile + ?Sized>(profile: &P, rho: f64) -> f64 {
    let s = profile.scale();
    integrate_1d(&|r| r * profile.value(r), 0.0, rho, 1e-15 * s * s)
}

/// Cheeger ratio of the centered disk of radius `r`, `(1/R) int_0^R r g`.
pub fn disk_ratio<P: RadialProfile + ?Sized>(profile: &P, r: f64) -> f64 {
    radial_mass(profile, r) / r
}

/// Radius of the optimal centered disk: the root of
/// `R^2 g(R) = int_0^R r g(r) dr`, by bracketing and bisection.
pub fn optimal_disk_radius<P: RadialProfile + ?Sized>(profile: &P) -> Result<f64> {
    check_assumption(profile)?;
    let s = profile.scale();
    let h = |r: f64| r * r * profile.value(r) - radial_mass(profile, r);
    let mut lo = 1e-3 * s;
    let mut hi = s;
    if !(h(lo) > 0.0) {
        return Err(Error::AssumptionViolated("no sign change near the origin".into()));
    }
    while h(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 * s {
            return Err(Error::AssumptionViolated("no sign change found".into()));
        }
    }
    Ok(bisect(&h, lo, hi, 1e-13 * s))
}

fn bisect(h: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    // h(lo) > 0 >= h(hi)
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn polygon_alpha(n: usize, s: f64) -> f64 {
    let t = PI / n as f64;
    t.cos() / (t * s).cos()
}

/// Cheeger ratio of the regular `n`-gon inscribed in the circle of radius
/// `r`: `(pi/n) / sin(pi/n) * (1/R) int_0^1 int_0^{R alpha_n(s)} r g dr ds`
/// with `alpha_n(s) = cos(pi/n) / cos(pi s/n)`.
pub fn polygon_ratio<P: RadialProfile + ?Sized>(profile: &P, n: usize, r: f64) -> f64 {
    assert!(n >= 3);
    let t = PI / n as f64;
    let inner = |s: f64| radial_mass(profile, r * polygon_alpha(n, s));
    let scale = radial_mass(profile, r).abs().max(f64::MIN_POSITIVE);
    let outer = integrate_1d(&inner, 0.0, 1.0, 1e-14 * scale);
    t / t.sin() * outer / r
}

/// Maximizer of [`polygon_ratio`] over the circumradius: golden-section
/// search, polished by bisection on the stationarity condition
/// `R^2 int_0^1 alpha^2 g(R alpha) ds = int_0^1 int_0^{R alpha} r g dr ds`.
pub fn optimal_polygon_radius<P: RadialProfile + ?Sized>(profile: &P, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("polygon needs n >= 3, got {n}")));
    }
    let r_disk = optimal_disk_radius(profile)?;
    let g_n = |r: f64| polygon_ratio(profile, n, r);
    let (mut a, mut b) = (0.5 * r_disk, 2.0 * r_disk / (PI / n as f64).cos());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (g_n(c), g_n(d));
    while b - a > 1e-6 * r_disk {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g_n(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g_n(d);
        }
    }
    let stationarity = |r: f64| {
        let lhs = integrate_1d(
            &|s| {
                let al = polygon_alpha(n, s);
                al * al * profile.value(r * al)
            },
            0.0,
            1.0,
            1e-15,
        );
        let rhs = integrate_1d(&|s| radial_mass(profile, r * polygon_alpha(n, s)), 0.0, 1.0, 1e-15 * r * r);
        r * r * lhs - rhs
    };
    let mut lo = a;
    let mut hi = b;
    let mut widen = 0;
    while !(stationarity(lo) > 0.0 && stationarity(hi) <= 0.0) {
        lo -= (b - a).max(1e-6 * r_disk);
        hi += (b - a).max(1e-6 * r_disk);
        widen += 1;
        if widen > 60 || lo <= 0.0 {
            return Err(Error::AssumptionViolated(
                "polygon ratio has no interior stationary point".into(),
            ));
        }
    }
    Ok(bisect(&stationarity, lo, hi, 1e-13 * r_disk))
}

/// Closed-form amplitude of the single-atom LASSO:
/// `sign(y) / I * (|y| - lambda P / I)^+` with `I = int_E phi`.
pub fn amplitude_closed_form(y: f64, lambda: f64, integral_phi: f64, perimeter: f64) -> f64 {
    let shrunk = (y.abs() - lambda * perimeter / integral_phi).max(0.0);
    y.signum() * shrunk / integral_phi
}

/// One row of the polygon-versus-disk comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRow {
    pub n: usize,
    pub r_star_n: f64,
    pub g_n_at_r_star_n: f64,
    pub abs_err_vs_r_star: f64,
}

pub fn radial_table<P: RadialProfile + ?Sized>(profile: &P, ns: &[usize]) -> Result<Vec<RadialRow>> {
    let r_star = optimal_disk_radius(profile)?;
    ns.iter()
        .map(|&n| {
            let r = optimal_polygon_radius(profile, n)?;
            Ok(RadialRow {
                n,
                r_star_n: r,
                g_n_at_r_star_n: polygon_ratio(profile, n, r),
                abs_err_vs_r_star: (r - r_star).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_ratio_closed_forms() {
        let flat = FnProfile { g: |_r: f64| 1.0, scale: 1.0 };
        for r in [0.1, 1.0, 3.7] {
            assert!((disk_ratio(&flat, r) - r / 2.0).abs() < 1e-14);
        }
        let g = GaussianProfile { sigma: 1.0 };
        for r in [0.2, 1.0, 1.58, 4.0] {
            let exact = -(-r * r / 2.0f64).exp_m1() / r;
            assert!((disk_ratio(&g, r) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_optimal_radius_matches_scalar_equation() {
        // independent route: bisection on (2t + 1) e^{-t} = 1, R* = sqrt(2 t*)
        let f = |t: f64| (2.0 * t + 1.0) * (-t).exp() - 1.0;
        let (mut lo, mut hi) = (1.0, 1.5);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let expected = (2.0 * lo).sqrt();
        let r = optimal_disk_radius(&GaussianProfile { sigma: 1.0 }).unwrap();
        assert!((r - expected).abs() < 1e-10, "{r} vs {expected}");
        assert!((r - 1.58529).abs() < 1e-4);
        let r2 = optimal_disk_radius(&GaussianProfile { sigma: 2.0 }).unwrap();
        assert!((r2 - 2.0 * r).abs() < 1e-9);
    }

    #[test]
    fn golden_section_on_disk_ratio_agrees_with_root() {
        let g = GaussianProfile { sigma: 1.0 };
        // maximize the closed form with a plain golden-section search
        let ratio = |r: f64| -(-r * r / 2.0f64).exp_m1() / r;
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (0.5f64, 3.0f64);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if ratio(c) > ratio(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let golden = 0.5 * (a + b);
        let root = optimal_disk_radius(&g).unwrap();
        // golden section only resolves the argmax to about sqrt(eps)
        assert!((golden - root).abs() < 1e-7, "{golden} vs {root}");
    }

    #[test]
    fn flat_profile_polygon_ratio_is_inradius_over_two() {
        let flat = FnProfile { g: |_r: f64| 1.0, scale: 1.0 };
        for n in [3, 5, 8, 64] {
            let r = 1.3;
            let expected = r * (PI / n as f64).cos() / 2.0;
            assert!((polygon_ratio(&flat, n, r) - expected).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn polygon_ratio_below_disk_ratio() {
        let g = GaussianProfile { sigma: 1.0 };
        let best_disk = disk_ratio(&g, optimal_disk_radius(&g).unwrap());
        let mut prev = 0.0;
        for n in [3, 6, 16, 64] {
            let best = polygon_ratio(&g, n, optimal_polygon_radius(&g, n).unwrap());
            assert!(best < best_disk);
            assert!(best > prev);
            prev = best;
        }
    }

    #[test]
    fn polygon_radius_approaches_disk_radius() {
        let g = GaussianProfile { sigma: 1.0 };
        let r_star = optimal_disk_radius(&g).unwrap();
        let e8 = (optimal_polygon_radius(&g, 8).unwrap() - r_star).abs();
        let e64 = (optimal_polygon_radius(&g, 64).unwrap() - r_star).abs();
        assert!(e64 < e8);
        let s2 = optimal_polygon_radius(&GaussianProfile { sigma: 2.0 }, 16).unwrap();
        let s1 = optimal_polygon_radius(&g, 16).unwrap();
        assert!((s2 - 2.0 * s1).abs() < 1e-8);
    }

    #[test]
    fn assumption_violations() {
        let flat = FnProfile { g: |_r: f64| 1.0, scale: 1.0 };
        assert!(matches!(check_assumption(&flat), Err(Error::AssumptionViolated(_))));
        assert!(optimal_polygon_radius(&flat, 8).is_err());
        let increasing = FnProfile { g: |r: f64| 1.0 + r, scale: 1.0 };
        assert!(optimal_disk_radius(&increasing).is_err());
        assert!(check_assumption(&GaussianProfile { sigma: 0.3 }).is_ok());
        // 1/(1+r^2)^2 satisfies it; 1/(1+r) does not vanish fast enough
        assert!(check_assumption(&FnProfile { g: |r: f64| (1.0 + r * r).powi(-2), scale: 1.0 }).is_ok());
        assert!(check_assumption(&FnProfile { g: |r: f64| 1.0 / (1.0 + r), scale: 1.0 }).is_err());
    }

    #[test]
    fn amplitude_formula() {
        assert_eq!(amplitude_closed_form(0.5, 1.0, 2.0, 4.0), 0.0);
        assert!((amplitude_closed_form(3.0, 0.0, 2.0, 4.0) - 1.5).abs() < 1e-15);
        assert!((amplitude_closed_form(-10.0, 1.0, 2.0, 4.0) + 4.0).abs() < 1e-15);
    }
}
