//! Gauss rules on segments, triangles and rectangles, with adaptive dyadic
//! subdivision. Integrands are vector valued so that many sensing functions
//! can share one pass over the quadrature points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::point::Point2;
use crate::error::{Error, Result};

/// Parameters of every numerical integration performed by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Points of the symmetric triangle rule (1, 3 or 7).
    pub triangle_rule_order: usize,
    /// Gauss-Legendre points per segment (also per axis on rectangles).
    pub edge_rule_order: usize,
    pub refine_tol: f64,
    pub max_subdivision_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            triangle_rule_order: 7,
            edge_rule_order: 5,
            refine_tol: 1e-8,
            max_subdivision_depth: 10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.triangle_rule_order, 1 | 3 | 7) {
            return Err(Error::InvalidQuadrature(format!(
                "triangle rule must have 1, 3 or 7 points, got {}",
                self.triangle_rule_order
            )));
        }
        if self.edge_rule_order == 0 || self.edge_rule_order > 64 {
            return Err(Error::InvalidQuadrature(format!(
                "edge rule order must be in 1..=64, got {}",
                self.edge_rule_order
            )));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::InvalidQuadrature("refine_tol must be positive".into()));
        }
        Ok(())
    }
}

/// A deterministic real-valued function of the plane.
pub trait ScalarField: Sync {
    fn eval(&self, p: Point2) -> f64;

    /// Fields that can evaluate an antiderivative `F` with `dF/dx = f`
    /// return true; area integrals then reduce to `oint F dy`.
    fn has_x_antiderivative(&self) -> bool {
        false
    }

    fn x_antiderivative(&self, _p: Point2) -> f64 {
        unimplemented!("field has no x-antiderivative")
    }
}

impl<F> ScalarField for F
where
    F: Fn(Point2) -> f64 + Sync,
{
    #[inline]
    fn eval(&self, p: Point2) -> f64 {
        self(p)
    }
}

/// A field with `dim()` real components evaluated together.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval_into(&self, p: Point2, out: &mut [f64]);

    /// See [`ScalarField::has_x_antiderivative`].
    fn has_x_antiderivative(&self) -> bool {
        false
    }

    fn x_antiderivative_into(&self, _p: Point2, _out: &mut [f64]) {
        unimplemented!("field has no x-antiderivative")
    }
}

/// Views a scalar field as a one-component vector field.
pub struct AsVector<'a, F: ?Sized>(pub &'a F);

impl<F: ScalarField + ?Sized> VectorField for AsVector<'_, F> {
    fn dim(&self) -> usize {
        1
    }
    #[inline]
    fn eval_into(&self, p: Point2, out: &mut [f64]) {
        out[0] = self.0.eval(p);
    }
    fn has_x_antiderivative(&self) -> bool {
        self.0.has_x_antiderivative()
    }
    fn x_antiderivative_into(&self, p: Point2, out: &mut [f64]) {
        out[0] = self.0.x_antiderivative(p);
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(z) and its derivative
                let mut p0 = 1.0;
                let mut p1 = 0.0;
                for k in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    let kf = k as f64;
                    p0 = ((2.0 * kf + 1.0) * z * p1 - kf * p2) / (kf + 1.0);
                }
                dp = nf * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                z = 0.0;
                dp = 1.0;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }
}

/// Symmetric triangle rule: barycentric coordinates and weights summing to 1.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn new(order: usize) -> Result<Self> {
        match order {
            1 => Ok(TriangleRule {
                points: vec![[1.0 / 3.0; 3]],
                weights: vec![1.0],
            }),
            3 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                Ok(TriangleRule {
                    points: vec![[a, b, b], [b, a, b], [b, b, a]],
                    weights: vec![1.0 / 3.0; 3],
                })
            }
            7 => {
                let s15 = 15f64.sqrt();
                let b1 = (6.0 + s15) / 21.0;
                let a1 = 1.0 - 2.0 * b1;
                let b2 = (6.0 - s15) / 21.0;
                let a2 = 1.0 - 2.0 * b2;
                let w1 = (155.0 + s15) / 1200.0;
                let w2 = (155.0 - s15) / 1200.0;
                Ok(TriangleRule {
                    points: vec![
                        [1.0 / 3.0; 3],
                        [a1, b1, b1],
                        [b1, a1, b1],
                        [b1, b1, a1],
                        [a2, b2, b2],
                        [b2, a2, b2],
                        [b2, b2, a2],
                    ],
                    weights: vec![0.225, w1, w1, w1, w2, w2, w2],
                })
            }
            _ => Err(Error::InvalidQuadrature(format!(
                "unsupported triangle rule order {order}"
            ))),
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

struct TriangleIntegrator<'a, V: VectorField + ?Sized> {
    rule: TriangleRule,
    field: &'a V,
    max_depth: usize,
}

impl<V: VectorField + ?Sized> TriangleIntegrator<'_, V> {
    fn estimate(&self, t: &[Point2; 3], out: &mut [f64], buf: &mut [f64]) {
        let area = 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).abs();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (l, w) in self.rule.points.iter().zip(&self.rule.weights) {
            let p = Point2::new(
                l[0] * t[0].x + l[1] * t[1].x + l[2] * t[2].x,
                l[0] * t[0].y + l[1] * t[1].y + l[2] * t[2].y,
            );
            self.field.eval_into(p, buf);
            for (o, b) in out.iter_mut().zip(buf.iter()) {
                *o += w * b;
            }
        }
        out.iter_mut().for_each(|v| *v *= area);
    }

    fn children(t: &[Point2; 3]) -> [[Point2; 3]; 4] {
        let m01 = t[0].lerp(t[1], 0.5);
        let m12 = t[1].lerp(t[2], 0.5);
        let m20 = t[2].lerp(t[0], 0.5);
        [
            [t[0], m01, m20],
            [m01, t[1], m12],
            [m20, m12, t[2]],
            [m01, m12, m20],
        ]
    }

    fn adaptive(&self, t: &[Point2; 3], coarse: &[f64], tol: f64, depth: usize) -> Result<Vec<f64>> {
        let dim = coarse.len();
        let kids = Self::children(t);
        let mut buf = vec![0.0; dim];
        let mut ests = vec![vec![0.0; dim]; 4];
        let mut fine = vec![0.0; dim];
        for (k, est) in kids.iter().zip(ests.iter_mut()) {
            self.estimate(k, est, &mut buf);
            for (f, e) in fine.iter_mut().zip(est.iter()) {
                *f += e;
            }
        }
        if max_abs_diff(&fine, coarse) <= tol {
            return Ok(fine);
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureNotConverged {
                max_depth: self.max_depth,
            });
        }
        let mut total = vec![0.0; dim];
        for (k, est) in kids.iter().zip(&ests) {
            let v = self.adaptive(k, est, 0.25 * tol, depth + 1)?;
            for (s, x) in total.iter_mut().zip(v) {
                *s += x;
            }
        }
        Ok(total)
    }
}

/// Integrates `field` over a list of triangles, each counted with the given
/// sign. Returns the signed sum, one entry per field component.
pub fn integrate_triangles<V: VectorField + ?Sized>(
    triangles: &[([Point2; 3], f64)],
    field: &V,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let dim = field.dim();
    let integ = TriangleIntegrator {
        rule: TriangleRule::new(spec.triangle_rule_order)?,
        field,
        max_depth: spec.max_subdivision_depth,
    };
    let coarse: Vec<Vec<f64>> = triangles
        .par_iter()
        .map(|(t, _)| {
            let mut out = vec![0.0; dim];
            let mut buf = vec![0.0; dim];
            integ.estimate(t, &mut out, &mut buf);
            out
        })
        .collect();
    let areas: Vec<f64> = triangles
        .iter()
        .map(|(t, _)| 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).abs())
        .collect();
    let total_area: f64 = areas.iter().sum();
    let mut scale = 0.0f64;
    for k in 0..dim {
        scale = scale.max(coarse.iter().map(|c| c[k].abs()).sum::<f64>());
    }
    let mut result = vec![0.0; dim];
    if total_area == 0.0 {
        return Ok(result);
    }
    let abs_tol = spec.refine_tol * scale.max(f64::MIN_POSITIVE);
    let parts: Vec<Vec<f64>> = triangles
        .par_iter()
        .zip(coarse.par_iter())
        .zip(areas.par_iter())
        .map(|(((t, _), c), a)| {
            if *a == 0.0 {
                return Ok(vec![0.0; dim]);
            }
            integ.adaptive(t, c, abs_tol * a / total_area, 0)
        })
        .collect::<Result<_>>()?;
    for ((_, sign), part) in triangles.iter().zip(parts) {
        for (r, v) in result.iter_mut().zip(part) {
            *r += sign * v;
        }
    }
    Ok(result)
}

/// Hat-weighted line integrals over one segment `[a, b]`:
/// `(int f (1 - s) dH, int f s dH)` with `s` the normalized arclength from `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatIntegrals {
    /// Weight 1 at `a`, 0 at `b`.
    pub toward_start: Vec<f64>,
    /// Weight 0 at `a`, 1 at `b`.
    pub toward_end: Vec<f64>,
}

struct SegmentIntegrator<'a, V: VectorField + ?Sized> {
    rule: GaussLegendre,
    field: &'a V,
    max_depth: usize,
}

impl<V: VectorField + ?Sized> SegmentIntegrator<'_, V> {
    // out = [start-weighted (dim) | end-weighted (dim)] over the sub-interval [s0, s1]
    fn estimate(&self, a: Point2, b: Point2, s0: f64, s1: f64, out: &mut [f64], buf: &mut [f64]) {
        let dim = buf.len();
        let len = a.dist(b) * (s1 - s0);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (node, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let s = s0 + (s1 - s0) * node;
            self.field.eval_into(a.lerp(b, s), buf);
            for k in 0..dim {
                out[k] += w * (1.0 - s) * buf[k];
                out[dim + k] += w * s * buf[k];
            }
        }
        out.iter_mut().for_each(|v| *v *= len);
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive(
        &self,
        a: Point2,
        b: Point2,
        s0: f64,
        s1: f64,
        coarse: &[f64],
        tol: f64,
        depth: usize,
    ) -> Result<Vec<f64>> {
        let dim = coarse.len() / 2;
        let sm = 0.5 * (s0 + s1);
        let mut buf = vec![0.0; dim];
        let mut left = vec![0.0; 2 * dim];
        let mut right = vec![0.0; 2 * dim];
        self.estimate(a, b, s0, sm, &mut left, &mut buf);
        self.estimate(a, b, sm, s1, &mut right, &mut buf);
        let fine: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        if max_abs_diff(&fine, coarse) <= tol {
            return Ok(fine);
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureNotConverged {
                max_depth: self.max_depth,
            });
        }
        let l = self.adaptive(a, b, s0, sm, &left, 0.5 * tol, depth + 1)?;
        let r = self.adaptive(a, b, sm, s1, &right, 0.5 * tol, depth + 1)?;
        Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
    }
}

/// Hat-weighted integrals of `field` over each segment. The relative
/// tolerance is taken with respect to the largest component summed over all
/// segments.
pub fn integrate_segments_hat<V: VectorField + ?Sized>(
    segments: &[(Point2, Point2)],
    field: &V,
    spec: &QuadratureSpec,
) -> Result<Vec<HatIntegrals>> {
    spec.validate()?;
    let dim = field.dim();
    let integ = SegmentIntegrator {
        rule: GaussLegendre::new(spec.edge_rule_order),
        field,
        max_depth: spec.max_subdivision_depth,
    };
    let coarse: Vec<Vec<f64>> = segments
        .par_iter()
        .map(|&(a, b)| {
            let mut out = vec![0.0; 2 * dim];
            let mut buf = vec![0.0; dim];
            integ.estimate(a, b, 0.0, 1.0, &mut out, &mut buf);
            out
        })
        .collect();
    let lengths: Vec<f64> = segments.iter().map(|(a, b)| a.dist(*b)).collect();
    let total_len: f64 = lengths.iter().sum();
    let mut scale = 0.0f64;
    for k in 0..2 * dim {
        scale = scale.max(coarse.iter().map(|c| c[k].abs()).sum::<f64>());
    }
    let abs_tol = spec.refine_tol * scale.max(f64::MIN_POSITIVE);
    segments
        .par_iter()
        .zip(coarse.par_iter())
        .zip(lengths.par_iter())
        .map(|((&(a, b), c), len)| {
            let v = if *len == 0.0 || total_len == 0.0 {
                vec![0.0; 2 * dim]
            } else {
                integ.adaptive(a, b, 0.0, 1.0, c, abs_tol * len / total_len, 0)?
            };
            Ok(HatIntegrals {
                toward_start: v[..dim].to_vec(),
                toward_end: v[dim..].to_vec(),
            })
        })
        .collect()
}

struct BoundaryIntegrator<'a, V: VectorField + ?Sized> {
    rule: GaussLegendre,
    field: &'a V,
    max_depth: usize,
}

impl<V: VectorField + ?Sized> BoundaryIntegrator<'_, V> {
    // int_{s0}^{s1} F(a + s (b - a)) (b.y - a.y) ds
    fn estimate(&self, a: Point2, b: Point2, s0: f64, s1: f64, out: &mut [f64], buf: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (node, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            self.field.x_antiderivative_into(a.lerp(b, s0 + (s1 - s0) * node), buf);
            for (o, v) in out.iter_mut().zip(buf.iter()) {
                *o += w * v;
            }
        }
        let f = (b.y - a.y) * (s1 - s0);
        out.iter_mut().for_each(|v| *v *= f);
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive(&self, a: Point2, b: Point2, s0: f64, s1: f64, coarse: &[f64], tol: f64, depth: usize) -> Result<Vec<f64>> {
        let dim = coarse.len();
        let sm = 0.5 * (s0 + s1);
        let mut buf = vec![0.0; dim];
        let mut left = vec![0.0; dim];
        let mut right = vec![0.0; dim];
        self.estimate(a, b, s0, sm, &mut left, &mut buf);
        self.estimate(a, b, sm, s1, &mut right, &mut buf);
        let fine: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        if max_abs_diff(&fine, coarse) <= tol {
            return Ok(fine);
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureNotConverged {
                max_depth: self.max_depth,
            });
        }
        let l = self.adaptive(a, b, s0, sm, &left, 0.5 * tol, depth + 1)?;
        let r = self.adaptive(a, b, sm, s1, &right, 0.5 * tol, depth + 1)?;
        Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
    }
}

/// `oint F dy` over the closed chain for a field with an x-antiderivative
/// `F`; by the divergence theorem this is the integral of the field against
/// the winding number of the chain. Edges use adaptive Gauss-Legendre.
pub fn integrate_boundary<V: VectorField + ?Sized>(
    vertices: &[Point2],
    field: &V,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let dim = field.dim();
    let n = vertices.len();
    let edges: Vec<(Point2, Point2)> = (0..n)
        .map(|j| (vertices[j], vertices[(j + 1) % n]))
        .filter(|(a, b)| a.y != b.y)
        .collect();
    let integ = BoundaryIntegrator {
        rule: GaussLegendre::new(spec.edge_rule_order),
        field,
        max_depth: spec.max_subdivision_depth.max(20),
    };
    let coarse: Vec<Vec<f64>> = edges
        .par_iter()
        .map(|&(a, b)| {
            let mut out = vec![0.0; dim];
            let mut buf = vec![0.0; dim];
            integ.estimate(a, b, 0.0, 1.0, &mut out, &mut buf);
            out
        })
        .collect();
    let mut result = vec![0.0; dim];
    if edges.is_empty() {
        return Ok(result);
    }
    let mut scale = 0.0f64;
    for k in 0..dim {
        scale = scale.max(coarse.iter().map(|c| c[k].abs()).sum::<f64>());
    }
    let abs_tol = spec.refine_tol * scale.max(f64::MIN_POSITIVE);
    let total: f64 = edges.iter().map(|(a, b)| a.dist(*b)).sum();
    let parts: Vec<Vec<f64>> = edges
        .par_iter()
        .zip(coarse.par_iter())
        .map(|(&(a, b), c)| integ.adaptive(a, b, 0.0, 1.0, c, abs_tol * a.dist(b) / total, 0))
        .collect::<Result<_>>()?;
    for part in parts {
        for (r, v) in result.iter_mut().zip(part) {
            *r += v;
        }
    }
    Ok(result)
}

/// Adaptive tensor Gauss-Legendre integral of a scalar field over the
/// rectangle `[x0, x1] x [y0, y1]` to absolute tolerance `tol`.
pub fn integrate_rect<F: ScalarField + ?Sized>(
    field: &F,
    x: (f64, f64),
    y: (f64, f64),
    rule: &GaussLegendre,
    tol: f64,
    max_depth: usize,
) -> Result<f64> {
    let est = |x: (f64, f64), y: (f64, f64)| -> f64 {
        let (dx, dy) = (x.1 - x.0, y.1 - y.0);
        let mut s = 0.0;
        for (ni, wi) in rule.nodes.iter().zip(&rule.weights) {
            for (nj, wj) in rule.nodes.iter().zip(&rule.weights) {
                s += wi * wj * field.eval(Point2::new(x.0 + dx * ni, y.0 + dy * nj));
            }
        }
        s * dx * dy
    };
    fn rec(
        est: &dyn Fn((f64, f64), (f64, f64)) -> f64,
        x: (f64, f64),
        y: (f64, f64),
        coarse: f64,
        tol: f64,
        depth: usize,
        max_depth: usize,
    ) -> Result<f64> {
        let xm = 0.5 * (x.0 + x.1);
        let ym = 0.5 * (y.0 + y.1);
        let quads = [
            ((x.0, xm), (y.0, ym)),
            ((xm, x.1), (y.0, ym)),
            ((x.0, xm), (ym, y.1)),
            ((xm, x.1), (ym, y.1)),
        ];
        let ests: Vec<f64> = quads.iter().map(|&(qx, qy)| est(qx, qy)).collect();
        let fine: f64 = ests.iter().sum();
        if (fine - coarse).abs() <= tol {
            return Ok(fine);
        }
        if depth >= max_depth {
            return Err(Error::QuadratureNotConverged { max_depth });
        }
        let mut total = 0.0;
        for (&(qx, qy), &e) in quads.iter().zip(&ests) {
            total += rec(est, qx, qy, e, 0.25 * tol, depth + 1, max_depth)?;
        }
        Ok(total)
    }
    let coarse = est(x, y);
    rec(&est, x, y, coarse, tol, 0, max_depth)
}
