//! Level-set extraction: marching squares on cell-center samples and
//! selection of the contour with the best Cheeger ratio.

use std::collections::HashMap;

use super::GridFunction;
use crate::error::{Error, Result};
use crate::geometry::{Point2, QuadratureSpec, ScalarField, SimplePolygon};

/// Closed contours of `{u > level}` for `level > 0`, traced through the
/// cell-center lattice padded by a ring of zeros (so every contour closes).
/// Saddles are resolved with the average of the four corners.
pub fn marching_squares(u: &GridFunction, level: f64) -> Vec<Vec<Point2>> {
    assert!(level > 0.0, "level must be positive so the zero padding is outside");
    let n = u.n();
    let m = n + 2;
    let h = u.cell_size();
    let r = u.half_width();
    let val = |a: usize, b: usize| -> f64 {
        if a == 0 || b == 0 || a > n || b > n {
            0.0
        } else {
            u.get(a - 1, b - 1)
        }
    };
    let pos = |a: usize, b: usize| Point2::new(-r + (a as f64 - 0.5) * h, -r + (b as f64 - 0.5) * h);
    let h_edge = |a: usize, b: usize| 2 * (b * m + a);
    let v_edge = |a: usize, b: usize| 2 * (b * m + a) + 1;

    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut link = |e: usize, f: usize| {
        adj.entry(e).or_default().push(f);
        adj.entry(f).or_default().push(e);
    };
    for b in 0..m - 1 {
        for a in 0..m - 1 {
            let c = [val(a, b), val(a + 1, b), val(a + 1, b + 1), val(a, b + 1)];
            let inside = c.map(|v| v > level);
            let case = inside
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &i)| acc | ((i as u8) << k));
            let (bottom, right, top, left) = (h_edge(a, b), v_edge(a + 1, b), h_edge(a, b + 1), v_edge(a, b));
            match case {
                0 | 15 => {}
                1 | 14 => link(left, bottom),
                2 | 13 => link(bottom, right),
                3 | 12 => link(left, right),
                4 | 11 => link(right, top),
                6 | 9 => link(bottom, top),
                7 | 8 => link(left, top),
                5 | 10 => {
                    let center_in = c.iter().sum::<f64>() / 4.0 > level;
                    // case 5: bl and tr inside; case 10: br and tl inside
                    if (case == 5) == center_in {
                        link(bottom, right);
                        link(top, left);
                    } else {
                        link(left, bottom);
                        link(right, top);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let point_on = |e: usize| -> Point2 {
        let node = e / 2;
        let (a, b) = (node % m, node / m);
        let (a1, b1) = if e % 2 == 0 { (a + 1, b) } else { (a, b + 1) };
        let (v0, v1) = (val(a, b), val(a1, b1));
        let t = ((level - v0) / (v1 - v0)).clamp(0.0, 1.0);
        pos(a, b).lerp(pos(a1, b1), t)
    };

    let mut keys: Vec<usize> = adj.keys().copied().collect();
    keys.sort_unstable();
    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut loops = Vec::new();
    for &start in &keys {
        if visited.contains_key(&start) {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut prev = start;
        let mut cur = adj[&start][0];
        while cur != start {
            visited.insert(cur, true);
            chain.push(cur);
            let next = adj[&cur].iter().copied().find(|&x| x != prev).unwrap_or(prev);
            prev = cur;
            cur = next;
            if chain.len() > adj.len() {
                break;
            }
        }
        let mut pts: Vec<Point2> = Vec::with_capacity(chain.len());
        for e in chain {
            let p = point_on(e);
            if pts.last().is_none_or(|q| q.dist(p) > 1e-12 * h) {
                pts.push(p);
            }
        }
        while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= 1e-12 * h {
            pts.pop();
        }
        if pts.len() >= 3 {
            loops.push(pts);
        }
    }
    loops
}

/// Best mesh-stage polygon and the sign `eps = sign(int_E eta)` of the atom
/// it defines.
#[derive(Debug, Clone)]
pub struct ExtractedPolygon {
    pub polygon: SimplePolygon,
    pub sign: f64,
    /// `|int_E eta| / P(E)` of the returned polygon.
    pub ratio: f64,
    pub level: f64,
}

const LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

/// Sweeps the levels `{0.25, 0.5, 0.75} max|u|` of `u` and `-u`, resamples
/// each simple contour to `n_target` vertices and keeps the one maximizing
/// `|int_E eta| / P(E)`.
pub fn extract_polygon<F: ScalarField + ?Sized>(
    u: &GridFunction,
    eta: &F,
    n_target: usize,
    quad: &QuadratureSpec,
) -> Result<ExtractedPolygon> {
    let top = u.max_abs();
    if !(top > 0.0) {
        return Err(Error::NoContourFound);
    }
    let neg = GridFunction::new(u.n(), u.half_width(), u.values().iter().map(|v| -v).collect())?;
    let mut best: Option<ExtractedPolygon> = None;
    for field in [u, &neg] {
        for q in LEVELS {
            let level = q * top;
            for contour in marching_squares(field, level) {
                let Ok(poly) = SimplePolygon::new(contour) else {
                    continue;
                };
                let Ok(poly) = poly.resample(n_target) else {
                    continue;
                };
                let area = poly.weighted_area(eta, quad)?;
                let ratio = area.abs() / poly.perimeter();
                if best.as_ref().is_none_or(|b| ratio > b.ratio) {
                    best = Some(ExtractedPolygon {
                        polygon: poly,
                        sign: if area >= 0.0 { 1.0 } else { -1.0 },
                        ratio,
                        level,
                    });
                }
            }
        }
    }
    best.ok_or(Error::NoContourFound)
}
