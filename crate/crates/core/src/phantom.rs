//! Synthetic piecewise-constant phantoms and seeded measurement noise.
//!
//! Noise is drawn with ChaCha8 seeded by a `u64` and the ziggurat standard
//! normal sampler of `rand_distr`, so a seed reproduces the same vector on
//! every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, QuadratureSpec, SimplePolygon};
use crate::operator::{GaussianOperator, Measurements};
use crate::sparse::{Atom, AtomicFunction};

/// Vertices used to approximate round shapes.
pub const ROUND_VERTICES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Rectangle { min: [f64; 2], max: [f64; 2] },
    RegularPolygon { center: [f64; 2], radius: f64, sides: usize, #[serde(default)] phase: f64 },
    /// Outer disk minus inner disk.
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomAtom {
    pub amplitude: f64,
    #[serde(flatten)]
    pub shape: Shape,
}

fn pt(p: [f64; 2]) -> Point2 {
    Point2::new(p[0], p[1])
}

impl Shape {
    /// Signed polygonal pieces `(weight, polygon)`; every shape but the
    /// annulus is a single piece of weight 1.
    pub fn pieces(&self) -> Result<Vec<(f64, SimplePolygon)>> {
        let positive = |r: f64, what: &str| {
            if r > 0.0 && r.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{what} must be positive, got {r}")))
            }
        };
        Ok(match *self {
            Shape::Disk { center, radius } => {
                positive(radius, "disk radius")?;
                vec![(1.0, SimplePolygon::regular(ROUND_VERTICES, pt(center), radius, 0.0)?)]
            }
            Shape::Rectangle { min, max } => vec![(1.0, SimplePolygon::rectangle(pt(min), pt(max))?)],
            Shape::RegularPolygon { center, radius, sides, phase } => {
                positive(radius, "polygon radius")?;
                vec![(1.0, SimplePolygon::regular(sides, pt(center), radius, phase)?)]
            }
            Shape::Annulus { center, inner, outer } => {
                positive(inner, "annulus inner radius")?;
                if !(outer > inner) {
                    return Err(Error::InvalidConfig("annulus needs outer > inner".into()));
                }
                vec![
                    (1.0, SimplePolygon::regular(ROUND_VERTICES, pt(center), outer, 0.0)?),
                    (-1.0, SimplePolygon::regular(ROUND_VERTICES, pt(center), inner, 0.0)?),
                ]
            }
        })
    }
}

/// The phantom as a sum of atoms; an annulus contributes two overlapping
/// atoms of opposite sign, so its total variation is not the sum of
/// `|a_i| P(E_i)` only when pieces touch (they do not).
pub fn phantom_function(atoms: &[PhantomAtom]) -> Result<AtomicFunction> {
    let mut out = Vec::new();
    for a in atoms {
        if !a.amplitude.is_finite() {
            return Err(Error::InvalidConfig("phantom amplitude must be finite".into()));
        }
        for (w, poly) in a.shape.pieces()? {
            out.push(Atom::new(w * a.amplitude, poly));
        }
    }
    Ok(AtomicFunction::new(out))
}

/// `m` i.i.d. `N(0, tau^2)` samples.
pub fn gaussian_noise(m: usize, tau: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            tau * z
        })
        .collect()
}

/// Noise level giving `10 log10(|y|^2 / (m tau^2)) = snr_db`.
pub fn tau_for_snr(clean: &Measurements, snr_db: f64) -> f64 {
    clean.norm() / (clean.len() as f64).sqrt() * 10f64.powf(-snr_db / 20.0)
}

/// `y = Phi u0 + w` with `w ~ N(0, tau^2 I)`.
pub fn observe(
    op: &GaussianOperator,
    u0: &AtomicFunction,
    tau: f64,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<Measurements> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidConfig(format!("noise level must be nonnegative, got {tau}")));
    }
    let mut y = op.forward(u0, quad)?;
    if tau > 0.0 {
        for (v, w) in y.values.iter_mut().zip(gaussian_noise(op.len(), tau, seed)) {
            *v += w;
        }
    }
    Ok(y)
}
