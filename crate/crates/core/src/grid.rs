//! Seeded sample grids.
//!
//! A grid is the finite surrogate for a "for all x, y, z" quantifier: points
//! are regenerated from the seed on demand, so every report can state exactly
//! which points back its claims. Structured points (zero, negations, dyadic
//! halvings) ride along with the random samples because the iteration under
//! test visits exactly those scales.

use crate::algebra::{AlgebraInstance, Element, Scalar};
use crate::error::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stateless 64-bit mixer used to derive per-purpose streams from one seed.
pub(crate) fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const DEFAULT_GRID_COUNT: usize = 64;
pub const DEFAULT_RADIUS_BAND: [f64; 2] = [0.25, 8.0];

/// How many leading samples seed the structured (zero/negation/dyadic)
/// closure. Capping keeps a grid's early entries a prefix of any larger
/// grid with the same seed, so enlarging a grid never drops points.
const STRUCTURED_BASE_CAP: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub seed: u64,
    pub count: usize,
    #[serde(rename = "band")]
    pub radius_band: [f64; 2],
    #[serde(rename = "structured", default = "default_true")]
    pub includes_structured: bool,
}

fn default_true() -> bool {
    true
}

impl SampleGrid {
    pub fn new(seed: u64, count: usize, radius_band: [f64; 2], includes_structured: bool) -> Self {
        SampleGrid {
            seed,
            count,
            radius_band,
            includes_structured,
        }
    }

    /// The grid used by experiments unless a config overrides it.
    pub fn default_for_seed(seed: u64) -> Self {
        SampleGrid::new(seed, DEFAULT_GRID_COUNT, DEFAULT_RADIUS_BAND, true)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix64(self.seed, salt))
    }

    /// `n` seeded elements with instance norm uniform in the radius band.
    pub fn sample_elements(
        &self,
        algebra: &AlgebraInstance,
        salt: u64,
        n: usize,
    ) -> Result<Vec<Element>> {
        let mut rng = self.rng(salt);
        (0..n).map(|_| self.sample_one(algebra, &mut rng)).collect()
    }

    fn sample_one(&self, algebra: &AlgebraInstance, rng: &mut ChaCha8Rng) -> Result<Element> {
        let len = algebra.carrier_len();
        let direction = loop {
            let coords: Vec<Scalar> = (0..len)
                .map(|_| {
                    let re = 2.0 * rng.gen::<f64>() - 1.0;
                    let im = 2.0 * rng.gen::<f64>() - 1.0;
                    Scalar::new(re, im)
                })
                .collect();
            let raw = Element::new(coords);
            let norm = algebra.norm(&raw)?;
            if norm > 1e-3 {
                break raw.scale_re(1.0 / norm);
            }
        };
        let [lo, hi] = self.radius_band;
        let radius = lo + (hi - lo) * rng.gen::<f64>();
        Ok(direction.scale_re(radius))
    }

    /// Seeded radii uniform in the band; used where only norms matter.
    pub fn sample_radii(&self, salt: u64, n: usize) -> Vec<f64> {
        let mut rng = self.rng(salt);
        let [lo, hi] = self.radius_band;
        (0..n).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect()
    }

    /// Seeded complex scalars with components in [-1, 1].
    pub fn sample_scalars(&self, salt: u64, n: usize) -> Vec<Scalar> {
        let mut rng = self.rng(salt);
        (0..n)
            .map(|_| {
                let re = 2.0 * rng.gen::<f64>() - 1.0;
                let im = 2.0 * rng.gen::<f64>() - 1.0;
                Scalar::new(re, im)
            })
            .collect()
    }

    /// Evaluation points: the seeded samples plus the structured closure.
    pub fn points(&self, algebra: &AlgebraInstance) -> Result<Vec<Element>> {
        let base = self.sample_elements(algebra, 0x50, self.count)?;
        let mut out = base.clone();
        if self.includes_structured {
            out.push(algebra.zero());
            for b in &base {
                out.push(b.neg());
                out.push(b.halve());
                out.push(b.halve().halve());
            }
        }
        Ok(out)
    }

    /// Seeded argument pairs plus structured pairs from the leading samples.
    pub fn pairs(&self, algebra: &AlgebraInstance) -> Result<Vec<(Element, Element)>> {
        let flat = self.sample_elements(algebra, 0x52, 2 * self.count)?;
        let mut out: Vec<(Element, Element)> = flat
            .chunks_exact(2)
            .map(|c| (c[0].clone(), c[1].clone()))
            .collect();
        if self.includes_structured {
            for (x, _) in out.iter().take(STRUCTURED_BASE_CAP).cloned().collect::<Vec<_>>() {
                out.push((x.clone(), x.clone()));
                out.push((x.clone(), x.neg()));
                out.push((x.clone(), x.halve()));
            }
        }
        Ok(out)
    }

    /// Seeded argument triples plus structured triples from the leading
    /// samples (zero slots, negation pairings).
    pub fn triples(&self, algebra: &AlgebraInstance) -> Result<Vec<(Element, Element, Element)>> {
        let flat = self.sample_elements(algebra, 0x54, 3 * self.count)?;
        let mut out: Vec<(Element, Element, Element)> = flat
            .chunks_exact(3)
            .map(|c| (c[0].clone(), c[1].clone(), c[2].clone()))
            .collect();
        if self.includes_structured {
            let zero = algebra.zero();
            let lead: Vec<_> = out.iter().take(STRUCTURED_BASE_CAP).cloned().collect();
            for (x, y, z) in lead {
                out.push((zero.clone(), y.clone(), y.neg()));
                out.push((x.clone(), zero.clone(), x.neg()));
                out.push((x.clone(), y.clone(), zero.clone()));
                out.push((zero.clone(), zero.clone(), z.clone()));
            }
        }
        Ok(out)
    }
}
