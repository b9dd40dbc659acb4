//! Sampling the invariant measure of a Teichmüller disc.
//!
//! A point of the disc of `o` is a pair (point of the modular fundamental
//! domain, element of the orbit of `o`): the disc's fundamental domain is a
//! union of translates of the modular one, one per orbit element.

use rand::Rng;

use crate::error::{Error, Result};
use crate::excursion::Trajectory;
use crate::hyperbolic::UhpPoint;
use crate::origami::{orbit, Origami};

/// Lowest height of the modular fundamental domain.
pub const Y_MIN: f64 = 0.866_025_403_784_438_6;

/// Hyperbolic-area sample of `{|x| <= 1/2, |z| >= 1}`.
pub fn sample_fundamental_domain<R: Rng + ?Sized>(rng: &mut R) -> UhpPoint {
    loop {
        let x: f64 = rng.gen_range(-0.5..=0.5);
        // P(y > t) = Y_MIN / t for area density dy / y²
        let u: f64 = 1.0 - rng.gen::<f64>();
        let y = Y_MIN / u;
        if x * x + y * y >= 1.0 {
            if let Ok(z) = UhpPoint::new(x, y) {
                return z;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscSampler {
    orbit: Vec<Origami>,
}

impl DiscSampler {
    pub fn new(o: &Origami) -> Self {
        Self { orbit: orbit(o) }
    }

    pub fn orbit(&self) -> &[Origami] {
        &self.orbit
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (UhpPoint, &Origami) {
        let z = sample_fundamental_domain(rng);
        let o = &self.orbit[rng.gen_range(0..self.orbit.len())];
        (z, o)
    }

    /// A ray from a sampled point in a uniformly random direction.
    pub fn trajectory<R: Rng + ?Sized>(&self, id: u64, bits: u64, rng: &mut R) -> Result<Trajectory> {
        for _ in 0..16 {
            let (z, o) = self.sample(rng);
            let alpha = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            if let Ok(t) = Trajectory::from_direction(id, z, alpha, o.clone(), bits, rng) {
                return Ok(t);
            }
        }
        Err(Error::Domain("could not draw a ray with a finite endpoint".into()))
    }
}
