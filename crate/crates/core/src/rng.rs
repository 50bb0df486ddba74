//! Splittable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `seed_from_u64(seed ^ domain_tag)` and positioned on stream `index`
//! (`set_stream`). A stream depends only on `(seed, domain, index)`, so work
//! can be partitioned across threads and still reproduce the serial output
//! bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// One stream per Monte Carlo trajectory.
    Trajectory,
    /// Polarizer acceptance decisions, one stream per polarizer angle.
    Acceptance,
    /// Photon-counting detection, one stream per polarizer angle.
    Detection,
    /// Poisson noise on synthesized spectra, one stream per sweep row.
    Spectrum,
}

impl Domain {
    const fn tag(self) -> u64 {
        match self {
            Domain::Trajectory => 0x7472_616a_6563_7421,
            Domain::Acceptance => 0x6163_6365_7074_2121,
            Domain::Detection => 0x6465_7465_6374_2121,
            Domain::Spectrum => 0x7370_6563_7472_756d,
        }
    }
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.tag());
    rng.set_stream(index);
    rng
}
