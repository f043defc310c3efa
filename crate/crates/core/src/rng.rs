//! Seeded random streams.
//!
//! Every concern draws from its own ChaCha8 stream derived from the run seed
//! (`ChaCha8Rng::seed_from_u64(seed)` with a fixed stream number), so adding
//! a mover or an extra measurement never shifts the draws of another concern.
//!
//! | stream        | number        |
//! |---------------|---------------|
//! | waypoints     | 1             |
//! | landmarks     | 2             |
//! | control noise | 3             |
//! | measurements  | 4             |
//! | mover `i`     | `1000 + i`    |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Waypoints,
    Landmarks,
    ControlNoise,
    MeasurementNoise,
    Mover(u32),
}

impl Stream {
    pub fn number(self) -> u64 {
        match self {
            Stream::Waypoints => 1,
            Stream::Landmarks => 2,
            Stream::ControlNoise => 3,
            Stream::MeasurementNoise => 4,
            Stream::Mover(i) => 1000 + u64::from(i),
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.number());
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derived from the experiment seed, sweep value and trial index.
pub fn trial_seed(base: u64, value: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ value) ^ trial.rotate_left(32))
}
