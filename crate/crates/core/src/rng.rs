//! Seeded random streams.
//!
//! Every random draw in the engine comes from a ChaCha8 generator keyed by the
//! episode seed. Independent concerns use separate ChaCha stream ids so that
//! adding draws to one of them never shifts the values seen by another:
//!
//! | stream | used for                                  |
//! |--------|-------------------------------------------|
//! | 0      | task layout (stems, target, light)        |
//! | 1      | photon scatter                            |
//! | 2      | digit image selection for shape targets   |
//! | 3      | random policy actions                     |
//! | 4      | curriculum digit draw                     |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Layout = 0,
    Scatter = 1,
    ShapeImage = 2,
    Policy = 3,
    Curriculum = 4,
}

pub type EngineRng = ChaCha8Rng;

/// Generator for `stream` of the episode keyed by `seed`.
pub fn stream(seed: u64, stream: Stream) -> EngineRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
