//! Counter-based Gaussian draws.
//!
//! Every noise value in a simulation is addressed by a coordinate
//! `(layer, neuron, trial, timestep)` and produced by Philox4x32-10 keyed
//! with the master seed. There is no generator state to advance, so a draw
//! depends only on its coordinate and trials can run in any order or on any
//! thread.

/// Neuron index used for the layer-wide correlated noise sources.
pub const CORRELATED_TAG: u32 = u32::MAX;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Address of one pair of Gaussian draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coordinate {
    pub layer: u32,
    pub neuron: u32,
    pub trial: u32,
    pub timestep: u32,
}

/// Seeded source of independent standard normal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Two independent N(0, 1) values for `at`.
    ///
    /// For a neuron coordinate the pair is (additive, multiplicative)
    /// uncorrelated noise; at [`CORRELATED_TAG`] it is the layer's shared
    /// (additive, multiplicative) pair.
    #[inline]
    pub fn gaussian_pair(&self, at: Coordinate) -> (f64, f64) {
        let key = [self.seed as u32, (self.seed >> 32) as u32];
        let r = philox4x32([at.neuron, at.layer, at.trial, at.timestep], key);
        box_muller(r)
    }

    pub fn gaussian(&self, at: Coordinate) -> f64 {
        self.gaussian_pair(at).0
    }
}

#[inline]
fn box_muller(r: [u32; 4]) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let a = ((u64::from(r[0]) << 32) | u64::from(r[1])) >> 11;
    let b = ((u64::from(r[2]) << 32) | u64::from(r[3])) >> 11;
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = (a as f64 + 1.0) * SCALE;
    let u2 = b as f64 * SCALE;
    let radius = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (radius * c, radius * s)
}
