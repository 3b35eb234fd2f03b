//! Counter-based deterministic random numbers.
//!
//! Every random draw in the crate comes from a splitmix64 stream keyed by
//! `(seed, stream)`. Streams are independent of evaluation order, which makes
//! per-sample noise draws and per-run Monte Carlo seeds schedule-independent:
//! parallel and sequential execution produce identical bits.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a stream index.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ stream.wrapping_mul(GOLDEN))
}

/// Deterministic splitmix64 generator keyed by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            state: derive_seed(seed, stream),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state.wrapping_sub(GOLDEN))
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw (Box-Muller, one value per call pair).
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        (r * t.cos(), r * t.sin())
    }
}
