//! Counter-based splittable random number generation.
//!
//! Every stochastic component of the crate (chain path sampling, Brownian
//! increments) draws from a [`Stream`]. A stream is keyed, and the i-th
//! output is a pure function of `(key, i)` — a SplitMix64 Weyl sequence —
//! so any unit of work (a Monte Carlo path, a regime path) can be
//! regenerated bit-for-bit regardless of scheduling order or thread count.
//!
//! Keys are derived with [`derive_key`], which chains the same mixer over
//! `(seed, tag, index)` tuples. Two units with different tuples get
//! decorrelated streams without any shared mutable state.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a stream key from a seed and a list of domain-separation parts
/// (tags, path indices, ...).
pub fn derive_key(seed: u64, parts: &[u64]) -> u64 {
    let mut k = mix64(seed ^ GOLDEN_GAMMA);
    for &p in parts {
        k = mix64(k.wrapping_add(GOLDEN_GAMMA) ^ mix64(p));
    }
    k
}

/// A deterministic stream of pseudo-random draws.
///
/// Output `i` equals `mix64(key + (i+1)·γ)`, i.e. the generator is a pure
/// counter under the hood; the struct only caches the counter position and
/// the spare normal from Box–Muller.
#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream {
            state: key,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        loop {
            // 53 random bits; zero is rejected so logs stay finite.
            let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Standard normal draw via Box–Muller (second value cached).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Exponential draw with the given rate, by inverse CDF.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        debug_assert!(rate > 0.0);
        -self.uniform().ln() / rate
    }
}
