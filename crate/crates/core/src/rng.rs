//! Seeded pseudo-random generation with a fully documented algorithm so that
//! golden files can be reproduced by ports in other languages.
//!
//! Generator: xoshiro256** (Blackman & Vigna). The 256-bit state is expanded
//! from a 64-bit seed with SplitMix64, the seeding procedure recommended by
//! the xoshiro authors. Derived quantities:
//!
//! * `next_f64`: take the top 53 bits of `next_u64`, scale by 2^-53 → [0, 1).
//! * `next_exp1`: inverse CDF, `-ln(1 - u)` with `u = next_f64()`.
//! * `next_normal`: Box-Muller; each pair of uniforms `(u1, u2)` yields
//!   `sqrt(-2 ln(1-u1)) * (cos, sin)(2*pi*u2)`, the sine value is cached.
//! * `derive_seed(base, stream)`: one SplitMix64 step of `base ^ (stream * GOLDEN)`,
//!   used to give parallel tasks (folds, columns, grid points) independent
//!   deterministic streams.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a base seed and a stream index.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut s = base ^ stream.wrapping_mul(GOLDEN);
    splitmix64(&mut s)
}

/// xoshiro256** generator with Box-Muller caching for normal deviates.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    cached_normal: Option<f64>,
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        Self {
            s: [
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
                splitmix64(&mut sm),
            ],
            cached_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard exponential via inverse CDF.
    pub fn next_exp1(&mut self) -> f64 {
        -(1.0 - self.next_f64()).ln()
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// A uniform point on the probability simplex of dimension `m`
    /// (flat Dirichlet): normalized iid standard exponentials.
    pub fn next_simplex_point(&mut self, m: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..m).map(|_| self.next_exp1()).collect();
        let sum: f64 = v.iter().sum();
        if sum <= 0.0 {
            return vec![1.0 / m as f64; m];
        }
        for x in &mut v {
            *x /= sum;
        }
        v
    }
}
