//! Deterministic 64-bit generator used for all seeded sampling.
//!
//! SplitMix64: `state += 0x9E3779B97F4A7C15`, then two xor-shift-multiply
//! rounds finalize the output. The algorithm is fixed so that every seeded
//! example and CSV artifact is reproducible bit-for-bit across builds.

/// SplitMix64 pseudo-random generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1), 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in 0..n.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_f64() * n as f64) as usize % n
    }

    /// Vector of n uniform draws from [lo, hi).
    pub fn vec_range(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.range(lo, hi)).collect()
    }

    /// Random point on the probability simplex (normalized exponentials),
    /// optionally rejected until every entry is at least `min_entry`.
    pub fn simplex_point(&mut self, n: usize, min_entry: f64) -> Vec<f64> {
        loop {
            let mut p: Vec<f64> = (0..n).map(|_| -self.next_f64().max(1e-300).ln()).collect();
            let sum: f64 = p.iter().sum();
            for x in &mut p {
                *x /= sum;
            }
            if p.iter().all(|&x| x >= min_entry) {
                return p;
            }
        }
    }
}
