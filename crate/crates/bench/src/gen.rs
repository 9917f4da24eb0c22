//! Seeded loss-sequence generators.
//!
//! All randomness comes from the fixed SplitMix64 generator, drawn in
//! row-major order (round by round, expert by expert), so identical
//! `(kind, seed, n, t)` tuples reproduce identical matrices bit-for-bit.

use marketlearn::learning::{LearnerConfig, LearnerState};
use marketlearn::{Error, LossMatrix, SplitMix64};

use crate::error::Result;

/// What kind of adversary produces the losses.
#[derive(Debug, Clone)]
pub enum GeneratorKind {
    /// Two experts, rows (1/2, 0), (0, 1), (1, 0), (0, 1), ... — the stream
    /// that forces linear regret on follow-the-leader.
    AlternatingAdversary,
    /// Independent Bernoulli losses with a fixed hit probability per expert.
    BernoulliIid { p: Vec<f64> },
    /// Independent uniform [0, 1] losses.
    UniformRandom,
    /// Adaptive adversary: shadows the given learner and each round assigns
    /// loss 1 to its currently highest-weighted expert (ties to the lowest
    /// index) and 0 to the rest. Deterministic given the learner; the seed
    /// is unused.
    GreedyAdaptive { target: Box<LearnerConfig> },
}

/// A reproducible loss-matrix source.
#[derive(Debug, Clone)]
pub struct LossGenerator {
    pub kind: GeneratorKind,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
}

impl LossGenerator {
    pub fn generate(&self) -> Result<LossMatrix> {
        if self.n < 2 || self.t < 1 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 2 and t >= 1, got ({}, {})",
                self.n, self.t
            ))
            .into());
        }
        let mut rng = SplitMix64::new(self.seed);
        let rows: Vec<Vec<f64>> = match &self.kind {
            GeneratorKind::AlternatingAdversary => {
                if self.n != 2 {
                    return Err(Error::InvalidParameter(format!(
                        "alternating adversary is defined for n = 2, got {}",
                        self.n
                    ))
                    .into());
                }
                (0..self.t)
                    .map(|k| {
                        if k == 0 {
                            vec![0.5, 0.0]
                        } else if k % 2 == 1 {
                            vec![0.0, 1.0]
                        } else {
                            vec![1.0, 0.0]
                        }
                    })
                    .collect()
            }
            GeneratorKind::BernoulliIid { p } => {
                if p.len() != self.n {
                    return Err(Error::InvalidParameter(format!(
                        "bernoulli p has {} entries for {} experts",
                        p.len(),
                        self.n
                    ))
                    .into());
                }
                if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                    return Err(Error::InvalidParameter("bernoulli p outside [0, 1]".into()).into());
                }
                (0..self.t)
                    .map(|_| {
                        p.iter()
                            .map(|&pi| if rng.next_f64() < pi { 1.0 } else { 0.0 })
                            .collect()
                    })
                    .collect()
            }
            GeneratorKind::UniformRandom => (0..self.t)
                .map(|_| (0..self.n).map(|_| rng.next_f64()).collect())
                .collect(),
            GeneratorKind::GreedyAdaptive { target } => {
                let mut state = LearnerState::new((**target).clone(), self.n)?;
                let mut rows = Vec::with_capacity(self.t);
                for _ in 0..self.t {
                    let weights = state.weights.as_slice();
                    let mut leader = 0;
                    for i in 1..self.n {
                        if weights[i] > weights[leader] {
                            leader = i;
                        }
                    }
                    let row: Vec<f64> = (0..self.n)
                        .map(|i| if i == leader { 1.0 } else { 0.0 })
                        .collect();
                    state = state.step(&row)?.0;
                    rows.push(row);
                }
                rows
            }
        };
        Ok(LossMatrix::new(rows)?)
    }
}

/// Deterministic rotating single-loss stream for more than two experts:
/// at round t the expert `(t + phase) mod n` takes loss 1 and the rest 0.
/// This is the n-ary analog of the alternating adversary, with the seed
/// selecting the phase.
pub fn rotating_losses(n: usize, t: usize, seed: u64) -> Result<LossMatrix> {
    if n < 2 || t < 1 {
        return Err(
            Error::InvalidParameter(format!("need n >= 2 and t >= 1, got ({n}, {t})")).into(),
        );
    }
    let phase = (seed as usize) % n;
    let rows: Vec<Vec<f64>> = (0..t)
        .map(|k| {
            let hot = (k + phase) % n;
            (0..n).map(|i| if i == hot { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    Ok(LossMatrix::new(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use marketlearn::make_lmsr;

    #[test]
    fn alternating_rows() {
        let gen = LossGenerator {
            kind: GeneratorKind::AlternatingAdversary,
            seed: 0,
            n: 2,
            t: 3,
        };
        let m = gen.generate().unwrap();
        assert_eq!(m.row(0), &[0.5, 0.0]);
        assert_eq!(m.row(1), &[0.0, 1.0]);
        assert_eq!(m.row(2), &[1.0, 0.0]);
    }

    #[test]
    fn alternating_requires_two_experts() {
        let gen = LossGenerator {
            kind: GeneratorKind::AlternatingAdversary,
            seed: 0,
            n: 3,
            t: 5,
        };
        assert!(gen.generate().is_err());
    }

    #[test]
    fn bernoulli_zero_probability_is_zero_matrix() {
        let gen = LossGenerator {
            kind: GeneratorKind::BernoulliIid { p: vec![0.0, 0.0] },
            seed: 9,
            n: 2,
            t: 20,
        };
        let m = gen.generate().unwrap();
        assert!(m.rows().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        for kind in [
            GeneratorKind::UniformRandom,
            GeneratorKind::BernoulliIid {
                p: vec![0.2, 0.5, 0.9],
            },
        ] {
            let gen = LossGenerator {
                kind,
                seed: 1234,
                n: 3,
                t: 50,
            };
            let a = gen.generate().unwrap();
            let b = gen.generate().unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn adaptive_targets_the_heaviest_expert() {
        let cf = make_lmsr(1.0, 3).unwrap();
        let gen = LossGenerator {
            kind: GeneratorKind::GreedyAdaptive {
                target: Box::new(LearnerConfig::MarketReduction {
                    cost_fn: cf,
                    epsilon: 0.5,
                }),
            },
            seed: 0,
            n: 3,
            t: 30,
        };
        let m = gen.generate().unwrap();
        // Round 1: uniform weights, tie broken to expert 0.
        assert_eq!(m.row(0), &[1.0, 0.0, 0.0]);
        // Every row is a one-hot vector.
        for t in 0..m.rounds() {
            assert_eq!(m.row(t).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn rotating_covers_every_expert() {
        let m = rotating_losses(5, 10, 2).unwrap();
        for t in 0..10 {
            let hot = (t + 2) % 5;
            assert_eq!(m.row(t)[hot], 1.0);
            assert_eq!(m.row(t).iter().sum::<f64>(), 1.0);
        }
    }
}
