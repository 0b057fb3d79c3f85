//! Continuous-time Markov chain: generator validation, exact path
//! sampling, stationary distribution.
//!
//! The chain α modulates every coefficient of the game. Its law is given
//! by an L×L rate matrix Π with nonnegative off-diagonal entries and zero
//! row sums. Regimes are 1-based at the I/O boundary and 0-based
//! internally.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::rng::{derive_key, Stream};

/// Tolerance for the structural generator checks (row sums, negativity).
pub const GENERATOR_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("generator must be square, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("off-diagonal rate π[{i}][{j}] = {value} is negative")]
    NegativeOffDiagonal { i: usize, j: usize, value: f64 },
    #[error("generator row {row} sums to {sum}, expected 0")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("generator is reducible (stationary null space has dimension {null_dim})")]
    Reducible { null_dim: usize },
}

/// Validated rate matrix of the modulating chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pi: DMatrix<f64>,
}

/// Check generator invariants and wrap the rate matrix.
pub fn validate_generator(pi: DMatrix<f64>) -> Result<Generator, ChainError> {
    if pi.nrows() != pi.ncols() || pi.nrows() == 0 {
        return Err(ChainError::NotSquare {
            rows: pi.nrows(),
            cols: pi.ncols(),
        });
    }
    for i in 0..pi.nrows() {
        for j in 0..pi.ncols() {
            if i != j && pi[(i, j)] < -GENERATOR_TOL {
                return Err(ChainError::NegativeOffDiagonal {
                    i: i + 1,
                    j: j + 1,
                    value: pi[(i, j)],
                });
            }
        }
        let sum: f64 = pi.row(i).sum();
        if sum.abs() > GENERATOR_TOL {
            return Err(ChainError::RowSumNonzero { row: i + 1, sum });
        }
    }
    Ok(Generator { pi })
}

impl Generator {
    /// Wrap a rate matrix without checking the invariants.
    ///
    /// Exists so that report-style validation ([`crate::model::validate`])
    /// can inspect ill-formed inputs; every solver entry point assumes a
    /// generator produced by [`validate_generator`].
    pub fn new_unchecked(pi: DMatrix<f64>) -> Self {
        Generator { pi }
    }

    /// Number of regimes L.
    pub fn regime_count(&self) -> usize {
        self.pi.nrows()
    }

    pub fn pi(&self) -> &DMatrix<f64> {
        &self.pi
    }

    /// Rate π_ij (0-based indices).
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.pi[(i, j)]
    }

    /// Total exit rate −π_ii of regime i.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.pi[(i, i)]
    }
}

/// A sampled realization of the chain on [0, T].
///
/// `times[0] = 0` carries the initial regime; later entries are jump
/// times. The path is right-continuous and piecewise constant.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimePath {
    times: Vec<f64>,
    regimes: Vec<usize>,
    horizon: f64,
}

impl RegimePath {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Jump times, excluding the initial time 0.
    pub fn jump_times(&self) -> &[f64] {
        &self.times[1..]
    }

    /// (time, regime) pairs including the initial state at t = 0.
    pub fn segments(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.times.iter().copied().zip(self.regimes.iter().copied())
    }

    /// Regime occupied at time t (0-based).
    pub fn regime_at(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        self.regimes[k.saturating_sub(1)]
    }

    /// CSV rows `t,regime` (regimes printed 1-based).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,regime\n");
        for (t, r) in self.segments() {
            out.push_str(&format!("{t},{}\n", r + 1));
        }
        out
    }

    /// Time spent in each regime up to the horizon, indexed by regime.
    pub fn occupation_times(&self) -> Vec<f64> {
        let l = 1 + self.regimes.iter().copied().max().unwrap_or(0);
        let mut occ = vec![0.0; l];
        for k in 0..self.times.len() {
            let end = if k + 1 < self.times.len() {
                self.times[k + 1]
            } else {
                self.horizon
            };
            occ[self.regimes[k]] += end - self.times[k];
        }
        occ
    }
}

/// Sample a chain path started from `i0` (0-based) on [0, T].
///
/// Holding times are exponential with rate −π_ii (inverse CDF); the next
/// regime is drawn from the embedded jump distribution. The path is a
/// pure function of `(gen, i0, horizon, seed)`.
pub fn sample_path(gen: &Generator, i0: usize, horizon: f64, seed: u64) -> RegimePath {
    assert!(i0 < gen.regime_count(), "initial regime out of range");
    assert!(horizon > 0.0, "horizon must be positive");
    let mut stream = Stream::new(derive_key(seed, &[0x6368_6169_6e00, i0 as u64]));
    sample_path_with(gen, i0, horizon, &mut stream)
}

/// As [`sample_path`] but drawing from a caller-owned stream.
pub fn sample_path_with(
    gen: &Generator,
    i0: usize,
    horizon: f64,
    stream: &mut Stream,
) -> RegimePath {
    let mut times = vec![0.0];
    let mut regimes = vec![i0];
    let mut t = 0.0;
    let mut current = i0;
    loop {
        let rate = gen.exit_rate(current);
        if rate <= GENERATOR_TOL {
            break; // absorbing regime
        }
        t += stream.exponential(rate);
        if t >= horizon {
            break;
        }
        // Embedded chain: P(next = j) = π_ij / rate, j ≠ i.
        let u = stream.uniform();
        let mut acc = 0.0;
        let mut next = current;
        for j in 0..gen.regime_count() {
            if j == current {
                continue;
            }
            acc += gen.rate(current, j).max(0.0) / rate;
            if u <= acc {
                next = j;
                break;
            }
        }
        if next == current {
            // u landed in the rounding sliver past the last bin
            next = (0..gen.regime_count()).rev().find(|&j| j != current).unwrap();
        }
        times.push(t);
        regimes.push(next);
        current = next;
    }
    RegimePath {
        times,
        regimes,
        horizon,
    }
}

/// Stationary distribution p of an irreducible generator: p ≥ 0, Σp = 1,
/// pΠ = 0 with residual ≤ 1e-12.
pub fn stationary_distribution(gen: &Generator) -> Result<DVector<f64>, ChainError> {
    let l = gen.regime_count();
    if l == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    // Null space of Πᵀ via SVD.
    let svd = gen.pi.transpose().svd(true, true);
    let sv = &svd.singular_values;
    let max_sv = sv.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = max_sv.max(1.0) * 1e-12;
    let null_dim = sv.iter().filter(|&&s| s <= cutoff).count().max(1);
    if null_dim > 1 {
        return Err(ChainError::Reducible { null_dim });
    }
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    // Null direction of Πᵀ = right singular vector of the smallest
    // singular value = last row of Vᵀ (descending singular values).
    let mut p = DVector::from_iterator(l, v_t.row(l - 1).iter().copied());
    if p.sum() < 0.0 {
        p.neg_mut();
    }
    let total = p.sum();
    p /= total;
    // Clamp noise-level negatives introduced by the factorization.
    for x in p.iter_mut() {
        if *x < 0.0 && *x > -1e-13 {
            *x = 0.0;
        }
    }
    let total = p.sum();
    p /= total;
    if p.iter().any(|&x| x < 0.0) {
        return Err(ChainError::Reducible { null_dim: 2 });
    }
    debug_assert!((p.transpose() * gen.pi()).norm() <= 1e-10);
    Ok(p)
}
