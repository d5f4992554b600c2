//! Exact enumeration over all `C(N, n)` samples and seeded SRSWOR simulation.
//!
//! Replication `r` of a simulation draws from a ChaCha8 stream keyed by
//! `(seed, r)`, so results do not depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{eval_adaptive, eval_estimate, EstimatorSpec, Known, WeightMode};
use crate::moments::{compute_moments, Design, Population, Sample};
use crate::scalar::{count, Real};

pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;
pub const MIN_REPLICATIONS: usize = 100;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by i + 1
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic iterator over the `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Random stream for replication `replication` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Draws an SRSWOR sample by a partial Fisher-Yates shuffle.
pub fn draw_srswor<T: Real, R: Rng + ?Sized>(
    pop: &Population<T>,
    n: usize,
    rng: &mut R,
) -> Result<Sample<T>> {
    let size = pop.size();
    if n < 2 || n > size {
        return Err(Error::InvalidDesign {
            n,
            population: size,
        });
    }
    let mut units: Vec<usize> = (0..size).collect();
    for i in 0..n {
        let j = rng.random_range(i..size);
        units.swap(i, j);
    }
    units.truncate(n);
    units.sort_unstable();
    Ok(Sample::gather(pop, units))
}

/// Exact design expectation, bias and MSE of an estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResult<T> {
    pub expected_value: T,
    pub exact_bias: T,
    pub exact_mse: T,
    pub samples_enumerated: u128,
}

/// Empirical bias and MSE over seeded SRSWOR replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult<T> {
    pub replications: usize,
    pub empirical_bias: T,
    pub empirical_mse: T,
    /// Standard error of `empirical_mse`.
    pub mc_standard_error: T,
    pub degenerate_sample_count: usize,
    pub seed: u64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy)]
struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry = self.carry + ((self.sum - t) + v);
        } else {
            self.carry = self.carry + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    fn total(&self) -> T {
        self.sum + self.carry
    }
}

/// Fixes the population information an estimator may use and freezes optimal weights.
fn prepare<T: Real>(
    pop: &Population<T>,
    dz: &Design<T>,
    spec: &EstimatorSpec<T>,
) -> Result<(EstimatorSpec<T>, Known<T>)> {
    let xbar = pop.x_mean();
    spec.validate(xbar)?;
    let frozen = if spec.weight_mode() == WeightMode::OptimalFromPopulation {
        spec.freeze(&compute_moments(pop)?, dz)?
    } else {
        *spec
    };
    Ok((frozen, Known::with_design(xbar, *dz)))
}

/// Evaluates on one sample, reporting whether an adaptive estimator fell back.
fn evaluate<T: Real>(
    spec: &EstimatorSpec<T>,
    sample: &Sample<T>,
    known: &Known<T>,
) -> Result<(T, bool)> {
    match spec {
        EstimatorSpec::AdaptiveN { shape } => {
            eval_adaptive(shape, sample, known).map(|a| (a.value, a.degenerate))
        }
        other => eval_estimate(other, sample, known).map(|v| (v, false)),
    }
}

/// Exact moments of an arbitrary sample statistic about `target`.
pub fn enumerate_exact_with<T, F>(
    pop: &Population<T>,
    n: usize,
    cap: u128,
    target: T,
    mut statistic: F,
) -> Result<ExactResult<T>>
where
    T: Real,
    F: FnMut(&Sample<T>) -> Result<T>,
{
    let size = pop.size();
    if n < 2 || n > size {
        return Err(Error::InvalidDesign {
            n,
            population: size,
        });
    }
    let total = binomial(size, n);
    if total > cap {
        return Err(Error::EnumerationTooLarge { count: total, cap });
    }
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    let mut seen: u128 = 0;
    for idx in Combinations::new(size, n) {
        let sample = Sample::gather(pop, idx);
        let t = statistic(&sample)?;
        sum.add(t);
        sum_sq.add((t - target).powi(2));
        seen += 1;
    }
    debug_assert_eq!(seen, total);
    let k = T::from_u128(seen).expect("sample count representable");
    let expected_value = sum.total() / k;
    Ok(ExactResult {
        expected_value,
        exact_bias: expected_value - target,
        exact_mse: sum_sq.total() / k,
        samples_enumerated: seen,
    })
}

/// Exact bias and MSE of an estimator about the population proportion.
pub fn enumerate_exact<T: Real>(
    pop: &Population<T>,
    n: usize,
    spec: &EstimatorSpec<T>,
    cap: u128,
) -> Result<ExactResult<T>> {
    let dz = Design::new(n, pop.size())?;
    let total = binomial(pop.size(), n);
    if total > cap {
        return Err(Error::EnumerationTooLarge { count: total, cap });
    }
    let (spec, known) = prepare(pop, &dz, spec)?;
    enumerate_exact_with(pop, n, cap, pop.proportion(), |s| {
        evaluate(&spec, s, &known).map(|(v, _)| v)
    })
}

/// Seeded Monte Carlo replication of SRSWOR draws.
pub fn simulate<T: Real>(
    pop: &Population<T>,
    n: usize,
    spec: &EstimatorSpec<T>,
    replications: usize,
    seed: u64,
) -> Result<McResult<T>> {
    let dz = Design::new(n, pop.size())?;
    if replications < MIN_REPLICATIONS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    let (spec, known) = prepare(pop, &dz, spec)?;
    let target = pop.proportion();
    let draws: Vec<(T, bool)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r as u64);
            let sample = draw_srswor(pop, n, &mut rng)?;
            let (v, degenerate) = evaluate(&spec, &sample, &known)?;
            Ok((v - target, degenerate))
        })
        .collect::<Result<_>>()?;

    let reps = count::<T>(replications);
    let mut err_sum = CompensatedSum::new();
    let mut sq_sum = CompensatedSum::new();
    let mut degenerate = 0;
    for &(e, d) in &draws {
        err_sum.add(e);
        sq_sum.add(e * e);
        degenerate += usize::from(d);
    }
    let mse = sq_sum.total() / reps;
    let mut dev = CompensatedSum::new();
    for &(e, _) in &draws {
        dev.add((e * e - mse).powi(2));
    }
    let sd = (dev.total() / (reps - T::one())).sqrt();
    Ok(McResult {
        replications,
        empirical_bias: err_sum.total() / reps,
        empirical_mse: mse,
        mc_standard_error: sd / reps.sqrt(),
        degenerate_sample_count: degenerate,
        seed,
    })
}
