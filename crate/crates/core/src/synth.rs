//! Builds populations that reproduce target summary moments.
//!
//! Units `0..A` carry the attribute. For a 0/1 grouping the squared
//! point-biserial correlation is the between-group share of the total sum of
//! squares, so the group gap and within-group spread are fixed in closed form;
//! an affine map then sets the mean and coefficient of variation of `x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::Population;
use crate::montecarlo::replication_rng;
use crate::scalar::{count, lit, Real};

/// Summary statistics a synthesized population must reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTargets<T> {
    pub population_size: usize,
    pub proportion: T,
    pub xbar: T,
    pub c_x: T,
    pub rho: T,
}

impl<T: Real> MomentTargets<T> {
    /// Number of attribute units, `round(N P)`.
    pub fn attribute_count(&self) -> usize {
        (count::<T>(self.population_size) * self.proportion)
            .round()
            .to_usize()
            .unwrap_or(0)
    }

    fn check(&self) -> Result<usize> {
        let n = self.population_size;
        if n < 3 {
            return Err(Error::InfeasibleTargets(format!(
                "population size {n} leaves no room for within-group spread"
            )));
        }
        let fields = [self.proportion, self.xbar, self.c_x, self.rho];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InfeasibleTargets("non-finite target".into()));
        }
        if !(self.proportion > T::zero() && self.proportion < T::one()) {
            return Err(Error::InfeasibleTargets(format!(
                "proportion {} must lie in (0, 1)",
                self.proportion
            )));
        }
        let a = self.attribute_count();
        if a == 0 || a == n {
            return Err(Error::InfeasibleTargets(format!(
                "round(N P) = {a} leaves one group empty"
            )));
        }
        if !(self.xbar > T::zero()) {
            return Err(Error::InfeasibleTargets(
                "mean of x must be positive for ratio-type estimators".into(),
            ));
        }
        if !(self.c_x > T::zero()) {
            return Err(Error::InfeasibleTargets("Cx must be positive".into()));
        }
        if !(self.rho.abs() < T::one()) {
            return Err(Error::InfeasibleTargets(format!(
                "|rho| = {} must be below 1",
                self.rho.abs()
            )));
        }
        Ok(a)
    }
}

/// Deterministically synthesizes a population hitting `targets`.
pub fn synthesize<T: Real>(targets: &MomentTargets<T>, seed: u64) -> Result<Population<T>> {
    let a = targets.check()?;
    let n = targets.population_size;
    let phi: Vec<bool> = (0..n).map(|i| i < a).collect();

    // zero-mean within-group pattern
    let mut rng = replication_rng(seed, 0);
    let mut dev: Vec<T> = (0..n).map(|_| lit(rng.random_range(-1.0..1.0))).collect();
    for range in [0..a, a..n] {
        let len = count::<T>(range.len());
        let center = dev[range.clone()].iter().copied().sum::<T>() / len;
        for v in &mut dev[range] {
            *v = *v - center;
        }
    }
    let within: T = dev.iter().map(|&v| v * v).sum();
    if within <= T::zero() {
        return Err(Error::InfeasibleTargets(
            "groups are too small to carry within-group spread".into(),
        ));
    }

    // gap g between group means gives between-group SS = A (N-A) / N * g^2
    let rho = targets.rho;
    let (gap, scale) = if rho == T::zero() {
        (T::zero(), T::one())
    } else {
        let gap = rho.signum();
        let between = count::<T>(a * (n - a)) / count::<T>(n) * gap * gap;
        let wanted_within = between * (T::one() - rho * rho) / (rho * rho);
        (gap, (wanted_within / within).sqrt())
    };
    let raw: Vec<T> = phi
        .iter()
        .zip(&dev)
        .map(|(&p, &d)| if p { gap } else { T::zero() } + scale * d)
        .collect();

    let size = count::<T>(n);
    let mean = raw.iter().copied().sum::<T>() / size;
    let sd = (raw.iter().map(|&v| (v - mean).powi(2)).sum::<T>() / (size - T::one())).sqrt();
    let target_sd = targets.c_x * targets.xbar;
    let x: Vec<T> = raw
        .iter()
        .map(|&v| targets.xbar + (v - mean) * (target_sd / sd))
        .collect();
    if let Some(min) = x.iter().copied().reduce(T::min) {
        if !(min > T::zero()) {
            return Err(Error::InfeasibleTargets(format!(
                "construction yields non-positive x (min {min}); lower Cx or |rho|"
            )));
        }
    }
    Population::new(phi, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::compute_moments;
    use approx::assert_relative_eq;

    fn home() -> MomentTargets<f64> {
        MomentTargets {
            population_size: 40,
            proportion: 0.525,
            xbar: 14.4,
            c_x: 0.308,
            rho: 0.897,
        }
    }

    #[test]
    fn reproduces_home_ownership_summary() {
        let pop = synthesize(&home(), 1).unwrap();
        let m = compute_moments(&pop).unwrap();
        assert_eq!(pop.attribute_count(), 21);
        assert_eq!(m.proportion, 21.0 / 40.0);
        assert_relative_eq!(m.xbar, 14.4, max_relative = 1e-9);
        assert_relative_eq!(m.c_x, 0.308, max_relative = 1e-9);
        assert!((m.rho - 0.897).abs() < 1e-6);
        assert!((m.c_phi - 0.963).abs() < 1e-3);
        assert!(pop.x().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn zero_correlation_target() {
        let t = MomentTargets { rho: 0.0, ..home() };
        let m = compute_moments(&synthesize(&t, 5).unwrap()).unwrap();
        assert!(m.rho.abs() < 1e-6);
    }

    #[test]
    fn reproduces_hand_built_population() {
        let hand = Population::<f64>::from_codes(&[1, 1, 0, 0], vec![3.0, 4.0, 1.0, 2.0]).unwrap();
        let hm = compute_moments(&hand).unwrap();
        let t = MomentTargets {
            population_size: 4,
            proportion: hm.proportion,
            xbar: hm.xbar,
            c_x: hm.c_x,
            rho: hm.rho,
        };
        let m = compute_moments(&synthesize(&t, 9).unwrap()).unwrap();
        assert_eq!(m.proportion, 0.5);
        assert_relative_eq!(m.xbar, 2.5, max_relative = 1e-9);
        assert_relative_eq!(m.c_x, hm.c_x, max_relative = 1e-9);
        assert!((m.rho - hm.rho).abs() < 1e-6);
        assert_relative_eq!(m.c_phi, hm.c_phi, max_relative = 1e-12);
    }

    #[test]
    fn same_seed_same_population() {
        assert_eq!(
            synthesize(&home(), 3).unwrap(),
            synthesize(&home(), 3).unwrap()
        );
        assert_ne!(
            synthesize(&home(), 3).unwrap(),
            synthesize(&home(), 4).unwrap()
        );
    }

    #[test]
    fn infeasible_targets_are_rejected() {
        for t in [
            MomentTargets { rho: 1.0, ..home() },
            MomentTargets {
                proportion: 0.001,
                ..home()
            },
            MomentTargets {
                xbar: -1.0,
                ..home()
            },
            MomentTargets { c_x: 3.0, ..home() },
            MomentTargets {
                population_size: 2,
                ..home()
            },
        ] {
            assert!(
                matches!(synthesize(&t, 1), Err(Error::InfeasibleTargets(_))),
                "{t:?}"
            );
        }
    }
}
