//! Sample-level evaluation of every estimator and the named preset registry.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{point_biserial, sample_variance, Design, PopulationMoments, Sample};
use crate::scalar::{lit, Real};
use crate::theory::{
    constants_n, gs_min_theory, gs_optimal_slope, gs_theory, ns_constants, ns_fixed, ns_quadratic,
    ns_theory, ratio_theory, tn_fixed, tn_min_mse, tn_min_mse_via_weights, tn_optimal_weights,
    tn_quadratic, tnq_fixed, tnq_theory, var_p, ExpansionConstantsN, ExpansionConstantsNS,
    TheoryResult,
};

/// Shape of the exponential-ratio multiplier of the generalized class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NShape<T> {
    pub alpha: T,
    pub eta: T,
    pub lambda: T,
}

impl<T: Real> NShape<T> {
    pub fn new(alpha: T, eta: T, lambda: T) -> Self {
        Self { alpha, eta, lambda }
    }

    pub fn constants(&self, xbar: T) -> Result<ExpansionConstantsN<T>> {
        constants_n(self.alpha, self.eta, self.lambda, xbar)
    }

    /// `(Xbar/xbar)^alpha * exp(eta (Xbar - xbar) / (eta (Xbar + xbar) + 2 lambda))`.
    pub fn multiplier(&self, pop_xbar: T, sample_xbar: T) -> Result<T> {
        let ratio = if self.alpha == T::zero() {
            T::one()
        } else {
            if sample_xbar == T::zero() {
                return Err(Error::ZeroSampleMean);
            }
            (pop_xbar / sample_xbar).powf(self.alpha)
        };
        let expo = if self.eta == T::zero() {
            T::one()
        } else {
            let denom = self.eta * (pop_xbar + sample_xbar) + lit::<T>(2.0) * self.lambda;
            if denom == T::zero() {
                return Err(Error::SingularTransform(
                    "eta (Xbar + xbar) + 2 lambda vanishes on this sample".into(),
                ));
            }
            (self.eta * (pop_xbar - sample_xbar) / denom).exp()
        };
        let value = ratio * expo;
        if !value.is_finite() {
            return Err(Error::SingularTransform(format!(
                "multiplier is not finite (Xbar/xbar = {})",
                pop_xbar / sample_xbar
            )));
        }
        Ok(value)
    }
}

/// Shape of the two-weight exponential family; `a_const`, `b_const` transform `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsShape<T> {
    pub alpha: T,
    pub beta: T,
    pub a_const: T,
    pub b_const: T,
}

impl<T: Real> NsShape<T> {
    pub fn new(alpha: T, beta: T, a_const: T, b_const: T) -> Self {
        Self {
            alpha,
            beta,
            a_const,
            b_const,
        }
    }

    pub fn constants(&self, xbar: T) -> Result<ExpansionConstantsNS<T>> {
        ns_constants(self.alpha, self.beta, self.a_const, self.b_const, xbar)
    }

    pub fn multiplier(&self, pop_xbar: T, sample_xbar: T) -> Result<T> {
        let big = self.a_const * pop_xbar + self.b_const;
        let small = self.a_const * sample_xbar + self.b_const;
        let ratio = if self.alpha == T::zero() {
            T::one()
        } else {
            if small == T::zero() {
                return Err(Error::SingularTransform(
                    "a xbar + b vanishes on this sample".into(),
                ));
            }
            (big / small).powf(self.alpha)
        };
        let expo = if self.beta == T::zero() {
            T::one()
        } else {
            let denom = big + small;
            if denom == T::zero() {
                return Err(Error::SingularTransform(
                    "(a Xbar + b) + (a xbar + b) vanishes on this sample".into(),
                ));
            }
            (self.beta * (big - small) / denom).exp()
        };
        let value = ratio * expo;
        if !value.is_finite() {
            return Err(Error::SingularTransform("multiplier is not finite".into()));
        }
        Ok(value)
    }
}

/// Fixed weights or weights solved from known population moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Weights<W> {
    Fixed(W),
    OptimalFromPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    MeanPerUnit,
    Ratio,
    GsRepresentative,
    NsFamily,
    NClass,
    NqClass,
    AdaptiveN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightMode {
    None,
    Fixed,
    OptimalFromPopulation,
    EstimatedFromSample,
}

/// An estimator: family, shape parameters and how its weights are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EstimatorSpec<T> {
    /// `p`
    MeanPerUnit,
    /// `p Xbar / xbar`
    Ratio,
    /// `p + h (xbar / Xbar - 1)`
    GsRepresentative { slope: Weights<T> },
    /// `[q1 p + q2 (Xbar - xbar)] * multiplier`
    NsFamily {
        shape: NsShape<T>,
        weights: Weights<[T; 2]>,
    },
    /// `d1 p * multiplier + d2 xbar + (1 - d1 - d2) Xbar`
    NClass {
        shape: NShape<T>,
        weights: Weights<[T; 2]>,
    },
    /// `d1 p * multiplier`
    NqClass {
        shape: NShape<T>,
        weights: Weights<T>,
    },
    /// Generalized class with `(d1, d2)` estimated from the drawn sample.
    AdaptiveN { shape: NShape<T> },
}

/// Population information an estimator is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Known<T> {
    /// Population mean of the auxiliary variable, always known.
    pub xbar: T,
    pub design: Option<Design<T>>,
    /// Full population moments; only optimal-weight estimators read these.
    pub moments: Option<PopulationMoments<T>>,
}

impl<T: Real> Known<T> {
    pub fn auxiliary_mean(xbar: T) -> Self {
        Self {
            xbar,
            design: None,
            moments: None,
        }
    }

    pub fn with_design(xbar: T, design: Design<T>) -> Self {
        Self {
            xbar,
            design: Some(design),
            moments: None,
        }
    }

    pub fn population(moments: PopulationMoments<T>, design: Design<T>) -> Self {
        Self {
            xbar: moments.xbar,
            design: Some(design),
            moments: Some(moments),
        }
    }

    fn require_population(&self) -> Result<(&PopulationMoments<T>, &Design<T>)> {
        match (&self.moments, &self.design) {
            (Some(m), Some(d)) => Ok((m, d)),
            _ => Err(Error::InvalidArgument(
                "optimal weights need known population moments and design".into(),
            )),
        }
    }
}

impl<T: Real> EstimatorSpec<T> {
    pub fn family(&self) -> Family {
        match self {
            Self::MeanPerUnit => Family::MeanPerUnit,
            Self::Ratio => Family::Ratio,
            Self::GsRepresentative { .. } => Family::GsRepresentative,
            Self::NsFamily { .. } => Family::NsFamily,
            Self::NClass { .. } => Family::NClass,
            Self::NqClass { .. } => Family::NqClass,
            Self::AdaptiveN { .. } => Family::AdaptiveN,
        }
    }

    pub fn weight_mode(&self) -> WeightMode {
        fn mode<W>(w: &Weights<W>) -> WeightMode {
            match w {
                Weights::Fixed(_) => WeightMode::Fixed,
                Weights::OptimalFromPopulation => WeightMode::OptimalFromPopulation,
            }
        }
        match self {
            Self::MeanPerUnit | Self::Ratio => WeightMode::None,
            Self::GsRepresentative { slope } => mode(slope),
            Self::NsFamily { weights, .. } | Self::NClass { weights, .. } => mode(weights),
            Self::NqClass { weights, .. } => mode(weights),
            Self::AdaptiveN { .. } => WeightMode::EstimatedFromSample,
        }
    }

    /// Checks the shape's singularity preconditions against `Xbar`.
    pub fn validate(&self, xbar: T) -> Result<()> {
        match self {
            Self::NsFamily { shape, .. } => shape.constants(xbar).map(|_| ()),
            Self::NClass { shape, .. }
            | Self::NqClass { shape, .. }
            | Self::AdaptiveN { shape } => shape.constants(xbar).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Replaces population-optimal weights by their numeric values.
    pub fn freeze(&self, m: &PopulationMoments<T>, dz: &Design<T>) -> Result<Self> {
        self.validate(m.xbar)?;
        Ok(match *self {
            Self::GsRepresentative {
                slope: Weights::OptimalFromPopulation,
            } => Self::GsRepresentative {
                slope: Weights::Fixed(gs_optimal_slope(m)),
            },
            Self::NsFamily {
                shape,
                weights: Weights::OptimalFromPopulation,
            } => {
                let c = shape.constants(m.xbar)?;
                Self::NsFamily {
                    shape,
                    weights: Weights::Fixed(ns_quadratic(m, dz, &c).solve()?),
                }
            }
            Self::NClass {
                shape,
                weights: Weights::OptimalFromPopulation,
            } => {
                let c = shape.constants(m.xbar)?;
                let (d1, d2) = tn_optimal_weights(&tn_quadratic(m, dz, &c))?;
                Self::NClass {
                    shape,
                    weights: Weights::Fixed([d1, d2]),
                }
            }
            Self::NqClass {
                shape,
                weights: Weights::OptimalFromPopulation,
            } => {
                let c = shape.constants(m.xbar)?;
                let d1 = tnq_theory(m, dz, &c)?.weights[0];
                Self::NqClass {
                    shape,
                    weights: Weights::Fixed(d1),
                }
            }
            other => other,
        })
    }

    /// First-order bias and MSE of this estimator.
    pub fn theory(&self, m: &PopulationMoments<T>, dz: &Design<T>) -> Result<TheoryResult<T>> {
        match *self {
            Self::MeanPerUnit => var_p(m, dz),
            Self::Ratio => ratio_theory(m, dz),
            Self::GsRepresentative { slope } => match slope {
                Weights::Fixed(h) => gs_theory(m, dz, h),
                Weights::OptimalFromPopulation => gs_min_theory(m, dz),
            },
            Self::NsFamily { shape, weights } => {
                let c = shape.constants(m.xbar)?;
                match weights {
                    Weights::Fixed([q1, q2]) => ns_fixed(m, dz, &c, q1, q2),
                    Weights::OptimalFromPopulation => ns_theory(m, dz, &c),
                }
            }
            Self::NClass { shape, weights } => {
                let c = shape.constants(m.xbar)?;
                match weights {
                    Weights::Fixed([d1, d2]) => tn_fixed(m, dz, &c, d1, d2),
                    Weights::OptimalFromPopulation => {
                        let via = tn_min_mse_via_weights(m, dz, &c)?;
                        let closed = tn_min_mse(m, dz)?;
                        Ok(TheoryResult {
                            mse: closed.mse,
                            ..via
                        })
                    }
                }
            }
            Self::NqClass { shape, weights } => {
                let c = shape.constants(m.xbar)?;
                match weights {
                    Weights::Fixed(d1) => tnq_fixed(m, dz, &c, d1),
                    Weights::OptimalFromPopulation => tnq_theory(m, dz, &c),
                }
            }
            Self::AdaptiveN { .. } => tn_min_mse(m, dz),
        }
    }
}

/// Evaluates an estimator on a sample.
pub fn eval_estimate<T: Real>(
    spec: &EstimatorSpec<T>,
    sample: &Sample<T>,
    known: &Known<T>,
) -> Result<T> {
    let big_x = known.xbar;
    let p = sample.p;
    let xbar = sample.xbar;
    match *spec {
        EstimatorSpec::MeanPerUnit => Ok(p),
        EstimatorSpec::Ratio => {
            if xbar == T::zero() {
                return Err(Error::ZeroSampleMean);
            }
            Ok(p * big_x / xbar)
        }
        EstimatorSpec::GsRepresentative { slope } => {
            let h = match slope {
                Weights::Fixed(h) => h,
                Weights::OptimalFromPopulation => gs_optimal_slope(known.require_population()?.0),
            };
            Ok(p + h * (xbar / big_x - T::one()))
        }
        EstimatorSpec::NsFamily { shape, weights } => {
            let [q1, q2] = match weights {
                Weights::Fixed(w) => w,
                Weights::OptimalFromPopulation => {
                    let (m, dz) = known.require_population()?;
                    ns_quadratic(m, dz, &shape.constants(m.xbar)?).solve()?
                }
            };
            Ok((q1 * p + q2 * (big_x - xbar)) * shape.multiplier(big_x, xbar)?)
        }
        EstimatorSpec::NClass { shape, weights } => {
            let [d1, d2] = match weights {
                Weights::Fixed(w) => w,
                Weights::OptimalFromPopulation => {
                    let (m, dz) = known.require_population()?;
                    let (d1, d2) =
                        tn_optimal_weights(&tn_quadratic(m, dz, &shape.constants(m.xbar)?))?;
                    [d1, d2]
                }
            };
            n_class_value(&shape, d1, d2, p, xbar, big_x)
        }
        EstimatorSpec::NqClass { shape, weights } => {
            let d1 = match weights {
                Weights::Fixed(w) => w,
                Weights::OptimalFromPopulation => {
                    let (m, dz) = known.require_population()?;
                    tnq_theory(m, dz, &shape.constants(m.xbar)?)?.weights[0]
                }
            };
            Ok(d1 * p * shape.multiplier(big_x, xbar)?)
        }
        EstimatorSpec::AdaptiveN { shape } => eval_adaptive(&shape, sample, known).map(|a| a.value),
    }
}

fn n_class_value<T: Real>(shape: &NShape<T>, d1: T, d2: T, p: T, xbar: T, big_x: T) -> Result<T> {
    let lead = if d1 == T::zero() {
        T::zero()
    } else {
        d1 * p * shape.multiplier(big_x, xbar)?
    };
    Ok(lead + d2 * xbar + (T::one() - d1 - d2) * big_x)
}

/// Outcome of the sample-estimated-weight estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveEstimate<T> {
    pub value: T,
    /// Estimated `(d1, d2)`; `None` when the sample fell back to `p`.
    pub weights: Option<[T; 2]>,
    pub degenerate: bool,
}

/// Sample analogues of the population moments, with `p` standing in for `P`.
///
/// Returns `None` when the sample cannot identify them (fewer than three units,
/// constant attribute or constant `x`).
pub fn estimate_moments<T: Real>(sample: &Sample<T>, pop_xbar: T) -> Option<PopulationMoments<T>> {
    if sample.size() < 3 {
        return None;
    }
    let p = sample.p;
    if p == T::zero() || p == T::one() || sample.xbar == T::zero() {
        return None;
    }
    let s2_x = sample_variance(&sample.x, sample.xbar);
    if s2_x == T::zero() {
        return None;
    }
    let n = T::from_usize(sample.size())?;
    let s2_phi = n * p * (T::one() - p) / (n - T::one());
    let rho = point_biserial(&sample.phi, &sample.x).ok()?;
    let c_phi = s2_phi.sqrt() / p;
    let c_x = s2_x.sqrt() / sample.xbar;
    Some(PopulationMoments {
        proportion: p,
        xbar: pop_xbar,
        s2_phi,
        s2_x,
        c_phi,
        c_x,
        rho,
        ratio: pop_xbar / p,
        b: p - pop_xbar,
    })
}

/// Optimal `(d1, d2)` computed from (estimated) moments.
pub fn adaptive_weights<T: Real>(
    estimated: &PopulationMoments<T>,
    dz: &Design<T>,
    shape: &NShape<T>,
) -> Result<[T; 2]> {
    let c = shape.constants(estimated.xbar)?;
    let (d1, d2) = tn_optimal_weights(&tn_quadratic(estimated, dz, &c))?;
    Ok([d1, d2])
}

/// The generalized-class estimator with weights estimated from the sample itself.
///
/// Degenerate samples fall back to `p` and are flagged instead of failing.
pub fn eval_adaptive<T: Real>(
    shape: &NShape<T>,
    sample: &Sample<T>,
    known: &Known<T>,
) -> Result<AdaptiveEstimate<T>> {
    let dz = known.design.ok_or_else(|| {
        Error::InvalidArgument("sample-estimated weights need the design (n, N)".into())
    })?;
    shape.constants(known.xbar)?;
    let fallback = AdaptiveEstimate {
        value: sample.p,
        weights: None,
        degenerate: true,
    };
    let Some(est) = estimate_moments(sample, known.xbar) else {
        return Ok(fallback);
    };
    let Ok([d1, d2]) = adaptive_weights(&est, &dz, shape) else {
        return Ok(fallback);
    };
    let value = n_class_value(shape, d1, d2, sample.p, sample.xbar, known.xbar)?;
    Ok(AdaptiveEstimate {
        value,
        weights: Some([d1, d2]),
        degenerate: false,
    })
}

/// Named estimators: the competitor estimators and every listed class member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    P,
    Ts,
    Tgs,
    Tns,
    Tn,
    /// `t_N1` .. `t_N8`
    TnMember(u8),
    /// `t_NQ1` .. `t_NQ9`
    TnqMember(u8),
    TnAdaptive,
}

impl Preset {
    pub fn all() -> Vec<Preset> {
        let mut v = vec![Preset::P, Preset::Ts, Preset::Tgs, Preset::Tns, Preset::Tn];
        v.extend((1..=8).map(Preset::TnMember));
        v.extend((1..=9).map(Preset::TnqMember));
        v.push(Preset::TnAdaptive);
        v
    }

    pub fn name(&self) -> String {
        match self {
            Preset::P => "p".into(),
            Preset::Ts => "t_s".into(),
            Preset::Tgs => "t_GS".into(),
            Preset::Tns => "t_NS".into(),
            Preset::Tn => "t_N".into(),
            Preset::TnMember(i) => format!("t_N{i}"),
            Preset::TnqMember(i) => format!("t_NQ{i}"),
            Preset::TnAdaptive => "t_N_adaptive".into(),
        }
    }

    /// Resolves the preset against population moments; some members take
    /// `rho`, `Xbar` or the optimal `alpha` from them.
    pub fn spec<T: Real>(&self, m: &PopulationMoments<T>) -> EstimatorSpec<T> {
        let (zero, one) = (T::zero(), T::one());
        let fixed = |alpha: T| EstimatorSpec::NClass {
            shape: NShape::new(alpha, zero, one),
            weights: Weights::Fixed([one, zero]),
        };
        let nq = |alpha: T, eta: T, lambda: T| EstimatorSpec::NqClass {
            shape: NShape::new(alpha, eta, lambda),
            weights: Weights::OptimalFromPopulation,
        };
        match *self {
            Preset::P => EstimatorSpec::MeanPerUnit,
            Preset::Ts => EstimatorSpec::Ratio,
            Preset::Tgs => EstimatorSpec::GsRepresentative {
                slope: Weights::OptimalFromPopulation,
            },
            Preset::Tns => EstimatorSpec::NsFamily {
                shape: NsShape::new(one, zero, one, zero),
                weights: Weights::OptimalFromPopulation,
            },
            Preset::Tn => EstimatorSpec::NClass {
                shape: NShape::new(one, one, one),
                weights: Weights::OptimalFromPopulation,
            },
            Preset::TnAdaptive => EstimatorSpec::AdaptiveN {
                shape: NShape::new(one, one, one),
            },
            Preset::TnMember(i) => match i {
                1 => fixed(zero),
                2 => fixed(one),
                3 => fixed(m.rho * m.c_phi / m.c_x),
                4 => fixed(-one),
                5 => nq(one, zero, one),
                6 => nq(-one, zero, one),
                7 => nq(zero, zero, one),
                _ => EstimatorSpec::NClass {
                    shape: NShape::new(zero, zero, one),
                    weights: Weights::OptimalFromPopulation,
                },
            },
            Preset::TnqMember(i) => {
                let (rho, xbar) = (m.rho, m.xbar);
                match i {
                    1 => nq(one, one, one),
                    2 => nq(one, one, rho),
                    3 => nq(one, one, xbar),
                    4 => nq(one, one, zero),
                    5 => nq(-one, one, one),
                    6 => nq(one, xbar, rho),
                    7 => nq(zero, xbar, rho),
                    8 => nq(one, rho, xbar),
                    _ => nq(-one, rho, xbar),
                }
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts canonical names (`t_NQ4`) and their underscore-free,
    /// case-insensitive forms (`tNQ4`, `tnq4`).
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_')
            .collect::<String>()
            .to_ascii_lowercase();
        let parsed = match key.as_str() {
            "p" => Some(Preset::P),
            "ts" => Some(Preset::Ts),
            "tgs" => Some(Preset::Tgs),
            "tns" => Some(Preset::Tns),
            "tn" => Some(Preset::Tn),
            "tnadaptive" => Some(Preset::TnAdaptive),
            k => {
                if let Some(rest) = k.strip_prefix("tnq") {
                    rest.parse::<u8>()
                        .ok()
                        .filter(|i| (1..=9).contains(i))
                        .map(Preset::TnqMember)
                } else if let Some(rest) = k.strip_prefix("tn") {
                    rest.parse::<u8>()
                        .ok()
                        .filter(|i| (1..=8).contains(i))
                        .map(Preset::TnMember)
                } else {
                    None
                }
            }
        };
        parsed.ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}
