//! First-order bias and MSE of every estimator family, with optimal weights.
//!
//! All results keep terms whose expectation is `O(f)` in the relative errors
//! `e0`, `e1`. Two-weight families reduce to a quadratic surface
//! `MSE(w) = c - 2 g.w + w' H w`, minimised by the normal equations `H w = g`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{Design, PopulationMoments};
use crate::scalar::{lit, Real};

/// Relative determinant below which a 2x2 normal system is treated as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Taylor constants of the multiplier `(Xbar/xbar)^alpha * exp(eta(Xbar-xbar)/(eta(Xbar+xbar)+2 lambda))`.
///
/// Written in `e1`, the multiplier is `(1+e1)^(-alpha) * exp(-k e1 / (1 + k e1))`
/// and expands to `1 - a e1 + d e1^2 + O(e1^3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionConstantsN<T> {
    pub alpha: T,
    pub eta: T,
    pub lambda: T,
    /// `eta Xbar / (2 (eta Xbar + lambda))`
    pub k: T,
    /// `alpha + k`
    pub a: T,
    /// `3/2 k^2 + alpha k + alpha (alpha + 1) / 2`
    pub d: T,
}

impl<T: Real> ExpansionConstantsN<T> {
    /// The multiplier as a function of the relative error `e1`.
    pub fn multiplier(&self, e1: T) -> T {
        (T::one() + e1).powf(-self.alpha) * (-(self.k * e1) / (T::one() + self.k * e1)).exp()
    }
}

pub fn constants_n<T: Real>(
    alpha: T,
    eta: T,
    lambda: T,
    xbar: T,
) -> Result<ExpansionConstantsN<T>> {
    let denom = eta * xbar + lambda;
    if denom.abs() <= T::epsilon() * ((eta * xbar).abs() + lambda.abs()) || denom == T::zero() {
        return Err(Error::SingularTransform(format!(
            "eta*Xbar + lambda = {denom} vanishes"
        )));
    }
    let two = lit::<T>(2.0);
    let k = eta * xbar / (two * denom);
    let d = lit::<T>(1.5) * k * k + alpha * k + alpha * (alpha + T::one()) / two;
    Ok(ExpansionConstantsN {
        alpha,
        eta,
        lambda,
        k,
        a: alpha + k,
        d,
    })
}

/// Taylor constants of the multiplier
/// `[(aXbar+b)/(a xbar+b)]^alpha * exp(beta ((aXbar+b)-(a xbar+b)) / ((aXbar+b)+(a xbar+b)))`.
///
/// With `theta = a Xbar / (a Xbar + b)` it is `(1+theta e1)^(-alpha) exp(-beta theta e1 / (2 + theta e1))`,
/// which expands to `1 - B e1 + A e1^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionConstantsNS<T> {
    pub alpha: T,
    pub beta: T,
    pub a_const: T,
    pub b_const: T,
    pub theta: T,
    /// `B = theta (alpha + beta/2)`
    pub b_coef: T,
    /// `A = theta^2 (alpha(alpha+1)/2 + alpha beta/2 + beta/4 + beta^2/8)`
    pub a_coef: T,
}

impl<T: Real> ExpansionConstantsNS<T> {
    pub fn multiplier(&self, e1: T) -> T {
        let te = self.theta * e1;
        (T::one() + te).powf(-self.alpha) * (-(self.beta * te) / (lit::<T>(2.0) + te)).exp()
    }
}

pub fn ns_constants<T: Real>(
    alpha: T,
    beta: T,
    a_const: T,
    b_const: T,
    xbar: T,
) -> Result<ExpansionConstantsNS<T>> {
    let denom = a_const * xbar + b_const;
    if denom.abs() <= T::epsilon() * ((a_const * xbar).abs() + b_const.abs()) || denom == T::zero()
    {
        return Err(Error::SingularTransform(format!(
            "a*Xbar + b = {denom} vanishes"
        )));
    }
    let two = lit::<T>(2.0);
    let theta = a_const * xbar / denom;
    let b_coef = theta * (alpha + beta / two);
    let a_coef = theta
        * theta
        * (alpha * (alpha + T::one()) / two
            + alpha * beta / two
            + beta / lit(4.0)
            + beta * beta / lit(8.0));
    Ok(ExpansionConstantsNS {
        alpha,
        beta,
        a_const,
        b_const,
        theta,
        b_coef,
        a_coef,
    })
}

/// `MSE(w1, w2) = constant - 2 (g1 w1 + g2 w2) + w' H w` with symmetric `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticMseForm<T> {
    pub constant: T,
    pub linear: [T; 2],
    pub quadratic: [[T; 2]; 2],
}

impl<T: Real> QuadraticMseForm<T> {
    pub fn value(&self, w1: T, w2: T) -> T {
        let [g1, g2] = self.linear;
        let [[h11, h12], [_, h22]] = self.quadratic;
        let two = lit::<T>(2.0);
        self.constant - two * (g1 * w1 + g2 * w2)
            + h11 * w1 * w1
            + two * h12 * w1 * w2
            + h22 * w2 * w2
    }

    pub fn gradient(&self, w1: T, w2: T) -> [T; 2] {
        let [g1, g2] = self.linear;
        let [[h11, h12], [_, h22]] = self.quadratic;
        let two = lit::<T>(2.0);
        [
            two * (h11 * w1 + h12 * w2 - g1),
            two * (h12 * w1 + h22 * w2 - g2),
        ]
    }

    pub fn determinant(&self) -> T {
        let [[h11, h12], [_, h22]] = self.quadratic;
        h11 * h22 - h12 * h12
    }

    /// Solves `H w = g` by Cramer's rule after a positive-definiteness check.
    pub fn solve(&self) -> Result<[T; 2]> {
        let [g1, g2] = self.linear;
        let [[h11, h12], [_, h22]] = self.quadratic;
        let det = self.determinant();
        let scale = (h11 * h22).abs();
        if !(det > lit::<T>(SINGULAR_TOLERANCE) * scale) || h11 < T::zero() {
            return Err(Error::SingularSystem {
                det: det.to_f64().unwrap_or(f64::NAN),
                scale: scale.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok([(g1 * h22 - h12 * g2) / det, (h11 * g2 - h12 * g1) / det])
    }

    /// Minimum value, `constant - g.w*`.
    pub fn minimum(&self) -> Result<(T, [T; 2])> {
        let w = self.solve()?;
        Ok((
            self.constant - (self.linear[0] * w[0] + self.linear[1] * w[1]),
            w,
        ))
    }
}

/// First-order bias and MSE of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryResult<T> {
    pub bias: T,
    pub mse: T,
    /// Optimal (or fixed) weights in the family's own order, empty when the
    /// estimator has none.
    pub weights: Vec<T>,
    /// Percent relative efficiency against a reference MSE, once attached.
    pub pre: Option<T>,
}

impl<T: Real> TheoryResult<T> {
    fn new(bias: T, mse: T, weights: Vec<T>) -> Self {
        Self {
            bias,
            mse,
            weights,
            pre: None,
        }
    }

    pub fn with_pre(mut self, reference_mse: T) -> Result<Self> {
        self.pre = Some(pre(self.mse, reference_mse)?);
        Ok(self)
    }
}

/// Percent relative efficiency `100 * reference / mse`.
pub fn pre<T: Real>(mse: T, reference_mse: T) -> Result<T> {
    if !(mse > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "relative efficiency needs a positive MSE, got {mse}"
        )));
    }
    Ok(lit::<T>(100.0) * reference_mse / mse)
}

/// `f P^2 (Cphi^2 + a^2 Cx^2 - 2 a rho Cphi Cx)`, the linearised variance of `p * (1 - a e1)`.
fn linear_variance<T: Real>(m: &PopulationMoments<T>, f: T, a: T) -> T {
    let p2 = m.proportion * m.proportion;
    f * p2 * relative_variance(m, a)
}

fn relative_variance<T: Real>(m: &PopulationMoments<T>, a: T) -> T {
    m.c_phi * m.c_phi + a * a * m.c_x * m.c_x - lit::<T>(2.0) * a * m.rho_cphi_cx()
}

/// Variance of the sample proportion, `f P^2 Cphi^2`.
pub fn var_p<T: Real>(m: &PopulationMoments<T>, dz: &Design<T>) -> Result<TheoryResult<T>> {
    m.validate()?;
    Ok(TheoryResult::new(
        T::zero(),
        linear_variance(m, dz.f, T::zero()),
        vec![],
    ))
}

/// Ratio estimator `p Xbar / xbar`.
pub fn ratio_theory<T: Real>(m: &PopulationMoments<T>, dz: &Design<T>) -> Result<TheoryResult<T>> {
    m.validate()?;
    let bias = dz.f * m.proportion * (m.c_x * m.c_x - m.rho_cphi_cx());
    Ok(TheoryResult::new(
        bias,
        linear_variance(m, dz.f, T::one()),
        vec![],
    ))
}

/// Optimal regression-type slope `h* = -P rho Cphi / Cx` for `p + h (xbar/Xbar - 1)`.
pub fn gs_optimal_slope<T: Real>(m: &PopulationMoments<T>) -> T {
    -m.proportion * m.rho * m.c_phi / m.c_x
}

/// `p + h (xbar/Xbar - 1)` at a given slope; unbiased, `MSE = f(P^2 Cphi^2 + h^2 Cx^2 + 2 h P rho Cphi Cx)`.
pub fn gs_theory<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    h: T,
) -> Result<TheoryResult<T>> {
    m.validate()?;
    let p = m.proportion;
    let mse = dz.f
        * (p * p * m.c_phi * m.c_phi
            + h * h * m.c_x * m.c_x
            + lit::<T>(2.0) * h * p * m.rho_cphi_cx());
    Ok(TheoryResult::new(T::zero(), mse, vec![h]))
}

/// Minimum MSE of the `H(p, u)` class, `f P^2 Cphi^2 (1 - rho^2)`, attained by the regression representative.
pub fn gs_min_theory<T: Real>(m: &PopulationMoments<T>, dz: &Design<T>) -> Result<TheoryResult<T>> {
    m.validate()?;
    let mse = dz.f * m.proportion.powi(2) * m.c_phi.powi(2) * (T::one() - m.rho * m.rho);
    Ok(TheoryResult::new(T::zero(), mse, vec![gs_optimal_slope(m)]))
}

/// The five `Delta` coefficients of the two-weight family built from `M1..M5`.
pub fn ns_deltas<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsNS<T>,
) -> [T; 5] {
    let f = dz.f;
    let two = lit::<T>(2.0);
    let p = m.proportion;
    let p2 = p * p;
    let cx2 = m.c_x * m.c_x;
    let rcc = m.rho_cphi_cx();
    let (big_a, big_b) = (c.a_coef, c.b_coef);
    let m1 = p2 * f * (m.c_phi * m.c_phi + big_b * big_b * cx2 - two * big_b * rcc);
    let m2 = m.xbar * m.xbar * f * cx2;
    // Printed with 2B on the covariance term; a direct expansion gives B.
    let m3 = p2 * f * (big_a * cx2 - two * big_b * rcc);
    let m4 = p * m.xbar * f * (-big_b * cx2 + rcc);
    let m5 = m.xbar * p * f * (-big_b * cx2);
    [p2 + m1 + two * m3, -m4 - m5, m2, p2 + m3, -m5]
}

pub fn ns_quadratic<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsNS<T>,
) -> QuadraticMseForm<T> {
    let [d1, d2, d3, d4, d5] = ns_deltas(m, dz, c);
    QuadraticMseForm {
        constant: m.proportion * m.proportion,
        linear: [d4, d5],
        quadratic: [[d1, d2], [d2, d3]],
    }
}

/// Closed-form minimum `P^2 - (D1 D5^2 + D3 D4^2 - 2 D2 D4 D5) / (D1 D3 - D2^2)`.
pub fn ns_min_mse_closed_form<T: Real>(proportion: T, deltas: [T; 5]) -> Result<T> {
    let [d1, d2, d3, d4, d5] = deltas;
    let det = d1 * d3 - d2 * d2;
    let scale = (d1 * d3).abs();
    if !(det > lit::<T>(SINGULAR_TOLERANCE) * scale) {
        return Err(Error::SingularSystem {
            det: det.to_f64().unwrap_or(f64::NAN),
            scale: scale.to_f64().unwrap_or(f64::NAN),
        });
    }
    let two = lit::<T>(2.0);
    Ok(proportion * proportion - (d1 * d5 * d5 + d3 * d4 * d4 - two * d2 * d4 * d5) / det)
}

/// First-order bias `P(q1 - 1) + f[(q2 Xbar B + q1 P A) Cx^2 - q1 P B rho Cphi Cx]`.
pub fn ns_bias<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsNS<T>,
    q1: T,
    q2: T,
) -> T {
    let p = m.proportion;
    p * (q1 - T::one())
        + dz.f
            * ((q2 * m.xbar * c.b_coef + q1 * p * c.a_coef) * m.c_x * m.c_x
                - q1 * p * c.b_coef * m.rho_cphi_cx())
}

/// Minimum MSE of the two-weight family at the normal-equation weights `(q1*, q2*)`.
pub fn ns_theory<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsNS<T>,
) -> Result<TheoryResult<T>> {
    m.validate()?;
    let deltas = ns_deltas(m, dz, c);
    let mse = ns_min_mse_closed_form(m.proportion, deltas)?;
    let [q1, q2] = ns_quadratic(m, dz, c).solve()?;
    Ok(TheoryResult::new(
        ns_bias(m, dz, c, q1, q2),
        mse,
        vec![q1, q2],
    ))
}

/// The family at fixed `(q1, q2)`.
pub fn ns_fixed<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsNS<T>,
    q1: T,
    q2: T,
) -> Result<TheoryResult<T>> {
    m.validate()?;
    let mse = ns_quadratic(m, dz, c).value(q1, q2);
    Ok(TheoryResult::new(
        ns_bias(m, dz, c, q1, q2),
        mse,
        vec![q1, q2],
    ))
}

/// MSE surface `(1 - 2 d1) b^2 + d1^2 M + d2^2 N + 2 d1 d2 O` of the generalized class.
pub fn tn_quadratic<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsN<T>,
) -> QuadraticMseForm<T> {
    let b2 = m.b * m.b;
    let big_m = b2 + linear_variance(m, dz.f, c.a);
    let big_n = m.xbar * m.xbar * dz.f * m.c_x * m.c_x;
    let big_o = m.proportion * m.xbar * dz.f * (m.rho * m.c_phi - c.a * m.c_x) * m.c_x;
    QuadraticMseForm {
        constant: b2,
        linear: [b2, T::zero()],
        quadratic: [[big_m, big_o], [big_o, big_n]],
    }
}

/// `d1* = b^2 N / (MN - O^2)`, `d2* = -b^2 O / (MN - O^2)`.
pub fn tn_optimal_weights<T: Real>(q: &QuadraticMseForm<T>) -> Result<(T, T)> {
    let [d1, d2] = q.solve()?;
    Ok((d1, d2))
}

/// `(d1 - 1) b + d1 P f (d Cx^2 - a rho Cphi Cx)`.
pub fn tn_bias<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsN<T>,
    d1: T,
    _d2: T,
) -> T {
    (d1 - T::one()) * m.b + d1 * m.proportion * dz.f * (c.d * m.c_x * m.c_x - c.a * m.rho_cphi_cx())
}

fn check_class<T: Real>(m: &PopulationMoments<T>) -> Result<()> {
    if m.b.abs() <= T::epsilon() * m.proportion.max(m.xbar.abs()) {
        return Err(Error::DegenerateClass(
            "P equals Xbar, so the shrinkage target coincides with the estimand".into(),
        ));
    }
    Ok(())
}

/// Minimum MSE of the generalized class in closed form,
/// `P^2 (1-R)^2 f Cphi^2 (1-rho^2) / [(1-R)^2 + f Cphi^2 (1-rho^2)]`.
pub fn tn_min_mse<T: Real>(m: &PopulationMoments<T>, dz: &Design<T>) -> Result<TheoryResult<T>> {
    m.validate()?;
    check_class(m)?;
    let one_minus_r2 = (T::one() - m.ratio).powi(2);
    let v = dz.f * m.c_phi * m.c_phi * (T::one() - m.rho * m.rho);
    let denom = one_minus_r2 + v;
    let mse = m.proportion * m.proportion * one_minus_r2 * v / denom;
    Ok(TheoryResult::new(T::zero(), mse, vec![]))
}

/// Minimum MSE of the generalized class via the optimal weights, `b^2 (1 - b^2 N / (MN - O^2))`.
pub fn tn_min_mse_via_weights<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsN<T>,
) -> Result<TheoryResult<T>> {
    m.validate()?;
    check_class(m)?;
    let q = tn_quadratic(m, dz, c);
    let (d1, d2) = tn_optimal_weights(&q)?;
    let b2 = m.b * m.b;
    let mse = b2 * (T::one() - d1);
    Ok(TheoryResult::new(
        tn_bias(m, dz, c, d1, d2),
        mse,
        vec![d1, d2],
    ))
}

/// The generalized class at fixed `(d1, d2)`.
pub fn tn_fixed<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsN<T>,
    d1: T,
    d2: T,
) -> Result<TheoryResult<T>> {
    m.validate()?;
    let mse = tn_quadratic(m, dz, c).value(d1, d2);
    Ok(TheoryResult::new(
        tn_bias(m, dz, c, d1, d2),
        mse,
        vec![d1, d2],
    ))
}

/// `d1 * p * multiplier` at fixed `d1`: `MSE = (d1-1)^2 P^2 + d1^2 P^2 V`.
pub fn tnq_fixed<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsN<T>,
    d1: T,
) -> Result<TheoryResult<T>> {
    m.validate()?;
    let p2 = m.proportion * m.proportion;
    let v = dz.f * relative_variance(m, c.a);
    let mse = (d1 - T::one()).powi(2) * p2 + d1 * d1 * p2 * v;
    Ok(TheoryResult::new(tnq_bias(m, dz, c, d1), mse, vec![d1]))
}

fn tnq_bias<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsN<T>,
    d1: T,
) -> T {
    (d1 - T::one()) * m.proportion
        + d1 * m.proportion * dz.f * (c.d * m.c_x * m.c_x - c.a * m.rho_cphi_cx())
}

/// Minimum MSE of the single-weight class: `P^2 V / (1 + V)` at `d1* = 1 / (1 + V)`.
pub fn tnq_theory<T: Real>(
    m: &PopulationMoments<T>,
    dz: &Design<T>,
    c: &ExpansionConstantsN<T>,
) -> Result<TheoryResult<T>> {
    m.validate()?;
    let v = dz.f * relative_variance(m, c.a);
    let d1 = T::one() / (T::one() + v);
    let mse = m.proportion * m.proportion * v / (T::one() + v);
    Ok(TheoryResult::new(tnq_bias(m, dz, c, d1), mse, vec![d1]))
}
