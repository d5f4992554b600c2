//! Finite populations, samples, the SRSWOR design and population moments.
//!
//! Everything downstream is expressed in terms of the relative errors
//! `e0 = (p - P)/P` and `e1 = (xbar - Xbar)/Xbar`, whose second moments under
//! SRSWOR are `f*Cphi^2`, `f*Cx^2` and `f*rho*Cphi*Cx` with `f = 1/n - 1/N`.
//! Variances use the `N - 1` divisor throughout.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{count, Real};

/// A finite population of paired (attribute, auxiliary) observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<T> {
    phi: Vec<bool>,
    x: Vec<T>,
}

impl<T: Real> Population<T> {
    pub fn new(phi: Vec<bool>, x: Vec<T>) -> Result<Self> {
        if phi.len() != x.len() {
            return Err(Error::InvalidPopulation(format!(
                "phi has {} entries but x has {}",
                phi.len(),
                x.len()
            )));
        }
        if phi.len() < 2 {
            return Err(Error::InvalidPopulation(format!(
                "population needs at least 2 units, got {}",
                phi.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPopulation(format!(
                "x value of unit {i} is not finite"
            )));
        }
        Ok(Self { phi, x })
    }

    /// Builds a population from 0/1 integer codes.
    pub fn from_codes(codes: &[u8], x: Vec<T>) -> Result<Self> {
        let mut phi = Vec::with_capacity(codes.len());
        for (i, &c) in codes.iter().enumerate() {
            match c {
                0 => phi.push(false),
                1 => phi.push(true),
                other => {
                    return Err(Error::InvalidPopulation(format!(
                        "phi value {other} of unit {i} is not 0 or 1"
                    )))
                }
            }
        }
        Self::new(phi, x)
    }

    pub fn size(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[bool] {
        &self.phi
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    /// Number of units possessing the attribute.
    pub fn attribute_count(&self) -> usize {
        self.phi.iter().filter(|&&v| v).count()
    }

    pub fn proportion(&self) -> T {
        count::<T>(self.attribute_count()) / count::<T>(self.size())
    }

    pub fn x_mean(&self) -> T {
        mean(&self.x)
    }
}

/// Simple random sampling without replacement of `n` out of `N` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Design<T> {
    pub sample_size: usize,
    pub population_size: usize,
    /// `1/n - 1/N`.
    pub f: T,
}

impl<T: Real> Design<T> {
    pub fn new(sample_size: usize, population_size: usize) -> Result<Self> {
        let f = sampling_factor(sample_size, population_size)?;
        Ok(Self {
            sample_size,
            population_size,
            f,
        })
    }

    pub fn is_census(&self) -> bool {
        self.sample_size == self.population_size
    }
}

/// `f = 1/n - 1/N`, the factor scaling every first-order SRSWOR variance.
pub fn sampling_factor<T: Real>(n: usize, population_size: usize) -> Result<T> {
    if n < 2 || n > population_size {
        return Err(Error::InvalidDesign {
            n,
            population: population_size,
        });
    }
    if n == population_size {
        return Ok(T::zero());
    }
    Ok(T::one() / count::<T>(n) - T::one() / count::<T>(population_size))
}

/// Population quantities every theoretical formula is written in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationMoments<T> {
    /// Population proportion `P`.
    pub proportion: T,
    /// Population mean of the auxiliary variable.
    pub xbar: T,
    /// `S_phi^2`, divisor `N - 1`.
    pub s2_phi: T,
    /// `S_x^2`, divisor `N - 1`.
    pub s2_x: T,
    /// `S_phi / P`.
    pub c_phi: T,
    /// `S_x / Xbar`.
    pub c_x: T,
    /// Point-biserial correlation between the attribute and `x`.
    pub rho: T,
    /// `R = Xbar / P`.
    pub ratio: T,
    /// `b = P - Xbar`.
    pub b: T,
}

impl<T: Real> PopulationMoments<T> {
    /// Assembles moments from published summary statistics rather than raw data.
    pub fn from_summary(proportion: T, xbar: T, c_phi: T, c_x: T, rho: T) -> Result<Self> {
        let m = Self {
            proportion,
            xbar,
            s2_phi: (c_phi * proportion).powi(2),
            s2_x: (c_x * xbar).powi(2),
            c_phi,
            c_x,
            rho,
            ratio: xbar / proportion,
            b: proportion - xbar,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks the domain of every field.
    pub fn validate(&self) -> Result<()> {
        let fields = [self.proportion, self.xbar, self.c_phi, self.c_x, self.rho];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMoments("non-finite input".into()));
        }
        if self.proportion <= T::zero() || self.proportion >= T::one() {
            return Err(Error::DegenerateAttribute(
                self.proportion.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if self.xbar == T::zero() {
            return Err(Error::DegenerateAuxiliary("mean of x is zero".into()));
        }
        if self.c_phi <= T::zero() {
            return Err(Error::InvalidMoments("Cphi must be positive".into()));
        }
        if self.c_x == T::zero() || (self.c_x > T::zero()) != (self.xbar > T::zero()) {
            return Err(Error::InvalidMoments(
                "Cx must be nonzero and carry the sign of Xbar".into(),
            ));
        }
        if self.rho.abs() > T::one() {
            return Err(Error::InvalidMoments(format!(
                "rho = {} lies outside [-1, 1]",
                self.rho
            )));
        }
        Ok(())
    }

    /// `rho * Cphi * Cx`, the scaled covariance of the relative errors.
    pub fn rho_cphi_cx(&self) -> T {
        self.rho * self.c_phi * self.c_x
    }
}

/// Computes `P`, `Xbar`, variances, coefficients of variation and `rho` of a population.
pub fn compute_moments<T: Real>(pop: &Population<T>) -> Result<PopulationMoments<T>> {
    let size = count::<T>(pop.size());
    let proportion = pop.proportion();
    if proportion == T::zero() || proportion == T::one() {
        return Err(Error::DegenerateAttribute(
            proportion.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let xbar = pop.x_mean();
    let s2_phi = pop
        .phi()
        .iter()
        .map(|&v| (indicator::<T>(v) - proportion).powi(2))
        .sum::<T>()
        / (size - T::one());
    let s2_x = sample_variance(pop.x(), xbar);
    if s2_x == T::zero() {
        return Err(Error::DegenerateAuxiliary("x is constant".into()));
    }
    if xbar == T::zero() {
        return Err(Error::DegenerateAuxiliary("mean of x is zero".into()));
    }
    let rho = point_biserial(pop.phi(), pop.x())?;
    Ok(PopulationMoments {
        proportion,
        xbar,
        s2_phi,
        s2_x,
        c_phi: s2_phi.sqrt() / proportion,
        c_x: s2_x.sqrt() / xbar,
        rho,
        ratio: xbar / proportion,
        b: proportion - xbar,
    })
}

/// Pearson correlation between a 0/1 indicator and a real variable.
pub fn point_biserial<T: Real>(phi: &[bool], x: &[T]) -> Result<T> {
    if phi.len() != x.len() {
        return Err(Error::InvalidPopulation(format!(
            "phi has {} entries but x has {}",
            phi.len(),
            x.len()
        )));
    }
    if phi.len() < 2 {
        return Err(Error::InvalidPopulation(
            "correlation needs at least 2 pairs".into(),
        ));
    }
    let codes: Vec<T> = phi.iter().map(|&v| indicator(v)).collect();
    let mp = mean(&codes);
    let mx = mean(x);
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&c, &v) in codes.iter().zip(x) {
        let dp = c - mp;
        let dx = v - mx;
        sxy = sxy + dp * dx;
        sxx = sxx + dp * dp;
        syy = syy + dx * dx;
    }
    if sxx == T::zero() {
        return Err(Error::DegenerateAttribute(mp.to_f64().unwrap_or(f64::NAN)));
    }
    if syy == T::zero() {
        return Err(Error::DegenerateAuxiliary("x is constant".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// A drawn sample together with the values it observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub indices: Vec<usize>,
    pub phi: Vec<bool>,
    pub x: Vec<T>,
    /// Sample proportion `a / n`.
    pub p: T,
    /// Sample mean of `x`.
    pub xbar: T,
}

impl<T: Real> Sample<T> {
    /// Builds a sample from explicit unit indices, checking they are distinct and in range.
    pub fn from_indices(pop: &Population<T>, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in &indices {
            if i >= pop.size() {
                return Err(Error::InvalidArgument(format!(
                    "sample index {i} outside population of size {}",
                    pop.size()
                )));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidArgument(format!("sample index {i} repeated")));
            }
        }
        Ok(Self::gather(pop, indices))
    }

    pub(crate) fn gather(pop: &Population<T>, indices: Vec<usize>) -> Self {
        let phi: Vec<bool> = indices.iter().map(|&i| pop.phi()[i]).collect();
        let x: Vec<T> = indices.iter().map(|&i| pop.x()[i]).collect();
        let n = count::<T>(indices.len());
        let a = phi.iter().filter(|&&v| v).count();
        let xbar = x.iter().copied().sum::<T>() / n;
        Self {
            indices,
            phi,
            x,
            p: count::<T>(a) / n,
            xbar,
        }
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

pub(crate) fn indicator<T: Real>(v: bool) -> T {
    if v {
        T::one()
    } else {
        T::zero()
    }
}

pub(crate) fn mean<T: Real>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / count::<T>(values.len())
}

pub(crate) fn sample_variance<T: Real>(values: &[T], center: T) -> T {
    values.iter().map(|&v| (v - center).powi(2)).sum::<T>() / count::<T>(values.len() - 1)
}

/// Reads a population from CSV with mandatory `phi` and `x` header columns.
pub fn read_population_csv<T: Real, R: Read>(reader: R) -> Result<Population<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing required column `{name}`"),
            })
    };
    let phi_col = column("phi")?;
    let x_col = column("x")?;

    let mut phi = Vec::new();
    let mut x = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_phi = record.get(phi_col).unwrap_or("");
        let code = match raw_phi {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("phi must be 0 or 1, got `{other}`"),
                })
            }
        };
        let raw_x = record.get(x_col).unwrap_or("");
        let value: f64 = raw_x.parse().map_err(|_| Error::Parse {
            line,
            message: format!("x is not a number: `{raw_x}`"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("x is not finite: `{raw_x}`"),
            });
        }
        phi.push(code);
        x.push(T::from_f64(value).ok_or_else(|| Error::Parse {
            line,
            message: format!("x out of range: `{raw_x}`"),
        })?);
    }
    Population::new(phi, x)
}

/// Writes a population in the schema [`read_population_csv`] accepts.
pub fn write_population_csv<T: Real, W: Write>(pop: &Population<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["phi", "x"])?;
    for (&p, &v) in pop.phi().iter().zip(pop.x()) {
        let value = v.to_f64().unwrap_or(f64::NAN);
        w.write_record([if p { "1" } else { "0" }, &value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
