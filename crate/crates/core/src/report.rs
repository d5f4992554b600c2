//! Efficiency table for the home-ownership parameter set, its comparison with
//! the published figures, and CSV/JSON/text rendering of result rows.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Preset;
use crate::moments::{Design, PopulationMoments};
use crate::theory::{pre, TheoryResult};

/// Relative gap between formula and published MSE above which a row is flagged.
pub const DISCREPANCY_THRESHOLD: f64 = 0.05;

/// Summary statistics of a population and the sample size studied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub population_size: usize,
    pub sample_size: usize,
    pub proportion: f64,
    pub xbar: f64,
    pub c_phi: f64,
    pub c_x: f64,
    pub rho: f64,
    /// Higher-order moments of `x` carried as metadata; no formula reads them.
    pub lambda12: Option<f64>,
    pub lambda04: Option<f64>,
    pub lambda03: Option<f64>,
}

impl ParameterSet {
    /// Home ownership (attribute) against income in thousands of dollars (auxiliary), 40 families, n = 11.
    pub fn home_ownership() -> Self {
        Self {
            population_size: 40,
            sample_size: 11,
            proportion: 0.525,
            xbar: 14.4,
            c_phi: 0.963,
            c_x: 0.308,
            rho: 0.897,
            lambda12: Some(-0.118),
            lambda04: Some(1.75),
            lambda03: Some(0.963),
        }
    }

    pub fn moments(&self) -> Result<PopulationMoments<f64>> {
        PopulationMoments::from_summary(self.proportion, self.xbar, self.c_phi, self.c_x, self.rho)
    }

    pub fn design(&self) -> Result<Design<f64>> {
        Design::new(self.sample_size, self.population_size)
    }
}

/// A published table entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedRow {
    pub estimator: Preset,
    pub mse: f64,
    pub pre: f64,
}

const fn printed(estimator: Preset, mse: f64, pre: f64) -> PrintedRow {
    PrintedRow {
        estimator,
        mse,
        pre,
    }
}

/// Published MSEs and PREs for the home-ownership parameter set, in table order.
pub const PUBLISHED_TABLE: [PrintedRow; 22] = [
    printed(Preset::P, 0.061122, 100.00),
    printed(Preset::Ts, 0.32271, 189.3812),
    printed(Preset::Tgs, 0.01190, 511.7912),
    printed(Preset::Tns, 0.01171, 518.9214),
    printed(Preset::Tn, 0.00329, 1856.8818),
    printed(Preset::TnMember(1), 0.01682, 362.8112),
    printed(Preset::TnMember(2), 0.00881, 687.2571),
    printed(Preset::TnMember(3), 0.01191, 511.7912),
    printed(Preset::TnMember(4), 0.02801, 216.3089),
    printed(Preset::TnMember(5), 0.00881, 687.2763),
    printed(Preset::TnMember(6), 0.02821, 216.3019),
    printed(Preset::TnMember(7), 0.01681, 362.8229),
    printed(Preset::TnMember(8), 0.00329, 1856.8818),
    printed(Preset::TnqMember(1), 0.00636, 960.8345),
    printed(Preset::TnqMember(2), 0.00631, 963.0277),
    printed(Preset::TnqMember(3), 0.00744, 820.9345),
    printed(Preset::TnqMember(4), 0.00621, 983.6847),
    printed(Preset::TnqMember(5), 0.02211, 276.3287),
    printed(Preset::TnqMember(6), 0.00622, 982.1553),
    printed(Preset::TnqMember(7), 0.01245, 490.7537),
    printed(Preset::TnqMember(8), 0.00151, 812.9560),
    printed(Preset::TnqMember(9), 0.02521, 242.0966),
];

/// One line of the efficiency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub estimator: String,
    pub formula_mse: f64,
    pub printed_mse: Option<f64>,
    /// `100 * V(p) / formula_mse`, with `V(p)` from the same formulas.
    pub pre_vs_reference: f64,
    pub printed_pre: Option<f64>,
    /// `|formula - printed| / printed`.
    pub relative_gap: Option<f64>,
    pub discrepancy: bool,
    pub note: String,
}

/// Computes every table row from `m` and `dz` and sets it against the published figures.
pub fn reproduce_table(m: &PopulationMoments<f64>, dz: &Design<f64>) -> Result<Vec<TableRow>> {
    let reference = Preset::P.spec(m).theory(m, dz)?.mse;
    let printed_reference = PUBLISHED_TABLE[0].mse;
    PUBLISHED_TABLE
        .iter()
        .map(|row| {
            let formula = row.estimator.spec(m).theory(m, dz)?.mse;
            let gap = (formula - row.mse).abs() / row.mse;
            let discrepancy = gap > DISCREPANCY_THRESHOLD;
            let note = if discrepancy {
                diagnose(formula, row, m.proportion, printed_reference)
            } else {
                String::new()
            };
            Ok(TableRow {
                estimator: row.estimator.name(),
                formula_mse: formula,
                printed_mse: Some(row.mse),
                pre_vs_reference: pre(formula, reference)?,
                printed_pre: Some(row.pre),
                relative_gap: Some(gap),
                discrepancy,
                note,
            })
        })
        .collect()
}

fn within(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn diagnose(formula: f64, row: &PrintedRow, proportion: f64, printed_reference: f64) -> String {
    let mut notes = Vec::new();
    let without_p2 = formula / (proportion * proportion);
    if within(without_p2, row.mse, DISCREPANCY_THRESHOLD) {
        notes.push(format!(
            "printed value matches the formula without its P^2 factor ({without_p2:.6})"
        ));
    } else if within(10.0 * without_p2, row.mse, DISCREPANCY_THRESHOLD) {
        notes.push(format!(
            "printed value is a decimal shift of the formula without its P^2 factor ({without_p2:.6})"
        ));
    } else {
        notes.push(format!(
            "formula differs from printed value by {:.1}%",
            100.0 * (formula - row.mse) / row.mse
        ));
    }
    let implied = 100.0 * printed_reference / row.pre;
    if !within(implied, row.mse, 0.01) {
        notes.push(format!(
            "printed PRE implies MSE {implied:.6}, not the printed MSE"
        ));
    }
    notes.join("; ")
}

/// Rows ordered from smallest to largest formula MSE.
pub fn ranking(rows: &[TableRow]) -> Vec<&TableRow> {
    let mut v: Vec<&TableRow> = rows.iter().collect();
    v.sort_by(|a, b| a.formula_mse.total_cmp(&b.formula_mse));
    v
}

/// Theoretical result for one named estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub estimator: String,
    pub bias: f64,
    pub mse: f64,
    /// Weights in the family's order, `;`-separated.
    pub weights: String,
    pub pre_vs_p: f64,
}

impl TheoryRow {
    pub fn new(estimator: &str, result: &TheoryResult<f64>, reference_mse: f64) -> Result<Self> {
        Ok(Self {
            estimator: estimator.to_string(),
            bias: result.bias,
            mse: result.mse,
            weights: result
                .weights
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            pre_vs_p: pre(result.mse, reference_mse)?,
        })
    }
}

/// Theory set against exact enumeration or simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub estimator: String,
    pub mode: String,
    pub theory_bias: f64,
    pub theory_mse: f64,
    pub empirical_bias: f64,
    pub empirical_mse: f64,
    /// Present for simulation only.
    pub mc_standard_error: Option<f64>,
    /// Samples enumerated or replications drawn.
    pub samples: u128,
    pub degenerate_sample_count: Option<usize>,
    pub seed: Option<u64>,
    /// `|theory - empirical| / empirical` for the MSE.
    pub relative_gap: f64,
}

/// Population moments and sampling factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsSummary {
    pub population_size: usize,
    pub sample_size: usize,
    pub proportion: f64,
    pub xbar: f64,
    pub c_phi: f64,
    pub c_x: f64,
    pub rho: f64,
    pub ratio: f64,
    pub b: f64,
    pub f: f64,
    pub lambda12: Option<f64>,
    pub lambda04: Option<f64>,
    pub lambda03: Option<f64>,
}

impl MomentsSummary {
    pub fn new(m: &PopulationMoments<f64>, dz: &Design<f64>) -> Self {
        Self {
            population_size: dz.population_size,
            sample_size: dz.sample_size,
            proportion: m.proportion,
            xbar: m.xbar,
            c_phi: m.c_phi,
            c_x: m.c_x,
            rho: m.rho,
            ratio: m.ratio,
            b: m.b,
            f: dz.f,
            lambda12: None,
            lambda04: None,
            lambda03: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Plain-text rendering of a row type.
pub trait TextTable: Sized {
    fn headers() -> Vec<&'static str>;
    fn cells(&self) -> Vec<String>;
    fn footer(_rows: &[Self]) -> String {
        String::new()
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}"))
        .unwrap_or_else(|| "-".into())
}

impl TextTable for TableRow {
    fn headers() -> Vec<&'static str> {
        vec![
            "estimator",
            "formula_mse",
            "printed_mse",
            "pre",
            "printed_pre",
            "gap",
            "flag",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.estimator.clone(),
            format!("{:.6}", self.formula_mse),
            opt(self.printed_mse, 6),
            format!("{:.2}", self.pre_vs_reference),
            opt(self.printed_pre, 2),
            self.relative_gap
                .map(|g| format!("{:.1}%", 100.0 * g))
                .unwrap_or_else(|| "-".into()),
            if self.discrepancy {
                "*".into()
            } else {
                String::new()
            },
        ]
    }

    fn footer(rows: &[Self]) -> String {
        let mut out = String::new();
        let flagged: Vec<&TableRow> = rows.iter().filter(|r| r.discrepancy).collect();
        let _ = writeln!(
            out,
            "\nDiscrepancies (|formula - printed| / printed > {:.0}%): {}",
            100.0 * DISCREPANCY_THRESHOLD,
            flagged.len()
        );
        for r in flagged {
            let _ = writeln!(out, "  {}: {}", r.estimator, r.note);
        }
        out
    }
}

impl TextTable for TheoryRow {
    fn headers() -> Vec<&'static str> {
        vec!["estimator", "bias", "mse", "weights", "pre_vs_p"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.estimator.clone(),
            format!("{:.6e}", self.bias),
            format!("{:.6}", self.mse),
            if self.weights.is_empty() {
                "-".into()
            } else {
                self.weights.clone()
            },
            format!("{:.2}", self.pre_vs_p),
        ]
    }
}

impl TextTable for VerificationRow {
    fn headers() -> Vec<&'static str> {
        vec![
            "estimator",
            "mode",
            "theory_bias",
            "theory_mse",
            "empirical_bias",
            "empirical_mse",
            "mc_se",
            "samples",
            "degenerate",
            "gap",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.estimator.clone(),
            self.mode.clone(),
            format!("{:.6e}", self.theory_bias),
            format!("{:.6}", self.theory_mse),
            format!("{:.6e}", self.empirical_bias),
            format!("{:.6}", self.empirical_mse),
            self.mc_standard_error
                .map(|v| format!("{v:.2e}"))
                .unwrap_or_else(|| "-".into()),
            self.samples.to_string(),
            self.degenerate_sample_count
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into()),
            format!("{:.2}%", 100.0 * self.relative_gap),
        ]
    }
}

impl TextTable for MomentsSummary {
    fn headers() -> Vec<&'static str> {
        vec!["N", "n", "P", "Xbar", "Cphi", "Cx", "rho", "R", "b", "f"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.population_size.to_string(),
            self.sample_size.to_string(),
            format!("{:.6}", self.proportion),
            format!("{:.6}", self.xbar),
            format!("{:.6}", self.c_phi),
            format!("{:.6}", self.c_x),
            format!("{:.6}", self.rho),
            format!("{:.6}", self.ratio),
            format!("{:.6}", self.b),
            format!("{:.7}", self.f),
        ]
    }
}

fn render_text<R: TextTable>(rows: &[R]) -> String {
    let headers = R::headers();
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells()).collect();
    let widths: Vec<usize> = (0..headers.len())
        .map(|i| {
            cells
                .iter()
                .map(|c| c[i].len())
                .chain(std::iter::once(headers[i].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |values: Vec<String>| -> String {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if i == 0 {
                    format!("{v:<w$}", w = widths[i])
                } else {
                    format!("{v:>w$}", w = widths[i])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    out.push_str(&line(headers.iter().map(|h| h.to_string()).collect()));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for c in cells {
        out.push_str(&line(c));
        out.push('\n');
    }
    out.push_str(&R::footer(rows));
    out
}

/// Renders rows as CSV, a JSON array or an aligned text table.
pub fn emit<R: Serialize + TextTable>(rows: &[R], format: Format) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("nothing to render".into()));
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows)?;
            v.push(b'\n');
            Ok(v)
        }
        Format::Text => Ok(render_text(rows).into_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Vec<TableRow> {
        let ps = ParameterSet::home_ownership();
        reproduce_table(&ps.moments().unwrap(), &ps.design().unwrap()).unwrap()
    }

    fn row<'a>(rows: &'a [TableRow], name: &str) -> &'a TableRow {
        rows.iter().find(|r| r.estimator == name).unwrap()
    }

    #[test]
    fn anchor_rows() {
        let rows = table();
        assert_eq!(rows.len(), 22);
        let tn = row(&rows, "t_N");
        assert!((tn.formula_mse - 0.00329).abs() < 2e-5);
        assert!(!tn.discrepancy);
        assert_eq!(tn.formula_mse, row(&rows, "t_N8").formula_mse);
        let vp = row(&rows, "p");
        assert!((vp.formula_mse - 0.016848).abs() < 5e-6);
        assert!(vp.discrepancy);
        assert!(vp.note.contains("P^2"));
        assert!((vp.pre_vs_reference - 100.0).abs() < 1e-12);
    }

    #[test]
    fn pre_is_recomputed() {
        let rows = table();
        let reference = row(&rows, "p").formula_mse;
        for r in &rows {
            assert!((r.pre_vs_reference - 100.0 * reference / r.formula_mse).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trips() {
        let rows = table();
        let bytes = emit(&rows, Format::Csv).unwrap();
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let back: Vec<TableRow> = rdr
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn json_matches_record_schema() {
        let rows = table();
        let bytes = emit(&rows, Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 22);
        for obj in arr {
            let obj = obj.as_object().unwrap();
            let mut keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
            keys.sort_unstable();
            assert_eq!(
                keys,
                [
                    "discrepancy",
                    "estimator",
                    "formula_mse",
                    "note",
                    "pre_vs_reference",
                    "printed_mse",
                    "printed_pre",
                    "relative_gap"
                ]
            );
            assert!(obj["formula_mse"].is_f64());
            assert!(obj["discrepancy"].is_boolean());
        }
    }

    #[test]
    fn text_has_one_line_per_row() {
        let rows = table();
        let text = String::from_utf8(emit(&rows, Format::Text).unwrap()).unwrap();
        let body: Vec<&str> = text.lines().skip(2).take_while(|l| !l.is_empty()).collect();
        assert_eq!(body.len(), 22);
        assert_eq!(
            emit(&rows, Format::Text).unwrap(),
            emit(&rows, Format::Text).unwrap()
        );
    }

    #[test]
    fn unknown_format_and_empty_rows() {
        assert!(matches!(
            "xml".parse::<Format>(),
            Err(Error::UnknownFormat(_))
        ));
        assert!(emit::<TableRow>(&[], Format::Csv).is_err());
    }
}
