//! Uniform result rows for statistical and exact checks.

use serde::Serialize;
use std::fmt::Write;

/// Default tolerance in standard errors.
pub const SIGMA_BUDGET: f64 = 4.0;

/// One check: an empirical value against a prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub algebra: String,
    pub params: String,
    pub empirical: f64,
    pub predicted: f64,
    /// Standard error of `empirical - predicted`, or an absolute tolerance
    /// for exact checks.
    pub sigma: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `|empirical - predicted| ≤ k·sigma`.
    pub fn within_sigma(
        check: impl Into<String>,
        algebra: impl Into<String>,
        params: impl Into<String>,
        empirical: f64,
        predicted: f64,
        sigma: f64,
        k: f64,
    ) -> Self {
        let diff = (empirical - predicted).abs();
        let pass = diff <= k * sigma || diff < 1e-12;
        CheckRow {
            check: check.into(),
            algebra: algebra.into(),
            params: params.into(),
            empirical,
            predicted,
            sigma,
            pass: pass && empirical.is_finite(),
        }
    }

    /// A row whose verdict was decided by the caller.
    pub fn verdict(
        check: impl Into<String>,
        algebra: impl Into<String>,
        params: impl Into<String>,
        empirical: f64,
        predicted: f64,
        sigma: f64,
        pass: bool,
    ) -> Self {
        CheckRow {
            check: check.into(),
            algebra: algebra.into(),
            params: params.into(),
            empirical,
            predicted,
            sigma,
            pass,
        }
    }

    /// `(empirical - predicted) / sigma`.
    pub fn z(&self) -> f64 {
        crate::mc::sigma_units(self.empirical, self.predicted, self.sigma)
    }
}

/// CSV with header `check,algebra,params,empirical,predicted,sigma,z,pass`.
pub fn rows_to_csv(rows: &[CheckRow]) -> String {
    let mut out = String::from("check,algebra,params,empirical,predicted,sigma,z,pass\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.check,
            quote(&r.algebra),
            quote(&r.params),
            r.empirical,
            r.predicted,
            r.sigma,
            r.z(),
            r.pass
        )
        .unwrap();
    }
    out
}

fn quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.pass)
}
