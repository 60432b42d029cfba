//! Problem files: strict JSON with defaults filled in on parse.

use std::collections::BTreeMap;
use std::path::Path;

use hamsfl::{
    AnalyzerConfig, ContinuationConfig, HamiltonianFamily, MatrixPoly, MonodromyConfig, SflConfig, TrigMatrixPath,
    CATALOG,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A polynomial in lambda whose coefficients are `2n x 2n` row-major tables.
pub type PolyTable = Vec<Vec<Vec<f64>>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigMatrixSpec {
    /// Coefficients of `lambda^0, lambda^1, ...` of the constant part.
    pub constant: PolyTable,
    /// `cos[j - 1]` multiplies `cos(j t)`.
    #[serde(default)]
    pub cos: Vec<PolyTable>,
    #[serde(default)]
    pub sin: Vec<PolyTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trig_matrix: Option<TrigMatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_zero: f64,
    pub tol_res: f64,
    pub kernel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_zero: 1e-8, tol_res: 1e-9, kernel_tol: 1e-7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSpec {
    pub amp_max: f64,
    pub seed_amp: f64,
    pub max_steps: usize,
    pub window: [f64; 2],
    /// Launch points; empty means every kernel candidate found in the interval.
    pub lambda_star: Vec<f64>,
}

impl Default for ContinuationSpec {
    fn default() -> Self {
        let c = ContinuationConfig::default();
        Self {
            amp_max: c.amp_max,
            seed_amp: c.seed_amp,
            max_steps: c.max_steps,
            window: [c.window.0, c.window.1],
            lambda_star: Vec::new(),
        }
    }
}

fn default_k() -> usize {
    8
}

fn default_nt() -> usize {
    64
}

fn default_grid() -> usize {
    201
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    pub family: FamilySpec,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    #[serde(rename = "N_t", default = "default_nt")]
    pub n_t: usize,
    /// Points of the uniform lambda grid used by scans.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub relax_ii: bool,
    #[serde(default)]
    pub continuation: ContinuationSpec,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { field: field.into(), message: message.into() }
}

fn matrix(table: &[Vec<f64>], dim: usize, field: &str) -> Result<DMatrix<f64>, CliError> {
    if table.len() != dim || table.iter().any(|row| row.len() != dim) {
        return Err(invalid(field, format!("expected a {dim} x {dim} table")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| table[i][j]))
}

fn poly(table: &PolyTable, dim: usize, field: &str) -> Result<MatrixPoly<f64>, CliError> {
    if table.is_empty() {
        return Err(invalid(field, "polynomial needs at least one coefficient"));
    }
    let coeffs = table
        .iter()
        .enumerate()
        .map(|(i, m)| matrix(m, dim, &format!("{field}[{i}]")))
        .collect::<Result<_, _>>()?;
    Ok(MatrixPoly::new(coeffs))
}

impl ProblemSpec {
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let parsed: Self = serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        parsed.validate()?;
        Ok(parsed)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !self.lambda_minus.is_finite() {
            return Err(invalid("lambda_minus", "must be finite"));
        }
        if !self.lambda_plus.is_finite() {
            return Err(invalid("lambda_plus", "must be finite"));
        }
        if self.lambda_minus >= self.lambda_plus {
            return Err(invalid(
                "lambda_minus",
                format!("must be below lambda_plus ({} >= {})", self.lambda_minus, self.lambda_plus),
            ));
        }
        if self.k < 1 {
            return Err(invalid("K", "must be at least 1"));
        }
        if self.n_t < 32 {
            return Err(invalid("N_t", "must be at least 32"));
        }
        if self.grid < 2 {
            return Err(invalid("grid", "needs at least 2 points"));
        }
        let t = &self.tolerances;
        for (name, v) in [("tol_zero", t.tol_zero), ("tol_res", t.tol_res), ("kernel_tol", t.kernel_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(&format!("tolerances.{name}"), "must be positive"));
            }
        }
        let c = &self.continuation;
        if !(c.seed_amp > 0.0 && c.amp_max > c.seed_amp) {
            return Err(invalid("continuation.seed_amp", "need 0 < seed_amp < amp_max"));
        }
        if c.max_steps < 1 {
            return Err(invalid("continuation.max_steps", "must be at least 1"));
        }
        if !(c.window[0] < c.window[1]) {
            return Err(invalid("continuation.window", "must be an increasing pair"));
        }
        match (&self.family.builtin, &self.family.trig_matrix) {
            (Some(name), None) => {
                if !CATALOG.contains(&name.as_str()) {
                    return Err(invalid(
                        "family.builtin",
                        format!("unknown builtin `{name}`; available: {}", CATALOG.join(", ")),
                    ));
                }
            }
            (None, Some(_)) => {
                if !self.family.params.is_empty() {
                    return Err(invalid("family.params", "only builtin families take parameters"));
                }
            }
            _ => return Err(invalid("family", "give exactly one of `builtin` or `trig_matrix`")),
        }
        let fam = self.family()?;
        if fam.n() != self.n {
            return Err(invalid("n", format!("family `{}` is in R^{}, not R^{}", fam.name, 2 * fam.n(), 2 * self.n)));
        }
        Ok(())
    }

    pub fn family(&self) -> Result<HamiltonianFamily<f64>, CliError> {
        if let Some(name) = &self.family.builtin {
            return hamsfl::builtin_with_params(name, &self.family.params)
                .map_err(|e| invalid("family", e.to_string()));
        }
        let tm = self.family.trig_matrix.as_ref().ok_or_else(|| invalid("family", "missing"))?;
        let dim = 2 * self.n;
        let harmonics = |tables: &[PolyTable], field: &str| -> Result<Vec<MatrixPoly<f64>>, CliError> {
            tables.iter().enumerate().map(|(j, t)| poly(t, dim, &format!("{field}[{j}]"))).collect()
        };
        let path = TrigMatrixPath::new(
            self.n,
            poly(&tm.constant, dim, "family.trig_matrix.constant")?,
            harmonics(&tm.cos, "family.trig_matrix.cos")?,
            harmonics(&tm.sin, "family.trig_matrix.sin")?,
        )
        .map_err(|e| invalid("family.trig_matrix", e.to_string()))?;
        Ok(HamiltonianFamily::linear("trig_matrix", path))
    }

    pub fn sfl_config(&self) -> SflConfig {
        SflConfig { tol_zero: self.tolerances.tol_zero, ..SflConfig::default() }
    }

    pub fn monodromy_config(&self) -> MonodromyConfig {
        MonodromyConfig { kernel_tol: self.tolerances.kernel_tol, ..MonodromyConfig::default() }
    }

    pub fn analyzer_config(&self) -> AnalyzerConfig {
        AnalyzerConfig {
            k: self.k,
            envelope_nt: self.n_t,
            relax_ii: self.relax_ii,
            sfl: self.sfl_config(),
            monodromy: self.monodromy_config(),
            ..AnalyzerConfig::default()
        }
    }

    pub fn continuation_config(&self) -> ContinuationConfig {
        let c = &self.continuation;
        ContinuationConfig {
            k: self.k,
            tol_res: self.tolerances.tol_res,
            kernel_tol: self.tolerances.kernel_tol,
            seed_amp: c.seed_amp,
            amp_max: c.amp_max,
            max_steps: c.max_steps,
            window: (c.window[0], c.window[1]),
            ..ContinuationConfig::default()
        }
    }

    /// Uniform scan grid over `[lambda_minus, lambda_plus]`, ends included.
    pub fn lambda_grid(&self) -> Vec<f64> {
        let m = self.grid - 1;
        let (a, b) = (self.lambda_minus, self.lambda_plus);
        (0..=m).map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 }).collect()
    }
}

pub fn parse_problem(path: &Path) -> Result<ProblemSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    ProblemSpec::parse_str(&text)
}
