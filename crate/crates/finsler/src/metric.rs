//! Metric specifications: chart dimension, Riemannian data `a_ij(x)` and
//! 1-form `b_i(x)` as analytic expressions, a deformation profile, and the
//! chart sampling box.

use crate::error::FinslerError;
use crate::expr::{self, Expr};
use crate::phi::PhiFamily;

#[derive(Clone, Debug)]
pub struct ChartBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ChartBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self, FinslerError> {
        if min.len() != max.len() {
            return Err(FinslerError::InvalidMetric(
                "chart box min/max dimension mismatch".into(),
            ));
        }
        if min.iter().zip(&max).any(|(lo, hi)| lo >= hi) {
            return Err(FinslerError::InvalidMetric(
                "chart box must have min < max per coordinate".into(),
            ));
        }
        Ok(ChartBox { min, max })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        ChartBox {
            min: vec![-half_width; dim],
            max: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }
}

/// A complete (alpha, beta)-type metric specification on one chart.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    pub dim: usize,
    /// Full symmetric matrix of expressions.
    pub a: Vec<Vec<Expr>>,
    pub b: Vec<Expr>,
    pub phi: PhiFamily,
    pub chart: ChartBox,
    /// Identifier for reports ("zoo:hopf-randers" or a file path).
    pub label: String,
}

impl MetricSpec {
    /// Builds a spec from the lower triangle of `a` (row i holds entries
    /// `a_i0 .. a_ii`), completing by symmetry.
    pub fn new(
        dim: usize,
        a_lower: Vec<Vec<Expr>>,
        b: Vec<Expr>,
        phi: PhiFamily,
        chart: ChartBox,
        label: String,
    ) -> Result<Self, FinslerError> {
        if !(2..=4).contains(&dim) {
            return Err(FinslerError::InvalidMetric(format!(
                "chart dimension must be 2..4, got {dim}"
            )));
        }
        if a_lower.len() != dim {
            return Err(FinslerError::InvalidMetric(format!(
                "matrix a needs {dim} rows, got {}",
                a_lower.len()
            )));
        }
        for (i, row) in a_lower.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(FinslerError::InvalidMetric(format!(
                    "row {i} of the lower triangle of a must have {} entries, got {}",
                    i + 1,
                    row.len()
                )));
            }
        }
        if b.len() != dim {
            return Err(FinslerError::InvalidMetric(format!(
                "1-form b needs {dim} entries, got {}",
                b.len()
            )));
        }
        if chart.dim() != dim {
            return Err(FinslerError::InvalidMetric(
                "chart box dimension mismatch".into(),
            ));
        }
        phi.validate()?;
        let mut a = vec![vec![Expr { kind: expr::ExprKind::Num(0.0), offset: 0 }; dim]; dim];
        for (i, row) in a_lower.into_iter().enumerate() {
            for (j, e) in row.into_iter().enumerate() {
                a[i][j] = e.clone();
                a[j][i] = e;
            }
        }
        for e in a.iter().flat_map(|r| r.iter()).chain(b.iter()) {
            if let Some(v) = e.max_var() {
                if v >= dim {
                    return Err(FinslerError::InvalidMetric(format!(
                        "expression uses x{} but chart dimension is {dim}",
                        v + 1
                    )));
                }
            }
        }
        Ok(MetricSpec { dim, a, b, phi, chart, label })
    }

    /// Convenience constructor from expression strings.
    pub fn from_strings(
        dim: usize,
        a_lower: &[Vec<String>],
        b: &[String],
        phi: PhiFamily,
        chart: ChartBox,
        label: String,
    ) -> Result<Self, FinslerError> {
        let a_exprs = a_lower
            .iter()
            .map(|row| row.iter().map(|s| expr::parse(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let b_exprs = b.iter().map(|s| expr::parse(s)).collect::<Result<Vec<_>, _>>()?;
        MetricSpec::new(dim, a_exprs, b_exprs, phi, chart, label)
    }

    /// Euclidean `a`, constant 1-form `(b, 0, ..)`, arbitrary profile.
    pub fn flat_constant_form(
        dim: usize,
        b_len: f64,
        phi: PhiFamily,
        label: String,
    ) -> Result<Self, FinslerError> {
        let mut a_lower = Vec::new();
        for i in 0..dim {
            let mut row = vec!["0".to_string(); i];
            row.push("1".to_string());
            a_lower.push(row);
        }
        let mut b = vec!["0".to_string(); dim];
        b[0] = format!("{b_len}");
        MetricSpec::from_strings(dim, &a_lower, &b, phi, ChartBox::cube(dim, 1.0), label)
    }
}
