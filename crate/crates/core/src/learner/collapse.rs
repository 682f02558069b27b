//! Renormalized coordinates and a binned measure of how well they collapse
//! onto one curve.

use std::io::Write;

use crate::dataset::{write_table, DimensionlessDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Rows of `(Π'_1, …, Π'_n, Π ∏ Π_k^{ξ_k})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CollapsedTable {
    /// Number of abscissa columns.
    pub fn arguments(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_table(writer, &self.columns, self.rows.iter().map(Vec::as_slice))
    }
}

/// Evaluates the renormalized arguments and the renormalized target for
/// every row.
pub fn collapse(
    data: &DimensionlessDataset,
    xi_matrix: &Matrix,
    xi_target: &[f64],
) -> Result<CollapsedTable> {
    let (n, s) = (data.retained(), data.scaling());
    if xi_matrix.rows() != n || (n > 0 && xi_matrix.cols() != s) || xi_target.len() != s {
        return Err(Error::Config(format!(
            "exponents must be {n} x {s} plus {s} prefactor exponents"
        )));
    }
    let all_finite = (0..n).all(|j| xi_matrix.row(j).iter().all(|x| x.is_finite()))
        && xi_target.iter().all(|x| x.is_finite());
    if !all_finite {
        return Err(Error::Config("exponents must be finite".into()));
    }
    let names = data.columns();
    let mut columns: Vec<String> = (0..n).map(|j| format!("{}'", names[1 + j])).collect();
    columns.push(format!("{}'", names[0]));

    let mut rows = Vec::with_capacity(data.len());
    for r in 0..data.len() {
        let logs = data.log_row(r);
        let vals = data.row(r);
        let scaling_logs = &logs[1 + n..];
        let mut out = Vec::with_capacity(n + 1);
        for j in 0..n {
            let shift: f64 = xi_matrix.row(j).iter().zip(scaling_logs).map(|(x, l)| x * l).sum();
            // exact passthrough when nothing is applied
            out.push(if shift == 0.0 { vals[1 + j] } else { (logs[1 + j] + shift).exp() });
        }
        let shift: f64 = xi_target.iter().zip(scaling_logs).map(|(x, l)| x * l).sum();
        out.push(if shift == 0.0 { vals[0] } else { (logs[0] + shift).exp() });
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation { row: r });
        }
        rows.push(out);
    }
    Ok(CollapsedTable { columns, rows })
}

/// Mean within-bin standard deviation of the ordinate divided by its global
/// standard deviation; 0 means a perfect collapse.
///
/// Each abscissa is cut into `bins` log-spaced intervals over its range (a
/// grid of `bins^n` cells for `n` abscissae). Cells with fewer than two rows
/// are dropped; the mean over the remaining cells is unweighted. A constant
/// ordinate gives 0.
pub fn collapse_quality(table: &CollapsedTable, bins: usize) -> Result<f64> {
    if table.rows.is_empty() {
        return Err(Error::DegenerateBins("table is empty".into()));
    }
    if bins == 0 {
        return Err(Error::DegenerateBins("bin count must be positive".into()));
    }
    let n = table.arguments();
    let ordinate: Vec<f64> = table.rows.iter().map(|r| r[n]).collect();
    let global = std_dev(&ordinate);
    if global == 0.0 {
        return Ok(0.0);
    }

    // log-spaced edges per abscissa
    let mut cell_of = vec![0usize; table.rows.len()];
    for j in 0..n {
        let logs: Vec<f64> = table.rows.iter().map(|r| r[j].ln()).collect();
        let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::DegenerateBins(format!(
                "abscissa {} has non-positive values",
                table.columns[j]
            )));
        }
        let width = (hi - lo) / bins as f64;
        for (c, l) in cell_of.iter_mut().zip(&logs) {
            let b = if width > 0.0 {
                (((l - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            *c = *c * bins + b;
        }
    }

    let mut groups: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for (c, y) in cell_of.iter().zip(&ordinate) {
        groups.entry(*c).or_default().push(*y);
    }
    let spreads: Vec<f64> = groups
        .values()
        .filter(|g| g.len() >= 2)
        .map(|g| std_dev(g))
        .collect();
    if spreads.is_empty() {
        return Err(Error::DegenerateBins(
            "no bin holds two or more rows".into(),
        ));
    }
    Ok(spreads.iter().sum::<f64>() / spreads.len() as f64 / global)
}

/// Population standard deviation.
fn std_dev(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{generate_laminar_dataset, LaminarGridSpec};

    #[test]
    fn zero_exponents_pass_columns_through() {
        let data = generate_laminar_dataset(&LaminarGridSpec {
            re_tau_count: 4,
            y_plus_count: 5,
            ..LaminarGridSpec::default()
        })
        .unwrap();
        let t = collapse(&data, &Matrix::zeros(1, 1), &[0.0]).unwrap();
        assert_eq!(t.columns, ["y+'", "u+'"]);
        for (r, row) in t.rows.iter().enumerate() {
            assert_eq!(row, &[data.value(r, 1), data.value(r, 0)]);
        }
    }

    #[test]
    fn true_laminar_exponents_land_on_curve() {
        let data = generate_laminar_dataset(&LaminarGridSpec::default()).unwrap();
        let t = collapse(&data, &Matrix::from_rows(&[[-1.0]]), &[-1.0]).unwrap();
        for row in &t.rows {
            let (w, u) = (row[0], row[1]);
            assert!((u - (w - w * w / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_ordinate_is_perfect() {
        let t = CollapsedTable {
            columns: vec!["x".into(), "y".into()],
            rows: (1..10).map(|i| vec![i as f64, 3.0]).collect(),
        };
        assert_eq!(collapse_quality(&t, 4).unwrap(), 0.0);
    }

    #[test]
    fn lonely_rows_are_degenerate() {
        let t = CollapsedTable {
            columns: vec!["x".into(), "y".into()],
            rows: vec![vec![1.0, 1.0], vec![100.0, 2.0]],
        };
        assert!(matches!(collapse_quality(&t, 10), Err(Error::DegenerateBins(_))));
    }

    #[test]
    fn two_argument_grid_binning() {
        // ordinate depends only on the first abscissa's bin; the second
        // abscissa splits cells without adding spread
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let x = if i < 20 { 1.0 } else { 10.0 };
                let z = 1.0 + (i % 2) as f64;
                vec![x, z, x]
            })
            .collect();
        let t = CollapsedTable {
            columns: vec!["a".into(), "b".into(), "y".into()],
            rows,
        };
        assert_eq!(collapse_quality(&t, 3).unwrap(), 0.0);
    }
}
