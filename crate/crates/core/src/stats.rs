//! Descriptive statistics and association tests.
//!
//! Normal fits use the population (divide by N) standard deviation.
//! Chi-square p-values come from the regularized upper incomplete gamma
//! function, evaluated by series or continued fraction to a relative term
//! tolerance of 1e-10.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and population standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mean: f64,
    pub std: f64,
}

/// Fits a normal distribution by moments.
pub fn normal_fit(values: &[f64]) -> Result<NormalFit> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(NormalFit {
        mean,
        std: var.sqrt(),
    })
}

/// One bin of a fixed-width histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Bin index `i`; the bin covers `[origin + i*w, origin + (i+1)*w)`.
    pub index: i64,
    pub count: u64,
}

/// Fixed-width histogram over the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub origin: f64,
    pub bin_width: f64,
    /// Non-empty bins sorted by index.
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// Center value of bin `index`.
    pub fn center(&self, index: i64) -> f64 {
        self.origin + (index as f64 + 0.5) * self.bin_width
    }

    /// Bin with the highest count; ties go to the lower index.
    pub fn mode(&self) -> HistogramBin {
        let mut best = self.bins[0];
        for &bin in &self.bins[1..] {
            if bin.count > best.count {
                best = bin;
            }
        }
        best
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Bins values into `floor((v - origin) / bin_width)`.
pub fn histogram(values: &[f64], bin_width: f64, origin: f64) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidBinWidth(bin_width));
    }
    if values.iter().any(|v| !v.is_finite()) || !origin.is_finite() {
        return Err(Error::NonFinite("values"));
    }
    let mut counts = std::collections::BTreeMap::new();
    for &v in values {
        let index = ((v - origin) / bin_width).floor() as i64;
        *counts.entry(index).or_insert(0u64) += 1;
    }
    Ok(Histogram {
        origin,
        bin_width,
        bins: counts
            .into_iter()
            .map(|(index, count)| HistogramBin { index, count })
            .collect(),
    })
}

/// Labelled contingency table of observation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    /// Builds a table, requiring at least 2x2 and consistent shapes.
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if counts.len() < 2 || col_labels.len() < 2 {
            return Err(Error::TableTooSmall);
        }
        if counts.len() != row_labels.len() {
            return Err(Error::DegenerateTable(format!(
                "{} rows but {} row labels",
                counts.len(),
                row_labels.len()
            )));
        }
        if counts.iter().any(|row| row.len() != col_labels.len()) {
            return Err(Error::DegenerateTable(
                "row widths do not match column labels".to_string(),
            ));
        }
        Ok(Self {
            row_labels,
            col_labels,
            counts,
        })
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_total(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Copy of the table with all-zero columns removed.
    ///
    /// Fails with [`Error::DegenerateTable`] if fewer than two columns
    /// remain.
    pub fn drop_zero_columns(&self) -> Result<ContingencyTable> {
        let keep: Vec<usize> = (0..self.cols())
            .filter(|&j| self.col_total(j) > 0)
            .collect();
        if keep.len() < 2 {
            return Err(Error::DegenerateTable(format!(
                "only {} non-empty column(s)",
                keep.len()
            )));
        }
        Ok(ContingencyTable {
            row_labels: self.row_labels.clone(),
            col_labels: keep.iter().map(|&j| self.col_labels[j].clone()).collect(),
            counts: self
                .counts
                .iter()
                .map(|row| keep.iter().map(|&j| row[j]).collect())
                .collect(),
        })
    }
}

/// Result of a chi-square test of independence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on a contingency table.
///
/// Expected counts are `row_total * col_total / total`; every margin must
/// be positive. The p-value is the upper tail of the chi-square
/// distribution with `(rows - 1) * (cols - 1)` degrees of freedom.
pub fn chi_square_independence(table: &ContingencyTable) -> Result<ChiSquareResult> {
    for i in 0..table.rows() {
        if table.row_total(i) == 0 {
            return Err(Error::ZeroMarginal {
                kind: "row",
                index: i,
            });
        }
    }
    for j in 0..table.cols() {
        if table.col_total(j) == 0 {
            return Err(Error::ZeroMarginal {
                kind: "column",
                index: j,
            });
        }
    }
    let total = table.total() as f64;
    let mut statistic = 0.0;
    for i in 0..table.rows() {
        let ri = table.row_total(i) as f64;
        for j in 0..table.cols() {
            let expected = ri * table.col_total(j) as f64 / total;
            let diff = table.counts[i][j] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let dof = (table.rows() - 1) * (table.cols() - 1);
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: upper_gamma_regularized(dof as f64 / 2.0, statistic / 2.0),
    })
}

/// Difference of first-column proportions between the two rows of a 2x2
/// table: `counts[0][0]/row0 - counts[1][0]/row1`.
pub fn diff_proportions(table: &ContingencyTable) -> Result<f64> {
    if table.rows() != 2 || table.cols() != 2 {
        return Err(Error::NotTwoByTwo {
            rows: table.rows(),
            cols: table.cols(),
        });
    }
    for i in 0..2 {
        if table.row_total(i) == 0 {
            return Err(Error::ZeroMarginal {
                kind: "row",
                index: i,
            });
        }
    }
    let p0 = table.counts[0][0] as f64 / table.row_total(0) as f64;
    let p1 = table.counts[1][0] as f64 / table.row_total(1) as f64;
    Ok(p0 - p1)
}

const GAMMA_TOL: f64 = 1e-10;
const GAMMA_MAX_ITER: usize = 10_000;

/// Lanczos approximation of `ln Gamma(z)` for `z > 0`.
fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut sum = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        sum += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)` for `a > 0`, `x >= 0`.
fn upper_gamma_regularized(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        // lower series, then complement
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..GAMMA_MAX_ITER {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_TOL {
                break;
            }
        }
        (1.0 - sum * log_prefix.exp()).clamp(0.0, 1.0)
    } else {
        // continued fraction (modified Lentz)
        const FPMIN: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_TOL {
                break;
            }
        }
        (log_prefix.exp() * h).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(counts: &[&[u64]]) -> ContingencyTable {
        ContingencyTable::new(
            (0..counts.len()).map(|i| format!("r{i}")).collect(),
            (0..counts[0].len()).map(|j| format!("c{j}")).collect(),
            counts.iter().map(|row| row.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn normal_fit_known_sample() {
        let fit = normal_fit(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(fit.mean, 5.0);
        assert_eq!(fit.std, 2.0);
    }

    #[test]
    fn normal_fit_degenerate_and_errors() {
        let fit = normal_fit(&[3.0]).unwrap();
        assert_eq!(fit.mean, 3.0);
        assert_eq!(fit.std, 0.0);
        assert!(matches!(normal_fit(&[]), Err(Error::EmptyInput)));
        assert!(matches!(
            normal_fit(&[1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn histogram_bins_and_mode() {
        let h = histogram(&[60.1, 60.4, 59.9, 72.0], 2.0, 0.0).unwrap();
        let by_index: Vec<(i64, u64)> = h.bins.iter().map(|b| (b.index, b.count)).collect();
        assert_eq!(by_index, vec![(29, 1), (30, 2), (36, 1)]);
        assert_eq!(h.mode().index, 30);
        assert_eq!(h.center(30), 61.0);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn histogram_handles_negatives_and_tie_breaks_low() {
        let h = histogram(&[-0.5, 1.0, 3.0], 2.0, 0.0).unwrap();
        assert_eq!(h.bins[0].index, -1);
        // counts are 1,1,1; mode must be the lowest index
        assert_eq!(h.mode().index, -1);
        assert!(matches!(
            histogram(&[1.0], 0.0, 0.0),
            Err(Error::InvalidBinWidth(_))
        ));
        assert!(matches!(histogram(&[], 1.0, 0.0), Err(Error::EmptyInput)));
    }

    #[test]
    fn table_shape_validation() {
        assert!(matches!(
            ContingencyTable::new(
                vec!["a".into()],
                vec!["x".into(), "y".into()],
                vec![vec![1, 2]]
            ),
            Err(Error::TableTooSmall)
        ));
        assert!(matches!(
            ContingencyTable::new(
                vec!["a".into(), "b".into()],
                vec!["x".into(), "y".into()],
                vec![vec![1, 2], vec![1]]
            ),
            Err(Error::DegenerateTable(_))
        ));
    }

    #[test]
    fn drop_zero_columns_keeps_occupied() {
        let t = table(&[&[5, 0, 3], &[2, 0, 4]]);
        let d = t.drop_zero_columns().unwrap();
        assert_eq!(d.col_labels, vec!["c0", "c2"]);
        assert_eq!(d.counts, vec![vec![5, 3], vec![2, 4]]);
        let t = table(&[&[5, 0, 0], &[2, 0, 0]]);
        assert!(matches!(
            t.drop_zero_columns(),
            Err(Error::DegenerateTable(_))
        ));
    }

    // Reference statistics and p-values computed with an independent
    // arbitrary-precision implementation of the chi-square upper tail.
    #[test]
    fn chi_square_matches_reference_values() {
        let cases: &[(&[&[u64]], f64, usize, f64)] = &[
            (&[&[10, 10], &[10, 10]], 0.0, 1, 1.0),
            (&[&[20, 0], &[0, 20]], 40.0, 1, 2.539628589470865e-10),
            (
                &[&[10, 20], &[30, 40]],
                0.793_650_793_650_793_6,
                1,
                0.37299848361348712,
            ),
            (&[&[5, 15], &[15, 5]], 10.0, 1, 0.0015654022580025497),
            (
                &[&[12, 8, 30], &[7, 23, 10]],
                17.681027164685908,
                2,
                0.00014474838737358218,
            ),
            (
                &[&[1, 2], &[3, 4]],
                0.079_365_079_365_079_36,
                1,
                0.778_159_686_176_165_8,
            ),
            (
                &[&[50, 30], &[20, 60]],
                22.857142857142857,
                1,
                1.744996250873809e-6,
            ),
            (
                &[&[8, 12, 5], &[9, 7, 14], &[20, 2, 3]],
                23.445201045201045,
                4,
                0.00010316091141927436,
            ),
            (
                &[&[100, 200], &[150, 250]],
                1.2962962962962963,
                1,
                0.25489085754716732,
            ),
            (
                &[&[3, 7, 10], &[5, 5, 10]],
                0.833_333_333_333_333_4,
                2,
                0.659_240_630_200_443_8,
            ),
        ];
        for (counts, stat, dof, p) in cases {
            let r = chi_square_independence(&table(counts)).unwrap();
            assert!(
                (r.statistic - stat).abs() <= 1e-9 * stat.max(1.0),
                "stat {} vs {stat}",
                r.statistic
            );
            assert_eq!(r.dof, *dof);
            assert!(
                (r.p_value - p).abs() <= 1e-8 * p.max(1e-12),
                "p {} vs {p}",
                r.p_value
            );
        }
    }

    #[test]
    fn chi_square_rejects_zero_margins() {
        let t = table(&[&[0, 0], &[5, 5]]);
        assert!(matches!(
            chi_square_independence(&t),
            Err(Error::ZeroMarginal {
                kind: "row",
                index: 0
            })
        ));
        let t = table(&[&[0, 5], &[0, 5]]);
        assert!(matches!(
            chi_square_independence(&t),
            Err(Error::ZeroMarginal {
                kind: "column",
                index: 0
            })
        ));
    }

    #[test]
    fn diff_proportions_cases() {
        assert_eq!(
            diff_proportions(&table(&[&[30, 10], &[10, 30]])).unwrap(),
            0.5
        );
        assert_eq!(
            diff_proportions(&table(&[&[20, 0], &[0, 20]])).unwrap(),
            1.0
        );
        assert_eq!(
            diff_proportions(&table(&[&[0, 20], &[0, 15]])).unwrap(),
            0.0
        );
        assert!(matches!(
            diff_proportions(&table(&[&[1, 2, 3], &[4, 5, 6]])),
            Err(Error::NotTwoByTwo { .. })
        ));
        assert!(matches!(
            diff_proportions(&table(&[&[0, 0], &[5, 5]])),
            Err(Error::ZeroMarginal { .. })
        ));
    }

    #[test]
    fn ln_gamma_known_values() {
        // Gamma(1) = Gamma(2) = 1, Gamma(5) = 24, Gamma(0.5) = sqrt(pi)
        assert!(ln_gamma(1.0).abs() < 1e-12);
        assert!(ln_gamma(2.0).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }
}
