use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response vector with a design matrix whose first column is the intercept.
///
/// Rows are stored contiguously (row-major), since the solvers access the
/// design one observation at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    d: usize,
    time_index: Option<Vec<String>>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a response and design rows, validating every
    /// invariant (finite entries, leading unit column, full column rank).
    pub fn new(y: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::domain("design rows have unequal lengths"));
        }
        let x: Vec<f64> = rows.iter().flatten().copied().collect();
        let names = default_names(d);
        Self::from_row_major(y, x, d, names)
    }

    /// Builds a dataset from a row-major `T x d` design.
    pub fn from_row_major(y: Vec<f64>, x: Vec<f64>, d: usize, column_names: Vec<String>) -> Result<Self> {
        let data = Self {
            y,
            x,
            d,
            time_index: None,
            column_names,
        };
        data.validate()?;
        Ok(data)
    }

    /// Intercept-only design for a univariate sample.
    pub fn intercept_only(y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::from_row_major(y, vec![1.0; n], 1, vec!["intercept".into()])
    }

    pub fn with_time_index(mut self, index: Vec<String>) -> Result<Self> {
        if index.len() != self.n() {
            return Err(Error::domain(format!(
                "time index has {} labels for {} observations",
                index.len(),
                self.n()
            )));
        }
        self.time_index = Some(index);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::domain("dataset has no observations"));
        }
        if self.d == 0 {
            return Err(Error::domain("design has no columns"));
        }
        if self.x.len() != n * self.d {
            return Err(Error::domain(format!(
                "design has {} entries, expected {} x {}",
                self.x.len(),
                n,
                self.d
            )));
        }
        if self.column_names.len() != self.d {
            return Err(Error::domain("column name count does not match design width"));
        }
        if let Some(t) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite response at row {t}")));
        }
        if let Some(i) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite design entry at row {}, column {}",
                i / self.d,
                i % self.d
            )));
        }
        if let Some(t) = (0..n).find(|&t| self.x[t * self.d] != 1.0) {
            return Err(Error::domain(format!("first design column is not 1 at row {t}")));
        }
        let rank = self.rank();
        if rank < self.d {
            return Err(Error::RankDeficient {
                rank,
                columns: self.d,
            });
        }
        Ok(())
    }

    /// Numerical column rank of the design.
    pub fn rank(&self) -> usize {
        // Columns are scaled to unit norm first so the threshold is relative.
        let n = self.n();
        let mut m = DMatrix::from_row_slice(n, self.d, &self.x);
        for mut col in m.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        let sv = m.singular_values();
        let max = sv.max();
        if max == 0.0 {
            return 0;
        }
        let tol = max * 1e-10 * (n.max(self.d) as f64).sqrt();
        sv.iter().filter(|&&s| s > tol).count()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Row-major design entries.
    pub fn x_row_major(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.x[t * self.d..(t + 1) * self.d]
    }

    pub fn x_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n(), self.d, &self.x)
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn time_index(&self) -> Option<&[String]> {
        self.time_index.as_deref()
    }

    /// Sample mean of the design rows.
    pub fn xbar(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.x.chunks_exact(self.d) {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        let n = self.n() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Fitted values `X beta`.
    pub fn fitted(&self, beta: &[f64]) -> Vec<f64> {
        self.x.chunks_exact(self.d).map(|r| dot(r, beta)).collect()
    }

    /// Replaces the response, keeping the design.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::domain("replacement response has the wrong length"));
        }
        if let Some(t) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite response at row {t}")));
        }
        Ok(Self { y, ..self.clone() })
    }

    /// The dataset with `y` negated: upper-tail questions about `y` become
    /// lower-tail questions about the reflected data.
    pub fn reflect(&self) -> Self {
        Self {
            y: self.y.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    /// Observations at `indices` (in the given order). Fails with
    /// [`Error::RankDeficient`] if the selected design loses rank.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut y = Vec::with_capacity(indices.len());
        let mut x = Vec::with_capacity(indices.len() * self.d);
        for &t in indices {
            y.push(self.y[t]);
            x.extend_from_slice(self.row(t));
        }
        let time_index = self
            .time_index
            .as_ref()
            .map(|ix| indices.iter().map(|&t| ix[t].clone()).collect());
        let data = Self {
            y,
            x,
            d: self.d,
            time_index,
            column_names: self.column_names.clone(),
        };
        data.validate()?;
        Ok(data)
    }
}

fn default_names(d: usize) -> Vec<String> {
    (0..d)
        .map(|j| if j == 0 { "intercept".to_string() } else { format!("x{j}") })
        .collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Dataset::intercept_only(vec![]).is_err());
        assert!(Dataset::new(vec![1.0, 2.0], &[vec![1.0, 0.0], vec![2.0, 1.0]]).is_err());
        let err = Dataset::new(vec![1.0, 2.0, 3.0], &[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 1, columns: 2 }));
        assert!(Dataset::new(vec![1.0, f64::NAN], &[vec![1.0], vec![1.0]]).is_err());
        let ok = Dataset::new(vec![1.0, 3.0], &[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(ok.xbar(), vec![1.0, 0.5]);
        assert_eq!(ok.reflect().y(), &[-1.0, -3.0]);
        assert!(ok.subset(&[0, 0]).is_err());
    }

    #[test]
    fn time_index_follows_subsets() {
        let d = Dataset::intercept_only(vec![1.0, 2.0, 3.0])
            .unwrap()
            .with_time_index(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.y(), &[3.0, 1.0]);
        assert_eq!(s.time_index().unwrap(), &["c".to_string(), "a".to_string()]);
    }
}
