use super::{GraphError, ViewId};

/// Largest `|s(i,j) − s(j,i)|` that is silently averaged away.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

/// Symmetric view-similarity matrix with unit diagonal, entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    s: Vec<f64>,
}

impl SimilarityMatrix {
    /// Validates a row-major `n × n` matrix. Off-diagonal asymmetries up to
    /// [`SYMMETRY_TOLERANCE`] are averaged, larger ones rejected.
    pub fn new(n: usize, mut values: Vec<f64>) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSimilarity(format!("need at least 2 views, got {n}")));
        }
        if values.len() != n * n {
            return Err(GraphError::InvalidSimilarity(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        for (idx, v) in values.iter().enumerate() {
            if !(v.is_finite() && (-1e-12..=1.0 + 1e-12).contains(v)) {
                return Err(GraphError::InvalidSimilarity(format!(
                    "entry ({}, {}) = {v} outside [0, 1]",
                    idx / n,
                    idx % n
                )));
            }
        }
        for i in 0..n {
            if (values[i * n + i] - 1.0).abs() > 1e-9 {
                return Err(GraphError::InvalidSimilarity(format!("diagonal entry {i} is not 1")));
            }
            values[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                let diff = (a - b).abs();
                if diff > SYMMETRY_TOLERANCE {
                    return Err(GraphError::AsymmetryTooLarge { i, j, diff });
                }
                let avg = (0.5 * (a + b)).clamp(0.0, 1.0);
                values[i * n + j] = avg;
                values[j * n + i] = avg;
            }
        }
        Ok(Self { n, s: values })
    }

    /// Builds from a symmetric closure evaluated on `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(ViewId, ViewId) -> f64) -> Result<Self, GraphError> {
        let mut values = vec![1.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: ViewId, j: ViewId) -> f64 {
        self.s[i * self.n + j]
    }

    /// Edge weight `1 − s(i, j)`.
    pub fn distance(&self, i: ViewId, j: ViewId) -> f64 {
        1.0 - self.get(i, j)
    }

    pub fn row_sum(&self, i: ViewId) -> f64 {
        self.s[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GraphError> {
        Self::from_fn(self.n, |i, j| f(self.get(i, j)))
    }
}
