//! Sparse parity-check matrices viewed as bipartite Tanner graphs.
//!
//! Check nodes index rows and variable nodes index columns. Both adjacency
//! directions are stored sorted so that every consumer iterates neighbours in
//! the same order.

mod alist;
mod cycles;
mod encoder;
mod peg;

pub use cycles::{count_girth_cycles, dfs_cycle_oracle, girth, CycleCensus, ORACLE_MAX_NODES};
pub use encoder::SystematicEncoder;
pub use peg::peg_construct;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors raised while building or querying a Tanner graph.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("index {index} out of range for {kind} count {count}")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        count: usize,
    },
    #[error("duplicate edge between check {check} and variable {var}")]
    DuplicateEdge { check: usize, var: usize },
    #[error("bit sequence has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("infeasible degree sequence: {0}")]
    InfeasibleDegrees(String),
    #[error("degree polynomial is zero")]
    ZeroPolynomial,
    #[error("invalid degree polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("graph with {nodes} nodes exceeds the exhaustive enumeration limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("cycle length {0} must be even and at least 4")]
    InvalidCycleLength(usize),
    #[error("malformed alist: {0}")]
    Alist(String),
}

/// A binary parity-check matrix stored as sorted row and column adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParityCheckMatrix {
    n: usize,
    m: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from per-check variable lists.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        let m = rows.len();
        let mut rows = rows;
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(GraphError::DuplicateEdge {
                        check: i,
                        var: w[0],
                    });
                }
            }
            for &j in row.iter() {
                if j >= n {
                    return Err(GraphError::IndexOutOfRange {
                        kind: "variable",
                        index: j,
                        count: n,
                    });
                }
                cols[j].push(i);
            }
        }
        Ok(ParityCheckMatrix { n, m, rows, cols })
    }

    /// Builds a matrix from `(check, variable)` pairs.
    pub fn from_edges(
        m: usize,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut rows = vec![Vec::new(); m];
        for (i, j) in edges {
            if i >= m {
                return Err(GraphError::IndexOutOfRange {
                    kind: "check",
                    index: i,
                    count: m,
                });
            }
            rows[i].push(j);
        }
        Self::from_rows(n, rows)
    }

    /// Builds a matrix from a dense 0/1 array, one inner slice per row.
    pub fn from_dense<R: AsRef<[u8]>>(dense: &[R]) -> Result<Self, GraphError> {
        let n = dense.first().map_or(0, |r| r.as_ref().len());
        let mut rows = Vec::with_capacity(dense.len());
        for r in dense {
            let r = r.as_ref();
            if r.len() != n {
                return Err(GraphError::LengthMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            rows.push(
                r.iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0)
                    .map(|(j, _)| j)
                    .collect(),
            );
        }
        Self::from_rows(n, rows)
    }

    /// Number of variable nodes (code length).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of check nodes.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn col(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, check: usize, var: usize) -> bool {
        self.rows[check].binary_search(&var).is_ok()
    }

    /// Iterates edges as `(check, variable)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&j| (i, j)))
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut d = vec![vec![0u8; self.n]; self.m];
        for (i, j) in self.edges() {
            d[i][j] = 1;
        }
        d
    }

    /// GF(2) syndrome `H x^T`.
    pub fn syndrome(&self, bits: &[u8]) -> Result<Vec<u8>, GraphError> {
        if bits.len() != self.n {
            return Err(GraphError::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.iter().fold(0u8, |acc, &j| acc ^ (bits[j] & 1)))
            .collect())
    }

    /// True when `bits` has the right length and a zero syndrome.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self
                .rows
                .iter()
                .all(|r| r.iter().fold(0u8, |acc, &j| acc ^ (bits[j] & 1)) == 0)
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        DegreeProfile::from_degrees(
            self.cols.iter().map(Vec::len),
            self.rows.iter().map(Vec::len),
        )
    }

    /// Hex SHA-256 of the alist serialization; identifies a code across files.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_alist().as_bytes()))
    }

    /// Checks transpose consistency and index ranges.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut count = 0usize;
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r {
                if j >= self.n {
                    return Err(GraphError::IndexOutOfRange {
                        kind: "variable",
                        index: j,
                        count: self.n,
                    });
                }
                if self.cols[j].binary_search(&i).is_err() {
                    return Err(GraphError::Alist(format!(
                        "edge ({i}, {j}) missing from column view"
                    )));
                }
                count += 1;
            }
        }
        let col_count: usize = self.cols.iter().map(Vec::len).sum();
        if col_count != count {
            return Err(GraphError::Alist(format!(
                "row view has {count} edges, column view has {col_count}"
            )));
        }
        Ok(())
    }
}

/// Edge-perspective degree distributions.
///
/// `variable_poly[k]` is the fraction of edges attached to variable nodes of
/// degree `k + 1`, i.e. the coefficient of `x^k` in υ(x); likewise for
/// `check_poly` and ν(x).
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile {
    pub variable_poly: Vec<f64>,
    pub check_poly: Vec<f64>,
    pub mean_variable_degree: f64,
    pub mean_check_degree: f64,
}

impl DegreeProfile {
    pub fn from_degrees(
        var_degrees: impl IntoIterator<Item = usize>,
        check_degrees: impl IntoIterator<Item = usize>,
    ) -> Self {
        fn edge_poly(degrees: impl IntoIterator<Item = usize>) -> (Vec<f64>, f64) {
            let mut hist: Vec<usize> = Vec::new();
            let mut nodes = 0usize;
            let mut edges = 0usize;
            for d in degrees {
                nodes += 1;
                edges += d;
                if d > 0 {
                    if hist.len() < d {
                        hist.resize(d, 0);
                    }
                    hist[d - 1] += d;
                }
            }
            let poly = if edges == 0 {
                hist.iter().map(|_| 0.0).collect()
            } else {
                hist.iter().map(|&e| e as f64 / edges as f64).collect()
            };
            let mean = if nodes == 0 {
                0.0
            } else {
                edges as f64 / nodes as f64
            };
            (poly, mean)
        }
        let (variable_poly, mean_variable_degree) = edge_poly(var_degrees);
        let (check_poly, mean_check_degree) = edge_poly(check_degrees);
        DegreeProfile {
            variable_poly,
            check_poly,
            mean_variable_degree,
            mean_check_degree,
        }
    }

    /// Builds a profile directly from edge-perspective coefficients.
    ///
    /// Node-perspective mean degrees are derived as `1 / ∫ poly`.
    pub fn from_polynomials(
        variable_poly: Vec<f64>,
        check_poly: Vec<f64>,
    ) -> Result<Self, GraphError> {
        for p in [&variable_poly, &check_poly] {
            if p.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                return Err(GraphError::InvalidPolynomial(
                    "coefficients must be finite and nonnegative".into(),
                ));
            }
            let s: f64 = p.iter().sum();
            if s == 0.0 {
                return Err(GraphError::ZeroPolynomial);
            }
            if (s - 1.0).abs() > 1e-9 {
                return Err(GraphError::InvalidPolynomial(format!(
                    "coefficients sum to {s}, expected 1"
                )));
            }
        }
        let mean_variable_degree = 1.0 / integrate_unit(&variable_poly);
        let mean_check_degree = 1.0 / integrate_unit(&check_poly);
        Ok(DegreeProfile {
            variable_poly,
            check_poly,
            mean_variable_degree,
            mean_check_degree,
        })
    }

    /// Average connectivity `1 / ∫₀¹ υ(x) dx` of the variable nodes.
    pub fn average_connectivity(&self) -> Result<f64, GraphError> {
        let integral = integrate_unit(&self.variable_poly);
        if integral == 0.0 {
            return Err(GraphError::ZeroPolynomial);
        }
        Ok(1.0 / integral)
    }
}

/// ∫₀¹ Σ c_k x^k dx = Σ c_k / (k + 1).
fn integrate_unit(poly: &[f64]) -> f64 {
    poly.iter()
        .enumerate()
        .map(|(k, &c)| c / (k as f64 + 1.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_cols_agree() {
        let h = ParityCheckMatrix::from_dense(&[[1u8, 1, 0], [0, 1, 1]]).unwrap();
        assert_eq!(h.col(1), &[0, 1]);
        assert_eq!(h.num_edges(), 4);
        h.validate().unwrap();
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = ParityCheckMatrix::from_rows(3, vec![vec![0, 1, 1]]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge { check: 0, var: 1 });
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            ParityCheckMatrix::from_rows(2, vec![vec![0, 2]]),
            Err(GraphError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn syndrome_by_hand() {
        let h = ParityCheckMatrix::from_dense(&[[1u8, 1, 0], [0, 1, 1]]).unwrap();
        assert_eq!(h.syndrome(&[1, 0, 0]).unwrap(), vec![1, 0]);
        assert_eq!(h.syndrome(&[1, 1, 1]).unwrap(), vec![0, 0]);
        assert!(matches!(
            h.syndrome(&[1, 0]),
            Err(GraphError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_flip_gives_column() {
        let h =
            ParityCheckMatrix::from_dense(&[[1u8, 1, 0, 1], [0, 1, 1, 1], [1, 0, 1, 1]]).unwrap();
        let cw = [0u8, 0, 0, 0];
        for j in 0..4 {
            let mut b = cw;
            b[j] ^= 1;
            let s = h.syndrome(&b).unwrap();
            let col: Vec<u8> = (0..3).map(|i| h.contains(i, j) as u8).collect();
            assert_eq!(s, col);
        }
    }

    #[test]
    fn connectivity_values() {
        let p = DegreeProfile::from_polynomials(vec![0.0, 0.0, 1.0], vec![1.0]).unwrap();
        assert!((p.average_connectivity().unwrap() - 3.0).abs() < 1e-15);
        let p = DegreeProfile::from_polynomials(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(p.average_connectivity().unwrap(), 1.0);
        let p = DegreeProfile::from_polynomials(vec![0.0, 0.0, 0.0, 0.0, 1.0], vec![1.0]).unwrap();
        assert!((p.average_connectivity().unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(
            DegreeProfile::from_polynomials(vec![0.0], vec![1.0]).unwrap_err(),
            GraphError::ZeroPolynomial
        );
    }

    #[test]
    fn profile_from_regular_graph() {
        // each variable in exactly 2 of 3 checks
        let h = ParityCheckMatrix::from_dense(&[[1u8, 1, 0], [0, 1, 1], [1, 0, 1]]).unwrap();
        let p = h.degree_profile();
        assert_eq!(p.variable_poly, vec![0.0, 1.0]);
        assert_eq!(p.mean_variable_degree, 2.0);
        assert_eq!(p.average_connectivity().unwrap(), 2.0);
    }
}
