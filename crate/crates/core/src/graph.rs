//! Communication topology and formation geometry.
//!
//! The graph is undirected and weighted. Each vehicle carries a desired
//! offset `p_i^d`; the neighbor-based formation error is
//!
//! ```text
//! z1_i = sum_{j in N_i} a_ij [ (p_i - p_j) - (p_i^d - p_j^d) ]
//! ```
//!
//! Optionally, vehicles can be pinned to an exogenous reference trajectory
//! (the virtual leader) with weight `b_i`, which adds
//! `b_i [ (p_i - p_ref) - p_i^d ]` to the error.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct FormationGraph {
    adjacency: DMatrix<f64>,
    offsets: Vec<Vec2>,
    pinning: Vec<f64>,
}

/// Degree vector and `L = D - A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianView {
    pub degree: Vec<f64>,
    pub laplacian: DMatrix<f64>,
}

impl FormationGraph {
    /// Builds a graph from a dense adjacency matrix and one offset per vehicle.
    ///
    /// Rejects asymmetric, negative or self-loop weights and graphs that are
    /// not connected.
    pub fn new(adjacency: Vec<Vec<f64>>, offsets: Vec<Vec2>) -> Result<Self> {
        let n = adjacency.len();
        Self::with_pinning(adjacency, offsets, vec![0.0; n])
    }

    pub fn with_pinning(
        adjacency: Vec<Vec<f64>>,
        offsets: Vec<Vec2>,
        pinning: Vec<f64>,
    ) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vehicles".into()));
        }
        if let Some(row) = adjacency.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidGraph(format!(
                "adjacency row {row} has {} entries, expected {n}",
                adjacency[row].len()
            )));
        }
        if offsets.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: offsets.len(),
            });
        }
        if pinning.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: pinning.len(),
            });
        }
        for i in 0..n {
            if adjacency[i][i] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop at vehicle {i}")));
            }
            for j in 0..n {
                let a = adjacency[i][j];
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight a[{i}][{j}] = {a} must be finite and nonnegative"
                    )));
                }
                if a != adjacency[j][i] {
                    return Err(Error::InvalidGraph(format!(
                        "a[{i}][{j}] = {a} differs from a[{j}][{i}] = {}",
                        adjacency[j][i]
                    )));
                }
            }
        }
        if offsets.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("desired offset"));
        }
        if pinning.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidGraph(
                "pinning weights must be finite and nonnegative".into(),
            ));
        }
        let adjacency = DMatrix::from_fn(n, n, |i, j| adjacency[i][j]);
        let graph = Self {
            adjacency,
            offsets,
            pinning,
        };
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| self.adjacency.row(i).iter().copied().collect())
            .collect()
    }

    pub fn offsets(&self) -> &[Vec2] {
        &self.offsets
    }

    pub fn pinning(&self) -> &[f64] {
        &self.pinning
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// `N_i = { j | a_ij > 0 }`.
    pub fn neighbor_set(&self, i: usize) -> Result<BTreeSet<usize>> {
        self.check_index(i)?;
        Ok((0..self.len())
            .filter(|&j| self.adjacency[(i, j)] > 0.0)
            .collect())
    }

    /// Breadth-first reachability from vehicle 0.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if !seen[j] && self.adjacency[(i, j)] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn build_laplacian(&self) -> LaplacianView {
        let n = self.len();
        let degree: Vec<f64> = (0..n).map(|i| self.adjacency.row(i).sum()).collect();
        let laplacian =
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(degree.clone())) - &self.adjacency;
        LaplacianView { degree, laplacian }
    }

    /// Neighbor-based formation error for every vehicle.
    pub fn formation_error(&self, positions: &[Vec2]) -> Result<Vec<Vec2>> {
        if positions.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: positions.len(),
            });
        }
        Ok((0..self.len())
            .map(|i| self.formation_error_at(i, positions))
            .collect())
    }

    pub(crate) fn formation_error_at(&self, i: usize, positions: &[Vec2]) -> Vec2 {
        let mut z = Vec2::zeros();
        for j in 0..self.len() {
            let a = self.adjacency[(i, j)];
            if a > 0.0 {
                z += a * ((positions[i] - positions[j]) - (self.offsets[i] - self.offsets[j]));
            }
        }
        z
    }

    /// `sum_j a_ij (v_i - v_j)`, the time derivative of the formation error.
    pub(crate) fn relative_rate_at(&self, i: usize, velocities: &[Vec2]) -> Vec2 {
        let mut r = Vec2::zeros();
        for j in 0..self.len() {
            let a = self.adjacency[(i, j)];
            if a > 0.0 {
                r += a * (velocities[i] - velocities[j]);
            }
        }
        r
    }
}

impl LaplacianView {
    /// Eigenvalues in ascending order. Diagnostic only; connectivity is
    /// decided by graph search.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.laplacian.clone().symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values
    }

    pub fn algebraic_connectivity(&self) -> f64 {
        self.eigenvalues().get(1).copied().unwrap_or(0.0)
    }
}

/// Unit-weight ring `0-1-...-(n-1)-0`.
pub fn ring_adjacency(n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    if n < 2 {
        return a;
    }
    for i in 0..n {
        let j = (i + 1) % n;
        if i != j {
            a[i][j] = 1.0;
            a[j][i] = 1.0;
        }
    }
    a
}

/// Square of side `gap`: (0,0), (gap,0), (gap,gap), (0,gap).
pub fn square_offsets(gap: f64) -> Vec<Vec2> {
    vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(gap, 0.0),
        Vec2::new(gap, gap),
        Vec2::new(0.0, gap),
    ]
}
