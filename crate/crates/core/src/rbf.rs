//! Gaussian radial basis function network with a leakage-modified
//! adaptive law.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RbfNetwork {
    centers: Vec<DVector<f64>>,
    width: f64,
    weights: DMatrix<f64>,
    adapt_gain: DMatrix<f64>,
    leakage: f64,
}

impl RbfNetwork {
    pub fn new(
        centers: Vec<DVector<f64>>,
        width: f64,
        output_dim: usize,
        adapt_gain: DMatrix<f64>,
        leakage: f64,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::config(
                "rbf.centers",
                "network needs at least one center",
            ));
        }
        let dim = centers[0].len();
        if centers.iter().any(|c| c.len() != dim) {
            return Err(Error::config(
                "rbf.centers",
                "centers have mixed dimensions",
            ));
        }
        if centers.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("rbf center"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::config(
                "rbf.width-positive",
                format!("width {width} must be positive"),
            ));
        }
        if !(leakage.is_finite() && leakage >= 0.0) {
            return Err(Error::config(
                "rbf.leakage-nonnegative",
                format!("leakage {leakage} must be nonnegative"),
            ));
        }
        let k = centers.len();
        if adapt_gain.shape() != (k, k) {
            return Err(Error::config(
                "rbf.gain-spd",
                format!("adaptation gain must be {k}x{k}"),
            ));
        }
        if adapt_gain != adapt_gain.transpose() || adapt_gain.clone().cholesky().is_none() {
            return Err(Error::config(
                "rbf.gain-spd",
                "adaptation gain must be symmetric positive definite",
            ));
        }
        Ok(Self {
            weights: DMatrix::zeros(k, output_dim),
            centers,
            width,
            adapt_gain,
            leakage,
        })
    }

    /// Uniform grid with `per_dim` centers along each `(lo, hi)` range and
    /// the given width; zero initial weights and a scalar gain `gain * I`.
    pub fn grid(
        ranges: &[(f64, f64)],
        per_dim: usize,
        width: f64,
        output_dim: usize,
        gain: f64,
        leakage: f64,
    ) -> Result<Self> {
        if ranges.is_empty() || per_dim == 0 {
            return Err(Error::config(
                "rbf.centers",
                "grid needs at least one dimension and one center",
            ));
        }
        let axes: Vec<Vec<f64>> = ranges
            .iter()
            .map(|&(lo, hi)| {
                if per_dim == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..per_dim)
                        .map(|k| lo + (hi - lo) * k as f64 / (per_dim - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let total = per_dim.pow(ranges.len() as u32);
        let centers = (0..total)
            .map(|mut idx| {
                DVector::from_iterator(
                    ranges.len(),
                    axes.iter().map(|axis| {
                        let c = axis[idx % per_dim];
                        idx /= per_dim;
                        c
                    }),
                )
            })
            .collect::<Vec<_>>();
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::config(
                "rbf.gain-spd",
                format!("gain {gain} must be positive"),
            ));
        }
        Self::new(
            centers,
            width,
            output_dim,
            DMatrix::identity(total, total) * gain,
            leakage,
        )
    }

    pub fn centers(&self) -> &[DVector<f64>] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn adapt_gain(&self) -> &DMatrix<f64> {
        &self.adapt_gain
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn basis_count(&self) -> usize {
        self.centers.len()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn set_weights(&mut self, weights: DMatrix<f64>) -> Result<()> {
        if weights.shape() != self.weights.shape() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: weights.len(),
            });
        }
        self.weights = weights;
        Ok(())
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.norm()
    }

    /// `phi_k = exp(-|x - c_k|^2 / (2 width^2))`.
    pub fn basis(&self, x: &[f64]) -> DVector<f64> {
        let denom = 2.0 * self.width * self.width;
        DVector::from_iterator(
            self.centers.len(),
            self.centers.iter().map(|c| {
                let d2: f64 = c.iter().zip(x).map(|(ci, xi)| (xi - ci).powi(2)).sum();
                (-d2 / denom).exp()
            }),
        )
    }

    /// `W^T phi(x)`.
    pub fn approximate(&self, x: &[f64]) -> DVector<f64> {
        self.weights.tr_mul(&self.basis(x))
    }

    /// One explicit Euler step of `W' = G phi z2^T - sigma W`.
    pub fn update_weights(&mut self, x: &[f64], z2: &[f64], h: f64) -> Result<()> {
        if z2.len() != self.output_dim() {
            return Err(Error::LengthMismatch {
                expected: self.output_dim(),
                got: z2.len(),
            });
        }
        let phi = self.basis(x);
        let z2 = DVector::from_column_slice(z2);
        let rate = &self.adapt_gain * phi * z2.transpose() - self.leakage * &self.weights;
        let next = &self.weights + h * rate;
        if next.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("adaptive weights"));
        }
        self.weights = next;
        Ok(())
    }
}
