use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DiscreteOperator;
use crate::error::{DofError, Result};

/// Default knee level, in dB below the largest singular value.
pub const DEFAULT_KNEE_DB: f64 = -20.0;

// Dense SVD is used up to this many matrix entries under `SvdRoute::Auto`.
const DENSE_ENTRY_LIMIT: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SvdRoute {
    /// Dense for small operators, Gram otherwise.
    Auto,
    /// Bidiagonalization SVD of the materialized matrix.
    Dense,
    /// Eigen-decomposition of the `n_scene × n_scene` Gram matrix.
    Gram,
}

/// Singular values in non-increasing order, with optional singular vectors.
#[derive(Debug, Clone)]
pub struct SvdSpectrum {
    singular_values: Vec<f64>,
    right: Option<DMatrix<Complex64>>,
    left: Option<DMatrix<Complex64>>,
    hs_norm_sq: f64,
    route: SvdRoute,
}

impl SvdSpectrum {
    /// Builds a spectrum from bare singular values (sorted here).
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let hs_norm_sq = values.iter().map(|s| s * s).sum();
        Self {
            singular_values: values,
            right: None,
            left: None,
            hs_norm_sq,
            route: SvdRoute::Auto,
        }
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    /// `Σ σ_i²`.
    pub fn hs_norm_sq(&self) -> f64 {
        self.hs_norm_sq
    }

    /// Route that produced the values; never `Auto` for operator spectra.
    pub fn route(&self) -> SvdRoute {
        self.route
    }

    pub fn largest(&self) -> Option<f64> {
        self.singular_values.first().copied()
    }

    /// Singular values divided by `σ_1`.
    pub fn normalized(&self) -> Vec<f64> {
        match self.largest() {
            Some(s1) if s1 > 0.0 => self.singular_values.iter().map(|s| s / s1).collect(),
            _ => vec![0.0; self.len()],
        }
    }

    /// Right singular vectors as columns (`n_scene × m`), in the weighted
    /// scene coordinates.
    pub fn right_vectors(&self) -> Option<&DMatrix<Complex64>> {
        self.right.as_ref()
    }

    /// Left singular vectors as columns, when the dense route computed them.
    pub fn left_vectors(&self) -> Option<&DMatrix<Complex64>> {
        self.left.as_ref()
    }

    /// Left singular vector `φ_i = A ψ_i / σ_i`.
    pub fn left_vector(&self, op: &DiscreteOperator, i: usize) -> Result<Vec<Complex64>> {
        if let Some(u) = &self.left {
            if i < u.ncols() {
                return Ok(u.column(i).iter().copied().collect());
            }
        }
        let right = self.right.as_ref().ok_or(DofError::MissingVectors)?;
        if i >= right.ncols() {
            return Err(DofError::RankOutOfRange {
                rank: i + 1,
                len: right.ncols(),
            });
        }
        let sigma = self.singular_values[i];
        if sigma <= 0.0 {
            return Err(DofError::ZeroSingularValue { rank: i + 1 });
        }
        let psi: Vec<Complex64> = right.column(i).iter().copied().collect();
        Ok(op.apply(&psi)?.into_iter().map(|x| x / sigma).collect())
    }
}

/// Singular values of the operator whose Gram matrix is `gram`, computed
/// from its Hermitian eigenvalues. Tiny negative eigenvalues from rounding
/// are clamped to zero.
pub fn hermitian_singular_values(gram: DMatrix<Complex64>) -> Result<Vec<f64>> {
    let (values, _) = hermitian_eigen(gram, false)?;
    Ok(values)
}

fn hermitian_eigen(
    gram: DMatrix<Complex64>,
    vectors: bool,
) -> Result<(Vec<f64>, Option<DMatrix<Complex64>>)> {
    let n = gram.nrows();
    if gram.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(DofError::Numerical("Gram matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000 * n.max(1))
        .ok_or_else(|| DofError::Numerical("Hermitian eigen-decomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
        .collect();
    let vecs = vectors.then(|| {
        DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])])
    });
    Ok((values, vecs))
}

/// SVD of `op` with the route chosen by size.
pub fn svd(op: &DiscreteOperator, want_vectors: bool) -> Result<SvdSpectrum> {
    svd_with(op, SvdRoute::Auto, want_vectors)
}

pub fn svd_with(op: &DiscreteOperator, route: SvdRoute, want_vectors: bool) -> Result<SvdSpectrum> {
    let route = match route {
        SvdRoute::Auto if op.rows() * op.cols() <= DENSE_ENTRY_LIMIT => SvdRoute::Dense,
        SvdRoute::Auto => SvdRoute::Gram,
        r => r,
    };
    let (values, right, left) = match route {
        SvdRoute::Dense => {
            let a = op.to_dense();
            let svd = SVD::try_new(a, want_vectors, want_vectors, f64::EPSILON, 0)
                .ok_or_else(|| DofError::Numerical("dense SVD did not converge".into()))?;
            let values: Vec<f64> = svd.singular_values.iter().copied().collect();
            let right = svd.v_t.map(|vt| vt.adjoint());
            (values, right, svd.u)
        }
        SvdRoute::Gram => {
            let (values, vecs) = hermitian_eigen(op.gram(), want_vectors)?;
            (values, vecs, None)
        }
        SvdRoute::Auto => unreachable!(),
    };
    if values.iter().any(|s| !s.is_finite()) {
        return Err(DofError::Numerical("non-finite singular value".into()));
    }
    let hs_norm_sq = values.iter().map(|s| s * s).sum();
    Ok(SvdSpectrum {
        singular_values: values,
        right,
        left,
        hs_norm_sq,
        route,
    })
}

fn leading(spec: &SvdSpectrum) -> Result<f64> {
    match spec.largest() {
        Some(s) if s > 0.0 => Ok(s),
        _ => Err(DofError::EmptySpectrum),
    }
}

/// Normalized sum of squares `Σ σ_i² / σ_1²`.
pub fn sigma_bar_sq(spec: &SvdSpectrum) -> Result<f64> {
    let s1 = leading(spec)?;
    Ok(spec.hs_norm_sq() / (s1 * s1))
}

/// Normalized sum `Σ σ_i / σ_1`.
pub fn sigma_bar(spec: &SvdSpectrum) -> Result<f64> {
    let s1 = leading(spec)?;
    Ok(spec.singular_values().iter().map(|s| s / s1).sum())
}

/// 1-based index of the first singular value more than `|level_db|` dB below
/// `σ_1`, i.e. with `σ_i / σ_1 < 10^(-|level_db|/20)`. Returns the spectrum
/// length when no value drops that far.
pub fn dof_knee(spec: &SvdSpectrum, level_db: f64) -> usize {
    let threshold = 10f64.powf(-level_db.abs() / 20.0);
    let Some(s1) = spec.largest().filter(|s| *s > 0.0) else {
        return spec.len().min(1);
    };
    spec.singular_values()
        .iter()
        .position(|s| s / s1 < threshold)
        .map_or(spec.len(), |i| i + 1)
}
