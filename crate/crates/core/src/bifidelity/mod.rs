//! Bifidelity surrogate.
//!
//! Columns are selected on the cheap low-fidelity ensemble `A^L`. The
//! surrogate stores only the high-fidelity snapshots at those points, `A^H_S`,
//! and predicts a high-fidelity snapshot at any parameter point as
//! `A^H_S c`, where `c = (A^L_S)† u^L` are the least-squares coefficients of
//! the low-fidelity snapshot there.

mod sweep;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::selectors::{SelectionResult, SelectorConfig};

pub use sweep::{sweep, ErrorReport, ErrorRow, ScoringMode, SummaryRow, SweepOptions};

/// Snapshot matrix at one fidelity, one column per parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub snapshots: DenseMatrix,
    pub parameters: Vec<Vec<f64>>,
    pub fidelity: String,
    pub model_id: String,
}

impl Ensemble {
    pub fn new(
        snapshots: DenseMatrix,
        parameters: Vec<Vec<f64>>,
        fidelity: impl Into<String>,
        model_id: impl Into<String>,
    ) -> Result<Self> {
        if snapshots.nrows() == 0 || snapshots.ncols() == 0 {
            return Err(Error::InvalidArgument("ensemble must be nonempty".into()));
        }
        linalg::check_finite(&snapshots)?;
        if parameters.len() != snapshots.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameter vectors for {} snapshots",
                parameters.len(),
                snapshots.ncols()
            )));
        }
        let dim = parameters[0].len();
        if dim == 0 || parameters.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch(
                "parameter vectors must share one nonzero dimension".into(),
            ));
        }
        Ok(Ensemble {
            snapshots,
            parameters,
            fidelity: fidelity.into(),
            model_id: model_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot_dim(&self) -> usize {
        self.snapshots.nrows()
    }

    pub fn parameter_dim(&self) -> usize {
        self.parameters[0].len()
    }
}

/// Selected indices with the stored low- and high-fidelity bases.
#[derive(Debug, Clone)]
pub struct BifidelityModel {
    pub selected_indices: Vec<usize>,
    pub low_basis: DenseMatrix,
    pub high_basis: DenseMatrix,
    pub selector_used: Option<SelectorConfig>,
    low_pinv: DenseMatrix,
}

/// Packages the bases for a selection. `high_columns_at_s` must hold the
/// high-fidelity snapshots at the selected points, in selection order.
pub fn fit(
    low: &Ensemble,
    high_columns_at_s: &DenseMatrix,
    selection: &SelectionResult,
) -> Result<BifidelityModel> {
    let subset = &selection.ordered_indices;
    if subset.is_empty() {
        return Err(Error::InvalidArgument("selection is empty".into()));
    }
    linalg::check_subset(subset, low.len())?;
    linalg::check_finite(high_columns_at_s)?;
    if high_columns_at_s.ncols() != subset.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} high-fidelity columns for {} selected indices",
            high_columns_at_s.ncols(),
            subset.len()
        )));
    }
    let low_basis = low.snapshots.select_columns(subset);
    let low_pinv = linalg::pseudoinverse(&low_basis)?;
    Ok(BifidelityModel {
        selected_indices: subset.clone(),
        low_basis,
        high_basis: high_columns_at_s.clone(),
        selector_used: None,
        low_pinv,
    })
}

impl BifidelityModel {
    pub fn with_selector(mut self, config: SelectorConfig) -> Self {
        self.selector_used = Some(config);
        self
    }

    pub fn rank(&self) -> usize {
        self.selected_indices.len()
    }

    /// Least-squares coefficients of a low-fidelity snapshot in the low basis.
    pub fn coefficients(&self, low_snapshot: &DVector<f64>) -> Result<DVector<f64>> {
        if low_snapshot.len() != self.low_basis.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "snapshot length {} but low basis has {} rows",
                low_snapshot.len(),
                self.low_basis.nrows()
            )));
        }
        Ok(&self.low_pinv * low_snapshot)
    }

    /// Coefficients for every column of a low-fidelity snapshot matrix.
    pub fn coefficient_matrix(&self, low_snapshots: &DenseMatrix) -> Result<DenseMatrix> {
        if low_snapshots.nrows() != self.low_basis.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "snapshots have {} rows but low basis has {}",
                low_snapshots.nrows(),
                self.low_basis.nrows()
            )));
        }
        Ok(&self.low_pinv * low_snapshots)
    }

    /// High-fidelity prediction `A^H_S c`.
    pub fn reconstruct_high(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_coefficients(c)?;
        Ok(&self.high_basis * c)
    }

    /// Low-fidelity projection `A^L_S c`.
    pub fn reconstruct_low(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_coefficients(c)?;
        Ok(&self.low_basis * c)
    }

    /// Predicts the high-fidelity snapshot from a low-fidelity one.
    pub fn predict(&self, low_snapshot: &DVector<f64>) -> Result<DVector<f64>> {
        self.reconstruct_high(&self.coefficients(low_snapshot)?)
    }

    fn check_coefficients(&self, c: &DVector<f64>) -> Result<()> {
        if c.len() != self.rank() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a rank-{} model",
                c.len(),
                self.rank()
            )));
        }
        Ok(())
    }
}

/// Normalized squared error `E = Σᵢ‖Xᵢ − X̃ᵢ‖² / Σᵢ‖Xᵢ‖²` over all columns.
pub fn evaluate_error(truth: &DenseMatrix, predictions: &DenseMatrix) -> Result<f64> {
    let all: Vec<usize> = (0..truth.ncols()).collect();
    evaluate_error_on(truth, predictions, &all)
}

/// `E` restricted to the listed columns.
pub fn evaluate_error_on(
    truth: &DenseMatrix,
    predictions: &DenseMatrix,
    columns: &[usize],
) -> Result<f64> {
    if truth.shape() != predictions.shape() {
        return Err(Error::DimensionMismatch(format!(
            "truth is {:?} but predictions are {:?}",
            truth.shape(),
            predictions.shape()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &j in columns {
        let t = truth.column(j);
        num += (t - predictions.column(j)).norm_squared();
        den += t.norm_squared();
    }
    if den == 0.0 {
        return Err(Error::ZeroTruth);
    }
    Ok(num / den)
}
