use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One axis of a tensor grid: `count` equispaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, count: usize) -> Self {
        GridAxis {
            name: name.into(),
            lo,
            hi,
            count,
        }
    }

    /// A single point has the value `lo`.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

/// Tensor-product parameter grid, enumerated row-major (the first axis varies slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub axes: Vec<GridAxis>,
}

impl ParameterGrid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument(
                "grid needs at least one axis".into(),
            ));
        }
        for a in &axes {
            if a.count == 0 {
                return Err(Error::InvalidArgument(format!(
                    "axis `{}` has no points",
                    a.name
                )));
            }
            if !a.lo.is_finite() || !a.hi.is_finite() || a.hi < a.lo {
                return Err(Error::InvalidArgument(format!(
                    "axis `{}` has an invalid range [{}, {}]",
                    a.name, a.lo, a.hi
                )));
            }
        }
        Ok(ParameterGrid { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(GridAxis::values).collect();
        let mut points = vec![Vec::with_capacity(self.dim())];
        for axis in &values {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}
