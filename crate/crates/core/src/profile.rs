//! Named analytic profiles for coefficients and exterior inputs.

use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::grid::{Grid, IndexRange};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// A function of `x`, sampled onto grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant { value: f64 },
    /// `height · cos⁴(π (x − center) / (2 width))` for `|x − center| < width`.
    Bump { center: f64, width: f64, height: f64 },
    /// Node values over the target range, in index order.
    Inline { values: Vec<f64> },
}

impl Profile {
    /// Value at `x` for the analytic variants; `None` for inline data.
    pub fn eval(&self, x: f64) -> Option<f64> {
        match *self {
            Profile::Zero => Some(0.0),
            Profile::Constant { value } => Some(value),
            Profile::Bump { center, width, height } => {
                let t = (x - center) / width;
                Some(if t.abs() < 1.0 { height * (std::f64::consts::FRAC_PI_2 * t).cos().powi(4) } else { 0.0 })
            }
            Profile::Inline { .. } => None,
        }
    }

    /// Values on the nodes of `range`, in index order.
    pub fn sample<T: Scalar>(&self, grid: &Grid<T>, range: IndexRange) -> Result<Vec<T>> {
        match self {
            Profile::Inline { values } => {
                if values.len() != range.len() {
                    return Err(Error::Dimension(format!(
                        "inline profile has {} values, range has {} nodes",
                        values.len(),
                        range.len()
                    )));
                }
                Ok(values.iter().map(|&v| T::lit(v)).collect())
            }
            Profile::Bump { width, .. } if !(*width > 0.0) => {
                Err(Error::InvalidCoefficient("bump width must be positive".into()))
            }
            p => Ok(range
                .iter()
                .map(|i| T::lit(p.eval(grid.x(i).to_f64_lossy()).expect("analytic profile")))
                .collect()),
        }
    }

    /// Full-grid field equal to the profile on `range` and zero elsewhere.
    pub fn field_on<T: Scalar>(&self, grid: &Grid<T>, range: IndexRange) -> Result<FieldVector<T>> {
        let mut out = FieldVector::zeros(grid.n_nodes());
        for (i, v) in range.iter().zip(self.sample(grid, range)?) {
            out[i] = v;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        let b = Profile::Bump { center: 1.0, width: 0.5, height: 2.0 };
        assert_eq!(b.eval(1.0), Some(2.0));
        assert_eq!(b.eval(1.5), Some(0.0));
        assert!((b.eval(1.25).unwrap() - 2.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn inline_length_checked() {
        let g = Grid::<f64>::from_physical(4.0, 65, (-1.0, 1.0), (1.5, 2.0), (-2.0, -1.5), None).unwrap();
        let p = Profile::Inline { values: vec![1.0; 3] };
        assert!(p.sample(&g, g.omega()).is_err());
        let p = Profile::Inline { values: vec![1.0; g.omega().len()] };
        assert_eq!(p.field_on(&g, g.omega()).unwrap().iter().sum::<f64>(), g.omega().len() as f64);
    }

    #[test]
    fn serde_tags() {
        let p: Profile = serde_json::from_str(r#"{"kind":"constant","value":1.5}"#).unwrap();
        assert_eq!(p, Profile::Constant { value: 1.5 });
    }
}
