use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::DeviceParams;

/// One swept coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub units: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, units: &str, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("axis {name} is empty")));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("axis {name} must be finite and strictly monotone")));
        }
        Ok(Axis { name: name.into(), units: units.into(), values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Column header, e.g. `eps [ueV]`.
    pub fn header(&self) -> String {
        format!("{} [{}]", self.name, self.units)
    }

    /// Uniform spacing, if the axis has one.
    pub fn step(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let d = (self.values[self.len() - 1] - self.values[0]) / (self.len() - 1) as f64;
        self.values.windows(2).all(|w| ((w[1] - w[0]) - d).abs() <= 1e-9 * d.abs().max(1e-300)).then_some(d)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub protocol: String,
    pub params: DeviceParams,
    pub n_shots: Option<u64>,
    pub warnings: Vec<String>,
}

/// Triplet probability on a rectangular grid, stored row-major over (axis1, axis2).
#[derive(Debug, Clone, PartialEq)]
pub struct PTMap {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values: Vec<f64>,
    pub metadata: Metadata,
}

impl PTMap {
    pub fn new(axis1: Axis, axis2: Axis, values: Vec<f64>, metadata: Metadata) -> Result<Self> {
        if values.len() != axis1.len() * axis2.len() {
            return Err(Error::InvalidInput(format!(
                "map has {} values for a {}x{} grid",
                values.len(),
                axis1.len(),
                axis2.len()
            )));
        }
        Ok(PTMap { axis1, axis2, values: values.into_iter().map(clamp_probability).collect(), metadata })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis2.len() + j]
    }

    /// Values along axis 2 at axis-1 index `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.axis2.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Values along axis 1 at axis-2 index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.axis1.len()).map(|i| self.get(i, j)).collect()
    }

    /// One line per cell: axis-1 value, axis-2 value, P_T.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{},P_T\n", self.axis1.header(), self.axis2.header());
        for (i, a) in self.axis1.values.iter().enumerate() {
            for (j, b) in self.axis2.values.iter().enumerate() {
                let _ = writeln!(s, "{a},{b},{}", self.get(i, j));
            }
        }
        s
    }
}

/// A single swept curve; `skipped` lists indices that could not be computed (NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub axis: Axis,
    pub value_name: String,
    pub values: Vec<f64>,
    pub skipped: Vec<usize>,
    pub metadata: Metadata,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.axis.header(), self.value_name);
        for (x, y) in self.axis.values.iter().zip(&self.values) {
            let _ = writeln!(s, "{x},{y}");
        }
        s
    }
}

/// Rounding can push a probability a few ulps outside [0, 1].
pub(crate) fn clamp_probability(p: f64) -> f64 {
    if p.is_nan() {
        p
    } else {
        p.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_must_be_monotone() {
        assert!(Axis::new("eps", "ueV", vec![0.0, 1.0, 1.0]).is_err());
        assert!(Axis::new("eps", "ueV", vec![]).is_err());
        assert!(Axis::new("eps", "ueV", vec![3.0, 2.0]).is_ok());
        assert_eq!(Axis::new("t", "ns", vec![0.0, 0.5, 1.0]).unwrap().step(), Some(0.5));
        assert_eq!(Axis::new("t", "ns", vec![0.0, 0.5, 2.0]).unwrap().step(), None);
    }

    #[test]
    fn csv_layout() {
        let a = Axis::new("eps", "ueV", vec![1.0, 2.0]).unwrap();
        let b = Axis::new("tau", "ns", vec![0.0, 5.0, 10.0]).unwrap();
        let m = PTMap::new(a, b, vec![0.0, 0.1, 0.2, 0.3, 0.4, 1.0 + 1e-15], Metadata::default()).unwrap();
        assert_eq!(m.get(1, 2), 1.0);
        assert_eq!(m.column(1), vec![0.1, 0.4]);
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "eps [ueV],tau [ns],P_T");
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[4], "2,0,0.3");
    }
}
