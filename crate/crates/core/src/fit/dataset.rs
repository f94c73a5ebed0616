use std::io::Read;
use std::path::Path;

use serde::Serialize;

use super::FitError;

/// Observed curve: abscissa (MHz detuning or W input power), normalized
/// transmission, and optional per-point standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    x: Vec<f64>,
    yobs: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, yobs: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self, FitError> {
        if x.len() != yobs.len() || sigma.as_ref().is_some_and(|s| s.len() != x.len()) {
            return Err(FitError::InvalidData("column lengths differ".into()));
        }
        if let Some(i) = x.iter().chain(&yobs).position(|v| !v.is_finite()) {
            return Err(FitError::InvalidData(format!(
                "non-finite value at position {}",
                i % x.len().max(1)
            )));
        }
        if let Some(s) = &sigma {
            if let Some(i) = s.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(FitError::InvalidData(format!("sigma at row {i} must be positive")));
            }
        }
        Ok(Self { x, yobs, sigma })
    }

    /// Checks that the abscissa is strictly monotone, as a spectrum requires.
    pub fn require_monotone(&self) -> Result<(), FitError> {
        if self.x.len() < 2 {
            return Ok(());
        }
        let increasing = self.x[1] > self.x[0];
        let ok = self
            .x
            .windows(2)
            .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
        if ok {
            Ok(())
        } else {
            Err(FitError::InvalidData("abscissa is not strictly monotone".into()))
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn yobs(&self) -> &[f64] {
        &self.yobs
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    /// Least-squares weight `1/σ²` (or 1) of row `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.sigma.as_ref().map_or(1.0, |s| 1.0 / (s[i] * s[i]))
    }

    /// Copy sorted by abscissa.
    pub fn sorted(&self) -> Dataset {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.x[a].total_cmp(&self.x[b]));
        Dataset {
            x: idx.iter().map(|&i| self.x[i]).collect(),
            yobs: idx.iter().map(|&i| self.yobs[i]).collect(),
            sigma: self.sigma.as_ref().map(|s| idx.iter().map(|&i| s[i]).collect()),
        }
    }

    /// Reads a CSV with a header row. The first column is the abscissa, the
    /// second the observed transmission; a column named `sigma` supplies
    /// standard deviations.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, FitError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| FitError::InvalidData(e.to_string()))?.clone();
        if headers.len() < 2 {
            return Err(FitError::InvalidData("need at least two columns".into()));
        }
        let sigma_col = headers.iter().position(|h| h == "sigma");
        let (mut x, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| FitError::InvalidData(e.to_string()))?;
            let field = |col: usize| -> Result<f64, FitError> {
                record
                    .get(col)
                    .ok_or_else(|| FitError::InvalidData(format!("row {row}: missing column {col}")))?
                    .parse::<f64>()
                    .map_err(|e| FitError::InvalidData(format!("row {row}: {e}")))
            };
            x.push(field(0)?);
            y.push(field(1)?);
            if let Some(c) = sigma_col {
                s.push(field(c)?);
            }
        }
        Self::new(x, y, sigma_col.map(|_| s))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, FitError> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| FitError::InvalidData(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }
}
