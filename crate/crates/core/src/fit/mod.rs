//! Weighted nonlinear least squares over the forward models.
//!
//! Each start runs a bounded Levenberg–Marquardt iteration on a
//! central-difference Jacobian; several jittered starts run in parallel and
//! the lowest objective wins.

mod dataset;
mod lm;
mod model;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ring::RingModel;

pub use dataset::Dataset;
pub use model::{saturation_curve, suggest_initial, ModelError, ModelKind, ParamInfo, SaturationPoint};

/// Smallest eigenvalue of the correlation-normalized Fisher matrix below which
/// a direction is treated as flat.
pub const DEGENERACY_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("unknown parameter `{name}` for model {model:?}")]
    UnknownParameter { model: ModelKind, name: String },
    #[error("parameter `{0}` is both free and fixed")]
    FreeAndFixed(String),
    #[error("initial value {value} of `{name}` lies outside [{lower}, {upper}]")]
    InitOutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("bounds of `{name}` are not an interval: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("{points} points cannot constrain {free} free parameters (need at least twice as many)")]
    TooFewPoints { points: usize, free: usize },
    #[error("model evaluation failed: {0}")]
    ModelEvaluationFailed(#[from] ModelError),
    #[error("fit did not converge within {} evaluations", .0.n_eval)]
    NotConverged(Box<FitResult>),
    #[error("degenerate fit: no curvature along {}", .parameters.join(", "))]
    Degenerate {
        result: Box<FitResult>,
        parameters: Vec<String>,
    },
}

impl FitError {
    /// The best result found, for the two failure modes that still produce one.
    pub fn partial_result(&self) -> Option<&FitResult> {
        match self {
            FitError::NotConverged(r) => Some(r),
            FitError::Degenerate { result, .. } => Some(result),
            _ => None,
        }
    }
}

fn default_multistart() -> usize {
    8
}

fn default_jitter() -> f64 {
    0.2
}

fn default_max_evaluations() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub model: ModelKind,
    /// Free parameters; empty selects the model's default set.
    #[serde(default)]
    pub free: Vec<String>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
    /// Starting values; free parameters without one get a data-driven guess.
    #[serde(default)]
    pub init: BTreeMap<String, f64>,
    #[serde(default = "default_multistart")]
    pub multistart: usize,
    /// Relative spread of the jittered starts.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    /// Budget per start.
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
}

impl FitSpec {
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            free: Vec::new(),
            fixed: BTreeMap::new(),
            bounds: BTreeMap::new(),
            init: BTreeMap::new(),
            multistart: default_multistart(),
            jitter: default_jitter(),
            seed: 0,
            max_evaluations: default_max_evaluations(),
        }
    }

    pub fn free(mut self, names: &[&str]) -> Self {
        self.free = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn fix(mut self, name: &str, value: f64) -> Self {
        self.fixed.insert(name.to_string(), value);
        self
    }

    pub fn init(mut self, name: &str, value: f64) -> Self {
        self.init.insert(name.to_string(), value);
        self
    }

    pub fn bound(mut self, name: &str, lower: f64, upper: f64) -> Self {
        self.bounds.insert(name.to_string(), [lower, upper]);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn multistart(mut self, n: usize) -> Self {
        self.multistart = n;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, FitError> {
        serde_json::from_str(text).map_err(|e| FitError::InvalidData(format!("fit spec: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    /// Every model parameter, free and fixed.
    pub estimates: BTreeMap<String, f64>,
    pub free: Vec<String>,
    /// One-sigma proxy from the quadratic expansion of the objective at the
    /// optimum. Scaled by the residual variance when no σ column was given.
    /// `None` where the curvature vanishes.
    pub uncertainties: BTreeMap<String, Option<f64>>,
    pub residual_rms: f64,
    pub objective: f64,
    pub n_eval: usize,
    pub converged: bool,
    pub degenerate: Vec<String>,
    /// Quantities computed from the estimates (ring finesse, linewidth, rates).
    pub derived: BTreeMap<String, f64>,
    /// Objective after each accepted step of the winning start.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.estimates.get(name).copied()
    }

    pub fn values(&self) -> Vec<f64> {
        self.model.parameters().iter().map(|p| self.estimates[p.name]).collect()
    }

    /// Model prediction at the dataset abscissae.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.model.evaluate(&self.values(), x)
    }
}

/// A fit specification resolved against a dataset: full parameter vector,
/// bounds, and the indices that are free.
pub struct Resolved<'a> {
    data: Dataset,
    kind: ModelKind,
    values: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    free: Vec<usize>,
    spec: &'a FitSpec,
}

impl<'a> Resolved<'a> {
    pub fn new(data: &Dataset, spec: &'a FitSpec) -> Result<Self, FitError> {
        let kind = spec.model;
        let params = kind.parameters();
        let lookup = |name: &str| {
            kind.index_of(name).ok_or_else(|| FitError::UnknownParameter {
                model: kind,
                name: name.to_string(),
            })
        };

        if kind != ModelKind::SaturationCurve {
            data.require_monotone()?;
        }

        let mut values: Vec<f64> = params.iter().map(|p| p.default).collect();
        let mut lower: Vec<f64> = params.iter().map(|p| p.lower).collect();
        let mut upper: Vec<f64> = params.iter().map(|p| p.upper).collect();
        for (name, &[lo, hi]) in &spec.bounds {
            let i = lookup(name)?;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(FitError::InvalidBounds {
                    name: name.clone(),
                    lower: lo,
                    upper: hi,
                });
            }
            lower[i] = lo;
            upper[i] = hi;
        }
        for (name, &v) in &spec.fixed {
            values[lookup(name)?] = v;
        }

        let free_names: Vec<&str> = if spec.free.is_empty() {
            kind.default_free().to_vec()
        } else {
            spec.free.iter().map(String::as_str).collect()
        };
        let mut free = Vec::new();
        for name in free_names {
            if spec.fixed.contains_key(name) {
                return Err(FitError::FreeAndFixed(name.to_string()));
            }
            let i = lookup(name)?;
            if !free.contains(&i) {
                free.push(i);
            }
        }
        if data.len() < 2 * free.len() {
            return Err(FitError::TooFewPoints {
                points: data.len(),
                free: free.len(),
            });
        }

        let data = data.sorted();
        let current = values.clone();
        let guesses = suggest_initial(kind, &data, &|name| {
            kind.index_of(name).map_or(f64::NAN, |i| current[i])
        });
        for &i in &free {
            let name = params[i].name;
            if let Some(&v) = spec.init.get(name) {
                if !(v >= lower[i] && v <= upper[i]) {
                    return Err(FitError::InitOutOfBounds {
                        name: name.to_string(),
                        value: v,
                        lower: lower[i],
                        upper: upper[i],
                    });
                }
                values[i] = v;
            } else if let Some(&(_, g)) = guesses.iter().find(|(n, _)| *n == name) {
                if g.is_finite() {
                    values[i] = g.clamp(lower[i], upper[i]);
                }
            } else {
                values[i] = values[i].clamp(lower[i], upper[i]);
            }
        }
        for name in spec.init.keys() {
            lookup(name)?;
        }

        Ok(Self {
            data,
            kind,
            values,
            lower,
            upper,
            free,
            spec,
        })
    }

    pub fn free_names(&self) -> Vec<&'static str> {
        self.free.iter().map(|&i| self.kind.parameters()[i].name).collect()
    }

    /// Starting values of the free parameters.
    pub fn initial(&self) -> Vec<f64> {
        self.free.iter().map(|&i| self.values[i]).collect()
    }

    fn full(&self, free_values: &[f64]) -> Vec<f64> {
        let mut v = self.values.clone();
        for (&i, &x) in self.free.iter().zip(free_values) {
            v[i] = x;
        }
        v
    }

    fn residuals(&self, free_values: &[f64]) -> Result<Vec<f64>, ModelError> {
        let model = self.kind.evaluate(&self.full(free_values), self.data.x())?;
        Ok(model
            .iter()
            .zip(self.data.yobs())
            .enumerate()
            .map(|(i, (m, y))| self.data.weight(i).sqrt() * (m - y))
            .collect())
    }

    /// Weighted sum of squared residuals for the given free values.
    pub fn objective(&self, free_values: &[f64]) -> Result<f64, ModelError> {
        let model = self.kind.evaluate(&self.full(free_values), self.data.x())?;
        Ok(model
            .iter()
            .zip(self.data.yobs())
            .enumerate()
            .map(|(i, (m, y))| self.data.weight(i) * (m - y) * (m - y))
            .sum())
    }

    /// Gradient `2 Jᵀ W r` of the objective, with the Jacobian taken by
    /// central differences of relative step `rel_step`.
    pub fn objective_gradient(&self, free_values: &[f64], rel_step: f64) -> Result<Vec<f64>, ModelError> {
        let (lower, upper, typical) = self.free_bounds();
        let residuals = |x: &[f64]| self.residuals(x);
        let problem = lm::Problem {
            residuals: &residuals,
            lower: &lower,
            upper: &upper,
            typical: &typical,
        };
        let (jac, _) = problem.jacobian(free_values, rel_step)?;
        let r = nalgebra::DVector::from_vec(self.residuals(free_values)?);
        Ok((jac.transpose() * r * 2.0).iter().copied().collect())
    }

    fn free_bounds(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let params = self.kind.parameters();
        (
            self.free.iter().map(|&i| self.lower[i]).collect(),
            self.free.iter().map(|&i| self.upper[i]).collect(),
            self.free.iter().map(|&i| params[i].typical).collect(),
        )
    }

    fn starts(&self) -> Vec<Vec<f64>> {
        let (lower, upper, typical) = self.free_bounds();
        let base = self.initial();
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        let mut out = vec![base.clone()];
        for _ in 1..self.spec.multistart.max(1) {
            let s = base
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let spread = self.spec.jitter * v.abs().max(typical[i]);
                    (v + spread * rng.random_range(-1.0..=1.0)).clamp(lower[i], upper[i])
                })
                .collect();
            out.push(s);
        }
        out
    }

    pub fn run(&self) -> Result<FitResult, FitError> {
        let (lower, upper, typical) = self.free_bounds();
        let residuals = |x: &[f64]| self.residuals(x);
        let problem = lm::Problem {
            residuals: &residuals,
            lower: &lower,
            upper: &upper,
            typical: &typical,
        };
        let outcomes: Vec<Result<lm::Outcome, ModelError>> = self
            .starts()
            .par_iter()
            .map(|s| problem.minimize(s, self.spec.max_evaluations))
            .collect();

        let total_eval: usize = outcomes.iter().flatten().map(|o| o.n_eval).sum();
        let c_index = self
            .free
            .iter()
            .position(|&i| self.kind.parameters()[i].name == "cooperativity");
        let mut best: Option<lm::Outcome> = None;
        let mut first_error = None;
        for o in outcomes {
            match o {
                Ok(o) => {
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            let tie = (o.cost - b.cost).abs() <= 1e-12 * b.cost.max(f64::MIN_POSITIVE);
                            if tie {
                                c_index.is_some_and(|c| o.x[c] < b.x[c])
                            } else {
                                o.cost < b.cost
                            }
                        }
                    };
                    if better {
                        best = Some(o);
                    }
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let Some(mut best) = best else {
            return Err(first_error.map_or_else(|| FitError::InvalidData("no fit starts".into()), FitError::from));
        };

        if self.kind == ModelKind::EmptyRing {
            self.canonicalize_ring(&mut best.x);
        }
        let result = self.summarize(&best, total_eval)?;
        if !result.converged {
            return Err(FitError::NotConverged(Box::new(result)));
        }
        if !result.degenerate.is_empty() {
            let parameters = result.degenerate.clone();
            return Err(FitError::Degenerate {
                result: Box::new(result),
                parameters,
            });
        }
        Ok(result)
    }

    /// The ring response is symmetric under `t ↔ a`; report the undercoupled
    /// assignment `a ≤ t`.
    fn canonicalize_ring(&self, x: &mut [f64]) {
        let pos = |name| self.free.iter().position(|&i| self.kind.parameters()[i].name == name);
        if let (Some(ti), Some(ai)) = (pos("t_coupler"), pos("a_roundtrip")) {
            if x[ai] > x[ti] && x[ai] < 1.0 {
                x.swap(ti, ai);
            }
        }
    }

    fn summarize(&self, best: &lm::Outcome, n_eval: usize) -> Result<FitResult, FitError> {
        let params = self.kind.parameters();
        let names = self.free_names();
        let full = self.full(&best.x);
        let model = self.kind.evaluate(&full, self.data.x())?;
        let n = self.data.len();
        let residual_rms = (model
            .iter()
            .zip(self.data.yobs())
            .map(|(m, y)| (m - y) * (m - y))
            .sum::<f64>()
            / n as f64)
            .sqrt();

        let (uncertainties, degenerate) = self.curvature(&best.x, best.cost)?;
        let estimates = params
            .iter()
            .zip(&full)
            .map(|(p, &v)| (p.name.to_string(), v))
            .collect();
        let uncertainties = names
            .iter()
            .zip(uncertainties)
            .map(|(n, u)| (n.to_string(), u))
            .collect();

        let mut derived = BTreeMap::new();
        if self.kind == ModelKind::EmptyRing {
            if let Ok(ring) = RingModel::new(full[0], full[1], full[2] * 1e6, full[3] * 1e6) {
                derived.insert("finesse".to_string(), ring.finesse());
                derived.insert("linewidth_mhz".to_string(), ring.linewidth() / 1e6);
                derived.insert(
                    "on_resonance_transmission".to_string(),
                    ring.on_resonance_transmission(),
                );
                if let Ok((ki, kex)) = ring.rates() {
                    derived.insert("kappa_i_mhz".to_string(), crate::units::angular_to_mhz(ki));
                    derived.insert("kappa_ex_mhz".to_string(), crate::units::angular_to_mhz(kex));
                }
            }
        }

        Ok(FitResult {
            model: self.kind,
            estimates,
            free: names.iter().map(|s| s.to_string()).collect(),
            uncertainties,
            residual_rms,
            objective: best.cost,
            n_eval,
            converged: best.converged,
            degenerate,
            derived,
            trace: best.trace.clone(),
        })
    }

    /// Uncertainty proxy and flat directions from `JᵀWJ` at the optimum.
    fn curvature(&self, x: &[f64], cost: f64) -> Result<(Vec<Option<f64>>, Vec<String>), ModelError> {
        let p = x.len();
        let names = self.free_names();
        if p == 0 {
            return Ok((Vec::new(), Vec::new()));
        }
        let (lower, upper, typical) = self.free_bounds();
        let residuals = |v: &[f64]| self.residuals(v);
        let problem = lm::Problem {
            residuals: &residuals,
            lower: &lower,
            upper: &upper,
            typical: &typical,
        };
        let (jac, _) = problem.jacobian(x, 1e-6)?;
        let fisher = jac.transpose() * &jac;
        let variance_scale = if self.data.sigma().is_some() {
            1.0
        } else {
            let dof = self.data.len().saturating_sub(p).max(1);
            cost / dof as f64
        };

        let mut degenerate = Vec::new();
        let scale: Vec<f64> = (0..p).map(|i| fisher[(i, i)].sqrt()).collect();
        let max_scale = scale.iter().copied().fold(0.0, f64::max);
        for i in 0..p {
            if !(scale[i] > 1e-12 * max_scale) || scale[i] == 0.0 {
                degenerate.push(names[i].to_string());
            }
        }

        let keep: Vec<usize> = (0..p).filter(|i| !degenerate.iter().any(|d| d == names[*i])).collect();
        let mut sigmas = vec![None; p];
        if !keep.is_empty() {
            let k = keep.len();
            let normalized = DMatrix::from_fn(k, k, |a, b| {
                fisher[(keep[a], keep[b])] / (scale[keep[a]] * scale[keep[b]])
            });
            let eig = SymmetricEigen::new(normalized.clone());
            for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda < DEGENERACY_EIGENVALUE {
                    let v = eig.eigenvectors.column(j);
                    let (a, _) = v
                        .iter()
                        .enumerate()
                        .fold((0, 0.0), |acc, (i, c)| if c.abs() > acc.1 { (i, c.abs()) } else { acc });
                    let name = names[keep[a]].to_string();
                    if !degenerate.contains(&name) {
                        degenerate.push(name);
                    }
                }
            }
            if let Some(inv) = normalized.try_inverse() {
                for a in 0..k {
                    let var = inv[(a, a)] * variance_scale / (scale[keep[a]] * scale[keep[a]]);
                    if var.is_finite() && var >= 0.0 {
                        sigmas[keep[a]] = Some(var.sqrt());
                    }
                }
            }
        }

        for i in 0..p {
            if let Some(s) = sigmas[i] {
                // An uncertainty larger than the value itself means the data
                // cannot pin the parameter down.
                if s > x[i].abs().max(typical[i]) && !degenerate.iter().any(|d| d == names[i]) {
                    degenerate.push(names[i].to_string());
                }
            }
        }
        Ok((sigmas, degenerate))
    }
}

/// `values` plus independent Gaussian noise of standard deviation `sd`,
/// reproducible from `seed`.
pub fn gaussian_noise(values: &[f64], sd: f64, seed: u64) -> Vec<f64> {
    if sd == 0.0 {
        return values.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, sd.abs()).expect("finite standard deviation");
    values
        .iter()
        .map(|v| v + rand_distr::Distribution::sample(&normal, &mut rng))
        .collect()
}

/// Fits `spec` to `data`.
pub fn fit(data: &Dataset, spec: &FitSpec) -> Result<FitResult, FitError> {
    Resolved::new(data, spec)?.run()
}

/// Weighted sum of squared residuals at the given parameter values. Parameters
/// not listed take their fixed, initial or default values.
pub fn objective(data: &Dataset, spec: &FitSpec, params: &BTreeMap<String, f64>) -> Result<f64, FitError> {
    let kind = spec.model;
    let mut full: Vec<f64> = kind.parameters().iter().map(|p| p.default).collect();
    for (name, &v) in spec.fixed.iter().chain(&spec.init).chain(params) {
        let i = kind.index_of(name).ok_or_else(|| FitError::UnknownParameter {
            model: kind,
            name: name.clone(),
        })?;
        full[i] = v;
    }
    let model = kind.evaluate(&full, data.x())?;
    Ok(model
        .iter()
        .zip(data.yobs())
        .enumerate()
        .map(|(i, (m, y))| data.weight(i) * (m - y) * (m - y))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_single_point() {
        let data = Dataset::new(vec![0.0], vec![0.0], Some(vec![1.0])).unwrap();
        let spec = FitSpec::new(ModelKind::EmptyRing);
        let mut p = BTreeMap::new();
        p.insert("scale".to_string(), 1.0);
        let t0 = RingModel::new(0.980_244, 0.930_371, 148e6, 0.0)
            .unwrap()
            .transmission(0.0);
        let data2 = Dataset::new(vec![0.0], vec![t0 - 0.1], Some(vec![1.0])).unwrap();
        assert!((objective(&data2, &spec, &p).unwrap() - 0.01).abs() < 1e-12);
        assert!(objective(&data, &spec, &p).unwrap() > 0.0);
    }

    #[test]
    fn spec_validation() {
        let data = Dataset::new((0..20).map(f64::from).collect(), vec![1.0; 20], None).unwrap();
        let both = FitSpec::new(ModelKind::EmptyRing).free(&["scale"]).fix("scale", 1.0);
        assert!(matches!(fit(&data, &both), Err(FitError::FreeAndFixed(_))));
        let unknown = FitSpec::new(ModelKind::EmptyRing).free(&["bogus"]);
        assert!(matches!(fit(&data, &unknown), Err(FitError::UnknownParameter { .. })));
        let outside = FitSpec::new(ModelKind::EmptyRing).free(&["scale"]).init("scale", 100.0);
        assert!(matches!(fit(&data, &outside), Err(FitError::InitOutOfBounds { .. })));
        let few = Dataset::new(vec![0.0, 1.0, 2.0], vec![1.0; 3], None).unwrap();
        assert!(matches!(
            fit(&few, &FitSpec::new(ModelKind::EmptyRing)),
            Err(FitError::TooFewPoints { points: 3, free: 4 })
        ));
    }

    #[test]
    fn spec_json_defaults() {
        let spec = FitSpec::from_json(r#"{"model": "saturation_curve", "free": ["n_sat"]}"#).unwrap();
        assert_eq!(spec.multistart, 8);
        assert!(FitSpec::from_json(r#"{"model": "saturation_curve", "nope": 1}"#).is_err());
    }
}
