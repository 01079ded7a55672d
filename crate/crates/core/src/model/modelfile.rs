//! TOML model files.
//!
//! ```toml
//! [model]
//! n = 1
//! s = 1
//! Z = [[0.0, -1.0, 0.0], [1.0, -0.3, 0.0], [0.0, 0.0, -0.5]]
//! A = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.2]]
//! alpha = [0.0, 0.0, 0.1]
//!
//! [[model.levy.atom]]
//! weight = 0.2
//! eta = [0.0, 0.0, 1.5]
//!
//! [[model.levy.line]]
//! direction = [0.0, 1.0, 0.0]
//! nodes = [[0.5, 0.3], [-2.0, 0.1]]
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{HybridModel, LevyComponent, LevyMeasure};
use crate::error::{Error, Result};
use crate::phase_space::Dims;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weight: f64,
    pub eta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub direction: Vec<f64>,
    pub nodes: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atom: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub line: Vec<LineSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n: usize,
    pub s: usize,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub levy: LevySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: ModelSpec,
}

fn matrix<T: Real>(key: &str, rows: &[Vec<f64>], d: usize) -> Result<DMatrix<T>> {
    if rows.len() != d {
        return Err(Error::Parse(format!("{key}: {} rows, expected {d}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::Parse(format!("{key}: row {} has {} entries, expected {d}", i + 1, r.len())));
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| T::lit(rows[i][j])))
}

fn vector<T: Real>(key: &str, x: &[f64], d: usize) -> Result<DVector<T>> {
    if x.len() != d {
        return Err(Error::Parse(format!("{key}: {} entries, expected {d}", x.len())));
    }
    Ok(DVector::from_iterator(d, x.iter().map(|v| T::lit(*v))))
}

impl ModelSpec {
    /// Shape-checked model, not yet validated.
    pub fn to_unchecked<T: Real>(&self) -> Result<HybridModel<T>> {
        let dims = Dims::new(self.n, self.s).map_err(|e| Error::Parse(format!("model.n/model.s: {e}")))?;
        let d = dims.d();
        let z = matrix("model.Z", &self.z, d)?;
        let a = matrix("model.A", &self.a, d)?;
        let alpha = vector("model.alpha", &self.alpha, d)?;
        let mut nu = LevyMeasure::empty(d);
        for (i, at) in self.levy.atom.iter().enumerate() {
            let eta = vector(&format!("model.levy.atom[{i}].eta"), &at.eta, d)?;
            nu = nu.with_atom(T::lit(at.weight), eta);
        }
        for (i, l) in self.levy.line.iter().enumerate() {
            let dir = vector(&format!("model.levy.line[{i}].direction"), &l.direction, d)?;
            nu = nu.with_line(dir, l.nodes.iter().map(|[v, w]| (T::lit(*v), T::lit(*w))).collect());
        }
        HybridModel::unchecked(dims, z, a, nu, alpha)
    }

    /// Parsed and validated model.
    pub fn to_model<T: Real>(&self) -> Result<HybridModel<T>> {
        let mut m = self.to_unchecked()?;
        m.validate(T::eig_tol())?;
        Ok(m)
    }

    pub fn from_model<T: Real>(m: &HybridModel<T>) -> Self {
        let rows = |x: &DMatrix<T>| (0..x.nrows()).map(|i| (0..x.ncols()).map(|j| x[(i, j)].as_f64()).collect()).collect();
        let vecf = |x: &DVector<T>| x.iter().map(|v| v.as_f64()).collect::<Vec<f64>>();
        let mut levy = LevySpec::default();
        for c in &m.triplet.nu.components {
            match c {
                LevyComponent::Atom { weight, eta } => levy.atom.push(AtomSpec { weight: weight.as_f64(), eta: vecf(eta) }),
                LevyComponent::Line { direction, nodes } => levy.line.push(LineSpec {
                    direction: vecf(direction),
                    nodes: nodes.iter().map(|(v, w)| [v.as_f64(), w.as_f64()]).collect(),
                }),
            }
        }
        ModelSpec { n: m.dims.n, s: m.dims.s, z: rows(&m.z), a: rows(&m.triplet.a), alpha: vecf(&m.triplet.alpha), levy }
    }
}

pub fn parse_model_file(text: &str) -> Result<ModelSpec> {
    let f: ModelFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(f.model)
}

pub fn model_file_string(spec: &ModelSpec) -> Result<String> {
    toml::to_string(&ModelFile { model: spec.clone() }).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_model<T: Real>(path: &std::path::Path) -> Result<HybridModel<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_model_file(&text)?.to_model()
}

pub fn write_model<T: Real>(path: &std::path::Path, m: &HybridModel<T>) -> Result<()> {
    std::fs::write(path, model_file_string(&ModelSpec::from_model(m))?)?;
    Ok(())
}
