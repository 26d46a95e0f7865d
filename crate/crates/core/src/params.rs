//! Named, shaped parameter tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named tensor stored as a flat row-major buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        let name = name.into();
        let expected: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("tensor `{name}` has a zero dimension")));
        }
        if expected != values.len() {
            return Err(Error::Shape(format!(
                "tensor `{name}` with shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Tensor {
            name,
            shape,
            values,
        })
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            name: name.into(),
            shape,
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ordered collection of tensors making up one model.
///
/// All sets exchanged in one experiment share the same names, shapes and
/// order; aggregation rules rely on that and check it with
/// [`ParamSet::check_same_structure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new(tensors: Vec<Tensor>) -> Result<Self> {
        for (i, t) in tensors.iter().enumerate() {
            if tensors[..i].iter().any(|other| other.name == t.name) {
                return Err(Error::Shape(format!("duplicate tensor name `{}`", t.name)));
            }
        }
        Ok(ParamSet { tensors })
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn num_tensors(&self) -> usize {
        self.tensors.len()
    }

    /// Total number of scalar parameters.
    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn values(&self) -> impl Iterator<Item = f32> + '_ {
        self.tensors.iter().flat_map(|t| t.values.iter().copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f32> + '_ {
        self.tensors.iter_mut().flat_map(|t| t.values.iter_mut())
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(f32::is_finite)
    }

    /// Same tensor names, shapes and order.
    pub fn same_structure(&self, other: &ParamSet) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }

    pub fn check_same_structure(&self, other: &ParamSet) -> Result<()> {
        if self.same_structure(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "parameter sets differ in structure: {:?} vs {:?}",
                self.layout(),
                other.layout()
            )))
        }
    }

    fn layout(&self) -> Vec<(&str, &[usize])> {
        self.tensors
            .iter()
            .map(|t| (t.name.as_str(), t.shape.as_slice()))
            .collect()
    }

    /// Same structure, every value zero.
    pub fn zeros_like(&self) -> ParamSet {
        self.map(|_| 0.0)
    }

    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> ParamSet {
        ParamSet {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    values: t.values.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        }
    }

    /// Concatenate every tensor into one `f64` vector.
    pub fn to_flat_f64(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        out.extend(self.values().map(f64::from));
        out
    }

    /// Build a set with this set's structure from a flat vector, rounding to `f32`.
    pub fn with_flat_f64(&self, flat: &[f64]) -> Result<ParamSet> {
        if flat.len() != self.num_values() {
            return Err(Error::Shape(format!(
                "flat vector has {} values, structure needs {}",
                flat.len(),
                self.num_values()
            )));
        }
        let mut out = self.clone();
        for (dst, &src) in out.values_mut().zip(flat) {
            *dst = src as f32;
        }
        Ok(out)
    }

    /// `self - other`, elementwise in `f64`.
    pub fn delta_f64(&self, other: &ParamSet) -> Result<Vec<f64>> {
        self.check_same_structure(other)?;
        Ok(self
            .values()
            .zip(other.values())
            .map(|(a, b)| f64::from(a) - f64::from(b))
            .collect())
    }

    /// In-place `self += scale * other`.
    pub fn axpy(&mut self, scale: f32, other: &ParamSet) -> Result<()> {
        self.check_same_structure(other)?;
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.values.iter_mut().zip(&b.values) {
                *x += scale * y;
            }
        }
        Ok(())
    }
}

/// Check that a non-empty list of sets all share one structure.
pub fn check_uniform(sets: &[ParamSet]) -> Result<()> {
    let first = sets
        .first()
        .ok_or_else(|| Error::InvalidInput("no parameter sets supplied".into()))?;
    for s in &sets[1..] {
        first.check_same_structure(s)?;
    }
    Ok(())
}
