use std::collections::BTreeMap;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NnError;
use crate::scalar::Scalar;

/// Shape of a learnable tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix(r, _) => r,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            Shape::Vector(_) => 1,
            Shape::Matrix(_, c) => c,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Vector(n) => vec![n],
            Shape::Matrix(r, c) => vec![r, c],
        }
    }
}

/// How a parameter's values are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    FanBalanced,
    /// Lookup table: each row is initialized as a vector of its own
    /// length, so the bound does not shrink with the vocabulary size.
    Lookup,
    Zeros,
}

/// A named tensor with its gradient buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter<T> {
    name: String,
    shape: Shape,
    values: Vec<T>,
    grad: Vec<T>,
    touched: bool,
}

impl<T: Scalar> Parameter<T> {
    pub fn zeros(name: impl Into<String>, shape: Shape) -> Result<Self, NnError> {
        let name = name.into();
        if shape.is_empty() {
            return Err(NnError::EmptyShape(name));
        }
        let n = shape.len();
        Ok(Self {
            name,
            shape,
            values: vec![T::zero(); n],
            grad: vec![T::zero(); n],
            touched: false,
        })
    }

    pub fn from_values(name: impl Into<String>, shape: Shape, values: Vec<T>) -> Result<Self, NnError> {
        let mut p = Self::zeros(name, shape)?;
        if values.len() != p.values.len() {
            return Err(NnError::DimensionMismatch {
                op: "parameter",
                expected: p.values.len(),
                found: values.len(),
            });
        }
        p.values = values;
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn grad(&self) -> &[T] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [T] {
        self.touched = true;
        &mut self.grad
    }

    pub fn row(&self, r: usize) -> &[T] {
        let c = self.shape.cols();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let c = self.shape.cols();
        &mut self.values[r * c..(r + 1) * c]
    }

    pub fn zero_grad(&mut self) {
        if self.touched {
            self.grad.iter_mut().for_each(|g| *g = T::zero());
            self.touched = false;
        }
    }

    fn apply_sgd(&mut self, lr: T) {
        if !self.touched {
            return;
        }
        for (v, g) in self.values.iter_mut().zip(self.grad.iter_mut()) {
            *v -= lr * *g;
            *g = T::zero();
        }
        self.touched = false;
    }
}

/// Stable 64-bit FNV-1a, used to derive per-parameter seeds from names.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Creates a parameter whose values depend only on `(seed, name, shape)`.
pub fn init_parameter<T: Scalar>(
    name: &str,
    shape: Shape,
    seed: u64,
    scheme: InitScheme,
) -> Result<Parameter<T>, NnError> {
    let mut p = Parameter::zeros(name, shape)?;
    if scheme == InitScheme::Zeros {
        return Ok(p);
    }
    let (fan_out, fan_in) = match (shape, scheme) {
        (Shape::Vector(n), _) => (n, 1),
        (Shape::Matrix(_, c), InitScheme::Lookup) => (c, 1),
        (Shape::Matrix(r, c), _) => (r, c),
    };
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(name.as_bytes()));
    let dist = Uniform::new_inclusive(-bound, bound);
    for v in p.values.iter_mut() {
        *v = T::from_f64_lossy(dist.sample(&mut rng));
    }
    Ok(p)
}

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

/// Owns every learnable tensor of a model.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    params: Vec<Parameter<T>>,
    by_name: BTreeMap<String, ParamId>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            params: Vec::new(),
            by_name: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, param: Parameter<T>) -> Result<ParamId, NnError> {
        if self.by_name.contains_key(param.name()) {
            return Err(NnError::DuplicateParameter(param.name().to_string()));
        }
        let id = ParamId(self.params.len());
        self.by_name.insert(param.name().to_string(), id);
        self.params.push(param);
        Ok(id)
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter<T>> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Parameter<T>> {
        self.id(name).map(move |id| self.get_mut(id))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Parameters in creation order.
    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    /// Parameter names in lexicographic order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.values.iter().all(|v| v.is_finite()))
    }
}

/// `p <- p - lr * grad` for every parameter, then clears the gradients.
pub fn sgd_step<T: Scalar>(store: &mut ParamStore<T>, learning_rate: T) -> Result<(), NnError> {
    if learning_rate.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(NnError::InvalidLearningRate(learning_rate.as_f64()));
    }
    for p in store.iter_mut() {
        p.apply_sgd(learning_rate);
    }
    Ok(())
}
