//! Per-example computation graph with reverse-mode gradients.
//!
//! A [`Graph`] is built fresh for every example. Each op appends a node whose
//! value is computed eagerly; [`Graph::backward`] then walks the nodes in
//! reverse creation order and accumulates gradients into the parameters of a
//! [`ParamStore`].

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::linalg::{add_assign, matvec_acc, matvec_t_acc, outer_acc};
use super::lstm::{self, LstmParams, LstmStep};
use super::param::{ParamId, ParamStore, Shape};
use super::NnError;
use crate::scalar::Scalar;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Tanh,
    Relu,
}

#[derive(Debug)]
enum Op<T> {
    Constant,
    Lookup {
        param: ParamId,
        row: usize,
    },
    Param(ParamId),
    Affine {
        x: NodeId,
        w: ParamId,
        b: Option<ParamId>,
    },
    Tanh(NodeId),
    Relu(NodeId),
    Concat(Vec<NodeId>),
    Softmax(NodeId),
    CrossEntropy {
        probs: NodeId,
        classes: Vec<usize>,
        mass: T,
    },
    Lstm {
        inputs: Vec<NodeId>,
        params: LstmParams,
        steps: Vec<LstmStep<T>>,
    },
}

#[derive(Debug)]
struct Node<T> {
    value: Vec<T>,
    op: Op<T>,
}

#[derive(Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let mut out: Vec<T> = logits.iter().map(|v| (*v - max).exp()).collect();
    let total: T = out.iter().copied().sum();
    out.iter_mut().for_each(|v| *v = *v / total);
    out
}

fn normalize_classes(classes: &[usize], len: usize) -> Result<Vec<usize>, NnError> {
    if classes.is_empty() {
        return Err(NnError::EmptyClassSet);
    }
    let mut c = classes.to_vec();
    c.sort_unstable();
    c.dedup();
    if let Some(&bad) = c.iter().find(|&&i| i >= len) {
        return Err(NnError::ClassOutOfRange { index: bad, len });
    }
    Ok(c)
}

/// `-log(sum_{i in C} p_i)`: cross-entropy generalized to a set of correct classes.
pub fn cross_entropy_multi<T: Scalar>(probs: &[T], classes: &[usize]) -> Result<T, NnError> {
    let classes = normalize_classes(classes, probs.len())?;
    Ok(-class_mass(probs, &classes).ln())
}

/// Probability mass on `classes`; exactly one when every class is correct.
fn class_mass<T: Scalar>(probs: &[T], classes: &[usize]) -> T {
    if classes.len() == probs.len() {
        T::one()
    } else {
        classes.iter().map(|&i| probs[i]).sum()
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v.partial_cmp(&b) != Some(Ordering::Greater) => {}
            _ => best = Some((i, *v)),
        }
    }
    best.map(|(i, _)| i)
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, node: NodeId) -> &[T] {
        &self.nodes[node.0].value
    }

    fn push(&mut self, value: Vec<T>, op: Op<T>) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, value: Vec<T>) -> NodeId {
        self.push(value, Op::Constant)
    }

    /// Embedding lookup: row `row` of a matrix parameter.
    pub fn lookup(&mut self, store: &ParamStore<T>, param: ParamId, row: usize) -> Result<NodeId, NnError> {
        let p = store.get(param);
        let rows = p.shape().rows();
        if row >= rows {
            return Err(NnError::RowOutOfRange {
                param: p.name().to_string(),
                row,
                rows,
            });
        }
        let value = p.row(row).to_vec();
        Ok(self.push(value, Op::Lookup { param, row }))
    }

    /// A whole vector parameter as a node.
    pub fn parameter(&mut self, store: &ParamStore<T>, param: ParamId) -> NodeId {
        let value = store.get(param).values().to_vec();
        self.push(value, Op::Param(param))
    }

    /// `W x (+ b)`.
    pub fn affine(
        &mut self,
        store: &ParamStore<T>,
        x: NodeId,
        w: ParamId,
        b: Option<ParamId>,
    ) -> Result<NodeId, NnError> {
        let wp = store.get(w);
        let (rows, cols) = match wp.shape() {
            Shape::Matrix(r, c) => (r, c),
            Shape::Vector(n) => (1, n),
        };
        let xv = self.value(x);
        if xv.len() != cols {
            return Err(NnError::DimensionMismatch {
                op: "affine",
                expected: cols,
                found: xv.len(),
            });
        }
        let mut out = match b {
            Some(b) => {
                let bv = store.get(b).values();
                if bv.len() != rows {
                    return Err(NnError::DimensionMismatch {
                        op: "affine bias",
                        expected: rows,
                        found: bv.len(),
                    });
                }
                bv.to_vec()
            }
            None => vec![T::zero(); rows],
        };
        matvec_acc(&mut out, wp.values(), xv);
        Ok(self.push(out, Op::Affine { x, w, b }))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).iter().map(|v| v.tanh()).collect();
        self.push(v, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self
            .value(x)
            .iter()
            .map(|v| if *v > T::zero() { *v } else { T::zero() })
            .collect();
        self.push(v, Op::Relu(x))
    }

    pub fn activation(&mut self, kind: ActivationKind, x: NodeId) -> NodeId {
        match kind {
            ActivationKind::Tanh => self.tanh(x),
            ActivationKind::Relu => self.relu(x),
        }
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut v = Vec::with_capacity(parts.iter().map(|p| self.value(*p).len()).sum());
        for p in parts {
            v.extend_from_slice(self.value(*p));
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId, NnError> {
        let xv = self.value(x);
        if xv.is_empty() {
            return Err(NnError::EmptyInput("softmax"));
        }
        let v = softmax(xv);
        Ok(self.push(v, Op::Softmax(x)))
    }

    /// Scalar loss node `-log(sum_{i in C} probs[i])`.
    pub fn cross_entropy_multi(&mut self, probs: NodeId, classes: &[usize]) -> Result<NodeId, NnError> {
        let pv = self.value(probs);
        let classes = normalize_classes(classes, pv.len())?;
        let mass = class_mass(pv, &classes);
        Ok(self.push(vec![-mass.ln()], Op::CrossEntropy { probs, classes, mass }))
    }

    /// Final hidden state after feeding `inputs` in order; zeros when empty.
    pub fn lstm(&mut self, store: &ParamStore<T>, params: &LstmParams, inputs: &[NodeId]) -> Result<NodeId, NnError> {
        let xs: Vec<&[T]> = inputs.iter().map(|n| self.value(*n)).collect();
        let (steps, h) = lstm::forward(store, params, &xs)?;
        Ok(self.push(
            h,
            Op::Lstm {
                inputs: inputs.to_vec(),
                params: params.clone(),
                steps,
            },
        ))
    }

    /// Accumulates d`loss`/d`param` into every reachable parameter's gradient.
    pub fn backward(&self, loss: NodeId, store: &mut ParamStore<T>) -> Result<(), NnError> {
        if self.value(loss).len() != 1 {
            return Err(NnError::NonScalarLoss(self.value(loss).len()));
        }
        let mut grads: Vec<Vec<T>> = vec![Vec::new(); loss.0 + 1];
        grads[loss.0] = vec![T::one()];
        for idx in (0..=loss.0).rev() {
            if grads[idx].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut grads[idx]);
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Lookup { param, row } => {
                    let p = store.get_mut(*param);
                    let cols = p.shape().cols();
                    add_assign(&mut p.grad_mut()[row * cols..(row + 1) * cols], &g);
                }
                Op::Param(param) => add_assign(store.get_mut(*param).grad_mut(), &g),
                Op::Affine { x, w, b } => {
                    let xv = self.value(*x);
                    outer_acc(store.get_mut(*w).grad_mut(), &g, xv);
                    if let Some(b) = b {
                        add_assign(store.get_mut(*b).grad_mut(), &g);
                    }
                    let mut gx = vec![T::zero(); xv.len()];
                    matvec_t_acc(&mut gx, store.get(*w).values(), &g);
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Tanh(x) => {
                    let gx: Vec<T> = g
                        .iter()
                        .zip(&node.value)
                        .map(|(g, y)| *g * (T::one() - *y * *y))
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Relu(x) => {
                    let gx: Vec<T> = g
                        .iter()
                        .zip(self.value(*x))
                        .map(|(g, v)| if *v > T::zero() { *g } else { T::zero() })
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.value(*p).len();
                        accumulate(&mut grads, *p, &g[offset..offset + n]);
                        offset += n;
                    }
                }
                Op::Softmax(x) => {
                    let p = &node.value;
                    let dot: T = g.iter().zip(p).map(|(a, b)| *a * *b).sum();
                    let gx: Vec<T> = g.iter().zip(p).map(|(g, p)| *p * (*g - dot)).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::CrossEntropy { probs, classes, mass } => {
                    let mut gp = vec![T::zero(); self.value(*probs).len()];
                    let d = -g[0] / *mass;
                    for &c in classes {
                        gp[c] = d;
                    }
                    accumulate(&mut grads, *probs, &gp);
                }
                Op::Lstm { inputs, params, steps } => {
                    let xs: Vec<&[T]> = inputs.iter().map(|n| self.value(*n)).collect();
                    let mut gxs: Vec<Vec<T>> = xs.iter().map(|x| vec![T::zero(); x.len()]).collect();
                    lstm::backward(store, params, &xs, steps, &g, &mut gxs);
                    for (n, gx) in inputs.iter().zip(&gxs) {
                        accumulate(&mut grads, *n, gx);
                    }
                }
            }
        }
        Ok(())
    }
}

fn accumulate<T: Scalar>(grads: &mut [Vec<T>], node: NodeId, g: &[T]) {
    let slot = &mut grads[node.0];
    if slot.is_empty() {
        *slot = g.to_vec();
    } else {
        add_assign(slot, g);
    }
}
