use crate::nn::{init_parameter, ActivationKind, Graph, InitScheme, NnError, NodeId, ParamId, ParamStore, Shape};
use crate::scalar::Scalar;

/// `U g(W x + b1) + b2`, returning pre-softmax scores. Biases are optional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mlp {
    pub w: ParamId,
    pub b1: Option<ParamId>,
    pub u: ParamId,
    pub b2: Option<ParamId>,
    pub activation: ActivationKind,
}

pub(crate) fn matrix<T: Scalar>(
    store: &mut ParamStore<T>,
    name: &str,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<ParamId, NnError> {
    store.add(init_parameter(
        name,
        Shape::Matrix(rows, cols),
        seed,
        InitScheme::FanBalanced,
    )?)
}

pub(crate) fn bias<T: Scalar>(store: &mut ParamStore<T>, name: &str, len: usize) -> Result<ParamId, NnError> {
    store.add(init_parameter(name, Shape::Vector(len), 0, InitScheme::Zeros)?)
}

impl Mlp {
    pub fn logits<T: Scalar>(&self, graph: &mut Graph<T>, store: &ParamStore<T>, x: NodeId) -> Result<NodeId, NnError> {
        let h = graph.affine(store, x, self.w, self.b1)?;
        let a = graph.activation(self.activation, h);
        graph.affine(store, a, self.u, self.b2)
    }

    pub fn output_dim<T: Scalar>(&self, store: &ParamStore<T>) -> usize {
        store.get(self.u).shape().rows()
    }
}
