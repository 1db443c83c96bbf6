//! Single-layer LSTM with separate per-gate weights.
//!
//! Gates follow the usual formulation with zero initial hidden and cell
//! states:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)     f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)     g = tanh(W_g x + U_g h + b_g)
//! c' = f ⊙ c + i ⊙ g             h' = o ⊙ tanh(c')
//! ```

use serde::{Deserialize, Serialize};

use super::linalg::{matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use super::param::{init_parameter, InitScheme, ParamId, ParamStore, Shape};
use super::NnError;
use crate::scalar::Scalar;

/// Gate order used for every per-gate array.
pub const GATES: [&str; 4] = ["input", "forget", "output", "candidate"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmDims {
    pub input: usize,
    pub hidden: usize,
}

/// Parameter handles of one LSTM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LstmParams {
    pub dims: LstmDims,
    /// Input-to-gate matrices, `hidden x input`.
    pub w: [ParamId; 4],
    /// Hidden-to-gate matrices, `hidden x hidden`.
    pub u: [ParamId; 4],
    pub b: [ParamId; 4],
}

impl LstmParams {
    /// Registers `{prefix}.w_{gate}`, `{prefix}.u_{gate}` and `{prefix}.b_{gate}`.
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, prefix: &str, dims: LstmDims, seed: u64) -> Result<Self, NnError> {
        let mut reg = |kind: &str, gate: &str, shape: Shape, scheme: InitScheme| {
            let name = format!("{prefix}.{kind}_{gate}");
            store.add(init_parameter(&name, shape, seed, scheme)?)
        };
        let mut w = Vec::with_capacity(4);
        let mut u = Vec::with_capacity(4);
        let mut b = Vec::with_capacity(4);
        for gate in GATES {
            w.push(reg(
                "w",
                gate,
                Shape::Matrix(dims.hidden, dims.input),
                InitScheme::FanBalanced,
            )?);
            u.push(reg(
                "u",
                gate,
                Shape::Matrix(dims.hidden, dims.hidden),
                InitScheme::FanBalanced,
            )?);
            b.push(reg("b", gate, Shape::Vector(dims.hidden), InitScheme::Zeros)?);
        }
        Ok(Self {
            dims,
            w: [w[0], w[1], w[2], w[3]],
            u: [u[0], u[1], u[2], u[3]],
            b: [b[0], b[1], b[2], b[3]],
        })
    }

    /// Looks up an already registered LSTM by prefix.
    pub fn find<T: Scalar>(store: &ParamStore<T>, prefix: &str) -> Result<Self, NnError> {
        let get = |kind: &str, gate: &str| {
            let name = format!("{prefix}.{kind}_{gate}");
            store.id(&name).ok_or(NnError::UnknownParameter(name))
        };
        let mut w = [ParamId(0); 4];
        let mut u = [ParamId(0); 4];
        let mut b = [ParamId(0); 4];
        for (k, gate) in GATES.iter().enumerate() {
            w[k] = get("w", gate)?;
            u[k] = get("u", gate)?;
            b[k] = get("b", gate)?;
        }
        let ws = store.get(w[0]).shape();
        Ok(Self {
            dims: LstmDims {
                input: ws.cols(),
                hidden: ws.rows(),
            },
            w,
            u,
            b,
        })
    }

    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.w.iter().chain(&self.u).chain(&self.b).copied()
    }
}

/// Activations of one step, kept for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct LstmStep<T> {
    gates: [Vec<T>; 4],
    cell: Vec<T>,
    hidden: Vec<T>,
}

/// Runs the LSTM over `inputs`, returning the cached steps and final hidden state.
pub(crate) fn forward<T: Scalar>(
    store: &ParamStore<T>,
    params: &LstmParams,
    inputs: &[&[T]],
) -> Result<(Vec<LstmStep<T>>, Vec<T>), NnError> {
    let LstmDims { input, hidden } = params.dims;
    let mut h = vec![T::zero(); hidden];
    let mut c = vec![T::zero(); hidden];
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        if x.len() != input {
            return Err(NnError::DimensionMismatch {
                op: "lstm",
                expected: input,
                found: x.len(),
            });
        }
        let gates: [Vec<T>; 4] = std::array::from_fn(|k| {
            let mut pre = store.get(params.b[k]).values().to_vec();
            matvec_acc(&mut pre, store.get(params.w[k]).values(), x);
            matvec_acc(&mut pre, store.get(params.u[k]).values(), &h);
            if k == 3 {
                pre.iter_mut().for_each(|v| *v = v.tanh());
            } else {
                pre.iter_mut().for_each(|v| *v = sigmoid(*v));
            }
            pre
        });
        let [ig, fg, og, cg] = &gates;
        for j in 0..hidden {
            c[j] = fg[j] * c[j] + ig[j] * cg[j];
            h[j] = og[j] * c[j].tanh();
        }
        steps.push(LstmStep {
            gates,
            cell: c.clone(),
            hidden: h.clone(),
        });
    }
    Ok((steps, h))
}

/// Backpropagates `grad_out` (w.r.t. the final hidden state) through time.
///
/// Parameter gradients accumulate into `store`; gradients w.r.t. each input
/// are accumulated into `input_grads`.
pub(crate) fn backward<T: Scalar>(
    store: &mut ParamStore<T>,
    params: &LstmParams,
    inputs: &[&[T]],
    steps: &[LstmStep<T>],
    grad_out: &[T],
    input_grads: &mut [Vec<T>],
) {
    let hidden = params.dims.hidden;
    let zeros = vec![T::zero(); hidden];
    let mut dh = grad_out.to_vec();
    let mut dc = vec![T::zero(); hidden];
    let mut da: [Vec<T>; 4] = std::array::from_fn(|_| vec![T::zero(); hidden]);
    for t in (0..steps.len()).rev() {
        let step = &steps[t];
        let (c_prev, h_prev) = if t == 0 {
            (&zeros, &zeros)
        } else {
            (&steps[t - 1].cell, &steps[t - 1].hidden)
        };
        let [ig, fg, og, cg] = &step.gates;
        for j in 0..hidden {
            let tc = step.cell[j].tanh();
            let d_o = dh[j] * tc;
            dc[j] += dh[j] * og[j] * (T::one() - tc * tc);
            let d_i = dc[j] * cg[j];
            let d_g = dc[j] * ig[j];
            let d_f = dc[j] * c_prev[j];
            da[0][j] = d_i * ig[j] * (T::one() - ig[j]);
            da[1][j] = d_f * fg[j] * (T::one() - fg[j]);
            da[2][j] = d_o * og[j] * (T::one() - og[j]);
            da[3][j] = d_g * (T::one() - cg[j] * cg[j]);
            dc[j] *= fg[j];
        }
        let mut dh_prev = vec![T::zero(); hidden];
        for (k, d) in da.iter().enumerate() {
            outer_acc(store.get_mut(params.w[k]).grad_mut(), d, inputs[t]);
            outer_acc(store.get_mut(params.u[k]).grad_mut(), d, h_prev);
            crate::nn::linalg::add_assign(store.get_mut(params.b[k]).grad_mut(), d);
            matvec_t_acc(&mut input_grads[t], store.get(params.w[k]).values(), d);
            matvec_t_acc(&mut dh_prev, store.get(params.u[k]).values(), d);
        }
        dh = dh_prev;
    }
}
