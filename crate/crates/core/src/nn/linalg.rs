//! Dense row-major kernels used by the graph ops.

use crate::scalar::Scalar;

/// `out += W x` for a `rows x cols` matrix.
pub(crate) fn matvec_acc<T: Scalar>(out: &mut [T], w: &[T], x: &[T]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut acc = T::zero();
        for (a, b) in row.iter().zip(x) {
            acc += *a * *b;
        }
        *o += acc;
    }
}

/// `out += W^T g`.
pub(crate) fn matvec_t_acc<T: Scalar>(out: &mut [T], w: &[T], g: &[T]) {
    let cols = out.len();
    for (gi, row) in g.iter().zip(w.chunks_exact(cols)) {
        if *gi == T::zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += *gi * *a;
        }
    }
}

/// `grad += g x^T`.
pub(crate) fn outer_acc<T: Scalar>(grad: &mut [T], g: &[T], x: &[T]) {
    let cols = x.len();
    for (gi, row) in g.iter().zip(grad.chunks_exact_mut(cols)) {
        if *gi == T::zero() {
            continue;
        }
        for (o, xv) in row.iter_mut().zip(x) {
            *o += *gi * *xv;
        }
    }
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn add_assign<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}
