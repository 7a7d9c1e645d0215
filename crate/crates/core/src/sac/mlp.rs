// Copyright 2026 The vic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Fully connected rectifier networks with reverse-mode gradients.
//!
//! Activations are stored column-per-sample: a batch of `B` inputs of width
//! `n` is an `n × B` matrix.

use nalgebra::{DMatrix, DVector, RealField};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Scalar types the networks run on (`f32` for training, `f64` for checks).
pub trait Float: RealField + Copy {
    fn of(x: f64) -> Self;
    fn to_f64(self) -> f64;

    /// `C ← A·B` for strided `m×k` `A` and `k×n` `B`, column-major `C`.
    ///
    /// # Safety
    /// Pointers and strides must describe valid, non-overlapping storage.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        c: *mut Self,
    );
}

impl Float for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        c: *mut Self,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, 0.0, c, 1, m as isize);
    }
}

impl Float for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn to_f64(self) -> f64 {
        self
    }

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        c: *mut Self,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, 0.0, c, 1, m as isize);
    }
}

/// `op(a)·op(b)`, where `op` transposes when the flag is set.
pub fn matmul<T: Float>(a: &DMatrix<T>, ta: bool, b: &DMatrix<T>, tb: bool) -> DMatrix<T> {
    // (row stride, col stride) of the operand as used
    let view = |x: &DMatrix<T>, t: bool| {
        let (r, c, ld) = (x.nrows(), x.ncols(), x.nrows() as isize);
        if t {
            (c, r, ld, 1)
        } else {
            (r, c, 1, ld)
        }
    };
    let (m, k, rsa, csa) = view(a, ta);
    let (k2, n, rsb, csb) = view(b, tb);
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = DMatrix::zeros(m, n);
    if m > 0 && n > 0 && k > 0 {
        // SAFETY: strides describe the column-major storage of `a` and `b`,
        // and `c` is a fresh m×n column-major buffer.
        unsafe { T::gemm(m, k, n, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, c.as_mut_ptr()) };
    }
    c
}

fn relu_mask<T: Float>(g: &mut DMatrix<T>, act: &DMatrix<T>) {
    for (g, a) in g.as_mut_slice().iter_mut().zip(act.as_slice()) {
        if *a <= T::zero() {
            *g = T::zero();
        }
    }
}

fn cast<T: Float>(x: f64) -> T {
    T::of(x)
}

/// Hidden widths used by every network in the agent.
pub const HIDDEN: [usize; 3] = [256, 256, 256];

/// One affine layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T: Float> {
    pub w: DMatrix<T>,
    pub b: DVector<T>,
}

/// Affine layers with rectifiers between them and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T: Float> {
    pub layers: Vec<Dense<T>>,
}

/// Inputs seen by each layer during a forward pass.
#[derive(Debug, Clone)]
pub struct Cache<T: Float> {
    inputs: Vec<DMatrix<T>>,
}

/// Layer sizes `[input, HIDDEN.., output]`.
pub fn shape(input: usize, output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend(HIDDEN);
    s.push(output);
    s
}

impl<T: Float> Mlp<T> {
    /// Uniform `±1/√fan_in` initialization of weights and biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|io| {
                let bound = 1.0 / (io[0] as f64).sqrt();
                let mut draw = || cast::<T>(rng.random_range(-bound..bound));
                let w = DMatrix::from_fn(io[1], io[0], |_, _| draw());
                let b = DVector::from_fn(io[1], |_, _| draw());
                Dense { w, b }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        let layers =
            sizes.windows(2).map(|io| Dense { w: DMatrix::zeros(io[1], io[0]), b: DVector::zeros(io[1]) }).collect();
        Ok(Self { layers })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.sizes()).expect("existing network has valid sizes")
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.w.nrows()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn forward(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &DMatrix<T>) -> Result<(DMatrix<T>, Cache<T>)> {
        if x.nrows() != self.input_dim() {
            return Err(invalid(format!("network expects {} inputs, got {}", self.input_dim(), x.nrows())));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = matmul(&layer.w, false, &h, false);
            let rows = y.nrows();
            let bias = layer.b.as_slice();
            for col in y.as_mut_slice().chunks_exact_mut(rows) {
                for (v, b) in col.iter_mut().zip(bias) {
                    *v += *b;
                }
            }
            if i < last {
                for v in y.as_mut_slice() {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
            }
            inputs.push(std::mem::replace(&mut h, y));
        }
        Ok((h, Cache { inputs }))
    }

    /// Parameter gradients of `Σ d_out ⊙ output`, and the input gradient
    /// when `want_input` is set.
    pub fn backward(&self, cache: &Cache<T>, d_out: &DMatrix<T>, want_input: bool) -> (Mlp<T>, Option<DMatrix<T>>) {
        let n = self.layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut d = d_out.clone();
        let mut d_in = None;
        for l in (0..n).rev() {
            let x = &cache.inputs[l];
            let w = matmul(&d, false, x, true);
            let b = d.column_sum();
            grads.push(Dense { w, b });
            if l > 0 || want_input {
                let mut dx = matmul(&self.layers[l].w, true, &d, false);
                if l > 0 {
                    relu_mask(&mut dx, x);
                    d = dx;
                } else {
                    d_in = Some(dx);
                }
            }
        }
        grads.reverse();
        (Mlp { layers: grads }, d_in)
    }

    /// Input gradient of `Σ d_out ⊙ output`, skipping parameter gradients.
    pub fn input_gradient(&self, cache: &Cache<T>, d_out: &DMatrix<T>) -> DMatrix<T> {
        let mut d = d_out.clone();
        for l in (0..self.layers.len()).rev() {
            let mut dx = matmul(&self.layers[l].w, true, &d, false);
            if l > 0 {
                relu_mask(&mut dx, &cache.inputs[l]);
            }
            d = dx;
        }
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All parameters, layer by layer, weights (column-major) before biases.
    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(invalid(format!("expected {} parameters, got {}", self.param_count(), p.len())));
        }
        let mut it = p.iter();
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// `self ← (1 − tau)·self + tau·src`.
    pub fn soft_update(&mut self, src: &Self, tau: T) {
        let keep = T::one() - tau;
        for (d, s) in self.layers.iter_mut().zip(&src.layers) {
            d.w.zip_apply(&s.w, |a, b| *a = *a * keep + b * tau);
            d.b.zip_apply(&s.b, |a, b| *a = *a * keep + b * tau);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    pub fn to_params_doc(&self) -> MlpParams {
        MlpParams {
            sizes: self.sizes(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.w.row_iter().map(|r| r.iter().map(|v| v.to_f64()).collect()).collect(),
                    bias: l.b.iter().map(|v| v.to_f64()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_params_doc(doc: &MlpParams) -> Result<Self> {
        check_sizes(&doc.sizes)?;
        if doc.layers.len() + 1 != doc.sizes.len() {
            return Err(invalid("layer count does not match sizes"));
        }
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (io, l) in doc.sizes.windows(2).zip(&doc.layers) {
            if l.weights.len() != io[1] || l.weights.iter().any(|r| r.len() != io[0]) || l.bias.len() != io[1] {
                return Err(invalid(format!("layer {}x{} has mismatched parameters", io[1], io[0])));
            }
            let w = DMatrix::from_fn(io[1], io[0], |r, c| cast(l.weights[r][c]));
            let b = DVector::from_fn(io[1], |r, _| cast(l.bias[r]));
            layers.push(Dense { w, b });
        }
        let net = Self { layers };
        if !net.is_finite() {
            return Err(invalid("network parameters must be finite"));
        }
        Ok(net)
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(invalid(format!("invalid layer sizes {sizes:?}")));
    }
    Ok(())
}

/// Text form of a network: layer sizes, then row-major weights and biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub sizes: Vec<usize>,
    pub layers: Vec<LayerParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerParams {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matmul_matches_nalgebra() {
        let a = DMatrix::<f64>::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 5.0);
        let b = DMatrix::<f64>::from_fn(4, 2, |i, j| (i + 2 * j) as f64 * 0.5);
        let c = DMatrix::<f64>::from_fn(2, 4, |i, j| (i * j) as f64 + 1.0);
        assert_eq!(matmul(&a, false, &b, false), &a * &b);
        assert_eq!(matmul(&a, true, &a, false), a.transpose() * &a);
        assert_eq!(matmul(&a, false, &c, true), &a * c.transpose());
        assert_eq!(matmul(&b, true, &a, true), b.transpose() * a.transpose());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::<f64>::zeros(&shape(13, 12)).unwrap();
        let x = DMatrix::from_fn(13, 4, |r, c| (r * c) as f64 - 3.0);
        assert_eq!(net.forward(&x).unwrap(), DMatrix::zeros(12, 4));
    }

    #[test]
    fn identity_layer_copies_a_slice() {
        let mut net = Mlp::<f64>::zeros(&[5, 2]).unwrap();
        net.layers[0].w[(0, 1)] = 1.0;
        net.layers[0].w[(1, 3)] = 1.0;
        let x = DMatrix::from_column_slice(5, 1, &[0.5, -1.5, 2.0, 7.0, 9.0]);
        assert_eq!(net.forward(&x).unwrap().as_slice(), &[-1.5, 7.0]);
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let net = Mlp::<f32>::zeros(&[3, 4, 1]).unwrap();
        assert!(net.forward(&DMatrix::zeros(2, 1)).is_err());
        assert!(Mlp::<f32>::zeros(&[3]).is_err());
        assert!(Mlp::<f32>::zeros(&[3, 0, 1]).is_err());
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::<f32>::new(&shape(19, 1), &mut rng).unwrap();
        assert_eq!(net.sizes(), vec![19, 256, 256, 256, 1]);
        let b0 = 1.0 / 19f32.sqrt();
        assert!(net.layers[0].w.iter().all(|v| v.abs() <= b0));
        let b1 = 1.0 / 16.0;
        assert!(net.layers[2].w.iter().all(|v| v.abs() <= b1));
        assert!(net.layers[2].w.iter().any(|v| v.abs() > 0.9 * b1));
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::<f64>::new(&[4, 6, 3], &mut rng).unwrap();
        let mut other = net.zeros_like();
        other.set_params(&net.params()).unwrap();
        assert_eq!(other, net);
        let back = Mlp::<f64>::from_params_doc(&net.to_params_doc()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn soft_update_with_unit_tau_copies() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Mlp::<f32>::new(&[4, 6, 3], &mut rng).unwrap();
        let mut b = Mlp::<f32>::new(&[4, 6, 3], &mut rng).unwrap();
        b.soft_update(&a, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn backward_matches_finite_differences_on_small_net() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::<f64>::new(&[3, 5, 5, 2], &mut rng).unwrap();
        let x = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
        let c = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0));
        let loss = |n: &Mlp<f64>, x: &DMatrix<f64>| n.forward(x).unwrap().component_mul(&c).sum();
        let (_, cache) = net.forward_cached(&x).unwrap();
        let (g, gx) = net.backward(&cache, &c, true);
        let p = net.params();
        let gp = g.params();
        let h = 1e-6;
        for i in 0..p.len() {
            let mut n2 = net.clone();
            let mut q = p.clone();
            q[i] += h;
            n2.set_params(&q).unwrap();
            let up = loss(&n2, &x);
            q[i] -= 2.0 * h;
            n2.set_params(&q).unwrap();
            let fd = (up - loss(&n2, &x)) / (2.0 * h);
            assert!((fd - gp[i]).abs() < 1e-7, "param {i}: {fd} vs {}", gp[i]);
        }
        let gx = gx.unwrap();
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let up = loss(&net, &xp);
            xp[i] -= 2.0 * h;
            let fd = (up - loss(&net, &xp)) / (2.0 * h);
            assert!((fd - gx[i]).abs() < 1e-7);
        }
    }
}
