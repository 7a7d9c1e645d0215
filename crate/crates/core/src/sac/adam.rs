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

//! Adam optimizer over [`Mlp`] parameters.

use super::mlp::{Float, Mlp};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T: Float> {
    pub m: Mlp<T>,
    pub v: Mlp<T>,
    pub t: u64,
}

impl<T: Float> Adam<T> {
    pub fn new(net: &Mlp<T>) -> Self {
        Self { m: net.zeros_like(), v: net.zeros_like(), t: 0 }
    }

    /// One descent step on `grads` with learning rate `lr`.
    pub fn step(&mut self, net: &mut Mlp<T>, grads: &Mlp<T>, lr: f64) {
        self.t += 1;
        let b1 = T::of(BETA1);
        let b2 = T::of(BETA2);
        let c1 = 1.0 - BETA1.powi(self.t.min(i32::MAX as u64) as i32);
        let c2 = 1.0 - BETA2.powi(self.t.min(i32::MAX as u64) as i32);
        // bias corrections folded into the step size
        let step = T::of(lr * c2.sqrt() / c1);
        let eps = T::of(EPSILON * c2.sqrt());
        for (((p, g), m), v) in net.layers.iter_mut().zip(&grads.layers).zip(&mut self.m.layers).zip(&mut self.v.layers)
        {
            moments(p.w.as_mut_slice(), g.w.as_slice(), m.w.as_mut_slice(), v.w.as_mut_slice(), b1, b2, step, eps);
            moments(p.b.as_mut_slice(), g.b.as_slice(), m.b.as_mut_slice(), v.b.as_mut_slice(), b1, b2, step, eps);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn moments<T: Float>(p: &mut [T], g: &[T], m: &mut [T], v: &mut [T], b1: T, b2: T, step: T, eps: T) {
    let one = T::one();
    for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (one - b1) * *g;
        *v = b2 * *v + (one - b2) * *g * *g;
        *p -= step * *m / (v.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_each_parameter_by_lr() {
        let mut net = Mlp::<f64>::zeros(&[2, 2]).unwrap();
        let mut g = net.zeros_like();
        g.layers[0].w[(0, 0)] = 3.0;
        g.layers[0].w[(1, 1)] = -0.01;
        g.layers[0].b[0] = 1e3;
        let mut adam = Adam::new(&net);
        adam.step(&mut net, &g, 0.1);
        assert!((net.layers[0].w[(0, 0)] + 0.1).abs() < 1e-7);
        assert!((net.layers[0].w[(1, 1)] - 0.1).abs() < 1e-5);
        assert!((net.layers[0].b[0] + 0.1).abs() < 1e-7);
        assert_eq!(net.layers[0].w[(0, 1)], 0.0);
    }

    #[test]
    fn minimizes_a_quadratic() {
        // loss = Σ (p - 2)², gradient 2(p - 2)
        let mut net = Mlp::<f64>::zeros(&[3, 2]).unwrap();
        let mut adam = Adam::new(&net);
        for _ in 0..3000 {
            let mut g = net.zeros_like();
            let p: Vec<f64> = net.params().iter().map(|p| 2.0 * (p - 2.0)).collect();
            g.set_params(&p).unwrap();
            adam.step(&mut net, &g, 0.01);
        }
        assert!(net.params().iter().all(|p| (p - 2.0).abs() < 1e-3));
    }
}
