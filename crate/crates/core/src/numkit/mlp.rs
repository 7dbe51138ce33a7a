use rand::Rng;

use crate::error::{Error, Result};
use crate::numkit::{DenseMat, DenseVec};

/// Hidden-layer nonlinearity tag. Final layers are always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output, not the
    /// pre-activation; tanh' = 1 - tanh^2 makes that exact.
    #[inline]
    fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fully-connected network with nonlinear hidden layers and a linear
/// output layer.
///
/// Parameters flatten layer by layer, each layer's weight matrix
/// (row-major) followed by its bias. Gradients, checkpoints, and every
/// flat-vector consumer in the crate use that same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    weights: Vec<DenseMat>,
    biases: Vec<DenseVec>,
    activation: Activation,
}

impl MlpParams {
    /// All-zero network. `layer_sizes` runs input first, output last.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Argument(format!(
                "mlp needs at least input and output sizes, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Argument(format!(
                "mlp layer sizes must be positive, got {layer_sizes:?}"
            )));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|w| DenseMat::zeros(w[1], w[0]))
            .collect();
        let biases = layer_sizes[1..].iter().map(|&s| DenseVec::zeros(s)).collect();
        Ok(MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation: Activation::Tanh,
        })
    }

    /// Xavier-uniform weights, zero biases. The output layer is shrunk by
    /// `final_layer_scale` so a fresh network starts close to the zero
    /// function (pass 1.0 for plain Xavier).
    pub fn xavier(layer_sizes: &[usize], final_layer_scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let last = net.weights.len() - 1;
        for (l, w) in net.weights.iter_mut().enumerate() {
            let limit = (6.0 / (w.cols() + w.rows()) as f64).sqrt()
                * if l == last { final_layer_scale } else { 1.0 };
            for v in w.as_mut_slice() {
                *v = rng.gen_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[1] * (w[0] + 1))
            .sum()
    }

    /// y = net(x); hidden layers pass through the activation, the final
    /// layer stays linear.
    pub fn forward(&self, input: &[f64]) -> Result<DenseVec> {
        self.check_input(input)?;
        let mut a = DenseVec::from_vec(input.to_vec());
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.matvec(&a)?;
            z.axpy(1.0, b)?;
            if l != last {
                for v in z.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            a = z;
        }
        Ok(a)
    }

    /// Reverse-mode pass. Given dL/d(output), returns `(param_grad,
    /// input_grad)` with `param_grad` in flat layout. One forward pass is
    /// run internally to rebuild the activations.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(DenseVec, DenseVec)> {
        self.check_input(input)?;
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimMismatch {
                context: "mlp backward output_grad",
                expected: self.output_dim(),
                got: output_grad.len(),
            });
        }
        // acts[l] is the input to layer l; acts[L] is the network output.
        let last = self.weights.len() - 1;
        let mut acts: Vec<DenseVec> = Vec::with_capacity(self.weights.len() + 1);
        acts.push(DenseVec::from_vec(input.to_vec()));
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.matvec(acts.last().unwrap())?;
            z.axpy(1.0, b)?;
            if l != last {
                for v in z.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            acts.push(z);
        }

        let mut param_grad = vec![0.0; self.param_count()];
        let mut delta = DenseVec::from_vec(output_grad.to_vec());
        let mut offset = param_grad.len();
        for l in (0..self.weights.len()).rev() {
            let w = &self.weights[l];
            let a_in = &acts[l];
            let block = w.rows() * (w.cols() + 1);
            offset -= block;
            let (wg, bg) = param_grad[offset..offset + block].split_at_mut(w.rows() * w.cols());
            for i in 0..w.rows() {
                let di = delta[i];
                let row = &mut wg[i * w.cols()..(i + 1) * w.cols()];
                for (g, a) in row.iter_mut().zip(a_in.iter()) {
                    *g = di * a;
                }
                bg[i] = di;
            }
            let mut prev = w.matvec_t(&delta)?;
            if l > 0 {
                for (p, a) in prev.iter_mut().zip(acts[l].iter()) {
                    *p *= self.activation.deriv_from_output(*a);
                }
            }
            delta = prev;
        }
        debug_assert_eq!(offset, 0);
        Ok((DenseVec::from_vec(param_grad), delta))
    }

    /// Forward-mode pass: directional derivative of the output with
    /// respect to the parameters, along a flat-layout `direction`, at
    /// fixed input. This is `J v` for the parameter Jacobian `J` whose
    /// transposed products [`backward`](Self::backward) computes.
    pub fn param_jvp(&self, input: &[f64], direction: &[f64]) -> Result<DenseVec> {
        self.check_input(input)?;
        if direction.len() != self.param_count() {
            return Err(Error::DimMismatch {
                context: "mlp param_jvp direction",
                expected: self.param_count(),
                got: direction.len(),
            });
        }
        let last = self.weights.len() - 1;
        let mut a = DenseVec::from_vec(input.to_vec());
        let mut da = DenseVec::zeros(a.len());
        let mut off = 0;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let rows = w.rows();
            let cols = w.cols();
            let dw = &direction[off..off + rows * cols];
            let db = &direction[off + rows * cols..off + rows * (cols + 1)];
            off += rows * (cols + 1);

            let mut z = w.matvec(&a)?;
            z.axpy(1.0, b)?;
            let mut dz = w.matvec(&da)?;
            for i in 0..rows {
                let mut acc = db[i];
                for (dwij, aj) in dw[i * cols..(i + 1) * cols].iter().zip(a.iter()) {
                    acc += dwij * aj;
                }
                dz[i] += acc;
            }
            if l != last {
                for v in z.iter_mut() {
                    *v = self.activation.apply(*v);
                }
                for (d, y) in dz.iter_mut().zip(z.iter()) {
                    *d *= self.activation.deriv_from_output(*y);
                }
            }
            a = z;
            da = dz;
        }
        Ok(da)
    }

    pub fn flatten(&self) -> DenseVec {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        DenseVec::from_vec(out)
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimMismatch {
                context: "mlp set_from_flat",
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let wn = w.rows() * w.cols();
            w.as_mut_slice().copy_from_slice(&flat[off..off + wn]);
            off += wn;
            let bn = b.len();
            b.copy_from_slice(&flat[off..off + bn]);
            off += bn;
        }
        Ok(())
    }

    /// params += alpha * direction, with `direction` in flat layout.
    pub fn add_scaled(&mut self, direction: &[f64], alpha: f64) -> Result<()> {
        if direction.len() != self.param_count() {
            return Err(Error::DimMismatch {
                context: "mlp add_scaled",
                expected: self.param_count(),
                got: direction.len(),
            });
        }
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            for v in w.as_mut_slice() {
                *v += alpha * direction[off];
                off += 1;
            }
            for v in b.iter_mut() {
                *v += alpha * direction[off];
                off += 1;
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                context: "mlp input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }
}
