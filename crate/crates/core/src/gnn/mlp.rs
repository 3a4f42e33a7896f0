//! Dense layers with SELU activations, explicit forward caches, and exact
//! reverse-mode gradients.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use crate::rng::Stream;

/// SELU constants (self-normalizing networks).
pub const SELU_LAMBDA: f64 = 1.0507009873554804934193349852946;
pub const SELU_ALPHA: f64 = 1.6732632423543772848170429916717;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Act {
    Selu,
    Identity,
}

impl Act {
    fn apply(self, z: f64) -> f64 {
        match self {
            Act::Identity => z,
            Act::Selu => {
                if z > 0.0 {
                    SELU_LAMBDA * z
                } else {
                    SELU_LAMBDA * SELU_ALPHA * (z.exp() - 1.0)
                }
            }
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Act::Identity => 1.0,
            Act::Selu => {
                if z > 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * z.exp()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Output width of each layer, in order.
    pub widths: Vec<usize>,
    pub hidden_act: Act,
    pub final_act: Act,
}

impl MlpSpec {
    pub fn selu_hidden(widths: Vec<usize>, final_act: Act) -> Self {
        assert!(!widths.is_empty(), "MLP needs at least one layer");
        Self {
            widths,
            hidden_act: Act::Selu,
            final_act,
        }
    }

    fn act_of_layer(&self, layer: usize) -> Act {
        if layer + 1 == self.widths.len() {
            self.final_act
        } else {
            self.hidden_act
        }
    }
}

#[derive(Clone, Debug)]
pub struct Linear {
    /// `input_dim x output_dim`.
    pub w: Tensor2,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Mlp {
    pub input_dim: usize,
    pub spec: MlpSpec,
    pub layers: Vec<Linear>,
}

/// Per-layer gradients, same shapes as the parameters.
#[derive(Clone, Debug)]
pub struct MlpGrads {
    pub layers: Vec<Linear>,
}

/// Inputs and pre-activations recorded by a training-mode forward pass.
pub struct MlpCache {
    pub inputs: Vec<Tensor2>,
    pub zs: Vec<Tensor2>,
}

impl Mlp {
    /// LeCun-normal initialization (std = 1/sqrt(fan_in)), zero biases.
    pub fn init(input_dim: usize, spec: MlpSpec, rng: &mut Stream) -> Mlp {
        let mut layers = Vec::with_capacity(spec.widths.len());
        let mut fan_in = input_dim;
        for &width in &spec.widths {
            let std = 1.0 / (fan_in as f64).sqrt();
            let mut w = Tensor2::zeros(fan_in, width);
            for v in &mut w.data {
                *v = std * rng.normal();
            }
            layers.push(Linear {
                w,
                b: vec![0.0; width],
            });
            fan_in = width;
        }
        Mlp {
            input_dim,
            spec,
            layers,
        }
    }

    pub fn zeros_like(&self) -> MlpGrads {
        MlpGrads {
            layers: self
                .layers
                .iter()
                .map(|l| Linear {
                    w: Tensor2::zeros(l.w.rows, l.w.cols),
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.widths.last().unwrap()
    }

    /// Forward pass; records the cache when training.
    pub fn forward(&self, x: &Tensor2, mut cache: Option<&mut MlpCache>) -> Tensor2 {
        debug_assert_eq!(x.cols, self.input_dim);
        let mut h = x.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = h.matmul(&layer.w);
            for i in 0..z.rows {
                for (zv, bv) in z.row_mut(i).iter_mut().zip(&layer.b) {
                    *zv += bv;
                }
            }
            let act = self.spec.act_of_layer(li);
            let mut a = z.clone();
            for v in &mut a.data {
                *v = act.apply(*v);
            }
            if let Some(c) = cache.as_deref_mut() {
                c.inputs.push(h);
                c.zs.push(z);
            }
            h = a;
        }
        h
    }

    /// Backpropagates `d_out` (gradient w.r.t. the MLP output), accumulating
    /// parameter gradients and returning the gradient w.r.t. the input.
    pub fn backward(&self, cache: &MlpCache, d_out: &Tensor2, grads: &mut MlpGrads) -> Tensor2 {
        let mut d = d_out.clone();
        for li in (0..self.layers.len()).rev() {
            let act = self.spec.act_of_layer(li);
            let z = &cache.zs[li];
            // d_z = d_a * act'(z)
            for (dv, zv) in d.data.iter_mut().zip(&z.data) {
                *dv *= act.derivative(*zv);
            }
            let x = &cache.inputs[li];
            let dw = Tensor2::at_b(x, &d);
            for (gv, dv) in grads.layers[li].w.data.iter_mut().zip(&dw.data) {
                *gv += dv;
            }
            for i in 0..d.rows {
                for (gb, dv) in grads.layers[li].b.iter_mut().zip(d.row(i)) {
                    *gb += dv;
                }
            }
            d = Tensor2::a_bt(&d, &self.layers[li].w);
        }
        d
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.data.as_slice(), l.b.as_slice()])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.w.data.as_mut_slice(), l.b.as_mut_slice()])
            .collect()
    }
}

impl MlpGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.w.data.as_slice(), l.b.as_slice()])
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.w.data.as_mut_slice(), l.b.as_mut_slice()])
            .collect()
    }
}

pub fn empty_cache() -> MlpCache {
    MlpCache {
        inputs: Vec::new(),
        zs: Vec::new(),
    }
}
