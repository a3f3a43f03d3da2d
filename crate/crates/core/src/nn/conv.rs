use super::{NnError, Shape3, Tensor3};
use crate::rng::SeededRng;

/// Weights `[out][in][tap]`, one bias per output channel, and the tap spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    out_channels: usize,
    in_channels: usize,
    kernel_size: usize,
    dilation: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    /// Zero-initialized layer.
    pub fn zeros(out_channels: usize, in_channels: usize, kernel_size: usize, dilation: usize) -> Result<Self, NnError> {
        if out_channels == 0 || in_channels == 0 {
            return Err(NnError::InvalidParameter {
                name: "channels",
                reason: format!("in={in_channels} out={out_channels}, both must be >= 1"),
            });
        }
        if kernel_size == 0 {
            return Err(NnError::InvalidParameter {
                name: "kernel_size",
                reason: "must be >= 1".into(),
            });
        }
        if dilation == 0 {
            return Err(NnError::InvalidParameter {
                name: "dilation",
                reason: "must be >= 1".into(),
            });
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel_size,
            dilation,
            weights: vec![0.0; out_channels * in_channels * kernel_size],
            bias: vec![0.0; out_channels],
        })
    }

    /// Uniform initialization in `±1/sqrt(in_channels * kernel_size)`.
    ///
    /// Weights are drawn first in storage order, then biases. Draws are rounded
    /// to `f32` so a freshly built layer survives serialization unchanged.
    pub fn init_uniform(&mut self, rng: &mut SeededRng) {
        let bound = 1.0 / ((self.in_channels * self.kernel_size) as f64).sqrt();
        for w in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            *w = rng.uniform(-bound, bound) as f32 as f64;
        }
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn dilation(&self) -> usize {
        self.dilation
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    pub fn weight(&self, o: usize, c: usize, j: usize) -> f64 {
        self.weights[(o * self.in_channels + c) * self.kernel_size + j]
    }

    /// How far back tap `j` reads.
    #[inline]
    fn lag(&self, j: usize) -> usize {
        (self.kernel_size - 1 - j) * self.dilation
    }

    fn check_input(&self, input: &Tensor3) -> Result<(), NnError> {
        if input.channels() != self.in_channels {
            return Err(NnError::ChannelMismatch {
                expected: self.in_channels,
                found: input.channels(),
                input: input.shape(),
            });
        }
        Ok(())
    }
}

/// Gradients matching [`ConvParams`] storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// `out[b,o,t] = bias[o] + sum_{c,j} w[o,c,j] * x[b,c,t - (k-1-j)*d]`, with
/// `x` zero before time 0. Output length equals input length.
pub fn causal_conv_forward(input: &Tensor3, params: &ConvParams) -> Result<Tensor3, NnError> {
    params.check_input(input)?;
    let (batch, time) = (input.batch(), input.time());
    let mut out = Tensor3::zeros(batch, params.out_channels, time);
    for b in 0..batch {
        for o in 0..params.out_channels {
            let row = out.row_mut(b, o);
            row.fill(params.bias[o]);
            for c in 0..params.in_channels {
                let x = input.row(b, c);
                for j in 0..params.kernel_size {
                    let lag = params.lag(j);
                    if lag >= time {
                        continue;
                    }
                    let w = params.weight(o, c, j);
                    for (y, xv) in row[lag..].iter_mut().zip(&x[..time - lag]) {
                        *y += w * xv;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of `sum(grad_out * causal_conv_forward(input, params))` with
/// respect to the input, the weights and the bias.
pub fn causal_conv_backward(
    input: &Tensor3,
    params: &ConvParams,
    grad_out: &Tensor3,
) -> Result<(Tensor3, ConvGrads), NnError> {
    params.check_input(input)?;
    let (batch, time) = (input.batch(), input.time());
    let expected = Shape3::new(batch, params.out_channels, time);
    if grad_out.shape() != expected {
        return Err(NnError::ShapeMismatch {
            expected,
            found: grad_out.shape(),
        });
    }
    let mut grad_in = Tensor3::zeros(batch, params.in_channels, time);
    let mut grads = ConvGrads {
        weights: vec![0.0; params.weights.len()],
        bias: vec![0.0; params.out_channels],
    };
    for b in 0..batch {
        for o in 0..params.out_channels {
            let g = grad_out.row(b, o);
            grads.bias[o] += g.iter().sum::<f64>();
            for c in 0..params.in_channels {
                let x = input.row(b, c);
                let base = (o * params.in_channels + c) * params.kernel_size;
                for j in 0..params.kernel_size {
                    let lag = params.lag(j);
                    if lag >= time {
                        continue;
                    }
                    let n = time - lag;
                    let gw: f64 = g[lag..].iter().zip(&x[..n]).map(|(a, b)| a * b).sum();
                    grads.weights[base + j] += gw;
                    let w = params.weights[base + j];
                    let gx = grad_in.row_mut(b, c);
                    for (dst, gv) in gx[..n].iter_mut().zip(&g[lag..]) {
                        *dst += w * gv;
                    }
                }
            }
        }
    }
    Ok((grad_in, grads))
}
