use super::{parameter_count, ModelError, TcnConfig};
use crate::data::NormalizationParams;
use crate::nn::{
    causal_conv_backward, causal_conv_forward, dropout, dropout_backward, linear_head_backward, linear_head_forward, relu_backward,
    relu_inplace, ConvGrads, ConvParams, DropoutMask, HeadGrads, LinearHead, Mode, Tensor3,
};
use crate::rng::SeededRng;

/// `relu(branch(x) + skip(x))` with
/// `branch = dropout(relu(conv2(dropout(relu(conv1(x))))))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub conv1: ConvParams,
    pub conv2: ConvParams,
    /// 1x1 projection on the skip path when the block changes width.
    pub downsample: Option<ConvParams>,
}

impl ResidualBlock {
    fn layers(&self) -> impl Iterator<Item = &ConvParams> {
        [&self.conv1, &self.conv2].into_iter().chain(self.downsample.as_ref())
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut ConvParams> {
        [&mut self.conv1, &mut self.conv2].into_iter().chain(self.downsample.as_mut())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcnModel {
    pub config: TcnConfig,
    pub blocks: Vec<ResidualBlock>,
    pub head: LinearHead,
    /// Feature scaling fitted on the training data.
    pub normalization: NormalizationParams,
    pub seed: u64,
}

/// Builds a model with seeded uniform `±1/sqrt(fan_in)` weights.
///
/// Layers are numbered in file order (per block conv1, conv2, downsample;
/// head last) and layer `n` is initialized from stream `n` of `seed`.
pub fn build_model(config: TcnConfig, seed: u64) -> Result<TcnModel, ModelError> {
    config.validate()?;
    let root = SeededRng::new(seed);
    let mut stream = 0u64;
    let mut next = || {
        let rng = root.fork(stream);
        stream += 1;
        rng
    };
    let f = config.filters;
    let k = config.kernel_size;
    let mut blocks = Vec::with_capacity(config.block_count());
    for b in 0..config.block_count() {
        let cin = config.block_in_channels(b);
        let d = config.dilation(b);
        let mut conv1 = ConvParams::zeros(f, cin, k, d)?;
        conv1.init_uniform(&mut next());
        let mut conv2 = ConvParams::zeros(f, f, k, d)?;
        conv2.init_uniform(&mut next());
        let downsample = if cin != f {
            let mut ds = ConvParams::zeros(f, cin, 1, 1)?;
            ds.init_uniform(&mut next());
            Some(ds)
        } else {
            None
        };
        blocks.push(ResidualBlock { conv1, conv2, downsample });
    }
    let mut head = LinearHead::zeros(f);
    head.init_uniform(&mut next());
    Ok(TcnModel {
        config,
        blocks,
        head,
        normalization: NormalizationParams::identity(),
        seed,
    })
}

/// Activations kept by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    last: Tensor3,
}

#[derive(Debug, Clone)]
struct BlockCache {
    input: Tensor3,
    act1: Tensor3,
    mask1: DropoutMask,
    drop1: Tensor3,
    act2: Tensor3,
    mask2: DropoutMask,
    output: Tensor3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrads {
    pub conv1: ConvGrads,
    pub conv2: ConvGrads,
    pub downsample: Option<ConvGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub blocks: Vec<BlockGrads>,
    pub head: HeadGrads,
}

impl ModelGrads {
    /// Gradients in the same order as [`TcnModel::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for g in [Some(&b.conv1), Some(&b.conv2), b.downsample.as_ref()].into_iter().flatten() {
                out.extend_from_slice(&g.weights);
                out.extend_from_slice(&g.bias);
            }
        }
        out.extend_from_slice(&self.head.weights);
        out.push(self.head.bias);
        out
    }
}

impl TcnModel {
    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().flat_map(|b| b.layers()).map(ConvParams::parameter_count).sum::<usize>() + self.head.parameter_count()
    }

    /// All trainable scalars in file order: for each block conv1 weights and
    /// bias, conv2 weights and bias, downsample weights and bias; then the
    /// head weights and bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in self.blocks.iter().flat_map(|b| b.layers()) {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(&self.head.weights);
        out.push(self.head.bias);
        out
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<(), ModelError> {
        let expected = self.parameter_count();
        if values.len() != expected {
            return Err(ModelError::ParameterCount {
                expected,
                found: values.len(),
            });
        }
        let mut rest = values;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for layer in self.blocks.iter_mut().flat_map(|b| b.layers_mut()) {
            take(&mut layer.weights);
            take(&mut layer.bias);
        }
        take(&mut self.head.weights);
        self.head.bias = rest[0];
        Ok(())
    }

    /// Rounds every parameter to `f32`, the precision of the model file.
    pub fn snap_to_f32(&mut self) {
        let snapped: Vec<f64> = self.flat_params().into_iter().map(|v| v as f32 as f64).collect();
        self.set_flat_params(&snapped).expect("same length");
    }

    fn check_window(&self, input: &Tensor3) -> Result<(), ModelError> {
        let s = input.shape();
        if s.channels != self.config.input_features || s.time != self.config.window || s.batch == 0 {
            return Err(ModelError::WindowShape {
                found: s,
                channels: self.config.input_features,
                window: self.config.window,
            });
        }
        Ok(())
    }

    /// Evaluation-mode prediction for every time step, shape `(B, 1, L)`.
    /// The value at the last step is the window's SOC estimate.
    pub fn predict(&self, input: &Tensor3) -> Result<Tensor3, ModelError> {
        self.check_window(input)?;
        let mut x = input.clone();
        for block in &self.blocks {
            x = block_eval(block, &x)?;
        }
        Ok(linear_head_forward(&x, &self.head)?)
    }

    /// Final-step estimate of each window in the batch.
    pub fn predict_last(&self, input: &Tensor3) -> Result<Vec<f64>, ModelError> {
        let out = self.predict(input)?;
        let t = out.time() - 1;
        Ok((0..out.batch()).map(|b| out.get(b, 0, t)).collect())
    }

    /// Forward pass that records what [`TcnModel::backward`] needs. Dropout
    /// draws its masks from `rng` in block order, conv1 mask before conv2.
    pub fn forward_cached(&self, input: &Tensor3, mode: Mode, rng: &mut SeededRng) -> Result<(Tensor3, ForwardCache), ModelError> {
        self.check_window(input)?;
        let p = self.config.p_keep;
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut x = input.clone();
        for block in &self.blocks {
            let mut act1 = causal_conv_forward(&x, &block.conv1)?;
            relu_inplace(&mut act1);
            let (drop1, mask1) = dropout(&act1, p, rng, mode)?;
            let mut act2 = causal_conv_forward(&drop1, &block.conv2)?;
            relu_inplace(&mut act2);
            let (mut out, mask2) = dropout(&act2, p, rng, mode)?;
            match &block.downsample {
                Some(ds) => out.add_assign(&causal_conv_forward(&x, ds)?)?,
                None => out.add_assign(&x)?,
            }
            relu_inplace(&mut out);
            caches.push(BlockCache {
                input: x,
                act1,
                mask1,
                drop1,
                act2,
                mask2,
                output: out.clone(),
            });
            x = out;
        }
        let y = linear_head_forward(&x, &self.head)?;
        Ok((y, ForwardCache { blocks: caches, last: x }))
    }

    /// Gradients of `sum(grad_out * output)` for the pass recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Tensor3) -> Result<ModelGrads, ModelError> {
        let (mut g, head) = linear_head_backward(&cache.last, &self.head, grad_out)?;
        let mut grads = Vec::with_capacity(self.blocks.len());
        for (block, c) in self.blocks.iter().zip(&cache.blocks).rev() {
            // relu'(z) via the stored output: z > 0 exactly where output > 0.
            let gz = relu_backward(&c.output, &g)?;
            let ga2 = dropout_backward(&c.mask2, &gz)?;
            let gh2 = relu_backward(&c.act2, &ga2)?;
            let (gd1, conv2) = causal_conv_backward(&c.drop1, &block.conv2, &gh2)?;
            let ga1 = dropout_backward(&c.mask1, &gd1)?;
            let gh1 = relu_backward(&c.act1, &ga1)?;
            let (mut gx, conv1) = causal_conv_backward(&c.input, &block.conv1, &gh1)?;
            let downsample = match &block.downsample {
                Some(ds) => {
                    let (gs, dg) = causal_conv_backward(&c.input, ds, &gz)?;
                    gx.add_assign(&gs)?;
                    Some(dg)
                }
                None => {
                    gx.add_assign(&gz)?;
                    None
                }
            };
            grads.push(BlockGrads { conv1, conv2, downsample });
            g = gx;
        }
        grads.reverse();
        Ok(ModelGrads { blocks: grads, head })
    }

    /// Consistency of stored layers with the config.
    pub(crate) fn check_structure(&self) -> Result<(), ModelError> {
        if self.blocks.len() != self.config.block_count() || self.parameter_count() != parameter_count(&self.config) {
            return Err(ModelError::ParameterCount {
                expected: parameter_count(&self.config),
                found: self.parameter_count(),
            });
        }
        Ok(())
    }
}

fn block_eval(block: &ResidualBlock, x: &Tensor3) -> Result<Tensor3, ModelError> {
    let mut h = causal_conv_forward(x, &block.conv1)?;
    relu_inplace(&mut h);
    let mut out = causal_conv_forward(&h, &block.conv2)?;
    relu_inplace(&mut out);
    match &block.downsample {
        Some(ds) => out.add_assign(&causal_conv_forward(x, ds)?)?,
        None => out.add_assign(x)?,
    }
    relu_inplace(&mut out);
    Ok(out)
}
