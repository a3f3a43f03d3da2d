use super::ModelError;
use crate::data::INPUT_FEATURES;

/// Hyperparameters of a residual TCN.
///
/// Block `i` of every stack uses dilation `dilation_base^i`, so each stack
/// repeats the schedule `1, 2, 4, 8` with the default four blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcnConfig {
    pub stacks: usize,
    pub blocks_per_stack: usize,
    pub kernel_size: usize,
    /// Channels of every hidden convolution.
    pub filters: usize,
    pub input_features: usize,
    /// Time steps per input window.
    pub window: usize,
    pub p_keep: f64,
    pub dilation_base: usize,
}

impl Default for TcnConfig {
    /// 20 stacks over 500-step windows; `k = 8`, `f = 4` gives 132 parameters
    /// per convolution on the 4-channel input.
    fn default() -> Self {
        Self {
            stacks: 20,
            blocks_per_stack: 4,
            kernel_size: 8,
            filters: 4,
            input_features: INPUT_FEATURES,
            window: 500,
            p_keep: 0.9,
            dilation_base: 2,
        }
    }
}

impl TcnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("stacks", self.stacks),
            ("blocks_per_stack", self.blocks_per_stack),
            ("kernel_size", self.kernel_size),
            ("filters", self.filters),
            ("input_features", self.input_features),
            ("window", self.window),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(ModelError::InvalidConfig {
                    field,
                    reason: "must be >= 1".into(),
                });
            }
        }
        if !(self.p_keep > 0.0 && self.p_keep <= 1.0) {
            return Err(ModelError::InvalidConfig {
                field: "p_keep",
                reason: format!("{} is outside (0, 1]", self.p_keep),
            });
        }
        if self.dilation_base != 2 {
            return Err(ModelError::InvalidConfig {
                field: "dilation_base",
                reason: format!("{} is not supported; dilations double per block", self.dilation_base),
            });
        }
        if self.blocks_per_stack >= usize::BITS as usize {
            return Err(ModelError::InvalidConfig {
                field: "blocks_per_stack",
                reason: "dilation would overflow".into(),
            });
        }
        Ok(())
    }

    pub fn block_count(&self) -> usize {
        self.stacks * self.blocks_per_stack
    }

    /// Dilation of global block index `block`.
    pub fn dilation(&self, block: usize) -> usize {
        self.dilation_base.pow((block % self.blocks_per_stack) as u32)
    }

    pub fn dilations(&self) -> Vec<usize> {
        (0..self.block_count()).map(|b| self.dilation(b)).collect()
    }

    /// Input channels of global block index `block`.
    pub fn block_in_channels(&self, block: usize) -> usize {
        if block == 0 {
            self.input_features
        } else {
            self.filters
        }
    }
}

/// `1 + 2 (k - 1) S (2^B - 1)`: each block holds two convolutions of reach
/// `(k - 1) d`, and one stack's dilations sum to `2^B - 1`.
pub fn receptive_field(config: &TcnConfig) -> usize {
    let per_stack = (1usize << config.blocks_per_stack) - 1;
    1 + 2 * (config.kernel_size - 1) * config.stacks * per_stack
}

/// Trainable scalars: both convolutions of every block, a 1x1 downsample
/// wherever a block changes width, and the regression head.
pub fn parameter_count(config: &TcnConfig) -> usize {
    let (k, f) = (config.kernel_size, config.filters);
    let blocks: usize = (0..config.block_count())
        .map(|b| {
            let cin = config.block_in_channels(b);
            let conv1 = f * cin * k + f;
            let conv2 = f * f * k + f;
            let down = if cin != f { f * cin + f } else { 0 };
            conv1 + conv2 + down
        })
        .sum();
    blocks + f + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(stacks: usize, k: usize, f: usize, c: usize) -> TcnConfig {
        TcnConfig {
            stacks,
            kernel_size: k,
            filters: f,
            input_features: c,
            window: 16,
            ..TcnConfig::default()
        }
    }

    #[test]
    fn dilations_reset_each_stack() {
        assert_eq!(cfg(2, 3, 4, 4).dilations(), vec![1, 2, 4, 8, 1, 2, 4, 8]);
    }

    #[test]
    fn receptive_field_values() {
        assert_eq!(receptive_field(&cfg(5, 1, 4, 4)), 1);
        assert_eq!(receptive_field(&cfg(1, 8, 4, 4)), 211);
        assert_eq!(receptive_field(&cfg(20, 3, 4, 4)), 1201);
    }

    #[test]
    fn parameter_counts() {
        // Eight 132-parameter convolutions plus a 4 -> 1 head.
        assert_eq!(parameter_count(&cfg(1, 8, 4, 4)), 8 * 132 + 5);
        assert_eq!(parameter_count(&cfg(1, 1, 1, 1)), 18);
        // 4 -> 8 adds a downsample in the very first block only.
        let c = cfg(2, 8, 8, 4);
        let expected = (8 * 4 * 8 + 8) + (8 * 8 * 8 + 8) + (8 * 4 + 8) + 7 * 2 * (8 * 8 * 8 + 8) + 9;
        assert_eq!(parameter_count(&c), expected);
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = cfg(2, 3, 4, 4);
        c.kernel_size = 0;
        match c.validate() {
            Err(ModelError::InvalidConfig { field, .. }) => assert_eq!(field, "kernel_size"),
            other => panic!("{other:?}"),
        }
        let mut c = cfg(2, 3, 4, 4);
        c.p_keep = 0.0;
        assert!(matches!(c.validate(), Err(ModelError::InvalidConfig { field: "p_keep", .. })));
    }
}
