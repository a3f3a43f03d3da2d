use super::{NnError, Shape3, Tensor3};
use crate::rng::SeededRng;

/// Per-time-step regression layer mapping `C` channels to one value.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearHead {
    pub fn zeros(in_channels: usize) -> Self {
        Self {
            weights: vec![0.0; in_channels],
            bias: 0.0,
        }
    }

    /// Same scheme as the convolutions: `±1/sqrt(fan_in)`, weights then bias,
    /// rounded to `f32`.
    pub fn init_uniform(&mut self, rng: &mut SeededRng) {
        let bound = 1.0 / (self.weights.len() as f64).sqrt();
        for w in &mut self.weights {
            *w = rng.uniform(-bound, bound) as f32 as f64;
        }
        self.bias = rng.uniform(-bound, bound) as f32 as f64;
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + 1
    }

    fn check_input(&self, input: &Tensor3) -> Result<(), NnError> {
        if input.channels() != self.weights.len() {
            return Err(NnError::ChannelMismatch {
                expected: self.weights.len(),
                found: input.channels(),
                input: input.shape(),
            });
        }
        Ok(())
    }
}

/// `y[b,t] = bias + sum_c w[c] * x[b,c,t]`, returned as a `(B, 1, T)` tensor.
pub fn linear_head_forward(input: &Tensor3, head: &LinearHead) -> Result<Tensor3, NnError> {
    head.check_input(input)?;
    let mut out = Tensor3::zeros(input.batch(), 1, input.time());
    for b in 0..input.batch() {
        let y = out.row_mut(b, 0);
        y.fill(head.bias);
        for (c, w) in head.weights.iter().enumerate() {
            for (yv, xv) in y.iter_mut().zip(input.row(b, c)) {
                *yv += w * xv;
            }
        }
    }
    Ok(out)
}

pub fn linear_head_backward(input: &Tensor3, head: &LinearHead, grad_out: &Tensor3) -> Result<(Tensor3, HeadGrads), NnError> {
    head.check_input(input)?;
    let expected = Shape3::new(input.batch(), 1, input.time());
    if grad_out.shape() != expected {
        return Err(NnError::ShapeMismatch {
            expected,
            found: grad_out.shape(),
        });
    }
    let mut grad_in = Tensor3::zeros(input.batch(), input.channels(), input.time());
    let mut grads = HeadGrads {
        weights: vec![0.0; head.weights.len()],
        bias: 0.0,
    };
    for b in 0..input.batch() {
        let g = grad_out.row(b, 0);
        grads.bias += g.iter().sum::<f64>();
        for (c, w) in head.weights.iter().enumerate() {
            grads.weights[c] += g.iter().zip(input.row(b, c)).map(|(a, x)| a * x).sum::<f64>();
            for (dst, gv) in grad_in.row_mut(b, c).iter_mut().zip(g) {
                *dst = w * gv;
            }
        }
    }
    Ok((grad_in, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_bias() {
        let head = LinearHead {
            weights: vec![0.0; 3],
            bias: 0.5,
        };
        let y = linear_head_forward(&Tensor3::from_fn(2, 3, 4, |b, c, t| (b + c + t) as f64), &head).unwrap();
        assert!(y.data().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn unit_weight_is_identity() {
        let head = LinearHead {
            weights: vec![1.0],
            bias: 0.0,
        };
        let x = Tensor3::from_fn(1, 1, 5, |_, _, t| t as f64 * 0.3);
        assert_eq!(linear_head_forward(&x, &head).unwrap().data(), x.data());
    }

    #[test]
    fn rejects_wrong_width() {
        let head = LinearHead::zeros(4);
        assert!(linear_head_forward(&Tensor3::zeros(1, 3, 2), &head).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SeededRng::new(17);
        let x = Tensor3::from_fn(2, 3, 6, |_, _, _| rng.uniform(-1.0, 1.0));
        let mut head = LinearHead::zeros(3);
        head.init_uniform(&mut rng);
        let gout = Tensor3::from_fn(2, 1, 6, |_, _, _| rng.uniform(-1.0, 1.0));
        let f = |x: &Tensor3, h: &LinearHead| -> f64 {
            linear_head_forward(x, h).unwrap().data().iter().zip(gout.data()).map(|(a, b)| a * b).sum()
        };
        let (gx, g) = linear_head_backward(&x, &head, &gout).unwrap();
        let h = 1e-5;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-4);
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp.data_mut()[i] += h;
            xm.data_mut()[i] -= h;
            assert!(rel((f(&xp, &head) - f(&xm, &head)) / (2.0 * h), gx.data()[i]) < 1e-4);
        }
        for c in 0..3 {
            let (mut hp, mut hm) = (head.clone(), head.clone());
            hp.weights[c] += h;
            hm.weights[c] -= h;
            assert!(rel((f(&x, &hp) - f(&x, &hm)) / (2.0 * h), g.weights[c]) < 1e-4);
        }
        let (mut hp, mut hm) = (head.clone(), head.clone());
        hp.bias += h;
        hm.bias -= h;
        assert!(rel((f(&x, &hp) - f(&x, &hm)) / (2.0 * h), g.bias) < 1e-4);
    }
}
