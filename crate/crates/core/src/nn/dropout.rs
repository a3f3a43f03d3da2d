use super::{NnError, Tensor3};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-element scale applied by one dropout call: `0` for dropped entries,
/// `1/p_keep` for survivors. `None` when the call was the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub p_keep: f64,
    pub scale: Option<Vec<f64>>,
}

impl DropoutMask {
    pub fn identity(p_keep: f64) -> Self {
        Self { p_keep, scale: None }
    }

    pub fn is_identity(&self) -> bool {
        self.scale.is_none()
    }
}

fn check_keep(p_keep: f64) -> Result<(), NnError> {
    if !(p_keep > 0.0 && p_keep <= 1.0) {
        return Err(NnError::InvalidParameter {
            name: "p_keep",
            reason: format!("{p_keep} is outside (0, 1]"),
        });
    }
    Ok(())
}

/// Inverted dropout. In training mode each element survives with probability
/// `p_keep` (one uniform draw per element, in storage order) and survivors are
/// scaled by `1/p_keep`. Evaluation mode and `p_keep == 1` are the identity and
/// consume no randomness.
pub fn dropout(input: &Tensor3, p_keep: f64, rng: &mut SeededRng, mode: Mode) -> Result<(Tensor3, DropoutMask), NnError> {
    check_keep(p_keep)?;
    if mode == Mode::Eval || p_keep == 1.0 {
        return Ok((input.clone(), DropoutMask::identity(p_keep)));
    }
    let inv = 1.0 / p_keep;
    let scale: Vec<f64> = (0..input.len())
        .map(|_| if rng.next_f64() < p_keep { inv } else { 0.0 })
        .collect();
    let mut out = input.clone();
    for (v, s) in out.data_mut().iter_mut().zip(&scale) {
        *v *= s;
    }
    Ok((out, DropoutMask { p_keep, scale: Some(scale) }))
}

pub fn dropout_backward(mask: &DropoutMask, grad_out: &Tensor3) -> Result<Tensor3, NnError> {
    let mut g = grad_out.clone();
    if let Some(scale) = &mask.scale {
        if scale.len() != g.len() {
            return Err(NnError::LengthMismatch {
                left: scale.len(),
                right: g.len(),
            });
        }
        for (v, s) in g.data_mut().iter_mut().zip(scale) {
            *v *= s;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Tensor3 {
        Tensor3::from_fn(1, 1, n, |_, _, t| t as f64 - 3.0)
    }

    #[test]
    fn eval_is_identity() {
        let x = ramp(20);
        let (y, mask) = dropout(&x, 0.5, &mut SeededRng::new(1), Mode::Eval).unwrap();
        assert_eq!(y, x);
        assert!(mask.is_identity());
    }

    #[test]
    fn keep_one_is_identity_in_training() {
        let x = ramp(20);
        let (y, _) = dropout(&x, 1.0, &mut SeededRng::new(1), Mode::Train).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn rejects_nonpositive_keep() {
        let x = ramp(3);
        assert!(dropout(&x, 0.0, &mut SeededRng::new(1), Mode::Train).is_err());
        assert!(dropout(&x, -0.2, &mut SeededRng::new(1), Mode::Eval).is_err());
        assert!(dropout(&x, 1.5, &mut SeededRng::new(1), Mode::Eval).is_err());
    }

    #[test]
    fn preserves_expectation() {
        let x = Tensor3::from_fn(1, 1, 100_000, |_, _, _| 1.0);
        let (y, _) = dropout(&x, 0.8, &mut SeededRng::new(99), Mode::Train).unwrap();
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((0.98..=1.02).contains(&mean), "{mean}");
    }

    #[test]
    fn backward_applies_the_same_mask() {
        let x = Tensor3::from_fn(1, 2, 50, |_, _, _| 1.0);
        let (y, mask) = dropout(&x, 0.6, &mut SeededRng::new(3), Mode::Train).unwrap();
        let g = dropout_backward(&mask, &x).unwrap();
        assert_eq!(g, y);
    }

    #[test]
    fn same_stream_same_mask() {
        let x = ramp(64);
        let (a, _) = dropout(&x, 0.7, &mut SeededRng::new(5), Mode::Train).unwrap();
        let (b, _) = dropout(&x, 0.7, &mut SeededRng::new(5), Mode::Train).unwrap();
        assert_eq!(a, b);
    }
}
