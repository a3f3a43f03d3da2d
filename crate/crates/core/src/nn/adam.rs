use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(NnError::LengthMismatch {
            left: params.len(),
            right: if params.len() != grads.len() { grads.len() } else { state.m.len() },
        });
    }
    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![0.5, -1.0, 2.0];
        let before = p.clone();
        let mut s = AdamState::new(3, AdamConfig::default());
        adam_step(&mut p, &[0.0; 3], &mut s).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_unit_step_moves_by_learning_rate() {
        let mut p = vec![0.0, 1.0, -3.0, 10.0];
        let before = p.clone();
        let mut s = AdamState::new(4, AdamConfig::default());
        adam_step(&mut p, &[1.0; 4], &mut s).unwrap();
        for (a, b) in p.iter().zip(&before) {
            assert!((b - a - 1e-3).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = vec![0.1, 0.2, 0.3];
            let mut s = AdamState::new(3, AdamConfig::default());
            for i in 0..10 {
                let g: Vec<f64> = p.iter().map(|x| x * (i as f64 + 1.0) - 0.05).collect();
                adam_step(&mut p, &g, &mut s).unwrap();
            }
            p
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn rejects_ragged() {
        let mut s = AdamState::new(2, AdamConfig::default());
        assert!(adam_step(&mut [0.0; 2], &[0.0; 3], &mut s).is_err());
        assert!(adam_step(&mut [0.0; 3], &[0.0; 3], &mut s).is_err());
        assert_eq!(s.step, 0);
    }
}
