use super::{NnError, Tensor3};

/// `max(0, x)` elementwise.
pub fn relu(input: &Tensor3) -> Tensor3 {
    let mut out = input.clone();
    relu_inplace(&mut out);
    out
}

pub fn relu_inplace(t: &mut Tensor3) {
    for v in t.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Passes `grad_out` where the forward input was strictly positive; the
/// subgradient at zero is taken as 0.
pub fn relu_backward(input: &Tensor3, grad_out: &Tensor3) -> Result<Tensor3, NnError> {
    input.same_shape(grad_out)?;
    let mut g = grad_out.clone();
    for (gv, x) in g.data_mut().iter_mut().zip(input.data()) {
        if *x <= 0.0 {
            *gv = 0.0;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn series(v: &[f64]) -> Tensor3 {
        Tensor3::from_vec(1, 1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn clamps_negatives() {
        assert_eq!(relu(&series(&[-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn kink_gradient_is_zero() {
        let g = relu_backward(&series(&[-1.0, 0.0, 2.0]), &series(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn finite_differences_away_from_kink() {
        let mut rng = SeededRng::new(1);
        let x = Tensor3::from_fn(2, 3, 9, |_, _, _| {
            let v = rng.uniform(-1.0, 1.0);
            if v.abs() < 1e-2 { 0.5 } else { v }
        });
        let gout = Tensor3::from_fn(2, 3, 9, |_, _, _| rng.uniform(-1.0, 1.0));
        let g = relu_backward(&x, &gout).unwrap();
        let f = |x: &Tensor3| -> f64 { relu(x).data().iter().zip(gout.data()).map(|(a, b)| a * b).sum() };
        let h = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += h;
            let mut xm = x.clone();
            xm.data_mut()[i] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            let a = g.data()[i];
            assert!((fd - a).abs() / fd.abs().max(a.abs()).max(1e-4) < 1e-4);
        }
    }
}
