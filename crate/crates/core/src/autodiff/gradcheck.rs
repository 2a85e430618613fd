use super::{AutodiffError, Real, Tape};

/// A scalar function that can be evaluated both plainly and on a tape.
pub trait Objective {
    fn eval<T: Real>(&self, x: &[T]) -> T;
}

/// Gradient of `f` at `x` by reverse sweep.
pub fn gradient<F: Objective>(f: &F, x: &[f64]) -> Result<(f64, Vec<f64>), AutodiffError> {
    let tape = Tape::new();
    let vars = tape.lift_all(x)?;
    let out = f.eval(&vars);
    let grads = tape.backward(out)?;
    Ok((out.value(), grads.wrt_all(&vars)))
}

/// Central differences of a plain function.
pub fn finite_differences(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Result<Vec<f64>, AutodiffError> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let hi = f(&probe);
        probe[i] = x[i] - step;
        let lo = f(&probe);
        probe[i] = x[i];
        if !hi.is_finite() || !lo.is_finite() {
            return Err(AutodiffError::NonFiniteProbe { coordinate: i });
        }
        out.push((hi - lo) / (2.0 * step));
    }
    Ok(out)
}

/// Max over coordinates of `|analytic − numeric| / max(1, |numeric|)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / n.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Compares reverse-mode gradients of `f` with central differences of its
/// plain `f64` evaluation.
pub fn grad_check<F: Objective>(f: &F, x: &[f64], step: f64) -> Result<f64, AutodiffError> {
    let (_, analytic) = gradient(f, x)?;
    let numeric = finite_differences(|p| f.eval(p), x, step)?;
    Ok(relative_error(&analytic, &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Square;
    impl Objective for Square {
        fn eval<T: Real>(&self, x: &[T]) -> T {
            x[0].square()
        }
    }

    struct Poly;
    impl Objective for Poly {
        fn eval<T: Real>(&self, x: &[T]) -> T {
            x[0] * x[1] * x[1] + x[0].sin() * x[1].exp()
        }
    }

    #[test]
    fn square_is_exact_to_rounding() {
        assert!(grad_check(&Square, &[2.0], 1e-6).unwrap() <= 1e-8);
    }

    #[test]
    fn mixed_polynomial() {
        assert!(grad_check(&Poly, &[0.7, -1.3], 1e-6).unwrap() <= 1e-8);
    }

    #[test]
    fn non_finite_probe_is_reported() {
        let err = finite_differences(|x| (x[0] - 1e-7).ln(), &[0.0], 1e-6).unwrap_err();
        assert!(matches!(err, AutodiffError::NonFiniteProbe { coordinate: 0 }));
    }
}
