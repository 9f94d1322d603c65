use alloc::vec::Vec;

use crate::error::{domain_err, Error, Result};

/// Central-difference gradient of `f` at `x`:
/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate `i`.
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(domain_err!("finite difference step must be positive, got {h}"));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(alloc::format!(
                "objective at coordinate {i} of finite difference"
            )));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Smallest magnitude used as the denominator of [`relative_error`].
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Largest [`relative_error`] over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| relative_error(x, y)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn square_derivative() {
        let g = finite_diff_grad(|x| x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = finite_diff_grad(|_| 4.2, &[1.0, -2.0, 0.0], 1e-5).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn linear_form_recovers_coefficients() {
        let c = [1.5, -0.25, 3.0, 0.0];
        let g = finite_diff_grad(
            |x| x.iter().zip(&c).map(|(a, b)| a * b).sum(),
            &[0.3, 0.7, -1.1, 2.0],
            1e-5,
        )
        .unwrap();
        for (gi, ci) in g.iter().zip(&c) {
            assert!((gi - ci).abs() < 1e-8);
        }
    }

    #[test]
    fn cubic_polynomial_is_second_order_accurate() {
        // d/dx x^3 = 3x^2; central differences err by exactly h^2 here.
        let h = 1e-3;
        let g = finite_diff_grad(|x| x[0] * x[0] * x[0], &[2.0], h).unwrap();
        assert!((g[0] - 12.0).abs() <= 1.01 * h * h);
    }

    #[test]
    fn errors() {
        assert!(finite_diff_grad(|x| x[0], &[1.0], 0.0).is_err());
        assert!(matches!(
            finite_diff_grad(|x| 1.0 / (x[0] - x[0]), &[1.0], 1e-5),
            Err(Error::Numeric(_))
        ));
    }
}
