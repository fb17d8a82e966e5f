//! Simplex geometry: stabilized softmax, the KL-proximal direction and the
//! exact Euclidean projection onto the floored simplex
//! `Δ(A; ε) = {p : p_a ≥ ε, Σ p = 1}`.

use crate::error::{Error, Result};

/// `log Σ exp(x_a)`, ignoring `-∞` entries. Returns `-∞` for an empty or
/// all-`-∞` input.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Normalized `exp(logits)`. `-∞` entries map to exact zeros.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Numerical(format!("softmax needs a finite maximum logit, got {m}")));
    }
    let w: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / s).collect())
}

/// Natural logs of the entries, with `log 0 = -∞`.
pub fn ln_entries(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect()
}

/// `p ⊙ exp(step · g)`, renormalized. Zero entries of `p` stay zero.
pub fn multiplicative_step(p: &[f64], g: &[f64], step: f64) -> Result<Vec<f64>> {
    if p.len() != g.len() {
        return Err(Error::Dimension(format!("{} gradient entries for {} actions", g.len(), p.len())));
    }
    let logits: Vec<f64> = ln_entries(p).iter().zip(g).map(|(l, ga)| l + step * ga).collect();
    softmax(&logits)
}

/// KL-proximal maximizer `argmax_s ⟨s, g⟩ - η KL(s ‖ π)`, i.e.
/// `s_a = π_a exp(g_a / η) / ⟨π, exp(g / η)⟩`.
pub fn smoothed_direction(gradient: &[f64], pi: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    if pi.iter().all(|&x| x <= 0.0) {
        return Err(Error::InvalidDistribution("smoothed direction needs some positive mass".into()));
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("non-finite gradient entry".into()));
    }
    multiplicative_step(pi, gradient, 1.0 / eta)
}

/// Euclidean projection of an arbitrary real vector `y` onto
/// `{p : p_a ≥ floor, Σ p = 1}`, returning the projection and the shift `λ*`
/// with `p_a = max(y_a + λ*, floor)`.
///
/// `λ*` solves `Σ max(y_a - floor + λ, 0) = 1 - n·floor`; the map is
/// piecewise linear and nondecreasing in `λ`, so sorting its breakpoints
/// gives the root exactly.
pub fn project_floored(y: &[f64], floor: f64) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    if n == 0 {
        return Err(Error::Dimension("cannot project an empty vector".into()));
    }
    if !(floor >= 0.0) || floor * n as f64 > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("floor {floor} outside [0, 1/{n}]")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("cannot project a non-finite vector".into()));
    }
    let target = 1.0 - n as f64 * floor;
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if target <= 0.0 {
        return Ok((vec![1.0 / n as f64; n], floor - y_max));
    }
    let mut sorted: Vec<f64> = y.iter().map(|v| v - floor).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - target) / (j + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    let lambda = -theta;
    let p = y.iter().map(|v| (v + lambda).max(floor)).collect();
    Ok((p, lambda))
}

/// Euclidean projection onto the ε-exploration simplex `Δ(A; ε)`.
pub fn epsilon_projection(s: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    project_floored(s, epsilon).map(|(p, _)| p)
}

/// Projection onto the plain probability simplex.
pub fn project_simplex(y: &[f64]) -> Result<Vec<f64>> {
    epsilon_projection(y, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_RATIO: f64 = 0.7310585786300049;

    #[test]
    fn smoothed_direction_examples() {
        let s = smoothed_direction(&[1.0, 0.0], &[0.5, 0.5], 1.0).unwrap();
        assert!((s[0] - E_RATIO).abs() < 1e-15);
        assert!((s[1] - (1.0 - E_RATIO)).abs() < 1e-15);

        let pi = [0.2, 0.3, 0.5];
        let s = smoothed_direction(&[4.0; 3], &pi, 0.3).unwrap();
        for (a, b) in s.iter().zip(pi) {
            assert!((a - b).abs() < 1e-15);
        }
        let s = smoothed_direction(&[1.0, -3.0, 2.0], &pi, 1e12).unwrap();
        for (a, b) in s.iter().zip(pi) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn smoothed_direction_keeps_zeros() {
        let s = smoothed_direction(&[100.0, 0.0, 0.0], &[0.0, 0.5, 0.5], 1.0).unwrap();
        assert_eq!(s[0], 0.0);
        assert!(smoothed_direction(&[1.0, 0.0], &[0.0, 0.0], 1.0).is_err());
        assert!(smoothed_direction(&[1.0, 0.0], &[0.5, 0.5], 0.0).is_err());
    }

    #[test]
    fn smoothed_direction_survives_huge_gradients() {
        let s = smoothed_direction(&[1e4, 0.0], &[0.5, 0.5], 1e-3).unwrap();
        assert_eq!(s, vec![1.0, 0.0]);
    }

    #[test]
    fn projection_examples() {
        let (p, lambda) = project_floored(&[1.0, 0.0], 0.1).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-15 && (p[1] - 0.1).abs() < 1e-15);
        assert!((lambda + 0.1).abs() < 1e-15);

        let s = [0.3, 0.3, 0.4];
        assert_eq!(epsilon_projection(&s, 0.2).unwrap(), s.to_vec());

        let p = epsilon_projection(&[0.7, 0.2, 0.1], 1.0 / 3.0).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn projection_rejects_large_floor() {
        assert!(epsilon_projection(&[0.5, 0.5], 0.6).is_err());
    }

    #[test]
    fn projection_of_infeasible_vector() {
        let p = project_simplex(&[2.0, -1.0, 0.5]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn log_sum_exp_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
