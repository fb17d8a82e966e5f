//! The three benchmark families: matching pennies, strongly monotone bimatrix
//! games and rank-k general-sum games. Generated games are normalized; the raw
//! matrices are kept in `metadata.pre_normalization`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Game, GameMetadata};
use crate::error::{Error, Result};

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    // column-major fill order is part of the reproducibility contract
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

fn finish(a: &DMatrix<f64>, b: &DMatrix<f64>, metadata: GameMetadata) -> Result<Game> {
    let raw = vec![row_major(a), row_major(b)];
    let mut game = Game::new(vec![a.nrows(), a.ncols()], raw.clone())?;
    game.metadata = GameMetadata { pre_normalization: Some(raw), ..metadata };
    Ok(game.normalize_utilities())
}

/// Matching pennies, `A = [[1,-1],[-1,1]]`, `B = -A`, normalized to
/// `A' = [[1,0],[0,1]]`, `B' = [[0,1],[1,0]]`.
pub fn gen_matching_pennies() -> Game {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
    let b = -a.clone();
    let meta = GameMetadata { generator: Some("matching-pennies".into()), ..Default::default() };
    finish(&a, &b, meta).expect("matching pennies is well formed")
}

/// `A = μI + K`, `B = μI - K` with `K` the antisymmetric part of a standard
/// normal matrix rescaled to spectral norm `skew`, so `A + B = 2μI`.
pub fn gen_strongly_monotone(n: usize, mu: f64, skew: f64, rng: &mut impl Rng) -> Result<Game> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(skew >= 0.0) || !skew.is_finite() {
        return Err(Error::InvalidParameter(format!("skew must be nonnegative, got {skew}")));
    }
    let m = gaussian_matrix(n, n, rng);
    let mut k = (&m - m.transpose()) * 0.5;
    let norm = spectral_norm(&k);
    if norm > 0.0 && skew > 0.0 {
        k *= skew / norm;
    } else {
        k.fill(0.0);
    }
    let s = DMatrix::<f64>::identity(n, n) * mu;
    let a = &s + &k;
    let b = &s - &k;
    let meta = GameMetadata {
        generator: Some("monotone".into()),
        n: Some(n),
        mu: Some(mu),
        skew: Some(skew),
        ..Default::default()
    };
    finish(&a, &b, meta)
}

/// `A = UVᵀ + S`, `B = UVᵀ - S` with Gaussian `U, V` of width `k` and `S` the
/// antisymmetric part of a Gaussian matrix, so `A + B = 2UVᵀ` has rank `k`
/// (`k = 0` gives a zero-sum game).
pub fn gen_rank_k(m: usize, k: usize, rng: &mut impl Rng) -> Result<Game> {
    if m == 0 || k > m {
        return Err(Error::InvalidParameter(format!("rank k must satisfy 0 <= k <= m with m >= 1, got k={k}, m={m}")));
    }
    let u = gaussian_matrix(m, k, rng);
    let v = gaussian_matrix(m, k, rng);
    let low_rank = &u * v.transpose();
    let noise = gaussian_matrix(m, m, rng);
    let s = (&noise - noise.transpose()) * 0.5;
    let a = &low_rank + &s;
    let b = &low_rank - &s;
    let meta = GameMetadata {
        generator: Some("rank-k".into()),
        n: Some(m),
        k: Some(k),
        ..Default::default()
    };
    finish(&a, &b, meta)
}
