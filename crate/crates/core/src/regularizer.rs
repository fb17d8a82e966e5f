//! Divergence penalties `f_i(p)` measured against a reference distribution.
//!
//! Supported kinds:
//!
//! | kind | `f(p)` |
//! |---|---|
//! | `entropy` | `Σ p log(p / r)` (KL) |
//! | `total_variation` | `½ Σ |p - r|` |
//! | `renyi` | `log(Σ p^α r^{1-α}) / (α - 1)`, `0 < α ≤ 1` |
//! | `hellinger` | `½ Σ (√p - √r)²` |
//! | `squared_mean` | `(xᵀ(p - r))²` for support points `x` |
//!
//! Rényi with `α = 1` is the KL divergence and is routed to the entropy code.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::profile::SUM_TOL;

/// Rényi orders this close to 1 are treated as KL.
pub const RENYI_ALIAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    #[serde(alias = "kl", alias = "logit")]
    Entropy,
    #[serde(alias = "tv")]
    TotalVariation,
    Renyi,
    Hellinger,
    #[serde(alias = "sqmean")]
    SquaredMean,
}

impl RegularizerKind {
    pub const ALL: [RegularizerKind; 5] = [
        RegularizerKind::Entropy,
        RegularizerKind::TotalVariation,
        RegularizerKind::Renyi,
        RegularizerKind::Hellinger,
        RegularizerKind::SquaredMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::Entropy => "entropy",
            RegularizerKind::TotalVariation => "total_variation",
            RegularizerKind::Renyi => "renyi",
            RegularizerKind::Hellinger => "hellinger",
            RegularizerKind::SquaredMean => "squared_mean",
        }
    }
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "entropy" | "kl" | "logit" => Ok(RegularizerKind::Entropy),
            "total_variation" | "tv" => Ok(RegularizerKind::TotalVariation),
            "renyi" => Ok(RegularizerKind::Renyi),
            "hellinger" => Ok(RegularizerKind::Hellinger),
            "squared_mean" | "sqmean" => Ok(RegularizerKind::SquaredMean),
            other => Err(Error::InvalidParameter(format!(
                "unknown regularizer kind '{other}' (expected one of entropy, total_variation, renyi, hellinger, squared_mean)"
            ))),
        }
    }
}

/// One player's penalty and rationality `λ`.
///
/// `reference` defaults to uniform and `support_points` to `1, 2, …, n`, so a
/// single spec can be broadcast to players with different action counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_points: Option<Vec<f64>>,
}

impl Regularizer {
    fn plain(kind: RegularizerKind, lambda: f64) -> Self {
        Self { kind, lambda, alpha: None, reference: None, support_points: None }
    }

    pub fn entropy(lambda: f64) -> Self {
        Self::plain(RegularizerKind::Entropy, lambda)
    }

    pub fn total_variation(lambda: f64) -> Self {
        Self::plain(RegularizerKind::TotalVariation, lambda)
    }

    pub fn renyi(lambda: f64, alpha: f64) -> Self {
        Self { alpha: Some(alpha), ..Self::plain(RegularizerKind::Renyi, lambda) }
    }

    pub fn hellinger(lambda: f64) -> Self {
        Self::plain(RegularizerKind::Hellinger, lambda)
    }

    pub fn squared_mean(lambda: f64) -> Self {
        Self::plain(RegularizerKind::SquaredMean, lambda)
    }

    pub fn with_reference(mut self, reference: Vec<f64>) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_support_points(mut self, x: Vec<f64>) -> Self {
        self.support_points = Some(x);
        self
    }

    /// Kind actually used for computation (`renyi` with `α ≈ 1` becomes
    /// `entropy`).
    pub fn effective_kind(&self) -> RegularizerKind {
        match (self.kind, self.alpha) {
            (RegularizerKind::Renyi, Some(a)) if (a - 1.0).abs() < RENYI_ALIAS_TOL => RegularizerKind::Entropy,
            (kind, _) => kind,
        }
    }

    /// Rényi order; errors for other kinds or a missing value.
    pub fn alpha(&self) -> Result<f64> {
        self.alpha
            .ok_or_else(|| Error::InvalidParameter("renyi regularizer needs alpha".into()))
    }

    /// Parameter checks that do not depend on the action count.
    pub fn validate_params(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.kind == RegularizerKind::Renyi {
            let a = self.alpha()?;
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidParameter(format!("renyi alpha must lie in (0, 1], got {a}")));
            }
        }
        Ok(())
    }

    /// Full validation against `n` actions.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_params()?;
        if n == 0 {
            return Err(Error::Dimension("regularizer needs at least one action".into()));
        }
        if let Some(r) = &self.reference {
            if r.len() != n {
                return Err(Error::Dimension(format!("reference has {} entries for {n} actions", r.len())));
            }
            if r.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidParameter("reference entries must be strictly positive".into()));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > SUM_TOL * n as f64 {
                return Err(Error::InvalidDistribution(format!("reference sums to {s}")));
            }
        }
        if self.kind == RegularizerKind::SquaredMean {
            if let Some(x) = &self.support_points {
                if x.len() != n {
                    return Err(Error::Dimension(format!("{} support points for {n} actions", x.len())));
                }
                if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter("support points must be finite and strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    /// Reference distribution on `n` actions.
    pub fn reference(&self, n: usize) -> Vec<f64> {
        self.reference.clone().unwrap_or_else(|| vec![1.0 / n as f64; n])
    }

    /// Support points on `n` actions (`1..=n` unless given).
    pub fn support(&self, n: usize) -> Vec<f64> {
        self.support_points.clone().unwrap_or_else(|| (1..=n).map(|k| k as f64).collect())
    }

    /// False only for total variation, whose gradient is a subgradient.
    pub fn is_smooth(&self) -> bool {
        self.effective_kind() != RegularizerKind::TotalVariation
    }

    /// True when the gradient blows up as an entry of `p` goes to zero.
    pub fn is_boundary_singular(&self) -> bool {
        matches!(
            self.effective_kind(),
            RegularizerKind::Entropy | RegularizerKind::Renyi | RegularizerKind::Hellinger
        )
    }

    fn check_input(&self, p: &[f64]) -> Result<()> {
        self.validate(p.len())?;
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite entry".into()));
        }
        Ok(())
    }

    fn check_interior(&self, p: &[f64], what: &str) -> Result<()> {
        if self.is_boundary_singular() {
            if let Some(action) = p.iter().position(|&x| x <= 0.0) {
                return Err(Error::Singular { what: format!("{} {what}", self.effective_kind()), action });
            }
        }
        Ok(())
    }

    /// `f(p)`.
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.check_input(p)?;
        let n = p.len();
        let r = self.reference(n);
        let v = match self.effective_kind() {
            RegularizerKind::Entropy => p
                .iter()
                .zip(&r)
                .map(|(&pa, &ra)| if pa > 0.0 { pa * (pa / ra).ln() } else { 0.0 })
                .sum(),
            RegularizerKind::TotalVariation => 0.5 * p.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum::<f64>(),
            RegularizerKind::Renyi => {
                let a = self.alpha()?;
                let s: f64 = p.iter().zip(&r).map(|(&pa, &ra)| pa.max(0.0).powf(a) * ra.powf(1.0 - a)).sum();
                s.ln() / (a - 1.0)
            }
            RegularizerKind::Hellinger => {
                0.5 * p.iter().zip(&r).map(|(&pa, &ra)| (pa.max(0.0).sqrt() - ra.sqrt()).powi(2)).sum::<f64>()
            }
            RegularizerKind::SquaredMean => {
                let x = self.support(n);
                let m: f64 = x.iter().zip(p.iter().zip(&r)).map(|(xa, (pa, ra))| xa * (pa - ra)).sum();
                m * m
            }
        };
        Ok(v)
    }

    /// `∇f(p)`; for total variation the subgradient `½ sign(p - r)` with
    /// `sign(0) = 0`.
    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_input(p)?;
        self.check_interior(p, "gradient")?;
        let n = p.len();
        let r = self.reference(n);
        let g = match self.effective_kind() {
            RegularizerKind::Entropy => p.iter().zip(&r).map(|(pa, ra)| (pa / ra).ln() + 1.0).collect(),
            RegularizerKind::TotalVariation => p
                .iter()
                .zip(&r)
                .map(|(pa, ra)| {
                    let d = pa - ra;
                    if d > 0.0 {
                        0.5
                    } else if d < 0.0 {
                        -0.5
                    } else {
                        0.0
                    }
                })
                .collect(),
            RegularizerKind::Renyi => {
                let a = self.alpha()?;
                let w: Vec<f64> = p.iter().zip(&r).map(|(pa, ra)| pa.powf(a - 1.0) * ra.powf(1.0 - a)).collect();
                let s: f64 = w.iter().zip(p).map(|(wa, pa)| wa * pa).sum();
                w.iter().map(|wa| a / (a - 1.0) * wa / s).collect()
            }
            RegularizerKind::Hellinger => p.iter().zip(&r).map(|(pa, ra)| 0.5 - 0.5 * (ra / pa).sqrt()).collect(),
            RegularizerKind::SquaredMean => {
                let x = self.support(n);
                let m: f64 = x.iter().zip(p.iter().zip(&r)).map(|(xa, (pa, ra))| xa * (pa - ra)).sum();
                x.iter().map(|xa| 2.0 * m * xa).collect()
            }
        };
        Ok(g)
    }

    /// `∇²f(p)` as a dense row-major `n × n` matrix. Zero for total
    /// variation (piecewise linear).
    pub fn hessian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(p)?;
        self.check_interior(p, "hessian")?;
        let n = p.len();
        let r = self.reference(n);
        let mut h = vec![vec![0.0; n]; n];
        match self.effective_kind() {
            RegularizerKind::Entropy => {
                for a in 0..n {
                    h[a][a] = 1.0 / p[a];
                }
            }
            RegularizerKind::TotalVariation => {}
            RegularizerKind::Renyi => {
                let al = self.alpha()?;
                let w: Vec<f64> = p.iter().zip(&r).map(|(pa, ra)| pa.powf(al - 1.0) * ra.powf(1.0 - al)).collect();
                let s: f64 = w.iter().zip(p).map(|(wa, pa)| wa * pa).sum();
                for a in 0..n {
                    for b in 0..n {
                        h[a][b] = -(al * al / (al - 1.0)) * w[a] * w[b] / (s * s);
                    }
                    h[a][a] += al * w[a] / p[a] / s;
                }
            }
            RegularizerKind::Hellinger => {
                for a in 0..n {
                    h[a][a] = 0.25 * r[a].sqrt() * p[a].powf(-1.5);
                }
            }
            RegularizerKind::SquaredMean => {
                let x = self.support(n);
                for a in 0..n {
                    for b in 0..n {
                        h[a][b] = 2.0 * x[a] * x[b];
                    }
                }
            }
        }
        Ok(h)
    }

    /// Perturbed objective `λ⟨p, u⟩ - f(p)`.
    pub fn objective(&self, u: &[f64], p: &[f64]) -> Result<f64> {
        if u.len() != p.len() {
            return Err(Error::Dimension(format!("{} utilities for {} probabilities", u.len(), p.len())));
        }
        let lin: f64 = u.iter().zip(p).map(|(a, b)| a * b).sum();
        Ok(self.lambda * lin - self.value(p)?)
    }
}

/// One regularizer per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegularizerSet(Vec<Regularizer>);

impl RegularizerSet {
    pub fn new(regs: Vec<Regularizer>) -> Self {
        Self(regs)
    }

    /// The same spec for every player.
    pub fn broadcast(reg: Regularizer, num_players: usize) -> Self {
        Self(vec![reg; num_players])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &Regularizer {
        &self.0[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Regularizer> {
        self.0.iter()
    }

    /// Checks the player count and every spec against its action count.
    pub fn validate(&self, game: &Game) -> Result<()> {
        if self.0.len() != game.num_players() {
            return Err(Error::Dimension(format!(
                "{} regularizers for {} players",
                self.0.len(),
                game.num_players()
            )));
        }
        for (i, (reg, &n)) in self.0.iter().zip(game.action_counts()).enumerate() {
            reg.validate(n).map_err(|e| Error::InvalidParameter(format!("player {i}: {e}")))?;
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for RegularizerSet {
    type Output = Regularizer;

    fn index(&self, i: usize) -> &Regularizer {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(reg: &Regularizer, p: &[f64], h: f64) -> Vec<f64> {
        (0..p.len())
            .map(|a| {
                let mut up = p.to_vec();
                let mut dn = p.to_vec();
                up[a] += h;
                dn[a] -= h;
                (reg.value(&up).unwrap() - reg.value(&dn).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn all_kinds(lambda: f64) -> Vec<Regularizer> {
        vec![
            Regularizer::entropy(lambda),
            Regularizer::total_variation(lambda),
            Regularizer::renyi(lambda, 0.5),
            Regularizer::hellinger(lambda),
            Regularizer::squared_mean(lambda),
        ]
    }

    #[test]
    fn zero_at_reference() {
        for reg in all_kinds(1.0) {
            assert!(reg.value(&[0.25; 4]).unwrap().abs() < 1e-15, "{}", reg.kind);
            let r = vec![0.1, 0.2, 0.7];
            let reg = reg.with_reference(r.clone());
            assert!(reg.value(&r).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn tv_point_mass_on_two_actions() {
        assert!((Regularizer::total_variation(1.0).value(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn renyi_half_direct_formula() {
        // α = 1/2: log(Σ √(p r)) / (-1/2) = -2 log(√0.45 + √0.05)
        let expected = -2.0 * (0.45f64.sqrt() + 0.05f64.sqrt()).ln();
        let v = Regularizer::renyi(1.0, 0.5).value(&[0.9, 0.1]).unwrap();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.2231435513142097).abs() < 1e-12);
    }

    #[test]
    fn renyi_alpha_one_is_kl() {
        let p = [0.6, 0.3, 0.1];
        let a = Regularizer::renyi(1.0, 1.0);
        let b = Regularizer::entropy(1.0);
        assert_eq!(a.value(&p).unwrap(), b.value(&p).unwrap());
        assert_eq!(a.gradient(&p).unwrap(), b.gradient(&p).unwrap());
    }

    #[test]
    fn squared_mean_gradient_formula() {
        let reg = Regularizer::squared_mean(1.0).with_support_points(vec![0.0, 1.0, 3.0]);
        let p = [0.2, 0.2, 0.6];
        let m = 1.0 * (0.2 - 1.0 / 3.0) + 3.0 * (0.6 - 1.0 / 3.0);
        let g = reg.gradient(&p).unwrap();
        for (ga, xa) in g.iter().zip([0.0, 1.0, 3.0]) {
            assert!((ga - 2.0 * m * xa).abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_gradient_constant_at_reference() {
        let r = vec![0.2, 0.3, 0.5];
        let g = Regularizer::entropy(1.0).with_reference(r.clone()).gradient(&r).unwrap();
        assert!(g.iter().all(|&x| (x - g[0]).abs() < 1e-15));
    }

    #[test]
    fn entropy_gradient_differs_from_negentropy_by_constant() {
        // ∇ Σ p log p = 1 + log p; KL against uniform shifts it by log n.
        let p = [0.1, 0.2, 0.3, 0.4];
        let g = Regularizer::entropy(0.0).gradient(&p).unwrap();
        let shift = g[0] - (1.0 + p[0].ln());
        assert!((shift - 4f64.ln()).abs() < 1e-14);
        for (ga, pa) in g.iter().zip(p) {
            assert!((ga - (1.0 + pa.ln()) - shift).abs() < 1e-14);
        }
    }

    #[test]
    fn smooth_gradients_match_finite_differences() {
        let p = [0.15, 0.25, 0.6];
        for reg in all_kinds(1.0) {
            if !reg.is_smooth() {
                continue;
            }
            let g = reg.gradient(&p).unwrap();
            let fd = fd_gradient(&reg, &p, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{}: {a} vs {b}", reg.kind);
            }
        }
    }

    #[test]
    fn hessians_match_gradient_differences() {
        let p = [0.15, 0.25, 0.6];
        let h = 1e-6;
        for reg in all_kinds(1.0).into_iter().filter(Regularizer::is_smooth) {
            let hess = reg.hessian(&p).unwrap();
            for b in 0..3 {
                let mut up = p.to_vec();
                let mut dn = p.to_vec();
                up[b] += h;
                dn[b] -= h;
                let gu = reg.gradient(&up).unwrap();
                let gd = reg.gradient(&dn).unwrap();
                for a in 0..3 {
                    let fd = (gu[a] - gd[a]) / (2.0 * h);
                    assert!((hess[a][b] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{} [{a}][{b}]", reg.kind);
                }
            }
        }
    }

    #[test]
    fn boundary_singularity() {
        for reg in [Regularizer::entropy(1.0), Regularizer::renyi(1.0, 0.5), Regularizer::hellinger(1.0)] {
            assert!(matches!(reg.gradient(&[1.0, 0.0]), Err(Error::Singular { action: 1, .. })));
            assert!(reg.value(&[1.0, 0.0]).unwrap().is_finite());
        }
        assert!(Regularizer::total_variation(1.0).gradient(&[1.0, 0.0]).is_ok());
        assert!(Regularizer::squared_mean(1.0).gradient(&[1.0, 0.0]).is_ok());
    }

    #[test]
    fn validation() {
        assert!(Regularizer::renyi(1.0, 1.5).validate(2).is_err());
        assert!(Regularizer::renyi(1.0, 0.0).validate(2).is_err());
        assert!(Regularizer::entropy(-1.0).validate(2).is_err());
        assert!(Regularizer::entropy(1.0).with_reference(vec![1.0, 0.0]).validate(2).is_err());
        assert!(Regularizer::squared_mean(1.0).with_support_points(vec![2.0, 1.0]).validate(2).is_err());
        assert!(Regularizer::squared_mean(1.0).with_support_points(vec![1.0, 2.0]).validate(3).is_err());
    }

    #[test]
    fn kind_parsing_and_serde() {
        assert_eq!("tv".parse::<RegularizerKind>().unwrap(), RegularizerKind::TotalVariation);
        assert_eq!("squared-mean".parse::<RegularizerKind>().unwrap(), RegularizerKind::SquaredMean);
        assert!("bogus".parse::<RegularizerKind>().is_err());
        let reg: Regularizer = serde_json::from_str(r#"{"kind":"renyi","lambda":2.0,"alpha":0.5}"#).unwrap();
        assert_eq!(reg, Regularizer::renyi(2.0, 0.5));
    }
}
