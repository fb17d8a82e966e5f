//! Generalized quantal responses `argmax_p λ⟨p, u⟩ - f(p)` over the simplex.
//!
//! Closed forms (or exact finite procedures) exist for every supported
//! divergence; [`qr_numeric`] is a slow generic solver kept as a cross-check.

use crate::error::{Error, Result};
use crate::regularizer::{Regularizer, RegularizerKind};
use crate::root::bracket_and_bisect;
use crate::simplex::{ln_entries, multiplicative_step, project_simplex, softmax};

/// Gradient-mapping tolerance for the squared-mean projected gradient.
pub const SQMEAN_TOL: f64 = 1e-10;
/// Iteration cap for the squared-mean projected gradient.
pub const SQMEAN_MAX_ITER: usize = 100_000;

fn check_inputs(u: &[f64], reference: &[f64]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::Dimension("empty utility vector".into()));
    }
    if u.len() != reference.len() {
        return Err(Error::Dimension(format!("{} utilities for {} reference entries", u.len(), reference.len())));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("utilities must be finite".into()));
    }
    if reference.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter("reference must be strictly positive".into()));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn max_of(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn renormalize(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Logit response `p_a ∝ r_a exp(λ u_a)`.
pub fn qr_entropy(lambda: f64, u: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    check_inputs(u, reference)?;
    check_lambda(lambda)?;
    let logits: Vec<f64> = u.iter().zip(reference).map(|(ua, ra)| ra.ln() + lambda * ua).collect();
    softmax(&logits)
}

/// Response under `f(p) = ½‖p - r‖₁`.
///
/// The KKT conditions with multiplier `μ` (scaled by 2) give, per action,
/// `p_a = 0` if `μ > 2λu_a + 1`, `p_a = r_a` strictly between the two
/// breakpoints, and `p_a` free in `[0, r_a]` or `[r_a, 1]` at `μ = 2λu_a ± 1`.
/// Breakpoints are scanned from the top; the first one whose interval sums
/// bracket 1 is optimal. Leftover mass goes to the free actions in proportion
/// to the reference. The output may contain exact zeros.
pub fn qr_tv(lambda: f64, u: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    check_inputs(u, reference)?;
    check_lambda(lambda)?;
    let n = u.len();
    let top = max_of(u);
    let v: Vec<f64> = u.iter().map(|ua| 2.0 * lambda * (ua - top)).collect();
    let mut breakpoints: Vec<f64> = v.iter().flat_map(|&x| [x + 1.0, x - 1.0]).collect();
    breakpoints.sort_by(|a, b| b.total_cmp(a));
    breakpoints.dedup();

    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for &mu in &breakpoints {
        let tau = 1e-12 * (1.0 + mu.abs());
        for a in 0..n {
            let d = mu - v[a];
            (lo[a], hi[a]) = if d > 1.0 + tau {
                (0.0, 0.0)
            } else if d >= 1.0 - tau {
                (0.0, reference[a])
            } else if d > -1.0 + tau {
                (reference[a], reference[a])
            } else if d >= -1.0 - tau {
                (reference[a], 1.0)
            } else {
                (1.0, 1.0)
            };
        }
        let sum_lo: f64 = lo.iter().sum();
        let sum_hi: f64 = hi.iter().sum();
        if sum_lo <= 1.0 + 1e-12 && sum_hi >= 1.0 - 1e-12 {
            return Ok(fill_proportional(&lo, &hi, reference));
        }
    }
    Err(Error::Numerical("no feasible multiplier among the breakpoints".into()))
}

/// Starts at `lo` and water-fills the missing mass into actions with slack,
/// proportionally to `weights`, respecting the caps `hi`.
fn fill_proportional(lo: &[f64], hi: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut p = lo.to_vec();
    let mut remaining = 1.0 - lo.iter().sum::<f64>();
    let mut free: Vec<usize> = (0..p.len()).filter(|&a| hi[a] > lo[a]).collect();
    while remaining > 0.0 && !free.is_empty() {
        let w: f64 = free.iter().map(|&a| weights[a]).sum();
        let t = remaining / w;
        let capped: Vec<usize> = free.iter().copied().filter(|&a| p[a] + t * weights[a] >= hi[a]).collect();
        if capped.is_empty() {
            free.iter().for_each(|&a| p[a] += t * weights[a]);
            break;
        }
        for &a in &capped {
            remaining -= hi[a] - p[a];
            p[a] = hi[a];
        }
        free.retain(|a| !capped.contains(a));
    }
    renormalize(p.into_iter().map(|x| x.max(0.0)).collect())
}

/// Response under the Rényi divergence of order `α ∈ (0, 1)`:
/// `p_a ∝ r_a (μ - λu_a)^{-1/(1-α)}`, where `μ > λ max u` is the unique root
/// of `Σ r d^{-α/(1-α)} / Σ r d^{-1/(1-α)} = α/(1-α)` with `d_a = μ - λu_a`.
/// The root is searched in the offset `μ - λ max u`, in log space.
pub fn qr_renyi(lambda: f64, alpha: f64, u: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    check_inputs(u, reference)?;
    check_lambda(lambda)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("renyi alpha must lie in (0, 1], got {alpha}")));
    }
    if (alpha - 1.0).abs() < crate::regularizer::RENYI_ALIAS_TOL {
        return qr_entropy(lambda, u, reference);
    }
    let top = max_of(u);
    let gaps: Vec<f64> = u.iter().map(|ua| lambda * (top - ua)).collect();
    let log_r = ln_entries(reference);
    let inner = alpha / (1.0 - alpha);
    let outer = 1.0 / (1.0 - alpha);
    let log_terms = |delta: f64, power: f64| -> Vec<f64> {
        gaps.iter().zip(&log_r).map(|(g, lr)| lr - power * (delta + g).ln()).collect()
    };
    let ratio_minus_target = |delta: f64| {
        let num = crate::simplex::log_sum_exp(&log_terms(delta, inner));
        let den = crate::simplex::log_sum_exp(&log_terms(delta, outer));
        (num - den).exp() - inner
    };
    let lo = 1e-14 * (1.0 + (lambda * top).abs());
    let delta = bracket_and_bisect(ratio_minus_target, lo)?;
    softmax(&log_terms(delta, outer))
}

/// Response under the squared Hellinger distance `½ Σ (√p - √r)²`:
/// `p_a = r_a / (4 (μ - λu_a)²)` with `μ > λ max u` the unique root of
/// `Σ r_a / (μ - λu_a)² = 4`. For uniform `r` this reads
/// `Σ 1/(μ - λu_a)² = 4n`.
pub fn qr_hellinger(lambda: f64, u: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    check_inputs(u, reference)?;
    check_lambda(lambda)?;
    let top = max_of(u);
    let gaps: Vec<f64> = u.iter().map(|ua| lambda * (top - ua)).collect();
    let excess = |delta: f64| -> f64 {
        gaps.iter().zip(reference).map(|(g, r)| r / ((delta + g) * (delta + g))).sum::<f64>() - 4.0
    };
    let lo = 1e-14 * (1.0 + (lambda * top).abs());
    let delta = bracket_and_bisect(excess, lo)?;
    let p = gaps
        .iter()
        .zip(reference)
        .map(|(g, r)| r / (4.0 * (delta + g) * (delta + g)))
        .collect();
    Ok(renormalize(p))
}

/// Response under `f(p) = (xᵀ(p - r))²`: the convex QP
/// `min pᵀ(xxᵀ)p + cᵀp`, `c = -λu - 2(xᵀr)x`, solved by projected gradient
/// with step `1/(2‖x‖² + 1)` from the reference, until the gradient mapping
/// has norm at most [`SQMEAN_TOL`].
pub fn qr_sqmean(lambda: f64, u: &[f64], reference: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_inputs(u, reference)?;
    check_lambda(lambda)?;
    if x.len() != u.len() {
        return Err(Error::Dimension(format!("{} support points for {} actions", x.len(), u.len())));
    }
    let xr: f64 = x.iter().zip(reference).map(|(a, b)| a * b).sum();
    let step = 1.0 / (2.0 * x.iter().map(|v| v * v).sum::<f64>() + 1.0);
    let mut p = reference.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..SQMEAN_MAX_ITER {
        let xp: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
        let trial: Vec<f64> = p
            .iter()
            .zip(x.iter().zip(u))
            .map(|(pa, (xa, ua))| pa - step * (2.0 * (xp - xr) * xa - lambda * ua))
            .collect();
        let next = project_simplex(&trial)?;
        residual = next.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / step;
        p = next;
        if residual <= SQMEAN_TOL {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence { iterations: SQMEAN_MAX_ITER, residual })
}

/// Dispatches on `reg.kind` with the regularizer's own parameters.
pub fn quantal_response(reg: &Regularizer, u: &[f64]) -> Result<Vec<f64>> {
    let n = u.len();
    reg.validate(n)?;
    let r = reg.reference(n);
    match reg.effective_kind() {
        RegularizerKind::Entropy => qr_entropy(reg.lambda, u, &r),
        RegularizerKind::TotalVariation => qr_tv(reg.lambda, u, &r),
        RegularizerKind::Renyi => qr_renyi(reg.lambda, reg.alpha()?, u, &r),
        RegularizerKind::Hellinger => qr_hellinger(reg.lambda, u, &r),
        RegularizerKind::SquaredMean => qr_sqmean(reg.lambda, u, &r, &reg.support(n)),
    }
}

/// Iteration cap for [`qr_numeric`] on smooth divergences.
pub const NUMERIC_MAX_ITER: usize = 1_000_000;
/// Cap on the mirror-ascent step; larger steps only amplify rounding noise.
pub const NUMERIC_MAX_STEP: f64 = 1e3;
/// Subgradient iterations for [`qr_numeric`] on total variation.
pub const NUMERIC_TV_ITER: usize = 40_000;

/// Generic solver for `max_p λ⟨p, u⟩ - f(p)`, independent of the closed
/// forms.
///
/// Smooth divergences: entropic mirror ascent with a backtracking step,
/// stopped once the Frank-Wolfe gap `max_a g_a - ⟨p, g⟩` of the objective
/// gradient `g` is at most `tol`.
///
/// Total variation: mirror subgradient ascent with `c/√k` steps and an
/// averaged tail, followed by snapping entries near `0` or `r_a` onto those
/// values and handing the rest of the mass to the remaining entries. The best
/// candidate by objective is returned; `tol` is unused in this branch.
pub fn qr_numeric(reg: &Regularizer, u: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = u.len();
    reg.validate(n)?;
    check_inputs(u, &reg.reference(n))?;
    if reg.effective_kind() == RegularizerKind::TotalVariation {
        return numeric_tv(reg, u);
    }
    let objective = |p: &[f64]| reg.objective(u, p);
    let grad = |p: &[f64]| -> Result<Vec<f64>> {
        let gf = reg.gradient(p)?;
        Ok(u.iter().zip(gf).map(|(ua, ga)| reg.lambda * ua - ga).collect())
    };
    let fw_gap = |g: &[f64], p: &[f64]| max_of(g) - g.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    let mut p = reg.reference(n);
    let mut value = objective(&p)?;
    let mut g = grad(&p)?;
    let mut gap = fw_gap(&g, &p);
    let mut step = 1.0;
    for _ in 0..NUMERIC_MAX_ITER {
        if gap <= tol {
            return Ok(p);
        }
        loop {
            let q = multiplicative_step(&p, &g, step)?;
            let feasible = q.iter().all(|&x| x > 0.0) || !reg.is_boundary_singular();
            if feasible {
                let cv = objective(&q)?;
                let lin: f64 = g.iter().zip(q.iter().zip(&p)).map(|(ga, (qa, pa))| ga * (qa - pa)).sum();
                let kl: f64 = q
                    .iter()
                    .zip(&p)
                    .map(|(&qa, &pa)| if qa > 0.0 { qa * (qa / pa).ln() } else { 0.0 })
                    .sum();
                let gq = grad(&q)?;
                let gap_q = fw_gap(&gq, &q);
                // Near the optimum the objective changes by less than its
                // rounding error; the gap is then the only usable signal.
                let noise = 1e-14 * value.abs().max(1.0);
                let sufficient = cv - value >= lin - kl / step;
                let accept = if (cv - value).abs() > noise { sufficient } else { gap_q < gap };
                if accept {
                    p = q;
                    value = cv;
                    g = gq;
                    gap = gap_q;
                    step = (step * 1.25).min(NUMERIC_MAX_STEP);
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-30 {
                return Err(Error::NonConvergence { iterations: 0, residual: gap });
            }
        }
    }
    Err(Error::NonConvergence { iterations: NUMERIC_MAX_ITER, residual: gap })
}

fn numeric_tv(reg: &Regularizer, u: &[f64]) -> Result<Vec<f64>> {
    let n = u.len();
    let r = reg.reference(n);
    let scale = reg.lambda * u.iter().map(|x| x.abs()).fold(0.0, f64::max) + 1.0;
    let mut p = r.clone();
    let mut avg = vec![0.0; n];
    let tail_start = NUMERIC_TV_ITER / 2;
    for k in 1..=NUMERIC_TV_ITER {
        let sub = reg.gradient(&p)?;
        let g: Vec<f64> = u.iter().zip(sub).map(|(ua, sa)| reg.lambda * ua - sa).collect();
        p = multiplicative_step(&p, &g, 1.0 / (scale * (k as f64).sqrt()))?;
        if k > tail_start {
            avg.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
        }
    }
    let avg = renormalize(avg);
    let mut best = p.clone();
    let mut best_value = reg.objective(u, &p)?;
    let mut consider = |q: Vec<f64>| -> Result<()> {
        let v = reg.objective(u, &q)?;
        if v > best_value {
            best_value = v;
            best = q;
        }
        Ok(())
    };
    consider(avg.clone())?;
    for tau in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4] {
        if let Some(q) = snap_tv(&avg, &r, tau) {
            consider(q)?;
        }
    }
    Ok(best)
}

/// Snaps entries within `tau` of 0 or of the reference, then rescales the
/// remaining entries to restore unit mass.
fn snap_tv(p: &[f64], r: &[f64], tau: f64) -> Option<Vec<f64>> {
    let mut q = p.to_vec();
    let mut fixed_mass = 0.0;
    let mut free = Vec::new();
    for a in 0..p.len() {
        if p[a] <= tau {
            q[a] = 0.0;
        } else if (p[a] - r[a]).abs() <= tau {
            q[a] = r[a];
            fixed_mass += r[a];
        } else {
            free.push(a);
        }
    }
    let rest = 1.0 - fixed_mass;
    let free_mass: f64 = free.iter().map(|&a| p[a]).sum();
    if free.is_empty() {
        return ((rest).abs() < 1e-12).then_some(q);
    }
    if rest < 0.0 || free_mass <= 0.0 {
        return None;
    }
    free.iter().for_each(|&a| q[a] = p[a] * rest / free_mass);
    Some(q)
}
