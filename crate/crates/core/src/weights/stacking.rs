//! Stacking of predictive distributions under the log score.
//!
//! Maximises `Σ_i log Σ_k w_k exp(matrix(i, k))` over the simplex with
//! exponentiated-gradient ascent and a backtracking step size. The objective is
//! concave, so a point where the gradient is equal across the support and no
//! larger off the support is a global maximiser; that KKT residual is the
//! stopping rule. Close to the optimum, objective differences are below
//! rounding, so Newton steps on the current face take over and are accepted
//! when they shrink the KKT residual.
//!
//! The iteration starts at the barycentre and is symmetric in the models, so on
//! a flat face (e.g. identical columns) it stays at the uniform point of that face.

use std::collections::HashMap;

use super::{Diagnostics, PointwiseMatrix, Scheme, WeightVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackingOptions {
    /// Bound on the KKT residual of the normalised gradient.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StackingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Weights below this with a below-average gradient are set to exactly zero.
const DROP_WEIGHT: f64 = 1e-9;
/// Mass given back to a zero weight whose gradient is above average.
const REVIVE_WEIGHT: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 1e12;
const MIN_STEP: f64 = 1e-14;
/// KKT residual below which Newton steps on the current face are tried.
const NEWTON_ZONE: f64 = 1e-3;

/// The objective on distinct rows, each with its multiplicity.
struct Problem {
    k: usize,
    n: f64,
    counts: Vec<f64>,
    offsets: Vec<f64>,
    /// `exp(matrix(i, k) - max_k matrix(i, k))`, row-major.
    scaled: Vec<f64>,
}

impl Problem {
    fn new(matrix: &PointwiseMatrix) -> Self {
        let k = matrix.k();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut counts = Vec::new();
        let mut offsets = Vec::new();
        let mut scaled = Vec::new();
        for i in 0..matrix.n() {
            let row = matrix.row(i);
            let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
            if let Some(&u) = index.get(&key) {
                counts[u] += 1.0;
                continue;
            }
            index.insert(key, counts.len());
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            counts.push(1.0);
            offsets.push(max);
            scaled.extend(row.iter().map(|v| (v - max).exp()));
        }
        Self {
            k,
            n: matrix.n() as f64,
            counts,
            offsets,
            scaled,
        }
    }

    fn mixture(&self, u: usize, w: &[f64]) -> f64 {
        self.scaled[u * self.k..(u + 1) * self.k]
            .iter()
            .zip(w)
            .map(|(p, w)| p * w)
            .sum()
    }

    fn objective(&self, w: &[f64]) -> f64 {
        (0..self.counts.len())
            .map(|u| self.counts[u] * (self.offsets[u] + self.mixture(u, w).ln()))
            .sum()
    }

    /// Gradient divided by `n`; at any point of the simplex with a finite
    /// objective its `w`-weighted average is 1.
    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.k];
        for u in 0..self.counts.len() {
            let mix = self.mixture(u, w);
            let scale = self.counts[u] / mix;
            for (gk, p) in g.iter_mut().zip(&self.scaled[u * self.k..(u + 1) * self.k]) {
                *gk += scale * p;
            }
        }
        for gk in &mut g {
            *gk /= self.n;
        }
        g
    }

    /// Hessian of the objective restricted to `support`, row-major.
    fn hessian(&self, w: &[f64], support: &[usize]) -> Vec<f64> {
        let m = support.len();
        let mut h = vec![0.0; m * m];
        for u in 0..self.counts.len() {
            let mix = self.mixture(u, w);
            let row = &self.scaled[u * self.k..(u + 1) * self.k];
            let scale = self.counts[u] / (mix * mix);
            for (a, &ja) in support.iter().enumerate() {
                for (b, &jb) in support.iter().enumerate() {
                    h[a * m + b] -= scale * row[ja] * row[jb];
                }
            }
        }
        h
    }

    /// Newton direction on the face spanned by `support`, keeping the weights
    /// summing to one. `None` if the KKT system is singular.
    fn newton_direction(&self, w: &[f64], g: &[f64], support: &[usize]) -> Option<Vec<f64>> {
        let m = support.len();
        let h = self.hessian(w, support);
        let ridge = 1e-12 * (0..m).map(|a| h[a * m + a].abs()).sum::<f64>().max(1e-300);
        // [H - ridge·I, 1; 1ᵀ, 0] [Δ; μ] = [-∇f; 0]
        let dim = m + 1;
        let mut a = vec![0.0; dim * (dim + 1)];
        for r in 0..m {
            for c in 0..m {
                a[r * (dim + 1) + c] = h[r * m + c] - if r == c { ridge } else { 0.0 };
            }
            a[r * (dim + 1) + m] = 1.0;
            a[m * (dim + 1) + r] = 1.0;
            a[r * (dim + 1) + dim] = -self.n * g[support[r]];
        }
        let x = solve_augmented(&mut a, dim)?;
        let mut delta = vec![0.0; self.k];
        for (r, &j) in support.iter().enumerate() {
            delta[j] = x[r];
        }
        Some(delta)
    }
}

/// Gaussian elimination with partial pivoting on a `dim × (dim + 1)` augmented matrix.
fn solve_augmented(a: &mut [f64], dim: usize) -> Option<Vec<f64>> {
    let width = dim + 1;
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&x, &y| {
            a[x * width + col]
                .abs()
                .total_cmp(&a[y * width + col].abs())
        })?;
        if a[pivot * width + col].abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for c in 0..width {
                a.swap(pivot * width + c, col * width + c);
            }
        }
        for r in col + 1..dim {
            let factor = a[r * width + col] / a[col * width + col];
            if factor != 0.0 {
                for c in col..width {
                    a[r * width + c] -= factor * a[col * width + c];
                }
            }
        }
    }
    let mut x = vec![0.0; dim];
    for r in (0..dim).rev() {
        let tail: f64 = (r + 1..dim).map(|c| a[r * width + c] * x[c]).sum();
        x[r] = (a[r * width + dim] - tail) / a[r * width + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Moves `w` along `delta`, stopping at the boundary of the simplex; a
/// coordinate that reaches the boundary is set to exactly zero.
fn step_within_simplex(w: &[f64], delta: &[f64]) -> Vec<f64> {
    let mut t = 1.0f64;
    let mut blocking = None;
    for (j, (&wj, &dj)) in w.iter().zip(delta).enumerate() {
        if dj < 0.0 && wj + dj < 0.0 {
            let tj = -wj / dj;
            if tj < t {
                t = tj;
                blocking = Some(j);
            }
        }
    }
    let mut cand: Vec<f64> = w
        .iter()
        .zip(delta)
        .map(|(w, d)| (w + t * d).max(0.0))
        .collect();
    if let Some(j) = blocking {
        cand[j] = 0.0;
    }
    renormalize(&mut cand);
    cand
}

fn kkt_residual(w: &[f64], g: &[f64]) -> f64 {
    let level: f64 = w.iter().zip(g).map(|(w, g)| w * g).sum();
    w.iter()
        .zip(g)
        .map(|(&w, &g)| {
            if w > 0.0 {
                (g - level).abs()
            } else {
                (g - level).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn renormalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
}

/// Stacking weights with the default iteration cap.
pub fn stacking(matrix: &PointwiseMatrix, tol: f64) -> Result<WeightVector> {
    stacking_with(
        matrix,
        &StackingOptions {
            tol,
            ..StackingOptions::default()
        },
    )
}

/// Stacking weights. Hitting the iteration cap is not an error: the best
/// iterate is returned with `converged = false` in its diagnostics.
pub fn stacking_with(matrix: &PointwiseMatrix, options: &StackingOptions) -> Result<WeightVector> {
    if !(options.tol > 0.0 && options.tol.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tol must be positive, got {}",
            options.tol
        )));
    }
    let problem = Problem::new(matrix);
    let k = problem.k;
    let mut w = vec![1.0 / k as f64; k];
    let mut f = problem.objective(&w);
    let mut g = problem.gradient(&w);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut residual = kkt_residual(&w, &g);
    let slack = |f: f64| 4.0 * f64::EPSILON * (f.abs() + problem.n);

    while residual > options.tol && iterations < options.max_iter {
        iterations += 1;
        let level: f64 = w.iter().zip(&g).map(|(w, g)| w * g).sum();

        // Off-support coordinates that should be in the support.
        if (0..k).any(|j| w[j] == 0.0 && g[j] > level + options.tol) {
            for j in 0..k {
                if w[j] == 0.0 && g[j] > level + options.tol {
                    w[j] = REVIVE_WEIGHT;
                }
            }
            renormalize(&mut w);
            f = problem.objective(&w);
            g = problem.gradient(&w);
            residual = kkt_residual(&w, &g);
            continue;
        }

        // Tiny weights on coordinates the gradient pushes out.
        let drop: Vec<usize> = (0..k)
            .filter(|&j| w[j] > 0.0 && w[j] < DROP_WEIGHT && g[j] < level)
            .collect();
        if !drop.is_empty() && drop.len() < w.iter().filter(|&&x| x > 0.0).count() {
            let mut cand = w.clone();
            for &j in &drop {
                cand[j] = 0.0;
            }
            renormalize(&mut cand);
            let f_cand = problem.objective(&cand);
            if f_cand >= f - slack(f) {
                w = cand;
                f = f_cand;
                g = problem.gradient(&w);
                residual = kkt_residual(&w, &g);
                continue;
            }
        }

        // Near the optimum objective differences drown in rounding, so Newton
        // steps are judged by the KKT residual instead.
        if residual < NEWTON_ZONE {
            let support: Vec<usize> = (0..k).filter(|&j| w[j] > 0.0).collect();
            if let Some(delta) = problem.newton_direction(&w, &g, &support) {
                let cand = step_within_simplex(&w, &delta);
                let f_cand = problem.objective(&cand);
                if f_cand.is_finite() && f_cand >= f - slack(f) {
                    let g_cand = problem.gradient(&cand);
                    let r_cand = kkt_residual(&cand, &g_cand);
                    if r_cand < residual {
                        w = cand;
                        f = f_cand;
                        g = g_cand;
                        residual = r_cand;
                        continue;
                    }
                }
            }
        }

        let g_max = (0..k)
            .filter(|&j| w[j] > 0.0)
            .map(|j| g[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        while step >= MIN_STEP {
            let mut cand: Vec<f64> = w
                .iter()
                .zip(&g)
                .map(|(&w, &g)| {
                    if w > 0.0 {
                        w * (step * (g - g_max)).exp()
                    } else {
                        0.0
                    }
                })
                .collect();
            renormalize(&mut cand);
            let f_cand = problem.objective(&cand);
            let ascent: f64 = problem.n
                * cand
                    .iter()
                    .zip(&w)
                    .zip(&g)
                    .map(|((c, w), g)| (c - w) * g)
                    .sum::<f64>();
            if f_cand.is_finite() && f_cand >= f + ARMIJO * ascent - slack(f) {
                w = cand;
                f = f_cand;
                accepted = true;
                step = (step * 2.0).min(MAX_STEP);
                break;
            }
            step *= 0.5;
        }
        g = problem.gradient(&w);
        residual = kkt_residual(&w, &g);
        if !accepted {
            // no step improves the objective at working precision
            break;
        }
    }

    Ok(WeightVector::new(
        w,
        Scheme::Stacking,
        Diagnostics::Stacking {
            iterations,
            converged: residual <= options.tol,
            kkt_residual: residual,
            objective: f,
        },
    ))
}

/// `Σ_i log Σ_k w_k exp(matrix(i, k))`, stabilised per row.
pub fn stacking_objective(weights: &[f64], matrix: &PointwiseMatrix) -> Result<f64> {
    if weights.len() != matrix.k() {
        return Err(Error::LengthMismatch(weights.len(), matrix.k()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
        || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidArgument(format!(
            "weights must lie on the simplex, got {weights:?}"
        )));
    }
    Ok((0..matrix.n())
        .map(|i| {
            let row = matrix.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mix: f64 = row
                .iter()
                .zip(weights)
                .map(|(v, w)| w * (v - max).exp())
                .sum();
            max + mix.ln()
        })
        .sum())
}
