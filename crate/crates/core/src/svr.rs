//! Epsilon-insensitive support vector regression with an RBF kernel,
//! trained by sequential minimal optimization.
//!
//! The dual is posed over `2n` variables (`α` and `α*` stacked, labels `+1`
//! and `-1`) and solved with second-order working-set selection. Kernel rows
//! are cached in `f32`; several target vectors over the same features can
//! share one cache and one support-vector pool.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descriptor::{Descriptor, DESCRIPTOR_LEN};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;
pub const DEFAULT_CACHE_BYTES: usize = 1536 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyper {
    /// Box constraint on each dual variable.
    pub c: f64,
    /// Half-width of the insensitive tube.
    pub epsilon: f64,
    /// RBF width in `exp(-γ‖a − b‖²)`.
    pub gamma: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    /// Iteration budget in units of the sample count.
    pub max_passes: usize,
}

impl Default for SvrHyper {
    fn default() -> Self {
        SvrHyper {
            c: 100.0,
            epsilon: 0.2,
            gamma: 1.0,
            tol: 1e-3,
            max_passes: 50,
        }
    }
}

impl SvrHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.epsilon >= 0.0) || !(self.gamma > 0.0) || !(self.tol > 0.0) || self.max_passes == 0
        {
            return Err(Error::Argument(format!("invalid SVR hyperparameters {self:?}")));
        }
        Ok(())
    }
}

/// Solver outcome recorded with each model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitInfo {
    pub iterations: u64,
    pub converged: bool,
    /// Final maximal KKT violation.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub support_vectors: Arc<[Descriptor]>,
    /// `α − α*` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub hyper: SvrHyper,
    pub fit: FitInfo,
}

impl SvrModel {
    pub fn predict(&self, feature: &Descriptor) -> f64 {
        let mut sum = 0.0;
        for (sv, &coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            sum += coef * kernel(self.hyper.gamma, sv, feature);
        }
        sum + self.bias
    }

    pub fn support_count(&self) -> usize {
        self.dual_coefs.len()
    }

    /// True when both models evaluate their kernel over the same pool.
    pub fn shares_pool_with(&self, other: &SvrModel) -> bool {
        Arc::ptr_eq(&self.support_vectors, &other.support_vectors) && self.hyper.gamma == other.hyper.gamma
    }
}

/// Free-function form of [`SvrModel::predict`].
pub fn svr_predict(model: &SvrModel, feature: &Descriptor) -> f64 {
    model.predict(feature)
}

/// Evaluates two models at once. When they share a support-vector pool the
/// kernel is computed once; results equal separate `predict` calls bit for bit.
pub fn predict_pair(a: &SvrModel, b: &SvrModel, feature: &Descriptor) -> (f64, f64) {
    if !a.shares_pool_with(b) {
        return (a.predict(feature), b.predict(feature));
    }
    let (mut sa, mut sb) = (0.0, 0.0);
    for ((sv, &ca), &cb) in a.support_vectors.iter().zip(&a.dual_coefs).zip(&b.dual_coefs) {
        let k = kernel(a.hyper.gamma, sv, feature);
        sa += ca * k;
        sb += cb * k;
    }
    (sa + a.bias, sb + b.bias)
}

#[inline]
pub fn squared_distance(a: &Descriptor, b: &Descriptor) -> f32 {
    let mut acc = [0.0f32; 16];
    for (ca, cb) in a.0.chunks_exact(16).zip(b.0.chunks_exact(16)) {
        for k in 0..16 {
            let d = ca[k] - cb[k];
            acc[k] += d * d;
        }
    }
    acc.iter().sum()
}

#[inline]
pub fn kernel(gamma: f64, a: &Descriptor, b: &Descriptor) -> f64 {
    (-gamma * squared_distance(a, b) as f64).exp()
}

/// Trains one scalar regressor.
pub fn svr_train(features: &[Descriptor], targets: &[f64], hyper: SvrHyper, seed: u64) -> Result<SvrModel> {
    let mut models = svr_train_shared(features, &[targets], hyper, seed, DEFAULT_CACHE_BYTES)?;
    Ok(models.pop().expect("one target set"))
}

/// Trains one regressor per target vector over a common feature set. The
/// returned models share a single support-vector pool (the union of their
/// support vectors), so they can be evaluated together by [`predict_pair`].
///
/// `seed` fixes the order in which the solver visits samples; it only
/// influences tie-breaking.
pub fn svr_train_shared(
    features: &[Descriptor],
    target_sets: &[&[f64]],
    hyper: SvrHyper,
    seed: u64,
    cache_bytes: usize,
) -> Result<Vec<SvrModel>> {
    hyper.validate()?;
    let n = features.len();
    if n < 2 {
        return Err(Error::Argument(format!("SVR needs at least two samples, got {n}")));
    }
    if target_sets.is_empty() {
        return Err(Error::Argument("no target vectors supplied".into()));
    }
    for targets in target_sets {
        if targets.len() != n {
            return Err(Error::Argument(format!("{} targets for {} features", targets.len(), n)));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::Argument("non-finite regression target".into()));
        }
    }
    if features.iter().any(|f| f.0.iter().any(|v| !v.is_finite())) {
        return Err(Error::Argument("non-finite feature value".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let permuted: Vec<Descriptor> = order.iter().map(|&i| features[i].clone()).collect();
    let mut cache = KernelCache::new(&permuted, hyper.gamma, cache_bytes);

    let mut solutions = Vec::with_capacity(target_sets.len());
    for targets in target_sets {
        let z: Vec<f64> = order.iter().map(|&i| targets[i]).collect();
        let sol = solve(&mut cache, &z, &hyper);
        let mut coefs = vec![0.0; n];
        for (t, &orig) in order.iter().enumerate() {
            coefs[orig] = sol.coefs[t];
        }
        solutions.push((coefs, sol.bias, sol.fit));
    }

    let keep: Vec<usize> = (0..n)
        .filter(|&i| solutions.iter().any(|(c, _, _)| c[i] != 0.0))
        .collect();
    let pool: Arc<[Descriptor]> = keep.iter().map(|&i| features[i].clone()).collect::<Vec<_>>().into();
    Ok(solutions
        .into_iter()
        .map(|(coefs, bias, fit)| SvrModel {
            support_vectors: Arc::clone(&pool),
            dual_coefs: keep.iter().map(|&i| coefs[i]).collect(),
            bias,
            hyper,
            fit,
        })
        .collect())
}

struct Solution {
    coefs: Vec<f64>,
    bias: f64,
    fit: FitInfo,
}

/// SMO on `min ½ αᵀQα + pᵀα` s.t. `yᵀα = 0`, `0 ≤ α ≤ C` with
/// `Q_st = y_s y_t K(s mod n, t mod n)`.
fn solve(cache: &mut KernelCache<'_>, z: &[f64], hyper: &SvrHyper) -> Solution {
    let n = z.len();
    let l = 2 * n;
    let c = hyper.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut alpha = vec![0.0f64; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                hyper.epsilon - z[t]
            } else {
                hyper.epsilon + z[t - n]
            }
        })
        .collect();

    let max_iter = (hyper.max_passes as u64).saturating_mul(n.max(100) as u64);
    let mut iterations = 0u64;
    let mut gap;
    let mut converged = false;
    loop {
        // Maximal violating first index.
        let mut gmax = f64::NEG_INFINITY;
        let mut pick_i = usize::MAX;
        for t in 0..l {
            if t < n {
                if alpha[t] < c && -grad[t] >= gmax {
                    gmax = -grad[t];
                    pick_i = t;
                }
            } else if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                pick_i = t;
            }
        }
        if pick_i == usize::MAX {
            gap = 0.0;
            converged = true;
            break;
        }
        let i = pick_i;
        let yi = sign(i);
        let ki = i % n;
        cache.ensure(ki);

        // Second index by largest objective decrease.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut pick_j = usize::MAX;
        let mut best = f64::INFINITY;
        {
            let row_i = cache.row(ki);
            for t in 0..l {
                let kt = t % n;
                let qit = yi * sign(t) * row_i[kt] as f64;
                if t < n {
                    if alpha[t] > 0.0 {
                        let diff = gmax + grad[t];
                        if grad[t] >= gmax2 {
                            gmax2 = grad[t];
                        }
                        if diff > 0.0 {
                            let mut quad = 2.0 - 2.0 * yi * qit;
                            if quad <= 0.0 {
                                quad = TAU;
                            }
                            let obj = -(diff * diff) / quad;
                            if obj <= best {
                                best = obj;
                                pick_j = t;
                            }
                        }
                    }
                } else if alpha[t] < c {
                    let diff = gmax - grad[t];
                    if -grad[t] >= gmax2 {
                        gmax2 = -grad[t];
                    }
                    if diff > 0.0 {
                        let mut quad = 2.0 + 2.0 * yi * qit;
                        if quad <= 0.0 {
                            quad = TAU;
                        }
                        let obj = -(diff * diff) / quad;
                        if obj <= best {
                            best = obj;
                            pick_j = t;
                        }
                    }
                }
            }
        }
        gap = gmax + gmax2;
        if gap < hyper.tol || pick_j == usize::MAX {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let j = pick_j;
        let yj = sign(j);
        let kj = j % n;
        cache.ensure(kj);
        let qij = yi * yj * cache.row(ki)[kj] as f64;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let mut quad = 2.0 + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = 2.0 - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        // G_t += Q_ti Δα_i + Q_tj Δα_j, using Q_ti = y_t y_i K.
        let wi = yi * (ai - old_i);
        let wj = yj * (aj - old_j);
        let (row_i, row_j) = cache.pair(ki, kj);
        let (g_pos, g_neg) = grad.split_at_mut(n);
        for k in 0..n {
            let v = wi * row_i[k] as f64 + wj * row_j[k] as f64;
            g_pos[k] += v;
            g_neg[k] -= v;
        }
    }

    // Offset from free variables, or the midpoint of the feasible interval.
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..l {
        let yt = sign(t);
        let yg = yt * grad[t];
        if alpha[t] >= c {
            if yt < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if yt > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (upper + lower)
    };
    Solution {
        coefs: (0..n).map(|k| alpha[k] - alpha[k + n]).collect(),
        bias: -rho,
        fit: FitInfo {
            iterations,
            converged,
            gap,
        },
    }
}

/// Least-recently-used cache of kernel rows.
struct KernelCache<'a> {
    features: &'a [Descriptor],
    gamma: f64,
    rows: Vec<Option<Box<[f32]>>>,
    last_used: Vec<u64>,
    clock: u64,
    resident: usize,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(features: &'a [Descriptor], gamma: f64, cache_bytes: usize) -> Self {
        let n = features.len();
        let row_bytes = n * std::mem::size_of::<f32>();
        let capacity = (cache_bytes / row_bytes.max(1)).clamp(2, n.max(2));
        KernelCache {
            features,
            gamma,
            rows: vec![None; n],
            last_used: vec![0; n],
            clock: 0,
            resident: 0,
            capacity,
        }
    }

    fn ensure(&mut self, k: usize) {
        self.clock += 1;
        self.last_used[k] = self.clock;
        if self.rows[k].is_some() {
            return;
        }
        if self.resident >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&r| self.rows[r].is_some() && r != k)
                .min_by_key(|&r| self.last_used[r])
                .expect("cache holds at least one other row");
            self.rows[victim] = None;
            self.resident -= 1;
        }
        let base = &self.features[k];
        let gamma = self.gamma;
        let row: Box<[f32]> = self
            .features
            .iter()
            .map(|f| (-gamma * squared_distance(base, f) as f64).exp() as f32)
            .collect();
        self.rows[k] = Some(row);
        self.resident += 1;
    }

    fn row(&self, k: usize) -> &[f32] {
        self.rows[k].as_deref().expect("row resident")
    }

    fn pair(&self, a: usize, b: usize) -> (&[f32], &[f32]) {
        (self.row(a), self.row(b))
    }
}

const _: () = assert!(DESCRIPTOR_LEN.is_multiple_of(16));
