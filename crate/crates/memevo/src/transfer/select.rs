//! Meme selection: a concave QP over the probability simplex, and the
//! similarity terms that shape it.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::TaskFeatureMatrix;
use crate::meme::{hsic_compressor, Meme};
use crate::routing::LabelMatrix;
use crate::transfer::{kmeans, transform, SocietyOfMemes};

/// Simplex weights over the meme pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionWeights {
    pub mu: Vec<f64>,
}

impl SelectionWeights {
    /// True when the weights lie on the probability simplex.
    pub fn on_simplex(&self, tolerance: f64) -> bool {
        let sum: f64 = self.mu.iter().sum();
        (sum - 1.0).abs() <= tolerance && self.mu.iter().all(|&m| (-tolerance..=1.0 + tolerance).contains(&m))
    }
}

/// Weighting between distribution distance and capacity difference in the
/// similarity term.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityParams {
    /// Weight of the MMD term; `1 - beta` weights the capacity difference.
    pub beta: f64,
    /// Rounds of the alternating label/weight scheme in selection.
    pub rounds: usize,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams {
            beta: 0.8,
            rounds: 2,
        }
    }
}

/// Maximum mean discrepancy under the linear feature map: the distance
/// between the two task-feature means.
pub fn mmd(mean_s: &[f64], mean_t: &[f64]) -> f64 {
    mean_s
        .iter()
        .zip(mean_t)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Similarity of every pooled meme to the query instance.
///
/// Computes `-(beta * MMD_i + (1 - beta) * Dif_i)` where both terms are
/// max-normalized to [0, 1] across the pool (a zero maximum normalizes to
/// zero). Values are always <= 0.
pub fn similarities(
    som: &SocietyOfMemes,
    x_new: &TaskFeatureMatrix,
    capacity_new: f64,
    params: &SimilarityParams,
) -> Vec<f64> {
    assert!(
        (0.0..=1.0).contains(&params.beta),
        "beta must lie in [0, 1], got {}",
        params.beta
    );
    let query_mean = x_new.mean();
    let mmds: Vec<f64> = som
        .memes()
        .iter()
        .map(|m| mmd(&m.source_task_mean, &query_mean))
        .collect();
    let difs: Vec<f64> = som
        .memes()
        .iter()
        .map(|m| (m.source_capacity - capacity_new).abs())
        .collect();
    let mmd_max = mmds.iter().cloned().fold(0.0f64, f64::max);
    let dif_max = difs.iter().cloned().fold(0.0f64, f64::max);
    mmds.iter()
        .zip(&difs)
        .map(|(&m, &d)| {
            let m_hat = if mmd_max > 0.0 { m / mmd_max } else { 0.0 };
            let d_hat = if dif_max > 0.0 { d / dif_max } else { 0.0 };
            -(params.beta * m_hat + (1.0 - params.beta) * d_hat)
        })
        .collect()
}

/// Euclidean projection onto the probability simplex.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        acc += u;
        let candidate = (acc - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Maximizes `sum_i mu_i h_i + sum_i mu_i^2 sim_i` over the simplex.
///
/// With every `sim_i <= 0` the objective is concave and projected gradient
/// ascent converges; if all `sim_i` vanish the problem degenerates to a
/// linear program whose solution is the vertex of the best (lowest-index on
/// ties) HSIC score.
pub fn solve_selection_qp(h: &[f64], sim: &[f64]) -> Vec<f64> {
    let n = h.len();
    assert_eq!(n, sim.len());
    assert!(n > 0);
    if n == 1 {
        return vec![1.0];
    }
    if sim.iter().all(|&s| s > -1e-15) {
        let mut best = 0;
        for i in 1..n {
            if h[i] > h[best] + 1e-15 {
                best = i;
            }
        }
        let mut mu = vec![0.0; n];
        mu[best] = 1.0;
        return mu;
    }

    let objective = |mu: &[f64]| -> f64 {
        mu.iter()
            .zip(h)
            .zip(sim)
            .map(|((&m, &hi), &si)| m * hi + m * m * si)
            .sum()
    };

    let mut mu = vec![1.0 / n as f64; n];
    let mut value = objective(&mu);
    for _ in 0..20_000 {
        let grad: Vec<f64> = mu
            .iter()
            .zip(h)
            .zip(sim)
            .map(|((&m, &hi), &si)| hi + 2.0 * m * si)
            .collect();
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-16 {
            let trial: Vec<f64> = mu.iter().zip(&grad).map(|(&m, &g)| m + step * g).collect();
            let candidate = project_onto_simplex(&trial);
            let cand_value = objective(&candidate);
            let travel: f64 = candidate
                .iter()
                .zip(&mu)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if cand_value >= value + 1e-4 / step.max(1e-12) * travel && cand_value >= value {
                accepted = Some((candidate, cand_value, travel));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, cand_value, travel)) = accepted else {
            break;
        };
        mu = candidate;
        let done = travel.sqrt() < 1e-10 || (cand_value - value) < 1e-16 * value.abs().max(1.0);
        value = cand_value;
        if done {
            break;
        }
    }
    mu
}

/// Selects memes for a new instance and blends them into the generalized
/// meme `M_t`.
///
/// Two alternating rounds: labels come from k-means on the raw features,
/// weights from the selection QP; then labels are recomputed on the
/// `M_t`-transformed features and the weights re-solved. The final
/// `M_t = sum_i mu_i M_i` is the linear-combination variation of the
/// selected memes, with metadata blended by the same weights. An empty pool
/// is an error so the caller can fall back to baseline initialization.
pub fn select_memes(
    som: &SocietyOfMemes,
    x_new: &TaskFeatureMatrix,
    capacity_new: f64,
    fleet_size: usize,
    params: &SimilarityParams,
    seed: u64,
) -> Result<(SelectionWeights, Meme)> {
    if som.is_empty() {
        return Err(Error::EmptyPool);
    }
    let p = som.get(0).dim();
    if p != x_new.dim() {
        return Err(Error::Dimension(format!(
            "pool memes are {}-d, features are {}-d",
            p,
            x_new.dim()
        )));
    }
    let k = fleet_size.clamp(1, x_new.len());
    let sim = similarities(som, x_new, capacity_new, params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mu = vec![1.0 / som.len() as f64; som.len()];
    let mut current = combine(som, &mu)?;
    for round in 0..params.rounds.max(1) {
        let features = if round == 0 {
            x_new.clone()
        } else {
            transform(x_new, &current)?
        };
        let assignment = kmeans(&features, k, rng.gen());
        let y = LabelMatrix::from_assignment(&assignment);
        let compressor = hsic_compressor(x_new, &y);
        let h: Vec<f64> = som
            .memes()
            .iter()
            .map(|m| compressor.dot(m.matrix()))
            .collect();
        mu = solve_selection_qp(&h, &sim);
        current = combine(som, &mu)?;
    }
    Ok((SelectionWeights { mu }, current))
}

/// `M_t = sum_i mu_i M_i` with metadata blended by the same weights.
fn combine(som: &SocietyOfMemes, mu: &[f64]) -> Result<Meme> {
    let p = som.get(0).dim();
    let mut matrix = DMatrix::<f64>::zeros(p, p);
    let mut mean = vec![0.0; p];
    let mut capacity = 0.0;
    for (w, meme) in mu.iter().zip(som.memes()) {
        matrix += meme.matrix() * *w;
        for (acc, v) in mean.iter_mut().zip(&meme.source_task_mean) {
            *acc += w * v;
        }
        capacity += w * meme.source_capacity;
    }
    Meme::new(matrix, "generalized", mean, capacity)
}
