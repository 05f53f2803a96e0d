//! HSIC dependence scoring and the projected-gradient meme learner.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::TaskFeatureMatrix;
use crate::meme::{ConstraintTriple, LearnParams, Meme};
use crate::routing::{LabelMatrix, Solution};

/// Service-order constraints exceeding this count are subsampled.
const MAX_CONSTRAINTS: usize = 5000;
const SUBSAMPLE_SEED: u64 = 0x5eed_c0de;

/// Derives order constraints from a solution's routes.
///
/// A route serving `t1, ..., tk` pins the distance structure of its order:
/// seen from the route head `t1`, each later task must be farther than its
/// predecessor. For every `m in 2..k` this emits `(t1, t_{m+1}, t_m)`,
/// meaning `d(t1, t_{m+1}) > d(t1, t_m)`; routes with fewer than three tasks
/// emit nothing.
pub fn extract_constraints(solution: &Solution) -> Vec<ConstraintTriple> {
    let mut triples = Vec::new();
    for route in &solution.routes {
        let ids = &route.task_ids;
        for m in 1..ids.len().saturating_sub(1) {
            triples.push(ConstraintTriple {
                i: ids[0],
                j: ids[m + 1],
                q: ids[m],
            });
        }
    }
    if triples.len() > MAX_CONSTRAINTS {
        let mut rng = ChaCha8Rng::seed_from_u64(SUBSAMPLE_SEED);
        let picked = rand::seq::index::sample(&mut rng, triples.len(), MAX_CONSTRAINTS);
        let mut subset: Vec<usize> = picked.into_iter().collect();
        subset.sort_unstable();
        triples = subset.into_iter().map(|i| triples[i]).collect();
    }
    triples
}

/// HSIC dependence between meme-scaled task similarities and route labels:
/// `tr(H K H Y)` with `K = X^T M X` and the centering matrix
/// `H = I - (1/n) 1 1^T`.
pub fn hsic_score(x: &TaskFeatureMatrix, meme: &Meme, y: &LabelMatrix) -> f64 {
    hsic_compressor(x, y).dot(meme.matrix())
}

/// The `p x p` matrix `X H Y H X^T`. Its Frobenius product with `M` equals
/// the HSIC score, which makes scoring a whole meme pool against one label
/// matrix cheap.
pub fn hsic_compressor(x: &TaskFeatureMatrix, y: &LabelMatrix) -> DMatrix<f64> {
    let n = x.len();
    let xm = x.matrix();
    let ym = y.matrix();
    // H Y H without materializing H.
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| ym.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| ym.column(j).sum() / nf).collect();
    let grand = ym.sum() / (nf * nf);
    let centered = DMatrix::from_fn(n, n, |i, j| ym[(i, j)] - row_means[i] - col_means[j] + grand);
    xm * centered * xm.transpose()
}

/// Signed margin of one order constraint under meme `M`:
/// `d_M(v_i, v_j)^2 - d_M(v_i, v_q)^2`. Positive means satisfied.
pub fn constraint_margin(x: &TaskFeatureMatrix, meme: &Meme, triple: &ConstraintTriple) -> f64 {
    let vi = x.column(triple.i);
    let vj = x.column(triple.j);
    let vq = x.column(triple.q);
    meme.squared_distance(&vi, &vj) - meme.squared_distance(&vi, &vq)
}

/// The penalized meme-learning problem over `{M >= 0, tr(M) = p}`.
///
/// Minimizes `J(M) = -tr(X H Y H X^T M) + (C/2) sum_t max(0, -margin_t(M))^2`
/// by projected gradient descent with a backtracking line search; the
/// projection clips negative eigenvalues and rescales the trace back to `p`.
///
/// Features are rescaled to unit RMS spread internally, so the penalty
/// weight balances the two terms the same way on every data scale. The
/// optimal `M` is unchanged: signs of constraint margins and the HSIC
/// ranking are invariant under isotropic feature scaling.
pub struct MemeLearner {
    /// `X H Y H X^T` on the rescaled features: the linear objective part.
    compressor: DMatrix<f64>,
    /// Per-constraint difference matrices `(vi-vj)(vi-vj)^T - (vi-vq)(vi-vq)^T`
    /// on the rescaled features; their Frobenius product with `M` is the
    /// constraint margin.
    margins: Vec<DMatrix<f64>>,
    penalty: f64,
    p: usize,
}

impl MemeLearner {
    pub fn new(
        x: &TaskFeatureMatrix,
        y: &LabelMatrix,
        constraints: &[ConstraintTriple],
        params: &LearnParams,
    ) -> Result<MemeLearner> {
        let n = x.len();
        if y.len() != n {
            return Err(Error::Dimension(format!(
                "labels cover {} tasks, features cover {}",
                y.len(),
                n
            )));
        }
        for t in constraints {
            if t.i >= n || t.j >= n || t.q >= n {
                return Err(Error::Dimension(format!(
                    "constraint ({}, {}, {}) references an unknown task",
                    t.i, t.j, t.q
                )));
            }
        }
        let x = normalize_spread(x)?;
        let margins = constraints
            .iter()
            .map(|t| difference_outer(&x, t))
            .collect();
        Ok(MemeLearner {
            compressor: hsic_compressor(&x, y),
            margins,
            penalty: params.penalty,
            p: x.dim(),
        })
    }

    /// The internal (rescaled-feature) compressor matrix; analytic optima of
    /// the unconstrained problem derive from its spectrum.
    pub fn compressor(&self) -> &DMatrix<f64> {
        &self.compressor
    }

    /// Objective value at an arbitrary matrix (used by gradient checks too,
    /// so it must not assume symmetry or feasibility).
    pub fn objective(&self, m: &DMatrix<f64>) -> f64 {
        let mut value = -self.compressor.dot(m);
        for e in &self.margins {
            let violation = (-e.dot(m)).max(0.0);
            value += 0.5 * self.penalty * violation * violation;
        }
        value
    }

    /// Entrywise gradient of [`Self::objective`].
    pub fn gradient(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut grad = -self.compressor.clone();
        for e in &self.margins {
            let violation = (-e.dot(m)).max(0.0);
            if violation > 0.0 {
                grad += e * (-self.penalty * violation);
            }
        }
        grad
    }

    /// Runs projected gradient descent from the identity. Returns the final
    /// matrix and the per-iteration objective values (nonincreasing by
    /// construction).
    pub fn solve(&self, params: &LearnParams) -> (DMatrix<f64>, Vec<f64>) {
        let mut m = DMatrix::<f64>::identity(self.p, self.p);
        let mut value = self.objective(&m);
        let mut history = vec![value];

        for _ in 0..params.max_iterations {
            let grad = self.gradient(&m);
            let mut step = params.step_size;
            let mut accepted = None;
            while step > 1e-14 {
                let candidate = project_psd_trace(&(&m - &grad * step), self.p as f64);
                let cand_value = self.objective(&candidate);
                let travel = (&candidate - &m).norm_squared();
                if cand_value <= value - 1e-4 / step.max(1e-12) * travel && cand_value <= value {
                    accepted = Some((candidate, cand_value));
                    break;
                }
                step *= 0.5;
            }
            let Some((candidate, cand_value)) = accepted else {
                break; // no descent step found: stationary
            };
            let rel_change = (value - cand_value).abs() / value.abs().max(1.0);
            m = candidate;
            value = cand_value;
            history.push(value);
            if rel_change < params.tolerance {
                break;
            }
        }
        (m, history)
    }
}

/// Learns a meme from a featurized instance, its solution labels and the
/// derived order constraints.
pub fn learn_meme(
    x: &TaskFeatureMatrix,
    y: &LabelMatrix,
    constraints: &[ConstraintTriple],
    params: &LearnParams,
    source_name: &str,
    source_capacity: f64,
) -> Result<Meme> {
    if x.len() < 2 {
        return Err(Error::Dimension(
            "meme learning needs at least two tasks".into(),
        ));
    }
    let learner = MemeLearner::new(x, y, constraints, params)?;
    let (matrix, _) = learner.solve(params);
    Meme::new(matrix, source_name, x.mean(), source_capacity)
}

/// Rescales columns to unit RMS distance from their mean.
fn normalize_spread(x: &TaskFeatureMatrix) -> Result<TaskFeatureMatrix> {
    let n = x.len();
    let mean = x.mean();
    let mut acc = 0.0;
    for i in 0..n {
        acc += x
            .column(i)
            .iter()
            .zip(&mean)
            .map(|(v, m)| (v - m) * (v - m))
            .sum::<f64>();
    }
    let rms = (acc / n.max(1) as f64).sqrt();
    if rms <= 1e-12 {
        return Ok(x.clone());
    }
    TaskFeatureMatrix::new(x.matrix() / rms)
}

/// `(vi-vj)(vi-vj)^T - (vi-vq)(vi-vq)^T` for a constraint triple; equals
/// `X (T_ij - T_iq) X^T` in indicator-matrix form.
fn difference_outer(x: &TaskFeatureMatrix, t: &ConstraintTriple) -> DMatrix<f64> {
    let xm = x.matrix();
    let dij = xm.column(t.i) - xm.column(t.j);
    let diq = xm.column(t.i) - xm.column(t.q);
    &dij * dij.transpose() - &diq * diq.transpose()
}

/// Projection used between gradient steps: symmetrize, clip negative
/// eigenvalues, rescale the trace to `target`. A fully clipped matrix falls
/// back to the scaled identity.
pub(crate) fn project_psd_trace(m: &DMatrix<f64>, target: f64) -> DMatrix<f64> {
    let p = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 1e-12 {
        return DMatrix::identity(p, p) * (target / p as f64);
    }
    let scale = target / total;
    let mut out = DMatrix::zeros(p, p);
    for (c, &lambda) in clipped.iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let col = eig.eigenvectors.column(c);
        out += (col * col.transpose()) * (lambda * scale);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meme::tests::random_trace_normalized_meme;
    use crate::routing::{Route, Solution};
    use nalgebra::dmatrix;

    fn features(cols: &[[f64; 2]]) -> TaskFeatureMatrix {
        let data = DMatrix::from_fn(2, cols.len(), |r, c| cols[c][r]);
        TaskFeatureMatrix::new(data).unwrap()
    }

    fn random_features(p: usize, n: usize, rng: &mut ChaCha8Rng) -> TaskFeatureMatrix {
        let data = DMatrix::from_fn(p, n, |_, _| rng.gen_range(-2.0..2.0));
        TaskFeatureMatrix::new(data).unwrap()
    }

    fn random_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> LabelMatrix {
        let assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        LabelMatrix::from_assignment(&assignment)
    }

    fn route_solution(groups: &[&[usize]]) -> Solution {
        Solution {
            routes: groups
                .iter()
                .map(|g| Route {
                    task_ids: g.to_vec(),
                    orientations: vec![false; g.len()],
                    load: 0.0,
                })
                .collect(),
            total_cost: 0.0,
            feasible: true,
        }
    }

    #[test]
    fn three_task_route_emits_one_triple() {
        let sol = route_solution(&[&[0, 1, 2]]);
        assert_eq!(
            extract_constraints(&sol),
            vec![ConstraintTriple { i: 0, j: 2, q: 1 }]
        );
    }

    #[test]
    fn short_routes_emit_nothing() {
        let sol = route_solution(&[&[0, 1], &[2]]);
        assert!(extract_constraints(&sol).is_empty());
    }

    #[test]
    fn five_task_route_emits_three_triples() {
        let sol = route_solution(&[&[4, 0, 3, 1, 2]]);
        let triples = extract_constraints(&sol);
        assert_eq!(triples.len(), 3);
        assert!(triples.iter().all(|t| t.i == 4));
    }

    #[test]
    fn oversized_constraint_sets_are_subsampled_deterministically() {
        let ids: Vec<usize> = (0..6000).collect();
        let sol = route_solution(&[&ids]);
        let a = extract_constraints(&sol);
        let b = extract_constraints(&sol);
        assert_eq!(a.len(), 5000);
        assert_eq!(a, b);
    }

    #[test]
    fn constant_labels_score_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_features(2, 6, &mut rng);
        let y = LabelMatrix::from_assignment(&[0; 6]);
        let m = random_trace_normalized_meme(2, &mut rng);
        assert!(hsic_score(&x, &m, &y).abs() < 1e-9);
    }

    #[test]
    fn zero_meme_scores_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_features(2, 5, &mut rng);
        let y = random_labels(5, 2, &mut rng);
        let zero = Meme {
            matrix: DMatrix::zeros(2, 2),
            source_name: "zero".into(),
            source_task_mean: vec![0.0; 2],
            source_capacity: 0.0,
        };
        assert_eq!(hsic_score(&x, &zero, &y), 0.0);
    }

    #[test]
    fn matches_naive_quadruple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 5;
            let x = random_features(2, n, &mut rng);
            let y = random_labels(n, 3, &mut rng);
            let m = random_trace_normalized_meme(2, &mut rng);

            // Naive oracle: K = X^T M X, H = I - 1/n, tr(H K H Y) elementwise.
            let xm = x.matrix();
            let k = xm.transpose() * m.matrix() * xm;
            let h = DMatrix::from_fn(n, n, |i, j| {
                (if i == j { 1.0 } else { 0.0 }) - 1.0 / n as f64
            });
            let mut naive = 0.0;
            for i in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        for j in 0..n {
                            naive += h[(i, a)] * k[(a, b)] * h[(b, j)] * y.get(j, i);
                        }
                    }
                }
            }
            assert!((hsic_score(&x, &m, &y) - naive).abs() < 1e-8);
        }
    }

    #[test]
    fn hsic_is_linear_in_the_meme_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = random_features(2, 6, &mut rng);
            let y = random_labels(6, 2, &mut rng);
            let m1 = random_trace_normalized_meme(2, &mut rng);
            let m2 = random_trace_normalized_meme(2, &mut rng);
            let (a, b) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let combined = Meme {
                matrix: m1.matrix() * a + m2.matrix() * b,
                source_name: "mix".into(),
                source_task_mean: vec![0.0; 2],
                source_capacity: 0.0,
            };
            let lhs = hsic_score(&x, &combined, &y);
            let rhs = a * hsic_score(&x, &m1, &y) + b * hsic_score(&x, &m2, &y);
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn collinear_margin_example() {
        // Points i at 0, q at 1, j at 2 on a line, identity meme.
        let x = features(&[[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]]);
        let id = Meme::identity(2);
        let sat = ConstraintTriple { i: 0, j: 1, q: 2 };
        assert_eq!(constraint_margin(&x, &id, &sat), 3.0);
        let violated = ConstraintTriple { i: 0, j: 2, q: 1 };
        assert_eq!(constraint_margin(&x, &id, &violated), -3.0);
    }

    #[test]
    fn margin_matches_quadratic_form_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let x = random_features(2, 6, &mut rng);
            let m = random_trace_normalized_meme(2, &mut rng);
            let t = ConstraintTriple { i: 0, j: 3, q: 5 };
            let vi = nalgebra::DVector::from_vec(x.column(t.i));
            let vj = nalgebra::DVector::from_vec(x.column(t.j));
            let vq = nalgebra::DVector::from_vec(x.column(t.q));
            let oracle = ((&vi - &vj).transpose() * m.matrix() * (&vi - &vj))[(0, 0)]
                - ((&vi - &vq).transpose() * m.matrix() * (&vi - &vq))[(0, 0)];
            assert!((constraint_margin(&x, &m, &t) - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn unconstrained_learning_reaches_the_rank_one_optimum() {
        // Two separated groups along the first axis; Y matches them. The
        // linear objective over the trace-capped PSD cone is minimized by
        // p * u1 u1^T where u1 is the top eigenvector of the compressor.
        let x = features(&[
            [-3.0, 0.1],
            [-3.1, -0.2],
            [-2.9, 0.0],
            [3.0, 0.2],
            [3.2, -0.1],
            [2.8, 0.0],
        ]);
        let y = LabelMatrix::from_assignment(&[0, 0, 0, 1, 1, 1]);
        let params = LearnParams {
            max_iterations: 5000,
            tolerance: 1e-14,
            ..LearnParams::default()
        };
        let learner = MemeLearner::new(&x, &y, &[], &params).unwrap();
        let (m, history) = learner.solve(&params);

        let eig = learner.compressor().clone().symmetric_eigen();
        let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let analytic_optimum = -2.0 * lambda_max;
        let achieved = learner.objective(&m);
        assert!(
            (achieved - analytic_optimum).abs() <= 1e-6 * analytic_optimum.abs().max(1.0),
            "achieved {} vs analytic {}",
            achieved,
            analytic_optimum
        );
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn constant_labels_make_the_linear_term_vanish() {
        // A single route labels everything together; centering kills the
        // compressor, so the objective is flat and any feasible M is optimal.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_features(2, 5, &mut rng);
        let y = LabelMatrix::from_assignment(&[0; 5]);
        let meme = learn_meme(&x, &y, &[], &LearnParams::default(), "flat", 1.0).unwrap();
        assert!((meme.matrix().trace() - 2.0).abs() < 1e-6);
        let learner = MemeLearner::new(&x, &y, &[], &LearnParams::default()).unwrap();
        assert!(learner.objective(meme.matrix()).abs() < 1e-9);
    }

    #[test]
    fn clustered_data_scores_at_least_the_identity() {
        let x = features(&[
            [-4.0, 0.0],
            [-4.2, 0.4],
            [4.1, -0.3],
            [4.0, 0.2],
        ]);
        let y = LabelMatrix::from_assignment(&[0, 0, 1, 1]);
        let meme = learn_meme(&x, &y, &[], &LearnParams::default(), "two", 1.0).unwrap();
        assert!(hsic_score(&x, &meme, &y) >= hsic_score(&x, &Meme::identity(2), &y) - 1e-9);
    }

    #[test]
    fn learning_repairs_a_violated_toy_constraint() {
        // Identity metric puts j closer than q even though the route served
        // q first; learning must satisfy at least as many constraints.
        let x = features(&[[0.0, 0.0], [0.4, 1.0], [2.0, -1.0]]);
        let y = LabelMatrix::from_assignment(&[0, 0, 0]);
        let triples = vec![ConstraintTriple { i: 0, j: 1, q: 2 }];
        let id = Meme::identity(2);
        let before = triples
            .iter()
            .filter(|t| constraint_margin(&x, &id, t) > 0.0)
            .count();
        assert_eq!(before, 0);
        let learned = learn_meme(&x, &y, &triples, &LearnParams::default(), "toy", 1.0).unwrap();
        let after = triples
            .iter()
            .filter(|t| constraint_margin(&x, &learned, t) > 0.0)
            .count();
        assert!(after >= before);
        assert!(after == 1, "penalty should repair the single constraint");
    }

    #[test]
    fn learned_objective_never_exceeds_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(4..10);
            let x = random_features(2, n, &mut rng);
            let y = random_labels(n, 3, &mut rng);
            let triples: Vec<ConstraintTriple> = (0..rng.gen_range(0..6))
                .map(|_| loop {
                    let i = rng.gen_range(0..n);
                    let j = rng.gen_range(0..n);
                    let q = rng.gen_range(0..n);
                    if i != j && j != q && i != q {
                        break ConstraintTriple { i, j, q };
                    }
                })
                .collect();
            let params = LearnParams::default();
            let learner = MemeLearner::new(&x, &y, &triples, &params).unwrap();
            let (m, history) = learner.solve(&params);
            let identity = DMatrix::<f64>::identity(2, 2);
            assert!(learner.objective(&m) <= learner.objective(&identity) + 1e-9);
            for w in history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 20 {
            let n = 6;
            let x = random_features(3, n, &mut rng);
            let y = random_labels(n, 2, &mut rng);
            let triples = vec![
                ConstraintTriple { i: 0, j: 1, q: 2 },
                ConstraintTriple { i: 3, j: 4, q: 5 },
            ];
            let params = LearnParams::default();
            let learner = MemeLearner::new(&x, &y, &triples, &params).unwrap();
            let point = crate::meme::tests::random_psd(3, &mut rng);
            // Stay clear of hinge kinks where the objective is not smooth.
            let near_kink = triples.iter().any(|t| {
                let meme = Meme {
                    matrix: point.clone(),
                    source_name: String::new(),
                    source_task_mean: vec![0.0; 3],
                    source_capacity: 0.0,
                };
                constraint_margin(&x, &meme, t).abs() < 1e-3
            });
            if near_kink {
                continue;
            }
            checked += 1;
            let grad = learner.gradient(&point);
            let h = 1e-5;
            for r in 0..3 {
                for c in 0..3 {
                    let mut plus = point.clone();
                    let mut minus = point.clone();
                    plus[(r, c)] += h;
                    minus[(r, c)] -= h;
                    let fd = (learner.objective(&plus) - learner.objective(&minus)) / (2.0 * h);
                    let denom = fd.abs().max(grad[(r, c)].abs()).max(1.0);
                    assert!(
                        (grad[(r, c)] - fd).abs() / denom < 1e-4,
                        "entry ({}, {}): analytic {} vs fd {}",
                        r,
                        c,
                        grad[(r, c)],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn learner_rejects_nonfinite_features() {
        let data = dmatrix![1.0, 2.0; 3.0, 4.0];
        let x = TaskFeatureMatrix::new(data).unwrap();
        // NonFinite is rejected at construction time of the feature matrix.
        assert!(TaskFeatureMatrix::new(dmatrix![f64::NAN, 0.0; 0.0, 0.0]).is_err());
        // And mismatched label sizes are rejected by the learner.
        let y = LabelMatrix::from_assignment(&[0, 1, 0]);
        assert!(MemeLearner::new(&x, &y, &[], &LearnParams::default()).is_err());
    }
}
