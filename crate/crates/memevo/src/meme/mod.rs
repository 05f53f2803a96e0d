//! Meme learning: distilling a solved instance into a transferable
//! positive-semidefinite task-space transformation.

mod learn;

pub use learn::{
    constraint_margin, extract_constraints, hsic_compressor, hsic_score, learn_meme, MemeLearner,
};

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A learned meme: a `p x p` positive-semidefinite matrix `M` with
/// `trace(M) = p`, plus metadata about the instance it was learned from.
///
/// `M` defines the task-space metric `d_M(u, v) = sqrt((u-v)^T M (u-v))`;
/// its factor `L` (see [`factorize`]) maps task features into the space
/// where that metric is plain Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Meme {
    matrix: DMatrix<f64>,
    pub source_name: String,
    /// Mean task feature vector of the source instance.
    pub source_task_mean: Vec<f64>,
    pub source_capacity: f64,
}

impl Meme {
    /// Wraps a learned matrix, checking the PSD and trace invariants.
    pub fn new(
        matrix: DMatrix<f64>,
        source_name: impl Into<String>,
        source_task_mean: Vec<f64>,
        source_capacity: f64,
    ) -> Result<Meme> {
        let p = matrix.nrows();
        if matrix.ncols() != p {
            return Err(Error::Dimension("meme matrix must be square".into()));
        }
        if source_task_mean.len() != p {
            return Err(Error::Dimension(
                "task mean length must match meme dimension".into(),
            ));
        }
        for i in 0..p {
            for j in 0..p {
                if !matrix[(i, j)].is_finite() {
                    return Err(Error::NonFinite("meme matrix".into()));
                }
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-9 {
                    return Err(Error::Dimension("meme matrix must be symmetric".into()));
                }
            }
        }
        let eig = matrix.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-9) {
            return Err(Error::Dimension(
                "meme matrix must be positive semidefinite".into(),
            ));
        }
        if (matrix.trace() - p as f64).abs() > 1e-6 {
            return Err(Error::Dimension(format!(
                "meme trace {} differs from dimension {}",
                matrix.trace(),
                p
            )));
        }
        Ok(Meme {
            matrix,
            source_name: source_name.into(),
            source_task_mean,
            source_capacity,
        })
    }

    /// The identity meme for dimension `p`; trace is exactly `p`.
    pub fn identity(p: usize) -> Meme {
        Meme {
            matrix: DMatrix::identity(p, p),
            source_name: "identity".into(),
            source_task_mean: vec![0.0; p],
            source_capacity: 0.0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Squared meme-induced distance between two feature vectors.
    pub fn squared_distance(&self, u: &[f64], v: &[f64]) -> f64 {
        let p = self.dim();
        let mut acc = 0.0;
        for i in 0..p {
            for j in 0..p {
                acc += (u[i] - v[i]) * self.matrix[(i, j)] * (u[j] - v[j]);
            }
        }
        acc
    }
}

/// Factor `L` with `L L^T = M`, from the symmetric eigendecomposition
/// `M = U diag(lambda) U^T` as `L = U diag(sqrt(lambda))`, clipping negative
/// eigenvalues at zero. Diagonal matrices factor exactly, so the identity
/// meme yields the identity factor.
pub fn factorize(meme: &Meme) -> DMatrix<f64> {
    let m = meme.matrix();
    let p = m.nrows();
    let diagonal = (0..p).all(|i| (0..p).all(|j| i == j || m[(i, j)] == 0.0));
    if diagonal {
        return DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                m[(i, i)].max(0.0).sqrt()
            } else {
                0.0
            }
        });
    }
    let eig = m.clone().symmetric_eigen();
    let mut l = eig.eigenvectors;
    for (c, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for r in 0..p {
            l[(r, c)] *= s;
        }
    }
    l
}

/// One service-order distance constraint: serving from task `i`, task `q`
/// came before task `j`, so `d(i, j) > d(i, q)` must hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTriple {
    pub i: usize,
    pub j: usize,
    pub q: usize,
}

/// Parameters of the meme learning solver.
#[derive(Debug, Clone)]
pub struct LearnParams {
    /// Weight of the squared constraint-violation penalty.
    pub penalty: f64,
    pub max_iterations: usize,
    /// Initial line-search step.
    pub step_size: f64,
    /// Relative objective change below which the solver stops.
    pub tolerance: f64,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            penalty: 10.0,
            max_iterations: 500,
            step_size: 1.0,
            tolerance: 1e-7,
        }
    }
}

// Pool records keep 17 significant digits so floats round-trip bit-exactly.
#[derive(Serialize, Deserialize)]
struct MemeRecord {
    source_name: String,
    p: usize,
    #[serde(serialize_with = "ser_f17", deserialize_with = "de_f64")]
    capacity: f64,
    #[serde(serialize_with = "ser_vec_f17", deserialize_with = "de_vec_f64")]
    task_mean: Vec<f64>,
    #[serde(serialize_with = "ser_vec_f17", deserialize_with = "de_vec_f64")]
    matrix: Vec<f64>,
}

fn raw_f17(v: f64) -> Box<serde_json::value::RawValue> {
    serde_json::value::RawValue::from_string(format!("{:.16e}", v))
        .expect("formatted float is valid JSON")
}

fn ser_f17<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    raw_f17(*v).serialize(s)
}

fn ser_vec_f17<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let raws: Vec<_> = v.iter().map(|&x| raw_f17(x)).collect();
    raws.serialize(s)
}

fn de_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    f64::deserialize(d)
}

fn de_vec_f64<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<f64>::deserialize(d)
}

impl Serialize for Meme {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let p = self.dim();
        let mut matrix = Vec::with_capacity(p * p);
        for r in 0..p {
            for c in 0..p {
                matrix.push(self.matrix[(r, c)]);
            }
        }
        MemeRecord {
            source_name: self.source_name.clone(),
            p,
            capacity: self.source_capacity,
            task_mean: self.source_task_mean.clone(),
            matrix,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Meme {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Meme, D::Error> {
        let rec = MemeRecord::deserialize(deserializer)?;
        if rec.matrix.len() != rec.p * rec.p {
            return Err(D::Error::custom(format!(
                "matrix has {} entries, expected {}",
                rec.matrix.len(),
                rec.p * rec.p
            )));
        }
        let matrix = DMatrix::from_fn(rec.p, rec.p, |r, c| rec.matrix[r * rec.p + c]);
        Meme::new(matrix, rec.source_name, rec.task_mean, rec.capacity)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}
