//! Gaussian discriminant classifiers.
//!
//! Five variants over per-class multivariate normal fits: linear (pooled
//! covariance), diaglinear (pooled diagonal), quadratic (per-class
//! covariance), diagquadratic (per-class diagonal), and a pure Mahalanobis
//! distance rule with per-class covariance. Covariances that fail a
//! Cholesky factorization are ridge-regularized with an escalating
//! epsilon before fitting gives up.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge escalation ladder, relative to the mean diagonal magnitude.
const RIDGE_LADDER: [f64; 5] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];

/// Model file schema version.
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscriminantType {
    Linear,
    DiagLinear,
    Quadratic,
    DiagQuadratic,
    Mahalanobis,
}

impl DiscriminantType {
    pub const ALL: [DiscriminantType; 5] = [
        DiscriminantType::Linear,
        DiscriminantType::Quadratic,
        DiscriminantType::DiagLinear,
        DiscriminantType::DiagQuadratic,
        DiscriminantType::Mahalanobis,
    ];

    /// Pooled covariance shared across classes, or one per class.
    pub fn pooled(self) -> bool {
        matches!(self, DiscriminantType::Linear | DiscriminantType::DiagLinear)
    }

    pub fn diagonal(self) -> bool {
        matches!(
            self,
            DiscriminantType::DiagLinear | DiscriminantType::DiagQuadratic
        )
    }

    /// Report row label and short form.
    pub fn label(self) -> &'static str {
        match self {
            DiscriminantType::Linear => "Linear (L)",
            DiscriminantType::DiagLinear => "DiagLinear (DL)",
            DiscriminantType::Quadratic => "Quadratic (Q)",
            DiscriminantType::DiagQuadratic => "DiagQuadratic (DQ)",
            DiscriminantType::Mahalanobis => "Mahalanobis (M)",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            DiscriminantType::Linear => "L",
            DiscriminantType::DiagLinear => "DL",
            DiscriminantType::Quadratic => "Q",
            DiscriminantType::DiagQuadratic => "DQ",
            DiscriminantType::Mahalanobis => "M",
        }
    }
}

impl fmt::Display for DiscriminantType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DiscriminantType::Linear => "linear",
            DiscriminantType::DiagLinear => "diaglinear",
            DiscriminantType::Quadratic => "quadratic",
            DiscriminantType::DiagQuadratic => "diagquadratic",
            DiscriminantType::Mahalanobis => "mahalanobis",
        };
        f.write_str(name)
    }
}

impl FromStr for DiscriminantType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "l" => Ok(DiscriminantType::Linear),
            "diaglinear" | "dl" => Ok(DiscriminantType::DiagLinear),
            "quadratic" | "q" => Ok(DiscriminantType::Quadratic),
            "diagquadratic" | "dq" => Ok(DiscriminantType::DiagQuadratic),
            "mahalanobis" | "m" => Ok(DiscriminantType::Mahalanobis),
            other => Err(Error::InvalidConfig(format!(
                "unknown discriminant type {other:?}; valid: linear (L), quadratic (Q), \
                 diaglinear (DL), diagquadratic (DQ), mahalanobis (M)"
            ))),
        }
    }
}

/// Feature matrix plus labels; one row per sample.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    samples: Vec<Vec<f64>>,
    labels: Vec<usize>,
    dim: usize,
}

impl TrainingSet {
    pub fn new(samples: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "sample count {} does not match label count {}",
                samples.len(),
                labels.len()
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidConfig("empty training set".into()));
        }
        let dim = samples[0].len();
        if dim == 0 || samples.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidConfig("ragged feature rows".into()));
        }
        Ok(TrainingSet {
            samples,
            labels,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// One covariance matrix with its cached Cholesky factor.
#[derive(Debug, Clone)]
struct FactoredCov {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl FactoredCov {
    fn from_matrix(matrix: DMatrix<f64>) -> Option<Self> {
        let chol = Cholesky::new(matrix.clone())?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Some(FactoredCov {
            matrix,
            chol,
            log_det,
        })
    }

    /// (x - mu)^T Sigma^-1 (x - mu) via the Cholesky factor.
    fn mahalanobis_sq(&self, diff: &DVector<f64>) -> f64 {
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(diff)
            .expect("factor is nonsingular");
        y.norm_squared()
    }
}

/// A fitted discriminant model: per-class means and priors plus pooled or
/// stratified covariance. Immutable after fit; safe to share across threads.
#[derive(Debug, Clone)]
pub struct DiscriminantModel {
    kind: DiscriminantType,
    classes: Vec<usize>,
    means: Vec<DVector<f64>>,
    covariances: Vec<FactoredCov>, // one if pooled, one per class otherwise
    priors: Vec<f64>,
    ridge: f64,
    dim: usize,
}

/// Regularize until Cholesky succeeds: add eps * trace/d to the diagonal,
/// escalating eps through the ladder.
fn factor_with_ridge(mut m: DMatrix<f64>, scope: &str) -> Result<(FactoredCov, f64)> {
    if let Some(f) = FactoredCov::from_matrix(m.clone()) {
        return Ok((f, 0.0));
    }
    let d = m.nrows();
    let trace: f64 = m.diagonal().iter().sum();
    if trace > 0.0 {
        for &eps in &RIDGE_LADDER {
            let bump = eps * trace / d as f64;
            let mut bumped = m.clone();
            for i in 0..d {
                bumped[(i, i)] += bump;
            }
            if let Some(f) = FactoredCov::from_matrix(bumped.clone()) {
                return Ok((f, eps));
            }
            m = bumped;
        }
    }
    Err(Error::DegenerateClass {
        scope: scope.to_string(),
    })
}

/// Estimates model parameters from a training set.
pub fn fit(train: &TrainingSet, kind: DiscriminantType) -> Result<DiscriminantModel> {
    let d = train.dim;
    let n = train.len();

    let mut classes: Vec<usize> = train.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    let k = classes.len();

    let need = if kind.pooled() { 2 } else { d + 1 };
    let cov_kind = if kind.pooled() { "pooled" } else { "stratified" };

    let mut means = Vec::with_capacity(k);
    let mut priors = Vec::with_capacity(k);
    let mut scatters = Vec::with_capacity(k); // (N_k - 1) * S_k
    let mut counts = Vec::with_capacity(k);

    for &class in &classes {
        let rows: Vec<&Vec<f64>> = train
            .samples
            .iter()
            .zip(&train.labels)
            .filter(|(_, &l)| l == class)
            .map(|(s, _)| s)
            .collect();
        let nk = rows.len();
        if nk < need {
            return Err(Error::InsufficientData {
                class,
                got: nk,
                need,
                kind: cov_kind,
            });
        }
        let mut mean = DVector::zeros(d);
        for row in &rows {
            for (i, &v) in row.iter().enumerate() {
                mean[i] += v;
            }
        }
        mean /= nk as f64;

        let mut scatter = DMatrix::zeros(d, d);
        for row in &rows {
            let diff = DVector::from_iterator(d, row.iter().copied()) - &mean;
            scatter += &diff * diff.transpose();
        }

        means.push(mean);
        priors.push(nk as f64 / n as f64);
        scatters.push(scatter);
        counts.push(nk);
    }

    let zero_offdiag = |mut m: DMatrix<f64>| -> DMatrix<f64> {
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    m[(i, j)] = 0.0;
                }
            }
        }
        m
    };

    let mut ridge_used = 0.0f64;
    let covariances = if kind.pooled() {
        let mut pooled = DMatrix::zeros(d, d);
        for s in &scatters {
            pooled += s;
        }
        pooled /= (n - k) as f64;
        if kind.diagonal() {
            pooled = zero_offdiag(pooled);
        }
        let (f, eps) = factor_with_ridge(pooled, "pooled covariance")?;
        ridge_used = eps;
        vec![f]
    } else {
        let mut out = Vec::with_capacity(k);
        for ((scatter, &nk), &class) in scatters.into_iter().zip(&counts).zip(&classes) {
            let mut cov = scatter / (nk - 1) as f64;
            if kind.diagonal() {
                cov = zero_offdiag(cov);
            }
            let (f, eps) = factor_with_ridge(cov, &format!("class {class}"))?;
            ridge_used = ridge_used.max(eps);
            out.push(f);
        }
        out
    };

    Ok(DiscriminantModel {
        kind,
        classes,
        means,
        covariances,
        priors,
        ridge: ridge_used,
        dim: d,
    })
}

impl DiscriminantModel {
    pub fn kind(&self) -> DiscriminantType {
        self.kind
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn mean(&self, class: usize) -> Option<&DVector<f64>> {
        let i = self.classes.iter().position(|&c| c == class)?;
        Some(&self.means[i])
    }

    /// The fitted (post-regularization) covariance used for `class`; the
    /// shared matrix for pooled types.
    pub fn covariance(&self, class: usize) -> Option<&DMatrix<f64>> {
        let i = self.classes.iter().position(|&c| c == class)?;
        if self.kind.pooled() {
            Some(&self.covariances[0].matrix)
        } else {
            Some(&self.covariances[i].matrix)
        }
    }

    fn class_index(&self, class: usize) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == class)
            .ok_or(Error::UnknownClass(class))
    }

    fn validate(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidConfig(format!(
                "sample has {} features, model expects {}",
                x.len(),
                self.dim
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample { index: i });
        }
        Ok(())
    }

    /// Discriminant score of `x` for class `k`. Higher is better. Linear
    /// types omit the class-independent -1/2 log|Sigma| term; the
    /// Mahalanobis type is the pure negative squared distance with no
    /// prior or determinant term.
    pub fn score(&self, x: &[f64], class: usize) -> Result<f64> {
        self.validate(x)?;
        let i = self.class_index(class)?;
        let xv = DVector::from_iterator(self.dim, x.iter().copied());
        let diff = xv - &self.means[i];
        let cov = if self.kind.pooled() {
            &self.covariances[0]
        } else {
            &self.covariances[i]
        };
        let d2 = cov.mahalanobis_sq(&diff);
        let score = match self.kind {
            DiscriminantType::Linear | DiscriminantType::DiagLinear => {
                -0.5 * d2 + self.priors[i].ln()
            }
            DiscriminantType::Quadratic | DiscriminantType::DiagQuadratic => {
                -0.5 * cov.log_det - 0.5 * d2 + self.priors[i].ln()
            }
            DiscriminantType::Mahalanobis => -d2,
        };
        Ok(score)
    }

    /// Highest-scoring class; exact ties go to the smallest class label.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        self.validate(x)?;
        let mut best: Option<(usize, f64)> = None;
        for &class in &self.classes {
            let s = self.score(x, class)?;
            match best {
                Some((_, bs)) if s <= bs => {}
                _ => best = Some((class, s)),
            }
        }
        Ok(best.expect("model has classes").0)
    }

    /// Elementwise classify; the first failing sample aborts with its index.
    pub fn classify_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<usize>> {
        xs.iter()
            .enumerate()
            .map(|(i, x)| {
                self.classify(x).map_err(|e| Error::Batch {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Writes the model as versioned JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile::from(self);
        let text = serde_json::to_string_pretty(&file).expect("model serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Model {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        file.into_model().map_err(|reason| Error::Model {
            path: path.to_path_buf(),
            reason,
        })
    }
}

/// On-disk model schema. Covariances are stored post-regularization so a
/// reload factors exactly the same matrices.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(rename = "type")]
    kind: DiscriminantType,
    classes: Vec<usize>,
    /// One row of `dim` values per class.
    means: Vec<Vec<f64>>,
    covariances: CovarianceFile,
    priors: Vec<f64>,
    ridge: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CovarianceFile {
    pooled: bool,
    /// Row-major `dim * dim` values, one matrix if pooled else one per class.
    matrices: Vec<Vec<f64>>,
}

impl From<&DiscriminantModel> for ModelFile {
    fn from(m: &DiscriminantModel) -> Self {
        ModelFile {
            version: MODEL_VERSION,
            kind: m.kind,
            classes: m.classes.clone(),
            means: m.means.iter().map(|v| v.iter().copied().collect()).collect(),
            covariances: CovarianceFile {
                pooled: m.kind.pooled(),
                matrices: m
                    .covariances
                    .iter()
                    .map(|c| {
                        // row-major
                        c.matrix.transpose().as_slice().to_vec()
                    })
                    .collect(),
            },
            priors: m.priors.clone(),
            ridge: m.ridge,
        }
    }
}

impl ModelFile {
    fn into_model(self) -> std::result::Result<DiscriminantModel, String> {
        if self.version != MODEL_VERSION {
            return Err(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                self.version
            ));
        }
        let k = self.classes.len();
        if k == 0 || self.means.len() != k || self.priors.len() != k {
            return Err("class, mean and prior counts do not match".into());
        }
        let dim = self.means[0].len();
        if dim == 0 || self.means.iter().any(|m| m.len() != dim) {
            return Err("ragged mean vectors".into());
        }
        if self.covariances.pooled != self.kind.pooled() {
            return Err("pooled flag does not match discriminant type".into());
        }
        let expect_mats = if self.covariances.pooled { 1 } else { k };
        if self.covariances.matrices.len() != expect_mats {
            return Err(format!(
                "expected {expect_mats} covariance matrices, found {}",
                self.covariances.matrices.len()
            ));
        }
        let prior_sum: f64 = self.priors.iter().sum();
        if self.priors.iter().any(|&p| p <= 0.0) || (prior_sum - 1.0).abs() > 1e-9 {
            return Err("priors must be positive and sum to 1".into());
        }
        let mut covariances = Vec::with_capacity(expect_mats);
        for raw in &self.covariances.matrices {
            if raw.len() != dim * dim {
                return Err("covariance matrix size mismatch".into());
            }
            let m = DMatrix::from_row_slice(dim, dim, raw);
            if m != m.transpose() {
                return Err("covariance matrix is not symmetric".into());
            }
            let f = FactoredCov::from_matrix(m)
                .ok_or_else(|| "covariance matrix is not positive definite".to_string())?;
            covariances.push(f);
        }
        let means = self
            .means
            .iter()
            .map(|m| DVector::from_iterator(dim, m.iter().copied()))
            .collect();
        Ok(DiscriminantModel {
            kind: self.kind,
            classes: self.classes,
            means,
            covariances,
            priors: self.priors,
            ridge: self.ridge,
            dim,
        })
    }
}
