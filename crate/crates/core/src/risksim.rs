//! Monte Carlo Bayes risks of plug-in spectral estimators.
//!
//! Each replicate draws `U` from the Haar measure, simulates data from the
//! model at `U`, applies the top-`d` spectral projector of the data and
//! records the loss. Replicate `r` uses the random stream `(seed, r)`, and
//! partial results are combined in replicate order, so an estimate depends
//! only on the configuration and never on the number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{best_delta, denoise_lower_bound, excess_lower_bound, hs_lower_bound, Mu};
use crate::equivariance::{excess_risk, projector_leq_d, weighted_loss, Projector, WeightMatrix};
use crate::error::{invalid, Error, Result};
use crate::linalg::{sym_eig, Matrix, OrthMatrix, SymMatrix};
use crate::models::{
    empirical_cov, haar_orthogonal, sample_cov, sample_denoise, CovModel, DenoiseModel, RngStream, Spectrum,
};

/// Smallest eigenvalue gap at which a spectral projector is accepted.
pub const MIN_GAP: f64 = 1e-12;

/// How many times a replicate with a degenerate gap is redrawn.
pub const MAX_RESAMPLES: u64 = 16;

/// Top-`d` spectral projector of a symmetric matrix.
pub fn spectral_projector(a: &SymMatrix, d: usize) -> Result<Projector> {
    let p = a.dim();
    if d == 0 || d > p {
        return invalid(format!("rank d = {d} outside 1..={p}"));
    }
    let eig = sym_eig(a)?;
    if d < p {
        let gap = eig.values[d - 1] - eig.values[d];
        if gap < MIN_GAP {
            return Err(Error::DegenerateGap { gap });
        }
    }
    projector_leq_d(&eig.vectors, d)
}

/// Empirical PCA: the top-`d` projector of `n⁻¹ XᵀX`.
pub fn pca_estimator(data: &Matrix, d: usize) -> Result<Projector> {
    spectral_projector(&empirical_cov(data)?, d)
}

/// Top-`d` spectral projector of the observed matrix.
pub fn denoise_estimator(x: &SymMatrix, d: usize) -> Result<Projector> {
    spectral_projector(x, d)
}

/// Loss whose Bayes risk is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// `‖P̂ − P_{≤d}(U)‖₂²`.
    Hs,
    /// Excess reconstruction risk (covariance model only).
    Excess,
}

impl Loss {
    pub fn name(&self) -> &'static str {
        match self {
            Loss::Hs => "hs",
            Loss::Excess => "excess",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SimModel {
    Cov(CovModel),
    Denoise(DenoiseModel),
}

impl SimModel {
    pub fn spectrum(&self) -> &Spectrum {
        match self {
            SimModel::Cov(m) => m.spectrum(),
            SimModel::Denoise(m) => m.spectrum(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimModel::Cov(_) => "cov",
            SimModel::Denoise(_) => "denoise",
        }
    }

    /// `n` for the covariance model, `σ` for denoising.
    pub fn size_label(&self) -> String {
        match self {
            SimModel::Cov(m) => m.n().to_string(),
            SimModel::Denoise(m) => m.sigma().to_string(),
        }
    }
}

/// Configuration of a Bayes-risk simulation.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub model: SimModel,
    pub loss: Loss,
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads; `0` lets the thread pool decide.
    pub workers: usize,
    /// Rotate every data set by this fixed `V` (and the truth to `VU`).
    pub rotation: Option<OrthMatrix>,
}

impl SimConfig {
    pub fn new(model: SimModel, loss: Loss, replicates: usize, seed: u64) -> Self {
        Self {
            model,
            loss,
            replicates,
            seed,
            workers: 0,
            rotation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return invalid("replicates must be at least 1");
        }
        if matches!((&self.model, self.loss), (SimModel::Denoise(_), Loss::Excess)) {
            return invalid("the excess loss is defined for the covariance model only");
        }
        if self.loss == Loss::Excess && self.model.spectrum().d() == self.model.spectrum().p() {
            return invalid("the excess loss needs d < p");
        }
        if let Some(v) = &self.rotation {
            if v.dim() != self.model.spectrum().p() {
                return invalid("rotation dimension does not match the model");
            }
        }
        Ok(())
    }
}

/// Monte Carlo estimate of a Bayes risk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub loss: Loss,
    pub mean: f64,
    /// Sample standard deviation over `√replicates`.
    pub std_error: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Replicates redrawn because of a degenerate eigenvalue gap.
    pub resampled: u64,
}

fn conjugate(v: &OrthMatrix, a: &SymMatrix) -> SymMatrix {
    a.congruence(v.as_matrix())
}

fn one_replicate(config: &SimConfig, rng: &mut impl Rng) -> Result<f64> {
    let spectrum = config.model.spectrum();
    let d = spectrum.d();
    let mut u = haar_orthogonal(spectrum.p(), rng);
    let p_hat = match &config.model {
        SimModel::Cov(m) => {
            let mut data = sample_cov(m, &u, rng)?;
            if let Some(v) = &config.rotation {
                data = &data * &v.as_matrix().transpose();
            }
            pca_estimator(&data, d)?
        }
        SimModel::Denoise(m) => {
            let mut x = sample_denoise(m, &u, rng)?;
            if let Some(v) = &config.rotation {
                x = conjugate(v, &x);
            }
            denoise_estimator(&x, d)?
        }
    };
    if let Some(v) = &config.rotation {
        u = v.compose(&u);
    }
    match config.loss {
        Loss::Hs => weighted_loss(&u, p_hat.as_matrix(), d, &WeightMatrix::ones(spectrum.p())),
        Loss::Excess => excess_risk(spectrum, &u, &p_hat),
    }
}

/// Replicate `r`, redrawn on fresh streams while the gap is degenerate.
fn replicate(config: &SimConfig, r: u64) -> Result<(f64, u64)> {
    for attempt in 0..=MAX_RESAMPLES {
        let mut rng = RngStream::new(config.seed, (attempt << 40) | r).rng();
        match one_replicate(config, &mut rng) {
            Ok(loss) => return Ok((loss, attempt)),
            Err(Error::DegenerateGap { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateGap { gap: 0.0 })
}

/// Estimates the Bayes risk of the plug-in estimator under `config`.
pub fn bayes_risk(config: &SimConfig) -> Result<RiskEstimate> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    let results: Vec<Result<(f64, u64)>> = pool.install(|| {
        (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| replicate(config, r))
            .collect()
    });
    let mut losses = Vec::with_capacity(config.replicates);
    let mut resampled = 0;
    for res in results {
        let (loss, extra) = res?;
        losses.push(loss);
        resampled += extra;
    }
    let (mean, std_error) = mean_and_se(&losses);
    Ok(RiskEstimate {
        loss: config.loss,
        mean,
        std_error,
        replicates: config.replicates,
        seed: config.seed,
        resampled,
    })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The strongest lower bound the crate computes for `model` under `loss`:
/// best `δ` for the Hilbert–Schmidt and denoising bounds, best `μ` for the
/// excess bound.
pub fn matching_bound(model: &SimModel, loss: Loss) -> Result<f64> {
    match (model, loss) {
        (SimModel::Cov(m), Loss::Hs) => Ok(best_delta(|delta| hs_lower_bound(m, delta))?.value),
        (SimModel::Cov(m), Loss::Excess) => Ok(excess_lower_bound(m, Mu::Auto)?.value),
        (SimModel::Denoise(m), Loss::Hs) => Ok(best_delta(|delta| denoise_lower_bound(m, delta))?.value),
        (SimModel::Denoise(_), Loss::Excess) => invalid("the excess loss is defined for the covariance model only"),
    }
}

/// One line of simulation output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub model: &'static str,
    pub p: usize,
    pub d: usize,
    pub n_or_sigma: String,
    pub loss: &'static str,
    pub mean: f64,
    pub se: f64,
    pub replicates: usize,
    pub seed: u64,
    pub bound: f64,
    pub margin_sigmas: f64,
}

/// Column order of [`CsvRow`].
pub const CSV_COLUMNS: [&str; 11] = [
    "model",
    "p",
    "d",
    "n_or_sigma",
    "loss",
    "mean",
    "se",
    "replicates",
    "seed",
    "bound",
    "margin_sigmas",
];

impl CsvRow {
    pub fn new(model: &SimModel, estimate: &RiskEstimate, bound: f64) -> Self {
        let s = model.spectrum();
        Self {
            model: model.name(),
            p: s.p(),
            d: s.d(),
            n_or_sigma: model.size_label(),
            loss: estimate.loss.name(),
            mean: estimate.mean,
            se: estimate.std_error,
            replicates: estimate.replicates,
            seed: estimate.seed,
            bound,
            margin_sigmas: (estimate.mean - bound) / estimate.std_error,
        }
    }

    /// Whether the estimate falls more than three standard errors short of
    /// the bound.
    pub fn violates(&self) -> bool {
        self.mean + 3.0 * self.se < self.bound
    }
}

/// Sample moments of `n⟨u_i, û_j⟩²` at `U = I`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub i: usize,
    pub j: usize,
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `λ_iλ_j/(λ_i − λ_j)²`.
    pub expected: f64,
    pub z_score: f64,
    /// `|mean − expected| ≤ 5·SE`.
    pub pass: bool,
}

/// Simulates `n⟨e_i, û_j⟩²` where `û_j` is the `j`-th empirical eigenvector,
/// for `i < d ≤ j`, and compares its mean with `λ_iλ_j/(λ_i − λ_j)²`.
pub fn overlap_clt<R: Rng + ?Sized>(
    model: &CovModel,
    i: usize,
    j: usize,
    replicates: usize,
    rng: &mut R,
) -> Result<OverlapReport> {
    let s = model.spectrum();
    let (lam, d, p) = (s.lambdas(), s.d(), s.p());
    if i == j {
        return invalid("overlap indices must differ");
    }
    if !(i < d && d <= j && j < p) {
        return invalid(format!("need i < d ≤ j < p, got i = {i}, j = {j}, d = {d}, p = {p}"));
    }
    if lam[i] == lam[j] {
        return invalid("overlap needs λ_i ≠ λ_j");
    }
    if replicates < 2 {
        return invalid("overlap needs at least two replicates");
    }
    let id = OrthMatrix::identity(p);
    let n = model.n() as f64;
    let mut values = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let data = sample_cov(model, &id, rng)?;
        let eig = sym_eig(&empirical_cov(&data)?)?;
        let overlap = eig.vectors[(i, j)];
        values.push(n * overlap * overlap);
    }
    let (mean, std_error) = mean_and_se(&values);
    let expected = lam[i] * lam[j] / (lam[i] - lam[j]).powi(2);
    let z_score = (mean - expected) / std_error;
    Ok(OverlapReport {
        i,
        j,
        n: model.n(),
        replicates,
        mean,
        std_error,
        expected,
        z_score,
        pass: z_score.abs() <= 5.0,
    })
}
