//! Fisher information along orbit directions and Gaussian χ² divergences.
//!
//! For a skew direction `ξ`, the curve `t ↦ exp(tξ)` moves the model along
//! its `O(p)` orbit. The χ² divergence between the moved and the base model
//! behaves like `t² ℐ(ξ, ξ)` as `t → 0`; the quadratic forms `ℐ` are given in
//! closed form here, and [`verify_fisher_limit`] checks the limit
//! numerically using closed-form χ² divergences.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{skew_exp, sym_eig, Matrix, OrthMatrix, SkewMatrix, SymMatrix};
use crate::models::{CovModel, DenoiseModel, Spectrum};

/// Default `t` grid used by [`verify_fisher_limit`].
pub const DEFAULT_T_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Default relative tolerance of the limit check.
pub const DEFAULT_LIMIT_RTOL: f64 = 1e-3;

/// Absolute floor added to the tolerance so that directions with zero
/// information can pass.
pub const LIMIT_ATOL: f64 = 1e-6;

/// A model whose orbit directions carry a Fisher quadratic form.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FisherForm {
    Covariance(CovModel),
    Denoising(DenoiseModel),
}

impl FisherForm {
    pub fn spectrum(&self) -> &Spectrum {
        match self {
            FisherForm::Covariance(m) => m.spectrum(),
            FisherForm::Denoising(m) => m.spectrum(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FisherForm::Covariance(_) => "covariance",
            FisherForm::Denoising(_) => "denoising",
        }
    }

    /// `ℐ(ξ, ξ)`.
    pub fn eval(&self, xi: &SkewMatrix) -> Result<f64> {
        match self {
            FisherForm::Covariance(m) => fisher_cov(m, xi),
            FisherForm::Denoising(m) => fisher_denoise(m, xi),
        }
    }

    /// `ℐ(L^(ij), L^(ij))`, the inverse of the cap weight `a_ij`.
    pub fn generator_information(&self, i: usize, j: usize) -> Result<f64> {
        let lam = self.spectrum().lambdas();
        if i >= lam.len() || j >= lam.len() {
            return invalid(format!("generator index out of range for p = {}", lam.len()));
        }
        let gap = lam[i] - lam[j];
        Ok(match self {
            FisherForm::Covariance(m) => m.n() as f64 * gap * gap / (lam[i] * lam[j]),
            FisherForm::Denoising(m) => gap * gap / (m.sigma() * m.sigma()),
        })
    }

    /// χ² divergence between the model rotated by `u` and the base model.
    pub fn chi2(&self, u: &OrthMatrix) -> Result<f64> {
        match self {
            FisherForm::Covariance(m) => chi2_gauss_cov(m, u),
            FisherForm::Denoising(m) => chi2_gauss_meanshift(m, u),
        }
    }
}

fn check_dim(spectrum: &Spectrum, p: usize) -> Result<()> {
    if spectrum.p() != p {
        return invalid(format!("dimension {p} does not match spectrum of size {}", spectrum.p()));
    }
    Ok(())
}

/// `ℐ(ξ, ξ) = (n/2) Σ_ij ξ_ij² (λ_i − λ_j)² / (λ_i λ_j)`.
pub fn fisher_cov(model: &CovModel, xi: &SkewMatrix) -> Result<f64> {
    let lam = model.spectrum().lambdas();
    check_dim(model.spectrum(), xi.dim())?;
    let mut s = 0.0;
    for i in 0..lam.len() {
        for j in 0..lam.len() {
            let g = lam[i] - lam[j];
            s += xi[(i, j)].powi(2) * g * g / (lam[i] * lam[j]);
        }
    }
    Ok(0.5 * model.n() as f64 * s)
}

/// `ℐ(ξ, ξ) = (1/(2σ²)) Σ_ij ξ_ij² (λ_i − λ_j)²`.
pub fn fisher_denoise(model: &DenoiseModel, xi: &SkewMatrix) -> Result<f64> {
    let lam = model.spectrum().lambdas();
    check_dim(model.spectrum(), xi.dim())?;
    let mut s = 0.0;
    for i in 0..lam.len() {
        for j in 0..lam.len() {
            let g = lam[i] - lam[j];
            s += xi[(i, j)].powi(2) * g * g;
        }
    }
    Ok(s / (2.0 * model.sigma().powi(2)))
}

/// `E = U − I`, the displacement from the identity.
fn displacement(u: &OrthMatrix) -> Matrix {
    u.as_matrix() - &Matrix::identity(u.dim())
}

/// χ² between `N(0, UΛUᵀ)^{⊗n}` and `N(0, Λ)^{⊗n}`.
///
/// For one sample, `1 + χ² = det(2Λ^{1/2} U Λ⁻¹ Uᵀ Λ^{1/2} − I)^{-1/2}`,
/// finite only while that matrix is positive definite; otherwise the
/// divergence is `+∞`. The matrix minus the identity is formed from
/// `E = U − I` so that small rotations keep full relative accuracy, and the
/// product over samples is taken in the log domain.
pub fn chi2_gauss_cov(model: &CovModel, u: &OrthMatrix) -> Result<f64> {
    let lam = model.spectrum().lambdas();
    check_dim(model.spectrum(), u.dim())?;
    let p = lam.len();
    let e = displacement(u);
    // D = UΛ⁻¹Uᵀ − Λ⁻¹ = EΛ⁻¹Eᵀ + EΛ⁻¹ + Λ⁻¹Eᵀ
    let d = Matrix::from_fn(p, p, |a, b| {
        let quad: f64 = (0..p).map(|k| e[(a, k)] * e[(b, k)] / lam[k]).sum();
        quad + e[(a, b)] / lam[b] + e[(b, a)] / lam[a]
    });
    let x = SymMatrix::new(Matrix::from_fn(p, p, |a, b| {
        2.0 * (lam[a] * lam[b]).sqrt() * d[(a, b)]
    }))?;
    let eig = sym_eig(&x)?;
    if eig.values.iter().any(|&v| v <= -1.0) {
        return Ok(f64::INFINITY);
    }
    let log_one_plus: f64 = -0.5 * eig.values.iter().map(|v| v.ln_1p()).sum::<f64>();
    let chi2 = (model.n() as f64 * log_one_plus).exp_m1();
    Ok(chi2.max(0.0))
}

/// χ² between `N(vech(UΛUᵀ), σ²Σ_W)` and `N(vech(Λ), σ²Σ_W)`.
///
/// `Σ_W` is diagonal with 2 at diagonal positions and 1 elsewhere, and the
/// divergence is `exp(Δᵀ(σ²Σ_W)⁻¹Δ) − 1`.
pub fn chi2_gauss_meanshift(model: &DenoiseModel, u: &OrthMatrix) -> Result<f64> {
    let lam = model.spectrum().lambdas();
    check_dim(model.spectrum(), u.dim())?;
    let p = lam.len();
    let e = displacement(u);
    let s2 = model.sigma().powi(2);
    let mut q = 0.0;
    for a in 0..p {
        for b in a..p {
            // (UΛUᵀ − Λ)_ab = (EΛ + ΛEᵀ + EΛEᵀ)_ab
            let quad: f64 = (0..p).map(|k| e[(a, k)] * lam[k] * e[(b, k)]).sum();
            let delta = e[(a, b)] * lam[b] + lam[a] * e[(b, a)] + quad;
            let var = if a == b { 2.0 * s2 } else { s2 };
            q += delta * delta / var;
        }
    }
    Ok(q.exp_m1())
}

/// Outcome of a χ²/t² limit check along one direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FisherLimitReport {
    pub model: &'static str,
    pub t_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub extrapolated: f64,
    pub closed_form: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Value at `0` of the polynomial interpolating `(ts[k], ys[k])` (Neville).
pub fn extrapolate_to_zero(ts: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let m = ts.len();
    for level in 1..m {
        for k in 0..m - level {
            let (ta, tb) = (ts[k], ts[k + level]);
            p[k] = (tb * p[k] - ta * p[k + 1]) / (tb - ta);
        }
    }
    p.first().copied().unwrap_or(f64::NAN)
}

/// Evaluates `χ²(exp(tξ))/t²` on `t_grid`, extrapolates to `t = 0` and
/// compares with `ℐ(ξ, ξ)`.
///
/// The check passes when `|limit − ℐ| ≤ rtol·ℐ + 1e-6`.
pub fn verify_fisher_limit(
    form: &FisherForm,
    xi: &SkewMatrix,
    t_grid: &[f64],
    rtol: f64,
) -> Result<FisherLimitReport> {
    if t_grid.is_empty() {
        return invalid("t grid must be non-empty");
    }
    if t_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return invalid("t grid must be positive and finite");
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("t grid must be strictly decreasing");
    }
    let closed_form = form.eval(xi)?;
    let mut ratios = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        ratios.push(form.chi2(&skew_exp(xi, t))? / (t * t));
    }
    let extrapolated = extrapolate_to_zero(t_grid, &ratios);
    let tolerance = rtol * closed_form.abs() + LIMIT_ATOL;
    let pass = (extrapolated - closed_form).abs() <= tolerance;
    Ok(FisherLimitReport {
        model: form.name(),
        t_grid: t_grid.to_vec(),
        ratios,
        extrapolated,
        closed_form,
        tolerance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::Generator;
    use crate::models::{haar_orthogonal, RngStream};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cov(lam: &[f64], n: usize) -> CovModel {
        CovModel::new(Spectrum::new(lam.to_vec(), 1).unwrap(), n).unwrap()
    }

    fn den(lam: &[f64], sigma: f64) -> DenoiseModel {
        DenoiseModel::new(Spectrum::new(lam.to_vec(), 1).unwrap(), sigma).unwrap()
    }

    fn gen(i: usize, j: usize, p: usize) -> SkewMatrix {
        Generator::new(i, j, p).unwrap().skew()
    }

    #[test]
    fn fisher_examples() {
        let l12 = gen(0, 1, 2);
        assert!((fisher_cov(&cov(&[2.0, 1.0], 1), &l12).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(fisher_cov(&cov(&[1.0, 1.0], 1), &l12).unwrap(), 0.0);
        let one = fisher_cov(&cov(&[3.0, 2.0, 0.5], 1), &gen(0, 2, 3)).unwrap();
        let ten = fisher_cov(&cov(&[3.0, 2.0, 0.5], 10), &gen(0, 2, 3)).unwrap();
        assert!((ten - 10.0 * one).abs() < 1e-12 * ten);

        assert!((fisher_denoise(&den(&[3.0, 1.0], 1.0), &l12).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(fisher_denoise(&den(&[2.0, 2.0], 1.0), &l12).unwrap(), 0.0);
        let a = fisher_denoise(&den(&[3.0, 1.0], 0.7), &l12).unwrap();
        let b = fisher_denoise(&den(&[3.0, 1.0], 1.4), &l12).unwrap();
        assert!((a - 4.0 * b).abs() < 1e-12 * a);
        assert!(fisher_cov(&cov(&[2.0, 1.0], 1), &gen(0, 1, 3)).is_err());
    }

    #[test]
    fn generator_information_matches_form() {
        let lam = [5.0, 3.0, 2.5, 0.4];
        let forms = [
            FisherForm::Covariance(cov(&lam, 7)),
            FisherForm::Denoising(den(&lam, 0.3)),
        ];
        for form in &forms {
            for i in 0..4 {
                for j in 0..4 {
                    if i == j {
                        continue;
                    }
                    let direct = form.eval(&gen(i, j, 4)).unwrap();
                    let closed = form.generator_information(i, j).unwrap();
                    assert!((direct - closed).abs() <= 1e-12 * closed.max(1.0));
                }
            }
        }
    }

    #[test]
    fn forms_are_quadratic() {
        let mut rng = RngStream::new(11, 0).rng();
        let lam = [4.0, 2.0, 1.5, 1.0, 0.2];
        let xi = SkewMatrix::new(Matrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        for form in [
            FisherForm::Covariance(cov(&lam, 3)),
            FisherForm::Denoising(den(&lam, 0.5)),
        ] {
            let base = form.eval(&xi).unwrap();
            assert!(base > 0.0);
            for c in [-3.0, 0.1, 2.5] {
                let scaled = form.eval(&xi.scale(c)).unwrap();
                assert!((scaled - c * c * base).abs() <= 1e-12 * scaled);
            }
        }
    }

    #[test]
    fn chi2_vanishes_at_identity() {
        let id = OrthMatrix::identity(3);
        assert_eq!(chi2_gauss_cov(&cov(&[3.0, 2.0, 1.0], 4), &id).unwrap(), 0.0);
        assert_eq!(chi2_gauss_meanshift(&den(&[3.0, 2.0, 1.0], 0.5), &id).unwrap(), 0.0);
    }

    #[test]
    fn chi2_small_rotation_matches_fisher() {
        let u = skew_exp(&gen(0, 1, 2), 1e-3);
        let c = chi2_gauss_cov(&cov(&[2.0, 1.0], 1), &u).unwrap() / 1e-6;
        assert!((c - 0.5).abs() < 0.005);
        let d = chi2_gauss_meanshift(&den(&[3.0, 1.0], 1.0), &u).unwrap() / 1e-6;
        assert!((d - 4.0).abs() < 0.04);
    }

    #[test]
    fn chi2_properties() {
        let mut rng = RngStream::new(12, 0).rng();
        let lam = [3.0, 2.0, 1.0];
        for _ in 0..20 {
            let u = haar_orthogonal(3, &mut rng);
            let one = chi2_gauss_cov(&cov(&lam, 1), &u).unwrap();
            let two = chi2_gauss_cov(&cov(&lam, 2), &u).unwrap();
            assert!(one >= 0.0 && two >= one);
            assert!(chi2_gauss_meanshift(&den(&lam, 1.0), &u).unwrap() >= 0.0);
        }
        // quadratic form small: χ² ≈ q with relative error below q
        let model = den(&[3.0, 1.0], 1.0);
        let u = skew_exp(&gen(0, 1, 2), 1e-2);
        let chi2 = chi2_gauss_meanshift(&model, &u).unwrap();
        let q = chi2.ln_1p();
        assert!((chi2 - q).abs() / q < q);
    }

    #[test]
    fn chi2_diverges_beyond_definiteness() {
        // swapping a strongly separated pair breaks 2Σ₁⁻¹ − Σ₀⁻¹ ≻ 0
        let u = skew_exp(&gen(0, 1, 2), std::f64::consts::FRAC_PI_2);
        assert_eq!(chi2_gauss_cov(&cov(&[10.0, 1.0], 1), &u).unwrap(), f64::INFINITY);
    }

    // Importance-sampling estimate E_Q[(dP/dQ − 1)²] with Q the base model.
    fn mc_chi2_cov(model: &CovModel, u: &OrthMatrix, draws: usize, seed: u64) -> (f64, f64) {
        let lam = model.spectrum().lambdas();
        let p = lam.len();
        let sigma1 = model.spectrum().conjugated(u);
        let inv1 = {
            let e = sym_eig(&sigma1).unwrap();
            let v = e.vectors.as_matrix();
            Matrix::from_fn(p, p, |a, b| (0..p).map(|k| v[(a, k)] * v[(b, k)] / e.values[k]).sum())
        };
        let mut rng = RngStream::new(seed, 0).rng();
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let mut log_r = 0.0;
            for _ in 0..model.n() {
                let x: Vec<f64> = lam
                    .iter()
                    .map(|l| l.sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let mut q = 0.0;
                for a in 0..p {
                    q -= x[a] * x[a] / lam[a];
                    for b in 0..p {
                        q += x[a] * inv1[(a, b)] * x[b];
                    }
                }
                log_r -= 0.5 * q;
            }
            let v = log_r.exp_m1().powi(2);
            s += v;
            s2 += v * v;
        }
        let mean = s / draws as f64;
        let var = s2 / draws as f64 - mean * mean;
        (mean, (var / draws as f64).sqrt())
    }

    #[test]
    fn chi2_cov_matches_monte_carlo() {
        let model = cov(&[2.0, 1.2, 0.8], 2);
        let u = skew_exp(&gen(0, 2, 3).scale(0.3), 1.0);
        let exact = chi2_gauss_cov(&model, &u).unwrap();
        let (mc, se) = mc_chi2_cov(&model, &u, 200_000, 13);
        assert!((mc - exact).abs() < 4.0 * se, "{mc} ± {se} vs {exact}");
    }

    #[test]
    fn extrapolation_is_exact_on_quadratics() {
        let f = |t: f64| 1.5 - 2.0 * t + 7.0 * t * t;
        let ts = DEFAULT_T_GRID;
        let ys: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        assert!((extrapolate_to_zero(&ts, &ys) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn limit_examples() {
        let r = verify_fisher_limit(
            &FisherForm::Covariance(cov(&[2.0, 1.0], 3)),
            &gen(0, 1, 2),
            &DEFAULT_T_GRID,
            DEFAULT_LIMIT_RTOL,
        )
        .unwrap();
        assert!(r.pass && (r.extrapolated - 1.5).abs() < 1e-6, "{r:?}");
        let r = verify_fisher_limit(
            &FisherForm::Denoising(den(&[3.0, 1.0], 2.0)),
            &gen(0, 1, 2),
            &DEFAULT_T_GRID,
            DEFAULT_LIMIT_RTOL,
        )
        .unwrap();
        assert!(r.pass && (r.extrapolated - 1.0).abs() < 1e-6, "{r:?}");
        let r = verify_fisher_limit(
            &FisherForm::Covariance(cov(&[2.0, 1.0, 1.0], 1)),
            &gen(1, 2, 3),
            &DEFAULT_T_GRID,
            DEFAULT_LIMIT_RTOL,
        )
        .unwrap();
        assert!(r.pass && r.closed_form == 0.0 && r.extrapolated.abs() < 1e-6, "{r:?}");
        let bad = FisherForm::Covariance(cov(&[2.0, 1.0], 1));
        assert!(verify_fisher_limit(&bad, &gen(0, 1, 2), &[1e-3, 1e-2], 1e-3).is_err());
        assert!(verify_fisher_limit(&bad, &gen(0, 1, 2), &[], 1e-3).is_err());
    }

    #[test]
    fn limit_holds_for_every_generator_on_random_spectra() {
        let mut rng = RngStream::new(14, 0).rng();
        for trial in 0..30 {
            let p = 2 + trial % 5;
            // relative gaps bounded below keep the ratios well conditioned
            let mut lam = vec![rng.random_range(0.5..2.0)];
            for _ in 1..p {
                let last = *lam.last().unwrap();
                lam.push(last * rng.random_range(0.3..0.9));
            }
            let n = rng.random_range(1..20);
            let sigma = rng.random_range(0.2..2.0);
            for form in [
                FisherForm::Covariance(cov(&lam, n)),
                FisherForm::Denoising(den(&lam, sigma)),
            ] {
                for i in 0..p {
                    for j in i + 1..p {
                        let r = verify_fisher_limit(&form, &gen(i, j, p), &DEFAULT_T_GRID, DEFAULT_LIMIT_RTOL)
                            .unwrap();
                        assert!(r.pass, "trial {trial} ({i},{j}): {r:?}");
                    }
                }
            }
        }
    }
}
