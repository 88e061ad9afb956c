//! Problem instances and samplers.
//!
//! A [`Spectrum`] fixes `Λ = diag(λ₁ ≥ … ≥ λ_p)` and the subspace rank `d`.
//! [`CovModel`] observes `n` i.i.d. `N(0, UΛUᵀ)` vectors, [`DenoiseModel`]
//! observes `UΛUᵀ + σW` with `W` drawn from the GOE. Samplers take an explicit
//! random generator; [`RngStream`] derives independent reproducible
//! generators from a `(seed, stream)` pair.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{qr, Matrix, OrthMatrix, SymMatrix};

/// Ordered eigenvalues together with the rank of the target subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum")]
pub struct Spectrum {
    lambdas: Vec<f64>,
    d: usize,
}

#[derive(Deserialize)]
struct RawSpectrum {
    lambdas: Vec<f64>,
    d: usize,
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;

    fn try_from(raw: RawSpectrum) -> Result<Self> {
        Spectrum::new(raw.lambdas, raw.d)
    }
}

impl Spectrum {
    /// Validates `λ₁ ≥ … ≥ λ_p` (all finite) and `1 ≤ d ≤ p`.
    pub fn new(lambdas: Vec<f64>, d: usize) -> Result<Self> {
        if lambdas.is_empty() {
            return invalid("spectrum must be non-empty");
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return invalid("spectrum contains non-finite values");
        }
        if lambdas.windows(2).any(|w| w[0] < w[1]) {
            return invalid("eigenvalues must be non-increasing");
        }
        if d == 0 || d > lambdas.len() {
            return invalid(format!(
                "subspace rank d = {d} outside 1..={}",
                lambdas.len()
            ));
        }
        Ok(Self { lambdas, d })
    }

    /// `λ_j = e^{−α j}`, `j = 1..=p`.
    pub fn exponential(alpha: f64, p: usize, d: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return invalid("decay rate must be positive");
        }
        Self::new((1..=p).map(|j| (-alpha * j as f64).exp()).collect(), d)
    }

    /// `λ_j = j^{−α−1}`, `j = 1..=p`.
    pub fn polynomial(alpha: f64, p: usize, d: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return invalid("decay exponent must be positive");
        }
        Self::new((1..=p).map(|j| (j as f64).powf(-alpha - 1.0)).collect(), d)
    }

    /// `d` copies of `top` followed by `p − d` copies of `bottom`.
    pub fn spiked(top: f64, bottom: f64, d: usize, p: usize) -> Result<Self> {
        if d > p {
            return invalid("spike rank exceeds dimension");
        }
        let mut lambdas = vec![top; d];
        lambdas.resize(p, bottom);
        Self::new(lambdas, d)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.lambdas[self.p() - 1] > 0.0
    }

    /// Same eigenvalues, different subspace rank.
    pub fn with_d(&self, d: usize) -> Result<Self> {
        Self::new(self.lambdas.clone(), d)
    }

    pub fn diag(&self) -> Matrix {
        Matrix::diag(&self.lambdas)
    }

    /// `UΛUᵀ`.
    pub fn conjugated(&self, u: &OrthMatrix) -> SymMatrix {
        SymMatrix::diag(&self.lambdas).congruence(u.as_matrix())
    }
}

/// A spectrum description as accepted on the command line.
///
/// - `exp:ALPHA,P`: `λ_j = e^{−αj}` (rank taken from `--d`)
/// - `poly:ALPHA,P`: `λ_j = j^{−α−1}` (rank taken from `--d`)
/// - `spike:L1,L2,D,P`: two-level spiked spectrum of rank `D`
/// - `list:L1,L2,...`: explicit eigenvalues (rank taken from `--d`)
/// - an inline JSON object `{"lambdas": [...], "d": k}`
#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumSpec {
    Exponential { alpha: f64, p: usize },
    Polynomial { alpha: f64, p: usize },
    Spiked { top: f64, bottom: f64, d: usize, p: usize },
    List(Vec<f64>),
    Json(Spectrum),
}

impl SpectrumSpec {
    /// Rank implied by the description itself, if any.
    pub fn implied_d(&self) -> Option<usize> {
        match self {
            SpectrumSpec::Spiked { d, .. } => Some(*d),
            SpectrumSpec::Json(s) => Some(s.d()),
            _ => None,
        }
    }

    /// Materializes the spectrum. An explicit `d` must agree with an implied
    /// one.
    pub fn build(&self, d: Option<usize>) -> Result<Spectrum> {
        let d = match (self.implied_d(), d) {
            (Some(a), Some(b)) if a != b => {
                return invalid(format!("rank {b} conflicts with the spectrum's rank {a}"))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return invalid("subspace rank d is required for this spectrum"),
        };
        match self {
            SpectrumSpec::Exponential { alpha, p } => Spectrum::exponential(*alpha, *p, d),
            SpectrumSpec::Polynomial { alpha, p } => Spectrum::polynomial(*alpha, *p, d),
            SpectrumSpec::Spiked { top, bottom, d, p } => Spectrum::spiked(*top, *bottom, *d, *p),
            SpectrumSpec::List(l) => Spectrum::new(l.clone(), d),
            SpectrumSpec::Json(s) => Ok(s.clone()),
        }
    }
}

impl FromStr for SpectrumSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str::<Spectrum>(s)
                .map(SpectrumSpec::Json)
                .map_err(|e| Error::InvalidInput(format!("spectrum JSON: {e}")));
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("unrecognized spectrum '{s}'")))?;
        let nums: Vec<&str> = args.split(',').map(str::trim).collect();
        let real = |x: &str| -> Result<f64> {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("'{x}' is not a number")))
        };
        let count = |x: &str| -> Result<usize> {
            x.parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("'{x}' is not a count")))
        };
        let arity = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                invalid(format!("'{kind}' takes {n} arguments, got {}", nums.len()))
            }
        };
        match kind {
            "exp" => {
                arity(2)?;
                Ok(SpectrumSpec::Exponential {
                    alpha: real(nums[0])?,
                    p: count(nums[1])?,
                })
            }
            "poly" => {
                arity(2)?;
                Ok(SpectrumSpec::Polynomial {
                    alpha: real(nums[0])?,
                    p: count(nums[1])?,
                })
            }
            "spike" => {
                arity(4)?;
                Ok(SpectrumSpec::Spiked {
                    top: real(nums[0])?,
                    bottom: real(nums[1])?,
                    d: count(nums[2])?,
                    p: count(nums[3])?,
                })
            }
            "list" => Ok(SpectrumSpec::List(
                nums.iter().map(|x| real(x)).collect::<Result<_>>()?,
            )),
            _ => invalid(format!("unknown spectrum family '{kind}'")),
        }
    }
}

/// `n` i.i.d. observations from `N(0, UΛUᵀ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovModel {
    spectrum: Spectrum,
    n: usize,
}

impl CovModel {
    pub fn new(spectrum: Spectrum, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("sample count n must be at least 1");
        }
        if !spectrum.is_strictly_positive() {
            return invalid("covariance model requires λ_p > 0");
        }
        Ok(Self { spectrum, n })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// One observation `UΛUᵀ + σW`, `W ~ GOE`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenoiseModel {
    spectrum: Spectrum,
    sigma: f64,
}

impl DenoiseModel {
    pub fn new(spectrum: Spectrum, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return invalid("noise level σ must be positive and finite");
        }
        if spectrum.lambdas()[spectrum.p() - 1] < 0.0 {
            return invalid("denoising model requires λ_p ≥ 0");
        }
        Ok(Self { spectrum, sigma })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Streams with different ids are non-overlapping ChaCha8 keystreams, so
/// workers can draw from them without coordination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

impl fmt::Display for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.seed, self.stream)
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-distributed element of `O(p)`.
///
/// QR of an i.i.d. standard Gaussian matrix with the signs of `diag(R)`
/// folded into `Q`.
pub fn haar_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> OrthMatrix {
    let g = Matrix::from_fn(p, p, |_, _| standard_normal(rng));
    let (mut q, r) = qr(&g);
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            for i in 0..p {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    OrthMatrix::from_trusted(q)
}

/// `n × p` data matrix whose rows are i.i.d. `N(0, UΛUᵀ)`, generated as
/// `U Λ^{1/2} z`.
pub fn sample_cov<R: Rng + ?Sized>(model: &CovModel, u: &OrthMatrix, rng: &mut R) -> Result<Matrix> {
    let spectrum = model.spectrum();
    let p = spectrum.p();
    if u.dim() != p {
        return invalid(format!("U is {0}x{0} but the spectrum has p = {p}", u.dim()));
    }
    let roots: Vec<f64> = spectrum.lambdas().iter().map(|l| l.sqrt()).collect();
    let mut data = Matrix::zeros(model.n(), p);
    let um = u.as_matrix();
    let mut z = vec![0.0; p];
    for row in 0..model.n() {
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = roots[k] * standard_normal(rng);
        }
        for i in 0..p {
            data[(row, i)] = um.row(i).iter().zip(&z).map(|(a, b)| a * b).sum();
        }
    }
    Ok(data)
}

/// GOE matrix: independent `N(0, 1)` above the diagonal, `N(0, 2)` on it.
pub fn sample_goe<R: Rng + ?Sized>(p: usize, rng: &mut R) -> SymMatrix {
    let mut w = Matrix::zeros(p, p);
    for i in 0..p {
        w[(i, i)] = std::f64::consts::SQRT_2 * standard_normal(rng);
        for j in (i + 1)..p {
            let v = standard_normal(rng);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    SymMatrix::new(w).expect("square")
}

/// `UΛUᵀ + σW`.
pub fn sample_denoise<R: Rng + ?Sized>(
    model: &DenoiseModel,
    u: &OrthMatrix,
    rng: &mut R,
) -> Result<SymMatrix> {
    let p = model.spectrum().p();
    if u.dim() != p {
        return invalid(format!("U is {0}x{0} but the spectrum has p = {p}", u.dim()));
    }
    let signal = model.spectrum().conjugated(u);
    let noise = sample_goe(p, rng);
    SymMatrix::new(signal.as_matrix() + &noise.as_matrix().scale(model.sigma()))
}

/// `Σ̂ = n⁻¹ XᵀX` for an `n × p` data matrix.
pub fn empirical_cov(data: &Matrix) -> Result<SymMatrix> {
    let n = data.rows();
    if n == 0 {
        return invalid("empirical covariance needs at least one row");
    }
    let p = data.cols();
    let mut s = Matrix::zeros(p, p);
    for r in 0..n {
        let x = data.row(r);
        for i in 0..p {
            for j in 0..=i {
                s[(i, j)] += x[i] * x[j];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    SymMatrix::new(Matrix::from_fn(p, p, |i, j| {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        s[(a, b)] * inv_n
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{determinant, sym_eig};

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    // Two-sample Kolmogorov–Smirnov statistic and its 0.001-level critical value.
    fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, f64) {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < n && j < m {
            let x = a[i].min(b[j]);
            while i < n && a[i] <= x {
                i += 1;
            }
            while j < m && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
        }
        let crit = 1.949 * (((n + m) as f64) / ((n * m) as f64)).sqrt();
        (d, crit)
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::new(vec![1.0, 2.0], 1).is_err());
        assert!(Spectrum::new(vec![2.0, 1.0], 0).is_err());
        assert!(Spectrum::new(vec![2.0, 1.0], 3).is_err());
        assert!(Spectrum::new(vec![2.0, f64::NAN], 1).is_err());
        let s = Spectrum::new(vec![2.0, 0.0], 1).unwrap();
        assert!(!s.is_strictly_positive());
        assert!(CovModel::new(s.clone(), 5).is_err());
        assert!(DenoiseModel::new(s.clone(), 1.0).is_ok());
        assert!(DenoiseModel::new(s, 0.0).is_err());
        let s = Spectrum::new(vec![2.0, 1.0], 1).unwrap();
        assert!(CovModel::new(s, 0).is_err());
    }

    #[test]
    fn spectrum_json_roundtrip() {
        let s = Spectrum::new(vec![3.0, 2.0, 0.5], 2).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"lambdas":[3.0,2.0,0.5],"d":2}"#);
        assert_eq!(serde_json::from_str::<Spectrum>(&json).unwrap(), s);
        assert!(serde_json::from_str::<Spectrum>(r#"{"lambdas":[1.0,2.0],"d":1}"#).is_err());
    }

    #[test]
    fn shorthand_parsing() {
        let spike: SpectrumSpec = "spike:2,1,1,2".parse().unwrap();
        assert_eq!(spike.build(None).unwrap().lambdas(), &[2.0, 1.0]);
        assert!(spike.build(Some(2)).is_err());

        let exp: SpectrumSpec = "exp:1,10".parse().unwrap();
        assert!(exp.build(None).is_err());
        let s = exp.build(Some(3)).unwrap();
        assert_eq!(s.p(), 10);
        assert!((s.lambdas()[0] - (-1.0f64).exp()).abs() < 1e-15);

        let poly: SpectrumSpec = "poly:1,4".parse().unwrap();
        let s = poly.build(Some(1)).unwrap();
        assert!((s.lambdas()[1] - 0.25).abs() < 1e-15);

        let json: SpectrumSpec = r#"{"lambdas":[4,1],"d":1}"#.parse().unwrap();
        assert_eq!(json.build(None).unwrap().lambdas(), &[4.0, 1.0]);

        assert!("spike:1,2".parse::<SpectrumSpec>().is_err());
        assert!("cauchy:1,2".parse::<SpectrumSpec>().is_err());
        assert!("exp:x,2".parse::<SpectrumSpec>().is_err());
    }

    #[test]
    fn haar_is_orthogonal_and_reproducible() {
        let stream = RngStream::new(17, 3);
        let a = haar_orthogonal(6, &mut stream.rng());
        let b = haar_orthogonal(6, &mut stream.rng());
        assert_eq!(a, b);
        assert!(OrthMatrix::new(a.as_matrix().clone()).is_ok());
        let c = haar_orthogonal(6, &mut RngStream::new(17, 4).rng());
        assert_ne!(a, c);
    }

    #[test]
    fn haar_p1_is_fair_sign() {
        let mut rng = RngStream::new(1, 0).rng();
        let n = 10_000;
        let plus = (0..n)
            .filter(|_| haar_orthogonal(1, &mut rng)[(0, 0)] > 0.0)
            .count() as f64;
        let expected = n as f64 / 2.0;
        let chi2 = 2.0 * (plus - expected).powi(2) / expected;
        // χ²₁ critical value at level 0.001
        assert!(chi2 < 10.828, "chi2 = {chi2}");
    }

    #[test]
    fn haar_covers_both_components() {
        let mut rng = RngStream::new(2, 0).rng();
        let negative = (0..200)
            .filter(|_| determinant(haar_orthogonal(3, &mut rng).as_matrix()).unwrap() < 0.0)
            .count();
        assert!((60..140).contains(&negative), "{negative} of 200");
    }

    #[test]
    fn haar_entry_mean_is_zero() {
        let mut rng = RngStream::new(3, 0).rng();
        let xs: Vec<f64> = (0..10_000)
            .map(|_| haar_orthogonal(3, &mut rng)[(0, 0)])
            .collect();
        let (m, se) = mean_se(&xs);
        assert!(m.abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn haar_left_invariance_of_trace() {
        let v = haar_orthogonal(3, &mut RngStream::new(99, 0).rng());
        let mut rng_a = RngStream::new(4, 0).rng();
        let mut rng_b = RngStream::new(4, 1).rng();
        let mut a: Vec<f64> = (0..10_000)
            .map(|_| haar_orthogonal(3, &mut rng_a).as_matrix().trace())
            .collect();
        let mut b: Vec<f64> = (0..10_000)
            .map(|_| v.compose(&haar_orthogonal(3, &mut rng_b)).as_matrix().trace())
            .collect();
        let (d, crit) = ks_two_sample(&mut a, &mut b);
        assert!(d < crit, "KS {d} >= {crit}");
    }

    #[test]
    fn sample_cov_identity_spectrum() {
        let s = Spectrum::new(vec![1.0; 3], 1).unwrap();
        let model = CovModel::new(s, 100_000).unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        let u = haar_orthogonal(3, &mut rng);
        let data = sample_cov(&model, &u, &mut rng).unwrap();
        let cov = empirical_cov(&data).unwrap();
        assert!((cov.as_matrix() - &Matrix::identity(3)).max_abs() < 0.05);
    }

    #[test]
    fn sample_cov_single_row_and_dims() {
        let s = Spectrum::new(vec![2.0, 1.0], 1).unwrap();
        let model = CovModel::new(s, 1).unwrap();
        let mut rng = RngStream::new(6, 0).rng();
        let data = sample_cov(&model, &OrthMatrix::identity(2), &mut rng).unwrap();
        assert_eq!((data.rows(), data.cols()), (1, 2));
        assert!(sample_cov(&model, &OrthMatrix::identity(3), &mut rng).is_err());
    }

    #[test]
    fn sample_cov_leading_variance() {
        let s = Spectrum::new(vec![4.0, 1.0], 1).unwrap();
        let model = CovModel::new(s, 20_000).unwrap();
        let data = sample_cov(&model, &OrthMatrix::identity(2), &mut RngStream::new(7, 0).rng())
            .unwrap();
        let sq: Vec<f64> = (0..data.rows()).map(|r| data[(r, 0)].powi(2)).collect();
        let (m, se) = mean_se(&sq);
        assert!((m - 4.0).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn goe_variances() {
        let mut rng = RngStream::new(8, 0).rng();
        let draws: Vec<SymMatrix> = (0..100_000).map(|_| sample_goe(2, &mut rng)).collect();
        let d: Vec<f64> = draws.iter().map(|w| w[(0, 0)].powi(2)).collect();
        let o: Vec<f64> = draws.iter().map(|w| w[(0, 1)].powi(2)).collect();
        let (md, sed) = mean_se(&d);
        let (mo, seo) = mean_se(&o);
        assert!((md - 2.0).abs() < 3.0 * sed, "Var W11 = {md}");
        assert!((mo - 1.0).abs() < 3.0 * seo, "Var W12 = {mo}");
        assert!(draws.iter().all(|w| w[(0, 1)] == w[(1, 0)]));
    }

    #[test]
    fn goe_orthogonal_invariance() {
        let v = haar_orthogonal(3, &mut RngStream::new(100, 0).rng());
        let mut rng_a = RngStream::new(9, 0).rng();
        let mut rng_b = RngStream::new(9, 1).rng();
        let mut a: Vec<f64> = (0..10_000).map(|_| sample_goe(3, &mut rng_a)[(0, 0)]).collect();
        let mut b: Vec<f64> = (0..10_000)
            .map(|_| sample_goe(3, &mut rng_b).congruence(v.as_matrix())[(0, 0)])
            .collect();
        let (d, crit) = ks_two_sample(&mut a, &mut b);
        assert!(d < crit, "KS {d} >= {crit}");
    }

    #[test]
    fn denoise_noiseless_limit_and_mean() {
        let s = Spectrum::new(vec![3.0, 1.0, 0.0], 1).unwrap();
        let mut rng = RngStream::new(10, 0).rng();
        let u = haar_orthogonal(3, &mut rng);
        let tiny = DenoiseModel::new(s.clone(), 1e-300).unwrap();
        let x = sample_denoise(&tiny, &u, &mut rng).unwrap();
        assert_eq!(x, s.conjugated(&u));

        let model = DenoiseModel::new(s.clone(), 1.0).unwrap();
        let target = s.conjugated(&u);
        let draws: Vec<SymMatrix> = (0..100_000)
            .map(|_| sample_denoise(&model, &u, &mut rng).unwrap())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let xs: Vec<f64> = draws.iter().map(|x| x[(i, j)]).collect();
                let (m, se) = mean_se(&xs);
                assert!((m - target[(i, j)]).abs() < 3.5 * se, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn denoise_reproducible() {
        let s = Spectrum::new(vec![3.0, 1.0], 1).unwrap();
        let model = DenoiseModel::new(s, 0.5).unwrap();
        let u = OrthMatrix::identity(2);
        let stream = RngStream::new(11, 2);
        assert_eq!(
            sample_denoise(&model, &u, &mut stream.rng()).unwrap(),
            sample_denoise(&model, &u, &mut stream.rng()).unwrap()
        );
    }

    #[test]
    fn empirical_cov_small_cases() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let c = empirical_cov(&x).unwrap();
        assert_eq!(c.as_matrix(), &Matrix::outer(&[1.0, 2.0], &[1.0, 2.0]));
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(empirical_cov(&x).unwrap(), SymMatrix::diag(&[0.5, 0.5]));
        assert!(empirical_cov(&Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn empirical_cov_is_psd() {
        let s = Spectrum::new(vec![3.0, 2.0, 1.0, 0.5, 0.1], 2).unwrap();
        let model = CovModel::new(s, 3).unwrap();
        let mut rng = RngStream::new(12, 0).rng();
        let u = haar_orthogonal(5, &mut rng);
        let c = empirical_cov(&sample_cov(&model, &u, &mut rng).unwrap()).unwrap();
        let e = sym_eig(&c).unwrap();
        assert!(e.values.iter().all(|&v| v >= -1e-12));
    }
}
