//! Orbit geometry of the principal-subspace parameter.
//!
//! The parameter is `P_{≤d}(U) = Σ_{i<d} u_i u_iᵀ`, the basis fields are
//! `v_kl(U) = u_k u_lᵀ`, and `O(p)` acts on matrices by conjugation. This
//! module provides the generators `L^(ij)` of `so(p)`, the closed-form
//! directional derivatives of `P_{≤d}` and `v_ij` at the identity, and the
//! weighted losses `l_w(U, a) = Σ_kl w_kl ⟨u_k u_lᵀ, a − P_{≤d}(U)⟩₂²`,
//! including the weights that turn `l_w` into the excess reconstruction risk.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{hs_inner, Matrix, OrthMatrix, SkewMatrix, SymMatrix};
use crate::models::{haar_orthogonal, Spectrum};

/// The generator `L^(ij) = e_i e_jᵀ − e_j e_iᵀ` of `so(p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Generator {
    i: usize,
    j: usize,
    p: usize,
}

impl Generator {
    pub fn new(i: usize, j: usize, p: usize) -> Result<Self> {
        if i == j {
            return invalid("generator indices must differ");
        }
        if i >= p || j >= p {
            return invalid(format!("generator index out of range for p = {p}"));
        }
        Ok(Self { i, j, p })
    }

    pub fn indices(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn skew(&self) -> SkewMatrix {
        let mut m = Matrix::zeros(self.p, self.p);
        m[(self.i, self.j)] = 1.0;
        m[(self.j, self.i)] = -1.0;
        SkewMatrix::new(m).expect("square")
    }
}

/// Non-negative loss weights `w_kl`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightMatrix(Matrix);

impl WeightMatrix {
    pub fn new(w: Matrix) -> Result<Self> {
        if !w.is_square() {
            return invalid("weight matrix must be square");
        }
        if w.as_slice().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return invalid("weights must be finite and non-negative");
        }
        Ok(Self(w))
    }

    /// All weights one: `l_w` is then the squared Hilbert–Schmidt distance.
    pub fn ones(p: usize) -> Self {
        Self(Matrix::from_fn(p, p, |_, _| 1.0))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0[(k, l)]
    }

    pub fn all_positive(&self) -> bool {
        self.0.as_slice().iter().all(|&v| v > 0.0)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Orthogonal projection of integer rank.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projector {
    matrix: SymMatrix,
    rank: usize,
}

impl Projector {
    /// Checks `P² = P` and `tr P ∈ ℕ` to `1e-9`.
    pub fn new(matrix: SymMatrix) -> Result<Self> {
        let m = matrix.as_matrix();
        let idem = (&(m * m) - m).max_abs();
        if !(idem <= 1e-9) {
            return invalid(format!("not idempotent (‖P² − P‖ = {idem:e})"));
        }
        let tr = m.trace();
        let rank = tr.round();
        if !((tr - rank).abs() <= 1e-9) || rank < 0.0 {
            return invalid(format!("trace {tr} is not an integer rank"));
        }
        Ok(Self {
            matrix,
            rank: rank as usize,
        })
    }

    /// Projection onto the span of the first `d` columns of `u`.
    pub fn from_columns(u: &OrthMatrix, d: usize) -> Result<Self> {
        let p = u.dim();
        if d == 0 || d > p {
            return invalid(format!("rank d = {d} outside 1..={p}"));
        }
        let um = u.as_matrix();
        let m = Matrix::from_fn(p, p, |a, b| (0..d).map(|k| um[(a, k)] * um[(b, k)]).sum());
        Ok(Self {
            matrix: SymMatrix::new(m)?,
            rank: d,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn as_matrix(&self) -> &Matrix {
        self.matrix.as_matrix()
    }
}

/// `P_{≤d}(U) = Σ_{i<d} u_i u_iᵀ`.
pub fn projector_leq_d(u: &OrthMatrix, d: usize) -> Result<Projector> {
    Projector::from_columns(u, d)
}

/// A uniformly distributed rank-`d` projector: leading columns of a Haar
/// matrix.
pub fn haar_projector<R: Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> Result<Projector> {
    Projector::from_columns(&haar_orthogonal(p, rng), d)
}

fn leading_block(p: usize, d: usize) -> Matrix {
    Matrix::from_fn(p, p, |a, b| if a == b && a < d { 1.0 } else { 0.0 })
}

/// Derivative of `P_{≤d}` at the identity along `ξ`: `ξΠ_d − Π_d ξ`.
pub fn dp_dir(d: usize, xi: &SkewMatrix) -> Result<SymMatrix> {
    let p = xi.dim();
    if d == 0 || d > p {
        return invalid(format!("rank d = {d} outside 1..={p}"));
    }
    let pi = leading_block(p, d);
    let x = xi.as_matrix();
    SymMatrix::new(&(x * &pi) - &(&pi * x))
}

/// Derivative of `v_ij(U) = u_i u_jᵀ` at the identity along `ξ`:
/// `ξ e_i e_jᵀ − e_i e_jᵀ ξ`.
pub fn dv_dir(i: usize, j: usize, xi: &SkewMatrix) -> Result<Matrix> {
    let p = xi.dim();
    if i >= p || j >= p {
        return invalid(format!("basis index out of range for p = {p}"));
    }
    let mut e = Matrix::zeros(p, p);
    e[(i, j)] = 1.0;
    let x = xi.as_matrix();
    Ok(&(x * &e) - &(&e * x))
}

/// `v_ij(U) = u_i u_jᵀ`.
pub fn basis_field(u: &OrthMatrix, i: usize, j: usize) -> Matrix {
    Matrix::outer(&u.column(i), &u.column(j))
}

/// `l_w(U, a) = Σ_kl w_kl ⟨u_k u_lᵀ, a − P_{≤d}(U)⟩₂²`.
///
/// Evaluated as `Σ_kl w_kl B_kl²` with `B = Uᵀ (a − P_{≤d}(U)) U`.
pub fn weighted_loss(u: &OrthMatrix, a: &Matrix, d: usize, w: &WeightMatrix) -> Result<f64> {
    let p = u.dim();
    if (a.rows(), a.cols()) != (p, p) || w.dim() != p {
        return invalid(format!(
            "weighted_loss: U is {p}x{p}, a is {}x{}, w is {2}x{2}",
            a.rows(),
            a.cols(),
            w.dim()
        ));
    }
    let target = projector_leq_d(u, d)?;
    let diff = a - target.as_matrix();
    let um = u.as_matrix();
    let b = &(&um.transpose() * &diff) * um;
    let mut total = 0.0;
    for k in 0..p {
        for l in 0..p {
            let wkl = w.get(k, l);
            if wkl != 0.0 {
                total += wkl * b[(k, l)] * b[(k, l)];
            }
        }
    }
    Ok(total)
}

/// Weights under which `l_w` equals the excess reconstruction risk:
/// `w_kl = λ_k − μ` for `k < d` and `w_kl = μ − λ_k` for `k ≥ d`, constant
/// along each row.
pub fn excess_risk_weights(spectrum: &Spectrum, mu: f64) -> Result<WeightMatrix> {
    let (lam, d, p) = (spectrum.lambdas(), spectrum.d(), spectrum.p());
    if d == p {
        return invalid("excess risk weights need d < p");
    }
    let (lo, hi) = (lam[d], lam[d - 1]);
    if !(lo <= mu && mu <= hi) {
        return invalid(format!("μ = {mu} outside [λ_(d+1), λ_d] = [{lo}, {hi}]"));
    }
    WeightMatrix::new(Matrix::from_fn(p, p, |k, _| {
        if k < d {
            lam[k] - mu
        } else {
            mu - lam[k]
        }
    }))
}

/// Excess reconstruction risk `R_U(P̂) − R_U(P_{≤d}(U))` of a rank-`d`
/// projector, via `tr(P_{≤d}(U) Σ) − tr(P̂ Σ)` with `Σ = UΛUᵀ`.
pub fn excess_risk(spectrum: &Spectrum, u: &OrthMatrix, p_hat: &Projector) -> Result<f64> {
    let d = spectrum.d();
    if p_hat.rank() != d {
        return invalid(format!("estimator has rank {}, expected {d}", p_hat.rank()));
    }
    if p_hat.dim() != spectrum.p() || u.dim() != spectrum.p() {
        return invalid("excess_risk: dimension mismatch");
    }
    let sigma = spectrum.conjugated(u);
    let best = projector_leq_d(u, d)?;
    Ok(hs_inner(best.as_matrix(), sigma.as_matrix())? - hs_inner(p_hat.as_matrix(), sigma.as_matrix())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::skew_exp;
    use crate::models::RngStream;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn random_skew(p: usize, rng: &mut impl Rng) -> SkewMatrix {
        SkewMatrix::new(Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn projector_examples() {
        let p = projector_leq_d(&OrthMatrix::identity(3), 2).unwrap();
        assert_eq!(p.as_matrix(), &Matrix::diag(&[1.0, 1.0, 0.0]));
        let mut rng = RngStream::new(1, 0).rng();
        let u = haar_orthogonal(4, &mut rng);
        let full = projector_leq_d(&u, 4).unwrap();
        assert!((full.as_matrix() - &Matrix::identity(4)).max_abs() < 1e-12);
        let half = projector_leq_d(&u, 2).unwrap();
        let m = half.as_matrix();
        assert!((&(m * m) - m).max_abs() < 1e-10);
        assert!((m.trace() - 2.0).abs() < 1e-10);
        assert!(Projector::new(half.as_sym().clone()).is_ok());
        assert!(projector_leq_d(&u, 0).is_err());
        assert!(projector_leq_d(&u, 5).is_err());
        assert!(Projector::new(SymMatrix::diag(&[0.5, 1.0])).is_err());
    }

    #[test]
    fn dp_on_mixing_generator() {
        // i < d ≤ j: derivative is −e_i e_jᵀ − e_j e_iᵀ
        let (p, d) = (4, 2);
        for i in 0..d {
            for j in d..p {
                let xi = Generator::new(i, j, p).unwrap().skew();
                let got = dp_dir(d, &xi).unwrap();
                let mut expected = Matrix::zeros(p, p);
                expected[(i, j)] = -1.0;
                expected[(j, i)] = -1.0;
                assert_eq!(got.as_matrix(), &expected);
                let back = dp_dir(d, &Generator::new(j, i, p).unwrap().skew()).unwrap();
                assert_eq!(back.as_matrix(), &expected.scale(-1.0));
            }
        }
    }

    #[test]
    fn dp_vanishes_within_blocks() {
        let (p, d) = (5, 2);
        for (k, l) in [(0, 1), (2, 3), (2, 4), (3, 4)] {
            let xi = Generator::new(k, l, p).unwrap().skew();
            assert_eq!(dp_dir(d, &xi).unwrap().as_matrix().max_abs(), 0.0);
        }
    }

    #[test]
    fn dv_examples() {
        let xi = Generator::new(0, 1, 2).unwrap().skew();
        assert_eq!(dv_dir(0, 1, &xi).unwrap(), Matrix::diag(&[1.0, -1.0]));
        assert_eq!(dv_dir(0, 1, &SkewMatrix::zeros(3)).unwrap().max_abs(), 0.0);
        for (i, j) in [(0, 2), (3, 1)] {
            let xi = Generator::new(i, j, 4).unwrap().skew();
            let mut expected = Matrix::zeros(4, 4);
            expected[(i, i)] = 1.0;
            expected[(j, j)] = -1.0;
            assert_eq!(dv_dir(i, j, &xi).unwrap(), expected);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = RngStream::new(2, 0).rng();
        let (p, d) = (5, 2);
        let xi = random_skew(p, &mut rng);
        let t = 1e-6;
        let u = skew_exp(&xi, t);
        let fd_p = (projector_leq_d(&u, d).unwrap().as_matrix() - &leading_block(p, d)).scale(1.0 / t);
        assert!((&fd_p - dp_dir(d, &xi).unwrap().as_matrix()).max_abs() < 1e-5);
        let (i, j) = (1, 3);
        let e = basis_field(&OrthMatrix::identity(p), i, j);
        let fd_v = (&basis_field(&u, i, j) - &e).scale(1.0 / t);
        assert!((&fd_v - &dv_dir(i, j, &xi).unwrap()).max_abs() < 1e-5);
    }

    #[test]
    fn weighted_loss_examples() {
        let mut rng = RngStream::new(3, 0).rng();
        let u = haar_orthogonal(4, &mut rng);
        let target = projector_leq_d(&u, 2).unwrap();
        let w = WeightMatrix::ones(4);
        assert!(weighted_loss(&u, target.as_matrix(), 2, &w).unwrap().abs() < 1e-24);
        let id = OrthMatrix::identity(2);
        let v = weighted_loss(&id, &Matrix::zeros(2, 2), 1, &WeightMatrix::ones(2)).unwrap();
        assert_eq!(v, 1.0);
        assert!(weighted_loss(&id, &Matrix::zeros(3, 3), 1, &WeightMatrix::ones(2)).is_err());
    }

    #[test]
    fn unit_weights_give_squared_frobenius() {
        let mut rng = RngStream::new(4, 0).rng();
        let u = haar_orthogonal(5, &mut rng);
        let a = Matrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let diff = &a - projector_leq_d(&u, 3).unwrap().as_matrix();
        let expected = hs_inner(&diff, &diff).unwrap();
        let got = weighted_loss(&u, &a, 3, &WeightMatrix::ones(5)).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn excess_weights_examples() {
        let s = Spectrum::new(vec![2.0, 1.0], 1).unwrap();
        let w = excess_risk_weights(&s, 1.5).unwrap();
        assert_eq!(w.as_matrix(), &Matrix::from_fn(2, 2, |_, _| 0.5));
        let s = Spectrum::new(vec![4.0, 3.0, 1.0, 0.5], 2).unwrap();
        let at_top = excess_risk_weights(&s, 3.0).unwrap();
        assert!((0..4).all(|l| at_top.get(1, l) == 0.0));
        let at_bottom = excess_risk_weights(&s, 1.0).unwrap();
        assert!((0..4).all(|l| at_bottom.get(2, l) == 0.0));
        assert!(excess_risk_weights(&s, 3.5).is_err());
        assert!(excess_risk_weights(&s, 0.9).is_err());
    }

    #[test]
    fn excess_risk_examples() {
        let s = Spectrum::new(vec![2.0, 1.0], 1).unwrap();
        let id = OrthMatrix::identity(2);
        let best = projector_leq_d(&id, 1).unwrap();
        assert_eq!(excess_risk(&s, &id, &best).unwrap(), 0.0);
        let wrong = Projector::new(SymMatrix::diag(&[0.0, 1.0])).unwrap();
        assert_eq!(excess_risk(&s, &id, &wrong).unwrap(), 1.0);
        let full = Projector::new(SymMatrix::identity(2)).unwrap();
        assert!(excess_risk(&s, &id, &full).is_err());
    }

    #[test]
    fn excess_risk_equals_weighted_loss_on_random_triples() {
        let mut rng = RngStream::new(5, 0).rng();
        for trial in 0..100 {
            let p = 2 + trial % 9;
            let d = 1 + trial % (p - 1);
            let mut lam: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..5.0)).collect();
            lam.sort_by(|a, b| b.total_cmp(a));
            let s = Spectrum::new(lam.clone(), d).unwrap();
            let mu = rng.random_range(lam[d]..=lam[d - 1]);
            let u = haar_orthogonal(p, &mut rng);
            let p_hat = haar_projector(p, d, &mut rng).unwrap();
            let lhs = excess_risk(&s, &u, &p_hat).unwrap();
            let w = excess_risk_weights(&s, mu).unwrap();
            let rhs = weighted_loss(&u, p_hat.as_matrix(), d, &w).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "trial {trial}: {lhs} vs {rhs}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn excess_identity_holds_for_any_mu(
            p in 2usize..=10, seed in any::<u64>(), frac in 0.0f64..=1.0
        ) {
            let mut rng = RngStream::new(seed, 0).rng();
            let d = rng.random_range(1..p);
            let mut lam: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..5.0)).collect();
            lam.sort_by(|a, b| b.total_cmp(a));
            let s = Spectrum::new(lam.clone(), d).unwrap();
            let mu = lam[d] + frac * (lam[d - 1] - lam[d]);
            let u = haar_orthogonal(p, &mut rng);
            let p_hat = haar_projector(p, d, &mut rng).unwrap();
            let lhs = excess_risk(&s, &u, &p_hat).unwrap();
            let rhs = weighted_loss(&u, p_hat.as_matrix(), d, &excess_risk_weights(&s, mu).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            prop_assert!(lhs >= -1e-10);
        }

        #[test]
        fn weighted_loss_is_invariant(p in 2usize..=6, seed in any::<u64>()) {
            let mut rng = RngStream::new(seed, 1).rng();
            let d = rng.random_range(1..=p);
            let u = haar_orthogonal(p, &mut rng);
            let v = haar_orthogonal(p, &mut rng);
            let a = Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
            let w = WeightMatrix::new(Matrix::from_fn(p, p, |_, _| rng.random_range(0.0..2.0))).unwrap();
            let vm = v.as_matrix();
            let va = &(vm * &a) * &vm.transpose();
            let lhs = weighted_loss(&v.compose(&u), &va, d, &w).unwrap();
            let rhs = weighted_loss(&u, &a, d, &w).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
