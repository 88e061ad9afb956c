//! Capacitated doubly-substochastic programs and the lower bounds built on
//! them.
//!
//! Every bound here has the form `prefactor · max Σ x_ij` over
//!
//! ```text
//! 0 ≤ x_ij ≤ b_ij,   Σ_j x_ij ≤ r_i,   Σ_i x_ij ≤ c_j
//! ```
//!
//! which is a max-flow problem on `source → rows → cols → sink`. The solver
//! ([`substochastic_max`]) is a highest-label push-relabel and returns a
//! minimum cut whose capacity certifies optimality. [`lp_oracle`] solves the
//! same program by a dense simplex and exists to cross-check the flow solver.

use rand::Rng;
use serde::Serialize;

use crate::equivariance::WeightMatrix;
use crate::error::{invalid, Error, Result};
use crate::fisher::FisherForm;
use crate::linalg::Matrix;
use crate::models::{CovModel, DenoiseModel, Spectrum};

/// Largest `|I|·|J|` accepted by [`lp_oracle`].
pub const LP_ORACLE_MAX_EDGES: usize = 16;

/// Allowed gap between flow value and cut capacity.
pub const DUALITY_TOL: f64 = 1e-9;

/// Interval tolerance of the golden-section search over `μ`.
pub const MU_SEARCH_TOL: f64 = 1e-10;

/// `max Σx_ij` subject to edge, row and column capacities.
///
/// Edge capacities may be `+∞`; all capacities may be zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubstochasticProgram {
    rows: Vec<usize>,
    cols: Vec<usize>,
    caps: Vec<Vec<f64>>,
    row_caps: Vec<f64>,
    col_caps: Vec<f64>,
}

impl SubstochasticProgram {
    /// `rows` and `cols` label the index sets; `caps` is `|rows| × |cols|`.
    pub fn new(
        rows: Vec<usize>,
        cols: Vec<usize>,
        caps: Vec<Vec<f64>>,
        row_caps: Vec<f64>,
        col_caps: Vec<f64>,
    ) -> Result<Self> {
        if row_caps.len() != rows.len() || col_caps.len() != cols.len() {
            return invalid("capacity vectors do not match the index sets");
        }
        if caps.len() != rows.len() || caps.iter().any(|r| r.len() != cols.len()) {
            return invalid(format!("edge capacities must be {}x{}", rows.len(), cols.len()));
        }
        if caps.iter().flatten().any(|&b| !(b >= 0.0)) {
            return invalid("edge capacities must be non-negative (∞ allowed)");
        }
        if row_caps.iter().chain(&col_caps).any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return invalid("row and column capacities must be finite and non-negative");
        }
        Ok(Self {
            rows,
            cols,
            caps,
            row_caps,
            col_caps,
        })
    }

    /// Unlabelled program with rows `0..m` and columns `0..k`.
    pub fn from_caps(caps: Vec<Vec<f64>>, row_caps: Vec<f64>, col_caps: Vec<f64>) -> Result<Self> {
        let rows = (0..row_caps.len()).collect();
        let cols = (0..col_caps.len()).collect();
        Self::new(rows, cols, caps, row_caps, col_caps)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn caps(&self) -> &[Vec<f64>] {
        &self.caps
    }

    pub fn row_caps(&self) -> &[f64] {
        &self.row_caps
    }

    pub fn col_caps(&self) -> &[f64] {
        &self.col_caps
    }

    /// Finite stand-in for infinite edge capacities; it exceeds every
    /// feasible flow so it never binds.
    pub fn infinity_cap(&self) -> f64 {
        self.row_caps.iter().sum::<f64>() + self.col_caps.iter().sum::<f64>() + 1.0
    }

    /// Whether `x` satisfies every constraint up to `tol`.
    pub fn is_feasible(&self, x: &[Vec<f64>], tol: f64) -> bool {
        let (m, k) = (self.rows.len(), self.cols.len());
        if x.len() != m || x.iter().any(|r| r.len() != k) {
            return false;
        }
        let edges_ok = (0..m).all(|i| (0..k).all(|j| x[i][j] >= -tol && x[i][j] <= self.caps[i][j] + tol));
        let rows_ok = (0..m).all(|i| x[i].iter().sum::<f64>() <= self.row_caps[i] + tol);
        let cols_ok = (0..k).all(|j| (0..m).map(|i| x[i][j]).sum::<f64>() <= self.col_caps[j] + tol);
        edges_ok && rows_ok && cols_ok
    }
}

/// Random program with up to `max_side` rows and columns; edge caps are
/// zero or infinite with probability 1/10 each. Used by cross-checks.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, max_side: usize) -> SubstochasticProgram {
    let m = rng.random_range(1..=max_side);
    let k = rng.random_range(1..=max_side);
    let draw = |rng: &mut R| match rng.random_range(0..10) {
        0 => 0.0,
        1 => f64::INFINITY,
        _ => rng.random_range(0.0..2.0),
    };
    let caps = (0..m).map(|_| (0..k).map(|_| draw(rng)).collect()).collect();
    let row_caps = (0..m).map(|_| rng.random_range(0.0..2.0)).collect();
    let col_caps = (0..k).map(|_| rng.random_range(0.0..2.0)).collect();
    SubstochasticProgram::from_caps(caps, row_caps, col_caps).expect("valid by construction")
}

/// Which constraints hold with equality at the optimum.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Tightness {
    pub rows: Vec<bool>,
    pub cols: Vec<bool>,
    pub edges: Vec<Vec<bool>>,
}

/// Optimum of a [`SubstochasticProgram`] with its min-cut certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSolution {
    pub value: f64,
    pub x: Vec<Vec<f64>>,
    pub cut_value: f64,
    pub tight: Tightness,
}

struct Network {
    n: usize,
    cap: Vec<f64>,
    flow: Vec<f64>,
}

impl Network {
    fn new(n: usize) -> Self {
        Self {
            n,
            cap: vec![0.0; n * n],
            flow: vec![0.0; n * n],
        }
    }

    fn residual(&self, u: usize, v: usize) -> f64 {
        self.cap[u * self.n + v] - self.flow[u * self.n + v]
    }

    fn push(&mut self, u: usize, v: usize, amount: f64) {
        self.flow[u * self.n + v] += amount;
        self.flow[v * self.n + u] -= amount;
    }

    /// Highest-label push-relabel; residuals and excesses at or below `eps`
    /// count as zero.
    fn run(&mut self, s: usize, t: usize, eps: f64) {
        let n = self.n;
        let mut height = vec![0usize; n];
        let mut excess = vec![0.0f64; n];
        height[s] = n;
        for v in 0..n {
            let c = self.cap[s * n + v];
            if c > 0.0 {
                self.push(s, v, c);
                excess[v] += c;
                excess[s] -= c;
            }
        }
        let max_height = 2 * n + 1;
        loop {
            let u = (0..n)
                .filter(|&u| u != s && u != t && excess[u] > eps)
                .max_by_key(|&u| (height[u], std::cmp::Reverse(u)));
            let Some(u) = u else { break };
            for v in 0..n {
                if excess[u] <= eps {
                    break;
                }
                let r = self.residual(u, v);
                if r > eps && height[u] == height[v] + 1 {
                    let amount = excess[u].min(r);
                    self.push(u, v, amount);
                    excess[u] -= amount;
                    excess[v] += amount;
                }
            }
            if excess[u] <= eps {
                continue;
            }
            let lowest = (0..n)
                .filter(|&v| self.residual(u, v) > eps)
                .map(|v| height[v])
                .min();
            match lowest {
                Some(h) if h < max_height => height[u] = h + 1,
                // excess below resolution: leave it stranded
                _ => excess[u] = 0.0,
            }
        }
    }

    /// Nodes that can still reach `t` through edges with residual above `eps`.
    fn sink_side(&self, t: usize, eps: f64) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for u in 0..self.n {
                if !seen[u] && self.residual(u, v) > eps {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

/// Exact optimum of `prog` via max-flow, certified by a minimum cut.
///
/// Infinite edge capacities are replaced by
/// [`SubstochasticProgram::infinity_cap`]. Empty index sets give value 0.
pub fn substochastic_max(prog: &SubstochasticProgram) -> Result<FlowSolution> {
    let (m, k) = (prog.rows.len(), prog.cols.len());
    if m == 0 || k == 0 {
        return Ok(FlowSolution {
            value: 0.0,
            x: vec![vec![]; m],
            cut_value: 0.0,
            tight: Tightness {
                rows: vec![false; m],
                cols: vec![false; k],
                edges: vec![vec![]; m],
            },
        });
    }
    let big = prog.infinity_cap();
    // clipping an edge to its row and column caps leaves the optimum unchanged
    // and keeps every capacity on a common scale
    let edge = |i: usize, j: usize| {
        let b = if prog.caps[i][j].is_finite() { prog.caps[i][j] } else { big };
        b.min(prog.row_caps[i]).min(prog.col_caps[j])
    };
    let (s, t) = (0, m + k + 1);
    let mut net = Network::new(m + k + 2);
    let mut scale = 0.0f64;
    for i in 0..m {
        let row_total: f64 = (0..k).map(|j| edge(i, j)).sum();
        net.cap[s * net.n + 1 + i] = prog.row_caps[i].min(row_total);
        for j in 0..k {
            let b = edge(i, j);
            net.cap[(1 + i) * net.n + 1 + m + j] = b;
            scale = scale.max(b);
        }
    }
    for j in 0..k {
        let col_total: f64 = (0..m).map(|i| edge(i, j)).sum();
        net.cap[(1 + m + j) * net.n + t] = prog.col_caps[j].min(col_total);
    }
    if scale == 0.0 {
        return Ok(FlowSolution {
            value: 0.0,
            x: vec![vec![0.0; k]; m],
            cut_value: 0.0,
            tight: tightness(prog, &vec![vec![0.0; k]; m]),
        });
    }
    let eps = 1e-15 * scale;
    net.run(s, t, eps);

    let mut x: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..k).map(|j| net.flow[(1 + i) * net.n + 1 + m + j].max(0.0)).collect())
        .collect();
    repair(prog, &mut x);

    let sink_side = net.sink_side(t, eps);
    let mut cut_value = 0.0;
    for u in 0..net.n {
        for v in 0..net.n {
            if !sink_side[u] && sink_side[v] {
                cut_value += net.cap[u * net.n + v];
            }
        }
    }
    let value: f64 = x.iter().flatten().sum();
    let gap = (cut_value - value).abs();
    if gap > DUALITY_TOL * value.max(1.0) {
        return Err(Error::Unsupported(format!(
            "max-flow certificate failed: flow {value:e}, cut {cut_value:e}"
        )));
    }
    let tight = tightness(prog, &x);
    Ok(FlowSolution {
        value,
        x,
        cut_value,
        tight,
    })
}

/// Trims rounding-level overshoot so `x` satisfies every constraint exactly.
fn repair(prog: &SubstochasticProgram, x: &mut [Vec<f64>]) {
    let (m, k) = (prog.rows.len(), prog.cols.len());
    for i in 0..m {
        for j in 0..k {
            x[i][j] = x[i][j].min(prog.caps[i][j]);
        }
        let over = x[i].iter().sum::<f64>() - prog.row_caps[i];
        if over > 0.0 {
            shave(x[i].iter_mut(), over);
        }
    }
    for j in 0..k {
        let over = (0..m).map(|i| x[i][j]).sum::<f64>() - prog.col_caps[j];
        if over > 0.0 {
            shave(x.iter_mut().map(|r| &mut r[j]), over);
        }
    }
}

fn shave<'a>(entries: impl Iterator<Item = &'a mut f64>, mut over: f64) {
    for e in entries {
        let cut = e.min(over);
        *e -= cut;
        over -= cut;
        if over <= 0.0 {
            break;
        }
    }
}

fn tightness(prog: &SubstochasticProgram, x: &[Vec<f64>]) -> Tightness {
    let (m, k) = (prog.rows.len(), prog.cols.len());
    let scale = prog
        .row_caps
        .iter()
        .chain(&prog.col_caps)
        .fold(0.0f64, |a, &b| a.max(b));
    let at_cap = |v: f64, cap: f64| cap.is_finite() && v >= cap - 1e-9 * cap - 1e-15 * scale;
    Tightness {
        rows: (0..m).map(|i| at_cap(x[i].iter().sum(), prog.row_caps[i])).collect(),
        cols: (0..k)
            .map(|j| at_cap((0..m).map(|i| x[i][j]).sum(), prog.col_caps[j]))
            .collect(),
        edges: (0..m)
            .map(|i| (0..k).map(|j| at_cap(x[i][j], prog.caps[i][j])).collect())
            .collect(),
    }
}

/// Optimum of `prog` by a dense simplex with Bland's rule.
///
/// Independent of the flow solver; limited to `|I|·|J| ≤ 16`.
pub fn lp_oracle(prog: &SubstochasticProgram) -> Result<f64> {
    let (m, k) = (prog.rows.len(), prog.cols.len());
    let nv = m * k;
    if nv > LP_ORACLE_MAX_EDGES {
        return Err(Error::Unsupported(format!(
            "lp_oracle handles at most {LP_ORACLE_MAX_EDGES} edges, got {nv}"
        )));
    }
    if nv == 0 {
        return Ok(0.0);
    }
    // constraints A x ≤ b with b ≥ 0, so the origin is a feasible basis
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..m {
        for j in 0..k {
            if prog.caps[i][j].is_finite() {
                let mut a = vec![0.0; nv];
                a[i * k + j] = 1.0;
                cons.push((a, prog.caps[i][j]));
            }
        }
        let mut a = vec![0.0; nv];
        (0..k).for_each(|j| a[i * k + j] = 1.0);
        cons.push((a, prog.row_caps[i]));
    }
    for j in 0..k {
        let mut a = vec![0.0; nv];
        (0..m).for_each(|i| a[i * k + j] = 1.0);
        cons.push((a, prog.col_caps[j]));
    }
    let nc = cons.len();
    let width = nv + nc + 1;
    let mut tab = vec![vec![0.0; width]; nc + 1];
    for (r, (a, b)) in cons.iter().enumerate() {
        tab[r][..nv].copy_from_slice(a);
        tab[r][nv + r] = 1.0;
        tab[r][width - 1] = *b;
    }
    tab[nc][..nv].iter_mut().for_each(|c| *c = -1.0);
    let mut basis: Vec<usize> = (nv..nv + nc).collect();
    let tol = 1e-12;
    for _ in 0..10_000 {
        let Some(enter) = (0..width - 1).find(|&c| tab[nc][c] < -tol) else {
            return Ok(tab[nc][width - 1]);
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..nc {
            if tab[r][enter] > tol {
                let ratio = tab[r][width - 1] / tab[r][enter];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => ratio < best - tol || (ratio <= best + tol && basis[r] < basis[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((lr, _)) = leave else {
            return Err(Error::Unsupported("unbounded program".into()));
        };
        let piv = tab[lr][enter];
        tab[lr].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = tab[lr].clone();
        for (r, row) in tab.iter_mut().enumerate() {
            if r != lr && row[enter] != 0.0 {
                let f = row[enter];
                row.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
            }
        }
        basis[lr] = enter;
    }
    Err(Error::Unsupported("simplex iteration limit reached".into()))
}

/// Which lower bound a [`BoundResult`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Hs,
    Excess,
    Denoise,
}

/// Parameters a bound was computed with.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundParams {
    pub lambdas: Vec<f64>,
    pub p: usize,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl BoundParams {
    fn of(spectrum: &Spectrum) -> Self {
        Self {
            lambdas: spectrum.lambdas().to_vec(),
            p: spectrum.p(),
            d: spectrum.d(),
            n: None,
            sigma: None,
            delta: None,
            mu: None,
        }
    }
}

/// A lower bound together with the optimal program solution behind it.
///
/// `value = prefactor · optimum` and `optimum = Σ x_ij`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundResult {
    pub schema: u32,
    pub kind: BoundKind,
    pub value: f64,
    pub prefactor: f64,
    pub optimum: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub x: Vec<Vec<f64>>,
    pub tight: Tightness,
    pub cut_value: f64,
    pub params: BoundParams,
}

impl BoundResult {
    fn assemble(kind: BoundKind, prefactor: f64, prog: &SubstochasticProgram, params: BoundParams) -> Result<Self> {
        let sol = substochastic_max(prog)?;
        Ok(Self {
            schema: 1,
            kind,
            value: prefactor * sol.value,
            prefactor,
            optimum: sol.value,
            rows: prog.rows.clone(),
            cols: prog.cols.clone(),
            x: sol.x,
            tight: sol.tight,
            cut_value: sol.cut_value,
            params,
        })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return invalid(format!("δ must be positive and finite, got {delta}"));
    }
    Ok(())
}

/// Program with `I = 0..d`, `J = d..p`, row/column caps `δ` and edge caps
/// from `cap(λ_i, λ_j)`.
fn leading_block_program(
    spectrum: &Spectrum,
    delta: f64,
    cap: impl Fn(f64, f64) -> f64,
) -> Result<SubstochasticProgram> {
    let (lam, d, p) = (spectrum.lambdas(), spectrum.d(), spectrum.p());
    let rows: Vec<usize> = (0..d).collect();
    let cols: Vec<usize> = (d..p).collect();
    let caps = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| cap(lam[i], lam[j])).collect())
        .collect();
    SubstochasticProgram::new(rows, cols, caps, vec![delta; d], vec![delta; p - d])
}

fn hs_cap(n: usize) -> impl Fn(f64, f64) -> f64 {
    move |li, lj| {
        if li == lj {
            f64::INFINITY
        } else {
            2.0 * li * lj / (n as f64 * (li - lj).powi(2))
        }
    }
}

/// Lower bound on the Bayes Hilbert–Schmidt risk of PCA:
/// `(1/(1+2δ)) · max Σx_ij` with `x_ij ≤ 2λ_iλ_j/(n(λ_i − λ_j)²)` and
/// row/column sums at most `δ`.
pub fn hs_lower_bound(model: &CovModel, delta: f64) -> Result<BoundResult> {
    check_delta(delta)?;
    let prog = leading_block_program(model.spectrum(), delta, hs_cap(model.n()))?;
    let mut params = BoundParams::of(model.spectrum());
    params.n = Some(model.n());
    params.delta = Some(delta);
    BoundResult::assemble(BoundKind::Hs, 1.0 / (1.0 + 2.0 * delta), &prog, params)
}

/// Closed form of [`hs_lower_bound`] for `d = 1`:
/// `(1/(1+2δ)) · min((2/n) Σ_{j>1} λ₁λ_j/(λ₁ − λ_j)², δ)`.
pub fn hs_bound_d1(model: &CovModel, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let s = model.spectrum();
    if s.d() != 1 {
        return invalid(format!("closed form needs d = 1, got d = {}", s.d()));
    }
    let lam = s.lambdas();
    let cap = hs_cap(model.n());
    let total: f64 = lam[1..].iter().map(|&lj| cap(lam[0], lj)).sum();
    Ok(total.min(delta) / (1.0 + 2.0 * delta))
}

/// Lower bound for low-rank denoising: same program as
/// [`hs_lower_bound`] with `x_ij ≤ 2σ²/(λ_i − λ_j)²`.
pub fn denoise_lower_bound(model: &DenoiseModel, delta: f64) -> Result<BoundResult> {
    check_delta(delta)?;
    let s2 = model.sigma().powi(2);
    let prog = leading_block_program(model.spectrum(), delta, |li, lj| {
        if li == lj {
            f64::INFINITY
        } else {
            2.0 * s2 / (li - lj).powi(2)
        }
    })?;
    let mut params = BoundParams::of(model.spectrum());
    params.sigma = Some(model.sigma());
    params.delta = Some(delta);
    BoundResult::assemble(BoundKind::Denoise, 1.0 / (1.0 + 2.0 * delta), &prog, params)
}

/// Maximizes `eval(δ)` over `δ ∈ [1e-6, 1e6]` by golden-section search in
/// `log δ`.
///
/// The bound is a concave non-decreasing flow value divided by `1 + 2δ`,
/// which is unimodal in `δ`.
pub fn best_delta(eval: impl Fn(f64) -> Result<BoundResult>) -> Result<BoundResult> {
    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    let mut best: Option<BoundResult> = None;
    golden_max(
        |s| {
            let r = eval(s.exp())?;
            let v = r.value;
            if best.as_ref().is_none_or(|b| v > b.value) {
                best = Some(r);
            }
            Ok(v)
        },
        lo,
        hi,
        1e-8,
    )?;
    Ok(best.expect("golden search evaluates at least once"))
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`, endpoints
/// included. Returns the best point seen.
fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    let mut best = (lo, f(lo)?);
    let f_hi = f(hi)?;
    if f_hi > best.1 {
        best = (hi, f_hi);
    }
    if hi - lo <= tol {
        return Ok(best);
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fe = f(e)?;
    while b - a > tol {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = f(e)?;
        }
        for (x, v) in [(c, fc), (e, fe)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok(best)
}

/// Choice of the splitting point `μ ∈ [λ_{d+1}, λ_d]` in the excess bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mu {
    Fixed(f64),
    /// Maximize the bound over `μ`.
    Auto,
}

/// Index sets of the excess bound: `I = {i < d : λ_i > λ_d}` and
/// `J = {j ≥ d : λ_j < λ_{d-1}}` (zero-based).
pub fn excess_index_sets(spectrum: &Spectrum) -> Result<(Vec<usize>, Vec<usize>)> {
    let (lam, d, p) = (spectrum.lambdas(), spectrum.d(), spectrum.p());
    if d == p {
        return invalid("excess bound needs d < p");
    }
    if !(lam[0] > lam[d]) || !(lam[d - 1] > lam[p - 1]) {
        return invalid("excess bound needs λ₁ > λ_(d+1) and λ_d > λ_p");
    }
    let rows = (0..d).filter(|&i| lam[i] > lam[d]).collect();
    let cols = (d..p).filter(|&j| lam[j] < lam[d - 1]).collect();
    Ok((rows, cols))
}

fn excess_program(model: &CovModel, mu: f64) -> Result<SubstochasticProgram> {
    let s = model.spectrum();
    let (lam, d) = (s.lambdas(), s.d());
    let (rows, cols) = excess_index_sets(s)?;
    if !(lam[d] <= mu && mu <= lam[d - 1]) {
        return invalid(format!("μ = {mu} outside [λ_(d+1), λ_d] = [{}, {}]", lam[d], lam[d - 1]));
    }
    let n = model.n() as f64;
    let caps = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| lam[i] * lam[j] / (n * (lam[i] - lam[j]))).collect())
        .collect();
    let row_caps = rows.iter().map(|&i| lam[i] - mu).collect();
    let col_caps = cols.iter().map(|&j| mu - lam[j]).collect();
    SubstochasticProgram::new(rows, cols, caps, row_caps, col_caps)
}

/// Lower bound on the Bayes excess reconstruction risk of PCA:
/// `(1/3) · max Σx_ij` with `x_ij ≤ λ_iλ_j/(n(λ_i − λ_j))`, row caps
/// `λ_i − μ` and column caps `μ − λ_j`.
///
/// With [`Mu::Auto`] the flow value, concave in `μ`, is maximized by
/// golden-section search.
pub fn excess_lower_bound(model: &CovModel, mu: Mu) -> Result<BoundResult> {
    let s = model.spectrum();
    let (lam, d) = (s.lambdas(), s.d());
    excess_index_sets(s)?;
    let mu = match mu {
        Mu::Fixed(mu) => mu,
        Mu::Auto => {
            let (lo, hi) = (lam[d], lam[d - 1]);
            let tol = MU_SEARCH_TOL * (hi - lo).max(f64::MIN_POSITIVE);
            let flow = |mu: f64| substochastic_max(&excess_program(model, mu)?).map(|sol| sol.value);
            golden_max(flow, lo, hi, tol)?.0
        }
    };
    let prog = excess_program(model, mu)?;
    let mut params = BoundParams::of(s);
    params.n = Some(model.n());
    params.mu = Some(mu);
    BoundResult::assemble(BoundKind::Excess, 1.0 / 3.0, &prog, params)
}

/// Maximum of the max-problem for a single row with unit weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingletonSolution {
    /// `S/(1+S)` with `S = Σ_j (1 + b_j⁻¹)⁻¹`.
    pub value: f64,
    /// The maximizing weights `z_j = (1 + b_j⁻¹)⁻¹`.
    pub z: Vec<f64>,
    /// `(1/4) min(Σ b_j, 1)`, never above `value`.
    pub lower_estimate: f64,
}

/// Explicit solution of the max-problem when `I` is a singleton.
pub fn singleton_max(b_row: &[f64]) -> Result<SingletonSolution> {
    if b_row.iter().any(|&b| !(b >= 0.0)) {
        return invalid("edge capacities must be non-negative (∞ allowed)");
    }
    let z: Vec<f64> = b_row
        .iter()
        .map(|&b| if b.is_infinite() { 1.0 } else { b / (1.0 + b) })
        .collect();
    let s: f64 = z.iter().sum();
    let value = s / (1.0 + s);
    let lower_estimate = 0.25 * b_row.iter().sum::<f64>().min(1.0);
    debug_assert!(value >= lower_estimate * (1.0 - 1e-12));
    Ok(SingletonSolution {
        value,
        z,
        lower_estimate,
    })
}

/// Evaluates the canonical feasible point
/// `x_ij = min(2λ_iλ_j/(n(λ_i − λ_j)²), 1/p)` at `δ = 1`: returns
/// `(1/3) Σ x_ij`.
pub fn canonical_bound(model: &CovModel) -> Result<f64> {
    let s = model.spectrum();
    let (lam, d, p) = (s.lambdas(), s.d(), s.p());
    let cap = hs_cap(model.n());
    let inv_p = 1.0 / p as f64;
    let mut total = 0.0;
    for i in 0..d {
        for j in d..p {
            total += cap(lam[i], lam[j]).min(inv_p);
        }
    }
    Ok(total / 3.0)
}

/// Left-hand side of the sample-size condition under which the excess
/// bound takes the relative-rank form:
/// `λ_d/(λ_d − λ_{d+1}) · (Σ_{i≤d} λ_i/(λ_i − λ_{d+1}) + Σ_{j>d} λ_j/(λ_d − λ_j))`.
pub fn relrank_lhs(spectrum: &Spectrum) -> Result<f64> {
    let (lam, d, p) = (spectrum.lambdas(), spectrum.d(), spectrum.p());
    if d == p {
        return invalid("relative-rank condition needs d < p");
    }
    let (ld, lnext) = (lam[d - 1], lam[d]);
    if !(ld > lnext) {
        return invalid("relative-rank condition needs λ_d > λ_(d+1)");
    }
    let upper: f64 = lam[..d].iter().map(|&li| li / (li - lnext)).sum();
    let lower: f64 = lam[d..].iter().map(|&lj| lj / (ld - lj)).sum();
    Ok(ld / (ld - lnext) * (upper + lower))
}

/// `(holds, lhs)` with `holds = lhs ≤ n/2`.
pub fn relrank_condition(model: &CovModel) -> Result<(bool, f64)> {
    let lhs = relrank_lhs(model.spectrum())?;
    Ok((lhs <= model.n() as f64 / 2.0, lhs))
}

/// `(1/(3n)) Σ_{i≤d} Σ_{j>d} λ_iλ_j/(λ_i − λ_j)`, valid when
/// [`relrank_condition`] holds.
pub fn relrank_bound(model: &CovModel) -> Result<f64> {
    let (holds, lhs) = relrank_condition(model)?;
    if !holds {
        return Err(Error::ConditionNotMet(format!(
            "need {lhs} ≤ n/2 = {}",
            model.n() as f64 / 2.0
        )));
    }
    let s = model.spectrum();
    let (lam, d) = (s.lambdas(), s.d());
    let mut total = 0.0;
    for &li in &lam[..d] {
        for &lj in &lam[d..] {
            total += li * lj / (li - lj);
        }
    }
    Ok(total / (3.0 * model.n() as f64))
}

/// Real weights `z_ij` over `I × J` for [`direction_weight_bound`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionWeights(Matrix);

impl DirectionWeights {
    pub fn new(z: Matrix) -> Result<Self> {
        if !z.is_finite() {
            return invalid("direction weights must be finite");
        }
        Ok(Self(z))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }
}

/// The lower-bound ratio
/// `(Σz)² / (Σ ℐ(L^(ij))/(w_ij + w_ji) z_ij² + Σ_i w_ii⁻¹(Σ_j z_ij)² + Σ_j w_jj⁻¹(Σ_i z_ij)²)`
/// for index sets `I ⊆ 0..d`, `J ⊆ d..p`. `0/0` is reported as 0.
pub fn direction_weight_bound(
    form: &FisherForm,
    weights: &WeightMatrix,
    rows: &[usize],
    cols: &[usize],
    z: &DirectionWeights,
) -> Result<f64> {
    let s = form.spectrum();
    let (d, p) = (s.d(), s.p());
    let z = z.as_matrix();
    if weights.dim() != p {
        return invalid("weight matrix does not match the spectrum");
    }
    if (z.rows(), z.cols()) != (rows.len(), cols.len()) {
        return invalid(format!("z must be {}x{}", rows.len(), cols.len()));
    }
    if rows.iter().any(|&i| i >= d) || cols.iter().any(|&j| j < d || j >= p) {
        return invalid("row indices must lie in 0..d and column indices in d..p");
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            let w = weights.get(i, j) + weights.get(j, i);
            if !(w > 0.0) || !(weights.get(i, i) > 0.0) || !(weights.get(j, j) > 0.0) {
                return invalid(format!("weights for pair ({i}, {j}) must be positive"));
            }
            let zij = z[(a, b)];
            num += zij;
            den += form.generator_information(i, j)? / w * zij * zij;
        }
    }
    for (a, &i) in rows.iter().enumerate() {
        let r: f64 = z.row(a).iter().sum();
        den += r * r / weights.get(i, i);
    }
    for (b, &j) in cols.iter().enumerate() {
        let c: f64 = (0..rows.len()).map(|a| z[(a, b)]).sum();
        den += c * c / weights.get(j, j);
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num * num / den)
}
