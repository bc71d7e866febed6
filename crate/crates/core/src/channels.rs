//! Bipartite states, super-operators and the Choi correspondence.
//!
//! A linear map `Φ: L(A) → L(B)` is stored through its Choi matrix
//! `η = Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, so that `Φ(X) = tr_A[η (X^T ⊗ I_B)]`.
//! A transfer matrix acting on row-major vectorisations is cached for
//! fast repeated application.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{
    self, basis_conjugate, c, frac_power, identity, is_psd, max_abs, matrix_unit, partial_trace, tensor_regroup, trace, ComplexMatrix,
    Subsystem,
};
use crate::rng;
use crate::schatten::PValue;

const TRACE_TOL: f64 = 1e-10;
const TP_TOL: f64 = 1e-9;

/// A density matrix on `A ⊗ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    rho: ComplexMatrix,
    dims: (usize, usize),
}

impl BipartiteState {
    pub fn new(rho: ComplexMatrix, dims: (usize, usize)) -> Result<Self> {
        let (da, db) = dims;
        if da == 0 || db == 0 {
            return Err(Error::param("subsystem dimensions must be positive"));
        }
        if rho.nrows() != da * db || rho.ncols() != da * db {
            return Err(Error::dims(
                format!("{0}x{0}", da * db),
                format!("{}x{}", rho.nrows(), rho.ncols()),
            ));
        }
        let t = trace(&rho);
        if (t.re - 1.0).abs() > TRACE_TOL || t.im.abs() > TRACE_TOL {
            return Err(Error::param(format!("state trace is {t}, expected 1")));
        }
        if !is_psd(&rho, matcore::PSD_TOL) {
            let lo = matcore::hermitian_eigenvalues(&rho).first().copied().unwrap_or(f64::NAN);
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
        Ok(BipartiteState {
            rho: matcore::hermitian_part(&rho),
            dims,
        })
    }

    /// Normalise the trace before validating.
    pub fn from_unnormalized(rho: ComplexMatrix, dims: (usize, usize)) -> Result<Self> {
        let t = trace(&rho).re;
        if t <= 0.0 {
            return Err(Error::param("matrix has non-positive trace"));
        }
        Self::new(rho / c(t, 0.0), dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn marginal_a(&self) -> ComplexMatrix {
        partial_trace(&self.rho, self.dims, Subsystem::B).expect("validated dims")
    }

    pub fn marginal_b(&self) -> ComplexMatrix {
        partial_trace(&self.rho, self.dims, Subsystem::A).expect("validated dims")
    }

    /// The map `Ω_ρ(X) = tr_A[ρ (X^T ⊗ I)]` from `A` to `B`.
    pub fn omega(&self) -> SuperOp {
        SuperOp::from_choi_unchecked(self.rho.clone(), self.dims)
    }

    /// The same state with the subsystems exchanged.
    pub fn swapped(&self) -> BipartiteState {
        BipartiteState {
            rho: matcore::swap_factors(&self.rho, self.dims),
            dims: (self.dims.1, self.dims.0),
        }
    }

    /// `ρ ⊗ σ` as a state on `(A A') ⊗ (B B')`.
    pub fn tensor(&self, other: &BipartiteState) -> BipartiteState {
        BipartiteState {
            rho: tensor_regroup(&self.rho, self.dims, &other.rho, other.dims),
            dims: (self.dims.0 * other.dims.0, self.dims.1 * other.dims.1),
        }
    }

    /// `ρ^{⊗n}` on `A^n ⊗ B^n`, refusing dimensions above `cap`.
    pub fn tensor_power(&self, n: usize, cap: usize) -> Result<BipartiteState> {
        if n == 0 {
            return Err(Error::param("tensor power must be at least 1"));
        }
        let total = checked_pow(self.dim(), n);
        if total > cap {
            return Err(Error::DimCap { dim: total, cap });
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        Ok(acc)
    }
}

fn checked_pow(base: usize, n: usize) -> usize {
    (0..n).try_fold(1usize, |acc, _| acc.checked_mul(base)).unwrap_or(usize::MAX)
}

/// A linear map between matrix spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    choi: ComplexMatrix,
    transfer: ComplexMatrix,
    transfer_adj: ComplexMatrix,
    dims: (usize, usize),
    is_cp: bool,
    is_tp: bool,
}

impl SuperOp {
    /// Build from a Choi matrix on `d_in · d_out`.
    pub fn from_choi(eta: ComplexMatrix, dims: (usize, usize)) -> Result<Self> {
        let (di, d_out) = dims;
        if eta.nrows() != di * d_out || eta.ncols() != di * d_out {
            return Err(Error::dims(
                format!("{0}x{0}", di * d_out),
                format!("{}x{}", eta.nrows(), eta.ncols()),
            ));
        }
        Ok(Self::from_choi_unchecked(eta, dims))
    }

    fn from_choi_unchecked(eta: ComplexMatrix, dims: (usize, usize)) -> Self {
        let (di, d_out) = dims;
        let transfer = ComplexMatrix::from_fn(d_out * d_out, di * di, |r, s| {
            let (k, l) = (r / d_out, r % d_out);
            let (i, j) = (s / di, s % di);
            eta[(i * d_out + k, j * d_out + l)]
        });
        let is_cp = is_psd(&eta, 1e-10);
        let tb = partial_trace(&eta, dims, Subsystem::B).expect("dims checked");
        let is_tp = max_abs(&(tb - identity(di))) <= TP_TOL;
        let transfer_adj = transfer.adjoint();
        SuperOp {
            choi: eta,
            transfer,
            transfer_adj,
            dims,
            is_cp,
            is_tp,
        }
    }

    /// Build from the action on matrix units.
    pub fn from_fn(d_in: usize, d_out: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self::from_choi_unchecked(map_to_choi(d_in, d_out, f), (d_in, d_out))
    }

    /// Build from Kraus operators `K_k: d_in → d_out`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::param("empty Kraus list"))?;
        let (d_out, d_in) = first.shape();
        if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
            return Err(Error::dims(format!("{d_out}x{d_in}"), "mixed Kraus shapes"));
        }
        Ok(Self::from_fn(d_in, d_out, |x| {
            kraus.iter().fold(ComplexMatrix::zeros(d_out, d_out), |acc, k| acc + k * x * k.adjoint())
        }))
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn transfer(&self) -> &ComplexMatrix {
        &self.transfer
    }

    /// `(d_in, d_out)`.
    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn is_cp(&self) -> bool {
        self.is_cp
    }

    pub fn is_tp(&self) -> bool {
        self.is_tp
    }

    pub fn is_cptp(&self) -> bool {
        self.is_cp && self.is_tp
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (di, d_out) = self.dims;
        if x.shape() != (di, di) {
            return Err(Error::dims(format!("{di}x{di}"), format!("{}x{}", x.nrows(), x.ncols())));
        }
        Ok(apply_transfer(&self.transfer, x, d_out))
    }

    /// `Φ†`, defined by `tr(Y† Φ(X)) = tr(Φ†(Y)† X)`.
    pub fn apply_adjoint(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (di, d_out) = self.dims;
        if y.shape() != (d_out, d_out) {
            return Err(Error::dims(format!("{d_out}x{d_out}"), format!("{}x{}", y.nrows(), y.ncols())));
        }
        Ok(apply_transfer(&self.transfer_adj, y, di))
    }

    /// The adjoint map as a super-operator.
    pub fn adjoint(&self) -> SuperOp {
        let (di, d_out) = self.dims;
        SuperOp::from_fn(d_out, di, |y| self.apply_adjoint(y).expect("dims"))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SuperOp) -> Result<SuperOp> {
        if self.dims.1 != next.dims.0 {
            return Err(Error::dims(format!("input dim {}", self.dims.1), format!("input dim {}", next.dims.0)));
        }
        let t = &next.transfer * &self.transfer;
        Ok(SuperOp::from_transfer(t, (self.dims.0, next.dims.1)))
    }

    fn from_transfer(t: ComplexMatrix, dims: (usize, usize)) -> SuperOp {
        let (di, d_out) = dims;
        let eta = ComplexMatrix::from_fn(di * d_out, di * d_out, |r, s| {
            let (i, k) = (r / d_out, r % d_out);
            let (j, l) = (s / d_out, s % d_out);
            t[(k * d_out + l, i * di + j)]
        });
        SuperOp::from_choi_unchecked(eta, dims)
    }

    /// `Φ ⊗ Ψ` acting on `A A' → B B'`.
    pub fn tensor(&self, other: &SuperOp) -> SuperOp {
        let eta = tensor_regroup(&self.choi, self.dims, &other.choi, other.dims);
        SuperOp::from_choi_unchecked(eta, (self.dims.0 * other.dims.0, self.dims.1 * other.dims.1))
    }

    pub fn tensor_power(&self, n: usize, cap: usize) -> Result<SuperOp> {
        if n == 0 {
            return Err(Error::param("tensor power must be at least 1"));
        }
        let total = checked_pow(self.dims.0 * self.dims.1, n);
        if total > cap {
            return Err(Error::DimCap { dim: total, cap });
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        Ok(acc)
    }

    /// `I_d ⊗ Φ` with the ancilla as the first factor.
    pub fn with_ancilla(&self, d: usize) -> SuperOp {
        identity_channel(d).tensor(self)
    }

    /// Kraus operators from the spectral decomposition of the Choi matrix.
    pub fn kraus(&self) -> Result<Vec<ComplexMatrix>> {
        if !self.is_cp {
            return Err(Error::NotCptp("Kraus form needs a completely positive map".into()));
        }
        let (di, d_out) = self.dims;
        let (vals, vecs) = matcore::hermitian_eigen(&self.choi);
        let top = vals.last().copied().unwrap_or(0.0);
        let mut out = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            if l > matcore::RANK_CUTOFF * top {
                let s = l.sqrt();
                out.push(ComplexMatrix::from_fn(d_out, di, |b, a| vecs[(a * d_out + b, k)] * s));
            }
        }
        Ok(out)
    }

    /// True when the Choi matrix is diagonal in the product basis.
    pub fn is_classical(&self) -> bool {
        let n = self.choi.nrows();
        let scale = max_abs(&self.choi).max(1e-300);
        (0..n).all(|r| (0..n).all(|s| r == s || self.choi[(r, s)].norm() <= 1e-12 * scale))
    }
}

fn apply_transfer(t: &ComplexMatrix, x: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
    let v = nalgebra::DVector::from_vec(matcore::vec_row_major(x));
    let w = t * v;
    matcore::unvec_row_major(w.as_slice(), d_out, d_out)
}

/// Choi matrix of the map described by its action on matrix units.
pub fn map_to_choi(d_in: usize, d_out: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let mut eta = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            let out = f(&matrix_unit(d_in, i, j));
            for k in 0..d_out {
                for l in 0..d_out {
                    eta[(i * d_out + k, j * d_out + l)] = out[(k, l)];
                }
            }
        }
    }
    eta
}

pub fn choi_to_map(eta: ComplexMatrix, dims: (usize, usize)) -> Result<SuperOp> {
    SuperOp::from_choi(eta, dims)
}

/// Exponents of the tilde normalisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TildeParams {
    pub p: PValue,
    pub q: PValue,
}

impl TildeParams {
    pub fn new(p: PValue, q: PValue) -> Self {
        TildeParams { p, q }
    }
}

/// `X ↦ τ^{α/2} X τ^{α/2}`.
pub fn gamma_conj(tau: &ComplexMatrix, alpha: f64, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = frac_power(tau, alpha / 2.0)?;
    if x.shape() != h.shape() {
        return Err(Error::dims(format!("{}x{}", h.nrows(), h.ncols()), format!("{}x{}", x.nrows(), x.ncols())));
    }
    Ok(&h * x * &h)
}

/// `Γ_τ^α` as a super-operator.
pub fn gamma_map(tau: &ComplexMatrix, alpha: f64) -> Result<SuperOp> {
    let h = frac_power(tau, alpha / 2.0)?;
    let d = h.nrows();
    Ok(SuperOp::from_fn(d, d, |x| &h * x * &h))
}

/// `(ρ_A^{-1/2p} ⊗ ρ_B^{-1/2q}) ρ (ρ_A^{-1/2p} ⊗ ρ_B^{-1/2q})`.
pub fn tilde_state(rho: &BipartiteState, tp: TildeParams) -> ComplexMatrix {
    let a = frac_power(&rho.marginal_a(), -tp.p.recip() / 2.0).expect("marginal is PSD");
    let b = frac_power(&rho.marginal_b(), -tp.q.recip() / 2.0).expect("marginal is PSD");
    let w = a.kronecker(&b);
    matcore::hermitian_part(&(&w * rho.matrix() * &w))
}

/// `Ω_{ρ̃}` for the tilde state.
pub fn tilde_map(rho: &BipartiteState, tp: TildeParams) -> SuperOp {
    SuperOp::from_choi_unchecked(tilde_state(rho, tp), rho.dims())
}

/// `Φ̃ = Γ_{Φ(τ)}^{-1/q} ∘ Φ ∘ Γ_τ^{1/p}`.
pub fn tilde_channel(phi: &SuperOp, tau: &ComplexMatrix, tp: TildeParams) -> Result<SuperOp> {
    if !phi.is_cptp() {
        return Err(Error::NotCptp("tilde channel needs a CPTP map".into()));
    }
    let (di, _) = phi.dims();
    if tau.shape() != (di, di) {
        return Err(Error::dims(format!("{di}x{di}"), format!("{}x{}", tau.nrows(), tau.ncols())));
    }
    let t = trace(tau);
    if (t.re - 1.0).abs() > TRACE_TOL || !is_psd(tau, matcore::PSD_TOL) {
        return Err(Error::param("tau must be a density matrix"));
    }
    let out = phi.apply(tau)?;
    let pre = gamma_map(tau, tp.p.recip())?;
    let post = gamma_map(&out, -tp.q.recip())?;
    pre.then(phi)?.then(&post)
}

/// `(I ⊗ Φ)(ρ)` or `(Φ ⊗ I)(ρ)`.
pub fn local_apply(rho: &BipartiteState, phi: &SuperOp, side: Subsystem) -> Result<BipartiteState> {
    if !phi.is_cptp() {
        return Err(Error::NotCptp("local operation must be CPTP".into()));
    }
    let (da, db) = rho.dims();
    let (di, d_out) = phi.dims();
    let (full, dims) = match side {
        Subsystem::B => {
            if di != db {
                return Err(Error::dims(format!("channel input {db}"), format!("channel input {di}")));
            }
            (identity_channel(da).tensor(phi), (da, d_out))
        }
        Subsystem::A => {
            if di != da {
                return Err(Error::dims(format!("channel input {da}"), format!("channel input {di}")));
            }
            (phi.tensor(&identity_channel(db)), (d_out, db))
        }
    };
    let out = full.apply(rho.matrix())?;
    BipartiteState::from_unnormalized(matcore::hermitian_part(&out), dims)
}

pub fn identity_channel(d: usize) -> SuperOp {
    SuperOp::from_fn(d, d, |x| x.clone())
}

/// `X ↦ α X + (1-α) tr(X) I/d`.
pub fn depolarizing(alpha: f64, d: usize) -> Result<SuperOp> {
    if !(0.0..=1.0).contains(&alpha) || d == 0 {
        return Err(Error::param(format!("depolarizing needs alpha in [0,1] and d >= 1, got {alpha}, {d}")));
    }
    let id = identity(d) / c(d as f64, 0.0);
    Ok(SuperOp::from_fn(d, d, |x| x * c(alpha, 0.0) + &id * (trace(x) * (1.0 - alpha))))
}

/// `X ↦ tr(X) σ`.
pub fn replacement_channel(d_in: usize, sigma: &ComplexMatrix) -> SuperOp {
    SuperOp::from_fn(d_in, sigma.nrows(), |x| sigma * trace(x))
}

fn bell_projector() -> ComplexMatrix {
    let mut psi = ComplexMatrix::zeros(4, 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    psi[(0, 0)] = c(s, 0.0);
    psi[(3, 0)] = c(s, 0.0);
    &psi * psi.adjoint()
}

/// `(1-α) I/4 + α |ψ⟩⟨ψ|` with `|ψ⟩ = (|00⟩ + |11⟩)/√2`.
pub fn bell_depolarized(alpha: f64) -> Result<BipartiteState> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha must lie in [0,1], got {alpha}")));
    }
    let rho = identity(4) * c((1.0 - alpha) / 4.0, 0.0) + bell_projector() * c(alpha, 0.0);
    BipartiteState::new(rho, (2, 2))
}

/// Uniform distribution on `{00, 01, 10}`.
pub fn zeta_state() -> BipartiteState {
    let t = 1.0 / 3.0;
    classical_state(&[vec![t, t], vec![t, 0.0]]).expect("valid pmf")
}

/// Diagonal state with `P(a, b) = pmf[a][b]`.
pub fn classical_state(pmf: &[Vec<f64>]) -> Result<BipartiteState> {
    let da = pmf.len();
    let db = pmf.first().map(|r| r.len()).unwrap_or(0);
    if da == 0 || db == 0 || pmf.iter().any(|r| r.len() != db) {
        return Err(Error::param("pmf must be a non-empty rectangular table"));
    }
    if pmf.iter().flatten().any(|&x| !(x >= 0.0)) {
        return Err(Error::param("pmf entries must be non-negative"));
    }
    let total: f64 = pmf.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("pmf sums to {total}, expected 1")));
    }
    let diag: Vec<f64> = pmf.iter().flatten().map(|x| x / total).collect();
    BipartiteState::new(matcore::diag_real(&diag), (da, db))
}

/// Classical channel `|i⟩⟨j| ↦ δ_ij Σ_k w[i][k] |k⟩⟨k|` with row-stochastic `w`.
pub fn classical_channel(w: &[Vec<f64>]) -> Result<SuperOp> {
    let di = w.len();
    let d_out = w.first().map(|r| r.len()).unwrap_or(0);
    if di == 0 || d_out == 0 || w.iter().any(|r| r.len() != d_out) {
        return Err(Error::param("stochastic matrix must be non-empty and rectangular"));
    }
    for row in w {
        if row.iter().any(|&x| !(x >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::param("rows of the stochastic matrix must be probability vectors"));
        }
    }
    let mut eta = ComplexMatrix::zeros(di * d_out, di * d_out);
    for i in 0..di {
        for k in 0..d_out {
            eta[(i * d_out + k, i * d_out + k)] = c(w[i][k], 0.0);
        }
    }
    SuperOp::from_choi(eta, (di, d_out))
}

/// `Σ_i c_i |ii⟩` normalised, with Schmidt coefficients `c`.
pub fn pure_state(coeffs: &[f64]) -> Result<BipartiteState> {
    let d = coeffs.len();
    let norm: f64 = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
    if d == 0 || !(norm > 0.0) || coeffs.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("Schmidt coefficients must be finite and not all zero"));
    }
    let mut psi = ComplexMatrix::zeros(d * d, 1);
    for (i, &x) in coeffs.iter().enumerate() {
        psi[(i * d + i, 0)] = c(x / norm, 0.0);
    }
    BipartiteState::from_unnormalized(&psi * psi.adjoint(), (d, d))
}

pub fn product_state(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<BipartiteState> {
    BipartiteState::from_unnormalized(a.kronecker(b), (a.nrows(), b.nrows()))
}

/// Full-rank random state from the Ginibre ensemble.
pub fn random_state(dims: (usize, usize), seed: u64) -> BipartiteState {
    let mut r = rng::seeded(seed);
    let n = dims.0 * dims.1;
    BipartiteState::from_unnormalized(rng::random_psd(&mut r, n, n), dims).expect("Ginibre state is valid")
}

/// Random pure state on `d_A ⊗ d_B`.
pub fn random_pure_state(dims: (usize, usize), seed: u64) -> BipartiteState {
    let mut r = rng::seeded(seed);
    BipartiteState::from_unnormalized(rng::random_psd(&mut r, dims.0 * dims.1, 1), dims).expect("valid")
}

/// `ρ_A ⊗ ρ_B` with independent random full-rank factors.
pub fn random_product_state(dims: (usize, usize), seed: u64) -> BipartiteState {
    let mut r = rng::seeded(seed);
    let a = rng::random_psd(&mut r, dims.0, dims.0);
    let b = rng::random_psd(&mut r, dims.1, dims.1);
    product_state(&a, &b).expect("valid")
}

/// Channel from a Haar-random isometry `A → B ⊗ E` with `d_E = d_in · d_out`.
pub fn random_cptp(dims: (usize, usize), seed: u64) -> SuperOp {
    let (di, d_out) = dims;
    let de = di * d_out;
    let mut r = rng::seeded(seed);
    let v = rng::haar_isometry(&mut r, d_out * de, di);
    let kraus: Vec<ComplexMatrix> = (0..de)
        .map(|e| ComplexMatrix::from_fn(d_out, di, |b, a| v[(b * de + e, a)]))
        .collect();
    SuperOp::from_kraus(&kraus).expect("non-empty")
}

/// Random completely positive map with Choi matrix `G G†`, not trace preserving.
pub fn random_cp(dims: (usize, usize), seed: u64) -> SuperOp {
    let mut r = rng::seeded(seed);
    let n = dims.0 * dims.1;
    let g = rng::ginibre(&mut r, n, n);
    SuperOp::from_choi_unchecked(matcore::hermitian_part(&(&g * g.adjoint())), dims)
}

/// The unnormalised maximally entangled projector `|χ⟩⟨χ|`.
pub fn max_entangled(d: usize) -> ComplexMatrix {
    let mut chi = ComplexMatrix::zeros(d * d, 1);
    for i in 0..d {
        chi[(i * d + i, 0)] = Complex64::new(1.0, 0.0);
    }
    &chi * chi.adjoint()
}

/// The complex conjugate `ρ*` in the computational basis.
pub fn conjugate(x: &ComplexMatrix) -> ComplexMatrix {
    basis_conjugate(x)
}
