//! Schatten norms and the `(t,p)` norms on bipartite operators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matcore::{self, c, hermitian_eigen, identity, is_hermitian, partial_trace, ComplexMatrix, Subsystem};
use crate::opnorms::{Bound, NormEstimate};
use crate::optim;
use crate::rng;

/// A Schatten exponent in `[1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PValue(f64);

impl PValue {
    pub const ONE: PValue = PValue(1.0);
    pub const TWO: PValue = PValue(2.0);
    pub const INFINITY: PValue = PValue(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::param(format!("exponent must lie in [1, inf], got {p}")));
        }
        Ok(PValue(p))
    }

    /// Builds `p` from `1/p ∈ [0, 1]`.
    pub fn from_recip(inv: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&inv) {
            return Err(Error::param(format!("reciprocal exponent must lie in [0, 1], got {inv}")));
        }
        Ok(if inv == 0.0 { PValue::INFINITY } else { PValue(1.0 / inv) })
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, zero at infinity.
    pub fn recip(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// Hölder conjugate `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> PValue {
        if self.0 == 1.0 {
            PValue::INFINITY
        } else if self.is_infinite() {
            PValue::ONE
        } else {
            PValue(self.0 / (self.0 - 1.0))
        }
    }
}

pub fn holder_conjugate(p: PValue) -> PValue {
    p.conjugate()
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for PValue {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(PValue::INFINITY),
            t => {
                let v: f64 = t.parse().map_err(|_| Error::Parse(format!("bad exponent '{s}'")))?;
                PValue::new(v)
            }
        }
    }
}

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Num(x) => PValue::new(x),
            Raw::Str(s) => s.parse(),
        };
        v.map_err(serde::de::Error::custom)
    }
}

/// Settings shared by the iterative norm solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOpts {
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative change per iteration regarded as stalled.
    pub rel_tol: f64,
    /// Consecutive stalled iterations required to stop.
    pub stall_window: usize,
    pub seed: u64,
}

impl Default for OptimizerOpts {
    fn default() -> Self {
        OptimizerOpts {
            restarts: 32,
            max_iters: 5000,
            rel_tol: 1e-10,
            stall_window: 5,
            seed: 0,
        }
    }
}

impl OptimizerOpts {
    /// Defaults for the `(t,p)` norms, which use fewer restarts.
    pub fn tp_default() -> Self {
        OptimizerOpts {
            restarts: 16,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

/// `ℓ_p` norm of a non-negative vector, scaled to avoid overflow.
pub fn lp_norm(s: &[f64], p: PValue) -> f64 {
    if s.iter().any(|x| x.is_nan()) {
        return f64::NAN;
    }
    let top = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 || p.is_infinite() {
        return top;
    }
    let pp = p.get();
    top * s.iter().map(|x| (x.abs() / top).powf(pp)).sum::<f64>().powf(1.0 / pp)
}

/// Singular values of `x`, taking the eigenvalue shortcut for Hermitian input.
pub fn singular_values_fast(x: &ComplexMatrix) -> Vec<f64> {
    if x.is_square() && is_hermitian(x, 1e-13) {
        matcore::hermitian_eigenvalues(x).iter().map(|l| l.abs()).collect()
    } else {
        matcore::singular_values(x)
    }
}

pub fn schatten_norm(x: &ComplexMatrix, p: PValue) -> f64 {
    lp_norm(&singular_values_fast(x), p)
}

/// Profile `f` with `Σ f_i s_i = ‖s‖_{r'}` and `‖f‖_r = 1`.
fn dual_profile(s: &[f64], r: PValue) -> Vec<f64> {
    let top = s.iter().fold(0.0f64, |m, x| m.max(*x));
    if r.is_infinite() {
        return vec![1.0; s.len()];
    }
    if top == 0.0 {
        let v = (s.len() as f64).powf(-1.0 / r.get());
        return vec![v; s.len()];
    }
    if r.get() == 1.0 {
        let k = s.iter().position(|&x| x == top).unwrap_or(0);
        let mut f = vec![0.0; s.len()];
        f[k] = 1.0;
        return f;
    }
    let e = r.conjugate().get() - 1.0;
    let f: Vec<f64> = s.iter().map(|&x| (x / top).powf(e)).collect();
    let n = lp_norm(&f, r);
    f.into_iter().map(|x| x / n).collect()
}

/// The maximiser of `Re tr(A† G)` over `‖A‖_r ≤ 1`.
pub fn dual_element(g: &ComplexMatrix, r: PValue) -> ComplexMatrix {
    if g.is_square() && is_hermitian(g, 1e-13) {
        let (vals, vecs) = hermitian_eigen(g);
        let abs: Vec<f64> = vals.iter().map(|l| l.abs()).collect();
        let f = dual_profile(&abs, r);
        let signed: Vec<f64> = vals.iter().zip(&f).map(|(l, f)| if *l < 0.0 { -f } else { *f }).collect();
        let mut out = ComplexMatrix::zeros(g.nrows(), g.ncols());
        for (k, &w) in signed.iter().enumerate() {
            if w != 0.0 {
                let v = vecs.column(k);
                out += (&v * v.adjoint()) * c(w, 0.0);
            }
        }
        return matcore::hermitian_part(&out);
    }
    let svd = g.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let f = dual_profile(&s, r);
    let mut us = u.clone();
    for (k, &w) in f.iter().enumerate() {
        for i in 0..us.nrows() {
            us[(i, k)] *= w;
        }
    }
    us * vt
}

/// `(U ⊗ I) X (V ⊗ I)` with `U, V` on the first factor.
pub(crate) fn sandwich_first(u: &ComplexMatrix, x: &ComplexMatrix, v: &ComplexMatrix, da: usize) -> ComplexMatrix {
    let id = identity(da);
    let ul = u.kronecker(&id);
    let vr = v.kronecker(&id);
    ul * x * vr
}

fn normalized(x: ComplexMatrix, r: PValue) -> ComplexMatrix {
    let n = schatten_norm(&x, r);
    if n > 0.0 {
        x / c(n, 0.0)
    } else {
        x
    }
}

/// Parameters of an `n×n` Hermitian matrix.
pub(crate) fn hermitian_from_params(x: &[f64], n: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = c(x[k], 0.0);
        k += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            h[(i, j)] = c(x[k], x[k + 1]);
            h[(j, i)] = c(x[k], -x[k + 1]);
            k += 2;
        }
    }
    h
}

/// Density `e^H / tr e^H`.
pub(crate) fn gibbs(h: &ComplexMatrix) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let top = vals.last().copied().unwrap_or(0.0);
    let z: f64 = vals.iter().map(|l| (l - top).exp()).sum();
    matcore::spectral_apply(&vals, &vecs, |l| (l - top).exp() / z)
}

fn density_power(sigma: &ComplexMatrix, alpha: f64) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(sigma);
    matcore::spectral_apply(&vals, &vecs, |l| l.max(1e-300).powf(alpha))
}

/// The `(t,p)` norm of `X` on `C ⊗ A`, with `dims = (d_C, d_A)`.
///
/// For `t = p` this is the Schatten `p` norm. For `t > p` the norm is a
/// supremum over local weights and the estimate is a lower bound; for
/// `t < p` it is an infimum and the estimate is an upper bound. Lower
/// bounds carry a witness `Y` with `‖Y‖_(t',p') ≤ 1` and `Re tr(Y†X)` equal
/// to the estimate.
pub fn vector_norm_tp(x: &ComplexMatrix, dims: (usize, usize), t: PValue, p: PValue, opts: &OptimizerOpts) -> Result<NormEstimate> {
    let (dc, da) = dims;
    if x.nrows() != dc * da || x.ncols() != dc * da {
        return Err(Error::dims(format!("{}x{}", dc * da, dc * da), format!("{}x{}", x.nrows(), x.ncols())));
    }
    if t == p || dc == 1 {
        return Ok(NormEstimate::exact(schatten_norm(x, p)));
    }
    if t > p {
        Ok(tp_sup(x, dims, t, p, opts, None).0)
    } else {
        tp_inf(x, dims, t, p, opts)
    }
}

/// Outer weight exponent `2r` for the sup or inf form.
fn weight_exponent(t: PValue, p: PValue) -> PValue {
    let inv_r = (t.recip() - p.recip()).abs();
    PValue::from_recip((inv_r / 2.0).min(1.0)).unwrap_or(PValue::INFINITY)
}

/// Warm-start data for repeated sup-form solves.
#[derive(Clone, Debug)]
pub(crate) struct TpWarm {
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
}

/// Alternating maximisation of `Re tr(W† (U⊗I) X (V⊗I))`.
pub(crate) fn tp_sup(
    x: &ComplexMatrix,
    dims: (usize, usize),
    t: PValue,
    p: PValue,
    opts: &OptimizerOpts,
    warm: Option<&TpWarm>,
) -> (NormEstimate, TpWarm) {
    let (dc, da) = dims;
    let r2 = weight_exponent(t, p);
    let pc = p.conjugate();
    let mut rng = rng::stream(opts.seed, 0x7e57);
    let mut starts: Vec<(ComplexMatrix, ComplexMatrix)> = Vec::new();
    if let Some(w) = warm {
        starts.push((w.u.clone(), w.v.clone()));
    }
    starts.push((normalized(identity(dc), r2), normalized(identity(dc), r2)));
    let extra = opts.restarts.saturating_sub(starts.len());
    for _ in 0..extra {
        let u = rng::ginibre(&mut rng, dc, dc);
        let v = rng::ginibre(&mut rng, dc, dc);
        starts.push((normalized(u, r2), normalized(v, r2)));
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_uv = starts[0].clone();
    let mut best_conv = false;
    for (mut u, mut v) in starts {
        let mut val = schatten_norm(&sandwich_first(&u, x, &v, da), p);
        let mut stalls = 0;
        let mut conv = false;
        for _ in 0..opts.max_iters {
            let z = sandwich_first(&u, x, &v, da);
            let w = dual_element(&z, pc);
            let xv = x * v.kronecker(&identity(da));
            let g = partial_trace(&(xv * w.adjoint()), dims, Subsystem::B).unwrap();
            u = dual_element(&g.adjoint(), r2);
            let wu = w.adjoint() * u.kronecker(&identity(da)) * x;
            let h = partial_trace(&wu, dims, Subsystem::B).unwrap();
            v = dual_element(&h.adjoint(), r2);
            let nv = schatten_norm(&sandwich_first(&u, x, &v, da), p);
            let rel = (nv - val).abs() / nv.abs().max(1e-300);
            val = nv;
            if rel < opts.rel_tol {
                stalls += 1;
                if stalls >= opts.stall_window {
                    conv = true;
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        if val > best {
            best = val;
            best_uv = (u, v);
            best_conv = conv;
        }
    }
    // Y = (U†⊗I) W (V†⊗I) has ‖Y‖_(t',p') ≤ 1 and Re tr(Y† X) = best.
    let w = dual_element(&sandwich_first(&best_uv.0, x, &best_uv.1, da), pc);
    let y = sandwich_first(&best_uv.0.adjoint(), &w, &best_uv.1.adjoint(), da);
    let est = NormEstimate {
        value: best,
        bound: Bound::Lower,
        restarts_used: opts.restarts.max(1),
        converged: best_conv,
        witness: Some(y),
    };
    (est, TpWarm { u: best_uv.0, v: best_uv.1 })
}

/// Infimum form, minimised over positive weights by L-BFGS.
fn tp_inf(x: &ComplexMatrix, dims: (usize, usize), t: PValue, p: PValue, opts: &OptimizerOpts) -> Result<NormEstimate> {
    let (dc, da) = dims;
    let alpha = -(t.recip() - p.recip()) / 2.0;
    let psd = matcore::is_psd(x, 1e-12);
    let np = dc * dc;
    let nparams = if psd { np } else { 2 * np };
    let cost = |th: &[f64]| -> f64 {
        let s1 = gibbs(&hermitian_from_params(&th[..np], dc));
        let a = density_power(&s1, alpha);
        let b = if psd {
            a.clone()
        } else {
            density_power(&gibbs(&hermitian_from_params(&th[np..], dc)), alpha)
        };
        schatten_norm(&sandwich_first(&a, x, &b, da), p)
    };
    let mut rng = rng::stream(opts.seed, 0x1f);
    let mut results = Vec::new();
    for k in 0..opts.restarts.max(1) {
        let x0: Vec<f64> = if k == 0 {
            vec![0.0; nparams]
        } else {
            (0..nparams).map(|_| 0.8 * rng::normal(&mut rng)).collect()
        };
        let (_, v) = optim::minimize(cost, x0, opts.max_iters as u64);
        results.push(v);
    }
    let best = results.iter().cloned().fold(f64::INFINITY, f64::min);
    let agree = results.iter().filter(|&&v| (v - best).abs() <= 1e-7 * best.abs().max(1e-300)).count();
    Ok(NormEstimate {
        value: best,
        bound: Bound::Upper,
        restarts_used: results.len(),
        converged: agree >= 2 || results.len() == 1,
        witness: None,
    })
}
