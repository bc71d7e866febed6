//! Hypercontractivity ribbons: membership, boundary tracing, closed forms
//! for the standard families, and structural checks.
//!
//! A point `(p, q')` with `q' ≥ p ≥ 1` belongs to `R^(n)(ρ)` when the map
//! of the tilde state `ρ̃^{(p,q)}`, `q` the conjugate of `q'`, satisfies
//! `‖Ω_ρ̃^{⊗n}‖_{p→q'} ≤ 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{conjugate, local_apply, tilde_channel, tilde_map, BipartiteState, SuperOp, TildeParams};
use crate::correlation::max_correlation;
use crate::error::{Error, Result};
use crate::matcore::{frac_power, max_abs, Subsystem};
use crate::opnorms::{cb_norm, op_norm_until, NormEstimate};
use crate::schatten::{OptimizerOpts, PValue};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RibbonPoint {
    pub p: PValue,
    pub q_prime: PValue,
}

impl RibbonPoint {
    pub fn new(p: PValue, q_prime: PValue) -> Result<Self> {
        if q_prime < p {
            return Err(Error::param(format!("ribbon points need q' >= p, got p={p}, q'={q_prime}")));
        }
        Ok(RibbonPoint { p, q_prime })
    }

    pub fn from_f64(p: f64, q_prime: f64) -> Result<Self> {
        Self::new(PValue::new(p)?, PValue::new(q_prime)?)
    }

    /// `(1/p, 1/q')`.
    pub fn recips(&self) -> (f64, f64) {
        (self.p.recip(), self.q_prime.recip())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RibbonKind {
    /// Plain super-operator norm of the `n`-th tensor power.
    Plain,
    /// Completely bounded norm, independent of `n`.
    Cb,
}

impl std::fmt::Display for RibbonKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RibbonKind::Plain => "plain",
            RibbonKind::Cb => "cb",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RibbonConfig {
    /// Membership means norm at most `1 + tol`.
    pub tol: f64,
    pub tensor_cap: usize,
    pub bisect_iters: usize,
    /// Finite stand-in for `q' = ∞`.
    pub unbounded_q_prime: f64,
    pub cb_d_max: usize,
    pub cb_t: PValue,
    pub opt: OptimizerOpts,
}

impl Default for RibbonConfig {
    fn default() -> Self {
        RibbonConfig {
            tol: 1e-7,
            tensor_cap: 4096,
            bisect_iters: 24,
            unbounded_q_prime: 1e6,
            cb_d_max: 2,
            cb_t: PValue::INFINITY,
            opt: OptimizerOpts::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipResult {
    pub point: RibbonPoint,
    pub n: usize,
    pub kind: RibbonKind,
    pub norm: NormEstimate,
    pub member: bool,
    pub tol: f64,
    /// `q' = ∞` was evaluated at the finite stand-in.
    pub numerically_unbounded: bool,
}

fn effective_q_prime(point: &RibbonPoint, cfg: &RibbonConfig) -> (PValue, bool) {
    if point.q_prime.is_infinite() {
        let q = PValue::new(cfg.unbounded_q_prime.max(point.p.get())).unwrap_or(PValue::INFINITY);
        (q, true)
    } else {
        (point.q_prime, false)
    }
}

fn membership(rho: &BipartiteState, point: RibbonPoint, n: usize, kind: RibbonKind, cfg: &RibbonConfig, early_exit: bool) -> Result<MembershipResult> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let (qp, unbounded) = effective_q_prime(&point, cfg);
    let tp = TildeParams::new(point.p, qp.conjugate());
    let norm = match kind {
        RibbonKind::Plain => {
            let rn = rho.tensor_power(n, cfg.tensor_cap)?;
            let map = tilde_map(&rn, tp);
            let hint = frac_power(&conjugate(&rn.marginal_a()), point.p.recip())?;
            let stop = early_exit.then_some(1.0 + cfg.tol);
            op_norm_until(&map, point.p, qp, &cfg.opt, &[hint], stop)
        }
        RibbonKind::Cb => {
            let map = tilde_map(rho, tp);
            cb_norm(&map, point.p, qp, cfg.cb_d_max, cfg.cb_t, &cfg.opt).estimate
        }
    };
    Ok(MembershipResult {
        point,
        n: if kind == RibbonKind::Cb { 1 } else { n },
        kind,
        member: norm.value <= 1.0 + cfg.tol,
        norm,
        tol: cfg.tol,
        numerically_unbounded: unbounded,
    })
}

/// Decide whether `point` lies in `R^(n)(ρ)` (or the CB ribbon).
pub fn ribbon_member(rho: &BipartiteState, point: RibbonPoint, n: usize, kind: RibbonKind, cfg: &RibbonConfig) -> Result<MembershipResult> {
    membership(rho, point, n, kind, cfg, false)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundarySample {
    pub p: PValue,
    pub q_prime: PValue,
    pub inv_p: f64,
    pub inv_q_prime: f64,
    pub norm_value: f64,
    /// Membership held up to the finite stand-in for `q' = ∞`.
    pub numerically_unbounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RibbonBoundary {
    pub samples: Vec<BoundarySample>,
    pub n: usize,
    pub kind: RibbonKind,
    /// Width of the final bisection bracket in `1/q'`.
    pub bisect_tol: f64,
}

impl RibbonBoundary {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,q_prime,inv_p,inv_q_prime,norm_value,n,kind\n");
        for r in &self.samples {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.p, r.q_prime, r.inv_p, r.inv_q_prime, r.norm_value, self.n, self.kind
            ));
        }
        s
    }
}

/// Largest `q'` in the ribbon for each `p`, by bisection on `1/q' ∈ (0, 1/p]`.
///
/// Reported samples sit on the member side of the final bracket.
pub fn ribbon_trace(rho: &BipartiteState, p_grid: &[f64], n: usize, kind: RibbonKind, cfg: &RibbonConfig) -> Result<RibbonBoundary> {
    if p_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("p grid must be ascending"));
    }
    let ps: Vec<PValue> = p_grid.iter().map(|&p| PValue::new(p)).collect::<Result<_>>()?;
    if kind == RibbonKind::Plain {
        rho.tensor_power(n, cfg.tensor_cap)?;
    }
    let x_min = 1.0 / cfg.unbounded_q_prime;
    let samples: Vec<Result<BoundarySample>> = ps.par_iter().map(|&p| trace_one(rho, p, n, kind, cfg, x_min)).collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let width = ps
        .iter()
        .map(|p| (p.recip() - x_min).max(0.0) / 2f64.powi(cfg.bisect_iters as i32))
        .fold(0.0, f64::max);
    Ok(RibbonBoundary {
        samples,
        n: if kind == RibbonKind::Cb { 1 } else { n },
        kind,
        bisect_tol: width,
    })
}

fn sample_at(p: PValue, x: f64, norm: f64, unbounded: bool) -> BoundarySample {
    let q_prime = if unbounded { PValue::INFINITY } else { PValue::from_recip(x).unwrap_or(PValue::INFINITY) };
    BoundarySample {
        p,
        q_prime,
        inv_p: p.recip(),
        inv_q_prime: if unbounded { 0.0 } else { x },
        norm_value: norm,
        numerically_unbounded: unbounded,
    }
}

fn trace_one(rho: &BipartiteState, p: PValue, n: usize, kind: RibbonKind, cfg: &RibbonConfig, x_min: f64) -> Result<BoundarySample> {
    let hi0 = p.recip();
    let probe = |x: f64, early: bool| -> Result<MembershipResult> {
        let qp = if x <= x_min { PValue::INFINITY } else { PValue::from_recip(x)? };
        membership(rho, RibbonPoint::new(p, if qp < p { p } else { qp })?, n, kind, cfg, early)
    };
    if hi0 <= x_min {
        let m = probe(x_min, false)?;
        return Ok(sample_at(p, x_min, m.norm.value, true));
    }
    let top = probe(x_min, false)?;
    if top.member {
        return Ok(sample_at(p, x_min, top.norm.value, true));
    }
    let (mut lo, mut hi) = (x_min, hi0);
    let mut hi_norm = 1.0;
    for _ in 0..cfg.bisect_iters {
        let mid = 0.5 * (lo + hi);
        let m = probe(mid, true)?;
        if m.member {
            hi = mid;
            hi_norm = m.norm.value;
        } else {
            lo = mid;
        }
    }
    if hi == hi0 {
        hi_norm = probe(hi0, false)?.norm.value;
    }
    Ok(sample_at(p, hi, hi_norm, false))
}

/// Families with closed-form ribbons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "family", content = "alpha")]
pub enum AnalyticFamily {
    Product,
    PureEntangled,
    BellDepolarized(f64),
}

impl std::str::FromStr for AnalyticFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "product" {
            return Ok(AnalyticFamily::Product);
        }
        if t == "pure" || t == "pure-entangled" || t == "pure_entangled" {
            return Ok(AnalyticFamily::PureEntangled);
        }
        if let Some(a) = t.strip_prefix("bell-depolarized:").or_else(|| t.strip_prefix("bell_depolarized:")) {
            let a: f64 = a.parse().map_err(|_| Error::Parse(format!("bad alpha in '{s}'")))?;
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::param(format!("alpha must lie in [0,1], got {a}")));
            }
            return Ok(AnalyticFamily::BellDepolarized(a));
        }
        Err(Error::UnknownFamily(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticRibbon {
    pub family: AnalyticFamily,
}

impl AnalyticRibbon {
    /// Largest `q'` in the ribbon at `p` (may be infinite).
    pub fn boundary(&self, p: f64) -> f64 {
        match self.family {
            AnalyticFamily::Product => f64::INFINITY,
            AnalyticFamily::PureEntangled => p,
            AnalyticFamily::BellDepolarized(a) => {
                if a == 0.0 || p.is_infinite() {
                    f64::INFINITY
                } else {
                    1.0 + (p - 1.0) / (a * a)
                }
            }
        }
    }

    pub fn contains(&self, point: &RibbonPoint) -> bool {
        point.q_prime.get() <= self.boundary(point.p.get())
    }
}

pub fn analytic_ribbon(family: AnalyticFamily) -> AnalyticRibbon {
    AnalyticRibbon { family }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub forward: MembershipResult,
    /// Membership of `(q, p')` for the state with `A` and `B` exchanged.
    pub reverse: MembershipResult,
    pub agree: bool,
    pub norm_gap: f64,
}

/// Compares `(p, q') ∈ R_{A→B}` against `(q, p') ∈ R_{B→A}`.
pub fn duality_check(rho: &BipartiteState, point: RibbonPoint, n: usize, cfg: &RibbonConfig) -> Result<DualityReport> {
    let forward = ribbon_member(rho, point, n, RibbonKind::Plain, cfg)?;
    let (qp, _) = effective_q_prime(&point, cfg);
    let dual = RibbonPoint::new(qp.conjugate(), point.p.conjugate())?;
    let reverse = ribbon_member(&rho.swapped(), dual, n, RibbonKind::Plain, cfg)?;
    Ok(DualityReport {
        agree: forward.member == reverse.member,
        norm_gap: (forward.norm.value - reverse.norm.value).abs(),
        forward,
        reverse,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuBoundSample {
    pub p: PValue,
    pub q_prime: PValue,
    /// `(p-1)/(q'-1)`.
    pub slope: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuBoundReport {
    pub mu: f64,
    pub mu_squared: f64,
    pub samples: Vec<MuBoundSample>,
    pub all_hold: bool,
}

/// `(p-1)/(q'-1)`, with the diagonal and infinite cases resolved.
pub fn ribbon_slope(p: PValue, q_prime: PValue) -> f64 {
    if p == q_prime {
        1.0
    } else if q_prime.is_infinite() {
        0.0
    } else {
        (p.get() - 1.0) / (q_prime.get() - 1.0)
    }
}

/// Checks `(p-1)/(q'-1) ≥ μ² - 1e-6` along a traced boundary.
pub fn mu_bound_check(rho: &BipartiteState, boundary: &RibbonBoundary) -> Result<MuBoundReport> {
    let mu = max_correlation(rho)?.mu;
    let mu2 = mu * mu;
    let samples: Vec<MuBoundSample> = boundary
        .samples
        .iter()
        .map(|s| {
            let slope = ribbon_slope(s.p, s.q_prime);
            MuBoundSample {
                p: s.p,
                q_prime: s.q_prime,
                slope,
                holds: slope >= mu2 - 1e-6,
            }
        })
        .collect();
    Ok(MuBoundReport {
        mu,
        mu_squared: mu2,
        all_hold: samples.iter().all(|s| s.holds),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityEntry {
    pub inv_p: f64,
    pub inv_q_prime: f64,
    pub norm_value: f64,
    pub member: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub midpoints: Vec<ConvexityEntry>,
    pub all_members: bool,
}

/// Midpoints of consecutive boundary samples in `(1/p, 1/q')` must be members.
pub fn convexity_check(rho: &BipartiteState, boundary: &RibbonBoundary, cfg: &RibbonConfig) -> Result<ConvexityReport> {
    let mut out = Vec::new();
    for w in boundary.samples.windows(2) {
        let x = 0.5 * (w[0].inv_p + w[1].inv_p);
        let y = 0.5 * (w[0].inv_q_prime + w[1].inv_q_prime);
        let point = RibbonPoint::new(PValue::from_recip(x)?, PValue::from_recip(y.min(x))?)?;
        let m = ribbon_member(rho, point, boundary.n, boundary.kind, cfg)?;
        out.push(ConvexityEntry {
            inv_p: x,
            inv_q_prime: y,
            norm_value: m.norm.value,
            member: m.member,
        });
    }
    Ok(ConvexityReport {
        all_members: out.iter().all(|e| e.member),
        midpoints: out,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataProcessingEntry {
    pub point: RibbonPoint,
    pub norm_rho: f64,
    pub norm_sigma: f64,
    pub member_rho: bool,
    pub member_sigma: bool,
    pub norm_holds: bool,
    pub implication_holds: bool,
    /// Max entry deviation between `Ω_σ̃` and `Φ̃ ∘ Ω_ρ̃`.
    pub factorization_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataProcessingReport {
    pub entries: Vec<DataProcessingEntry>,
    pub all_hold: bool,
}

/// Ribbon monotonicity under a local channel applied to `B`.
pub fn data_processing_check(rho: &BipartiteState, psi: &SuperOp, points: &[RibbonPoint], n: usize, cfg: &RibbonConfig) -> Result<DataProcessingReport> {
    let sigma = local_apply(rho, psi, Subsystem::B)?;
    let rho_b = rho.marginal_b();
    let mut entries = Vec::new();
    for &point in points {
        let (qp, _) = effective_q_prime(&point, cfg);
        let q = qp.conjugate();
        let tp = TildeParams::new(point.p, q);
        let lhs = tilde_map(&sigma, tp);
        let rhs = tilde_map(rho, tp).then(&tilde_channel(psi, &rho_b, TildeParams::new(q, q))?)?;
        let factorization_error = max_abs(&(lhs.choi() - rhs.choi()));
        let mr = ribbon_member(rho, point, n, RibbonKind::Plain, cfg)?;
        let ms = ribbon_member(&sigma, point, n, RibbonKind::Plain, cfg)?;
        entries.push(DataProcessingEntry {
            point,
            norm_rho: mr.norm.value,
            norm_sigma: ms.norm.value,
            member_rho: mr.member,
            member_sigma: ms.member,
            norm_holds: ms.norm.value <= mr.norm.value + 1e-6,
            implication_holds: !mr.member || ms.member,
            factorization_error,
        });
    }
    Ok(DataProcessingReport {
        all_hold: entries.iter().all(|e| e.norm_holds && e.implication_holds && e.factorization_error <= 1e-9),
        entries,
    })
}
