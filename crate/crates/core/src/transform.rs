//! Necessary conditions for local transformations between bipartite states.
//!
//! Every ribbon point `(p, q')` of the source bounds the joint
//! probabilities any local measurement can produce:
//! `P(i, j) ≤ P(U=i)^{1/p} P(V=j)^{1/q}`. A target violating that bound
//! at some certified point cannot be reached, even asymptotically.

use serde::Serialize;

use crate::channels::BipartiteState;
use crate::error::{Error, Result};
use crate::matcore::{frac_power, hermitian_eigen, hermitian_eigenvalues, is_hermitian, trace, ComplexMatrix};
use crate::ribbon::{ribbon_trace, RibbonConfig, RibbonKind, RibbonPoint};
use crate::schatten::PValue;

/// Violations must exceed this many nats to count.
pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Impossible,
    /// The test is one-sided; this never means "possible".
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub p: PValue,
    pub q_prime: PValue,
    pub k: Option<f64>,
    /// Target cell `(i, j)` whose bound fails.
    pub cell: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityVerdict {
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
    /// Largest violation in nats; non-positive when no point violates.
    pub margin: f64,
    /// `None` when the points are known to lie in the full ribbon; `Some(n)`
    /// when they only lie in `R^(n)`, so impossibility is certified for up to `n` copies.
    pub certified_copies: Option<usize>,
}

impl FeasibilityVerdict {
    pub fn violated_point(&self) -> Option<RibbonPoint> {
        self.certificate.map(|c| RibbonPoint {
            p: c.p,
            q_prime: c.q_prime,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PovmReport {
    pub lhs: f64,
    /// `tr(ρ_A M^p)^{1/p} tr(ρ_B N^q)^{1/q}`.
    pub rhs_powers: f64,
    /// `tr(ρ_A M)^{1/p} tr(ρ_B N)^{1/q}`.
    pub rhs_linear: f64,
    pub slack_powers: f64,
    pub slack_linear: f64,
    pub holds: bool,
}

fn check_effect(m: &ComplexMatrix, name: &str) -> Result<()> {
    if !m.is_square() || !is_hermitian(m, 1e-10) {
        return Err(Error::NotEffect(format!("{name} is not Hermitian")));
    }
    let v = hermitian_eigenvalues(m);
    if v.first().is_some_and(|&l| l < -1e-10) || v.last().is_some_and(|&l| l > 1.0 + 1e-10) {
        return Err(Error::NotEffect(format!("{name} has eigenvalues outside [0, 1]")));
    }
    Ok(())
}

/// `tr(σ M^r)^{1/r}`, with the `r = ∞` limit taken on the support of `σ`.
fn weighted_power(sigma: &ComplexMatrix, m: &ComplexMatrix, r: PValue) -> f64 {
    if r.is_infinite() {
        let (vals, vecs) = hermitian_eigen(m);
        return vals
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let v = vecs.column(*k);
                (v.adjoint() * sigma * v)[(0, 0)].re > 1e-12
            })
            .map(|(_, &l)| l.max(0.0))
            .fold(0.0, f64::max);
    }
    let mp = frac_power(m, r.get()).unwrap_or_else(|_| m.clone());
    trace(&(sigma * mp)).re.max(0.0).powf(r.recip())
}

/// Both forms of the POVM bound at a caller-certified point of `R^(1)(ρ)`.
pub fn povm_bound_check(rho: &BipartiteState, m: &ComplexMatrix, n: &ComplexMatrix, point: RibbonPoint) -> Result<PovmReport> {
    let (da, db) = rho.dims();
    if m.shape() != (da, da) || n.shape() != (db, db) {
        return Err(Error::dims(format!("{da}x{da} and {db}x{db}"), format!("{:?} and {:?}", m.shape(), n.shape())));
    }
    check_effect(m, "M")?;
    check_effect(n, "N")?;
    let q = point.q_prime.conjugate();
    let lhs = trace(&(rho.matrix() * m.kronecker(n))).re;
    let (ra, rb) = (rho.marginal_a(), rho.marginal_b());
    let rhs_powers = weighted_power(&ra, m, point.p) * weighted_power(&rb, n, q);
    let lin = |s: &ComplexMatrix, x: &ComplexMatrix, e: f64| {
        let t = trace(&(s * x)).re.max(0.0);
        if e == 0.0 {
            if t > 0.0 { 1.0 } else { 0.0 }
        } else {
            t.powf(e)
        }
    };
    let rhs_linear = lin(&ra, m, point.p.recip()) * lin(&rb, n, q.recip());
    let slack_powers = rhs_powers - lhs;
    let slack_linear = rhs_linear - lhs;
    Ok(PovmReport {
        lhs,
        rhs_powers,
        rhs_linear,
        slack_powers,
        slack_linear,
        holds: slack_powers >= -1e-10 && slack_linear >= -1e-10,
    })
}

/// `√(1 - ln 2 / ln 3)`.
pub fn depolarized_to_zeta_threshold() -> f64 {
    (1.0 - 2f64.ln() / 3f64.ln()).sqrt()
}

/// Default `k` grid: 200 logarithmic points from `1e-2` to `1e4`.
pub fn default_k_grid() -> Vec<f64> {
    (0..200).map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 199.0)).collect()
}

/// Reduced margin `k(1-α²)/(k+1) · ln 3 - ln 2` at the point `(1+kα², 1+k)`.
fn zeta_margin(alpha: f64, k: f64) -> f64 {
    k * (1.0 - alpha * alpha) / (k + 1.0) * 3f64.ln() - 2f64.ln()
}

fn zeta_certificate(alpha: f64, k: f64, margin: f64) -> Result<FeasibilityVerdict> {
    Ok(FeasibilityVerdict {
        verdict: Verdict::Impossible,
        certificate: Some(Certificate {
            p: PValue::new(1.0 + k * alpha * alpha)?,
            q_prime: PValue::new(1.0 + k)?,
            k: Some(k),
            cell: (0, 1),
        }),
        margin,
        certified_copies: None,
    })
}

/// Can copies of `bell_depolarized(α)` be locally turned into `ζ`?
///
/// Uses the ribbon points `(1 + kα², 1 + k)`, on the grid and in the
/// limit `k → ∞`. When only the limit is violated, a finite `k` with a
/// violation is constructed so the certificate is always a concrete point.
pub fn target_feasibility(alpha: f64, k_grid: Option<&[f64]>) -> Result<FeasibilityVerdict> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha must lie in [0,1], got {alpha}")));
    }
    let default = default_k_grid();
    let grid = k_grid.unwrap_or(&default);
    if grid.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(Error::param("k grid must contain positive finite values"));
    }
    let mut best: Option<(f64, f64)> = None;
    for &k in grid {
        let m = zeta_margin(alpha, k);
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((k, m));
        }
    }
    if let Some((k, m)) = best {
        if m > MARGIN_TOL {
            return zeta_certificate(alpha, k, m);
        }
    }
    let limit = (1.0 - alpha * alpha) * 3f64.ln() - 2f64.ln();
    if limit > 2.0 * MARGIN_TOL {
        // margin(k) = limit - (1-α²) ln3 / (k+1); aim for half the limit
        let k = 2.0 * (1.0 - alpha * alpha) * 3f64.ln() / limit - 1.0;
        let m = zeta_margin(alpha, k);
        if m > MARGIN_TOL {
            return zeta_certificate(alpha, k, m);
        }
    }
    Ok(FeasibilityVerdict {
        verdict: Verdict::Undetermined,
        certificate: None,
        margin: best.map_or(limit, |(_, m)| m.max(limit)),
        certified_copies: None,
    })
}

/// Row sums and column sums of a joint pmf.
fn marginals(target: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = target.len();
    let cols = target.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || target.iter().any(|r| r.len() != cols) {
        return Err(Error::param("target pmf must be a non-empty rectangular table"));
    }
    if target.iter().flatten().any(|&x| !(x >= 0.0)) {
        return Err(Error::param("target pmf entries must be non-negative"));
    }
    let total: f64 = target.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("target pmf sums to {total}")));
    }
    let u = target.iter().map(|r| r.iter().sum()).collect();
    let v = (0..cols).map(|j| target.iter().map(|r| r[j]).sum()).collect();
    Ok((u, v))
}

/// Tests every cell of `target` against every ribbon point.
///
/// `certified_copies` describes the points: `None` when they lie in the
/// full ribbon of the source, `Some(n)` when they were traced for `R^(n)`.
pub fn generic_target_feasibility(points: &[RibbonPoint], target: &[Vec<f64>], certified_copies: Option<usize>) -> Result<FeasibilityVerdict> {
    let (u, v) = marginals(target)?;
    let mut best: Option<(f64, RibbonPoint, (usize, usize))> = None;
    for pt in points {
        let ip = pt.p.recip();
        let iq = 1.0 - pt.q_prime.recip();
        for (i, row) in target.iter().enumerate() {
            for (j, &z) in row.iter().enumerate() {
                if z <= 0.0 {
                    continue;
                }
                let m = z.ln() - ip * u[i].ln() - iq * v[j].ln();
                if best.as_ref().is_none_or(|b| m > b.0) {
                    best = Some((m, *pt, (i, j)));
                }
            }
        }
    }
    let Some((margin, pt, cell)) = best else {
        return Ok(FeasibilityVerdict {
            verdict: Verdict::Undetermined,
            certificate: None,
            margin: f64::NEG_INFINITY,
            certified_copies,
        });
    };
    let impossible = margin > MARGIN_TOL;
    Ok(FeasibilityVerdict {
        verdict: if impossible { Verdict::Impossible } else { Verdict::Undetermined },
        certificate: impossible.then_some(Certificate {
            p: pt.p,
            q_prime: pt.q_prime,
            k: None,
            cell,
        }),
        margin,
        certified_copies,
    })
}

/// Traces `R^(n)` (or the CB ribbon) of `source` and runs [`generic_target_feasibility`] on it.
pub fn generic_from_state(source: &BipartiteState, target: &[Vec<f64>], p_grid: &[f64], n: usize, kind: RibbonKind, cfg: &RibbonConfig) -> Result<FeasibilityVerdict> {
    marginals(target)?;
    let boundary = ribbon_trace(source, p_grid, n, kind, cfg)?;
    let points: Vec<RibbonPoint> = boundary
        .samples
        .iter()
        .map(|s| RibbonPoint::new(s.p, s.q_prime))
        .collect::<Result<_>>()?;
    let copies = match kind {
        RibbonKind::Plain => Some(n),
        RibbonKind::Cb => None,
    };
    generic_target_feasibility(&points, target, copies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::bell_depolarized;
    use crate::matcore::{diag_real, identity, zeros};

    #[test]
    fn threshold_value() {
        let a = depolarized_to_zeta_threshold();
        assert!((a - 0.60751).abs() < 1e-5);
        assert!((a * a - (1.0 - 2f64.ln() / 3f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn known_verdicts() {
        assert_eq!(target_feasibility(0.6, None).unwrap().verdict, Verdict::Impossible);
        assert_eq!(target_feasibility(0.61, None).unwrap().verdict, Verdict::Undetermined);
        assert_eq!(target_feasibility(1.0, None).unwrap().verdict, Verdict::Undetermined);
        assert!(target_feasibility(1.5, None).is_err());
    }

    #[test]
    fn certificate_violates_inequality() {
        let v = target_feasibility(0.6, None).unwrap();
        let c = v.certificate.unwrap();
        let (p, qp) = (c.p.get(), c.q_prime.get());
        let rhs = (2.0f64 / 3.0).powf(1.0 / p) * (1.0f64 / 3.0).powf(1.0 - 1.0 / qp);
        assert!(1.0 / 3.0 > rhs);
    }

    #[test]
    fn limit_only_violation_gets_finite_certificate() {
        let a = depolarized_to_zeta_threshold() - 1e-6;
        let v = target_feasibility(a, None).unwrap();
        assert_eq!(v.verdict, Verdict::Impossible);
        assert!(v.certificate.unwrap().k.unwrap() > 1e4);
    }

    #[test]
    fn povm_trivial_cases() {
        let rho = bell_depolarized(0.5).unwrap();
        let pt = RibbonPoint::from_f64(1.25, 2.0).unwrap();
        let r = povm_bound_check(&rho, &identity(2), &identity(2), pt).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs_linear - 1.0).abs() < 1e-12);
        let r = povm_bound_check(&rho, &zeros(2, 2), &zeros(2, 2), pt).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        assert!(matches!(povm_bound_check(&rho, &diag_real(&[1.5, 0.0]), &identity(2), pt), Err(Error::NotEffect(_))));
    }

    #[test]
    fn generic_cases() {
        let zeta = vec![vec![1.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 0.0]];
        let full = [RibbonPoint::new(PValue::ONE, PValue::INFINITY).unwrap()];
        assert_eq!(generic_target_feasibility(&full, &zeta, None).unwrap().verdict, Verdict::Impossible);
        let diag: Vec<RibbonPoint> = [1.0, 1.5, 2.0, 4.0].iter().map(|&p| RibbonPoint::from_f64(p, p).unwrap()).collect();
        assert_eq!(generic_target_feasibility(&diag, &zeta, None).unwrap().verdict, Verdict::Undetermined);
        let uniform = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
        assert_eq!(generic_target_feasibility(&full, &uniform, None).unwrap().verdict, Verdict::Undetermined);
    }
}
