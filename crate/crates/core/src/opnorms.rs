//! `p → q` norms of super-operators, their completely bounded versions,
//! a brute-force oracle, and a numerical check of log-convexity.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::SuperOp;
use crate::error::{Error, Result};
use crate::matcore::{c, identity, ComplexMatrix};
use crate::rng::{self, Rng};
use crate::schatten::{dual_element, schatten_norm, tp_sup, vector_norm_tp, OptimizerOpts, PValue, TpWarm};

/// Direction in which an estimate is certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// A feasible point attains the value; the true norm is at least this.
    Lower,
    /// A feasible factorisation attains the value; the true norm is at most this.
    Upper,
    TwoSided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub bound: Bound,
    pub restarts_used: usize,
    pub converged: bool,
    #[serde(skip)]
    pub witness: Option<ComplexMatrix>,
}

impl NormEstimate {
    pub fn exact(value: f64) -> Self {
        NormEstimate {
            value,
            bound: Bound::TwoSided,
            restarts_used: 0,
            converged: true,
            witness: None,
        }
    }
}

/// `‖Φ(X)‖_q / ‖X‖_p`.
pub fn norm_ratio(map: &SuperOp, x: &ComplexMatrix, p: PValue, q: PValue) -> f64 {
    let den = schatten_norm(x, p);
    if den == 0.0 {
        return 0.0;
    }
    schatten_norm(&map.apply(x).expect("input dimension"), q) / den
}

fn normalized(x: ComplexMatrix, p: PValue) -> ComplexMatrix {
    let n = schatten_norm(&x, p);
    if n > 0.0 {
        x / c(n, 0.0)
    } else {
        x
    }
}

struct Ascent {
    value: f64,
    x: ComplexMatrix,
    converged: bool,
}

/// Alternating ascent: pull the `q'`-dual of `Φ(X)` back through `Φ†` and take its `p`-dual.
///
/// Each step is monotone by Hölder, so the sequence of values never decreases.
///
/// With `stop` set, the run aborts once its value exceeds `stop.0` and
/// raises the shared flag `stop.1`; other runs abort when they see it.
fn ascend(map: &SuperOp, x0: ComplexMatrix, p: PValue, q: PValue, opts: &OptimizerOpts, stop: Option<(f64, &AtomicBool)>) -> Ascent {
    let qc = q.conjugate();
    let mut x = normalized(x0, p);
    let mut val = schatten_norm(&map.apply(&x).expect("dims"), q);
    let mut stalls = 0;
    for _ in 0..opts.max_iters {
        if let Some((limit, flag)) = stop {
            if val > limit {
                flag.store(true, Ordering::Relaxed);
            }
            if flag.load(Ordering::Relaxed) {
                return Ascent {
                    value: val,
                    x,
                    converged: false,
                };
            }
        }
        let y = map.apply(&x).expect("dims");
        let w = dual_element(&y, qc);
        let g = map.apply_adjoint(&w).expect("dims");
        let xn = dual_element(&g, p);
        let nv = schatten_norm(&map.apply(&xn).expect("dims"), q);
        if nv < val {
            // Rounding can only cost the last few ulps; keep the incumbent.
            stalls += 1;
        } else {
            let rel = (nv - val) / nv.max(1e-300);
            x = xn;
            val = nv;
            if rel < opts.rel_tol {
                stalls += 1;
            } else {
                stalls = 0;
            }
        }
        if stalls >= opts.stall_window {
            return Ascent {
                value: val,
                x,
                converged: true,
            };
        }
    }
    Ascent {
        value: val,
        x,
        converged: false,
    }
}

fn random_input(rng: &mut Rng, d: usize, psd: bool, k: usize) -> ComplexMatrix {
    if psd {
        // alternate full-rank and rank-one starts
        let rank = if k % 2 == 0 { d } else { 1 };
        rng::random_psd(rng, d, rank)
    } else {
        rng::ginibre(rng, d, d)
    }
}

/// `‖Φ‖_{p→q}`, lower bound with witness.
pub fn op_norm(map: &SuperOp, p: PValue, q: PValue, opts: &OptimizerOpts) -> NormEstimate {
    op_norm_with_starts(map, p, q, opts, &[])
}

/// As [`op_norm`], with caller-supplied starting inputs tried first.
pub fn op_norm_with_starts(map: &SuperOp, p: PValue, q: PValue, opts: &OptimizerOpts, hints: &[ComplexMatrix]) -> NormEstimate {
    op_norm_until(map, p, q, opts, hints, None)
}

/// As [`op_norm_with_starts`], but gives up as soon as some run exceeds `stop_above`.
///
/// Whether the returned value exceeds `stop_above` is deterministic; the
/// value itself is only meaningful when it does not.
pub(crate) fn op_norm_until(map: &SuperOp, p: PValue, q: PValue, opts: &OptimizerOpts, hints: &[ComplexMatrix], stop_above: Option<f64>) -> NormEstimate {
    let (di, _) = map.dims();
    if map.is_cp() {
        if q == PValue::ONE {
            let g = map.apply_adjoint(&identity(map.dims().1)).expect("dims");
            let x = dual_element(&g, p);
            return NormEstimate {
                value: schatten_norm(&g, p.conjugate()),
                witness: Some(x),
                ..NormEstimate::exact(0.0)
            };
        }
        if p.is_infinite() {
            let x = identity(di);
            return NormEstimate {
                value: schatten_norm(&map.apply(&x).expect("dims"), q),
                witness: Some(x),
                ..NormEstimate::exact(0.0)
            };
        }
    }
    let psd = map.is_cp();
    let mut starts: Vec<ComplexMatrix> = hints.iter().filter(|h| h.shape() == (di, di)).cloned().collect();
    starts.push(identity(di));
    let mut r = rng::stream(opts.seed, 0x0b);
    let mut k = 0;
    while starts.len() < opts.restarts.max(1) {
        starts.push(random_input(&mut r, di, psd, k));
        k += 1;
    }
    let flag = AtomicBool::new(false);
    let stop = stop_above.map(|s| (s, &flag));
    let runs: Vec<Ascent> = starts.into_par_iter().map(|x0| ascend(map, x0, p, q, opts, stop)).collect();
    let n = runs.len();
    let mut best = &runs[0];
    for a in &runs[1..] {
        if a.value > best.value {
            best = a;
        }
    }
    let witness = normalized(best.x.clone(), p);
    NormEstimate {
        value: norm_ratio(map, &witness, p, q),
        bound: Bound::Lower,
        restarts_used: n,
        converged: best.converged,
        witness: Some(witness),
    }
}

/// Coordinate pattern search maximising `f`, with step halving.
fn pattern_search(f: &dyn Fn(&[f64]) -> f64, mut x: Vec<f64>, mut step: f64, min_step: f64) -> (Vec<f64>, f64) {
    let mut fx = f(&x);
    while step > min_step {
        let mut improved = false;
        for i in 0..x.len() {
            for s in [step, -step] {
                let mut y = x.clone();
                y[i] += s;
                let fy = f(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

fn bloch(v: &[f64]) -> ComplexMatrix {
    let r = v[0].clamp(0.0, 1.0);
    let (th, ph) = (v[1], v[2]);
    let (x, y, z) = (r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos());
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[c(0.5 * (1.0 + z), 0.0), c(0.5 * x, -0.5 * y), c(0.5 * x, 0.5 * y), c(0.5 * (1.0 - z), 0.0)],
    )
}

fn param_input(v: &[f64], d: usize, psd: bool) -> ComplexMatrix {
    let l = ComplexMatrix::from_fn(d, d, |i, j| c(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
    if psd {
        &l * l.adjoint()
    } else {
        l
    }
}

/// Brute-force `‖Φ‖_{p→q}` for validating [`op_norm`].
///
/// For a CP map on qubits the PSD inputs are scanned on a Bloch-ball
/// grid with `resolution` steps per axis, then the best grid points are
/// refined by pattern search. Otherwise at least `10^4` random inputs are
/// sampled before refinement. Inputs of dimension above 4 are refused.
pub fn op_norm_oracle(map: &SuperOp, p: PValue, q: PValue, resolution: usize) -> Result<f64> {
    let (di, _) = map.dims();
    if di > 4 {
        return Err(Error::DimTooLarge {
            what: "op_norm_oracle".into(),
            dim: di,
            limit: 4,
        });
    }
    let res = resolution.max(4);
    if di == 2 && map.is_cp() {
        let f = |v: &[f64]| norm_ratio(map, &bloch(v), p, q);
        let mut grid = Vec::new();
        for a in 0..=res {
            for b in 0..=res {
                for k in 0..(2 * res) {
                    grid.push(vec![
                        a as f64 / res as f64,
                        std::f64::consts::PI * b as f64 / res as f64,
                        std::f64::consts::PI * k as f64 / res as f64,
                    ]);
                }
            }
        }
        let mut scored: Vec<(f64, Vec<f64>)> = grid.into_par_iter().map(|v| (f(&v), v)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let step = 1.0 / res as f64;
        let best = scored
            .into_iter()
            .take(6)
            .map(|(_, v)| pattern_search(&f, v, step, 1e-9).1)
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(best);
    }
    let psd = map.is_cp();
    let f = |v: &[f64]| norm_ratio(map, &param_input(v, di, psd), p, q);
    let nparam = 2 * di * di;
    let samples = 10_000.max(res * res * res);
    let mut r = rng::seeded(0x5eed);
    let pts: Vec<Vec<f64>> = (0..samples)
        .map(|k| {
            let scale = if k % 3 == 0 { 3.0 } else { 1.0 };
            let mut v: Vec<f64> = (0..nparam).map(|_| rng::normal(&mut r)).collect();
            if k % 3 == 1 {
                // near rank one
                for (i, x) in v.iter_mut().enumerate() {
                    if (i / 2) % di != 0 {
                        *x *= 0.05;
                    }
                }
            }
            v.iter_mut().for_each(|x| *x *= scale);
            v
        })
        .collect();
    let mut scored: Vec<(f64, Vec<f64>)> = pts.into_par_iter().map(|v| (f(&v), v)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let best = scored
        .into_iter()
        .take(8)
        .map(|(_, v)| {
            let s = v.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-3) * 0.25;
            pattern_search(&f, v, s, 1e-10).1
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// How a completely bounded norm estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CbRoute {
    /// CP map with `q ≤ p`: the CB norm equals the plain norm.
    CpContractive,
    /// Classical channel: the CB norm equals the plain norm.
    Classical,
    /// Best ratio over ancilla dimensions `1..=d_max`.
    AncillaSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AncillaBound {
    pub d: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CbNorm {
    pub estimate: NormEstimate,
    pub route: CbRoute,
    /// Per-ancilla lower estimates; empty when a shortcut applied.
    pub ancilla_bounds: Vec<AncillaBound>,
    pub t: PValue,
}

/// `‖Φ‖_{cb,p→q}` with the outer exponent `t`.
pub fn cb_norm(map: &SuperOp, p: PValue, q: PValue, d_max: usize, t: PValue, opts: &OptimizerOpts) -> CbNorm {
    if map.is_cp() && q <= p {
        return CbNorm {
            estimate: op_norm(map, p, q, opts),
            route: CbRoute::CpContractive,
            ancilla_bounds: vec![],
            t,
        };
    }
    if map.is_cp() && map.is_classical() {
        return CbNorm {
            estimate: op_norm(map, p, q, opts),
            route: CbRoute::Classical,
            ancilla_bounds: vec![],
            t,
        };
    }
    let base = op_norm(map, p, q, opts);
    let bounds = ancilla_search(map, p, q, d_max, t, opts, &base);
    let mut est = base;
    for b in &bounds {
        if b.value > est.value {
            est.value = b.value;
            est.witness = None;
        }
    }
    est.bound = Bound::Lower;
    CbNorm {
        estimate: est,
        route: CbRoute::AncillaSearch,
        ancilla_bounds: bounds,
        t,
    }
}

/// Ancilla ratio estimates for `d = 1..=d_max` without any shortcut.
pub fn cb_ancilla_bounds(map: &SuperOp, p: PValue, q: PValue, d_max: usize, t: PValue, opts: &OptimizerOpts) -> Vec<AncillaBound> {
    let base = op_norm(map, p, q, opts);
    ancilla_search(map, p, q, d_max, t, opts, &base)
}

fn ancilla_search(map: &SuperOp, p: PValue, q: PValue, d_max: usize, t: PValue, opts: &OptimizerOpts, base: &NormEstimate) -> Vec<AncillaBound> {
    let mut out = vec![AncillaBound { d: 1, value: base.value }];
    let witness = base.witness.clone().unwrap_or_else(|| identity(map.dims().0));
    for d in 2..=d_max.max(1) {
        out.push(AncillaBound {
            d,
            value: ancilla_ratio_max(map, p, q, d, t, opts, &witness),
        });
    }
    out
}

/// `(t,p)` norm with a cheap warm-started sup solve when the sup form applies.
fn tp_value(x: &ComplexMatrix, dims: (usize, usize), t: PValue, p: PValue, opts: &OptimizerOpts, warm: Option<&TpWarm>) -> (f64, Option<TpWarm>) {
    if t > p && dims.0 > 1 {
        let (e, w) = tp_sup(x, dims, t, p, opts, warm);
        (e.value, Some(w))
    } else {
        (vector_norm_tp(x, dims, t, p, opts).map(|e| e.value).unwrap_or(f64::NAN), None)
    }
}

fn ancilla_ratio_max(map: &SuperOp, p: PValue, q: PValue, d: usize, t: PValue, opts: &OptimizerOpts, witness: &ComplexMatrix) -> f64 {
    let (di, d_out) = map.dims();
    let ext = map.with_ancilla(d);
    let n = d * di;
    let psd = map.is_cp();
    let inner = OptimizerOpts {
        restarts: 2,
        max_iters: 400,
        ..opts.clone()
    };
    let eval = |x: &ComplexMatrix, warm: &(Option<TpWarm>, Option<TpWarm>), o: &OptimizerOpts| {
        let y = ext.apply(x).expect("dims");
        let (num, wn) = tp_value(&y, (d, d_out), t, q, o, warm.0.as_ref());
        let (den, wd) = tp_value(x, (d, di), t, p, o, warm.1.as_ref());
        let v = if den > 0.0 { num / den } else { 0.0 };
        (v, (wn, wd))
    };

    let mut starts = vec![identity(d).kronecker(witness)];
    if d == di {
        starts.push(crate::channels::max_entangled(d));
    }
    let mut r = rng::stream(opts.seed, 0xcb00 + d as u64);
    for k in 0..2 {
        starts.push(random_input(&mut r, n, psd, k));
    }

    let mut best_v = f64::NEG_INFINITY;
    let mut best_x = starts[0].clone();
    let mut best_w = (None, None);
    for x in &starts {
        let (v, w) = eval(x, &(None, None), &inner);
        if v > best_v {
            best_v = v;
            best_x = x.clone();
            best_w = w;
        }
    }

    // (1+1) evolution strategy on a square-root factor of the incumbent.
    let mut l = if psd {
        crate::matcore::frac_power(&best_x, 0.5).unwrap_or_else(|_| best_x.clone())
    } else {
        best_x.clone()
    };
    let mut sigma = 0.3;
    let budget = 48;
    for _ in 0..budget {
        let pert = rng::ginibre(&mut r, n, n);
        let scale = crate::matcore::max_abs(&l).max(1e-6);
        let cand_l = &l + pert * c(sigma * scale, 0.0);
        let cand = if psd { &cand_l * cand_l.adjoint() } else { cand_l.clone() };
        let (v, w) = eval(&cand, &best_w, &inner);
        if v > best_v {
            best_v = v;
            best_x = cand;
            best_w = w;
            l = cand_l;
            sigma *= 1.5;
        } else {
            sigma *= 0.85;
        }
        if sigma < 1e-4 {
            break;
        }
    }
    let full = OptimizerOpts {
        restarts: opts.restarts.clamp(2, 8),
        ..opts.clone()
    };
    eval(&best_x, &best_w, &full).0.max(eval(&best_x, &(None, None), &full).0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationEntry {
    pub theta: f64,
    pub p: PValue,
    pub q: PValue,
    pub norm: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub endpoint0: f64,
    pub endpoint1: f64,
    pub entries: Vec<InterpolationEntry>,
    pub violations: usize,
}

/// Point on the segment `1/p_θ = (1-θ)/p_0 + θ/p_1`.
pub fn interpolate_exponent(p0: PValue, p1: PValue, theta: f64) -> PValue {
    PValue::from_recip((1.0 - theta) * p0.recip() + theta * p1.recip()).expect("convex combination stays in [0,1]")
}

/// Checks `‖Φ‖_{p_θ→q_θ} ≤ ‖Φ‖_{p0→q0}^{1-θ} ‖Φ‖_{p1→q1}^θ (1 + 1e-6)`.
pub fn interpolation_check(map: &SuperOp, e0: (PValue, PValue), e1: (PValue, PValue), thetas: &[f64], opts: &OptimizerOpts) -> InterpolationReport {
    let n0 = op_norm(map, e0.0, e0.1, opts).value;
    let n1 = op_norm(map, e1.0, e1.1, opts).value;
    let entries: Vec<InterpolationEntry> = thetas
        .iter()
        .map(|&theta| {
            let p = interpolate_exponent(e0.0, e1.0, theta);
            let q = interpolate_exponent(e0.1, e1.1, theta);
            let norm = op_norm(map, p, q, opts).value;
            let bound = n0.powf(1.0 - theta) * n1.powf(theta);
            InterpolationEntry {
                theta,
                p,
                q,
                norm,
                bound,
                holds: norm <= bound * (1.0 + 1e-6),
            }
        })
        .collect();
    let violations = entries.iter().filter(|e| !e.holds).count();
    InterpolationReport {
        endpoint0: n0,
        endpoint1: n1,
        entries,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{classical_channel, depolarizing, identity_channel, random_cp, random_cptp};
    use approx::assert_relative_eq;

    fn pv(x: f64) -> PValue {
        PValue::new(x).unwrap()
    }

    #[test]
    fn identity_map_has_unit_norm() {
        let id = identity_channel(3);
        for p in [1.0, 2.0, 3.5] {
            let e = op_norm(&id, pv(p), pv(p), &OptimizerOpts::default());
            assert_relative_eq!(e.value, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn completely_depolarizing_one_to_inf() {
        let full = depolarizing(0.0, 2).unwrap();
        let e = op_norm(&full, PValue::ONE, PValue::INFINITY, &OptimizerOpts::default());
        assert_relative_eq!(e.value, 0.5, epsilon = 1e-10);
        let o = op_norm_oracle(&full, PValue::ONE, PValue::INFINITY, 8).unwrap();
        assert_relative_eq!(o, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn witness_reproduces_value() {
        let m = random_cp((2, 3), 3);
        let e = op_norm(&m, pv(1.5), pv(3.0), &OptimizerOpts::default());
        let w = e.witness.clone().unwrap();
        assert!((norm_ratio(&m, &w, pv(1.5), pv(3.0)) - e.value).abs() < 1e-8);
        assert_eq!(e.bound, Bound::Lower);
    }

    #[test]
    fn exact_routes_are_two_sided() {
        let m = random_cp((2, 2), 4);
        let a = op_norm(&m, pv(2.0), PValue::ONE, &OptimizerOpts::default());
        let b = op_norm(&m, PValue::INFINITY, pv(2.0), &OptimizerOpts::default());
        assert_eq!(a.bound, Bound::TwoSided);
        assert_eq!(b.bound, Bound::TwoSided);
        let oa = op_norm_oracle(&m, pv(2.0), PValue::ONE, 16).unwrap();
        assert!((a.value - oa).abs() < 1e-6 * a.value);
    }

    #[test]
    fn agrees_with_oracle() {
        let m = random_cp((2, 2), 9);
        for (p, q) in [(1.0, 2.0), (2.0, 4.0)] {
            let e = op_norm(&m, pv(p), pv(q), &OptimizerOpts::default()).value;
            let o = op_norm_oracle(&m, pv(p), pv(q), 16).unwrap();
            assert!((e - o).abs() < 1e-4 * o, "{p} {q}: {e} vs {o}");
        }
    }

    #[test]
    fn oracle_rejects_large_inputs() {
        let m = random_cptp((5, 2), 1);
        assert!(matches!(op_norm_oracle(&m, pv(2.0), pv(2.0), 8), Err(Error::DimTooLarge { .. })));
    }

    #[test]
    fn cb_shortcuts() {
        let w = classical_channel(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let cb = cb_norm(&w, pv(1.5), pv(3.0), 2, PValue::INFINITY, &OptimizerOpts::default());
        assert_eq!(cb.route, CbRoute::Classical);
        let m = random_cp((2, 2), 2);
        let cb = cb_norm(&m, pv(2.0), PValue::ONE, 2, PValue::INFINITY, &OptimizerOpts::default());
        assert_eq!(cb.route, CbRoute::CpContractive);
        assert_eq!(cb.estimate.bound, Bound::TwoSided);
    }

    #[test]
    fn interpolation_endpoints() {
        let m = random_cp((2, 2), 6);
        let rep = interpolation_check(&m, (pv(1.0), pv(1.0)), (pv(2.0), pv(2.0)), &[0.0, 0.5, 1.0], &OptimizerOpts::default());
        assert_eq!(rep.violations, 0);
        assert_relative_eq!(rep.entries[0].norm, rep.endpoint0, max_relative = 1e-9);
        assert_relative_eq!(rep.entries[2].norm, rep.endpoint1, max_relative = 1e-9);
    }
}
