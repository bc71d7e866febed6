//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::Command;
use std::time::Instant;

use qribbon::channels::{
    bell_depolarized, classical_channel, pure_state, random_cp, random_cptp, random_product_state, random_state, tilde_channel, tilde_map,
    tilde_state, zeta_state, SuperOp, TildeParams,
};
use qribbon::correlation::{max_correlation, max_correlation_oracle};
use qribbon::matcore::{c, max_abs, matrix_unit, singular_values, ComplexMatrix};
use qribbon::opnorms::{cb_ancilla_bounds, cb_norm, interpolation_check, op_norm, op_norm_oracle, CbRoute};
use qribbon::ribbon::{data_processing_check, ribbon_member, ribbon_slope, ribbon_trace, RibbonConfig, RibbonKind, RibbonPoint};
use qribbon::rng::{self, Rng};
use qribbon::schatten::{schatten_norm, vector_norm_tp, OptimizerOpts, PValue};
use qribbon::transform::{target_feasibility, Verdict};

type Outcome = Result<String, String>;

fn pv(x: f64) -> PValue {
    PValue::new(x).unwrap()
}

fn between(r: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng::uniform(r)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Classical maximal correlation: second singular value of `P(a,b)/√(P(a)P(b))`.
fn classical_mu(p: &[Vec<f64>]) -> f64 {
    let pa: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = (0..p[0].len()).map(|j| p.iter().map(|r| r[j]).sum()).collect();
    let q = ComplexMatrix::from_fn(p.len(), p[0].len(), |i, j| c(p[i][j] / (pa[i] * pb[j]).sqrt(), 0.0));
    singular_values(&q)[1]
}

fn c1_max_correlation() -> Outcome {
    let mut worst_exact: f64 = 0.0;
    for a in [0.0, 0.25, 0.5, 0.7, 1.0] {
        let mu = max_correlation(&bell_depolarized(a).unwrap()).unwrap().mu;
        ensure((mu - a).abs() <= 1e-6, || format!("bell α={a}: μ={mu}"))?;
        worst_exact = worst_exact.max((mu - a).abs());
    }
    let z = max_correlation(&zeta_state()).unwrap().mu;
    ensure((z - 0.5).abs() <= 1e-8, || format!("zeta: μ={z}"))?;
    let mut worst_oracle: f64 = 0.0;
    for s in 0..20 {
        let rho = random_state((2, 2), 1000 + s);
        let mu = max_correlation(&rho).unwrap().mu;
        let o = max_correlation_oracle(&rho, 4, 2000 + s).unwrap();
        ensure((mu - o).abs() <= 1e-5, || format!("seed {s}: μ={mu} oracle={o}"))?;
        worst_oracle = worst_oracle.max((mu - o).abs());
    }
    let mut r = rng::seeded(11);
    for _ in 0..5 {
        let raw: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| 0.05 + rng::uniform(&mut r)).collect()).collect();
        let total: f64 = raw.iter().flatten().sum();
        let p: Vec<Vec<f64>> = raw.iter().map(|row| row.iter().map(|x| x / total).collect()).collect();
        let rho = qribbon::channels::classical_state(&p).unwrap();
        let (mu, want) = (max_correlation(&rho).unwrap().mu, classical_mu(&p));
        ensure((mu - want).abs() <= 1e-9, || format!("classical: μ={mu} closed form={want}"))?;
    }
    Ok(format!("closed forms within {worst_exact:.1e}, oracle within {worst_oracle:.1e}"))
}

fn c2_bell_ribbon() -> Outcome {
    let cfg = RibbonConfig::default();
    let mut worst: f64 = 0.0;
    for a in [0.3, 0.5, 0.8] {
        let b = ribbon_trace(&bell_depolarized(a).unwrap(), &[1.5, 2.0, 3.0], 1, RibbonKind::Plain, &cfg).unwrap();
        for s in &b.samples {
            let p = s.p.get();
            let want = 1.0 / (1.0 + (p - 1.0) / (a * a));
            let err = (s.inv_q_prime - want).abs();
            ensure(err <= 5e-3, || format!("α={a} p={p}: 1/q'={} want {want}", s.inv_q_prime))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("worst 1/q' error {worst:.2e}"))
}

fn c3_product_and_pure() -> Outcome {
    let cfg = RibbonConfig::default();
    let mut r = rng::seeded(33);
    let (mut worst_prod, mut min_pure_gap, mut worst_diag): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for k in 0..50 {
        let p = between(&mut r, 1.0, 4.0);
        let qp = p + between(&mut r, 0.0, 6.0);
        let point = RibbonPoint::from_f64(p, qp).unwrap();
        let prod = random_product_state((2, 2), 3300 + k);
        let m = ribbon_member(&prod, point, 1, RibbonKind::Plain, &cfg).unwrap();
        ensure(m.norm.value <= 1.0 + 1e-7, || format!("product, p={p} q'={qp}: {}", m.norm.value))?;
        worst_prod = worst_prod.max(m.norm.value - 1.0);

        let th = between(&mut r, 0.2, std::f64::consts::FRAC_PI_2 - 0.2);
        let pure = pure_state(&[th.cos(), th.sin()]).unwrap();
        if qp >= p + 0.1 {
            let m = ribbon_member(&pure, point, 1, RibbonKind::Plain, &cfg).unwrap();
            ensure(m.norm.value > 1.0 + 1e-4, || format!("pure θ={th}, p={p} q'={qp}: {}", m.norm.value))?;
            min_pure_gap = min_pure_gap.min(m.norm.value - 1.0);
        }
        let d = ribbon_member(&pure, RibbonPoint::from_f64(p, p).unwrap(), 1, RibbonKind::Plain, &cfg).unwrap();
        ensure((d.norm.value - 1.0).abs() <= 1e-7, || format!("pure θ={th}, p=q'={p}: {}", d.norm.value))?;
        worst_diag = worst_diag.max((d.norm.value - 1.0).abs());
    }
    Ok(format!("product excess {worst_prod:.1e}, pure off-diagonal gap ≥ {min_pure_gap:.2e}, diagonal error {worst_diag:.1e}"))
}

fn c4_below_the_line() -> Outcome {
    let opts = OptimizerOpts::default();
    let mut r = rng::seeded(44);
    let mut worst: f64 = 0.0;
    for k in 0..30 {
        let dims = if k % 3 == 2 { (2, 3) } else { (2, 2) };
        let rho = random_state(dims, 4400 + k);
        let p = between(&mut r, 1.0, 6.0);
        let qp = between(&mut r, 1.0, p);
        let (p, qp) = (pv(p), pv(qp));
        let v = op_norm(&tilde_map(&rho, TildeParams::new(p, qp.conjugate())), p, qp, &opts).value;
        ensure((v - 1.0).abs() <= 1e-6, || format!("seed {k}: p={p} q'={qp}: {v}"))?;
        worst = worst.max((v - 1.0).abs());
    }
    Ok(format!("worst |norm-1| {worst:.1e}"))
}

/// Choi of `Φ̃ ∘ Ω_ρ̃` is `Σ_ij |i⟩⟨j| ⊗ Φ̃(ρ̃_ij)`.
fn composed_choi(rho_tilde: &ComplexMatrix, da: usize, db: usize, phi: &SuperOp) -> ComplexMatrix {
    let dout = phi.dims().1;
    let mut out = ComplexMatrix::zeros(da * dout, da * dout);
    for i in 0..da {
        for j in 0..da {
            let block = rho_tilde.view((i * db, j * db), (db, db)).into_owned();
            let img = phi.apply(&block).unwrap();
            out.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&img);
        }
    }
    out
}

fn c5_data_processing() -> Outcome {
    let cfg = RibbonConfig::default();
    let mut r = rng::seeded(55);
    let (mut worst_norm, mut worst_fact): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for k in 0..30 {
        let rho = random_state((2, 2), 5500 + k);
        let psi = random_cptp((2, 2), 5600 + k);
        let p = between(&mut r, 1.1, 4.0);
        let qp = p + between(&mut r, 0.0, 6.0);
        let n = 1 + (k as usize % 2);
        let point = RibbonPoint::from_f64(p, qp).unwrap();
        let rep = data_processing_check(&rho, &psi, &[point], n, &cfg).unwrap();
        let e = &rep.entries[0];
        ensure(e.norm_sigma <= e.norm_rho + 1e-6, || format!("trial {k} n={n}: σ {} > ρ {}", e.norm_sigma, e.norm_rho))?;
        ensure(e.factorization_error <= 1e-9, || format!("trial {k}: factorisation error {}", e.factorization_error))?;
        // independent recomputation of the factorisation
        let q = pv(qp).conjugate();
        let sigma = qribbon::channels::local_apply(&rho, &psi, qribbon::matcore::Subsystem::B).unwrap();
        let lhs = tilde_state(&sigma, TildeParams::new(pv(p), q));
        let phi = tilde_channel(&psi, &rho.marginal_b(), TildeParams::new(q, q)).unwrap();
        let rhs = composed_choi(&tilde_state(&rho, TildeParams::new(pv(p), q)), 2, 2, &phi);
        let err = max_abs(&(lhs - rhs));
        ensure(err <= 1e-9, || format!("trial {k}: independent factorisation error {err}"))?;
        worst_norm = worst_norm.max(e.norm_sigma - e.norm_rho);
        worst_fact = worst_fact.max(err.max(e.factorization_error));
    }
    Ok(format!("max norm increase {worst_norm:.1e}, factorisation error {worst_fact:.1e}"))
}

fn c6_tilde_contraction() -> Outcome {
    let opts = OptimizerOpts::default();
    let mut r = rng::seeded(66);
    let mut worst: f64 = 0.0;
    for k in 0..30 {
        let phi = random_cptp((2, 2), 6600 + k);
        let tau = rng::random_psd(&mut r, 2, 2);
        let p = between(&mut r, 1.0, 4.0);
        let q = if k % 10 == 9 { PValue::INFINITY } else { pv(p + between(&mut r, 0.0, 4.0)) };
        let p = pv(p);
        let map = tilde_channel(&phi, &tau, TildeParams::new(p, q)).unwrap();
        let v = op_norm(&map, p.conjugate(), q.conjugate(), &opts).value;
        ensure(v <= 1.0 + 1e-7, || format!("trial {k}: p={p} q={q}: {v}"))?;
        if k < 5 {
            let o = op_norm_oracle(&map, p.conjugate(), q.conjugate(), 16).unwrap();
            ensure(o <= 1.0 + 1e-7, || format!("trial {k}: oracle {o}"))?;
        }
        worst = worst.max(v);
    }
    Ok(format!("largest norm {worst:.9}"))
}

fn cli(args: &[&str]) -> serde_json::Value {
    let out = Command::new(env!("CARGO_BIN_EXE_qribbon")).args(args).output().expect("run qribbon");
    assert!(out.status.success(), "qribbon {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn c7_threshold() -> Outcome {
    let v = cli(&["transform", "check", "--alpha", "0.6"]);
    ensure(v["verdict"] == "impossible", || format!("α=0.6 gave {}", v["verdict"]))?;
    let v = cli(&["transform", "check", "--alpha", "0.61"]);
    ensure(v["verdict"] == "undetermined", || format!("α=0.61 gave {}", v["verdict"]))?;
    let star = cli(&["transform", "threshold"])["alpha_star"].as_f64().unwrap();
    ensure((star - 0.60751).abs() <= 1e-5, || format!("threshold {star}"))?;
    let verdicts: Vec<Verdict> = (0..50).map(|i| target_feasibility(0.5 + 0.2 * i as f64 / 49.0, None).unwrap().verdict).collect();
    let flips = verdicts.windows(2).filter(|w| w[0] != w[1]).count();
    ensure(verdicts[0] == Verdict::Impossible && verdicts[49] == Verdict::Undetermined && flips == 1, || format!("sweep {verdicts:?}"))?;
    let at = verdicts.iter().position(|v| *v == Verdict::Undetermined).unwrap();
    let (lo, hi) = (0.5 + 0.2 * (at - 1) as f64 / 49.0, 0.5 + 0.2 * at as f64 / 49.0);
    ensure(lo < star && star <= hi + 1e-12, || format!("flip between {lo} and {hi}, threshold {star}"))?;
    Ok(format!("α* = {star:.7}, single flip in ({lo:.4}, {hi:.4}]"))
}

fn c8_mu_bound() -> Outcome {
    let cfg = RibbonConfig::default();
    let grid = [1.1, 1.5, 2.0, 3.0];
    let mut min_gap = f64::INFINITY;
    for s in 0..10 {
        let rho = random_state((2, 2), 8800 + s);
        let mu2 = max_correlation(&rho).unwrap().mu.powi(2);
        let b = ribbon_trace(&rho, &grid, 1, RibbonKind::Plain, &cfg).unwrap();
        for x in &b.samples {
            let slope = ribbon_slope(x.p, x.q_prime);
            ensure(slope >= mu2 - 1e-6, || format!("seed {s} p={}: slope {slope} < μ² {mu2}", x.p))?;
            min_gap = min_gap.min(slope - mu2);
        }
    }
    let mut worst_eq: f64 = 0.0;
    for a in [0.3, 0.5, 0.8] {
        let b = ribbon_trace(&bell_depolarized(a).unwrap(), &grid, 1, RibbonKind::Plain, &cfg).unwrap();
        for x in &b.samples {
            let err = (ribbon_slope(x.p, x.q_prime) - a * a).abs();
            ensure(err <= 5e-3, || format!("bell α={a} p={}: slope error {err}", x.p))?;
            worst_eq = worst_eq.max(err);
        }
    }
    Ok(format!("min slope - μ² = {min_gap:.2e}, bell equality within {worst_eq:.1e}"))
}

fn random_matrix(r: &mut Rng, d: usize, psd: bool) -> ComplexMatrix {
    if psd {
        rng::random_psd(r, d, d)
    } else {
        rng::ginibre(r, d, d)
    }
}

fn c9_tp_norms() -> Outcome {
    let opts = OptimizerOpts::tp_default();
    let mut r = rng::seeded(99);
    let pairs = [(f64::INFINITY, 2.0), (1.0, 2.0), (3.0, 1.5), (2.0, 4.0), (1.5, 3.0)];
    let mut worst: f64 = 0.0;
    for (k, dims) in [(2, 2), (2, 3), (3, 2)].into_iter().enumerate() {
        let psd = k != 1;
        let a = random_matrix(&mut r, dims.0, psd);
        let b = random_matrix(&mut r, dims.1, psd);
        let x = a.kronecker(&b);
        for (t, p) in pairs {
            let (t, p) = (pv(t), pv(p));
            let got = vector_norm_tp(&x, dims, t, p, &opts).map_err(|e| e.to_string())?.value;
            let want = schatten_norm(&a, t) * schatten_norm(&b, p);
            let err = (got - want).abs() / want;
            ensure(err <= 1e-6, || format!("(a) dims {dims:?} ({t},{p}): {got} vs {want}"))?;
            worst = worst.max(err);
        }
        for p in [1.0, 1.5, 3.0, f64::INFINITY] {
            let x = random_matrix(&mut r, dims.0 * dims.1, false);
            let got = vector_norm_tp(&x, dims, pv(p), pv(p), &opts).unwrap().value;
            let want: f64 = singular_values(&x).iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p);
            let want = if p.is_infinite() { singular_values(&x)[0] } else { want };
            ensure((got - want).abs() <= 1e-9 * want, || format!("(b) p={p}: {got} vs {want}"))?;
        }
        let blocks: Vec<ComplexMatrix> = (0..dims.0).map(|_| random_matrix(&mut r, dims.1, psd)).collect();
        let mut x = ComplexMatrix::zeros(dims.0 * dims.1, dims.0 * dims.1);
        for (i, m) in blocks.iter().enumerate() {
            x += matrix_unit(dims.0, i, i).kronecker(m);
        }
        for (t, p) in pairs {
            let (t, p) = (pv(t), pv(p));
            let norms: Vec<f64> = blocks.iter().map(|m| schatten_norm(m, p)).collect();
            let want = if t.is_infinite() {
                norms.iter().cloned().fold(0.0, f64::max)
            } else {
                norms.iter().map(|v| v.powf(t.get())).sum::<f64>().powf(t.recip())
            };
            let got = vector_norm_tp(&x, dims, t, p, &opts).unwrap().value;
            let err = (got - want).abs() / want;
            ensure(err <= 1e-6, || format!("(c) dims {dims:?} ({t},{p}): {got} vs {want}"))?;
            worst = worst.max(err);
        }
    }
    // duality: the sup form's witness Y has ‖Y‖_(t',p') ≤ 1 and pairs to the estimate
    let mut worst_dual: f64 = 0.0;
    for (t, p) in [(f64::INFINITY, 2.0), (3.0, 1.5), (4.0, 2.0)] {
        let (t, p) = (pv(t), pv(p));
        let x = random_matrix(&mut r, 4, false);
        let est = vector_norm_tp(&x, (2, 2), t, p, &opts).unwrap();
        let y = est.witness.clone().ok_or("sup form returned no witness")?;
        let pairing = (y.adjoint() * &x).trace().re;
        ensure((pairing - est.value).abs() <= 1e-9 * est.value, || format!("pairing {pairing} vs {}", est.value))?;
        let dual = vector_norm_tp(&y, (2, 2), t.conjugate(), p.conjugate(), &opts).unwrap();
        ensure(dual.value <= 1.0 + 1e-3, || format!("({t},{p}) dual upper bound {} exceeds 1", dual.value))?;
        ensure(dual.value >= 1.0 - 1e-3, || format!("({t},{p}) dual upper bound {} below 1: sup form not tight", dual.value))?;
        worst_dual = worst_dual.max((dual.value - 1.0).abs());
    }
    Ok(format!("properties within {worst:.1e}, duality within {worst_dual:.1e}"))
}

fn random_stochastic(r: &mut Rng, d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|_| {
            let row: Vec<f64> = (0..d).map(|_| 0.05 + rng::uniform(r)).collect();
            let s: f64 = row.iter().sum();
            row.iter().map(|x| x / s).collect()
        })
        .collect()
}

fn c10_cb() -> Outcome {
    let opts = OptimizerOpts::default();
    let inf = PValue::INFINITY;
    let mut r = rng::seeded(1010);
    let mut worst_excess = f64::NEG_INFINITY;
    let cases: Vec<(SuperOp, f64, f64, CbRoute)> = (0..3)
        .flat_map(|k| {
            let w = classical_channel(&random_stochastic(&mut r, 2)).unwrap();
            let cp = random_cp((2, 2), 1100 + k);
            vec![(w.clone(), 2.0, 4.0, CbRoute::Classical), (w, 1.5, 3.0, CbRoute::Classical), (cp.clone(), 4.0, 2.0, CbRoute::CpContractive), (cp, 3.0, 3.0, CbRoute::CpContractive)]
        })
        .collect();
    for (map, p, q, route) in &cases {
        let (p, q) = (pv(*p), pv(*q));
        let cb = cb_norm(map, p, q, 3, inf, &opts);
        let plain = op_norm(map, p, q, &opts).value;
        ensure(cb.route == *route, || format!("({p},{q}): route {:?}, expected {route:?}", cb.route))?;
        ensure(cb.estimate.value == plain, || format!("({p},{q}): cb {} vs op {plain}", cb.estimate.value))?;
        for b in cb_ancilla_bounds(map, p, q, 3, inf, &opts) {
            ensure(b.value <= plain + 1e-6, || format!("({p},{q}) d={}: ancilla bound {} exceeds {plain}", b.d, b.value))?;
            worst_excess = worst_excess.max(b.value - plain);
        }
    }
    let mut worst_mult: f64 = 0.0;
    for k in 0..4 {
        let a = random_cp((2, 2), 1200 + k);
        let b = random_cp((2, 2), 1300 + k);
        for (p, q) in [(2.0, 2.0), (4.0, 2.0), (3.0, 1.5), (2.0, 1.0)] {
            let (p, q) = (pv(p), pv(q));
            let joint = cb_norm(&a.tensor(&b), p, q, 1, inf, &opts);
            ensure(joint.route == CbRoute::CpContractive, || format!("route {:?}", joint.route))?;
            let prod = cb_norm(&a, p, q, 1, inf, &opts).estimate.value * cb_norm(&b, p, q, 1, inf, &opts).estimate.value;
            let err = (joint.estimate.value - prod).abs() / prod;
            ensure(err <= 1e-6, || format!("({p},{q}) pair {k}: {} vs {prod}", joint.estimate.value))?;
            worst_mult = worst_mult.max(err);
        }
    }
    Ok(format!("ancilla bounds exceed by at most {worst_excess:.1e}, multiplicativity within {worst_mult:.1e}"))
}

fn c11_interpolation() -> Outcome {
    let opts = OptimizerOpts::default();
    let mut checked = 0;
    for k in 0..20 {
        let map = random_cp((2, 2), 1400 + k);
        for (e0, e1) in [((1.0, 1.0), (2.0, 2.0)), ((1.0, 2.0), (2.0, 4.0))] {
            let rep = interpolation_check(&map, (pv(e0.0), pv(e0.1)), (pv(e1.0), pv(e1.1)), &[0.25, 0.5, 0.75], &opts);
            for e in &rep.entries {
                ensure(e.norm <= e.bound * (1.0 + 1e-6), || format!("map {k} θ={}: {} > {}", e.theta, e.norm, e.bound))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} interpolated norms below the log-convex bound"))
}

fn c12_oracle() -> Outcome {
    let opts = OptimizerOpts::default();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let map = random_cp((2, 2), 1500 + k);
        for (p, q) in [(1.0, 2.0), (2.0, 2.0), (2.0, 4.0), (4.0, 1.0)] {
            let (p, q) = (pv(p), pv(q));
            let v = op_norm(&map, p, q, &opts).value;
            let o = op_norm_oracle(&map, p, q, 24).unwrap();
            ensure((v - o).abs() <= 1e-4, || format!("map {k} ({p},{q}): {v} vs oracle {o}"))?;
            worst = worst.max((v - o).abs());
        }
    }
    Ok(format!("worst |op_norm - oracle| {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("maximal correlation exactness", c1_max_correlation),
        ("depolarized-Bell ribbon boundary", c2_bell_ribbon),
        ("product and pure state extremes", c3_product_and_pure),
        ("below-the-line norms equal one", c4_below_the_line),
        ("data processing under local channels", c5_data_processing),
        ("tilde channel contraction", c6_tilde_contraction),
        ("zeta threshold from the CLI", c7_threshold),
        ("maximal correlation bounds the ribbon", c8_mu_bound),
        ("(t,p) norm properties", c9_tp_norms),
        ("CB norm consistency", c10_cb),
        ("interpolation log-convexity", c11_interpolation),
        ("optimizer versus oracle", c12_oracle),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("C{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| x.eq_ignore_ascii_case(&id)) {
            continue;
        }
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("PASS {id:>3}  {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id:>3}  {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
