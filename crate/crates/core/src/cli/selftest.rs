//! Quick oracle-versus-optimizer suites behind `qribbon selftest`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::channels::{bell_depolarized, random_cp, random_state, tilde_map, zeta_state, TildeParams};
use crate::correlation::{max_correlation, max_correlation_oracle};
use crate::error::Result;
use crate::opnorms::{op_norm, op_norm_oracle};
use crate::ribbon::{analytic_ribbon, ribbon_trace, AnalyticFamily, RibbonConfig, RibbonKind};
use crate::schatten::PValue;
use crate::transform::{depolarized_to_zeta_threshold, target_feasibility, Verdict};

#[derive(Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub worst_error: f64,
    pub tolerance: f64,
    pub detail: Value,
}

fn check(name: &'static str, worst_error: f64, tolerance: f64, detail: Value) -> Check {
    Check {
        name,
        passed: worst_error <= tolerance,
        worst_error,
        tolerance,
        detail,
    }
}

fn pv(x: f64) -> PValue {
    PValue::new(x).expect("valid exponent")
}

pub fn run(cfg: &RibbonConfig) -> Result<Vec<Check>> {
    let seed = cfg.opt.seed;
    let mut out = Vec::new();

    let mut err: f64 = 0.0;
    for a in [0.0, 0.25, 0.5, 0.7, 1.0] {
        err = err.max((max_correlation(&bell_depolarized(a)?)?.mu - a).abs());
    }
    err = err.max((max_correlation(&zeta_state())?.mu - 0.5).abs());
    out.push(check("maxcorr_closed_forms", err, 1e-8, json!({"states": 6})));

    let mut err: f64 = 0.0;
    for k in 0..5 {
        let rho = random_state((2, 2), seed.wrapping_add(k));
        let oracle = max_correlation_oracle(&rho, 4, seed.wrapping_add(100 + k))?;
        err = err.max((max_correlation(&rho)?.mu - oracle).abs());
    }
    out.push(check("maxcorr_vs_oracle", err, 1e-5, json!({"states": 5})));

    let mut err: f64 = 0.0;
    for k in 0..3 {
        let map = random_cp((2, 2), seed.wrapping_add(200 + k));
        for (p, q) in [(2.0, 4.0), (4.0, 1.0)] {
            let est = op_norm(&map, pv(p), pv(q), &cfg.opt).value;
            let oracle = op_norm_oracle(&map, pv(p), pv(q), 24)?;
            err = err.max((est - oracle).abs() / oracle.max(1e-300));
        }
    }
    out.push(check("opnorm_vs_oracle", err, 1e-4, json!({"maps": 3, "pairs": [[2.0, 4.0], [4.0, 1.0]]})));

    let mut err: f64 = 0.0;
    for k in 0..3 {
        let rho = random_state((2, 2), seed.wrapping_add(300 + k));
        let (p, qp) = (pv(3.0), pv(2.0));
        let map = tilde_map(&rho, TildeParams::new(p, qp.conjugate()));
        err = err.max((op_norm(&map, p, qp, &cfg.opt).value - 1.0).abs());
    }
    out.push(check("below_the_line_is_one", err, 1e-6, json!({"states": 3, "p": 3.0, "q_prime": 2.0})));

    let alpha = 0.5;
    let b = ribbon_trace(&bell_depolarized(alpha)?, &[2.0], 1, RibbonKind::Plain, cfg)?;
    let exact = analytic_ribbon(AnalyticFamily::BellDepolarized(alpha)).boundary(2.0);
    let err = (b.samples[0].inv_q_prime - 1.0 / exact).abs();
    out.push(check("bell_ribbon_boundary", err, 5e-3, json!({"alpha": alpha, "p": 2.0, "q_prime": b.samples[0].q_prime, "analytic": exact})));

    let star = depolarized_to_zeta_threshold();
    let flips_right = target_feasibility(0.6, None)?.verdict == Verdict::Impossible && target_feasibility(0.61, None)?.verdict == Verdict::Undetermined;
    let err = if flips_right { (star - 0.60751).abs() } else { f64::INFINITY };
    out.push(check("threshold", err, 1e-5, json!({"alpha_star": star})));

    Ok(out)
}
