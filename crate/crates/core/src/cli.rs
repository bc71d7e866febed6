//! Command-line front end.
//!
//! Every command prints one JSON document with `schema_version`, the
//! command name, an `input` echo (source, dimensions and sha256 of each
//! matrix, plus the parameters) and the result fields. `ribbon trace --csv`
//! prints CSV instead. Exit status: 0 on success, 1 when `selftest`
//! fails, 2 on invalid input, 3 when `--strict` is set and an optimizer
//! did not converge.

mod input;
mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::channels::{tilde_map, tilde_state, SuperOp, TildeParams};
use crate::correlation::{max_correlation, max_correlation_complex};
use crate::error::{Error, Result};
use crate::opnorms::{cb_norm, op_norm, op_norm_oracle};
use crate::ribbon::{
    convexity_check, data_processing_check, duality_check, mu_bound_check, ribbon_member, ribbon_trace, RibbonConfig, RibbonKind, RibbonPoint,
};
use crate::schatten::{vector_norm_tp, OptimizerOpts, PValue};
use crate::transform::{depolarized_to_zeta_threshold, generic_from_state, target_feasibility};

use input::{classical_pmf, matrix_to_json, parse_channel, parse_matrix, parse_pvalue, parse_state};

pub const SCHEMA_VERSION: u32 = 1;

/// Worker thread count for the parallel restarts.
pub const THREADS_ENV: &str = "QRIBBON_THREADS";

#[derive(Parser, Debug)]
#[command(name = "qribbon", version, about = "Hypercontractivity ribbons of bipartite quantum states")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Seed for all randomised restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Ribbon membership means norm at most 1 + tol.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Largest total dimension allowed for tensor powers.
    #[arg(long, global = true)]
    tensor_cap: Option<usize>,
    /// TOML file with [optimizer] and [ribbon] tables; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exit with status 3 if an optimizer did not converge.
    #[arg(long, global = true)]
    strict: bool,
    /// Write the result to a file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximal correlation of a state.
    Maxcorr {
        #[arg(long)]
        state: String,
        /// Also report the maximum over non-Hermitian observables.
        #[arg(long)]
        complex: bool,
    },
    /// p→q norm of a linear map.
    Opnorm {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pq: PqArgs,
        /// Also run the brute-force oracle at this grid resolution (inputs of dimension ≤ 4).
        #[arg(long)]
        oracle: Option<usize>,
    },
    /// Completely bounded p→q norm.
    Cbnorm {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pq: PqArgs,
        /// Largest ancilla dimension searched.
        #[arg(long, default_value_t = 2)]
        d_max: usize,
        /// Outer exponent of the vector-valued norms.
        #[arg(long, value_parser = parse_pvalue, default_value = "inf")]
        t: PValue,
    },
    /// (t,p) vector-valued norm of an operator on C ⊗ A.
    Tpnorm {
        /// `{"dims":[dC,dA],"matrix":…}`, a file, or a state builder.
        #[arg(long)]
        matrix: String,
        #[arg(long, value_parser = parse_pvalue)]
        t: PValue,
        #[arg(long, value_parser = parse_pvalue)]
        p: PValue,
    },
    /// Tilde state with exponents (p, q).
    Tilde {
        #[arg(long)]
        state: String,
        #[arg(long, value_parser = parse_pvalue)]
        p: PValue,
        #[arg(long, value_parser = parse_pvalue)]
        q: PValue,
    },
    /// Hypercontractivity ribbons.
    #[command(subcommand)]
    Ribbon(RibbonCmd),
    /// Local state transformation bounds.
    #[command(subcommand)]
    Transform(TransformCmd),
    /// Compare optimizers against oracles and closed forms.
    Selftest,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct MapArgs {
    /// Channel source: `{"dims":[din,dout],"choi":…}`, a file, or a builder.
    #[arg(long)]
    channel: Option<String>,
    /// Use the ribbon map of this state, with tilde exponents (p, q') for a p→q' norm.
    #[arg(long)]
    tilde_of: Option<String>,
}

#[derive(Args, Debug)]
struct PqArgs {
    #[arg(long, value_parser = parse_pvalue)]
    p: PValue,
    #[arg(long, value_parser = parse_pvalue)]
    q: PValue,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Plain,
    Cb,
}

impl From<KindArg> for RibbonKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Plain => RibbonKind::Plain,
            KindArg::Cb => RibbonKind::Cb,
        }
    }
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[arg(long)]
    state: String,
    #[arg(long, value_delimiter = ',', default_value = "1.25,1.5,2,3,4")]
    p_grid: Vec<f64>,
    /// Tensor power.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, value_enum, default_value = "plain")]
    kind: KindArg,
}

#[derive(Subcommand, Debug)]
enum RibbonCmd {
    /// Is (p, q') in the ribbon?
    Member {
        #[arg(long)]
        state: String,
        #[arg(long, value_parser = parse_pvalue)]
        p: PValue,
        #[arg(long, value_parser = parse_pvalue)]
        q_prime: PValue,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value = "plain")]
        kind: KindArg,
    },
    /// Trace the boundary by bisection in 1/q'.
    Trace {
        #[command(flatten)]
        trace: TraceArgs,
        /// Emit CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Structural checks on a state's ribbon.
    #[command(subcommand)]
    Check(CheckCmd),
}

#[derive(Subcommand, Debug)]
enum CheckCmd {
    /// Membership of (p, q') for ρ against (q, p') for the swapped state.
    Duality {
        #[arg(long)]
        state: String,
        #[arg(long, value_parser = parse_pvalue)]
        p: PValue,
        #[arg(long, value_parser = parse_pvalue)]
        q_prime: PValue,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Midpoints of traced boundary samples are members.
    Convexity {
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Traced boundary slopes stay above μ².
    MuBound {
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// A local channel on B does not shrink the ribbon.
    DataProcessing {
        #[arg(long)]
        state: String,
        #[arg(long)]
        channel: String,
        /// Points as `p:q'`, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<String>,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum TransformCmd {
    /// Impossibility test for a local transformation.
    Check {
        /// Source bell-depolarized:ALPHA with target zeta.
        #[arg(long, conflicts_with_all = ["source", "target"])]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<f64>>,
        /// Any source state; its ribbon boundary is traced.
        #[arg(long, requires = "target")]
        source: Option<String>,
        /// Classical target state.
        #[arg(long, requires = "source")]
        target: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "1.25,1.5,2,3,4")]
        p_grid: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value = "plain")]
        kind: KindArg,
    },
    /// The α below which bell-depolarized:α cannot produce zeta.
    Threshold,
}

/// Optional defaults loaded from `--config`.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    optimizer: Option<OptimizerOpts>,
    ribbon: Option<RibbonConfig>,
}

struct Settings {
    ribbon: RibbonConfig,
    tp: OptimizerOpts,
}

impl Settings {
    fn load(g: &GlobalOpts) -> Result<Self> {
        let file = match &g.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read config '{}': {e}", path.display())))?;
                toml::from_str::<ConfigFile>(&text).map_err(|e| Error::Parse(format!("config '{}': {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let mut ribbon = file.ribbon.unwrap_or_default();
        let mut tp = OptimizerOpts::tp_default();
        if let Some(o) = file.optimizer {
            tp = OptimizerOpts { restarts: tp.restarts.min(o.restarts), ..o.clone() };
            ribbon.opt = o;
        }
        for opt in [&mut ribbon.opt, &mut tp] {
            if let Some(s) = g.seed {
                opt.seed = s;
            }
            if let Some(r) = g.restarts {
                opt.restarts = r;
            }
            if let Some(m) = g.max_iters {
                opt.max_iters = m;
            }
        }
        if let Some(t) = g.tol {
            ribbon.tol = t;
        }
        if let Some(c) = g.tensor_cap {
            ribbon.tensor_cap = c;
        }
        if !(ribbon.tol >= 0.0) || !ribbon.tol.is_finite() {
            return Err(Error::param("tol must be a non-negative number"));
        }
        if ribbon.opt.restarts == 0 || ribbon.opt.max_iters == 0 {
            return Err(Error::param("restarts and max-iters must be positive"));
        }
        Ok(Settings { ribbon, tp })
    }

    fn echo(&self) -> Value {
        json!({"seed": self.ribbon.opt.seed, "restarts": self.ribbon.opt.restarts, "max_iters": self.ribbon.opt.max_iters})
    }
}

enum Body {
    Json(Value),
    Text(String),
}

struct Outcome {
    body: Body,
    converged: bool,
    selftest_failed: bool,
}

impl Outcome {
    fn json(v: Value) -> Self {
        Outcome {
            body: Body::Json(v),
            converged: true,
            selftest_failed: false,
        }
    }

    fn strict(mut self, converged: bool) -> Self {
        self.converged &= converged;
        self
    }
}

/// Header fields followed by the result's own fields.
fn document(command: &str, input: Value, result: impl Serialize) -> Result<Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert("input".into(), input);
    match serde_json::to_value(result).map_err(|e| Error::Parse(e.to_string()))? {
        Value::Object(r) => m.extend(r),
        other => {
            m.insert("result".into(), other);
        }
    }
    Ok(Value::Object(m))
}

fn load_map(m: &MapArgs, pq: &PqArgs) -> Result<(SuperOp, Value)> {
    match (&m.channel, &m.tilde_of) {
        (Some(ch), None) => {
            let (map, e) = parse_channel(ch)?;
            Ok((map, json!({"channel": e})))
        }
        (None, Some(st)) => {
            let (rho, e) = parse_state(st)?;
            Ok((tilde_map(&rho, TildeParams::new(pq.p, pq.q.conjugate())), json!({"tilde_of": e})))
        }
        _ => Err(Error::param("give exactly one of --channel or --tilde-of")),
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > 8 {
        return Err(Error::param(format!("n must lie in 1..=8, got {n}")));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("p grid is empty"));
    }
    for &p in grid {
        PValue::new(p)?;
    }
    Ok(())
}

fn parse_points(points: &[String]) -> Result<Vec<RibbonPoint>> {
    points
        .iter()
        .map(|s| {
            let (p, q) = s.split_once(':').ok_or_else(|| Error::Parse(format!("point '{s}' must look like p:q'")))?;
            RibbonPoint::new(p.parse()?, q.parse()?)
        })
        .collect()
}

fn execute(cli: &Cli, s: &Settings) -> Result<Outcome> {
    let cfg = &s.ribbon;
    let base = s.echo();
    let with = |extra: Value| -> Value {
        let mut m = base.as_object().cloned().unwrap_or_default();
        if let Value::Object(e) = extra {
            m.extend(e);
        }
        Value::Object(m)
    };
    match &cli.command {
        Command::Maxcorr { state, complex } => {
            let (rho, e) = parse_state(state)?;
            let mu = max_correlation(&rho)?.mu;
            let mut r = json!({"mu": mu});
            if *complex {
                r["mu_complex"] = json!(max_correlation_complex(&rho)?.mu);
            }
            Ok(Outcome::json(document("maxcorr", json!({"state": e, "params": {}}), r)?))
        }
        Command::Opnorm { map, pq, oracle } => {
            let (m, e) = load_map(map, pq)?;
            if let Some(res) = oracle {
                if *res == 0 || m.dims().0 > 4 {
                    return Err(Error::param("--oracle needs a positive resolution and input dimension at most 4"));
                }
            }
            let est = op_norm(&m, pq.p, pq.q, &cfg.opt);
            let mut r = serde_json::to_value(&est).map_err(|e| Error::Parse(e.to_string()))?;
            if let Some(res) = oracle {
                r["oracle"] = json!(op_norm_oracle(&m, pq.p, pq.q, *res)?);
            }
            let input = json!({"map": e, "params": with(json!({"p": pq.p, "q": pq.q, "oracle": oracle}))});
            Ok(Outcome::json(document("opnorm", input, r)?).strict(est.converged))
        }
        Command::Cbnorm { map, pq, d_max, t } => {
            let (m, e) = load_map(map, pq)?;
            if *d_max == 0 || *d_max > 4 {
                return Err(Error::param("--d-max must lie in 1..=4"));
            }
            let cb = cb_norm(&m, pq.p, pq.q, *d_max, *t, &cfg.opt);
            let input = json!({"map": e, "params": with(json!({"p": pq.p, "q": pq.q, "d_max": d_max, "t": t}))});
            let conv = cb.estimate.converged;
            Ok(Outcome::json(document("cbnorm", input, cb)?).strict(conv))
        }
        Command::Tpnorm { matrix, t, p } => {
            let (x, dims, e) = parse_matrix(matrix)?;
            let est = vector_norm_tp(&x, dims, *t, *p, &s.tp)?;
            let input = json!({"matrix": e, "params": {"t": t, "p": p, "seed": s.tp.seed, "restarts": s.tp.restarts}});
            let conv = est.converged;
            Ok(Outcome::json(document("tpnorm", input, est)?).strict(conv))
        }
        Command::Tilde { state, p, q } => {
            let (rho, e) = parse_state(state)?;
            let t = tilde_state(&rho, TildeParams::new(*p, *q));
            let (da, db) = rho.dims();
            let r = json!({"dims": [da, db], "matrix": matrix_to_json(&t), "trace": t.trace().re});
            Ok(Outcome::json(document("tilde", json!({"state": e, "params": {"p": p, "q": q}}), r)?))
        }
        Command::Ribbon(RibbonCmd::Member { state, p, q_prime, n, kind }) => {
            check_n(*n)?;
            let point = RibbonPoint::new(*p, *q_prime)?;
            let (rho, e) = parse_state(state)?;
            let m = ribbon_member(&rho, point, *n, (*kind).into(), cfg)?;
            let input = json!({"state": e, "params": with(json!({"p": p, "q_prime": q_prime, "n": n, "kind": RibbonKind::from(*kind), "tol": cfg.tol}))});
            let conv = m.norm.converged;
            Ok(Outcome::json(document("ribbon member", input, m)?).strict(conv))
        }
        Command::Ribbon(RibbonCmd::Trace { trace, csv }) => {
            check_n(trace.n)?;
            check_grid(&trace.p_grid)?;
            let (rho, e) = parse_state(&trace.state)?;
            let b = ribbon_trace(&rho, &trace.p_grid, trace.n, trace.kind.into(), cfg)?;
            let params = with(json!({"p_grid": trace.p_grid, "n": trace.n, "kind": RibbonKind::from(trace.kind), "bisect_iters": cfg.bisect_iters}));
            if *csv {
                let head = format!("# schema_version={SCHEMA_VERSION} command=ribbon_trace state_sha256={}\n", e["sha256"].as_str().unwrap_or(""));
                return Ok(Outcome {
                    body: Body::Text(head + &b.to_csv()),
                    converged: true,
                    selftest_failed: false,
                });
            }
            Ok(Outcome::json(document("ribbon trace", json!({"state": e, "params": params}), b)?))
        }
        Command::Ribbon(RibbonCmd::Check(c)) => ribbon_check(c, cfg, &with),
        Command::Transform(TransformCmd::Threshold) => Ok(Outcome::json(document(
            "transform threshold",
            json!({"params": {}}),
            json!({"alpha_star": depolarized_to_zeta_threshold()}),
        )?)),
        Command::Transform(TransformCmd::Check { alpha, k_grid, source, target, p_grid, n, kind }) => match (alpha, source, target) {
            (Some(a), None, None) => {
                let v = target_feasibility(*a, k_grid.as_deref())?;
                let input = json!({"params": {"alpha": a, "k_grid": k_grid.as_ref().map_or(json!("default"), |g| json!(g))}});
                Ok(Outcome::json(document("transform check", input, v)?))
            }
            (None, Some(src), Some(tgt)) => {
                check_n(*n)?;
                check_grid(p_grid)?;
                let (rho, es) = parse_state(src)?;
                let (sigma, et) = parse_state(tgt)?;
                let pmf = classical_pmf(&sigma)?;
                let v = generic_from_state(&rho, &pmf, p_grid, *n, (*kind).into(), cfg)?;
                let input = json!({"source": es, "target": et, "params": with(json!({"p_grid": p_grid, "n": n, "kind": RibbonKind::from(*kind)}))});
                Ok(Outcome::json(document("transform check", input, v)?))
            }
            _ => Err(Error::param("give --alpha, or both --source and --target")),
        },
        Command::Selftest => {
            let checks = selftest::run(cfg)?;
            let passed = checks.iter().all(|c| c.passed);
            let doc = document("selftest", json!({"params": base}), json!({"passed": passed, "checks": checks}))?;
            Ok(Outcome {
                body: Body::Json(doc),
                converged: true,
                selftest_failed: !passed,
            })
        }
    }
}

fn ribbon_check(c: &CheckCmd, cfg: &RibbonConfig, with: &dyn Fn(Value) -> Value) -> Result<Outcome> {
    match c {
        CheckCmd::Duality { state, p, q_prime, n } => {
            check_n(*n)?;
            let point = RibbonPoint::new(*p, *q_prime)?;
            let (rho, e) = parse_state(state)?;
            let r = duality_check(&rho, point, *n, cfg)?;
            let conv = r.forward.norm.converged && r.reverse.norm.converged;
            let input = json!({"state": e, "params": with(json!({"p": p, "q_prime": q_prime, "n": n}))});
            Ok(Outcome::json(document("ribbon check duality", input, r)?).strict(conv))
        }
        CheckCmd::Convexity { trace } | CheckCmd::MuBound { trace } => {
            check_n(trace.n)?;
            check_grid(&trace.p_grid)?;
            let (rho, e) = parse_state(&trace.state)?;
            let b = ribbon_trace(&rho, &trace.p_grid, trace.n, trace.kind.into(), cfg)?;
            let input = json!({"state": e, "params": with(json!({"p_grid": trace.p_grid, "n": trace.n, "kind": RibbonKind::from(trace.kind)}))});
            if matches!(c, CheckCmd::Convexity { .. }) {
                Ok(Outcome::json(document("ribbon check convexity", input, convexity_check(&rho, &b, cfg)?)?))
            } else {
                Ok(Outcome::json(document("ribbon check mu-bound", input, mu_bound_check(&rho, &b)?)?))
            }
        }
        CheckCmd::DataProcessing { state, channel, points, n } => {
            check_n(*n)?;
            let pts = parse_points(points)?;
            let (rho, es) = parse_state(state)?;
            let (psi, ec) = parse_channel(channel)?;
            let r = data_processing_check(&rho, &psi, &pts, *n, cfg)?;
            let input = json!({"state": es, "channel": ec, "params": with(json!({"points": pts, "n": n}))});
            Ok(Outcome::json(document("ribbon check data-processing", input, r)?))
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::param(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    // A pool built earlier in the same process wins; that is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn write_out(body: &Body, path: Option<&PathBuf>) -> std::io::Result<()> {
    let text = match body {
        Body::Json(v) => serde_json::to_string_pretty(v).map_err(std::io::Error::other)? + "\n",
        Body::Text(t) => t.clone(),
    };
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

/// Parse `args` (including the program name), run the command and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = init_threads().and_then(|_| Settings::load(&cli.global)).and_then(|s| execute(&cli, &s));
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Err(e) = write_out(&outcome.body, cli.global.output.as_ref()) {
        eprintln!("error: cannot write output: {e}");
        return 2;
    }
    if outcome.selftest_failed {
        1
    } else if cli.global.strict && !outcome.converged {
        eprintln!("error: an optimizer did not converge (--strict)");
        3
    } else {
        0
    }
}
