//! State, channel and matrix sources for the command line.
//!
//! A source is inline JSON (starts with `{`), a builder string such as
//! `bell-depolarized:0.7`, or the path of a JSON file.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::channels::{self, BipartiteState, SuperOp};
use crate::correlation::induced_channel;
use crate::error::{Error, Result};
use crate::matcore::{c, ComplexMatrix};
use crate::schatten::PValue;

pub const STATE_BUILDERS: &str = "bell-depolarized:A, zeta, classical:P00,P01,.. (rows split by ';'), pure:C0,C1,.., random:DA,DB[,SEED]";
pub const CHANNEL_BUILDERS: &str =
    "identity:D, depolarizing:A[,D], classical:W00,W01;W10,W11, random-cptp:DIN,DOUT[,SEED], random-cp:DIN,DOUT[,SEED], induced:<state>";

pub fn parse_pvalue(s: &str) -> std::result::Result<PValue, String> {
    s.parse::<PValue>().map_err(|e| e.to_string())
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("'{t}' is not a number"))))
        .collect()
}

fn integers(s: &str, what: &str, min: usize, max: usize) -> Result<Vec<usize>> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("'{t}' is not a non-negative integer"))))
        .collect::<Result<_>>()?;
    if v.len() < min || v.len() > max {
        return Err(Error::Parse(format!("{what} takes {min} to {max} integers, got '{s}'")));
    }
    Ok(v)
}

/// Rows separated by `;`, or a flat list of square length.
fn table(s: &str) -> Result<Vec<Vec<f64>>> {
    if s.contains(';') {
        return s.split(';').map(numbers).collect();
    }
    let flat = numbers(s)?;
    let d = (flat.len() as f64).sqrt().round() as usize;
    if d == 0 || d * d != flat.len() {
        return Err(Error::Parse(format!("{} entries do not form a square table; separate rows with ';'", flat.len())));
    }
    Ok(flat.chunks(d).map(|r| r.to_vec()).collect())
}

fn dim_limit(d: usize) -> Result<usize> {
    if d == 0 || d > 64 {
        return Err(Error::param(format!("dimension {d} outside 1..=64")));
    }
    Ok(d)
}

/// `sha256` over the dimensions and the row-major `(re, im)` entries, little-endian.
pub fn matrix_hash(m: &ComplexMatrix, dims: (usize, usize)) -> String {
    let mut h = Sha256::new();
    h.update((dims.0 as u64).to_le_bytes());
    h.update((dims.1 as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            h.update(m[(i, j)].re.to_le_bytes());
            h.update(m[(i, j)].im.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(json!([m[(i, j)].re, m[(i, j)].im]));
        }
    }
    Value::Array(out)
}

fn entry(v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Parse(format!("matrix entry {v} is not a number")))
}

/// Row-major `n × n` matrix from `[[re,im], …]`; nested rows are accepted too.
fn matrix_from_json(v: &Value, n: usize) -> Result<ComplexMatrix> {
    let arr = v.as_array().ok_or_else(|| Error::Parse("\"matrix\" must be an array".into()))?;
    let mut flat = Vec::with_capacity(n * n);
    let mut push = |z: &Value| -> Result<()> {
        match z {
            Value::Array(p) if p.len() == 2 && p.iter().all(|x| x.is_number()) => {
                flat.push(c(entry(&p[0])?, entry(&p[1])?));
                Ok(())
            }
            Value::Number(_) => {
                flat.push(c(entry(z)?, 0.0));
                Ok(())
            }
            _ => Err(Error::Parse(format!("matrix entry {z} must be [re, im] or a number"))),
        }
    };
    let nested = !arr.is_empty() && arr.iter().all(|r| r.as_array().is_some_and(|r| r.iter().all(Value::is_array)));
    for item in arr {
        match item {
            Value::Array(row) if nested => row.iter().try_for_each(&mut push)?,
            z => push(z)?,
        }
    }
    if flat.len() != n * n {
        return Err(Error::dims(format!("{} entries", n * n), format!("{} entries", flat.len())));
    }
    Ok(ComplexMatrix::from_row_slice(n, n, &flat))
}

fn json_dims(v: &Value) -> Result<(usize, usize)> {
    let d = v
        .get("dims")
        .and_then(|d| d.as_array())
        .filter(|d| d.len() == 2)
        .ok_or_else(|| Error::Parse("\"dims\" must be a two-element array".into()))?;
    let get = |x: &Value| x.as_u64().map(|x| x as usize).ok_or_else(|| Error::Parse("dims must be positive integers".into()));
    Ok((dim_limit(get(&d[0])?)?, dim_limit(get(&d[1])?)?))
}

fn load_json(src: &str) -> Result<Value> {
    let text = if src.trim_start().starts_with('{') {
        src.to_string()
    } else {
        std::fs::read_to_string(src).map_err(|e| Error::Parse(format!("cannot read '{src}': {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("invalid JSON in '{}': {e}", abbreviate(src))))
}

fn abbreviate(s: &str) -> String {
    if s.len() > 40 {
        format!("{}…", &s[..s.char_indices().nth(40).map_or(s.len(), |(i, _)| i)])
    } else {
        s.to_string()
    }
}

fn split_builder(src: &str) -> (&str, &str) {
    match src.split_once(':') {
        Some((name, rest)) => (name.trim(), rest.trim()),
        None => (src.trim(), ""),
    }
}

fn echo(src: &str, m: &ComplexMatrix, dims: (usize, usize)) -> Value {
    json!({
        "source": abbreviate(src),
        "dims": [dims.0, dims.1],
        "sha256": matrix_hash(m, dims),
    })
}

fn state_builder(name: &str, arg: &str) -> Option<Result<BipartiteState>> {
    let st = match name {
        "bell-depolarized" => arg.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad alpha '{arg}'"))).and_then(channels::bell_depolarized),
        "zeta" if arg.is_empty() => Ok(channels::zeta_state()),
        "classical" => table(arg).and_then(|t| channels::classical_state(&t)),
        "pure" => numbers(arg).and_then(|v| {
            dim_limit(v.len())?;
            channels::pure_state(&v)
        }),
        "random" => integers(arg, "random", 2, 3).and_then(|v| {
            let dims = (dim_limit(v[0])?, dim_limit(v[1])?);
            Ok(channels::random_state(dims, v.get(2).copied().unwrap_or(0) as u64))
        }),
        _ => return None,
    };
    Some(st)
}

/// Parse a state source; returns the state and its input echo.
pub fn parse_state(src: &str) -> Result<(BipartiteState, Value)> {
    let (name, arg) = split_builder(src);
    let st = if src.trim_start().starts_with('{') {
        state_from_json(&load_json(src)?)?
    } else if let Some(st) = state_builder(name, arg) {
        st?
    } else if std::path::Path::new(src).is_file() {
        state_from_json(&load_json(src)?)?
    } else {
        return Err(Error::Parse(format!("unknown state '{}'; expected inline JSON, a file, or one of: {STATE_BUILDERS}", abbreviate(src))));
    };
    let e = echo(src, st.matrix(), st.dims());
    Ok((st, e))
}

fn state_from_json(v: &Value) -> Result<BipartiteState> {
    let dims = json_dims(v)?;
    let m = matrix_from_json(v.get("matrix").ok_or_else(|| Error::Parse("missing \"matrix\"".into()))?, dims.0 * dims.1)?;
    BipartiteState::new(m, dims)
}

/// Parse a general matrix on `C ⊗ A` given as `{"dims":[dC,dA],"matrix":…}`, or any state source.
pub fn parse_matrix(src: &str) -> Result<(ComplexMatrix, (usize, usize), Value)> {
    if src.trim_start().starts_with('{') || std::path::Path::new(src).is_file() {
        let v = load_json(src)?;
        let dims = json_dims(&v)?;
        let m = matrix_from_json(v.get("matrix").ok_or_else(|| Error::Parse("missing \"matrix\"".into()))?, dims.0 * dims.1)?;
        let e = echo(src, &m, dims);
        return Ok((m, dims, e));
    }
    let (st, e) = parse_state(src)?;
    Ok((st.matrix().clone(), st.dims(), e))
}

fn channel_builder(name: &str, arg: &str) -> Option<Result<SuperOp>> {
    let ch = match name {
        "identity" => integers(arg, "identity", 1, 1).and_then(|v| Ok(channels::identity_channel(dim_limit(v[0])?))),
        "depolarizing" => numbers(arg).and_then(|v| match v.as_slice() {
            [a] => channels::depolarizing(*a, 2),
            [a, d] if d.fract() == 0.0 && *d >= 1.0 => channels::depolarizing(*a, dim_limit(*d as usize)?),
            _ => Err(Error::Parse(format!("depolarizing takes ALPHA[,D], got '{arg}'"))),
        }),
        "classical" => table(arg).and_then(|t| channels::classical_channel(&t)),
        "random-cptp" | "random-cp" => integers(arg, name, 2, 3).and_then(|v| {
            let dims = (dim_limit(v[0])?, dim_limit(v[1])?);
            let seed = v.get(2).copied().unwrap_or(0) as u64;
            Ok(if name == "random-cp" { channels::random_cp(dims, seed) } else { channels::random_cptp(dims, seed) })
        }),
        "induced" => parse_state(arg).map(|(st, _)| induced_channel(&st)),
        _ => return None,
    };
    Some(ch)
}

/// Parse a channel source: `{"dims":[din,dout],"choi":…}`, a file, or a builder.
pub fn parse_channel(src: &str) -> Result<(SuperOp, Value)> {
    let (name, arg) = split_builder(src);
    let ch = if src.trim_start().starts_with('{') {
        channel_from_json(&load_json(src)?)?
    } else if let Some(ch) = channel_builder(name, arg) {
        ch?
    } else if std::path::Path::new(src).is_file() {
        channel_from_json(&load_json(src)?)?
    } else {
        return Err(Error::Parse(format!("unknown channel '{}'; expected inline JSON, a file, or one of: {CHANNEL_BUILDERS}", abbreviate(src))));
    };
    let e = echo(src, ch.choi(), ch.dims());
    Ok((ch, e))
}

fn channel_from_json(v: &Value) -> Result<SuperOp> {
    let dims = json_dims(v)?;
    let m = matrix_from_json(v.get("choi").ok_or_else(|| Error::Parse("missing \"choi\"".into()))?, dims.0 * dims.1)?;
    SuperOp::from_choi(m, dims)
}

/// Joint pmf of a classical (diagonal) state.
pub fn classical_pmf(st: &BipartiteState) -> Result<Vec<Vec<f64>>> {
    let m = st.matrix();
    let (da, db) = st.dims();
    let off = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[(i, j)].norm()).fold(0.0, f64::max);
    if off > 1e-12 {
        return Err(Error::param("target state must be classical (diagonal)"));
    }
    Ok((0..da).map(|a| (0..db).map(|b| m[(a * db + b, a * db + b)].re.max(0.0)).collect()).collect())
}
