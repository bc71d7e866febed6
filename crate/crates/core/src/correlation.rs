//! Maximal correlation, relative entropy and the KL-ratio bound.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channels::{conjugate, gamma_map, BipartiteState, SuperOp};
use crate::error::{Error, Result};
use crate::matcore::{self, c, hermitian_eigen, log_psd, trace, ComplexMatrix};
use crate::optim;
use crate::rng;
use crate::schatten::{hermitian_from_params, PValue};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub mu: f64,
    #[serde(skip)]
    pub witness_x: ComplexMatrix,
    #[serde(skip)]
    pub witness_y: ComplexMatrix,
}

/// Orthonormal eigenvectors spanning the support, with their eigenvalues.
fn support_basis(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let (vals, vecs) = hermitian_eigen(m);
    let top = vals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > matcore::RANK_CUTOFF * top).collect();
    let mut basis = ComplexMatrix::zeros(m.nrows(), keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        basis.set_column(dst, &vecs.column(k));
    }
    (keep.iter().map(|&k| vals[k]).collect(), basis)
}

/// Real basis of the `r × r` Hermitian matrices.
fn hermitian_basis(r: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let mut h = ComplexMatrix::zeros(r, r);
            if i == j {
                h[(i, i)] = c(1.0, 0.0);
            } else if i < j {
                h[(i, j)] = c(1.0, 0.0);
                h[(j, i)] = c(1.0, 0.0);
            } else {
                h[(i, j)] = c(0.0, 1.0);
                h[(j, i)] = c(0.0, -1.0);
            }
            out.push(h);
        }
    }
    out
}

/// Whitening map `G^{-1/2}` for the variance form `x ↦ tr(Λ X²)`, and the
/// whitened direction of the mean functional `x ↦ tr(Λ X)`.
fn whitening(lam: &[f64], basis: &[ComplexMatrix]) -> (DMatrix<f64>, DVector<f64>) {
    let n = basis.len();
    let l = matcore::diag_real(lam);
    let g = DMatrix::from_fn(n, n, |a, b| trace(&(&l * &basis[a] * &basis[b])).re);
    let e = g.symmetric_eigen();
    let w = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.powf(-0.5))) * e.eigenvectors.transpose();
    let m = DVector::from_fn(n, |a, _| trace(&(&l * &basis[a])).re);
    let v = &w * m;
    let norm = v.norm();
    (w, v / norm)
}

/// `μ(ρ) = max |tr(ρ X ⊗ Y)|` over centred, unit-variance Hermitian `X, Y`.
///
/// On the marginal supports the objective is a real bilinear form in the
/// Hermitian coordinates, so after whitening both variance forms and
/// projecting out the mean directions `μ` is its top singular value.
pub fn max_correlation(rho: &BipartiteState) -> Result<CorrelationResult> {
    let (da, db) = rho.dims();
    let (la, sa) = support_basis(&rho.marginal_a());
    let (lb, sb) = support_basis(&rho.marginal_b());
    let (ra, rb) = (la.len(), lb.len());
    if ra < 2 || rb < 2 {
        return Ok(CorrelationResult {
            mu: 0.0,
            witness_x: ComplexMatrix::zeros(da, da),
            witness_y: ComplexMatrix::zeros(db, db),
        });
    }
    let rho_s = sa.kronecker(&sb).adjoint() * rho.matrix() * sa.kronecker(&sb);
    let (ha, hb) = (hermitian_basis(ra), hermitian_basis(rb));
    let bil = DMatrix::from_fn(ha.len(), hb.len(), |a, b| trace(&(&rho_s * ha[a].kronecker(&hb[b]))).re);
    let (wa, va) = whitening(&la, &ha);
    let (wb, vb) = whitening(&lb, &hb);
    let pa = DMatrix::identity(ha.len(), ha.len()) - &va * va.transpose();
    let pb = DMatrix::identity(hb.len(), hb.len()) - &vb * vb.transpose();
    let t = &pa * &wa * bil * &wb * &pb;
    let svd = t.svd(true, true);
    let k = svd.singular_values.imax();
    let mu = svd.singular_values[k];
    let xa = &wa * &pa * svd.u.expect("u").column(k);
    let yb = &wb * &pb * svd.v_t.expect("v").row(k).transpose();
    let combine = |coef: &DVector<f64>, basis: &[ComplexMatrix], s: &ComplexMatrix| {
        let r = s.ncols();
        let h = basis.iter().zip(coef.iter()).fold(ComplexMatrix::zeros(r, r), |acc, (b, &x)| acc + b * c(x, 0.0));
        s * h * s.adjoint()
    };
    Ok(CorrelationResult {
        mu: mu.clamp(0.0, 1.0),
        witness_x: combine(&xa, &ha, &sa),
        witness_y: combine(&yb, &hb, &sb),
    })
}

/// The maximum of `|tr(ρ X ⊗ Y†)|` over all centred, unit-variance
/// `X, Y`, Hermitian or not.
///
/// For states with complex entries this can exceed [`max_correlation`],
/// and then it does not bound the ribbon slope. In the coordinates `â = diag(λ)^{1/2} x` on the support of `ρ_A` (and
/// likewise for `B`) the bilinear form becomes an ordinary matrix whose
/// top singular value, after projecting out the identity directions, is `μ`.
pub fn max_correlation_complex(rho: &BipartiteState) -> Result<CorrelationResult> {
    let (da, db) = rho.dims();
    let (la, sa) = support_basis(&rho.marginal_a());
    let (lb, sb) = support_basis(&rho.marginal_b());
    let (ra, rb) = (la.len(), lb.len());
    let s = sa.kronecker(&sb);
    let rho_s = s.adjoint() * rho.matrix() * &s;
    let inv_a: Vec<f64> = la.iter().map(|x| x.powf(-0.5)).collect();
    let inv_b: Vec<f64> = lb.iter().map(|x| x.powf(-0.5)).collect();
    // M = (I ⊗ D_B) ρ' (D_A ⊗ I)
    let m = ComplexMatrix::from_fn(ra * rb, ra * rb, |r, cidx| {
        let (_, l) = (r / rb, r % rb);
        let (i, _) = (cidx / rb, cidx % rb);
        rho_s[(r, cidx)] * inv_b[l] * inv_a[i]
    });
    // T[(l,k),(i,j)] = M[(j,l),(i,k)]
    let t = ComplexMatrix::from_fn(rb * rb, ra * ra, |r, cidx| {
        let (l, k) = (r / rb, r % rb);
        let (i, j) = (cidx / ra, cidx % ra);
        m[(j * rb + l, i * rb + k)]
    });
    let a0 = nalgebra::DVector::from_fn(ra * ra, |idx, _| {
        let (i, j) = (idx / ra, idx % ra);
        if i == j { c(la[i].sqrt(), 0.0) } else { c(0.0, 0.0) }
    });
    let b0 = nalgebra::DVector::from_fn(rb * rb, |idx, _| {
        let (i, j) = (idx / rb, idx % rb);
        if i == j { c(lb[i].sqrt(), 0.0) } else { c(0.0, 0.0) }
    });
    let pa = ComplexMatrix::identity(ra * ra, ra * ra) - &a0 * a0.adjoint();
    let pb = ComplexMatrix::identity(rb * rb, rb * rb) - &b0 * b0.adjoint();
    let tp = &pb * t * &pa;

    if ra < 2 || rb < 2 {
        return Ok(CorrelationResult {
            mu: 0.0,
            witness_x: ComplexMatrix::zeros(da, da),
            witness_y: ComplexMatrix::zeros(db, db),
        });
    }
    let svd = tp.svd(true, true);
    let mut k = 0;
    for i in 1..svd.singular_values.len() {
        if svd.singular_values[i] > svd.singular_values[k] {
            k = i;
        }
    }
    let mu = svd.singular_values[k];
    let u = svd.u.expect("u");
    let vt = svd.v_t.expect("v");
    let ahat = ComplexMatrix::from_fn(ra, ra, |i, j| vt[(k, i * ra + j)].conj());
    let yhat = ComplexMatrix::from_fn(rb, rb, |i, j| u[(i * rb + j, k)]);
    let xs = ComplexMatrix::from_fn(ra, ra, |i, j| ahat[(i, j)] * inv_a[i]);
    let ys = ComplexMatrix::from_fn(rb, rb, |i, j| yhat[(i, j)] * inv_b[i]);
    let x = &sa * xs * sa.adjoint();
    let y = &sb * ys * sb.adjoint();
    Ok(CorrelationResult {
        mu: mu.clamp(0.0, 1.0),
        witness_x: x,
        witness_y: y,
    })
}

/// Direct maximisation over Hermitian observables, for validating [`max_correlation`].
pub fn max_correlation_oracle(rho: &BipartiteState, restarts: usize, seed: u64) -> Result<f64> {
    let (da, db) = rho.dims();
    if da > 3 || db > 3 {
        return Err(Error::DimTooLarge {
            what: "max_correlation_oracle".into(),
            dim: da.max(db),
            limit: 3,
        });
    }
    let ra = rho.marginal_a();
    let rb = rho.marginal_b();
    let centre = |h: ComplexMatrix, m: &ComplexMatrix| -> Option<ComplexMatrix> {
        let d = h.nrows();
        let mean = trace(&(m * &h)).re;
        let x = h - ComplexMatrix::identity(d, d) * c(mean, 0.0);
        let var = trace(&(m * &x * &x)).re;
        if var > 1e-14 {
            Some(x / c(var.sqrt(), 0.0))
        } else {
            None
        }
    };
    let na = da * da;
    let cost = |v: &[f64]| -> f64 {
        let x = centre(hermitian_from_params(&v[..na], da), &ra);
        let y = centre(hermitian_from_params(&v[na..], db), &rb);
        match (x, y) {
            (Some(x), Some(y)) => -trace(&(rho.matrix() * x.kronecker(&y))).re,
            _ => 0.0,
        }
    };
    let mut r = rng::seeded(seed);
    let mut best: f64 = 0.0;
    for _ in 0..restarts.max(1) {
        let x0: Vec<f64> = (0..na + db * db).map(|_| rng::normal(&mut r)).collect();
        let (_, v) = optim::minimize(cost, x0, 2000);
        best = best.max(-v);
    }
    Ok(best.min(1.0))
}

/// `Φ = Ω_ρ ∘ Γ_{ρ_A*}^{-1}`, a channel sending `ρ_A*` to `ρ_B`.
pub fn induced_channel(rho: &BipartiteState) -> SuperOp {
    let pre = gamma_map(&conjugate(&rho.marginal_a()), -1.0).expect("marginal is PSD");
    pre.then(&rho.omega()).expect("dims")
}

/// `D(σ‖ρ) = tr σ (log σ - log ρ)` in nats, `+∞` when the supports are incompatible.
pub fn kl_divergence(sigma: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    if sigma.shape() != rho.shape() {
        return Err(Error::dims(format!("{}x{}", rho.nrows(), rho.ncols()), format!("{}x{}", sigma.nrows(), sigma.ncols())));
    }
    let proj = matcore::support_projector(rho)?;
    let d = rho.nrows();
    let outside = trace(&(sigma * (ComplexMatrix::identity(d, d) - proj))).re;
    if outside > 1e-12 {
        return Ok(f64::INFINITY);
    }
    let ls = log_psd(sigma)?;
    let lr = log_psd(rho)?;
    Ok(trace(&(sigma * (ls - lr))).re.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlRatioReport {
    pub d_a: f64,
    pub d_b: f64,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `D(σ_B ‖ ρ_B) / D(σ_A ‖ ρ_A)` against `q/p'`, with `σ_B = Φ(σ_A*)` for the induced channel.
///
/// The caller is responsible for `(p, q')` lying in the ribbon of `ρ`.
pub fn kl_ratio_check(rho: &BipartiteState, sigma_a: &ComplexMatrix, p: PValue, q_prime: PValue) -> Result<KlRatioReport> {
    if q_prime < p {
        return Err(Error::param("ribbon points need q' >= p"));
    }
    let d_a = kl_divergence(sigma_a, &rho.marginal_a())?;
    if d_a < 1e-12 {
        return Err(Error::DegenerateInput("sigma_A coincides with rho_A".into()));
    }
    let phi = induced_channel(rho);
    let sigma_b = phi.apply(&conjugate(sigma_a))?;
    let d_b = kl_divergence(&matcore::hermitian_part(&sigma_b), &rho.marginal_b())?;
    let bound = if p == q_prime {
        1.0
    } else {
        q_prime.conjugate().get() * (1.0 - p.recip())
    };
    let ratio = d_b / d_a;
    Ok(KlRatioReport {
        d_a,
        d_b,
        ratio,
        bound,
        holds: ratio <= bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bell_depolarized, pure_state, random_cptp, random_product_state, random_state, zeta_state, local_apply};
    use crate::matcore::{diag_real, Subsystem};
    use approx::assert_relative_eq;

    fn check_witness(rho: &BipartiteState, r: &CorrelationResult) {
        let (ra, rb) = (rho.marginal_a(), rho.marginal_b());
        let (x, y) = (&r.witness_x, &r.witness_y);
        assert!(trace(&(&ra * x)).norm() < 1e-8);
        assert!(trace(&(&rb * y)).norm() < 1e-8);
        assert!((trace(&(&ra * x * x.adjoint())).re - 1.0).abs() < 1e-8);
        assert!((trace(&(&rb * y * y.adjoint())).re - 1.0).abs() < 1e-8);
        let v = trace(&(rho.matrix() * x.kronecker(&y.adjoint()))).norm();
        assert!((v - r.mu).abs() < 1e-8, "{v} vs {}", r.mu);
    }

    #[test]
    fn bell_family() {
        for a in [0.0, 0.25, 0.5, 0.7, 1.0] {
            let rho = bell_depolarized(a).unwrap();
            let r = max_correlation(&rho).unwrap();
            assert_relative_eq!(r.mu, a, epsilon = 1e-10);
            if a > 0.0 {
                check_witness(&rho, &r);
            }
        }
    }

    #[test]
    fn zeta_is_one_half() {
        let rho = zeta_state();
        let r = max_correlation(&rho).unwrap();
        assert_relative_eq!(r.mu, 0.5, epsilon = 1e-12);
        check_witness(&rho, &r);
    }

    #[test]
    fn product_and_pure() {
        assert!(max_correlation(&random_product_state((2, 3), 1)).unwrap().mu < 1e-10);
        let r = max_correlation(&pure_state(&[0.6, 0.8]).unwrap()).unwrap();
        assert_relative_eq!(r.mu, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn random_witnesses() {
        for s in 0..5 {
            let rho = random_state((2, 3), s);
            check_witness(&rho, &max_correlation(&rho).unwrap());
        }
    }

    #[test]
    fn oracle_matches() {
        let rho = random_state((2, 2), 42);
        let mu = max_correlation(&rho).unwrap().mu;
        let o = max_correlation_oracle(&rho, 6, 1).unwrap();
        assert!((mu - o).abs() < 1e-5, "{mu} vs {o}");
    }

    #[test]
    fn complex_variant_dominates() {
        for s in 0..4 {
            let rho = random_state((2, 2), s);
            let h = max_correlation(&rho).unwrap().mu;
            let g = max_correlation_complex(&rho).unwrap();
            assert!(g.mu >= h - 1e-10);
            check_witness(&rho, &g);
        }
    }

    #[test]
    fn local_channels_do_not_increase_mu() {
        let rho = random_state((2, 2), 7);
        let sigma = local_apply(&rho, &random_cptp((2, 2), 8), Subsystem::B).unwrap();
        assert!(max_correlation(&sigma).unwrap().mu <= max_correlation(&rho).unwrap().mu + 1e-8);
    }

    #[test]
    fn kl_closed_form() {
        let s = diag_real(&[0.5, 0.5]);
        let r = diag_real(&[1.0 / 3.0, 2.0 / 3.0]);
        let want = 0.5 * (1.5f64).ln() + 0.5 * (0.75f64).ln();
        assert_relative_eq!(kl_divergence(&s, &r).unwrap(), want, epsilon = 1e-12);
        assert_eq!(kl_divergence(&s, &s).unwrap(), 0.0);
        assert_eq!(kl_divergence(&s, &diag_real(&[1.0, 0.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn induced_channel_is_cptp() {
        let rho = random_state((2, 3), 5);
        let phi = induced_channel(&rho);
        assert!(phi.is_cptp());
        let out = phi.apply(&conjugate(&rho.marginal_a())).unwrap();
        assert!(matcore::max_abs(&(out - rho.marginal_b())) < 1e-9);
    }

    #[test]
    fn kl_ratio_on_diagonal_is_data_processing() {
        let rho = random_state((2, 2), 3);
        let sigma = rng::random_psd(&mut rng::seeded(4), 2, 2);
        let p = PValue::new(2.0).unwrap();
        let rep = kl_ratio_check(&rho, &sigma, p, p).unwrap();
        assert_eq!(rep.bound, 1.0);
        assert!(rep.holds);
        assert!(matches!(kl_ratio_check(&rho, &rho.marginal_a(), p, p), Err(Error::DegenerateInput(_))));
    }
}
