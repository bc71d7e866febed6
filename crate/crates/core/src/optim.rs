//! Smooth unconstrained minimisation over `R^n` (L-BFGS with a finite-difference gradient).

use std::cell::{Cell, RefCell};
use std::rc::Rc;

use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;

const PENALTY: f64 = 1e300;

struct Problem<F> {
    f: F,
    best: Rc<RefCell<(Vec<f64>, f64)>>,
    evals: Cell<usize>,
    last_gain: Cell<usize>,
    budget: usize,
    patience: usize,
}

impl<F: Fn(&[f64]) -> f64> Problem<F> {
    fn eval(&self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        let v = if v.is_finite() { v } else { PENALTY };
        let n = self.evals.get() + 1;
        self.evals.set(n);
        let mut b = self.best.borrow_mut();
        if v < b.1 {
            if b.1 - v > 1e-14 * v.abs().max(1e-300) {
                self.last_gain.set(n);
            }
            *b = (x.to_vec(), v);
        }
        v
    }

    /// The line search has no iteration cap of its own, so runs that stop
    /// improving or exhaust the budget are aborted from inside the callbacks.
    fn exhausted(&self) -> Result<(), ArgminError> {
        let n = self.evals.get();
        if n >= self.budget || n - self.last_gain.get() > self.patience {
            return Err(ArgminError::msg("evaluation budget exhausted"));
        }
        Ok(())
    }
}

impl<F: Fn(&[f64]) -> f64> CostFunction for Problem<F> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, x: &Self::Param) -> Result<f64, ArgminError> {
        self.exhausted()?;
        Ok(self.eval(x))
    }
}

impl<F: Fn(&[f64]) -> f64> Gradient for Problem<F> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, x: &Self::Param) -> Result<Vec<f64>, ArgminError> {
        self.exhausted()?;
        let mut y = x.clone();
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let h = 1e-6 * x[i].abs().max(1.0);
            y[i] = x[i] + h;
            let up = self.eval(&y);
            y[i] = x[i] - h;
            let dn = self.eval(&y);
            y[i] = x[i];
            g[i] = (up - dn) / (2.0 * h);
        }
        Ok(g)
    }
}

/// Minimise `f` from `x0`, returning the best point seen and its value.
///
/// Line-search failures end the run early but keep the best iterate.
pub(crate) fn minimize(f: impl Fn(&[f64]) -> f64, x0: Vec<f64>, max_iters: u64) -> (Vec<f64>, f64) {
    let best = Rc::new(RefCell::new((x0.clone(), f64::INFINITY)));
    let per_grad = 2 * x0.len() + 1;
    let problem = Problem {
        f,
        best: best.clone(),
        evals: Cell::new(0),
        last_gain: Cell::new(0),
        budget: per_grad * 4 * (max_iters as usize).min(1000),
        patience: per_grad * 25,
    };
    problem.eval(&x0);
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 7)
        .with_tolerance_grad(1e-12)
        .and_then(|s| s.with_tolerance_cost(1e-16));
    if let Ok(solver) = solver {
        let _ = Executor::new(problem, solver)
            .configure(|st| st.param(x0).max_iters(max_iters))
            .run();
    }
    let out = best.borrow().clone();
    out
}
