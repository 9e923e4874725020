//! Oracle interfaces and the core numeric records shared by all solvers.
//!
//! A problem is a pair of oracles over ℝⁿ: a smooth objective f and a smooth
//! constraint map h: ℝⁿ → ℝ^{n_h} whose zero set is the feasible manifold.
//! Everything downstream (direction fields, solvers, diagnostics) talks to
//! these two traits and never to a concrete problem type.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth objective oracle: value, gradient, and an optional unbiased
/// stochastic gradient addressed by seed.
pub trait ObjectiveOracle: Send + Sync {
    fn eval(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Seeded stochastic gradient estimate, unbiased for `gradient` in
    /// expectation over seeds. Returns `None` when the oracle is purely
    /// deterministic (the default).
    fn stochastic_gradient(&self, _x: &DVector<f64>, _seed: u64) -> Option<DVector<f64>> {
        None
    }
}

/// Smooth constraint oracle. `jacobian` returns the n×n_h matrix whose i-th
/// column is ∇h_i(x).
pub trait ConstraintOracle: Send + Sync {
    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Bandwidth of the Gram matrix ∇hᵀ∇h when the oracle knows it is
    /// banded (e.g. chained local constraints). `None` means dense.
    fn gram_bandwidth(&self) -> Option<usize> {
        None
    }

    /// Set when h(X) is the packed Stiefel constraint XᵀX − I on p×q
    /// matrices; direction fields then use the O(pq²) Sylvester projection
    /// instead of the dense Gram path.
    fn stiefel_shape(&self) -> Option<(usize, usize)> {
        None
    }
}

/// A constrained problem: oracles plus dimensions and the safety region
/// radius r₁ defining K = {x : ‖h(x)‖ ≤ r₁}.
pub struct ProblemInstance {
    pub objective: Box<dyn ObjectiveOracle>,
    pub constraint: Box<dyn ConstraintOracle>,
    pub n: usize,
    pub n_h: usize,
    pub safety_radius_r1: f64,
}

impl ProblemInstance {
    pub fn new(
        objective: Box<dyn ObjectiveOracle>,
        constraint: Box<dyn ConstraintOracle>,
        n: usize,
        n_h: usize,
        safety_radius_r1: f64,
    ) -> Result<Self> {
        if n_h > n {
            return Err(Error::Dimension(format!(
                "constraint count n_h = {n_h} exceeds ambient dimension n = {n}"
            )));
        }
        if !(safety_radius_r1 > 0.0) {
            return Err(Error::Config(format!(
                "safety radius r1 must be positive, got {safety_radius_r1}"
            )));
        }
        Ok(Self { objective, constraint, n, n_h, safety_radius_r1 })
    }
}

/// Merit weight M in Λ_M = f + M‖h‖.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeritParams {
    pub m: f64,
}

impl MeritParams {
    pub fn new(m: f64) -> Result<Self> {
        if m < 0.0 || !m.is_finite() {
            return Err(Error::Config(format!("merit weight M must be ≥ 0, got {m}")));
        }
        Ok(Self { m })
    }
}

/// Merit value Λ_M(x) = f(x) + M·‖h(x)‖₂.
pub fn merit_value(p: &ProblemInstance, merit: MeritParams, x: &DVector<f64>) -> Result<f64> {
    let f = p.objective.eval(x);
    let h = p.constraint.eval(x);
    let hn = h.norm();
    if !f.is_finite() || !hn.is_finite() {
        return Err(Error::Evaluation(format!(
            "merit evaluation produced non-finite output (f = {f}, ‖h‖ = {hn})"
        )));
    }
    Ok(f + merit.m * hn)
}

/// True iff x lies in the safety region K = {x : ‖h(x)‖₂ ≤ r₁}
/// (boundary inclusive).
pub fn in_safety_region(p: &ProblemInstance, x: &DVector<f64>) -> bool {
    p.constraint.eval(x).norm() <= p.safety_radius_r1
}

/// Max-abs deviation between the analytic objective gradient and a central
/// finite difference with the given step.
pub fn objective_fd_deviation(o: &dyn ObjectiveOracle, x: &DVector<f64>, step: f64) -> f64 {
    assert!(step > 0.0, "finite-difference step must be positive");
    let grad = o.gradient(x);
    let mut xp = x.clone();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let fp = o.eval(&xp);
        xp[i] = x[i] - step;
        let fm = o.eval(&xp);
        xp[i] = x[i];
        worst = worst.max(((fp - fm) / (2.0 * step) - grad[i]).abs());
    }
    worst
}

/// Max-abs deviation between the analytic constraint Jacobian and a central
/// finite difference, over all (variable, constraint) pairs.
pub fn constraint_fd_deviation(c: &dyn ConstraintOracle, x: &DVector<f64>, step: f64) -> f64 {
    assert!(step > 0.0, "finite-difference step must be positive");
    let jac = c.jacobian(x);
    let mut xp = x.clone();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let hp = c.eval(&xp);
        xp[i] = x[i] - step;
        let hm = c.eval(&xp);
        xp[i] = x[i];
        for j in 0..hp.len() {
            worst = worst.max(((hp[j] - hm[j]) / (2.0 * step) - jac[(i, j)]).abs());
        }
    }
    worst
}

/// Regularity constants of the problem on the safety region K.
///
/// These are the quantities the step-size rules and rate certificates are
/// built from. They are user-supplied where an analytic value is documented
/// (each problem constructor exposes its own), and can otherwise be
/// estimated by sampling; `estimate_from_samples` records the estimation
/// convention. Fields are `Option` so that a missing constant surfaces as a
/// configuration error at the point of use instead of a silent NaN.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantRegistry {
    /// Lipschitz constant of ∇f on K.
    pub l_f: Option<f64>,
    /// Lipschitz constant of ∇h on K.
    pub l_h: Option<f64>,
    /// Lipschitz constant of ∇H = ∇h·h on K.
    pub l_big_h: Option<f64>,
    /// Lipschitz constant of f on K (sup‖∇f‖).
    pub c_f: Option<f64>,
    /// Lipschitz constant of h on K (sup‖∇h‖₂).
    pub c_h: Option<f64>,
    /// sup over K of ‖∇h·A‖₂.
    pub c_a: Option<f64>,
    /// Lower bound on the smallest eigenvalue of ∇hᵀ∇h·A on K.
    pub alpha_m: Option<f64>,
    /// Lower bound on the smallest singular value of ∇h on K.
    pub mu_h: Option<f64>,
    /// sup over K of ‖∇h‖₂.
    pub m_h: Option<f64>,
    /// sup over K of ‖∇f‖.
    pub b_f: Option<f64>,
    /// sup over K of ‖Aᵀ∇hᵀ(∇f − ∇h·A·h)‖.
    pub m_1: Option<f64>,
    /// Merit threshold M̄ = M_1/α_m.
    pub m_bar: Option<f64>,
    /// Merit gap Λ_M(x₀) − inf over K of Λ_M (an upper bound is valid).
    pub d_m: Option<f64>,
    /// Free balancing constant D̄ of the step-size schedules.
    pub d_bar: Option<f64>,
    /// Noise level σ (second-moment bound on the perturbations).
    pub sigma: Option<f64>,
    /// Metric condition bound C_q (1 for the Euclidean metric).
    pub c_q: Option<f64>,
}

macro_rules! registry_getters {
    ($($get:ident => $field:ident, $name:literal;)*) => {
        $(pub fn $get(&self) -> Result<f64> {
            self.$field
                .ok_or_else(|| Error::Config(concat!("registry constant ", $name, " is missing").into()))
        })*
    };
}

impl ConstantRegistry {
    registry_getters! {
        req_l_f => l_f, "L_f";
        req_l_h => l_h, "L_h";
        req_l_big_h => l_big_h, "L_H";
        req_c_f => c_f, "C_f";
        req_c_h => c_h, "C_h";
        req_c_a => c_a, "C_A";
        req_alpha_m => alpha_m, "alpha_m";
        req_mu_h => mu_h, "mu_h";
        req_m_h => m_h, "M_h";
        req_b_f => b_f, "B_f";
        req_m_1 => m_1, "M_1";
        req_m_bar => m_bar, "M_bar";
        req_d_m => d_m, "D_M";
        req_d_bar => d_bar, "D_bar";
        req_sigma => sigma, "sigma";
        req_c_q => c_q, "C_q";
    }

    /// Estimate the sampling-based constants from points drawn in K.
    ///
    /// Convention: suprema are sample maxima, Lipschitz constants are
    /// maxima of pairwise difference ratios, and lower bounds (α_m, μ_h)
    /// are sample minima. `inflation` scales the Lipschitz/supremum
    /// estimates up (and α_m, μ_h down) to compensate for the finite
    /// sample; 1.0 means raw sample values.
    pub fn estimate_from_samples(
        p: &ProblemInstance,
        rule: &crate::directions::MultiplierRule,
        points: &[DVector<f64>],
        inflation: f64,
    ) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("constant estimation needs at least 2 sample points".into()));
        }
        let mut grads = Vec::with_capacity(points.len());
        let mut jacs = Vec::with_capacity(points.len());
        let mut grad_h_big = Vec::with_capacity(points.len());
        let mut b_f: f64 = 0.0;
        let mut m_h: f64 = 0.0;
        let mut mu_h = f64::INFINITY;
        let mut alpha_m = f64::INFINITY;
        let mut c_a: f64 = 0.0;
        let mut m_1: f64 = 0.0;
        for x in points {
            let g = p.objective.gradient(x);
            let jac = p.constraint.jacobian(x);
            let h = p.constraint.eval(x);
            b_f = b_f.max(g.norm());
            let svals = jac.clone().svd(false, false).singular_values;
            m_h = m_h.max(svals.max());
            mu_h = mu_h.min(svals[svals.len() - 1]);
            let a = rule.evaluate(x, &jac)?;
            let ja = &jac * &a;
            c_a = c_a.max(ja.clone().svd(false, false).singular_values.max());
            let gram_a = jac.transpose() * &ja;
            let sym = (&gram_a + gram_a.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            alpha_m = alpha_m.min(eig.eigenvalues.min());
            let residual = &g - &ja * &h;
            m_1 = m_1.max((a.transpose() * jac.transpose() * residual).norm());
            grad_h_big.push(&jac * &h);
            grads.push(g);
            jacs.push(jac);
        }
        let mut l_f: f64 = 0.0;
        let mut l_h: f64 = 0.0;
        let mut l_big_h: f64 = 0.0;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = (&points[i] - &points[j]).norm();
                if d < 1e-12 {
                    continue;
                }
                l_f = l_f.max((&grads[i] - &grads[j]).norm() / d);
                let dj = &jacs[i] - &jacs[j];
                l_h = l_h.max(dj.svd(false, false).singular_values.max() / d);
                l_big_h = l_big_h.max((&grad_h_big[i] - &grad_h_big[j]).norm() / d);
            }
        }
        let alpha_m = alpha_m / inflation;
        let m_1 = m_1 * inflation;
        Ok(Self {
            l_f: Some(l_f * inflation),
            l_h: Some(l_h * inflation),
            l_big_h: Some(l_big_h * inflation),
            c_f: Some(b_f * inflation),
            c_h: Some(m_h * inflation),
            c_a: Some(c_a * inflation),
            alpha_m: Some(alpha_m),
            mu_h: Some(mu_h / inflation),
            m_h: Some(m_h * inflation),
            b_f: Some(b_f * inflation),
            m_1: Some(m_1),
            m_bar: Some(m_1 / alpha_m),
            d_m: None,
            d_bar: None,
            sigma: None,
            c_q: Some(1.0),
        })
    }
}
