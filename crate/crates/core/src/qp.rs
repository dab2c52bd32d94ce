//! Stance-force allocation.
//!
//! The QP is
//!
//! ```text
//! min  (A F - b)ᵀ S (A F - b) + γ1 ‖F‖² + γ2 ‖F - F_prev‖²
//! s.t. d_lo ≤ C F ≤ d_hi,   F_swing = 0
//! ```
//!
//! and is solved with a primal active-set method after eliminating the swing
//! variables. Internally the objective is halved; reported objective values
//! use the unscaled form above.

use nalgebra::{DMatrix, DVector, SMatrix};
use thiserror::Error;

use crate::so3::{skew, Mat3, Vec12, Vec3, Vec6};

pub type WrenchMatrix = SMatrix<f64, 6, 12>;

const MAX_ITERATIONS: usize = 500;
/// Relative eigenvalue cutoff for the pseudo-inverses used when the Hessian is
/// only semidefinite (no force regularization).
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("constraints are infeasible: {0}")]
    Infeasible(&'static str),
    #[error("active-set solver hit {0} iterations")]
    MaxIterations(usize),
    #[error("singular KKT system")]
    Singular,
    #[error("non-finite QP input")]
    NonFinite,
    #[error("invalid parameters: {0}")]
    BadParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpWeights {
    /// Diagonal of S.
    pub s: Vec6,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Default for QpWeights {
    fn default() -> Self {
        Self { s: Vec6::new(5.0, 5.0, 10.0, 50.0, 25.0, 20.0), gamma1: 0.01, gamma2: 0.001 }
    }
}

impl QpWeights {
    pub fn validate(&self) -> Result<(), QpError> {
        if self.s.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(QpError::BadParams("S must have non-negative diagonal"));
        }
        if !(self.gamma1 >= 0.0 && self.gamma2 >= 0.0) || !(self.gamma1 + self.gamma2).is_finite() {
            return Err(QpError::BadParams("gamma weights must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub mu: f64,
    pub fz_min: f64,
    pub fz_max: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self { mu: 0.6, fz_min: 0.0, fz_max: 200.0 }
    }
}

impl FrictionParams {
    pub fn validate(&self) -> Result<(), QpError> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(QpError::BadParams("mu must be positive"));
        }
        if !(self.fz_min >= 0.0 && self.fz_min < self.fz_max) || !self.fz_max.is_finite() {
            return Err(QpError::BadParams("need 0 <= fz_min < fz_max"));
        }
        Ok(())
    }
}

/// Block `i` is `[I₃; skew(p_i - p_c)]`.
pub fn build_wrench_matrix(feet: &[Vec3; 4], p_c: &Vec3) -> WrenchMatrix {
    let mut a = WrenchMatrix::zeros();
    for (i, foot) in feet.iter().enumerate() {
        a.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(&Mat3::identity());
        a.fixed_view_mut::<3, 3>(3, 3 * i).copy_from(&skew(&(foot - p_c)));
    }
    a
}

pub fn achieved_wrench(a: &WrenchMatrix, f: &Vec12) -> Vec6 {
    a * f
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    /// Inequality rows, one per row of `c`.
    pub c: DMatrix<f64>,
    pub d_lo: Vec<f64>,
    pub d_hi: Vec<f64>,
    /// Variables pinned to zero.
    pub fixed: Vec<usize>,
    /// A point known to satisfy every row.
    pub feasible_point: Vec12,
}

impl ConstraintSet {
    pub fn inequality_count(&self) -> usize {
        self.c.nrows()
    }

    pub fn equality_count(&self) -> usize {
        self.fixed.len()
    }

    /// Largest violation of any row or pinned variable.
    pub fn violation(&self, f: &Vec12) -> f64 {
        let mut worst = self.fixed.iter().map(|&k| f[k].abs()).fold(0.0, f64::max);
        for r in 0..self.c.nrows() {
            let v: f64 = (0..12).map(|k| self.c[(r, k)] * f[k]).sum();
            worst = worst.max(self.d_lo[r] - v).max(v - self.d_hi[r]);
        }
        worst
    }
}

/// Per stance leg: two friction faces in x, two in y, and the normal-force
/// bounds. Swing legs have all three components pinned to zero.
pub fn build_constraints(contacts: &[bool; 4], fp: &FrictionParams) -> ConstraintSet {
    let stance: Vec<usize> = (0..4).filter(|&l| contacts[l]).collect();
    let mut c = DMatrix::zeros(5 * stance.len(), 12);
    let mut d_lo = Vec::with_capacity(5 * stance.len());
    let mut d_hi = Vec::with_capacity(5 * stance.len());
    let mut fixed = Vec::new();
    let mut feasible_point = Vec12::zeros();
    let inf = f64::INFINITY;
    for (k, &leg) in stance.iter().enumerate() {
        let (x, y, z) = (3 * leg, 3 * leg + 1, 3 * leg + 2);
        let r = 5 * k;
        c[(r, x)] = 1.0;
        c[(r, z)] = -fp.mu;
        c[(r + 1, x)] = 1.0;
        c[(r + 1, z)] = fp.mu;
        c[(r + 2, y)] = 1.0;
        c[(r + 2, z)] = -fp.mu;
        c[(r + 3, y)] = 1.0;
        c[(r + 3, z)] = fp.mu;
        c[(r + 4, z)] = 1.0;
        d_lo.extend_from_slice(&[-inf, 0.0, -inf, 0.0, fp.fz_min]);
        d_hi.extend_from_slice(&[0.0, inf, 0.0, inf, fp.fz_max]);
        feasible_point[z] = 0.5 * (fp.fz_min + fp.fz_max);
    }
    for leg in (0..4).filter(|&l| !contacts[l]) {
        fixed.extend([3 * leg, 3 * leg + 1, 3 * leg + 2]);
    }
    ConstraintSet { c, d_lo, d_hi, fixed, feasible_point }
}

/// Constraint rows held as equalities, with the bound each one sits on.
type WorkingSet = Vec<(usize, Side)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Lower => 1.0,
            Side::Upper => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport {
    /// ‖∇f − Σ μ s a‖∞ over the free variables, for the halved objective.
    pub stationarity: f64,
    pub primal: f64,
    /// max μ · slack over the working set, and max(0, −μ).
    pub complementarity: f64,
    pub dual: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity).max(self.dual)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceSolution {
    pub f: Vec12,
    pub objective: f64,
    pub iterations: usize,
    /// Constraint row ids (rows of `ConstraintSet::c`) active at the solution.
    pub active_set: Vec<usize>,
    pub active_sides: Vec<Side>,
    pub kkt: KktReport,
}

impl ForceSolution {
    pub fn foot(&self, leg: usize) -> Vec3 {
        self.f.fixed_rows::<3>(3 * leg).into_owned()
    }
}

/// Unscaled objective value.
pub fn objective(a: &WrenchMatrix, b_d: &Vec6, w: &QpWeights, f_prev: &Vec12, f: &Vec12) -> f64 {
    let r = a * f - b_d;
    let weighted: f64 = (0..6).map(|i| w.s[i] * r[i] * r[i]).sum();
    weighted + w.gamma1 * f.norm_squared() + w.gamma2 * (f - f_prev).norm_squared()
}

/// Cold solve.
pub fn solve_balance_qp(a: &WrenchMatrix, b_d: &Vec6, w: &QpWeights, f_prev: &Vec12, cons: &ConstraintSet) -> Result<ForceSolution, QpError> {
    BalanceQp::new().solve(a, b_d, w, f_prev, cons)
}

/// Solver with warm-start memory of the previous working set.
#[derive(Debug, Clone, Default)]
pub struct BalanceQp {
    warm: Option<WarmStart>,
}

#[derive(Debug, Clone)]
struct WarmStart {
    fixed: Vec<usize>,
    rows: usize,
    working: Vec<(usize, Side)>,
}

impl BalanceQp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.warm = None;
    }

    pub fn solve(&mut self, a: &WrenchMatrix, b_d: &Vec6, w: &QpWeights, f_prev: &Vec12, cons: &ConstraintSet) -> Result<ForceSolution, QpError> {
        if a.iter().chain(b_d.iter()).chain(f_prev.iter()).any(|x| !x.is_finite()) {
            return Err(QpError::NonFinite);
        }
        w.validate()?;
        let problem = Reduced::new(a, b_d, w, f_prev, cons)?;

        let warm = self.warm.as_ref().filter(|ws| ws.fixed == cons.fixed && ws.rows == cons.c.nrows()).and_then(|ws| problem.warm_point(&ws.working));
        let (x0, working) = match warm {
            Some(start) => start,
            None => {
                let x0 = problem.restrict(&cons.feasible_point);
                if problem.max_violation(&x0) > 1e-9 {
                    return Err(QpError::Infeasible("starting point violates constraints"));
                }
                (x0, Vec::new())
            }
        };
        let (x, working, mu, iterations) = problem.active_set(x0, working)?;

        let f = problem.expand(&x);
        let kkt = problem.kkt(&x, &working, &mu);
        self.warm = Some(WarmStart { fixed: cons.fixed.clone(), rows: cons.c.nrows(), working: working.clone() });
        let mut order: Vec<usize> = (0..working.len()).collect();
        order.sort_by_key(|&i| working[i].0);
        Ok(ForceSolution {
            f,
            objective: objective(a, b_d, w, f_prev, &f),
            iterations,
            active_set: order.iter().map(|&i| working[i].0).collect(),
            active_sides: order.iter().map(|&i| working[i].1).collect(),
            kkt,
        })
    }
}

/// QP restricted to the free variables: min ½ xᵀHx + gᵀx s.t. lo ≤ Cx ≤ hi.
struct Reduced {
    free: Vec<usize>,
    h: DMatrix<f64>,
    g: DVector<f64>,
    c: DMatrix<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    row_norm: Vec<f64>,
}

impl Reduced {
    fn new(a: &WrenchMatrix, b_d: &Vec6, w: &QpWeights, f_prev: &Vec12, cons: &ConstraintSet) -> Result<Self, QpError> {
        let free: Vec<usize> = (0..12).filter(|k| !cons.fixed.contains(k)).collect();
        let n = free.len();
        let s = SMatrix::<f64, 6, 6>::from_diagonal(&w.s);
        let h_full = a.transpose() * s * a;
        let g_full = -(a.transpose() * s * b_d) - f_prev * w.gamma2;
        let reg = w.gamma1 + w.gamma2;
        let h = DMatrix::from_fn(n, n, |i, j| h_full[(free[i], free[j])] + if i == j { reg } else { 0.0 });
        let g = DVector::from_fn(n, |i, _| g_full[free[i]]);
        let c = DMatrix::from_fn(cons.c.nrows(), n, |r, j| cons.c[(r, free[j])]);
        let row_norm = (0..c.nrows()).map(|r| c.row(r).norm()).collect();
        Ok(Self { free, h, g, c, lo: cons.d_lo.clone(), hi: cons.d_hi.clone(), row_norm })
    }

    fn restrict(&self, f: &Vec12) -> DVector<f64> {
        DVector::from_fn(self.free.len(), |i, _| f[self.free[i]])
    }

    fn expand(&self, x: &DVector<f64>) -> Vec12 {
        let mut f = Vec12::zeros();
        for (i, &k) in self.free.iter().enumerate() {
            f[k] = x[i];
        }
        f
    }

    fn bound(&self, r: usize, side: Side) -> f64 {
        match side {
            Side::Lower => self.lo[r],
            Side::Upper => self.hi[r],
        }
    }

    fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let cx = &self.c * x;
        (0..cx.len()).map(|r| (self.lo[r] - cx[r]).max(cx[r] - self.hi[r])).fold(0.0, f64::max)
    }

    /// Minimizer over `{x : a_r x = bound_r for r in working}` together with the
    /// multipliers ν of `H x + g + Wᵀ ν = 0`. When the reduced Hessian is singular
    /// the minimum-norm minimizer is returned.
    fn eqp(&self, working: &[(usize, Side)]) -> Result<(DVector<f64>, DVector<f64>), QpError> {
        let n = self.free.len();
        let m = working.len();
        let wm = DMatrix::from_fn(m, n, |j, i| self.c[(working[j].0, i)]);
        let bw = DVector::from_iterator(m, working.iter().map(|&(r, s)| self.bound(r, s)));

        // Row space and null space of the working rows from the eigenvectors of WᵀW.
        let (x_p, z) = if m == 0 {
            (DVector::zeros(n), DMatrix::identity(n, n))
        } else {
            let gram = wm.transpose() * &wm;
            let eig = gram.clone().symmetric_eigen();
            let top = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
            let null: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= RANK_TOL * top).collect();
            let z = DMatrix::from_fn(n, null.len(), |r, c| eig.eigenvectors[(r, null[c])]);
            let x_p = pinv_sym(&gram) * wm.transpose() * &bw;
            (x_p, z)
        };
        let x = if z.ncols() == 0 {
            x_p
        } else {
            let hz = z.transpose() * &self.h * &z;
            let rhs = -(z.transpose() * (&self.h * &x_p + &self.g));
            let y = pinv_sym(&hz) * rhs;
            x_p + z * y
        };
        let resid = &self.h * &x + &self.g;
        let nu = if m == 0 {
            DVector::zeros(0)
        } else {
            -(pinv_sym(&(&wm * wm.transpose())) * &wm * resid)
        };
        if x.iter().chain(nu.iter()).any(|v| !v.is_finite()) {
            return Err(QpError::Singular);
        }
        Ok((x, nu))
    }

    /// Minimizer with the given working set held as equalities, if it is feasible.
    fn warm_point(&self, working: &[(usize, Side)]) -> Option<(DVector<f64>, WorkingSet)> {
        let (x, _) = self.eqp(working).ok()?;
        (self.max_violation(&x) <= 1e-10).then(|| (x, working.to_vec()))
    }

    fn active_set(&self, mut x: DVector<f64>, mut working: WorkingSet) -> Result<(DVector<f64>, WorkingSet, Vec<f64>, usize), QpError> {
        let n = self.free.len();
        if n == 0 {
            return Ok((x, Vec::new(), Vec::new(), 1));
        }
        // After an unblocked step x already minimizes over the working set, so the
        // recomputed step is rounding noise and only the multipliers matter.
        let mut at_min = false;
        for it in 1..=MAX_ITERATIONS {
            let (target, nu) = self.eqp(&working)?;
            let p = &target - &x;
            let scale = x.amax().max(1.0);
            if at_min || p.amax() <= 1e-12 * scale {
                // μ_j s_j = −ν_j for constraints written as s_j a_j x ≥ s_j b_j.
                let mu: Vec<f64> = working.iter().zip(nu.iter()).map(|(&(_, s), &v)| -s.sign() * v).collect();
                let grad_scale = (&self.h * &x + &self.g).amax().max(self.g.amax()).max(1.0);
                let worst = mu.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1));
                match worst {
                    Some((j, &m)) if m < -1e-10 * grad_scale => {
                        working.remove(j);
                        at_min = false;
                    }
                    _ => return Ok((x, working, mu, it)),
                }
                continue;
            }
            let cp = &self.c * &p;
            let cx = &self.c * &x;
            let pn = p.norm();
            let mut alpha = 1.0;
            let mut blocking = None;
            for r in 0..self.c.nrows() {
                if working.iter().any(|&(w, _)| w == r) {
                    continue;
                }
                let rate = cp[r];
                if rate.abs() <= 1e-12 * self.row_norm[r] * pn {
                    continue;
                }
                let (side, limit) = if rate > 0.0 { (Side::Upper, self.hi[r]) } else { (Side::Lower, self.lo[r]) };
                if !limit.is_finite() {
                    continue;
                }
                let step = ((limit - cx[r]) / rate).max(0.0);
                if step < alpha {
                    alpha = step;
                    blocking = Some((r, side));
                }
            }
            if blocking.is_none() {
                x = target;
            } else {
                x += p * alpha;
            }
            at_min = blocking.is_none();
            if let Some(b) = blocking {
                working.push(b);
            }
        }
        Err(QpError::MaxIterations(MAX_ITERATIONS))
    }

    fn kkt(&self, x: &DVector<f64>, working: &[(usize, Side)], mu: &[f64]) -> KktReport {
        let mut resid = &self.h * x + &self.g;
        let cx = &self.c * x;
        let mut complementarity: f64 = 0.0;
        let mut dual: f64 = 0.0;
        for (&(r, s), &m) in working.iter().zip(mu) {
            resid -= self.c.row(r).transpose() * (m * s.sign());
            complementarity = complementarity.max((m * (cx[r] - self.bound(r, s))).abs());
            dual = dual.max(-m);
        }
        KktReport { stationarity: resid.amax(), primal: self.max_violation(x).max(0.0), complementarity, dual }
    }
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix.
fn pinv_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let inv = eig.eigenvalues.map(|l| if l > RANK_TOL * top { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_feet() -> [Vec3; 4] {
        [
            Vec3::new(0.183, -0.132, 0.0),
            Vec3::new(0.183, 0.132, 0.0),
            Vec3::new(-0.183, -0.132, 0.0),
            Vec3::new(-0.183, 0.132, 0.0),
        ]
    }

    #[test]
    fn wrench_matrix_structure() {
        let p_c = Vec3::new(0.1, 0.2, 0.3);
        let a = build_wrench_matrix(&[p_c; 4], &p_c);
        assert_eq!(a.fixed_view::<3, 12>(3, 0).amax(), 0.0);
        for i in 0..4 {
            assert_eq!(a.fixed_view::<3, 3>(0, 3 * i).into_owned(), Mat3::identity());
        }
        let mut feet = [p_c; 4];
        feet[0] += Vec3::new(1.0, 0.0, 0.0);
        let a = build_wrench_matrix(&feet, &p_c);
        let mut f = Vec12::zeros();
        f[2] = 1.0;
        let w = achieved_wrench(&a, &f);
        let expected = Vec3::new(1.0, 0.0, 0.0).cross(&Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(w.fixed_rows::<3>(3).into_owned(), expected);
        assert_eq!(expected, Vec3::new(0.0, -1.0, 0.0));
    }

    #[test]
    fn symmetric_vertical_forces_have_no_moment() {
        let a = build_wrench_matrix(&square_feet(), &Vec3::new(0.0, 0.0, 0.3));
        let mut f = Vec12::zeros();
        for l in 0..4 {
            f[3 * l + 2] = 25.0;
        }
        let w = achieved_wrench(&a, &f);
        assert!(w.fixed_rows::<3>(3).amax() < 1e-14);
        assert_eq!(achieved_wrench(&a, &Vec12::zeros()), Vec6::zeros());
    }

    #[test]
    fn constraint_counts() {
        let fp = FrictionParams::default();
        let all = build_constraints(&[true; 4], &fp);
        assert_eq!((all.inequality_count(), all.equality_count()), (20, 0));
        let none = build_constraints(&[false; 4], &fp);
        assert_eq!((none.inequality_count(), none.equality_count()), (0, 12));
        let one = build_constraints(&[true, false, true, true], &fp);
        assert_eq!((one.inequality_count(), one.equality_count()), (15, 3));
        assert_eq!(one.violation(&one.feasible_point), 0.0);
    }

    #[test]
    fn equal_shares_without_regularization() {
        let a = build_wrench_matrix(&square_feet(), &Vec3::new(0.0, 0.0, 0.3));
        let b = Vec6::new(0.0, 0.0, 12.0 * 9.81, 0.0, 0.0, 0.0);
        let w = QpWeights { gamma1: 0.0, gamma2: 0.0, ..QpWeights::default() };
        let sol = solve_balance_qp(&a, &b, &w, &Vec12::zeros(), &build_constraints(&[true; 4], &FrictionParams::default())).unwrap();
        for l in 0..4 {
            let f = sol.foot(l);
            assert!((f.z - 29.43).abs() <= 1e-6, "{f:?} {sol:?}");
            assert!(f.x.abs() <= 1e-9 && f.y.abs() <= 1e-9);
        }
        assert!((achieved_wrench(&a, &sol.f) - b).amax() <= 1e-6);
        assert!(sol.kkt.max() <= 1e-7);
    }

    #[test]
    fn swing_legs_carry_nothing() {
        let a = build_wrench_matrix(&square_feet(), &Vec3::new(0.02, 0.01, 0.3));
        let b = Vec6::new(3.0, -2.0, 130.0, 1.0, -2.0, 0.5);
        let cons = build_constraints(&[true, true, false, true], &FrictionParams::default());
        let sol = solve_balance_qp(&a, &b, &QpWeights::default(), &Vec12::zeros(), &cons).unwrap();
        assert_eq!(sol.foot(2), Vec3::zeros());
        assert!(cons.violation(&sol.f) <= 1e-9);
    }

    #[test]
    fn tensile_demand_is_clamped() {
        let a = build_wrench_matrix(&square_feet(), &Vec3::new(0.0, 0.0, 0.3));
        let b = Vec6::new(0.0, 0.0, -50.0, 0.0, 0.0, 0.0);
        let cons = build_constraints(&[true; 4], &FrictionParams::default());
        let sol = solve_balance_qp(&a, &b, &QpWeights::default(), &Vec12::zeros(), &cons).unwrap();
        let achieved = achieved_wrench(&a, &sol.f);
        assert!((achieved - b).norm() > 10.0);
        assert!(sol.f.amax() <= 1e-9);
        assert!(sol.kkt.max() <= 1e-7);
    }

    #[test]
    fn warm_start_on_repeat_is_not_slower() {
        let a = build_wrench_matrix(&square_feet(), &Vec3::new(0.05, 0.0, 0.3));
        let b = Vec6::new(40.0, 0.0, 100.0, 0.0, 3.0, 0.0);
        let cons = build_constraints(&[true, false, true, true], &FrictionParams::default());
        let mut qp = BalanceQp::new();
        let first = qp.solve(&a, &b, &QpWeights::default(), &Vec12::zeros(), &cons).unwrap();
        let second = qp.solve(&a, &b, &QpWeights::default(), &Vec12::zeros(), &cons).unwrap();
        assert!(second.iterations <= first.iterations);
        assert!((second.f - first.f).amax() <= 1e-9);
    }

    #[test]
    fn deterministic() {
        let a = build_wrench_matrix(&square_feet(), &Vec3::new(0.05, 0.0, 0.3));
        let b = Vec6::new(40.0, -10.0, 100.0, 1.0, 3.0, -2.0);
        let cons = build_constraints(&[true; 4], &FrictionParams::default());
        let x = solve_balance_qp(&a, &b, &QpWeights::default(), &Vec12::zeros(), &cons).unwrap();
        let y = solve_balance_qp(&a, &b, &QpWeights::default(), &Vec12::zeros(), &cons).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn rejects_bad_input() {
        let a = build_wrench_matrix(&square_feet(), &Vec3::zeros());
        let cons = build_constraints(&[true; 4], &FrictionParams::default());
        let b = Vec6::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(solve_balance_qp(&a, &b, &QpWeights::default(), &Vec12::zeros(), &cons), Err(QpError::NonFinite));
        assert!(FrictionParams { mu: 0.5, fz_min: 10.0, fz_max: 5.0 }.validate().is_err());
    }
}
