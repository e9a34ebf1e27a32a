//! Integer programs over multistage matrices: an enumeration oracle,
//! Graver-best augmentation, and the proximity / Graver-norm experiments.
//!
//! Every oracle-backed operation takes an explicit finite [`BoxBounds`];
//! the search space is the box intersected with the program's own bounds.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Pow, Signed, Zero};

use crate::arith::{format_rational, simplex_solve, LpStatus, RatMatrix, RatVector, Rational, Sense};
use crate::error::{Budget, Error, Meter, Result};
use crate::graver::{graver_basis, graver_norm_bound, max_abs_entry, norm_inf, GraverBasis, IntVector, Norm};
use crate::multistage::{mat_vec, MultistageMatrix, Program};

/// Inclusive per-variable box `lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxBounds {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl BoxBounds {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim("box bounds", lo.len(), hi.len()));
        }
        Ok(BoxBounds { lo, hi })
    }

    pub fn uniform(n: usize, lo: i64, hi: i64) -> Self {
        BoxBounds {
            lo: vec![lo; n],
            hi: vec![hi; n],
        }
    }

    /// The program's own bounds, which must all be finite.
    pub fn from_program(p: &Program) -> Result<Self> {
        let lo = p.lower.iter().map(|l| l.ok_or_else(|| Error::Input("program has an infinite lower bound; give an explicit box".into())));
        let hi = p.upper.iter().map(|u| u.ok_or_else(|| Error::Input("program has an infinite upper bound; give an explicit box".into())));
        Ok(BoxBounds {
            lo: lo.collect::<Result<_>>()?,
            hi: hi.collect::<Result<_>>()?,
        })
    }

    /// Box intersected with the program bounds. Empty coordinates come back
    /// with `lo > hi`.
    fn restrict(&self, p: &Program) -> Result<BoxBounds> {
        let n = p.num_cols();
        if self.lo.len() != n {
            return Err(Error::dim("box bounds", n, self.lo.len()));
        }
        let lo = self.lo.iter().zip(&p.lower).map(|(&a, l)| l.map_or(a, |l| a.max(l))).collect();
        let hi = self.hi.iter().zip(&p.upper).map(|(&a, u)| u.map_or(a, |u| a.min(u))).collect();
        Ok(BoxBounds { lo, hi })
    }

    fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn volume(&self) -> BigInt {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| BigInt::from((h as i128 - l as i128 + 1).max(0)))
            .product()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.lo.len() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    BudgetExceeded,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::BudgetExceeded => "budget-exceeded",
        })
    }
}

/// An applied augmentation step `x += lambda * g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub g: IntVector,
    pub lambda: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Option<IntVector>,
    pub objective: Option<i64>,
    pub steps: Vec<Step>,
    pub max_step_norm: i64,
}

impl SolveReport {
    fn infeasible() -> Self {
        SolveReport {
            status: SolveStatus::Infeasible,
            x: None,
            objective: None,
            steps: Vec::new(),
            max_step_norm: 0,
        }
    }

    /// Folds a budget failure into a `BudgetExceeded` report; other errors
    /// pass through.
    pub fn or_budget(r: Result<SolveReport>) -> Result<SolveReport> {
        match r {
            Err(e) if e.is_budget() => Ok(SolveReport {
                status: SolveStatus::BudgetExceeded,
                ..SolveReport::infeasible()
            }),
            other => other,
        }
    }
}

fn objective(c: &[i64], x: &[i64]) -> Result<i64> {
    c.iter().zip(x).try_fold(0i64, |acc, (&a, &b)| {
        a.checked_mul(b).and_then(|p| acc.checked_add(p)).ok_or(Error::Overflow("objective"))
    })
}

/// Calls `visit` on every point of `bx` in lexicographic order (first
/// coordinate slowest). Stops early when `visit` returns `false`.
fn for_each_point(bx: &BoxBounds, meter: &mut Meter, mut visit: impl FnMut(&[i64]) -> Result<bool>) -> Result<()> {
    if bx.is_empty() {
        return Ok(());
    }
    let volume = bx.volume();
    if volume > BigInt::from(meter.remaining()) {
        return Err(Error::BudgetExceeded(format!("box of {volume} points exceeds the enumeration budget")));
    }
    let n = bx.lo.len();
    let mut x = bx.lo.clone();
    loop {
        meter.charge(1)?;
        if !visit(&x)? {
            return Ok(());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if x[k] < bx.hi[k] {
                x[k] += 1;
                break;
            }
            x[k] = bx.lo[k];
        }
    }
}

fn is_feasible(p: &Program, x: &[i64]) -> Result<bool> {
    Ok(mat_vec(p.matrix.entries(), x, p.num_cols())? == p.b)
}

/// First feasible point in lexicographic order, if any.
pub fn find_feasible(p: &Program, bx: &BoxBounds, budget: Budget) -> Result<Option<IntVector>> {
    let space = bx.restrict(p)?;
    let mut meter = budget.meter("feasibility enumeration");
    let mut found = None;
    for_each_point(&space, &mut meter, |x| {
        if is_feasible(p, x)? {
            found = Some(x.to_vec());
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(found)
}

/// Exact optimum by enumeration; among tied optima the lexicographically
/// first is returned.
pub fn brute_force_ilp(p: &Program, bx: &BoxBounds, budget: Budget) -> Result<SolveReport> {
    let space = bx.restrict(p)?;
    let mut meter = budget.meter("ILP enumeration");
    let mut best: Option<(i64, IntVector)> = None;
    for_each_point(&space, &mut meter, |x| {
        if is_feasible(p, x)? {
            let val = objective(&p.c, x)?;
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, x.to_vec()));
            }
        }
        Ok(true)
    })?;
    Ok(match best {
        None => SolveReport::infeasible(),
        Some((val, x)) => SolveReport {
            status: SolveStatus::Optimal,
            x: Some(x),
            objective: Some(val),
            steps: Vec::new(),
            max_step_norm: 0,
        },
    })
}

/// Largest `λ >= 0` keeping `x + λg` inside `bx`.
fn max_step(x: &[i64], g: &[i64], bx: &BoxBounds) -> i64 {
    let mut lam = i64::MAX;
    for (j, &gj) in g.iter().enumerate() {
        if gj > 0 {
            lam = lam.min((bx.hi[j] - x[j]).div_euclid(gj));
        } else if gj < 0 {
            lam = lam.min((x[j] - bx.lo[j]).div_euclid(-gj));
        }
    }
    lam
}

/// Graver-best augmentation starting from [`find_feasible`].
pub fn solve_augmentation(p: &Program, bx: &BoxBounds, budget: Budget) -> Result<SolveReport> {
    match find_feasible(p, bx, budget)? {
        None => Ok(SolveReport::infeasible()),
        Some(start) => {
            let g = graver_basis(p.matrix.entries(), p.num_cols(), budget)?;
            augment_from(p, bx, &g, start, budget)
        }
    }
}

/// Graver-best augmentation from a given feasible `start`, using basis `g`
/// of the program's matrix. Each round applies the step `λg` with the
/// largest objective decrease (ties: smaller `λ`, then smaller `g`) until
/// no improving step exists.
pub fn augment_from(p: &Program, bx: &BoxBounds, g: &GraverBasis, start: IntVector, budget: Budget) -> Result<SolveReport> {
    let space = bx.restrict(p)?;
    if !space.contains(&start) || !is_feasible(p, &start)? {
        return Err(Error::Input("augmentation start point is not feasible".into()));
    }
    let mut meter = budget.meter("augmentation");
    let mut x = start;
    let mut steps = Vec::new();
    let mut max_step_norm = 0i64;
    loop {
        meter.charge(g.len() as u64 + 1)?;
        // (improvement, lambda, element)
        let mut best: Option<(i64, i64, &IntVector)> = None;
        for e in g.elements() {
            let slope = objective(&p.c, e)?;
            if slope >= 0 {
                continue;
            }
            let lam = max_step(&x, e, &space);
            if lam < 1 {
                continue;
            }
            let gain = lam.checked_mul(-slope).ok_or(Error::Overflow("augmentation"))?;
            let better = match best {
                None => true,
                Some((bg, bl, _)) => gain > bg || (gain == bg && lam < bl),
            };
            if better {
                best = Some((gain, lam, e));
            }
        }
        let Some((_, lam, e)) = best else { break };
        for (xj, &ej) in x.iter_mut().zip(e) {
            *xj += lam * ej;
        }
        max_step_norm = max_step_norm.max(lam * norm_inf(e));
        steps.push(Step { g: e.clone(), lambda: lam });
    }
    Ok(SolveReport {
        status: SolveStatus::Optimal,
        objective: Some(objective(&p.c, &x)?),
        x: Some(x),
        steps,
        max_step_norm,
    })
}

/// `(d, Δ, t)` of a multistage matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageParams {
    pub d: usize,
    pub delta: i64,
    pub t: usize,
}

impl StageParams {
    pub fn of(m: &MultistageMatrix) -> Result<Self> {
        let (_, dims) = m.tree()?;
        Ok(StageParams {
            d: dims.width(),
            delta: m.delta(),
            t: dims.t,
        })
    }

    /// The doubly exponential Graver norm bound, written out rather than
    /// evaluated.
    pub fn symbolic_graver_bound(&self) -> String {
        format!("2^(({}*{})^O({}^{}))", self.d, self.delta, self.d, 3 * self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityStatus {
    Ok,
    LpInfeasible,
    LpUnbounded,
    IlpInfeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProximityReport {
    pub status: ProximityStatus,
    pub x_frac: Option<RatVector>,
    pub x_int: Option<IntVector>,
    pub dist_inf: Option<Rational>,
    /// `(NΔ)^{N+1}`.
    pub column_bound: BigInt,
    pub params: StageParams,
}

impl ProximityReport {
    pub fn within_bound(&self) -> bool {
        self.dist_inf
            .as_ref()
            .is_none_or(|d| *d <= Rational::from_integer(self.column_bound.clone()))
    }
}

/// `(NΔ)^{N+1}`.
pub fn proximity_bound(cols: usize, delta: i64) -> BigInt {
    Pow::pow(BigInt::from(cols as i64 * delta), (cols + 1) as u32)
}

/// LP relaxation `min c·x, Ax = b, lower <= x <= upper` (program bounds),
/// solved in standard form: shift by finite lower bounds, reflect
/// upper-only variables, split free ones, and add slacks for double bounds.
pub fn lp_relaxation(p: &Program) -> Result<(LpStatus, Option<RatVector>)> {
    let n = p.num_cols();
    let a = p.matrix.entries();
    let m = a.len();
    enum Var {
        Shift(i64, Option<usize>),
        Reflect(i64),
        Split(usize),
    }
    // standard-form columns: (original variable, sign)
    let mut cols: Vec<(usize, i64)> = Vec::new();
    let mut vars = Vec::with_capacity(n);
    let mut slack_rows = 0;
    for j in 0..n {
        cols.push((j, 1));
        vars.push(match (p.lower[j], p.upper[j]) {
            (Some(l), Some(_)) => {
                slack_rows += 1;
                Var::Shift(l, Some(slack_rows - 1))
            }
            (Some(l), None) => Var::Shift(l, None),
            (None, Some(u)) => {
                cols.last_mut().unwrap().1 = -1;
                Var::Reflect(u)
            }
            (None, None) => {
                cols.push((j, -1));
                Var::Split(cols.len() - 1)
            }
        });
    }
    let ncols = cols.len() + slack_rows;
    let mut mat = RatMatrix::zeros(m + slack_rows, ncols);
    let mut rhs: RatVector = p.b.iter().map(|&v| Rational::from_integer(v.into())).collect();
    let mut cost: RatVector = vec![Rational::zero(); ncols];
    for (k, &(j, s)) in cols.iter().enumerate() {
        for i in 0..m {
            mat[(i, k)] = Rational::from_integer((s * a[i][j]).into());
        }
        cost[k] = Rational::from_integer((s * p.c[j]).into());
    }
    for (j, var) in vars.iter().enumerate() {
        let offset = match *var {
            Var::Shift(l, _) => l,
            Var::Reflect(u) => u,
            Var::Split(_) => 0,
        };
        for i in 0..m {
            rhs[i] -= Rational::from_integer((a[i][j] * offset).into());
        }
        if let (Var::Shift(l, Some(r)), Some(u)) = (var, p.upper[j]) {
            let row = m + r;
            let k = cols.iter().position(|&(jj, _)| jj == j).unwrap();
            mat[(row, k)] = Rational::from_integer(1.into());
            mat[(row, cols.len() + r)] = Rational::from_integer(1.into());
            rhs.push(Rational::from_integer((u - l).into()));
        }
    }
    let lp = simplex_solve(&mat, &rhs, &cost, Sense::Min)?;
    let Some(v) = lp.vertex else {
        return Ok((lp.status, None));
    };
    let mut x = Vec::with_capacity(n);
    let mut k = 0;
    for var in &vars {
        x.push(match *var {
            Var::Shift(l, _) => Rational::from_integer(l.into()) + &v[k],
            Var::Reflect(u) => Rational::from_integer(u.into()) - &v[k],
            Var::Split(minus) => &v[k] - &v[minus],
        });
        k += 1;
        if matches!(var, Var::Split(_)) {
            k += 1;
        }
    }
    Ok((lp.status, Some(x)))
}

fn dist_inf(x: &[i64], y: &[Rational]) -> Rational {
    x.iter()
        .zip(y)
        .map(|(&a, b)| (Rational::from_integer(a.into()) - b).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// LP vertex versus the integral optimum (within the box) nearest to it.
pub fn proximity_experiment(p: &Program, bx: &BoxBounds, budget: Budget) -> Result<ProximityReport> {
    let params = StageParams::of(&p.matrix)?;
    let column_bound = proximity_bound(p.num_cols(), p.matrix.delta());
    let mut report = ProximityReport {
        status: ProximityStatus::Ok,
        x_frac: None,
        x_int: None,
        dist_inf: None,
        column_bound,
        params,
    };
    let (status, frac) = lp_relaxation(p)?;
    let x_frac = match (status, frac) {
        (LpStatus::Optimal, Some(v)) => v,
        (LpStatus::Unbounded, _) => {
            report.status = ProximityStatus::LpUnbounded;
            return Ok(report);
        }
        _ => {
            report.status = ProximityStatus::LpInfeasible;
            return Ok(report);
        }
    };

    let space = bx.restrict(p)?;
    let mut meter = budget.meter("proximity enumeration");
    let mut best: Option<(i64, Rational, IntVector)> = None;
    for_each_point(&space, &mut meter, |x| {
        if is_feasible(p, x)? {
            let val = objective(&p.c, x)?;
            let dist = dist_inf(x, &x_frac);
            let better = match &best {
                None => true,
                Some((bv, bd, _)) => val < *bv || (val == *bv && dist < *bd),
            };
            if better {
                best = Some((val, dist, x.to_vec()));
            }
        }
        Ok(true)
    })?;
    report.x_frac = Some(x_frac);
    match best {
        None => report.status = ProximityStatus::IlpInfeasible,
        Some((_, dist, x)) => {
            report.x_int = Some(x);
            report.dist_inf = Some(dist);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraverNormReport {
    pub g_inf: i64,
    pub g_1: i64,
    pub basis_size: usize,
    /// `(2NΔ+1)^N`.
    pub column_bound: BigInt,
    pub params: StageParams,
    /// `g_∞` of each leaf matrix `A_i`.
    pub leaf_g_inf: Vec<i64>,
    pub symbolic_bound: String,
}

pub fn graver_norm_experiment(m: &MultistageMatrix, budget: Budget) -> Result<GraverNormReport> {
    let (tree, _) = m.tree()?;
    let params = StageParams::of(m)?;
    let g = graver_basis(m.entries(), m.num_cols(), budget)?;
    let mut leaf_g_inf = Vec::with_capacity(tree.leaf_count());
    for leaf in 0..tree.leaf_count() {
        let a = m.leaf_matrix(&tree, leaf)?;
        let cols = tree.path_columns(leaf)?.len();
        leaf_g_inf.push(graver_basis(&a, cols, budget)?.complexity(Norm::LInf));
    }
    Ok(GraverNormReport {
        g_inf: g.complexity(Norm::LInf),
        g_1: g.complexity(Norm::L1),
        basis_size: g.len(),
        column_bound: graver_norm_bound(m.num_cols(), max_abs_entry(m.entries())),
        params,
        leaf_g_inf,
        symbolic_bound: params.symbolic_graver_bound(),
    })
}

/// One line of the experiment sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub instance_id: String,
    pub d: usize,
    pub t: usize,
    pub delta: i64,
    pub n: usize,
    pub cols: usize,
    pub g_inf: i64,
    pub column_bound: BigInt,
    pub dist_inf: Option<Rational>,
    pub lemma33_bound: BigInt,
    pub steps: usize,
    pub max_step_norm: i64,
}

impl SweepRow {
    pub const HEADER: &'static str =
        "instance_id,d,t,delta,n,N,g_inf,column_bound,dist_inf,lemma33_bound,steps,max_step_norm";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.d,
            self.t,
            self.delta,
            self.n,
            self.cols,
            self.g_inf,
            self.column_bound,
            self.dist_inf.as_ref().map_or_else(|| "NA".to_string(), format_rational),
            self.lemma33_bound,
            self.steps,
            self.max_step_norm
        )
    }
}

/// Runs the Graver-norm experiment, the proximity experiment and the
/// augmentation solver on one instance.
pub fn sweep_row(id: &str, p: &Program, bx: &BoxBounds, budget: Budget) -> Result<SweepRow> {
    let (_, dims) = p.matrix.tree()?;
    let gr = graver_norm_experiment(&p.matrix, budget)?;
    let prox = proximity_experiment(p, bx, budget)?;
    let sol = solve_augmentation(p, bx, budget)?;
    Ok(SweepRow {
        instance_id: id.to_string(),
        d: gr.params.d,
        t: gr.params.t,
        delta: gr.params.delta,
        n: dims.n,
        cols: p.num_cols(),
        g_inf: gr.g_inf,
        column_bound: gr.column_bound,
        dist_inf: prox.dist_inf,
        lemma33_bound: prox.column_bound,
        steps: sol.steps.len(),
        max_step_norm: sol.max_step_norm,
    })
}
