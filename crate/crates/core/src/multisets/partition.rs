//! Common cone elements of several fractional multisets.
//!
//! [`single_element`] looks for a small nonzero integral `b̂` that every
//! multiset `λ^(i)` can pay for using one basis `B^(i)` of bounded vectors:
//! `x^(i) = (B^(i))^{-1} b̂` with `0 <= x^(i) <= λ^(i)`. [`almost_partition`]
//! peels such elements off repeatedly.
//!
//! Candidates `b̂` are tried by increasing `ℓ∞` norm (lexicographic inside a
//! norm shell) up to `(dΔ)^{d²}`; bases are `d`-subsets of the bounded point
//! set, support points of `λ^(i)` first, in lexicographic subset order.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::arith::{determinant, inverse, max_abs, RatMatrix, RatVector, Rational};
use crate::error::{Budget, Error, Meter, Result};
use crate::graver::{norm_inf, IntVector};

use super::Multiset;

/// Integral points of `ℓ∞` norm at most `delta` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointSet {
    pub d: usize,
    pub delta: i64,
}

impl PointSet {
    pub fn size(&self) -> BigInt {
        Pow::pow(BigInt::from(2 * self.delta + 1), self.d as u32)
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.len() == self.d && norm_inf(p) <= self.delta
    }

    /// All points in lexicographic order.
    pub fn points(&self) -> Vec<IntVector> {
        box_points(self.d, self.delta)
    }
}

fn box_points(d: usize, r: i64) -> Vec<IntVector> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Invertible `d×d` integer matrices with entries bounded by `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSet {
    pub d: usize,
    pub delta: i64,
}

impl BasisSet {
    /// Membership for a matrix given by its columns.
    pub fn contains(&self, columns: &[IntVector]) -> bool {
        let points = PointSet {
            d: self.d,
            delta: self.delta,
        };
        columns.len() == self.d
            && columns.iter().all(|c| points.contains(c))
            && RatMatrix::from_i64_columns(columns, self.d)
                .and_then(|m| determinant(&m))
                .is_ok_and(|det| !det.is_zero())
    }
}

/// One multiset's share of an extracted element: the basis columns used
/// and the coefficients `x = B^{-1} b̂` over those columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementChoice {
    pub basis: Vec<IntVector>,
    pub coefficients: RatVector,
}

impl ElementChoice {
    pub fn matrix(&self) -> RatMatrix {
        let d = self.basis.first().map_or(0, Vec::len);
        RatMatrix::from_i64_columns(&self.basis, d).expect("basis columns share a dimension")
    }

    /// The coefficients as a multiset over the basis columns.
    pub fn as_multiset(&self) -> Multiset {
        Multiset::from_counts(self.basis.iter().cloned().zip(self.coefficients.iter().cloned()))
            .expect("coefficients are nonnegative")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleElement {
    pub bhat: IntVector,
    /// One entry per input multiset.
    pub choices: Vec<ElementChoice>,
}

struct Basis {
    columns: Vec<IntVector>,
    inverse: RatMatrix,
}

fn check_inputs(lambdas: &[Multiset], b: &[Rational], rho: &Rational, delta: i64) -> Result<PointSet> {
    let d = b.len();
    if d == 0 {
        return Err(Error::Input("dimension must be positive".into()));
    }
    if lambdas.is_empty() {
        return Err(Error::Input("need at least one multiset".into()));
    }
    if !rho.is_positive() {
        return Err(Error::Input("rho must be positive".into()));
    }
    let points = PointSet { d, delta };
    for (i, lam) in lambdas.iter().enumerate() {
        if let Some((p, _)) = lam.iter().find(|(p, _)| !points.contains(p)) {
            return Err(Error::Input(format!("multiset {i} has {p:?} outside the point set")));
        }
        let s = lam.sum(d)?;
        let diff: RatVector = s.iter().zip(b).map(|(x, y)| x - y).collect();
        if max_abs(&diff) >= *rho {
            return Err(Error::Input(format!("multiset {i} is not within rho of b")));
        }
    }
    Ok(points)
}

fn ordered_bases(lam: &Multiset, points: &PointSet, meter: &mut Meter) -> Result<Vec<Basis>> {
    let mut order: Vec<IntVector> = lam.iter().map(|(p, _)| p.clone()).collect();
    order.extend(points.points().into_iter().filter(|p| lam.multiplicity(p).is_zero()));
    let d = points.d;
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    if order.len() < d {
        return Ok(out);
    }
    loop {
        meter.charge(1)?;
        let columns: Vec<IntVector> = idx.iter().map(|&k| order[k].clone()).collect();
        let m = RatMatrix::from_i64_columns(&columns, d)?;
        if let Some(inv) = inverse(&m)? {
            out.push(Basis { columns, inverse: inv });
        }
        // next combination in lexicographic order
        let Some(k) = (0..d).rev().find(|&k| idx[k] != k + order.len() - d) else {
            break;
        };
        idx[k] += 1;
        for j in k + 1..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(out)
}

/// `(dΔ)^{d²}`, the norm cap for extracted elements.
pub fn element_norm_cap(d: usize, delta: i64) -> BigInt {
    Pow::pow(BigInt::from(d as i64 * delta), (d * d) as u32)
}

fn shell(d: usize, r: i64) -> Vec<IntVector> {
    box_points(d, r).into_iter().filter(|p| norm_inf(p) == r).collect()
}

fn find_choice(lam: &Multiset, bases: &[Basis], bhat: &RatVector, meter: &mut Meter) -> Result<Option<ElementChoice>> {
    for basis in bases {
        meter.charge(1)?;
        let x = basis.inverse.mul_vec(bhat)?;
        let fits = x
            .iter()
            .zip(&basis.columns)
            .all(|(xk, col)| !xk.is_negative() && *xk <= lam.multiplicity(col));
        if fits {
            return Ok(Some(ElementChoice {
                basis: basis.columns.clone(),
                coefficients: x,
            }));
        }
    }
    Ok(None)
}

fn single_element_with(lambdas: &[Multiset], points: &PointSet, meter: &mut Meter) -> Result<Option<SingleElement>> {
    let d = points.d;
    let cap = element_norm_cap(d, points.delta)
        .to_i64()
        .ok_or_else(|| Error::BudgetExceeded("candidate norm cap does not fit a machine integer".into()))?;
    let mut bases = Vec::with_capacity(lambdas.len());
    for lam in lambdas {
        bases.push(ordered_bases(lam, points, meter)?);
    }
    for r in 1..=cap {
        for cand in shell(d, r) {
            let target: RatVector = cand.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect();
            let mut choices = Vec::with_capacity(lambdas.len());
            for (lam, bs) in lambdas.iter().zip(&bases) {
                match find_choice(lam, bs, &target, meter)? {
                    Some(c) => choices.push(c),
                    None => break,
                }
            }
            if choices.len() == lambdas.len() {
                return Ok(Some(SingleElement { bhat: cand, choices }));
            }
        }
    }
    Ok(None)
}

/// Searches for bases `B^(i)` and a nonzero `b̂` with `‖b̂‖∞ <= (dΔ)^{d²}`
/// such that `0 <= (B^(i))^{-1} b̂ <= λ^(i)` for every `i`. `None` means
/// the whole candidate range was exhausted.
pub fn single_element(
    lambdas: &[Multiset],
    b: &[Rational],
    rho: &Rational,
    delta: i64,
    budget: Budget,
) -> Result<Option<SingleElement>> {
    let points = check_inputs(lambdas, b, rho, delta)?;
    let mut meter = budget.meter("single element search");
    single_element_with(lambdas, &points, &mut meter)
}

/// Output of [`almost_partition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlmostPartition {
    /// `λ[B, i]`: how often basis `B` (by columns) served multiset `i` for
    /// each extracted element.
    pub family: BTreeMap<(Vec<IntVector>, usize), Multiset>,
    /// Every extraction in order.
    pub steps: Vec<SingleElement>,
    /// `b − Σ b̂`.
    pub residual: RatVector,
    /// What is left of each input multiset.
    pub remaining: Vec<Multiset>,
}

impl AlmostPartition {
    /// `Σ_B λ[B, i]`.
    pub fn aggregate(&self, i: usize) -> Multiset {
        let mut out = Multiset::new();
        for ((_, k), m) in &self.family {
            if *k == i {
                for (p, c) in m.iter() {
                    out.add(p.clone(), c).expect("nonnegative");
                }
            }
        }
        out
    }
}

/// Repeats [`single_element`] while `‖b̄‖∞ > threshold`, subtracting each
/// `b̂` from `b̄` and each `x^(i)` from `λ̄^(i)`, until no element is found.
pub fn almost_partition(
    lambdas: &[Multiset],
    b: &[Rational],
    rho: &Rational,
    delta: i64,
    threshold: &Rational,
    budget: Budget,
) -> Result<AlmostPartition> {
    let points = check_inputs(lambdas, b, rho, delta)?;
    let mut meter = budget.meter("almost partition");
    let mut remaining = lambdas.to_vec();
    let mut residual = b.to_vec();
    let mut family: BTreeMap<(Vec<IntVector>, usize), Multiset> = BTreeMap::new();
    let mut steps = Vec::new();

    while max_abs(&residual) > *threshold {
        let Some(step) = single_element_with(&remaining, &points, &mut meter)? else {
            break;
        };
        for (r, &v) in residual.iter_mut().zip(&step.bhat) {
            *r -= Rational::from_integer(BigInt::from(v));
        }
        for (i, choice) in step.choices.iter().enumerate() {
            for (col, x) in choice.basis.iter().zip(&choice.coefficients) {
                remaining[i].add(col.clone(), &-x.clone())?;
            }
            family
                .entry((choice.basis.clone(), i))
                .or_default()
                .add(step.bhat.clone(), &Rational::one())?;
        }
        steps.push(step);
    }

    Ok(AlmostPartition {
        family,
        steps,
        residual,
        remaining,
    })
}
