//! Graver bases of small integer matrices.
//!
//! The basis is produced by a Pottier-style completion: start from a
//! symmetric generating set of the integer kernel lattice, form sums of
//! pairs, reduce each sum to conformal normal form and add nonzero
//! remainders until every pair reduces to zero. The resulting set contains
//! every `⊑`-minimal kernel vector; a final pass keeps only those.
//!
//! Kernel vectors are machine integers with checked arithmetic. The norm
//! cap `(2m‖A‖∞+1)^m` is verified on the output.

use std::cmp::Ordering;
use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{One, Pow};

use crate::error::{Budget, Error, Result};
use crate::multistage::{mat_vec, IntMatrix};

pub type IntVector = Vec<i64>;

/// `x ⊑ y`: every component has the same sign and no larger magnitude.
pub fn conformal_leq(x: &[i64], y: &[i64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::dim("conformal order", y.len(), x.len()));
    }
    Ok(conformal_leq_unchecked(x, y))
}

#[inline]
pub(crate) fn conformal_leq_unchecked(x: &[i64], y: &[i64]) -> bool {
    x.iter().zip(y).all(|(&a, &b)| {
        if a == 0 {
            true
        } else if a > 0 {
            b >= a
        } else {
            b <= a
        }
    })
}

/// Pairwise sign compatibility (`x_j y_j >= 0` for all `j`).
pub fn sign_compatible(x: &[i64], y: &[i64]) -> bool {
    x.iter().zip(y).all(|(&a, &b)| (a >= 0 && b >= 0) || (a <= 0 && b <= 0))
}

pub fn norm_inf(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).max().unwrap_or(0)
}

pub fn norm_1(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).sum()
}

/// `(2 m Δ + 1)^m`, the largest possible `‖g‖∞` of a Graver element of a
/// matrix with `m` columns and largest absolute entry `Δ`.
pub fn graver_norm_bound(cols: usize, delta: i64) -> BigInt {
    let base = BigInt::from(2) * BigInt::from(cols) * BigInt::from(delta) + BigInt::one();
    Pow::pow(base, cols as u32)
}

pub fn max_abs_entry(a: &IntMatrix) -> i64 {
    a.iter().flatten().map(|v| v.abs()).max().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    LInf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraverBasis {
    matrix: IntMatrix,
    cols: usize,
    /// Lexicographically sorted, closed under negation.
    elements: Vec<IntVector>,
    norm_bound: BigInt,
}

impl GraverBasis {
    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn elements(&self) -> &[IntVector] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn norm_bound(&self) -> &BigInt {
        &self.norm_bound
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.elements.binary_search_by(|e| e.as_slice().cmp(v)).is_ok()
    }

    /// Graver complexity `g_p`; zero for an empty basis.
    pub fn complexity(&self, p: Norm) -> i64 {
        let f = match p {
            Norm::L1 => norm_1,
            Norm::LInf => norm_inf,
        };
        self.elements.iter().map(|g| f(g)).max().unwrap_or(0)
    }
}

/// Lattice basis of `ker(A) ∩ Z^cols` via unimodular column operations.
pub fn kernel_lattice_basis(a: &IntMatrix, cols: usize) -> Result<Vec<IntVector>> {
    for row in a {
        if row.len() != cols {
            return Err(Error::dim("kernel lattice basis", cols, row.len()));
        }
    }
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..cols)
        .map(|i| (0..cols).map(|j| i128::from(i == j)).collect())
        .collect();

    let col_sub = |m: &mut Vec<Vec<i128>>, u: &mut Vec<Vec<i128>>, dst: usize, src: usize, q: i128| -> Result<()> {
        for row in m.iter_mut().chain(u.iter_mut()) {
            let delta = q.checked_mul(row[src]).ok_or(Error::Overflow("kernel lattice basis"))?;
            row[dst] = row[dst].checked_sub(delta).ok_or(Error::Overflow("kernel lattice basis"))?;
        }
        Ok(())
    };
    let col_swap = |m: &mut Vec<Vec<i128>>, u: &mut Vec<Vec<i128>>, i: usize, j: usize| {
        for row in m.iter_mut().chain(u.iter_mut()) {
            row.swap(i, j);
        }
    };

    let mut pivot = 0;
    for r in 0..m.len() {
        if pivot == cols {
            break;
        }
        loop {
            let best = (pivot..cols).filter(|&j| m[r][j] != 0).min_by_key(|&j| m[r][j].abs());
            let Some(best) = best else { break };
            col_swap(&mut m, &mut u, pivot, best);
            let mut done = true;
            for j in pivot + 1..cols {
                if m[r][j] != 0 {
                    let q = m[r][j].div_euclid(m[r][pivot]);
                    col_sub(&mut m, &mut u, j, pivot, q)?;
                    if m[r][j] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                pivot += 1;
                break;
            }
        }
    }

    (pivot..cols)
        .map(|j| {
            u.iter()
                .map(|row| i64::try_from(row[j]).map_err(|_| Error::Overflow("kernel lattice basis")))
                .collect()
        })
        .collect()
}

#[derive(Clone)]
struct Entry {
    v: IntVector,
    pos: u64,
    neg: u64,
}

impl Entry {
    fn new(v: IntVector) -> Self {
        let (mut pos, mut neg) = (0u64, 0u64);
        for (j, &x) in v.iter().enumerate() {
            if x > 0 {
                pos |= 1 << j;
            } else if x < 0 {
                neg |= 1 << j;
            }
        }
        Entry { v, pos, neg }
    }

    #[inline]
    fn below(&self, other: &Entry) -> bool {
        self.pos & !other.pos == 0 && self.neg & !other.neg == 0 && conformal_leq_unchecked(&self.v, &other.v)
    }
}

fn add(x: &[i64], y: &[i64]) -> Result<IntVector> {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| a.checked_add(b).ok_or(Error::Overflow("Graver completion")))
        .collect()
}

/// Full Graver basis of `a` (rows of length `cols`, at most 64 columns).
pub fn graver_basis(a: &IntMatrix, cols: usize, budget: Budget) -> Result<GraverBasis> {
    if cols > 64 {
        return Err(Error::Input(format!("Graver basis limited to 64 columns, got {cols}")));
    }
    let lattice = kernel_lattice_basis(a, cols)?;
    let delta = max_abs_entry(a);
    let norm_bound = graver_norm_bound(cols, delta);
    let mut meter = budget.meter("Graver completion");

    let mut basis: Vec<Entry> = Vec::new();
    for v in lattice {
        let neg: IntVector = v.iter().map(|x| -x).collect();
        basis.push(Entry::new(v));
        basis.push(Entry::new(neg));
    }

    let mut queue: VecDeque<IntVector> = VecDeque::new();
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            if !sign_compatible(&basis[i].v, &basis[j].v) {
                queue.push_back(add(&basis[i].v, &basis[j].v)?);
            }
        }
    }

    while let Some(s) = queue.pop_front() {
        let mut s = Entry::new(s);
        'reduce: loop {
            if s.pos == 0 && s.neg == 0 {
                break;
            }
            meter.charge(basis.len() as u64)?;
            for g in &basis {
                if g.below(&s) {
                    let next: IntVector = s.v.iter().zip(&g.v).map(|(a, b)| a - b).collect();
                    s = Entry::new(next);
                    continue 'reduce;
                }
            }
            break;
        }
        if s.pos == 0 && s.neg == 0 {
            continue;
        }
        let neg: IntVector = s.v.iter().map(|x| -x).collect();
        for f in [s.v.clone(), neg] {
            for g in &basis {
                if !sign_compatible(&f, &g.v) {
                    queue.push_back(add(&f, &g.v)?);
                }
            }
            basis.push(Entry::new(f));
        }
    }

    // Keep the ⊑-minimal elements; everything else is dominated by one.
    meter.charge((basis.len() * basis.len()) as u64)?;
    let minimal: Vec<bool> = (0..basis.len())
        .map(|i| !(0..basis.len()).any(|j| j != i && basis[j].below(&basis[i]) && basis[j].v != basis[i].v))
        .collect();
    let mut elements: Vec<IntVector> = basis
        .into_iter()
        .zip(minimal)
        .filter_map(|(e, keep)| keep.then_some(e.v))
        .collect();
    elements.sort();
    elements.dedup();

    if let Some(g) = elements.iter().find(|g| BigInt::from(norm_inf(g)) > norm_bound) {
        return Err(Error::Input(format!(
            "Graver element {g:?} exceeds the certified norm cap {norm_bound}"
        )));
    }

    Ok(GraverBasis {
        matrix: a.clone(),
        cols,
        elements,
        norm_bound,
    })
}

/// A kernel vector written as a sum of conformal Graver elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformalDecomposition {
    pub target: IntVector,
    /// In the order they were peeled off.
    pub parts: Vec<IntVector>,
}

impl ConformalDecomposition {
    /// Parts grouped with multiplicities, lexicographically.
    pub fn multiplicities(&self) -> Vec<(IntVector, usize)> {
        let mut sorted = self.parts.clone();
        sorted.sort();
        let mut out: Vec<(IntVector, usize)> = Vec::new();
        for p in sorted {
            match out.last_mut() {
                Some((q, k)) if *q == p => *k += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }
}

/// Greedy conformal decomposition: repeatedly subtract the
/// lexicographically smallest basis element conformal to the remainder.
pub fn conformal_decompose(g: &GraverBasis, y: &[i64]) -> Result<ConformalDecomposition> {
    decompose_with(g, y, |a, b| a.cmp(b))
}

/// Same as [`conformal_decompose`] with a caller-chosen preference order on
/// basis elements (the smallest eligible element under `order` is taken).
pub fn decompose_with<F>(g: &GraverBasis, y: &[i64], order: F) -> Result<ConformalDecomposition>
where
    F: Fn(&IntVector, &IntVector) -> Ordering,
{
    if y.len() != g.cols {
        return Err(Error::dim("conformal decomposition", g.cols, y.len()));
    }
    if mat_vec(&g.matrix, y, g.cols)?.iter().any(|&v| v != 0) {
        return Err(Error::Input(format!("{y:?} is not in the kernel")));
    }
    let mut ordered: Vec<&IntVector> = g.elements.iter().collect();
    ordered.sort_by(|a, b| order(a, b));

    let mut rest = y.to_vec();
    let mut parts = Vec::new();
    while rest.iter().any(|&v| v != 0) {
        let Some(&step) = ordered.iter().find(|e| conformal_leq_unchecked(e, &rest)) else {
            panic!("Graver basis is incomplete: no element conformal to {rest:?}");
        };
        for (r, s) in rest.iter_mut().zip(step) {
            *r -= s;
        }
        parts.push(step.clone());
    }
    Ok(ConformalDecomposition {
        target: y.to_vec(),
        parts,
    })
}
