//! Multiplicity-vector multisets and the validity notion tying per-leaf
//! multisets to a vector over all columns of a multistage matrix.
//!
//! Submodules:
//! - [`oracle`]: exhaustive search for small valid submultisets.
//! - [`partition`]: extracting common cone elements from several
//!   fractional multisets, one at a time or iterated.
//! - [`bounds`]: the exact constant ladder used in the size threshold for
//!   small valid submultisets.

pub mod bounds;
pub mod oracle;
pub mod partition;

pub use bounds::{bound_constants, lcm_range, BoundTable};
pub use oracle::{find_small_valid_submultisets, SubmultisetWitness};
pub use partition::{almost_partition, single_element, AlmostPartition, BasisSet, ElementChoice, PointSet, SingleElement};

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{max_abs, rat, RatVector, Rational};
use crate::error::{Budget, Error, Result};
use crate::graver::{conformal_decompose, graver_basis, GraverBasis, IntVector};
use crate::multistage::{IntMatrix, MultistageTree, Program};

/// A multiset of integer vectors with nonnegative rational multiplicities.
/// Zero multiplicities are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Multiset {
    support: BTreeMap<IntVector, Rational>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// One copy of each listed vector (repeats accumulate).
    pub fn from_elements<I: IntoIterator<Item = IntVector>>(items: I) -> Self {
        let mut m = Self::new();
        for v in items {
            m.add(v, &rat(1)).expect("positive multiplicity");
        }
        m
    }

    pub fn from_counts<I: IntoIterator<Item = (IntVector, Rational)>>(items: I) -> Result<Self> {
        let mut m = Self::new();
        for (v, k) in items {
            m.add(v, &k)?;
        }
        Ok(m)
    }

    /// Adds `mult` copies of `v`; `mult` may be negative as long as the
    /// result stays nonnegative.
    pub fn add(&mut self, v: IntVector, mult: &Rational) -> Result<()> {
        if mult.is_zero() {
            return Ok(());
        }
        let cur = self.support.get(&v).cloned().unwrap_or_else(Rational::zero);
        let next = cur + mult;
        if next.is_negative() {
            return Err(Error::Input(format!("multiplicity of {v:?} would become negative")));
        }
        if next.is_zero() {
            self.support.remove(&v);
        } else {
            self.support.insert(v, next);
        }
        Ok(())
    }

    pub fn multiplicity(&self, v: &[i64]) -> Rational {
        self.support.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IntVector, &Rational)> {
        self.support.iter()
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `|T|`: total multiplicity.
    pub fn cardinality(&self) -> Rational {
        self.support.values().fold(Rational::zero(), |acc, k| acc + k)
    }

    pub fn is_integral(&self) -> bool {
        self.support.values().all(|k| k.is_integer())
    }

    /// Integral multiplicities as machine integers.
    pub fn counts(&self) -> Result<Vec<(IntVector, u64)>> {
        self.support
            .iter()
            .map(|(v, k)| {
                if !k.is_integer() {
                    return Err(Error::Input(format!("multiplicity of {v:?} is not integral")));
                }
                k.to_integer()
                    .to_u64()
                    .map(|c| (v.clone(), c))
                    .ok_or(Error::Overflow("multiset multiplicity"))
            })
            .collect()
    }

    /// `Σ_p λ_p · p` as a vector of length `dim`.
    pub fn sum(&self, dim: usize) -> Result<RatVector> {
        let mut out = vec![Rational::zero(); dim];
        for (v, k) in &self.support {
            if v.len() != dim {
                return Err(Error::dim("multiset element", dim, v.len()));
            }
            for (o, &x) in out.iter_mut().zip(v) {
                *o += k * Rational::from_integer(BigInt::from(x));
            }
        }
        Ok(out)
    }

    /// Componentwise `self <= other` on multiplicities.
    pub fn is_submultiset_of(&self, other: &Multiset) -> bool {
        self.support.iter().all(|(v, k)| *k <= other.multiplicity(v))
    }

    pub fn dims_match(&self, dim: usize) -> bool {
        self.support.keys().all(|v| v.len() == dim)
    }
}

/// Tree, target vector over all columns and tolerance `ρ > 0`.
#[derive(Debug, Clone)]
pub struct ValiditySpec {
    pub tree: MultistageTree,
    pub b: RatVector,
    pub rho: Rational,
}

impl ValiditySpec {
    pub fn new(tree: MultistageTree, b: RatVector, rho: Rational) -> Result<Self> {
        if !rho.is_positive() {
            return Err(Error::Input("rho must be positive".into()));
        }
        if b.len() != tree.num_cols() {
            return Err(Error::dim("validity target", tree.num_cols(), b.len()));
        }
        Ok(ValiditySpec { tree, b, rho })
    }
}

/// Per-leaf deviations `‖Σ T_i − π(i, b)‖∞`.
pub fn deviations(tree: &MultistageTree, b: &[Rational], sets: &[Multiset]) -> Result<Vec<Rational>> {
    let n = tree.leaf_count();
    if sets.len() != n {
        return Err(Error::dim("multiset family", n, sets.len()));
    }
    let d = tree.dims().width();
    sets.iter()
        .enumerate()
        .map(|(i, t)| {
            let s = t.sum(d)?;
            let target = tree.project(i, b)?;
            let diff: RatVector = s.iter().zip(&target).map(|(x, y)| x - y).collect();
            Ok(max_abs(&diff))
        })
        .collect()
}

/// True iff every leaf sum is strictly within `ρ` of `π(i, b)` in `ℓ∞`.
pub fn rho_valid(spec: &ValiditySpec, sets: &[Multiset]) -> Result<bool> {
    Ok(deviations(&spec.tree, &spec.b, sets)?.iter().all(|dev| *dev < spec.rho))
}

/// Decomposes `π(i, y)` for every leaf into Graver elements of `A_i`,
/// giving multisets that are valid regarding the kernel vector `y`.
pub fn valid_witness_from_kernel(p: &Program, y: &[i64], budget: Budget) -> Result<Vec<Multiset>> {
    if p.matrix.mul(y)?.iter().any(|&v| v != 0) {
        return Err(Error::Input(format!("{y:?} is not in the integer kernel of A")));
    }
    let (tree, _) = p.matrix.tree()?;
    let mut cache: HashMap<IntMatrix, GraverBasis> = HashMap::new();
    (0..tree.leaf_count())
        .map(|i| {
            let a_i = p.matrix.leaf_matrix(&tree, i)?;
            let width = tree.path_columns(i)?.len();
            if !cache.contains_key(&a_i) {
                let g = graver_basis(&a_i, width, budget)?;
                cache.insert(a_i.clone(), g);
            }
            let target = tree.project(i, y)?;
            let dec = conformal_decompose(&cache[&a_i], &target)?;
            Ok(Multiset::from_elements(dec.parts))
        })
        .collect()
}
