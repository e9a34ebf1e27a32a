//! Exhaustive search for small, not-all-empty, valid submultisets.
//!
//! Given integral multisets `T_1..T_n` of pairwise sign-compatible vectors,
//! finds `S_i ⊆ T_i` (not all empty) whose sums agree on every shared
//! column of the tree, i.e. are valid with `ρ = 1` regarding some integral
//! `b̂`. The chosen witness minimizes `max |S_i|`, then `Σ |S_i|`, then the
//! concatenated multiplicity vectors lexicographically.

use crate::arith::rat;
use crate::error::{Budget, Error, Meter, Result};
use crate::graver::{norm_inf, sign_compatible, IntVector};
use crate::multistage::MultistageTree;

use super::Multiset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmultisetWitness {
    pub sets: Vec<Multiset>,
    /// Common segment sums, one entry per global column.
    pub bhat: Vec<i64>,
}

struct Candidate {
    mult: Vec<u64>,
    card: u64,
    sum: Vec<i64>,
}

struct Leaf {
    elements: Vec<IntVector>,
    candidates: Vec<Candidate>,
    columns: Vec<usize>,
}

/// Checks the preconditions shared by the oracle: dimensions, norm bound,
/// integrality and pairwise sign compatibility inside every set.
pub fn check_family(tree: &MultistageTree, sets: &[Multiset], delta: i64) -> Result<Vec<Vec<(IntVector, u64)>>> {
    let n = tree.leaf_count();
    if sets.len() != n {
        return Err(Error::dim("multiset family", n, sets.len()));
    }
    let d = tree.dims().width();
    sets.iter()
        .enumerate()
        .map(|(i, t)| {
            let counts = t.counts()?;
            for (v, _) in &counts {
                if v.len() != d {
                    return Err(Error::dim("multiset element", d, v.len()));
                }
                if norm_inf(v) > delta {
                    return Err(Error::Input(format!("element {v:?} of set {i} exceeds the bound {delta}")));
                }
            }
            for (a, (u, _)) in counts.iter().enumerate() {
                for (v, _) in &counts[a + 1..] {
                    if !sign_compatible(u, v) {
                        return Err(Error::Input(format!(
                            "set {i} contains sign-incompatible elements {u:?} and {v:?}"
                        )));
                    }
                }
            }
            Ok(counts)
        })
        .collect()
}

fn enumerate_candidates(counts: &[(IntVector, u64)], dim: usize, cap: u64, meter: &mut Meter) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    let mut mult = vec![0u64; counts.len()];
    fn rec(
        k: usize,
        counts: &[(IntVector, u64)],
        mult: &mut Vec<u64>,
        card: u64,
        cap: u64,
        dim: usize,
        out: &mut Vec<Candidate>,
        meter: &mut Meter,
    ) -> Result<()> {
        if k == counts.len() {
            meter.charge(1)?;
            let mut sum = vec![0i64; dim];
            for ((v, _), &m) in counts.iter().zip(mult.iter()) {
                for (s, &x) in sum.iter_mut().zip(v) {
                    *s += x * m as i64;
                }
            }
            out.push(Candidate {
                mult: mult.clone(),
                card,
                sum,
            });
            return Ok(());
        }
        let top = counts[k].1.min(cap - card);
        for m in 0..=top {
            mult[k] = m;
            rec(k + 1, counts, mult, card + m, cap, dim, out, meter)?;
        }
        mult[k] = 0;
        Ok(())
    }
    rec(0, counts, &mut mult, 0, cap, dim, &mut out, meter)?;
    Ok(out)
}

struct Search<'a> {
    leaves: &'a [Leaf],
    meter: &'a mut Meter,
    cap: u64,
    assigned: Vec<Option<i64>>,
    choice: Vec<usize>,
    best: Option<(u64, Vec<usize>)>,
}

impl Search<'_> {
    fn run(&mut self, i: usize, total: u64, nonempty: bool) -> Result<()> {
        self.meter.charge(1)?;
        if let Some((best_total, _)) = &self.best {
            if total >= *best_total {
                return Ok(());
            }
        }
        if i == self.leaves.len() {
            if nonempty {
                self.best = Some((total, self.choice.clone()));
            }
            return Ok(());
        }
        let leaf = &self.leaves[i];
        for (k, cand) in leaf.candidates.iter().enumerate() {
            if cand.card > self.cap {
                continue;
            }
            let consistent = leaf
                .columns
                .iter()
                .zip(&cand.sum)
                .all(|(&c, &s)| self.assigned[c].is_none_or(|a| a == s));
            if !consistent {
                continue;
            }
            let fresh: Vec<usize> = leaf.columns.iter().copied().filter(|&c| self.assigned[c].is_none()).collect();
            for (&c, &s) in leaf.columns.iter().zip(&cand.sum) {
                self.assigned[c] = Some(s);
            }
            self.choice.push(k);
            self.run(i + 1, total + cand.card, nonempty || cand.card > 0)?;
            self.choice.pop();
            for c in fresh {
                self.assigned[c] = None;
            }
        }
        Ok(())
    }
}

/// Exhaustive existence oracle for small valid submultisets. Returns
/// `None` when no not-all-empty valid choice with every `|S_i| <= max_card`
/// exists.
pub fn find_small_valid_submultisets(
    tree: &MultistageTree,
    sets: &[Multiset],
    delta: i64,
    max_card: u64,
    budget: Budget,
) -> Result<Option<SubmultisetWitness>> {
    let counts = check_family(tree, sets, delta)?;
    let d = tree.dims().width();
    let mut meter = budget.meter("submultiset search");

    let mut leaves = Vec::with_capacity(counts.len());
    for (i, c) in counts.iter().enumerate() {
        leaves.push(Leaf {
            elements: c.iter().map(|(v, _)| v.clone()).collect(),
            candidates: enumerate_candidates(c, d, max_card, &mut meter)?,
            columns: tree.path_columns(i)?.to_vec(),
        });
    }

    for cap in 1..=max_card {
        let mut search = Search {
            leaves: &leaves,
            cap,
            assigned: vec![None; tree.num_cols()],
            choice: Vec::new(),
            best: None,
            meter: &mut meter,
        };
        search.run(0, 0, false)?;
        let Some((_, choice)) = search.best else {
            continue;
        };

        let mut bhat = vec![0i64; tree.num_cols()];
        let mut out = Vec::with_capacity(leaves.len());
        for (leaf, &k) in leaves.iter().zip(&choice) {
            let cand = &leaf.candidates[k];
            for (&c, &s) in leaf.columns.iter().zip(&cand.sum) {
                bhat[c] = s;
            }
            let pairs = leaf
                .elements
                .iter()
                .zip(&cand.mult)
                .map(|(v, &m)| (v.clone(), rat(m as i64)));
            out.push(Multiset::from_counts(pairs)?);
        }
        return Ok(Some(SubmultisetWitness { sets: out, bhat }));
    }
    Ok(None)
}
