//! Seeded generation of multistage instances.
//!
//! The generator builds a complete tree with `branching^t` leaves. Columns
//! are numbered in preorder, each leaf owns `r` consecutive rows, and an
//! internal vertex's block spans the rows of all leaves below it. Random
//! values come from [`SplitMix64`], so a `(params, seed)` pair pins the
//! instance down bit for bit on every platform.

mod io;

pub use io::{canonicalize, parse_multiset_file, parse_program, serialize_multiset_file, serialize_program, MultisetFile};

use crate::error::{Error, Result};
use crate::multistage::{validate_structure, Block, Program};

/// SplitMix64: a 64-bit counter stepped by `0x9E3779B97F4A7C15` and mixed
/// with multipliers `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB` and shifts
/// 30, 27, 31.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `lo..=hi`, by rejection so there is no modulo bias.
    pub fn uniform(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        let span = (hi as i128 - lo as i128 + 1) as u128;
        if span > u64::MAX as u128 {
            return self.next_u64() as i64;
        }
        let span = span as u64;
        let threshold = span.wrapping_neg() % span;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return (lo as i128 + (x % span) as i128) as i64;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub t: usize,
    /// Column widths `s_0..s_t`, root first.
    pub s: Vec<usize>,
    pub branching: usize,
    /// Rows per leaf block.
    pub r: usize,
    pub delta: i64,
    pub b_range: (i64, i64),
    pub c_range: (i64, i64),
    pub seed: u64,
    /// When set, draw a point `x0` uniformly from `[lo, hi]^N`, use
    /// `b = A x0` instead of sampling `b`, and bound every variable by the
    /// box. The instance is then feasible by construction.
    pub feasible_box: Option<(i64, i64)>,
}

impl GenParams {
    pub fn new(t: usize, s: Vec<usize>, branching: usize, r: usize, delta: i64, seed: u64) -> Self {
        GenParams {
            t,
            s,
            branching,
            r,
            delta,
            b_range: (-delta, delta),
            c_range: (-delta, delta),
            seed,
            feasible_box: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Input(msg));
        if self.s.len() != self.t + 1 {
            return bad(format!("need {} stage widths, got {}", self.t + 1, self.s.len()));
        }
        if self.s.contains(&0) {
            return bad("stage widths must be at least 1".into());
        }
        if self.branching == 0 {
            return bad("branching must be at least 1".into());
        }
        // a chain would give parent and child identical row sets
        if self.branching == 1 && self.t > 0 {
            return Err(Error::UnsupportedShape("branching 1 with t > 0 gives nested blocks with identical rows".into()));
        }
        if self.r == 0 {
            return bad("leaf blocks need at least one row".into());
        }
        if self.delta < 1 {
            return bad("delta must be at least 1".into());
        }
        for (name, (lo, hi)) in [("b", self.b_range), ("c", self.c_range)] {
            if lo > hi {
                return bad(format!("empty {name} range {lo}..{hi}"));
            }
        }
        if let Some((lo, hi)) = self.feasible_box {
            if lo > hi {
                return bad(format!("empty box {lo}..{hi}"));
            }
        }
        Ok(())
    }

    pub fn leaf_count(&self) -> usize {
        self.branching.pow(self.t as u32)
    }

    pub fn num_cols(&self) -> usize {
        (0..=self.t).map(|i| self.s[i] * self.branching.pow(i as u32)).sum()
    }
}

struct Shape {
    /// (columns, leaves below) per vertex, preorder.
    blocks: Vec<(Vec<usize>, std::ops::Range<usize>)>,
    /// Path columns of every leaf, ascending.
    paths: Vec<Vec<usize>>,
}

fn shape(p: &GenParams) -> Shape {
    fn walk(p: &GenParams, depth: usize, path: &mut Vec<usize>, next_col: &mut usize, out: &mut Shape) {
        let cols: Vec<usize> = (*next_col..*next_col + p.s[depth]).collect();
        *next_col += p.s[depth];
        let first_leaf = out.paths.len();
        let slot = out.blocks.len();
        out.blocks.push((cols.clone(), 0..0));
        path.extend(&cols);
        if depth == p.t {
            out.paths.push(path.clone());
        } else {
            for _ in 0..p.branching {
                walk(p, depth + 1, path, next_col, out);
            }
        }
        path.truncate(path.len() - cols.len());
        out.blocks[slot].1 = first_leaf..out.paths.len();
    }
    let mut out = Shape {
        blocks: Vec::new(),
        paths: Vec::new(),
    };
    walk(p, 0, &mut Vec::new(), &mut 0, &mut out);
    out
}

/// Deterministic instance for `p`. Draw order: matrix entries row by row
/// (each row over its leaf's path columns, ascending), then `c`, then
/// either `b` or the hidden point `x0`.
pub fn generate(p: &GenParams) -> Result<Program> {
    p.validate()?;
    let shape = shape(p);
    let n_cols = p.num_cols();
    let n_rows = p.r * shape.paths.len();
    let mut rng = SplitMix64::new(p.seed);

    let mut entries = vec![vec![0i64; n_cols]; n_rows];
    for (leaf, path) in shape.paths.iter().enumerate() {
        for row in &mut entries[leaf * p.r..(leaf + 1) * p.r] {
            for &c in path {
                row[c] = rng.uniform(-p.delta, p.delta);
            }
        }
    }
    let blocks = shape
        .blocks
        .iter()
        .map(|(cols, leaves)| Block::new(leaves.start * p.r..leaves.end * p.r, cols.iter().copied()))
        .collect();
    let matrix = validate_structure(entries, n_cols, blocks)?;
    let c: Vec<i64> = (0..n_cols).map(|_| rng.uniform(p.c_range.0, p.c_range.1)).collect();

    match p.feasible_box {
        None => {
            let b = (0..n_rows).map(|_| rng.uniform(p.b_range.0, p.b_range.1)).collect();
            Program::nonnegative(matrix, b, c)
        }
        Some((lo, hi)) => {
            let x0: Vec<i64> = (0..n_cols).map(|_| rng.uniform(lo, hi)).collect();
            let b = matrix.mul(&x0)?;
            Program::new(matrix, b, c, vec![Some(lo); n_cols], vec![Some(hi); n_cols])
        }
    }
}

/// Tree shapes `(t, s, branching, r)` of the sweep corpus; all have at
/// most seven columns.
pub const SWEEP_SHAPES: &[(usize, &[usize], usize, usize)] = &[
    (0, &[3], 1, 1),
    (0, &[4], 1, 2),
    (1, &[1, 1], 2, 1),
    (1, &[1, 1], 3, 1),
    (1, &[2, 1], 2, 1),
    (1, &[1, 2], 2, 1),
    (1, &[2, 2], 2, 1),
    (1, &[1, 2], 3, 1),
    (2, &[1, 1, 1], 2, 1),
];

/// One corpus entry: a stable identifier and the parameters behind it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: String,
    pub params: GenParams,
}

/// The sweep corpus: every shape of [`SWEEP_SHAPES`] for `Δ ∈ {1, 2}` and
/// `per_shape` consecutive seeds from `seed`, feasible in `[0, hi]^N`.
pub fn sweep_corpus(per_shape: usize, seed: u64, hi: i64) -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for &(t, s, branching, r) in SWEEP_SHAPES {
        for delta in 1..=2 {
            for k in 0..per_shape as u64 {
                let mut params = GenParams::new(t, s.to_vec(), branching, r, delta, seed.wrapping_add(k));
                params.c_range = (-3, 3);
                params.feasible_box = Some((0, hi));
                let widths: Vec<String> = s.iter().map(ToString::to_string).collect();
                let id = format!("t{t}-s{}-b{branching}-r{r}-D{delta}-seed{}", widths.join("."), params.seed);
                out.push(CorpusEntry { id, params });
            }
        }
    }
    out
}
