//! Multistage stochastic matrices: block layout validation, the multistage
//! tree, leaf subprograms and the projection calculus.
//!
//! Indices are 0-based throughout the library. Leaf numbers run over
//! `0..n` in depth-first order, children visited by smallest column index.
//! Nodes carry a *depth* (root = 0); the bound ladder in
//! [`crate::multisets::bounds`] counts *height* from the leaves instead.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("nonzero-outside-block: entry ({row}, {col}) is not covered by any block")]
    NonzeroOutsideBlock { row: usize, col: usize },
    #[error("column-overlap: column {col} belongs to more than one block")]
    ColumnOverlap { col: usize },
    #[error("column-uncovered: column {col} belongs to no block")]
    ColumnUncovered { col: usize },
    #[error("non-laminar-rows: row sets of blocks {first} and {second} cross")]
    NonLaminarRows { first: usize, second: usize },
    #[error("no-root: no block contains the rows of every other block")]
    NoRoot,
    #[error("empty-block: block {block} has no rows or no columns")]
    EmptyBlock { block: usize },
    #[error("index-out-of-range: block {block} references {what} index {index}")]
    IndexOutOfRange {
        block: usize,
        what: &'static str,
        index: usize,
    },
    #[error("ragged-matrix: row {row} has {found} entries, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        found: usize,
    },
}

impl StructureError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            StructureError::NonzeroOutsideBlock { .. } => "nonzero-outside-block",
            StructureError::ColumnOverlap { .. } => "column-overlap",
            StructureError::ColumnUncovered { .. } => "column-uncovered",
            StructureError::NonLaminarRows { .. } => "non-laminar-rows",
            StructureError::NoRoot => "no-root",
            StructureError::EmptyBlock { .. } => "empty-block",
            StructureError::IndexOutOfRange { .. } => "index-out-of-range",
            StructureError::RaggedMatrix { .. } => "ragged-matrix",
        }
    }
}

/// A rectangle of the constraint matrix owning a unique set of columns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Block {
    pub fn new(rows: impl IntoIterator<Item = usize>, cols: impl IntoIterator<Item = usize>) -> Self {
        let rows: BTreeSet<usize> = rows.into_iter().collect();
        let cols: BTreeSet<usize> = cols.into_iter().collect();
        Block {
            rows: rows.into_iter().collect(),
            cols: cols.into_iter().collect(),
        }
    }
}

/// Integer constraint matrix together with a validated laminar block layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultistageMatrix {
    rows: usize,
    cols: usize,
    entries: IntMatrix,
    blocks: Vec<Block>,
    delta: i64,
}

impl MultistageMatrix {
    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &IntMatrix {
        &self.entries
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Largest absolute entry, `Δ`.
    pub fn delta(&self) -> i64 {
        self.delta
    }

    pub fn tree(&self) -> Result<(MultistageTree, StageDims)> {
        build_tree(self)
    }

    pub fn mul(&self, x: &[i64]) -> Result<Vec<i64>> {
        mat_vec(&self.entries, x, self.cols)
    }

    /// `A_i`: the rows of leaf `leaf`'s block restricted to the columns of
    /// its root-to-leaf path, in path order.
    pub fn leaf_matrix(&self, tree: &MultistageTree, leaf: usize) -> Result<IntMatrix> {
        let node = tree.leaf_node(leaf)?;
        let block = tree.nodes[node]
            .block
            .ok_or_else(|| Error::Input("tree was not built from this matrix".into()))?;
        let path = tree.path_columns(leaf)?;
        Ok(self.blocks[block]
            .rows
            .iter()
            .map(|&r| path.iter().map(|&c| self.entries[r][c]).collect())
            .collect())
    }

    pub fn leaf_rows(&self, tree: &MultistageTree, leaf: usize) -> Result<&[usize]> {
        let node = tree.leaf_node(leaf)?;
        let block = tree.nodes[node]
            .block
            .ok_or_else(|| Error::Input("tree was not built from this matrix".into()))?;
        Ok(&self.blocks[block].rows)
    }
}

pub(crate) fn mat_vec(a: &IntMatrix, x: &[i64], cols: usize) -> Result<Vec<i64>> {
    if x.len() != cols {
        return Err(Error::dim("matrix-vector product", cols, x.len()));
    }
    a.iter()
        .map(|row| {
            row.iter().zip(x).try_fold(0i64, |acc, (&a, &b)| {
                a.checked_mul(b)
                    .and_then(|p| acc.checked_add(p))
                    .ok_or(Error::Overflow("matrix-vector product"))
            })
        })
        .collect()
}

/// Validates a block layout against the multistage conditions.
pub fn validate_structure(entries: IntMatrix, cols: usize, blocks: Vec<Block>) -> Result<MultistageMatrix, StructureError> {
    let rows = entries.len();
    for (r, row) in entries.iter().enumerate() {
        if row.len() != cols {
            return Err(StructureError::RaggedMatrix {
                row: r,
                expected: cols,
                found: row.len(),
            });
        }
    }

    let blocks: Vec<Block> = blocks.into_iter().map(|b| Block::new(b.rows, b.cols)).collect();
    let mut owner: Vec<Option<usize>> = vec![None; cols];
    for (k, block) in blocks.iter().enumerate() {
        if block.rows.is_empty() || block.cols.is_empty() {
            return Err(StructureError::EmptyBlock { block: k });
        }
        if let Some(&r) = block.rows.iter().find(|&&r| r >= rows) {
            return Err(StructureError::IndexOutOfRange {
                block: k,
                what: "row",
                index: r,
            });
        }
        for &c in &block.cols {
            if c >= cols {
                return Err(StructureError::IndexOutOfRange {
                    block: k,
                    what: "column",
                    index: c,
                });
            }
            if owner[c].is_some() {
                return Err(StructureError::ColumnOverlap { col: c });
            }
            owner[c] = Some(k);
        }
    }
    if let Some(c) = owner.iter().position(Option::is_none) {
        return Err(StructureError::ColumnUncovered { col: c });
    }

    for (r, row) in entries.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let k = owner[c].expect("every column is owned");
            if blocks[k].rows.binary_search(&r).is_err() {
                return Err(StructureError::NonzeroOutsideBlock { row: r, col: c });
            }
        }
    }

    let row_sets: Vec<BTreeSet<usize>> = blocks.iter().map(|b| b.rows.iter().copied().collect()).collect();
    for i in 0..row_sets.len() {
        for j in i + 1..row_sets.len() {
            let (a, b) = (&row_sets[i], &row_sets[j]);
            if !(a.is_subset(b) || b.is_subset(a) || a.is_disjoint(b)) {
                return Err(StructureError::NonLaminarRows { first: i, second: j });
            }
        }
    }
    if !row_sets.iter().any(|root| row_sets.iter().all(|s| s.is_subset(root))) {
        return Err(StructureError::NoRoot);
    }

    let delta = entries.iter().flatten().map(|v| v.abs()).max().unwrap_or(0);
    Ok(MultistageMatrix {
        rows,
        cols,
        entries,
        blocks,
        delta,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Column set of the vertex, ascending.
    pub cols: Vec<usize>,
    pub depth: usize,
    pub parent: Option<usize>,
    /// Ordered by smallest column index.
    pub children: Vec<usize>,
    /// Index of the originating block, when built from a matrix.
    pub block: Option<usize>,
}

/// Nested description of a tree by column sets, used by file formats that
/// carry a tree without a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedTree {
    pub cols: Vec<usize>,
    pub children: Vec<NestedTree>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultistageTree {
    nodes: Vec<TreeNode>,
    root: usize,
    /// `leaves[i]` is the node carrying leaf number `i`.
    leaves: Vec<usize>,
    num_cols: usize,
    paths: Vec<Vec<usize>>,
}

/// Per-depth column widths and derived quantities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageDims {
    /// `s[i]`: columns of every vertex at depth `i`.
    pub s: Vec<usize>,
    /// `d[i] = s[0] + ... + s[t-i]`; `d[0]` is the path width.
    pub d: Vec<usize>,
    pub t: usize,
    /// Number of leaves.
    pub n: usize,
    /// Largest row count over leaf blocks (reporting only); `None` for trees
    /// not built from a matrix.
    pub r: Option<usize>,
}

impl StageDims {
    pub fn width(&self) -> usize {
        self.d[0]
    }
}

/// Builds the multistage tree of a validated matrix.
pub fn build_tree(m: &MultistageMatrix) -> Result<(MultistageTree, StageDims)> {
    let row_sets: Vec<BTreeSet<usize>> = m.blocks.iter().map(|b| b.rows.iter().copied().collect()).collect();
    let k = row_sets.len();
    for i in 0..k {
        for j in i + 1..k {
            if row_sets[i] == row_sets[j] {
                return Err(Error::UnsupportedShape(format!(
                    "blocks {i} and {j} have identical row sets"
                )));
            }
        }
    }

    let parent: Vec<Option<usize>> = (0..k)
        .map(|v| {
            (0..k)
                .filter(|&u| u != v && row_sets[v].is_subset(&row_sets[u]))
                .min_by_key(|&u| row_sets[u].len())
        })
        .collect();

    let nodes: Vec<TreeNode> = (0..k)
        .map(|v| TreeNode {
            cols: m.blocks[v].cols.clone(),
            depth: 0,
            parent: parent[v],
            children: Vec::new(),
            block: Some(v),
        })
        .collect();
    let tree = MultistageTree::assemble(nodes, m.cols)?;

    for (v, node) in tree.nodes.iter().enumerate() {
        if node.children.is_empty() {
            continue;
        }
        let covered: BTreeSet<usize> = node.children.iter().flat_map(|&c| row_sets[c].iter().copied()).collect();
        if let Some(r) = row_sets[v].difference(&covered).next() {
            return Err(Error::UnsupportedShape(format!(
                "row {r} of block {v} is not covered by any leaf block"
            )));
        }
    }

    let mut dims = tree.dims();
    dims.r = tree.leaves.iter().map(|&v| row_sets[v].len()).max();
    Ok((tree, dims))
}

impl MultistageTree {
    /// Links nodes whose `parent` fields are set, checks shape uniformity,
    /// and numbers the leaves.
    fn assemble(mut nodes: Vec<TreeNode>, num_cols: usize) -> Result<Self> {
        let roots: Vec<usize> = (0..nodes.len()).filter(|&v| nodes[v].parent.is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::UnsupportedShape("tree has no root".into())),
            _ => return Err(Error::UnsupportedShape("tree has several roots".into())),
        };
        for v in 0..nodes.len() {
            nodes[v].cols.sort_unstable();
            if let Some(p) = nodes[v].parent {
                nodes[p].children.push(v);
            }
        }
        let first_col = |nodes: &Vec<TreeNode>, v: usize| nodes[v].cols.first().copied().unwrap_or(usize::MAX);
        for v in 0..nodes.len() {
            let mut ch = std::mem::take(&mut nodes[v].children);
            ch.sort_by_key(|&c| first_col(&nodes, c));
            nodes[v].children = ch;
        }

        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![(root, 0usize)];
        let mut leaves = Vec::new();
        while let Some((v, depth)) = stack.pop() {
            if seen[v] {
                return Err(Error::UnsupportedShape("parent links contain a cycle".into()));
            }
            seen[v] = true;
            nodes[v].depth = depth;
            if nodes[v].children.is_empty() {
                leaves.push(v);
            }
            for &c in nodes[v].children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::UnsupportedShape("tree is not connected".into()));
        }

        let t = nodes[leaves[0]].depth;
        if let Some(&v) = leaves.iter().find(|&&v| nodes[v].depth != t) {
            return Err(Error::UnsupportedShape(format!(
                "leaves at different depths ({} and {})",
                t, nodes[v].depth
            )));
        }
        let mut widths: Vec<Option<usize>> = vec![None; t + 1];
        for node in &nodes {
            match widths[node.depth] {
                None => widths[node.depth] = Some(node.cols.len()),
                Some(w) if w != node.cols.len() => {
                    return Err(Error::UnsupportedShape(format!(
                        "vertices at depth {} have {} and {} columns",
                        node.depth,
                        w,
                        node.cols.len()
                    )))
                }
                Some(_) => {}
            }
        }

        let mut tree = MultistageTree {
            nodes,
            root,
            leaves,
            num_cols,
            paths: Vec::new(),
        };
        tree.paths = (0..tree.leaves.len())
            .map(|i| {
                tree.path_nodes_unchecked(i)
                    .into_iter()
                    .flat_map(|v| tree.nodes[v].cols.clone())
                    .collect()
            })
            .collect();
        Ok(tree)
    }

    /// Builds a tree directly from nested column sets. The column sets must
    /// partition `0..num_cols`.
    pub fn from_nested(nested: &NestedTree, num_cols: usize) -> Result<Self> {
        fn walk(t: &NestedTree, parent: Option<usize>, out: &mut Vec<TreeNode>) {
            let id = out.len();
            out.push(TreeNode {
                cols: t.cols.clone(),
                depth: 0,
                parent,
                children: Vec::new(),
                block: None,
            });
            for c in &t.children {
                walk(c, Some(id), out);
            }
        }
        let mut nodes = Vec::new();
        walk(nested, None, &mut nodes);
        let mut owner = vec![false; num_cols];
        for node in &nodes {
            if node.cols.is_empty() {
                return Err(Error::UnsupportedShape("tree vertex without columns".into()));
            }
            for &c in &node.cols {
                if c >= num_cols {
                    return Err(Error::Input(format!("tree column {c} out of range")));
                }
                if std::mem::replace(&mut owner[c], true) {
                    return Err(StructureError::ColumnOverlap { col: c }.into());
                }
            }
        }
        if let Some(c) = owner.iter().position(|o| !o) {
            return Err(StructureError::ColumnUncovered { col: c }.into());
        }
        Self::assemble(nodes, num_cols)
    }

    pub fn to_nested(&self) -> NestedTree {
        fn walk(tree: &MultistageTree, v: usize) -> NestedTree {
            NestedTree {
                cols: tree.nodes[v].cols.clone(),
                children: tree.nodes[v].children.iter().map(|&c| walk(tree, c)).collect(),
            }
        }
        walk(self, self.root)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn height(&self) -> usize {
        self.nodes[self.leaves[0]].depth
    }

    pub fn leaf_node(&self, leaf: usize) -> Result<usize> {
        self.leaves
            .get(leaf)
            .copied()
            .ok_or_else(|| Error::Input(format!("leaf {leaf} out of range (n = {})", self.leaves.len())))
    }

    pub fn dims(&self) -> StageDims {
        let t = self.height();
        let mut s = vec![0; t + 1];
        for node in &self.nodes {
            s[node.depth] = node.cols.len();
        }
        let d = (0..=t).map(|i| s[..=t - i].iter().sum()).collect();
        StageDims {
            s,
            d,
            t,
            n: self.leaves.len(),
            r: None,
        }
    }

    fn path_nodes_unchecked(&self, leaf: usize) -> Vec<usize> {
        let mut path = vec![self.leaves[leaf]];
        while let Some(p) = self.nodes[*path.last().unwrap()].parent {
            path.push(p);
        }
        path.reverse();
        path
    }

    /// Vertices on the root-to-leaf path, root first.
    pub fn path_nodes(&self, leaf: usize) -> Result<Vec<usize>> {
        self.leaf_node(leaf)?;
        Ok(self.path_nodes_unchecked(leaf))
    }

    /// Global columns along the root-to-leaf path, root first.
    pub fn path_columns(&self, leaf: usize) -> Result<&[usize]> {
        self.leaf_node(leaf)?;
        Ok(&self.paths[leaf])
    }

    /// `π(i, b)`: entries of `b` along leaf `i`'s path, root segment first.
    pub fn project<T: Clone>(&self, leaf: usize, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.num_cols {
            return Err(Error::dim("projection", self.num_cols, b.len()));
        }
        Ok(self.path_columns(leaf)?.iter().map(|&c| b[c].clone()).collect())
    }

    /// `π^j(i, b)`: the first `d_j` entries of `π(i, b)`.
    pub fn project_prefix<T: Clone>(&self, leaf: usize, b: &[T], j: usize) -> Result<Vec<T>> {
        let dims = self.dims();
        if j > dims.t {
            return Err(Error::Input(format!("stage {j} exceeds tree height {}", dims.t)));
        }
        let mut v = self.project(leaf, b)?;
        v.truncate(dims.d[j]);
        Ok(v)
    }

    /// Maps a vector of length `d_j` to its first `d_{j+1}` entries.
    pub fn drop_last_stage<T: Clone>(&self, v: &[T]) -> Result<Vec<T>> {
        let dims = self.dims();
        let j = dims
            .d
            .iter()
            .position(|&w| w == v.len())
            .ok_or_else(|| Error::Input(format!("length {} is not a stage width", v.len())))?;
        if j == dims.t {
            return Err(Error::Input("cannot drop the root stage".into()));
        }
        Ok(v[..dims.d[j + 1]].to_vec())
    }

    /// Leaf numbers below vertex `v`, ascending.
    pub fn subtree_leaves(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.leaves.len())
            .filter(|&i| self.path_nodes_unchecked(i).contains(&v))
            .collect();
        out.sort_unstable();
        out
    }

    /// `P_0, ..., P_t`: for each depth, the leaf sets of the vertices at
    /// that depth. Cells are sorted by their smallest leaf.
    pub fn partitions(&self) -> Vec<Vec<Vec<usize>>> {
        let t = self.height();
        let mut parts: Vec<Vec<Vec<usize>>> = vec![Vec::new(); t + 1];
        for (v, node) in self.nodes.iter().enumerate() {
            parts[node.depth].push(self.subtree_leaves(v));
        }
        for p in &mut parts {
            p.sort();
        }
        parts
    }

    /// Position ranges of each vertex's columns inside a leaf's path vector.
    pub fn path_segments(&self, leaf: usize) -> Result<Vec<(usize, std::ops::Range<usize>)>> {
        let mut start = 0;
        Ok(self
            .path_nodes(leaf)?
            .into_iter()
            .map(|v| {
                let len = self.nodes[v].cols.len();
                let seg = (v, start..start + len);
                start += len;
                seg
            })
            .collect())
    }
}

/// Integer program `min c·x, A x = b, lower <= x <= upper` over a
/// multistage matrix. Missing bounds are infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub matrix: MultistageMatrix,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
    pub lower: Vec<Option<i64>>,
    pub upper: Vec<Option<i64>>,
}

impl Program {
    pub fn new(
        matrix: MultistageMatrix,
        b: Vec<i64>,
        c: Vec<i64>,
        lower: Vec<Option<i64>>,
        upper: Vec<Option<i64>>,
    ) -> Result<Self> {
        if b.len() != matrix.num_rows() {
            return Err(Error::dim("right-hand side", matrix.num_rows(), b.len()));
        }
        let n = matrix.num_cols();
        for (what, len) in [("objective", c.len()), ("lower bounds", lower.len()), ("upper bounds", upper.len())] {
            if len != n {
                return Err(Error::Input(format!("{what} has length {len}, expected {n}")));
            }
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if let (Some(l), Some(u)) = (l, u) {
                if l > u {
                    return Err(Error::Input(format!("variable {j} has lower bound {l} > upper bound {u}")));
                }
            }
        }
        Ok(Program {
            matrix,
            b,
            c,
            lower,
            upper,
        })
    }

    /// The form `min c·x, A x = b, x >= 0`.
    pub fn nonnegative(matrix: MultistageMatrix, b: Vec<i64>, c: Vec<i64>) -> Result<Self> {
        let n = matrix.num_cols();
        Self::new(matrix, b, c, vec![Some(0); n], vec![None; n])
    }

    pub fn num_cols(&self) -> usize {
        self.matrix.num_cols()
    }
}

/// Leaf subprogram `(A_i, b_i, c_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafProgram {
    pub a: IntMatrix,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
    /// Global row indices of `A_i`.
    pub rows: Vec<usize>,
    /// Global column indices of `A_i`, in path order.
    pub cols: Vec<usize>,
}

pub fn leaf_subprogram(p: &Program, tree: &MultistageTree, leaf: usize) -> Result<LeafProgram> {
    let a = p.matrix.leaf_matrix(tree, leaf)?;
    let rows = p.matrix.leaf_rows(tree, leaf)?.to_vec();
    let cols = tree.path_columns(leaf)?.to_vec();
    Ok(LeafProgram {
        b: rows.iter().map(|&r| p.b[r]).collect(),
        c: tree.project(leaf, &p.c)?,
        a,
        rows,
        cols,
    })
}

impl fmt::Display for StageDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} n={} s={:?} d={:?}", self.t, self.n, self.s, self.d)
    }
}
