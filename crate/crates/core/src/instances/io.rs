//! Canonical JSON for programs and multiset families. Indices in files are
//! 1-based; everything in memory is 0-based.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::arith::{format_rational, parse_rational, Rational};
use crate::error::{Error, Result};
use crate::graver::IntVector;
use crate::multisets::Multiset;
use crate::multistage::{validate_structure, Block, MultistageMatrix, MultistageTree, NestedTree, Program, StructureError};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockJson {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramJson {
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    entries: Vec<Vec<i64>>,
    blocks: Vec<BlockJson>,
    b: Vec<i64>,
    c: Vec<i64>,
    #[serde(default)]
    lower: Option<Vec<Option<i64>>>,
    #[serde(default)]
    upper: Option<Vec<Option<i64>>>,
}

fn from_json<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse(format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()))
    })
}

fn zero_based(block: usize, what: &'static str, idx: &[usize]) -> Result<Vec<usize>, StructureError> {
    idx.iter()
        .map(|&i| {
            i.checked_sub(1).ok_or(StructureError::IndexOutOfRange {
                block: block + 1,
                what,
                index: 0,
            })
        })
        .collect()
}

/// Blocks ordered by smallest column; the layout used by serialization.
fn canonical_matrix(m: MultistageMatrix) -> MultistageMatrix {
    let mut blocks = m.blocks().to_vec();
    blocks.sort_by_key(|b| b.cols[0]);
    if blocks == m.blocks() {
        return m;
    }
    validate_structure(m.entries().clone(), m.num_cols(), blocks).expect("reordering blocks keeps a valid layout")
}

/// Brings a program into the form `serialize_program` writes, so that
/// parsing the output gives back an equal value.
pub fn canonicalize(p: Program) -> Program {
    Program {
        matrix: canonical_matrix(p.matrix),
        ..p
    }
}

/// Parses and validates a program. Missing `lower` means all zeros and
/// missing `upper` means unbounded; `null` entries are infinite bounds.
pub fn parse_program(text: &str) -> Result<Program> {
    let raw: ProgramJson = from_json(text)?;
    if raw.entries.len() != raw.m {
        return Err(Error::dim("entries (rows)", raw.m, raw.entries.len()));
    }
    let blocks = raw
        .blocks
        .iter()
        .enumerate()
        .map(|(k, b)| Ok(Block::new(zero_based(k, "row", &b.rows)?, zero_based(k, "column", &b.cols)?)))
        .collect::<Result<Vec<_>, StructureError>>()?;
    let matrix = canonical_matrix(validate_structure(raw.entries, raw.n, blocks)?);
    let lower = raw.lower.unwrap_or_else(|| vec![Some(0); raw.n]);
    let upper = raw.upper.unwrap_or_else(|| vec![None; raw.n]);
    Program::new(matrix, raw.b, raw.c, lower, upper)
}

fn ints<T: std::fmt::Display>(xs: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn bounds(xs: &[Option<i64>]) -> String {
    ints(xs.iter().map(|x| x.map_or_else(|| "null".to_string(), |v| v.to_string())))
}

fn lines(items: Vec<String>) -> String {
    if items.is_empty() {
        return "[]".to_string();
    }
    format!("[\n    {}\n  ]", items.join(",\n    "))
}

/// Canonical text: fixed key order, blocks sorted by smallest column,
/// ascending 1-based index lists, trailing newline.
pub fn serialize_program(p: &Program) -> String {
    let matrix = canonical_matrix(p.matrix.clone());
    let entries = matrix.entries().iter().map(|row| ints(row)).collect();
    let blocks = matrix
        .blocks()
        .iter()
        .map(|b| {
            format!(
                "{{\"rows\": {}, \"cols\": {}}}",
                ints(b.rows.iter().map(|r| r + 1)),
                ints(b.cols.iter().map(|c| c + 1))
            )
        })
        .collect();
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"m\": {},", matrix.num_rows());
    let _ = writeln!(out, "  \"N\": {},", matrix.num_cols());
    let _ = writeln!(out, "  \"entries\": {},", lines(entries));
    let _ = writeln!(out, "  \"blocks\": {},", lines(blocks));
    let _ = writeln!(out, "  \"b\": {},", ints(&p.b));
    let _ = writeln!(out, "  \"c\": {},", ints(&p.c));
    let _ = writeln!(out, "  \"lower\": {},", bounds(&p.lower));
    let _ = writeln!(out, "  \"upper\": {}", bounds(&p.upper));
    out.push_str("}\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeJson {
    cols: Vec<usize>,
    #[serde(default)]
    children: Vec<TreeJson>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MultJson {
    Int(i64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementJson {
    v: Vec<i64>,
    mult: MultJson,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultisetFileJson {
    d: usize,
    delta: i64,
    tree: TreeJson,
    sets: Vec<Vec<ElementJson>>,
}

/// A tree over `d` coordinates with one multiset per leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultisetFile {
    pub d: usize,
    pub delta: i64,
    pub tree: MultistageTree,
    pub sets: Vec<Multiset>,
}

fn nested(t: &TreeJson) -> Result<NestedTree> {
    Ok(NestedTree {
        cols: t
            .cols
            .iter()
            .map(|&c| c.checked_sub(1).ok_or_else(|| Error::Input("tree column indices start at 1".into())))
            .collect::<Result<_>>()?,
        children: t.children.iter().map(nested).collect::<Result<_>>()?,
    })
}

/// Parses the multiset family format
/// `{"d", "delta", "tree": {"cols", "children"}, "sets": [[{"v", "mult"}]]}`.
/// Multiplicities are integers or strings `"n"` / `"n/d"`.
pub fn parse_multiset_file(text: &str) -> Result<MultisetFile> {
    let raw: MultisetFileJson = from_json(text)?;
    let shape = nested(&raw.tree)?;
    fn count(t: &NestedTree) -> usize {
        t.cols.len() + t.children.iter().map(count).sum::<usize>()
    }
    let tree = MultistageTree::from_nested(&shape, count(&shape))?;
    if tree.dims().width() != raw.d {
        return Err(Error::Input(format!(
            "d = {} but root-to-leaf paths have {} columns",
            raw.d,
            tree.dims().width()
        )));
    }
    let sets = raw
        .sets
        .into_iter()
        .map(|set| {
            let mut m = Multiset::new();
            for e in set {
                if e.v.len() != raw.d {
                    return Err(Error::dim("multiset element", raw.d, e.v.len()));
                }
                let mult: Rational = match e.mult {
                    MultJson::Int(k) => Rational::from_integer(k.into()),
                    MultJson::Text(s) => parse_rational(&s)?,
                };
                m.add(e.v, &mult)?;
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    if sets.len() != tree.leaf_count() {
        return Err(Error::dim("multiset family", tree.leaf_count(), sets.len()));
    }
    Ok(MultisetFile {
        d: raw.d,
        delta: raw.delta,
        tree,
        sets,
    })
}

fn tree_json(t: &NestedTree) -> String {
    let children: Vec<String> = t.children.iter().map(tree_json).collect();
    format!(
        "{{\"cols\": {}, \"children\": [{}]}}",
        ints(t.cols.iter().map(|c| c + 1)),
        children.join(", ")
    )
}

pub fn serialize_multiset_file(f: &MultisetFile) -> String {
    let sets: Vec<String> = f
        .sets
        .iter()
        .map(|s| {
            let items: Vec<String> = s
                .iter()
                .map(|(v, k): (&IntVector, &Rational)| format!("{{\"v\": {}, \"mult\": \"{}\"}}", ints(v), format_rational(k)))
                .collect();
            format!("[{}]", items.join(", "))
        })
        .collect();
    format!(
        "{{\n  \"d\": {},\n  \"delta\": {},\n  \"tree\": {},\n  \"sets\": {}\n}}\n",
        f.d,
        f.delta,
        tree_json(&f.tree.to_nested()),
        lines(sets)
    )
}
