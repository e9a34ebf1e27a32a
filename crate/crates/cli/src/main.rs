//! `msip`: command-line front end.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error, 3 budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde_json::{json, Value};

use msip_core::arith::{format_rational, parse_rational, Rational};
use msip_core::graver::{graver_basis, graver_norm_bound, max_abs_entry, IntVector, Norm};
use msip_core::instances::{generate, parse_multiset_file, parse_program, serialize_program, sweep_corpus, GenParams};
use msip_core::multisets::{bound_constants, find_small_valid_submultisets, Multiset};
use msip_core::multistage::{leaf_subprogram, Program};
use msip_core::solver::{
    brute_force_ilp, graver_norm_experiment, proximity_experiment, solve_augmentation, sweep_row, BoxBounds,
    ProximityStatus, SolveReport, SweepRow,
};
use msip_core::{Budget, Error};

#[derive(Parser)]
#[command(name = "msip", version, about = "Multistage stochastic integer programs at desk scale")]
struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Cap on enumeration work units.
    #[arg(long, global = true, default_value_t = Budget::DEFAULT_LIMIT)]
    budget: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Augment,
    Brute,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instance and summarize its tree.
    Validate { file: PathBuf },
    /// Graver basis of the matrix, or of leaf matrix A_i.
    Graver {
        file: PathBuf,
        /// 1-based leaf index.
        #[arg(long)]
        submatrix: Option<usize>,
    },
    /// Solve inside an explicit box.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, allow_hyphen_values = true)]
        box_lo: i64,
        #[arg(long, allow_hyphen_values = true)]
        box_hi: i64,
    },
    /// LP vertex versus nearest integral optimum.
    Proximity {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        box_lo: i64,
        #[arg(long, allow_hyphen_values = true)]
        box_hi: i64,
    },
    /// Graver norms against the column bound.
    GraverExp { file: PathBuf },
    /// Search small valid submultisets of a multiset family.
    Lemma42 {
        file: PathBuf,
        #[arg(long)]
        max_card: u64,
    },
    /// Exact stage ladder constants.
    Bounds {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        t: u32,
        #[arg(long, default_value_t = 1)]
        k1: u32,
        #[arg(long, default_value = "1")]
        rho: String,
    },
    /// Generate a seeded instance.
    Gen {
        #[arg(long)]
        t: usize,
        /// Stage widths s_0,...,s_t.
        #[arg(long, value_delimiter = ',')]
        s: Vec<usize>,
        #[arg(long)]
        branching: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        delta: i64,
        #[arg(long)]
        seed: u64,
        /// Range for b as LO,HI (default -delta,delta).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        b_range: Option<Vec<i64>>,
        /// Range for c as LO,HI (default -delta,delta).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        c_range: Option<Vec<i64>>,
        /// Plant a point of [LO,HI]^N, set b from it and bound x by the box.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        feasible_box: Option<Vec<i64>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the seeded corpus through graver-exp, proximity and solve.
    Sweep {
        /// Seeds per shape and entry bound.
        #[arg(long, default_value_t = 6)]
        per_shape: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Upper end of the box [0, H]^N.
        #[arg(long, default_value_t = 3)]
        box_hi: i64,
    },
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Domain(Error::Input(format!("{}: {e}", path.display()))))
}

fn load(path: &Path) -> Result<Program, Failure> {
    Ok(parse_program(&read(path)?)?)
}

fn big(x: &BigInt) -> Value {
    Value::String(x.to_string())
}

fn q(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn csv(header: &str, rows: &[String]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

fn tuple(v: &[i64]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

fn validate(file: &Path, format: Option<Format>) -> Outcome {
    let p = load(file)?;
    let (tree, dims) = p.matrix.tree()?;
    let leaves: Vec<Vec<usize>> = (0..tree.leaf_count())
        .map(|i| tree.path_columns(i).map(|c| c.iter().map(|x| x + 1).collect()))
        .collect::<Result<_, _>>()?;
    if format == Some(Format::Csv) {
        let s: Vec<String> = dims.s.iter().map(ToString::to_string).collect();
        let row = format!("{},{},{},{},{},{}", p.matrix.num_rows(), p.num_cols(), dims.t, dims.n, s.join(" "), p.matrix.delta());
        return Ok(csv("m,N,t,n,s,delta", &[row]));
    }
    Ok(pretty(&json!({
        "valid": true,
        "m": p.matrix.num_rows(),
        "N": p.num_cols(),
        "delta": p.matrix.delta(),
        "t": dims.t,
        "n": dims.n,
        "s": dims.s,
        "d": dims.d,
        "r": dims.r,
        "leaf_paths": leaves,
    })))
}

fn graver(file: &Path, submatrix: Option<usize>, format: Option<Format>, budget: Budget) -> Outcome {
    let p = load(file)?;
    let (a, cols) = match submatrix {
        None => (p.matrix.entries().clone(), p.num_cols()),
        Some(i) => {
            let (tree, _) = p.matrix.tree()?;
            if i == 0 || i > tree.leaf_count() {
                return Err(Failure::Usage(format!("--submatrix must be in 1..={}", tree.leaf_count())));
            }
            let leaf = leaf_subprogram(&p, &tree, i - 1)?;
            let cols = leaf.cols.len();
            (leaf.a, cols)
        }
    };
    let g = graver_basis(&a, cols, budget)?;
    let bound = graver_norm_bound(cols, max_abs_entry(&a));
    let g_inf = g.complexity(Norm::LInf);
    Ok(match format {
        Some(Format::Json) => pretty(&json!({
            "elements": g.elements(),
            "g_inf": g_inf,
            "bound": big(&bound),
        })),
        Some(Format::Csv) => {
            let header: Vec<String> = (1..=cols).map(|j| format!("x{j}")).collect();
            let rows: Vec<String> = g
                .elements()
                .iter()
                .map(|e| e.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
                .collect();
            csv(&header.join(","), &rows)
        }
        None => {
            let mut out: String = g.elements().iter().map(|e| tuple(e) + "\n").collect();
            out.push_str(&format!("g_inf = {g_inf}\nbound = {bound}\n"));
            out
        }
    })
}

fn solve_report_json(r: &SolveReport) -> Value {
    json!({
        "status": r.status.to_string(),
        "x": r.x,
        "objective": r.objective,
        "steps": r.steps.iter().map(|s| json!({"g": s.g, "lambda": s.lambda})).collect::<Vec<_>>(),
        "max_step_norm": r.max_step_norm,
    })
}

fn solve(file: &Path, method: Method, lo: i64, hi: i64, format: Option<Format>, budget: Budget) -> Outcome {
    let p = load(file)?;
    if lo > hi {
        return Err(Failure::Usage(format!("empty box [{lo}, {hi}]")));
    }
    let bx = BoxBounds::uniform(p.num_cols(), lo, hi);
    let r = match method {
        Method::Augment => solve_augmentation(&p, &bx, budget)?,
        Method::Brute => brute_force_ilp(&p, &bx, budget)?,
    };
    if format == Some(Format::Csv) {
        let x = r.x.as_ref().map_or(String::new(), |x| x.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
        let obj = r.objective.map_or("NA".to_string(), |o| o.to_string());
        let row = format!("{},{},{},{},{}", r.status, obj, r.steps.len(), r.max_step_norm, x);
        return Ok(csv("status,objective,steps,max_step_norm,x", &[row]));
    }
    Ok(pretty(&solve_report_json(&r)))
}

fn proximity(file: &Path, lo: i64, hi: i64, format: Option<Format>, budget: Budget) -> Outcome {
    let p = load(file)?;
    if lo > hi {
        return Err(Failure::Usage(format!("empty box [{lo}, {hi}]")));
    }
    let r = proximity_experiment(&p, &BoxBounds::uniform(p.num_cols(), lo, hi), budget)?;
    let status = match r.status {
        ProximityStatus::Ok => "ok",
        ProximityStatus::LpInfeasible => "lp-infeasible",
        ProximityStatus::LpUnbounded => "lp-unbounded",
        ProximityStatus::IlpInfeasible => "ilp-infeasible",
    };
    if format == Some(Format::Csv) {
        let dist = r.dist_inf.as_ref().map_or("NA".to_string(), format_rational);
        let row = format!("{status},{dist},{},{}", r.column_bound, r.within_bound());
        return Ok(csv("status,dist_inf,column_bound,within_bound", &[row]));
    }
    Ok(pretty(&json!({
        "status": status,
        "x_frac": r.x_frac.as_ref().map(|v| v.iter().map(q).collect::<Vec<_>>()),
        "x_int": r.x_int,
        "dist_inf": r.dist_inf.as_ref().map(q),
        "column_bound": big(&r.column_bound),
        "within_bound": r.within_bound(),
        "params": {"d": r.params.d, "delta": r.params.delta, "t": r.params.t},
    })))
}

fn graver_exp(file: &Path, format: Option<Format>, budget: Budget) -> Outcome {
    let p = load(file)?;
    let r = graver_norm_experiment(&p.matrix, budget)?;
    if format == Some(Format::Csv) {
        let row = format!("{},{},{},{},{},{},{}", r.g_inf, r.g_1, r.basis_size, r.column_bound, r.params.d, r.params.delta, r.params.t);
        return Ok(csv("g_inf,g_1,basis_size,column_bound,d,delta,t", &[row]));
    }
    Ok(pretty(&json!({
        "g_inf": r.g_inf,
        "g_1": r.g_1,
        "basis_size": r.basis_size,
        "column_bound": big(&r.column_bound),
        "within_bound": BigInt::from(r.g_inf) <= r.column_bound,
        "leaf_g_inf": r.leaf_g_inf,
        "params": {"d": r.params.d, "delta": r.params.delta, "t": r.params.t},
        "symbolic_bound": r.symbolic_bound,
    })))
}

fn multiset_json(m: &Multiset) -> Value {
    Value::Array(m.iter().map(|(v, k): (&IntVector, &Rational)| json!({"v": v, "mult": format_rational(k)})).collect())
}

fn lemma42(file: &Path, max_card: u64, budget: Budget) -> Outcome {
    let f = parse_multiset_file(&read(file)?)?;
    let w = find_small_valid_submultisets(&f.tree, &f.sets, f.delta, max_card, budget)?;
    Ok(pretty(&match w {
        None => json!({"found": false}),
        Some(w) => json!({
            "found": true,
            "sets": w.sets.iter().map(multiset_json).collect::<Vec<_>>(),
            "bhat": w.bhat,
        }),
    }))
}

fn bounds(d: u32, delta: u64, t: u32, k1: u32, rho: &str, format: Option<Format>, budget: Budget) -> Outcome {
    let rho = parse_rational(rho).map_err(|e| Failure::Usage(format!("--rho: {e}")))?;
    let bt = bound_constants(d, delta, t, &rho, k1, budget)?;
    let mut named: Vec<(String, String)> = Vec::new();
    for (i, v) in bt.delta_ladder.iter().enumerate() {
        named.push((format!("Delta_{i}"), v.to_string()));
    }
    named.push(("nu_range".into(), bt.nu_range.to_string()));
    named.push(("nu".into(), bt.nu.to_string()));
    for i in 0..=t as usize {
        named.push((format!("alpha_{i}"), bt.alpha[i].to_string()));
        named.push((format!("beta_{i}"), bt.beta[i].to_string()));
        named.push((format!("D_{i}"), bt.dcap[i].to_string()));
        named.push((format!("rho_{i}"), format_rational(&bt.rho_ladder[i])));
    }
    named.push(("threshold".into(), format_rational(&bt.threshold)));
    if format == Some(Format::Csv) {
        let rows: Vec<String> = named.iter().map(|(k, v)| format!("{k},{v}")).collect();
        return Ok(csv("name,value", &rows));
    }
    let mut obj = serde_json::Map::new();
    obj.insert("d".into(), json!(d));
    obj.insert("delta".into(), json!(delta));
    obj.insert("t".into(), json!(t));
    obj.insert("k1".into(), json!(k1));
    obj.insert("rho".into(), q(&bt.rho));
    for (k, v) in named {
        obj.insert(k, Value::String(v));
    }
    Ok(pretty(&Value::Object(obj)))
}

fn pair(name: &str, v: Option<Vec<i64>>, default: (i64, i64)) -> Result<(i64, i64), Failure> {
    match v.as_deref() {
        None => Ok(default),
        Some(&[lo, hi]) => Ok((lo, hi)),
        Some(_) => Err(Failure::Usage(format!("--{name} takes LO,HI"))),
    }
}

fn sweep(per_shape: usize, seed: u64, hi: i64, budget: Budget) -> Outcome {
    let corpus = sweep_corpus(per_shape, seed, hi);
    let rows: Vec<Result<SweepRow, Error>> = corpus
        .par_iter()
        .map(|e| {
            let p = generate(&e.params)?;
            sweep_row(&e.id, &p, &BoxBounds::uniform(p.num_cols(), 0, hi), budget)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let lines: Vec<String> = rows.iter().map(SweepRow::to_csv).collect();
    Ok(csv(SweepRow::HEADER, &lines))
}

fn run(cli: Cli) -> Outcome {
    let budget = Budget::new(cli.budget);
    let format = cli.format;
    match cli.command {
        Command::Validate { file } => validate(&file, format),
        Command::Graver { file, submatrix } => graver(&file, submatrix, format, budget),
        Command::Solve { file, method, box_lo, box_hi } => solve(&file, method, box_lo, box_hi, format, budget),
        Command::Proximity { file, box_lo, box_hi } => proximity(&file, box_lo, box_hi, format, budget),
        Command::GraverExp { file } => graver_exp(&file, format, budget),
        Command::Lemma42 { file, max_card } => lemma42(&file, max_card, budget),
        Command::Bounds { d, delta, t, k1, rho } => bounds(d, delta, t, k1, &rho, format, budget),
        Command::Gen {
            t,
            s,
            branching,
            r,
            delta,
            seed,
            b_range,
            c_range,
            feasible_box,
            output,
        } => {
            let mut params = GenParams::new(t, s, branching, r, delta, seed);
            params.b_range = pair("b-range", b_range, params.b_range)?;
            params.c_range = pair("c-range", c_range, params.c_range)?;
            if feasible_box.is_some() {
                params.feasible_box = Some(pair("feasible-box", feasible_box, (0, 0))?);
            }
            let text = serialize_program(&generate(&params)?);
            match output {
                None => Ok(text),
                Some(path) => {
                    fs::write(&path, text).map_err(|e| Failure::Domain(Error::Input(format!("{}: {e}", path.display()))))?;
                    Ok(String::new())
                }
            }
        }
        Command::Sweep { per_shape, seed, box_hi } => sweep(per_shape, seed, box_hi, budget),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget() { 3 } else { 1 })
        }
    }
}
