//! Acceptance gate. Every criterion is checked against an oracle written
//! here, independently of the library code it tests, and reported on one
//! line. The process exits nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use msip_core::arith::Rational;
use msip_core::graver::{graver_basis, kernel_lattice_basis, IntVector, Norm};
use msip_core::instances::{generate, sweep_corpus, GenParams, SplitMix64};
use msip_core::multisets::{
    almost_partition, bound_constants, find_small_valid_submultisets, rho_valid, single_element,
    valid_witness_from_kernel, Multiset, ValiditySpec,
};
use msip_core::multistage::{validate_structure, Block, MultistageTree, Program};
use msip_core::solver::{brute_force_ilp, proximity_experiment, solve_augmentation, BoxBounds, SolveStatus};
use msip_core::Budget;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, title: &str, ok: bool, detail: String, started: Instant) {
        if !ok {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2} [{}] {title}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn conformal(x: &[i64], y: &[i64]) -> bool {
    x.iter().zip(y).all(|(&a, &b)| a * b >= 0 && a.abs() <= b.abs())
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2: Graver bases of all tiny matrices against brute force.

/// Reduced row echelon form; returns pivot columns and the reduced rows.
fn rref(a: &[Vec<i64>], cols: usize) -> (Vec<usize>, Vec<Vec<BigRational>>) {
    let mut m: Vec<Vec<BigRational>> = a.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(p) = (row..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(row, p);
        let inv = m[row][c].recip();
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..m.len() {
            if i != row && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let s = &f * &m[row][j];
                    m[i][j] -= s;
                }
            }
        }
        pivots.push(c);
        row += 1;
    }
    m.truncate(row);
    (pivots, m)
}

/// Minimal elements by increasing ℓ1 norm; a vector is kept iff no kept
/// vector lies below it.
fn antichain(mut pts: Vec<IntVector>) -> BTreeSet<IntVector> {
    pts.sort_by_key(|p| p.iter().map(|v| v.abs()).sum::<i64>());
    let mut kept: Vec<IntVector> = Vec::new();
    for p in pts {
        if !kept.iter().any(|k| conformal(k, &p)) {
            kept.push(p);
        }
    }
    kept.into_iter().collect()
}

/// ⊑-minimal nonzero kernel vectors of `a` inside `‖x‖∞ <= r`.
fn brute_graver(a: &[Vec<i64>], cols: usize, r: i64) -> BTreeSet<IntVector> {
    let (pivots, red) = rref(a, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    if free.len() == 2 && pivots.len() == 1 {
        return quadrant_scan(&red[0], pivots[0], &free, cols, r);
    }
    let total = (2 * r + 1).pow(free.len() as u32);
    assert!(total <= 1_000_000, "generic enumeration too large");
    let mut pts = Vec::new();
    let mut f = vec![-r; free.len()];
    'outer: loop {
        let mut x = vec![0i64; cols];
        for (k, &c) in free.iter().enumerate() {
            x[c] = f[k];
        }
        let mut ok = true;
        for (k, &p) in pivots.iter().enumerate() {
            let mut v = BigRational::zero();
            for &c in &free {
                v -= &red[k][c] * q(x[c]);
            }
            match v.is_integer().then(|| v.to_integer().to_i64()).flatten() {
                Some(iv) if iv.abs() <= r => x[p] = iv,
                _ => ok = false,
            }
        }
        if ok && x.iter().any(|&v| v != 0) {
            pts.push(x);
        }
        let mut k = free.len();
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            if f[k] < r {
                f[k] += 1;
                continue 'outer;
            }
            f[k] = -r;
        }
    }
    antichain(pts)
}

/// Kernel with one pivot `p` and two free coordinates. For each sign
/// quadrant of the free coordinates, a 2D prefix minimum of the pivot value
/// (split by the pivot's sign) decides whether some other nonzero kernel
/// point lies conformally below a given one.
fn quadrant_scan(row: &[BigRational], p: usize, free: &[usize], cols: usize, r: i64) -> BTreeSet<IntVector> {
    // x_p = -(n1 f1 + n2 f2) / den
    let den = row[free[0]].denom().lcm(row[free[1]].denom());
    let n1 = (row[free[0]].numer() * (&den / row[free[0]].denom())).to_i64().unwrap();
    let n2 = (row[free[1]].numer() * (&den / row[free[1]].denom())).to_i64().unwrap();
    let den = den.to_i64().unwrap();
    const INF: i32 = i32::MAX;
    let w = (r + 1) as usize;
    let mut out = BTreeSet::new();
    let mut pos = vec![INF; w * w];
    let mut neg = vec![INF; w * w];
    for s1 in [1i64, -1] {
        for s2 in [1i64, -1] {
            for i in 0..w {
                for j in 0..w {
                    let num = -(n1 * s1 * i as i64 + n2 * s2 * j as i64);
                    let yp = (num % den == 0).then_some(num / den).filter(|v| v.abs() <= r);
                    let at = i * w + j;
                    let origin = i == 0 && j == 0;
                    if let (Some(yp), false) = (yp, origin) {
                        let below = |arr: &Vec<i32>| {
                            let a = if i > 0 { arr[at - w] } else { INF };
                            let b = if j > 0 { arr[at - 1] } else { INF };
                            a.min(b)
                        };
                        let dominated = if yp >= 0 {
                            below(&pos) <= yp as i32
                        } else {
                            below(&neg) <= (-yp) as i32
                        };
                        if !dominated {
                            let mut x = vec![0i64; cols];
                            x[free[0]] = s1 * i as i64;
                            x[free[1]] = s2 * j as i64;
                            x[p] = yp;
                            out.insert(x);
                        }
                    }
                    let (mut vp, mut vn) = (INF, INF);
                    if let (Some(yp), false) = (yp, origin) {
                        if yp >= 0 {
                            vp = yp as i32;
                        }
                        if yp <= 0 {
                            vn = (-yp) as i32;
                        }
                    }
                    for (arr, v) in [(&mut pos, vp), (&mut neg, vn)] {
                        let mut m = v;
                        if i > 0 {
                            m = m.min(arr[at - w]);
                        }
                        if j > 0 {
                            m = m.min(arr[at - 1]);
                        }
                        arr[at] = m;
                    }
                }
            }
        }
    }
    out
}

/// All matrices with `rows` rows and `m` columns, entries in -2..=2, one per
/// multiset of columns.
fn tiny_matrices(rows: usize, m: usize) -> Vec<Vec<Vec<i64>>> {
    let columns: Vec<Vec<i64>> = (0..5i64.pow(rows as u32))
        .map(|mut k| {
            (0..rows)
                .map(|_| {
                    let v = k % 5 - 2;
                    k /= 5;
                    v
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let a: Vec<Vec<i64>> = (0..rows).map(|i| idx.iter().map(|&c| columns[c][i]).collect()).collect();
        out.push(a);
        // next non-decreasing index tuple
        let Some(k) = (0..m).rev().find(|&k| idx[k] + 1 < columns.len()) else { break };
        idx[k] += 1;
        for j in k + 1..m {
            idx[j] = idx[k];
        }
    }
    out
}

fn criteria_1_2(rep: &mut Report) {
    let started = Instant::now();
    let (mut total, mut mismatches, mut over_cap) = (0usize, Vec::new(), Vec::new());
    let mut max_ratio = 0f64;
    for rows in 1..=2 {
        for m in 1..=3 {
            for a in tiny_matrices(rows, m) {
                let delta = a.iter().flatten().map(|v| v.abs()).max().unwrap();
                let cap = (2 * m as i64 * delta + 1).pow(m as u32);
                let brute = brute_graver(&a, m, cap);
                let g = graver_basis(&a, m, Budget::unlimited()).expect("Graver basis");
                let got: BTreeSet<IntVector> = g.elements().iter().cloned().collect();
                total += 1;
                if got != brute {
                    mismatches.push(a.clone());
                }
                let g_inf = g.complexity(Norm::LInf);
                if g_inf > cap {
                    over_cap.push(a.clone());
                }
                max_ratio = max_ratio.max(g_inf as f64 / cap as f64);
            }
        }
    }
    rep.line(
        1,
        "Graver basis equals brute-force minimal kernel vectors",
        mismatches.is_empty() && total > 0,
        format!("{total} matrices, {} mismatches{}", mismatches.len(), first(&mismatches)),
        started,
    );
    rep.line(
        2,
        "g_inf <= (2m*Delta+1)^m on every basis of criterion 1",
        over_cap.is_empty() && total > 0,
        format!("{total} bases, {} violations, max g_inf/cap = {max_ratio:.3}", over_cap.len()),
        started,
    );
}

fn first<T: std::fmt::Debug>(v: &[T]) -> String {
    v.first().map_or(String::new(), |x| format!(", first: {x:?}"))
}

// ---------------------------------------------------------------------------
// Shared instance corpus for criteria 3 and 4.

const KERNEL_SHAPES: &[(usize, &[usize], usize)] = &[
    (0, &[2], 1),
    (0, &[3], 1),
    (0, &[4], 1),
    (1, &[1, 1], 2),
    (1, &[1, 1], 3),
    (1, &[1, 1], 4),
    (1, &[1, 2], 2),
    (1, &[2, 1], 2),
    (1, &[2, 1], 3),
    (1, &[1, 3], 2),
    (1, &[2, 2], 2),
    (2, &[1, 1, 1], 2),
    (2, &[1, 1, 2], 2),
];

/// Programs with a nontrivial kernel and `(t <= 2, d <= 4, Δ = 1, n <= 4)`.
fn kernel_instances(want: usize) -> Vec<Program> {
    let mut out = Vec::new();
    let mut seed = 1000;
    while out.len() < want {
        for &(t, s, branching) in KERNEL_SHAPES {
            let p = generate(&GenParams::new(t, s.to_vec(), branching, 1, 1, seed)).expect("generation");
            seed += 1;
            let lattice = kernel_lattice_basis(p.matrix.entries(), p.num_cols()).unwrap();
            if !lattice.is_empty() && p.matrix.delta() == 1 {
                out.push(p);
            }
        }
    }
    out.truncate(want);
    out
}

/// Distinct nonzero kernel vectors: small random combinations of a lattice
/// basis.
fn kernel_vectors(p: &Program, rng: &mut SplitMix64, want: usize) -> Vec<IntVector> {
    let lattice = kernel_lattice_basis(p.matrix.entries(), p.num_cols()).unwrap();
    let mut out = BTreeSet::new();
    for _ in 0..400 {
        if out.len() == want {
            break;
        }
        let mut y = vec![0i64; p.num_cols()];
        for v in &lattice {
            let k = rng.uniform(-3, 3);
            for (yj, vj) in y.iter_mut().zip(v) {
                *yj += k * vj;
            }
        }
        if y.iter().any(|&v| v != 0) {
            out.insert(y);
        }
    }
    out.into_iter().collect()
}

fn path_sum(m: &Multiset, dim: usize) -> Vec<BigRational> {
    let mut s = vec![BigRational::zero(); dim];
    for (v, k) in m.iter() {
        for (sj, &vj) in s.iter_mut().zip(v) {
            *sj += k * q(vj);
        }
    }
    s
}

fn criterion_3(rep: &mut Report, instances: &[Program]) {
    let started = Instant::now();
    let mut rng = SplitMix64::new(3);
    let (mut vectors, mut failures, mut thin) = (0, Vec::new(), 0);
    for p in instances {
        let ys = kernel_vectors(p, &mut rng, 5);
        if ys.len() < 5 {
            thin += 1;
        }
        let (tree, _) = p.matrix.tree().unwrap();
        for y in ys {
            vectors += 1;
            let sets = valid_witness_from_kernel(p, &y, Budget::default()).expect("witness");
            let b: Vec<Rational> = y.iter().map(|&v| q(v)).collect();
            let spec = ValiditySpec::new(tree.clone(), b, q(1)).unwrap();
            let mut ok = rho_valid(&spec, &sets).unwrap();
            for (i, s) in sets.iter().enumerate() {
                let path = tree.path_columns(i).unwrap();
                let target: Vec<BigRational> = path.iter().map(|&c| q(y[c])).collect();
                ok &= path_sum(s, path.len()) == target && s.is_integral();
                let a_i = p.matrix.leaf_matrix(&tree, i).unwrap();
                for (g, _) in s.iter() {
                    ok &= a_i.iter().all(|row| row.iter().zip(g).map(|(a, b)| a * b).sum::<i64>() == 0);
                }
            }
            if !ok {
                failures.push(y);
            }
        }
    }
    rep.line(
        3,
        "kernel witnesses are 1-valid and reassemble every leaf projection",
        failures.is_empty() && instances.len() >= 200 && thin == 0,
        format!(
            "{} instances, {vectors} kernel vectors, {} failures, {thin} instances with < 5 vectors{}",
            instances.len(),
            failures.len(),
            first(&failures)
        ),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: small valid submultisets against exhaustive enumeration.

struct Exhaustive {
    exists: bool,
    best_max: u64,
    best_total: u64,
}

fn sub_vectors(counts: &[(IntVector, u64)]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for (_, c) in counts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=*c).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Tries every combination of submultisets with `|S_i| <= max_card` and
/// records whether one is not all empty and has matching sums on every
/// column two leaves share.
fn exhaustive(tree: &MultistageTree, counts: &[Vec<(IntVector, u64)>], max_card: u64) -> Exhaustive {
    let d = tree.dims().width();
    let options: Vec<Vec<(u64, Vec<i64>)>> = counts
        .iter()
        .map(|c| {
            sub_vectors(c)
                .into_iter()
                .filter_map(|mult| {
                    let card: u64 = mult.iter().sum();
                    (card <= max_card).then(|| {
                        let mut s = vec![0i64; d];
                        for ((v, _), k) in c.iter().zip(&mult) {
                            for (sj, vj) in s.iter_mut().zip(v) {
                                *sj += *k as i64 * vj;
                            }
                        }
                        (card, s)
                    })
                })
                .collect()
        })
        .collect();
    let paths: Vec<Vec<usize>> = (0..counts.len()).map(|i| tree.path_columns(i).unwrap().to_vec()).collect();
    let mut res = Exhaustive {
        exists: false,
        best_max: u64::MAX,
        best_total: u64::MAX,
    };
    let mut pick = vec![0usize; counts.len()];
    loop {
        let mut col: BTreeMap<usize, i64> = BTreeMap::new();
        let mut consistent = true;
        let (mut mx, mut tot) = (0u64, 0u64);
        for (i, &k) in pick.iter().enumerate() {
            let (card, sum) = &options[i][k];
            mx = mx.max(*card);
            tot += card;
            for (pos, &c) in paths[i].iter().enumerate() {
                if *col.entry(c).or_insert(sum[pos]) != sum[pos] {
                    consistent = false;
                }
            }
        }
        if consistent && tot > 0 {
            res.exists = true;
            if (mx, tot) < (res.best_max, res.best_total) {
                res.best_max = mx;
                res.best_total = tot;
            }
        }
        let mut i = pick.len();
        loop {
            if i == 0 {
                return res;
            }
            i -= 1;
            if pick[i] + 1 < options[i].len() {
                pick[i] += 1;
                break;
            }
            pick[i] = 0;
        }
    }
}

fn criterion_4(rep: &mut Report, instances: &[Program]) {
    let started = Instant::now();
    let mut rng = SplitMix64::new(4);
    let (mut valid_families, mut mutated, mut runs, mut found) = (0, 0, 0, 0);
    let mut disagreements = Vec::new();
    for p in instances {
        let (tree, _) = p.matrix.tree().unwrap();
        for y in kernel_vectors(p, &mut rng, 5) {
            let sets = valid_witness_from_kernel(p, &y, Budget::default()).unwrap();
            let total: u64 = sets.iter().map(|s| s.counts().unwrap().iter().map(|c| c.1).sum::<u64>()).sum();
            if total > 12 {
                continue;
            }
            let mut families = vec![sets.clone()];
            valid_families += 1;
            // drop one element somewhere, which may destroy every witness
            let nonempty: Vec<usize> = (0..sets.len()).filter(|&i| !sets[i].is_empty()).collect();
            if !nonempty.is_empty() {
                let i = nonempty[rng.uniform(0, nonempty.len() as i64 - 1) as usize];
                let mut m = sets.clone();
                let v = m[i].iter().next().unwrap().0.clone();
                m[i].add(v, &-q(1)).unwrap();
                families.push(m);
                mutated += 1;
            }
            for fam in families {
                let counts: Vec<Vec<(IntVector, u64)>> = fam.iter().map(|s| s.counts().unwrap()).collect();
                let delta = counts.iter().flatten().map(|(v, _)| v.iter().map(|x| x.abs()).max().unwrap_or(0)).max().unwrap_or(0);
                let largest = counts.iter().map(|c| c.iter().map(|x| x.1).sum::<u64>()).max().unwrap_or(0);
                for max_card in [1, 2, 3, largest.max(1)] {
                    runs += 1;
                    let expect = exhaustive(&tree, &counts, max_card);
                    let got = find_small_valid_submultisets(&tree, &fam, delta, max_card, Budget::default()).unwrap();
                    let ok = match &got {
                        None => !expect.exists,
                        Some(w) => {
                            found += 1;
                            let cards: Vec<u64> = w.sets.iter().map(|s| s.counts().unwrap().iter().map(|c| c.1).sum()).collect();
                            let subsets = w.sets.iter().zip(&fam).all(|(s, t)| s.is_submultiset_of(t));
                            let b: Vec<Rational> = w.bhat.iter().map(|&v| q(v)).collect();
                            let valid = rho_valid(&ValiditySpec::new(tree.clone(), b, q(1)).unwrap(), &w.sets).unwrap();
                            expect.exists
                                && subsets
                                && valid
                                && cards.iter().any(|&c| c > 0)
                                && cards.iter().max() == Some(&expect.best_max)
                                && cards.iter().sum::<u64>() == expect.best_total
                        }
                    };
                    if !ok {
                        disagreements.push((y.clone(), max_card));
                    }
                }
            }
        }
    }
    rep.line(
        4,
        "submultiset oracle is sound and agrees with exhaustive enumeration",
        disagreements.is_empty() && valid_families >= 100,
        format!(
            "{valid_families} valid + {mutated} thinned families, {runs} runs, {found} witnesses, {} disagreements{}",
            disagreements.len(),
            first(&disagreements)
        ),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6: common cone elements.

struct Fixture {
    lambdas: Vec<Multiset>,
    b: Vec<BigRational>,
    rho: BigRational,
}

/// Multisets on `{-1,0,1}^d` whose sums all equal `b`, or sit a third away
/// from it in one coordinate.
fn fixture(rng: &mut SplitMix64, d: usize) -> Fixture {
    let m = rng.uniform(1, 3) as usize;
    let mut b: Vec<BigRational> = (0..d).map(|_| q(rng.uniform(-5, 5))).collect();
    let lambdas = (0..m)
        .map(|_| {
            let mut lam = Multiset::new();
            for _ in 0..rng.uniform(1, 3) {
                let p: IntVector = (0..d).map(|_| rng.uniform(-1, 1)).collect();
                if p.iter().all(|&v| v == 0) {
                    continue;
                }
                let k = BigRational::new(BigInt::from(rng.uniform(1, 4)), BigInt::from(rng.uniform(1, 3)));
                lam.add(p, &k).unwrap();
            }
            let s = path_sum(&lam, d);
            for j in 0..d {
                let r = &b[j] - &s[j];
                if !r.is_zero() {
                    let mut e = vec![0i64; d];
                    e[j] = if r.is_positive() { 1 } else { -1 };
                    lam.add(e, &r.abs()).unwrap();
                }
            }
            lam
        })
        .collect();
    if rng.uniform(0, 1) == 1 {
        let j = rng.uniform(0, d as i64 - 1) as usize;
        b[j] += BigRational::new(BigInt::one(), BigInt::from(3));
    }
    Fixture { lambdas, b, rho: q(1) }
}

/// `B^{-1} p` for a basis given by at most two columns, by Cramer's rule.
fn coords(basis: &[IntVector], p: &[i64]) -> Vec<BigRational> {
    match basis.len() {
        1 => vec![BigRational::new(BigInt::from(p[0]), BigInt::from(basis[0][0]))],
        2 => {
            let (a, b, c, d) = (basis[0][0], basis[1][0], basis[0][1], basis[1][1]);
            let det = a * d - b * c;
            vec![
                BigRational::new(BigInt::from(p[0] * d - b * p[1]), BigInt::from(det)),
                BigRational::new(BigInt::from(a * p[1] - c * p[0]), BigInt::from(det)),
            ]
        }
        _ => unreachable!("fixtures have d <= 2"),
    }
}

fn criteria_5_6(rep: &mut Report) {
    let started = Instant::now();
    let mut rng = SplitMix64::new(5);
    let (mut attempts, mut successes, mut bad5) = (0, 0, Vec::new());
    let mut bad6 = Vec::new();
    let mut extractions = 0;

    // the one-dimensional worked example
    let five = Multiset::from_counts([(vec![1], q(5))]).unwrap();
    let ex = single_element(&[five.clone(), five], &[q(5)], &q(1), 1, Budget::default()).unwrap();
    let example_ok = ex.as_ref().is_some_and(|e| e.bhat == vec![1]);

    while successes < 60 && attempts < 2000 {
        attempts += 1;
        let d = if attempts % 3 == 0 { 1 } else { 2 };
        let fx = fixture(&mut rng, d);
        let Some(res) = single_element(&fx.lambdas, &fx.b, &fx.rho, 1, Budget::default()).unwrap() else {
            continue;
        };
        successes += 1;
        let cap = (d as i64).pow((d * d) as u32);
        let mut ok = res.bhat.iter().any(|&v| v != 0) && res.bhat.iter().all(|v| v.abs() <= cap);
        ok &= res.choices.len() == fx.lambdas.len();
        for (lam, ch) in fx.lambdas.iter().zip(&res.choices) {
            ok &= ch.basis.len() == d && ch.basis.iter().all(|c| c.iter().all(|v| v.abs() <= 1));
            let mut bx = vec![BigRational::zero(); d];
            for (col, x) in ch.basis.iter().zip(&ch.coefficients) {
                ok &= !x.is_negative() && *x <= lam.multiplicity(col);
                for j in 0..d {
                    bx[j] += x * q(col[j]);
                }
            }
            ok &= bx == res.bhat.iter().map(|&v| q(v)).collect::<Vec<_>>();
            ok &= coords(&ch.basis, &res.bhat) == ch.coefficients;
        }
        if !ok {
            bad5.push(fx.b.iter().map(ToString::to_string).collect::<Vec<_>>());
        }

        let ap = almost_partition(&fx.lambdas, &fx.b, &fx.rho, 1, &q(0), Budget::default()).unwrap();
        extractions += ap.steps.len();
        let m = fx.lambdas.len();
        // (i) equal aggregates
        let mut aggregates: Vec<BTreeMap<IntVector, BigRational>> = vec![BTreeMap::new(); m];
        // (ii) used coefficient mass per input point
        let mut used: Vec<BTreeMap<IntVector, BigRational>> = vec![BTreeMap::new(); m];
        let mut ok6 = true;
        for ((basis, i), fam) in &ap.family {
            for (p, k) in fam.iter() {
                *aggregates[*i].entry(p.clone()).or_insert_with(BigRational::zero) += k;
                let x = coords(basis, p);
                // (iii)
                ok6 &= x.iter().all(|v| !v.is_negative());
                for (col, xv) in basis.iter().zip(&x) {
                    *used[*i].entry(col.clone()).or_insert_with(BigRational::zero) += k * xv;
                }
            }
        }
        ok6 &= aggregates.windows(2).all(|w| w[0] == w[1]);
        for (i, lam) in fx.lambdas.iter().enumerate() {
            ok6 &= used[i].iter().all(|(p, k)| *k <= lam.multiplicity(p));
        }
        let mut total = ap.residual.clone();
        for (p, k) in &aggregates[0] {
            for j in 0..d {
                total[j] += k * q(p[j]);
            }
        }
        ok6 &= total == fx.b;
        if !ok6 {
            bad6.push(fx.b.iter().map(ToString::to_string).collect::<Vec<_>>());
        }
    }
    rep.line(
        5,
        "single_element outputs satisfy Bx = bhat, 0 <= x <= lambda, norm cap, bhat != 0",
        bad5.is_empty() && successes >= 50 && example_ok,
        format!(
            "{successes} successes in {attempts} fixtures, {} violations, d=1 example bhat={:?}{}",
            bad5.len(),
            ex.map(|e| e.bhat),
            first(&bad5)
        ),
        started,
    );
    rep.line(
        6,
        "almost_partition satisfies (i)-(iii) and extracted + residual = b exactly",
        bad6.is_empty() && successes >= 50,
        format!("{successes} fixtures, {extractions} extractions, {} violations{}", bad6.len(), first(&bad6)),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criteria 7 and 8: solver and proximity.

fn solver_corpus() -> Vec<(String, Program)> {
    let mut out: Vec<(String, Program)> = sweep_corpus(6, 1, 3)
        .into_iter()
        .map(|e| (e.id, generate(&e.params).unwrap()))
        .collect();
    // unplanted right-hand sides, mostly infeasible
    for e in sweep_corpus(3, 500, 3) {
        let mut params = e.params.clone();
        params.feasible_box = None;
        params.b_range = (-3, 3);
        out.push((format!("{}-free", e.id), generate(&params).unwrap()));
    }
    out
}

fn criteria_7_8(rep: &mut Report) {
    let started = Instant::now();
    let corpus = solver_corpus();
    let (mut optimal, mut infeasible, mut mismatches) = (0, 0, Vec::new());
    let mut prox_checked = 0;
    let mut prox_bad = Vec::new();
    let mut worst = 0f64;
    for (id, p) in &corpus {
        assert!(p.num_cols() <= 7 && p.matrix.delta() <= 2);
        let bx = BoxBounds::uniform(p.num_cols(), 0, 3);
        let a = solve_augmentation(p, &bx, Budget::default()).unwrap();
        let b = brute_force_ilp(p, &bx, Budget::default()).unwrap();
        match b.status {
            SolveStatus::Optimal => optimal += 1,
            _ => infeasible += 1,
        }
        if a.status != b.status || a.objective != b.objective {
            mismatches.push(id.clone());
        }
        let r = proximity_experiment(p, &bx, Budget::default()).unwrap();
        if let Some(dist) = &r.dist_inf {
            prox_checked += 1;
            let cols = p.num_cols() as i64;
            let bound: BigInt = Pow::pow(BigInt::from(cols * p.matrix.delta()), (cols + 1) as u32);
            if *dist > BigRational::from_integer(bound.clone()) {
                prox_bad.push(id.clone());
            }
            worst = worst.max(dist.to_f64().unwrap() / bound.to_f64().unwrap());
        }
    }
    rep.line(
        7,
        "augmentation and brute force agree on status and objective",
        mismatches.is_empty() && corpus.len() >= 100,
        format!(
            "{} instances ({optimal} optimal, {infeasible} infeasible), {} mismatches{}",
            corpus.len(),
            mismatches.len(),
            first(&mismatches)
        ),
        started,
    );

    let m = validate_structure(vec![vec![2, 1]], 2, vec![Block::new([0], [0, 1])]).unwrap();
    let fx = Program::nonnegative(m, vec![3], vec![-1, 0]).unwrap();
    let r = proximity_experiment(&fx, &BoxBounds::uniform(2, 0, 3), Budget::default()).unwrap();
    let fixture_ok = r.dist_inf == Some(q(1)) && r.column_bound == BigInt::from(64);
    rep.line(
        8,
        "dist_inf <= (N*Delta)^(N+1) on the sweep; [[2,1]] fixture has dist_inf = 1",
        prox_bad.is_empty() && fixture_ok && prox_checked > 0,
        format!(
            "{prox_checked} reports, {} violations, max dist/bound = {worst:.2e}, fixture dist = {:?}",
            prox_bad.len(),
            r.dist_inf.map(|d| d.to_string())
        ),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: ladder constants.

fn criterion_9(rep: &mut Report) {
    let started = Instant::now();
    let bt = bound_constants(2, 1, 1, &q(1), 1, Budget::default()).unwrap();
    let lcm16 = (1..=16u64).fold(BigInt::one(), |acc, k| acc.lcm(&BigInt::from(k)));
    let two64 = (0..64).fold(BigInt::one(), |acc, _| acc * 2);
    let mut failed: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            failed.push(what);
        }
    };
    check(bt.delta_ladder == vec![BigInt::from(2), BigInt::from(256)], "Delta ladder".into());
    check(lcm16 == BigInt::from(720720) && bt.nu == lcm16, "nu".into());
    check(bt.alpha[1] == lcm16, "alpha_1".into());
    check(bt.beta[1] == two64, "beta_1".into());

    let cli = Command::new(env!("CARGO_BIN_EXE_msip"))
        .args(["bounds", "--d", "2", "--delta", "1", "--t", "1"])
        .output()
        .expect("run msip");
    let text = String::from_utf8_lossy(&cli.stdout);
    check(cli.status.success(), "msip bounds exit status".into());
    for needle in [
        "\"Delta_0\": \"2\"",
        "\"Delta_1\": \"256\"",
        "\"nu\": \"720720\"",
        "\"alpha_1\": \"720720\"",
        "\"beta_1\": \"18446744073709551616\"",
    ] {
        check(text.contains(needle), format!("msip bounds output lacks {needle}"));
    }

    let mut checked = 0u64;
    for (d, delta, t) in [(2u32, 1u64, 1u32), (1, 1, 2), (1, 2, 3), (3, 1, 1), (2, 2, 1), (1, 3, 1), (2, 1, 2)] {
        let bt = bound_constants(d, delta, t, &q(1), 1, Budget::default()).unwrap();
        let dd = BigInt::from(d);
        let range: BigInt = Pow::pow(&dd * &bt.delta_ladder[t as usize - 1], d);
        check(bt.nu_range == range, format!("nu range for {:?}", (d, delta, t)));
        let n = range.to_u64().unwrap();
        let divides = (1..=n).all(|k| bt.nu.is_multiple_of(&BigInt::from(k)));
        check(divides, format!("nu divisibility for {:?}", (d, delta, t)));
        checked += n;
        for i in 0..=t {
            let mut v = BigInt::one();
            for _ in 0..(d as u64).pow(3 * i) {
                v *= BigInt::from(d as u64 * delta);
            }
            check(bt.delta_ladder[i as usize] == v, format!("Delta_{i} for {:?}", (d, delta, t)));
        }
    }
    let degenerate = bound_constants(3, 2, 0, &q(1), 1, Budget::default()).unwrap();
    check(degenerate.delta_ladder == vec![BigInt::from(6)] && degenerate.nu.is_one(), "t = 0 ladder".into());
    let ok = failed.is_empty();
    rep.line(
        9,
        "ladder constants for (2,1,1) and nu divisibility",
        ok,
        format!(
            "Delta_1={} nu={} beta_1={}, {checked} divisibility checks{}",
            bt.delta_ladder[1],
            bt.nu,
            bt.beta[1],
            first(&failed)
        ),
        started,
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: determinism of the binary.

fn criterion_10(rep: &mut Report) {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_msip"))
            .args(["gen", "--t", "2", "--s", "1,1,2", "--branching", "2", "--r", "2", "--delta", "2", "--seed", "77", "-o"])
            .arg(&path)
            .status()
            .unwrap();
        (status.success(), std::fs::read(&path).unwrap_or_default())
    };
    let (ok_a, a) = gen("a.json");
    let (ok_b, b) = gen("b.json");
    let sweep = || {
        Command::new(env!("CARGO_BIN_EXE_msip"))
            .args(["sweep", "--per-shape", "2"])
            .output()
            .unwrap()
    };
    let (s1, s2) = (sweep(), sweep());
    let rows = String::from_utf8_lossy(&s1.stdout).lines().count().saturating_sub(1);
    let ok = ok_a && ok_b && !a.is_empty() && a == b && s1.status.success() && s1.stdout == s2.stdout && rows > 0;
    rep.line(
        10,
        "gen and sweep are byte-for-byte deterministic",
        ok,
        format!("gen: {} bytes identical = {}, sweep: {rows} rows identical = {}", a.len(), a == b, s1.stdout == s2.stdout),
        started,
    );
}

fn main() {
    let mut rep = Report { failures: 0 };
    criteria_1_2(&mut rep);
    let instances = kernel_instances(200);
    criterion_3(&mut rep, &instances);
    criterion_4(&mut rep, &instances);
    criteria_5_6(&mut rep);
    criteria_7_8(&mut rep);
    criterion_9(&mut rep);
    criterion_10(&mut rep);
    if rep.failures > 0 {
        println!("{} acceptance criteria failed", rep.failures);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
