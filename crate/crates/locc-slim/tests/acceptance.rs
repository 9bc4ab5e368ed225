//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p locc-slim --test acceptance` (add `--release` for
//! representative timings).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use locc_core::caratheodory::{barycentre, peel_decompose, reduce_support, WeightedPointSet};
use locc_core::compress::{compress_protocol_m1, matrix_sum_split};
use locc_core::generate::{
    ginibre, random_distribution, random_ensemble, random_tree, standard_normal, uniform_int, RandomTreeConfig,
};
use locc_core::numerics::{sqrt_psd, ComplexMatrix};
use locc_core::quantum::{choi_of, Ensemble, Instrument, MultipartiteSpace};
use locc_core::slim::{edge_scalars, reduce_shared_randomness, shared_randomness_bound, slim_decompose_tree};
use locc_core::tree::{evaluate_success, extract_instrument, validate_tree, width_report, ProtocolTree};
use locc_core::Complex64;
use locc_slim::demo;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Verdict = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn instance(seed: u64, dims: Vec<usize>, config: RandomTreeConfig, members: usize) -> (ProtocolTree, Ensemble) {
    let mut r = rng(seed);
    let space = MultipartiteSpace::new(dims).unwrap();
    let ens = random_ensemble(&mut r, &space, members).unwrap();
    let tree = random_tree(&mut r, &space, &RandomTreeConfig { labels: members, ..config });
    (tree, ens)
}

fn within_time(detail: String, elapsed: Duration, limit: Option<u64>) -> Verdict {
    match limit {
        Some(secs) if elapsed > Duration::from_secs(secs) => {
            Err(format!("{detail}; took {:.2} s, limit {secs} s", elapsed.as_secs_f64()))
        }
        _ => Ok(detail),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn zero_column(m: &ComplexMatrix, col: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |r, c| if c == col { Complex64::default() } else { m[(r, c)] })
}

fn split_identities() -> Verdict {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut deficient = 0;
    for i in 0..500 {
        let n = uniform_int(&mut r, 1, 6);
        let (mut rx, mut ry) = (uniform_int(&mut r, 1, 6), uniform_int(&mut r, 1, 6));
        while rx + ry < n {
            rx = uniform_int(&mut r, 1, 6);
            ry = uniform_int(&mut r, 1, 6);
        }
        let mut x = ginibre(&mut r, rx, n);
        let mut y = ginibre(&mut r, ry, n);
        if i % 2 == 0 {
            let zeros = uniform_int(&mut r, 1, n);
            for _ in 0..zeros {
                let col = uniform_int(&mut r, 0, n - 1);
                x = zero_column(&x, col);
                y = zero_column(&y, col);
            }
            deficient += 1;
        }
        let (cm, dm) = matrix_sum_split(&x, &y).map_err(|e| format!("pair {i}: {e}"))?;
        let root = sqrt_psd(&(&x.gram() + &y.gram())).map_err(|e| e.to_string())?;
        worst = worst
            .max(cm.matmul(&root).distance(&x))
            .max(dm.matmul(&root).distance(&y))
            .max((&cm.gram() + &dm.gram()).distance(&ComplexMatrix::identity(n)));
    }
    let detail = format!("500 pairs ({deficient} rank-deficient), max residual {worst:.1e}");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn caratheodory_suite() -> Verdict {
    let mut r = rng(2);
    let (mut bary, mut recomb): (f64, f64) = (0.0, 0.0);
    for i in 0..500 {
        let dim = uniform_int(&mut r, 1, 10);
        let n = uniform_int(&mut r, 1, 30);
        let points = (0..n)
            .map(|_| (0..dim).map(|_| standard_normal(&mut r)).collect())
            .collect();
        let set = WeightedPointSet::new(dim, points, random_distribution(&mut r, n)).map_err(|e| e.to_string())?;
        let reduced = reduce_support(&set).map_err(|e| format!("set {i}: {e}"))?;
        let support = reduced.support();
        if support.len() > dim + 1 || support.iter().any(|&j| reduced.weights()[j] <= 0.0) {
            return Err(format!("set {i}: support {} exceeds dim + 1 = {}", support.len(), dim + 1));
        }
        bary = bary.max(max_diff(&barycentre(&set), &barycentre(&reduced)));
        let parts = peel_decompose(&set).map_err(|e| format!("set {i}: {e}"))?;
        let mut weights = vec![0.0; n];
        for (c, sub) in &parts {
            for (w, s) in weights.iter_mut().zip(sub.weights()) {
                *w += c * s;
            }
        }
        recomb = recomb.max(max_diff(&weights, set.weights()));
    }
    let detail = format!("500 sets, barycentre error {bary:.1e}, peel recombination error {recomb:.1e}");
    if bary <= 1e-9 && recomb <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[derive(Default)]
struct Closure {
    trees: usize,
    diagnostics: usize,
}

struct CompressRun {
    gap: f64,
    widths_ok: bool,
    leaves_2x2: Option<usize>,
    diagnostics: usize,
}

fn compress_end_to_end(closure: &mut Closure) -> Verdict {
    let config = RandomTreeConfig {
        rounds: 2,
        root_outcomes: (10, 16),
        outcomes: (2, 12),
        labels: 0,
        first_party: Some(0),
    };
    let results: Vec<Result<CompressRun, String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let dims = if seed % 2 == 0 { vec![2, 2] } else { vec![2, 3] };
            let members = 3 + (seed % 3) as usize;
            let (tree, ens) = instance(300 + seed, dims.clone(), config.clone(), members);
            let before = evaluate_success(&tree, &ens, false).map_err(|e| e.to_string())?.success;
            let out = compress_protocol_m1(&tree, &ens).map_err(|e| format!("seed {seed}: {e}"))?;
            let after = evaluate_success(&out, &ens, false).map_err(|e| e.to_string())?.success;
            Ok(CompressRun {
                gap: (before - after).abs(),
                widths_ok: width_report(&out).within(&out, false, |d| 2 * d * d),
                leaves_2x2: (dims == [2, 2]).then(|| out.leaf_count()),
                diagnostics: validate_tree(&out).len(),
            })
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut max_leaves = 0;
    for (i, r) in results.into_iter().enumerate() {
        let run = r?;
        if !run.widths_ok {
            return Err(format!("instance {i}: an outdegree exceeds 2·d²"));
        }
        worst = worst.max(run.gap);
        max_leaves = max_leaves.max(run.leaves_2x2.unwrap_or(0));
        closure.trees += 1;
        closure.diagnostics += run.diagnostics;
    }
    let detail = format!("100 protocols, max success change {worst:.1e}, max leaves on 2×2 {max_leaves}");
    if worst <= 1e-7 && max_leaves <= 64 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const SLIM_CAP: u128 = 10_000;

struct SlimRun {
    components: usize,
    bad: Option<String>,
    edge_error: f64,
    diagnostics: usize,
    best_gap: f64,
}

fn slim_instance(seed: u64) -> Result<Option<SlimRun>, String> {
    let config = RandomTreeConfig {
        rounds: 2,
        root_outcomes: (5, 9),
        outcomes: (3, 7),
        labels: 0,
        first_party: None,
    };
    let dims = if seed.is_multiple_of(2) { vec![2, 2] } else { vec![2, 3] };
    let (tree, ens) = instance(500 + seed, dims, config, 3);
    let dec = slim_decompose_tree(&tree).map_err(|e| e.to_string())?;
    if dec.count() > SLIM_CAP {
        return Ok(None);
    }
    let source = dec.source();
    let source_success = evaluate_success(source, &ens, false).map_err(|e| e.to_string())?.success;
    let edges = edge_scalars(source, source, 0.0).ok_or("source is not comparable to itself")?.len();
    let mut sums = vec![0.0; edges];
    let mut run = SlimRun {
        components: 0,
        bad: None,
        edge_error: 0.0,
        diagnostics: 0,
        best_gap: f64::INFINITY,
    };
    let mut best = f64::NEG_INFINITY;
    for c in dec.iter() {
        run.components += 1;
        run.diagnostics += validate_tree(&c.tree).len();
        let Some(scalars) = edge_scalars(source, &c.tree, 1e-9) else {
            run.bad.get_or_insert(format!("component {:?}: structure or proportionality", c.choices));
            continue;
        };
        for (s, x) in sums.iter_mut().zip(&scalars) {
            *s += c.lambda * x;
        }
        if !width_report(&c.tree).within(&c.tree, true, |d| d * d) {
            run.bad.get_or_insert(format!("component {:?}: nonzero outdegree above d²", c.choices));
        }
        let t = evaluate_success(&c.tree, &ens, false).map_err(|e| e.to_string())?.success;
        best = best.max(t);
    }
    run.edge_error = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    run.best_gap = source_success - best;
    Ok(Some(run))
}

fn slim_conditions(closure: &mut Closure) -> (Verdict, Verdict) {
    let runs: Vec<_> = (0..100u64).into_par_iter().map(slim_instance).collect();
    let (mut checked, mut skipped, mut components) = (0, 0, 0);
    let (mut edge_error, mut gap): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for (i, r) in runs.into_iter().enumerate() {
        let run = match r {
            Ok(Some(run)) => run,
            Ok(None) => {
                skipped += 1;
                continue;
            }
            Err(e) => {
                let msg = format!("instance {i}: {e}");
                return (Err(msg.clone()), Err(msg));
            }
        };
        if let Some(bad) = run.bad {
            let msg = format!("instance {i}: {bad}");
            return (Err(msg), Err("not evaluated".into()));
        }
        checked += 1;
        components += run.components;
        edge_error = edge_error.max(run.edge_error);
        gap = gap.max(run.best_gap);
        closure.trees += run.components;
        closure.diagnostics += run.diagnostics;
    }
    let detail = format!(
        "{checked} protocols checked, {skipped} skipped above cap, {components} components, Σλ·scalar error {edge_error:.1e}"
    );
    let conditions = if checked > 0 && edge_error <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    };
    let detail = format!("{checked} exhaustive runs, largest shortfall of the best component {gap:.1e}");
    let optimality = if checked > 0 && gap <= 1e-7 {
        Ok(detail)
    } else {
        Err(detail)
    };
    (conditions, optimality)
}

fn shared_randomness() -> Verdict {
    let bound = shared_randomness_bound(2, &[2, 2]);
    if bound != 29 {
        return Err(format!("bound {bound}, expected 29"));
    }
    let config = RandomTreeConfig {
        rounds: 2,
        root_outcomes: (6, 6),
        outcomes: (6, 6),
        labels: 2,
        first_party: Some(0),
    };
    let space = MultipartiteSpace::new(vec![2]).unwrap();
    let mut seed = 700;
    let mut instances = 0;
    let (mut most, mut worst): (usize, f64) = (0, 0.0);
    while instances < 20 {
        seed += 1;
        let mut r = rng(seed);
        let tree = random_tree(&mut r, &space, &config);
        let whole = extract_instrument(&tree).map_err(|e| e.to_string())?;
        if whole.labels() != [0, 1] {
            continue;
        }
        let dec = slim_decompose_tree(&tree).map_err(|e| e.to_string())?;
        let sizes: Vec<usize> = dec.vertex_components().map(|(_, _, c)| c.len()).collect();
        let n = uniform_int(&mut r, 2 * bound, 2 * bound + 20);
        let mut chosen: Vec<Vec<usize>> = Vec::new();
        let mut attempts = 0;
        while chosen.len() < n && attempts < 100 * n {
            attempts += 1;
            let choices: Vec<usize> = sizes.iter().map(|&s| uniform_int(&mut r, 0, s - 1)).collect();
            if !chosen.contains(&choices) {
                chosen.push(choices);
            }
        }
        if chosen.len() < 2 * bound {
            continue;
        }
        let weights = random_distribution(&mut r, chosen.len());
        let mixture: Vec<(f64, Instrument)> = chosen
            .iter()
            .zip(weights)
            .map(|(choices, w)| {
                let c = dec.component(choices).map_err(|e| e.to_string())?;
                Ok((w, extract_instrument(&c.tree).map_err(|e| e.to_string())?))
            })
            .collect::<Result<_, String>>()?;
        let reduced = reduce_shared_randomness(&mixture, 2, &[2, 2]).map_err(|e| format!("seed {seed}: {e}"))?;
        most = most.max(reduced.retained.len());
        for label in [0, 1] {
            let choi = |pairs: &mut dyn Iterator<Item = (f64, &Instrument)>| {
                pairs.fold(ComplexMatrix::zeros(4, 4), |acc, (w, inst)| {
                    &acc + &choi_of(inst.branch(label).unwrap()).matrix.scale(w)
                })
            };
            let before = choi(&mut mixture.iter().map(|(w, i)| (*w, i)));
            let after = choi(&mut reduced.retained.iter().map(|&(i, w)| (w, &mixture[i].1)));
            worst = worst.max(before.distance(&after));
        }
        instances += 1;
    }
    let detail = format!("20 mixtures of ≥ 58 components, at most {most} retained, Choi error {worst:.1e}");
    if most <= bound && worst <= 1e-7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Dense complex matrices as row-major `Vec`s, kept apart from the library's type.
mod oracle {
    use locc_core::quantum::Ensemble;
    use locc_core::tree::{Node, ProtocolTree};
    use locc_core::Complex64;

    #[derive(Clone)]
    struct Dense {
        rows: usize,
        cols: usize,
        a: Vec<Complex64>,
    }

    impl Dense {
        fn identity(n: usize) -> Self {
            let mut a = vec![Complex64::default(); n * n];
            for i in 0..n {
                a[i * n + i] = Complex64::new(1.0, 0.0);
            }
            Dense { rows: n, cols: n, a }
        }

        fn mul(&self, o: &Dense) -> Dense {
            let mut a = vec![Complex64::default(); self.rows * o.cols];
            for i in 0..self.rows {
                for k in 0..self.cols {
                    let x = self.a[i * self.cols + k];
                    for j in 0..o.cols {
                        a[i * o.cols + j] += x * o.a[k * o.cols + j];
                    }
                }
            }
            Dense { rows: self.rows, cols: o.cols, a }
        }
    }

    /// K acting on `party` of a product space, by mixed-radix index arithmetic.
    fn embed(k: &locc_core::numerics::ComplexMatrix, party: usize, dims: &[usize]) -> Dense {
        let mut out_dims = dims.to_vec();
        out_dims[party] = k.rows();
        let (rows, cols) = (out_dims.iter().product::<usize>(), dims.iter().product::<usize>());
        let digits = |mut idx: usize, ds: &[usize]| {
            let mut v = vec![0; ds.len()];
            for p in (0..ds.len()).rev() {
                v[p] = idx % ds[p];
                idx /= ds[p];
            }
            v
        };
        let mut a = vec![Complex64::default(); rows * cols];
        for i in 0..rows {
            let di = digits(i, &out_dims);
            for j in 0..cols {
                let dj = digits(j, dims);
                if (0..dims.len()).all(|p| p == party || di[p] == dj[p]) {
                    a[i * cols + j] = k[(di[party], dj[party])];
                }
            }
        }
        Dense { rows, cols, a }
    }

    /// Σ over leaves and Kraus paths K of p_f tr(K ρ_f K†).
    pub fn success(tree: &ProtocolTree, ens: &Ensemble) -> f64 {
        fn go(node: &Node, dims: Vec<usize>, paths: Vec<Dense>, ens: &Ensemble, acc: &mut f64) {
            match node {
                Node::Leaf { label } => {
                    let m = &ens.members()[*label];
                    let n = m.state.rows();
                    for k in &paths {
                        // tr(K ρ K†) = Σ_{i,a,b} K_ia ρ_ab conj(K_ib)
                        for i in 0..k.rows {
                            for a in 0..n {
                                for b in 0..n {
                                    *acc += m.weight * (k.a[i * n + a] * m.state[(a, b)] * k.a[i * n + b].conj()).re;
                                }
                            }
                        }
                    }
                }
                Node::Measure { party, edges } => {
                    for e in edges {
                        let mut next_dims = dims.clone();
                        next_dims[*party] = e.map.out_dim();
                        let next = e
                            .map
                            .kraus()
                            .iter()
                            .flat_map(|k| {
                                let big = embed(k, *party, &dims);
                                paths.iter().map(move |p| big.mul(p)).collect::<Vec<_>>()
                            })
                            .collect();
                        go(&e.child, next_dims, next, ens, acc);
                    }
                }
            }
        }
        let dims = tree.space().party_dims().to_vec();
        let mut acc = 0.0;
        go(tree.root(), dims, vec![Dense::identity(tree.space().total_dim())], ens, &mut acc);
        acc
    }
}

fn oracle_equivalence() -> Verdict {
    let mut r = rng(9);
    let shapes: [&[usize]; 5] = [&[2], &[3], &[2, 2], &[2, 3], &[2, 2, 2]];
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let dims = shapes[uniform_int(&mut r, 0, shapes.len() - 1)].to_vec();
        let config = RandomTreeConfig {
            rounds: uniform_int(&mut r, 1, 3),
            root_outcomes: (2, 4),
            outcomes: (1, 3),
            labels: 0,
            first_party: None,
        };
        let members = uniform_int(&mut r, 1, 4);
        let (tree, ens) = instance(900 + seed, dims, config, members);
        let t = evaluate_success(&tree, &ens, false).map_err(|e| e.to_string())?.success;
        worst = worst.max((t - oracle::success(&tree, &ens)).abs());
    }
    let bell = {
        let (t, e) = demo::bell();
        evaluate_success(&t, &e, false).map_err(|e| e.to_string())?.success
    };
    let product = {
        let (t, e) = demo::product_basis();
        evaluate_success(&t, &e, false).map_err(|e| e.to_string())?.success
    };
    let detail = format!("200 trees, max gap {worst:.1e}; Bell {bell:.15}, product basis {product:.15}");
    if worst <= 1e-10 && (bell - 1.0).abs() <= 1e-10 && (product - 1.0).abs() <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report(number: usize, name: &str, verdict: &Verdict, elapsed: Duration) -> bool {
    let (tag, detail) = match verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} [{number}] {name}: {detail} ({:.2} s)", elapsed.as_secs_f64());
    verdict.is_ok()
}

fn timed(limit: Option<u64>, f: impl FnOnce() -> Verdict) -> (Verdict, Duration) {
    let start = Instant::now();
    let v = f();
    let elapsed = start.elapsed();
    (v.and_then(|d| within_time(d, elapsed, limit)), elapsed)
}

fn main() -> ExitCode {
    let mut ok = true;
    let mut closure = Closure::default();

    let (v, t) = timed(Some(5), split_identities);
    ok &= report(1, "matrix-sum split identities", &v, t);

    let (v, t) = timed(Some(10), caratheodory_suite);
    ok &= report(2, "Carathéodory reduction and peeling", &v, t);

    let (v, t) = timed(Some(60), || compress_end_to_end(&mut closure));
    ok &= report(3, "width compression end to end", &v, t);

    let start = Instant::now();
    let (conditions, optimality) = slim_conditions(&mut closure);
    let t = start.elapsed();
    let conditions = conditions.and_then(|d| within_time(d, t, Some(120)));
    ok &= report(4, "slim component conditions", &conditions, t);
    ok &= report(5, "best slim component keeps the success", &optimality, t);

    let (v, t) = timed(Some(60), shared_randomness);
    ok &= report(6, "shared randomness bound", &v, t);

    let (v, t) = timed(None, oracle_equivalence);
    ok &= report(7, "evaluation oracle equivalence", &v, t);

    let detail = format!("{} trees validated, {} diagnostics", closure.trees, closure.diagnostics);
    let v = if closure.trees > 0 && closure.diagnostics == 0 {
        Ok(detail)
    } else {
        Err(detail)
    };
    ok &= report(8, "pipeline closure", &v, Duration::ZERO);

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
