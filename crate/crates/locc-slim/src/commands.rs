//! Subcommand implementations. Each returns a [`RunReport`]; the binary
//! prints it and maps errors to exit codes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use locc_core::compress::{compress_protocol_m1_with, Tolerances};
use locc_core::numerics::ComplexMatrix;
use locc_core::quantum::{choi_of, Ensemble, Instrument};
use locc_core::slim::{
    best_slim_of, reduce_shared_randomness_with, shared_randomness_bound, slim_decompose_tree_with, SlimComponent,
    SlimDecomposition,
};
use locc_core::tree::{evaluate_success, extract_instrument, validate_tree_with, ProtocolTree};
use rayon::prelude::*;
use serde_json::json;

use crate::demo;
use crate::error::CliError;
use crate::format::{self, TreeJson};
use crate::report::{completeness_residual, max_local_dim, Bounds, Residuals, RunReport, SlimSummary, WidthStats};

/// Numerical knobs shared by all subcommands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub completeness: f64,
    pub equalize: f64,
    pub prob_cutoff: f64,
    pub rank: f64,
}

impl Default for Options {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            completeness: locc_core::quantum::COMPLETENESS_TOL,
            equalize: t.equalize,
            prob_cutoff: t.prob_cutoff,
            rank: t.rank,
        }
    }
}

impl Options {
    fn compress(&self) -> Tolerances {
        Tolerances {
            equalize: self.equalize,
            prob_cutoff: self.prob_cutoff,
            rank: self.rank,
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn diagnostics(tree: &ProtocolTree, opts: &Options) -> Vec<String> {
    validate_tree_with(tree, opts.completeness)
        .iter()
        .map(|d| format!("vertex {}: {:?}", d.vertex.0, d.violation))
        .collect()
}

fn checked_tree(text: &str, opts: &Options) -> Result<ProtocolTree, CliError> {
    let tree = format::tree_from_str(text)?;
    let diags = diagnostics(&tree, opts);
    if diags.is_empty() {
        Ok(tree)
    } else {
        Err(CliError::Invalid(diags))
    }
}

pub fn validate(tree_path: &Path, opts: &Options) -> Result<RunReport, CliError> {
    let text = read(tree_path)?;
    let mut report = RunReport::new("validate", &[text.as_bytes()]);
    let tree = format::tree_from_str(&text)?;
    report.diagnostics = diagnostics(&tree, opts);
    report.width_before = Some(WidthStats::of(&tree));
    report.residuals.completeness = Some(completeness_residual(&tree));
    if !report.diagnostics.is_empty() {
        report.status = "invalid".to_string();
    }
    Ok(report)
}

pub fn evaluate(tree_path: &Path, ensemble_path: &Path, relabel: bool, opts: &Options) -> Result<RunReport, CliError> {
    let (tt, et) = (read(tree_path)?, read(ensemble_path)?);
    let mut report = RunReport::new(if relabel { "evaluate --relabel" } else { "evaluate" }, &[tt.as_bytes(), et.as_bytes()]);
    let tree = checked_tree(&tt, opts)?;
    let ens = format::ensemble_from_str(&et)?;
    report.success_before = Some(evaluate_success(&tree, &ens, relabel)?.success);
    report.width_before = Some(WidthStats::of(&tree));
    report.residuals.completeness = Some(completeness_residual(&tree));
    Ok(report)
}

pub fn compress_m1(
    tree_path: &Path,
    ensemble_path: &Path,
    out: Option<&Path>,
    opts: &Options,
) -> Result<RunReport, CliError> {
    let (tt, et) = (read(tree_path)?, read(ensemble_path)?);
    let tree = checked_tree(&tt, opts)?;
    let ens = format::ensemble_from_str(&et)?;
    let (report, compressed) = run_compress(RunReport::new("compress-m1", &[tt.as_bytes(), et.as_bytes()]), &tree, &ens, opts)?;
    if let Some(path) = out {
        write(path, &format::tree_to_string(&compressed))?;
    }
    Ok(report)
}

fn run_compress(
    mut report: RunReport,
    tree: &ProtocolTree,
    ens: &Ensemble,
    opts: &Options,
) -> Result<(RunReport, ProtocolTree), CliError> {
    let compressed = compress_protocol_m1_with(tree, ens, &opts.compress())?;
    report.success_before = Some(evaluate_success(tree, ens, false)?.success);
    report.success_after = Some(evaluate_success(&compressed, ens, false)?.success);
    report.width_before = Some(WidthStats::of(tree));
    report.width_after = Some(WidthStats::of(&compressed));
    report.bounds = Some(Bounds::for_dim(max_local_dim(tree)));
    report.residuals.completeness = Some(completeness_residual(&compressed));
    report.diagnostics = diagnostics(&compressed, opts);
    if !report.diagnostics.is_empty() {
        report.status = "invalid".to_string();
    }
    Ok((report, compressed))
}

/// Settings of the `slim` subcommand.
#[derive(Clone, Copy, Debug)]
pub struct SlimArgs<'a> {
    pub ensemble: Option<&'a Path>,
    pub cap: usize,
    pub out: Option<&'a Path>,
    pub reduce_rand: bool,
}

pub fn slim(tree_path: &Path, args: SlimArgs<'_>, opts: &Options) -> Result<RunReport, CliError> {
    let tt = read(tree_path)?;
    let et = args.ensemble.map(read).transpose()?;
    let mut inputs = vec![tt.as_bytes()];
    inputs.extend(et.as_deref().map(str::as_bytes));
    let report = RunReport::new("slim", &inputs);
    let tree = checked_tree(&tt, opts)?;
    let ens = et.as_deref().map(format::ensemble_from_str).transpose()?;
    run_slim(report, &tree, ens.as_ref(), args, opts)
}

fn run_slim(
    mut report: RunReport,
    tree: &ProtocolTree,
    ens: Option<&Ensemble>,
    args: SlimArgs<'_>,
    opts: &Options,
) -> Result<RunReport, CliError> {
    let dec = slim_decompose_tree_with(tree, opts.rank)?;
    let count = dec.count();
    let exhaustive = count <= args.cap as u128;
    let materialized = if exhaustive { Some(dec.materialize(args.cap)?) } else { None };
    let mut summary = SlimSummary {
        components: count,
        exhaustive,
        ..SlimSummary::default()
    };
    let d = max_local_dim(dec.source());
    let mut bounds = Bounds::for_dim(d);
    report.width_before = Some(WidthStats::of(dec.source()));

    if let Some(path) = args.out {
        summary.emitted = write_components(path, &dec, materialized.as_deref(), args.cap)?;
    }
    if let Some(comps) = &materialized {
        report.residuals.recombination = Some(dec.edge_residual(comps));
        let invalid = comps
            .par_iter()
            .filter(|c| !diagnostics(&c.tree, opts).is_empty())
            .count();
        summary.invalid_components = Some(invalid);
        if invalid > 0 {
            report.status = "invalid".to_string();
        }
    }

    if let Some(ens) = ens {
        report.success_before = Some(evaluate_success(dec.source(), ens, false)?.success);
        let (success, best) = match &materialized {
            Some(comps) => best_of(comps, ens)?,
            None => {
                let b = best_slim_of(&dec, ens, 0)?;
                (b.success, b.component)
            }
        };
        report.success_after = Some(success);
        report.width_after = Some(WidthStats::of(&best.tree));
        summary.best_success = Some(success);
        summary.best_lambda = Some(best.lambda);
        summary.best_choices = best.choices;
    }

    if args.reduce_rand {
        let comps = materialized.as_deref().ok_or(CliError::Core(locc_core::Error::CapExceeded {
            count,
            cap: args.cap,
        }))?;
        let (retained, bound, residual) = reduce_randomness(dec.source(), comps, opts)?;
        summary.retained = Some(retained);
        bounds.shared_randomness = Some(bound);
        report.residuals.choi = Some(residual);
    }
    report.bounds = Some(bounds);
    report.slim = Some(summary);
    Ok(report)
}

/// Evaluates all components in parallel; the first maximum in enumeration order wins.
fn best_of(comps: &[SlimComponent], ens: &Ensemble) -> Result<(f64, SlimComponent), CliError> {
    let values = comps
        .par_iter()
        .map(|c| evaluate_success(&c.tree, ens, false).map(|e| e.success))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    Ok((values[best], comps[best].clone()))
}

fn write_components(
    path: &Path,
    dec: &SlimDecomposition,
    materialized: Option<&[SlimComponent]>,
    cap: usize,
) -> Result<usize, CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    let mut emitted = 0;
    let mut line = |c: &SlimComponent| -> Result<(), CliError> {
        let record = json!({ "lambda": c.lambda, "choices": c.choices, "tree": TreeJson::from(&c.tree) });
        writeln!(w, "{record}").map_err(io)?;
        emitted += 1;
        Ok(())
    };
    match materialized {
        Some(comps) => comps.iter().try_for_each(&mut line)?,
        None => dec.iter().take(cap).try_for_each(|c| line(&c))?,
    }
    let summary = json!({
        "summary": {
            "components": dec.count(),
            "emitted": emitted,
            "truncated": materialized.is_none(),
            "recombination_residual": materialized.map(|c| dec.edge_residual(c)),
        }
    });
    writeln!(w, "{summary}").map_err(io)?;
    w.flush().map_err(io)?;
    Ok(emitted)
}

/// (retained count, R, max per-outcome Choi distance to the full mixture).
fn reduce_randomness(
    source: &ProtocolTree,
    comps: &[SlimComponent],
    opts: &Options,
) -> Result<(usize, usize, f64), CliError> {
    let whole = extract_instrument(source)?;
    let d0 = whole.in_dim();
    let out_dims: Vec<usize> = whole.branches().iter().map(|b| b.map.out_dim()).collect();
    let weighted = comps
        .par_iter()
        .map(|c| extract_instrument(&c.tree).map(|i| (c.lambda, i)))
        .collect::<Result<Vec<(f64, Instrument)>, _>>()?;
    let total: f64 = weighted.iter().map(|(w, _)| w).sum();
    let weighted: Vec<(f64, Instrument)> = weighted.into_iter().map(|(w, i)| (w / total, i)).collect();
    let reduced = reduce_shared_randomness_with(&weighted, d0, &out_dims, opts.rank)?;
    let mut residual: f64 = 0.0;
    for (k, b) in whole.branches().iter().enumerate() {
        let target = choi_of(&b.map).matrix;
        let mut mix = ComplexMatrix::zeros(target.rows(), target.cols());
        for &(i, w) in &reduced.retained {
            mix = &mix + &choi_of(&weighted[i].1.branches()[k].map).matrix.scale(w);
        }
        residual = residual.max(mix.distance(&target));
    }
    debug_assert_eq!(reduced.bound, shared_randomness_bound(d0, &out_dims));
    Ok((reduced.retained.len(), reduced.bound, residual))
}

/// Which built-in instance to run.
#[derive(Clone, Debug, PartialEq)]
pub enum DemoKind {
    Bell,
    ProductBasis,
    Random { seed: u64, rounds: usize, dims: Vec<usize> },
}

/// Generates the instance, then runs evaluate, compress-m1 and slim on it.
/// With `save` the generated tree and ensemble are written as
/// `tree.json` and `ensemble.json` into that directory.
pub fn demo(kind: &DemoKind, cap: usize, save: Option<&Path>, opts: &Options) -> Result<RunReport, CliError> {
    let (name, (tree, ens)) = match kind {
        DemoKind::Bell => ("demo bell", demo::bell()),
        DemoKind::ProductBasis => ("demo product-basis", demo::product_basis()),
        DemoKind::Random { seed, rounds, dims } => ("demo random", demo::random(*seed, *rounds, dims)?),
    };
    let tt = format::tree_to_string(&tree);
    let et = format::ensemble_to_string(&ens);
    if let Some(dir) = save {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write(&dir.join("tree.json"), &tt)?;
        write(&dir.join("ensemble.json"), &et)?;
    }
    let report = RunReport::new(name, &[tt.as_bytes(), et.as_bytes()]);
    let (mut report, _) = run_compress(report, &tree, &ens, opts)?;
    let args = SlimArgs {
        ensemble: None,
        cap,
        out: None,
        reduce_rand: false,
    };
    let slim = run_slim(RunReport::new("slim", &[]), &tree, Some(&ens), args, opts)?;
    report.slim = slim.slim;
    report.residuals = Residuals {
        recombination: slim.residuals.recombination,
        ..report.residuals
    };
    if slim.status != "ok" {
        report.status = slim.status;
    }
    Ok(report)
}
