use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use covariants::catalog::{basis, reduction_spec, table_counts};
use covariants::diophantine::{companion, expansion_count, hilbert_basis, hilbert_basis_exhaustive, DiophSystem};
use covariants::gordan::{
    build_a3_system, olver_candidate_basis, plan_cells, unfiltered_cells, verify_catalog, CellStatus, OlverConfig,
    PlanFilters, VRelevance, VerifyConfig, VerifyLedger,
};
use covariants::hilbert::{bound_table, quotient_dim, springer_dim};
use covariants::relations::{builtin_relations, invariant_order, order_basis, RelationContext, RelationLimits};
use covariants::scalar_forms::DEFAULT_PRIME;

/// Dimensions, Diophantine counts, spanning checks and candidate bases for
/// covariants of binary forms.
#[derive(Parser)]
#[command(name = "covariants", version)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand; echoed into JSON outputs.
#[derive(Args, Clone, Debug, Serialize)]
struct RunConfig {
    /// RNG seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Prime for modular evaluation.
    #[arg(long, global = true, default_value_t = DEFAULT_PRIME)]
    prime: u32,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension of Cov_{d,m}(S_n), optionally modulo invariants of given degrees.
    Dim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        /// Comma-separated degrees of a regular sequence of invariants.
        #[arg(long, value_delimiter = ',')]
        reduce: Vec<usize>,
    },
    /// Minimal solutions of the A_3 system (n = 9, 10) or of an explicit system.
    Dioph {
        #[arg(long, conflicts_with_all = ["lhs1", "lhs2"])]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',', requires = "lhs2")]
        lhs1: Vec<u64>,
        #[arg(long, value_delimiter = ',', requires = "lhs1")]
        lhs2: Vec<u64>,
        /// Cross-check an explicit system by exhaustive search.
        #[arg(long)]
        check: bool,
    },
    /// Check that the shipped basis spans the selected cells.
    Verify {
        #[arg(long)]
        n: usize,
        /// Skip cells of larger target dimension.
        #[arg(long, default_value_t = 2000)]
        max_dim: u64,
        /// Explicit cells `d,m` (repeatable); defaults to every catalog cell.
        #[arg(long, value_parser = parse_cell)]
        cell: Vec<(usize, usize)>,
        /// Work modulo the partial h.s.o.p. (default: on for sweeps, off for explicit cells).
        #[arg(long, overrides_with = "no_reduce")]
        reduce: bool,
        #[arg(long)]
        no_reduce: bool,
        #[arg(long, default_value_t = covariants::rankcheck::BUDGET_FACTOR)]
        budget_factor: usize,
        /// JSON ledger updated after every cell.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Continue from an existing ledger.
        #[arg(long, requires = "ledger")]
        resume: bool,
    },
    /// Olver's algorithm: a candidate basis up to degree dmax.
    Olver {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dmax: usize,
        /// Write the basis in catalog syntax.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Degree bounds per order.
    Bounds {
        #[arg(long)]
        n: usize,
    },
    /// Discover relations among the B members used by the A_3 step of
    /// forms of degree n (slow for n = 10).
    Relations {
        #[arg(long)]
        n: usize,
        /// Write the relation set as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cells of the A_3 step after bounds and the shipped relations.
    Plan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        no_relations: bool,
    },
}

fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (d, m) = s.split_once(',').ok_or("expected d,m")?;
    Ok((d.trim().parse().map_err(|e| format!("{e}"))?, m.trim().parse().map_err(|e| format!("{e}"))?))
}

/// Outcome classes mapped onto exit codes.
enum Outcome {
    Ok,
    Short,
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.run.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Short) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn emit<T: Serialize>(run: &RunConfig, value: &T, text: impl FnOnce() -> String) {
    if run.json {
        let doc = serde_json::json!({ "config": run, "result": value });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable output"));
    } else {
        print!("{}", text());
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let rc = &cli.run;
    match &cli.command {
        Command::Dim { n, d, m, reduce } => {
            let v = if reduce.is_empty() { springer_dim(*n, *d, *m).into() } else { quotient_dim(*n, *d, *m, reduce) };
            emit(rc, &v.to_string(), || format!("{v}\n"));
        }
        Command::Dioph { n, lhs1, lhs2, check } => {
            let sys = match n {
                Some(n) => build_a3_system(*n, &basis(2 * n - 12)?)?.system,
                None if !lhs1.is_empty() => DiophSystem::new(lhs1.clone(), lhs2.clone())?,
                None => return Err("give --n or both --lhs1 and --lhs2".into()),
            };
            let comp = companion(&sys);
            let sols = hilbert_basis(&comp.system);
            let expanded = expansion_count(&sols, &comp.s, &comp.t);
            let agrees = (*check && n.is_none()).then(|| {
                let mut brute = hilbert_basis_exhaustive(&sys);
                let mut ours = covariants::diophantine::expand_companion(&comp, &sols);
                brute.sort();
                ours.sort();
                brute == ours
            });
            let listed = n.is_none().then_some(&sols);
            let out = serde_json::json!({
                "companion_solutions": sols.len(),
                "expanded": expanded.to_string(),
                "exhaustive_agrees": agrees,
                "solutions": listed,
            });
            emit(rc, &out, || {
                let mut s = format!("{} / {}\n", sols.len(), expanded);
                if let Some(list) = listed {
                    for x in list {
                        s += &format!("  alpha={:?} beta={:?} u={} v={} r={}\n", x.alpha, x.beta, x.u, x.v, x.r);
                    }
                }
                if let Some(a) = agrees {
                    s += &format!("exhaustive search {}\n", if a { "agrees" } else { "DISAGREES" });
                }
                s
            });
            if agrees == Some(false) {
                return Err("exhaustive search disagrees with the Hilbert basis".into());
            }
        }
        Command::Verify { n, max_dim, cell, reduce, no_reduce, budget_factor, ledger, resume } => {
            let catalog = basis(*n)?;
            let config = VerifyConfig {
                n: *n,
                max_dim: *max_dim,
                cells: (!cell.is_empty()).then(|| cell.clone()),
                reduce: if *reduce {
                    true
                } else if *no_reduce {
                    false
                } else {
                    cell.is_empty()
                },
                prime: rc.prime,
                seed: rc.seed,
                budget_factor: *budget_factor,
            };
            let previous = match ledger {
                Some(path) if *resume && path.exists() => Some(VerifyLedger::load(path)?),
                _ => None,
            };
            let mut progress = |l: &VerifyLedger| {
                if let Some(c) = l.certificates.last() {
                    eprintln!("({},{}) rank {}/{}", c.d, c.m, c.achieved_rank, c.target_dim);
                }
                match ledger {
                    Some(path) => l.save(path),
                    None => Ok(()),
                }
            };
            let result = verify_catalog(&catalog, &config, previous, &mut progress)?;
            if let Some(path) = ledger {
                result.save(path)?;
            }
            emit(rc, &result, || {
                let mut s = String::new();
                for c in &result.certificates {
                    s += &format!("({},{}) rank {} of {}\n", c.d, c.m, c.achieved_rank, c.target_dim);
                }
                s + &format!(
                    "{} cells: {} verified, {} short\n",
                    result.plan.len(),
                    result.count(CellStatus::Verified),
                    result.count(CellStatus::Short)
                )
            });
            if !result.all_verified() {
                return Ok(Outcome::Short);
            }
        }
        Command::Olver { n, dmax, out } => {
            let config = OlverConfig { prime: rc.prime, ..OlverConfig::new(*n, *dmax, rc.seed) };
            let result = olver_candidate_basis(&config)?;
            if let Some(path) = out {
                std::fs::write(path, result.catalog.to_text(&format!("Candidate basis of Cov(S_{n})")))?;
            }
            let table = table_counts(&result.catalog);
            let summary = serde_json::json!({
                "generators": result.catalog.len(),
                "complete": result.is_complete(),
                "counts": table.counts.iter().map(|(k, v)| (k.0, k.1, *v)).collect::<Vec<_>>(),
            });
            emit(rc, &summary, || {
                let mut s = format!("{} generators\n", result.catalog.len());
                for ((d, m), c) in &table.counts {
                    s += &format!("  degree {d} order {m}: {c}\n");
                }
                s
            });
            if !result.is_complete() {
                return Ok(Outcome::Short);
            }
        }
        Command::Bounds { n } => {
            let t = bound_table(*n)?;
            emit(rc, &t, || {
                let mut s = String::from("order max_degree hsop_degrees\n");
                for (m, e) in &t.entries {
                    s += &format!("{m} {} {:?}\n", e.max_degree, e.hsop_degrees);
                }
                s
            });
        }
        Command::Relations { n, out } => {
            let k = 2 * n - 12;
            let b = basis(k)?;
            let sys = build_a3_system(*n, &b)?;
            let comp = companion(&sys.system);
            let sols = hilbert_basis(&comp.system);
            let bounds = bound_table(*n)?;
            let relevance = VRelevance::from_plan(&sys, &comp, &sols, Some(&bounds), &b);
            let family = b.family();
            let order = order_basis(&family, invariant_order(k));
            let mut ctx = RelationContext::new(&family, order, rc.seed, RelationLimits::default())?;
            let set = ctx.find_all(&relevance)?;
            if let Some(path) = out {
                std::fs::write(path, set.to_json())?;
            }
            let summary = serde_json::json!({ "powers": set.powers(), "pairs": set.pairs() });
            emit(rc, &summary, || format!("{} power relations, {} pair relations\n", set.powers(), set.pairs()));
        }
        Command::Plan { n, no_relations } => {
            let b = basis(2 * n - 12)?;
            let sys = build_a3_system(*n, &b)?;
            let comp = companion(&sys.system);
            let sols = hilbert_basis(&comp.system);
            let bounds = bound_table(*n)?;
            let relations = if *no_relations { None } else { builtin_relations(2 * n - 12) };
            let forbidden = relations.as_ref().map(|r| r.forbidden(&sys.b_sources)).unwrap_or_default();
            let spec = reduction_spec(*n).ok_or("no reduction data")?;
            let filters = PlanFilters {
                bounds: Some(&bounds),
                forbidden: &forbidden,
                prime: rc.prime,
                hsop_degrees: spec.degrees,
            };
            let plan = plan_cells(&sys, &comp, &sols, &filters);
            let unfiltered = unfiltered_cells(&sys, &comp, &sols).len();
            let largest = plan.largest().map(|c| (c.d, c.m, c.target_dim));
            let out = serde_json::json!({
                "unfiltered_cells": unfiltered,
                "cells": plan.len(),
                "transvectants": plan.transvectants,
                "relations": relations.as_ref().map(|r| r.relations.len()),
                "largest": largest,
            });
            emit(rc, &out, || {
                let mut s = format!("unfiltered cells: {unfiltered}\n");
                s += &format!("relations used: {}\n", relations.as_ref().map_or(0, |r| r.relations.len()));
                s += &format!("cells: {}\ntransvectants: {}\n", plan.len(), plan.transvectants);
                if let Some((d, m, t)) = largest {
                    s += &format!("largest: ({d},{m}) dimension {t}\n");
                }
                s
            });
        }
    }
    Ok(Outcome::Ok)
}
