//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 input parse/read failure, 3 fixed-point
//! iteration cap exceeded, 4 soundness-check failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::domains::{
    compile_inner, compile_outer, load_table, serialize_table, DomainError, DomainTable,
    TableKind, DEFAULT_MAX_ITER,
};
use crate::generate::{csv_row, generate, GenOptions, GenResult, PruneMode, CSV_HEADER};
use crate::grammar::{parse_grammar, parse_sem, validate_coherence, Grammar, SemInput};
use crate::oracle::check_table;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ITERATION_CAP: i32 = 3;
pub const EXIT_SOUNDNESS: i32 = 4;

#[derive(Parser)]
#[command(
    name = "chartgen",
    about = "Compile index-binding domain tables and generate from flat semantics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile the inner and outer domain tables of a grammar.
    Compile {
        #[arg(long)]
        grammar: PathBuf,
        /// Output file for the outer table.
        #[arg(long)]
        out: PathBuf,
        /// Optional output file for the inner table.
        #[arg(long)]
        inner_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Generate sentences for a flat-semantics input.
    Generate {
        #[arg(long)]
        grammar: PathBuf,
        /// Compiled outer domain table.
        #[arg(long)]
        domains: PathBuf,
        /// File holding one flat-semantics expression.
        #[arg(long)]
        sem: PathBuf,
        #[arg(long, default_value = "none")]
        prune: PruneMode,
        /// Print one line per edge event.
        #[arg(long)]
        trace: bool,
        /// Append a CSV stats row (with header if the file is new).
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Pop the agenda in a seeded pseudo-random order.
        #[arg(long)]
        agenda_seed: Option<u64>,
    },
    /// Check a compiled table against brute-force derivation enumeration.
    Oracle {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        domains: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Run a semantics corpus with and without pruning, reporting CSV stats.
    Bench {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        domains: PathBuf,
        /// File with one flat-semantics expression per line.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        stats: PathBuf,
    },
}

struct CliError {
    code: i32,
    msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> CliError {
    CliError {
        code,
        msg: msg.into(),
    }
}

pub fn cli_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let is_err = e.use_stderr();
            let _ = e.print();
            return if is_err { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Compile {
            grammar,
            out,
            inner_out,
            max_iter,
        } => cmd_compile(&grammar, &out, inner_out.as_deref(), max_iter),
        Cmd::Generate {
            grammar,
            domains,
            sem,
            prune,
            trace,
            stats,
            agenda_seed,
        } => cmd_generate(
            &grammar,
            &domains,
            &sem,
            prune,
            trace,
            stats.as_deref(),
            agenda_seed,
        ),
        Cmd::Oracle {
            grammar,
            domains,
            depth,
        } => cmd_oracle(&grammar, &domains, depth),
        Cmd::Bench {
            grammar,
            domains,
            corpus,
            stats,
        } => cmd_bench(&grammar, &domains, &corpus, &stats),
    }
}

fn read(path: &std::path::Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot read {}: {}", path.display(), e)))
}

fn load_grammar(path: &std::path::Path) -> Result<Grammar, CliError> {
    parse_grammar(&read(path)?)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {}", path.display(), e)))
}

fn load_domains(path: &std::path::Path, g: &Grammar) -> Result<DomainTable, CliError> {
    load_table(&read(path)?, &g.paths)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {}", path.display(), e)))
}

fn load_outer(path: &std::path::Path, g: &Grammar) -> Result<DomainTable, CliError> {
    let t = load_domains(path, g)?;
    if t.kind != TableKind::Outer {
        return Err(fail(
            EXIT_PARSE,
            format!("{}: expected an outer table", path.display()),
        ));
    }
    Ok(t)
}

fn load_sem(text: &str, what: &str) -> Result<SemInput, CliError> {
    let input =
        parse_sem(text).map_err(|e| fail(EXIT_PARSE, format!("{}: {}", what, e)))?;
    if !validate_coherence(&input) {
        return Err(fail(
            EXIT_PARSE,
            format!("{}: input literals are not connected by shared indices", what),
        ));
    }
    Ok(input)
}

fn domain_err(e: DomainError) -> CliError {
    let code = match e {
        DomainError::IterationCap(_) => EXIT_ITERATION_CAP,
    };
    fail(code, e.to_string())
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot write {}: {}", path.display(), e)))
}

fn cmd_compile(
    grammar: &std::path::Path,
    out: &std::path::Path,
    inner_out: Option<&std::path::Path>,
    max_iter: usize,
) -> Result<(), CliError> {
    let g = load_grammar(grammar)?;
    let inner = compile_inner(&g, max_iter).map_err(domain_err)?;
    let outer = compile_outer(&g, &inner, max_iter).map_err(domain_err)?;
    write_file(out, &serialize_table(&outer))?;
    if let Some(p) = inner_out {
        write_file(p, &serialize_table(&inner))?;
    }
    println!(
        "inner: {} triples in {} iterations; outer: {} triples in {} iterations",
        inner.triples.len(),
        inner.iterations,
        outer.triples.len(),
        outer.iterations
    );
    Ok(())
}

fn append_stats(path: &std::path::Path, row: &str) -> Result<(), CliError> {
    let mut text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(_) => format!("{}\n", CSV_HEADER),
    };
    if text.is_empty() {
        text = format!("{}\n", CSV_HEADER);
    }
    text.push_str(row);
    text.push('\n');
    write_file(path, &text)
}

fn run_input(
    g: &Grammar,
    outer: &DomainTable,
    input: &SemInput,
    opts: &GenOptions,
    trace: Option<&mut dyn Write>,
) -> Result<(GenResult, u128), CliError> {
    let start = Instant::now();
    let r = generate(g, outer, input, opts, trace)
        .map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    Ok((r, start.elapsed().as_millis()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    grammar: &std::path::Path,
    domains: &std::path::Path,
    sem: &std::path::Path,
    prune: PruneMode,
    trace: bool,
    stats: Option<&std::path::Path>,
    agenda_seed: Option<u64>,
) -> Result<(), CliError> {
    let g = load_grammar(grammar)?;
    let outer = load_outer(domains, &g)?;
    let input = load_sem(&read(sem)?, &sem.display().to_string())?;
    let opts = GenOptions {
        mode: prune,
        agenda_seed,
    };
    let mut stdout = std::io::stdout();
    let trace_sink: Option<&mut dyn Write> = if trace { Some(&mut stdout) } else { None };
    let (result, time_ms) = run_input(&g, &outer, &input, &opts, trace_sink)?;
    for s in &result.outputs {
        println!("{}", s);
    }
    eprintln!(
        "generated {} output(s); edges created {}, pruned internal {}, pruned external {}",
        result.outputs.len(),
        result.stats.edges_created,
        result.stats.edges_pruned_internal,
        result.stats.edges_pruned_external
    );
    if let Some(p) = stats {
        let row = csv_row(
            &input.to_string(),
            &prune.to_string(),
            &result.stats,
            result.outputs.len(),
            time_ms,
        );
        append_stats(p, &row)?;
    }
    Ok(())
}

fn cmd_oracle(
    grammar: &std::path::Path,
    domains: &std::path::Path,
    depth: usize,
) -> Result<(), CliError> {
    let g = load_grammar(grammar)?;
    let table = load_domains(domains, &g)?;
    let report = check_table(&g, &table, depth);
    println!(
        "oracle: kind={} depth={} trees={} checks={} failures={}",
        table.kind,
        depth,
        report.trees,
        report.checks,
        report.failures.len()
    );
    for f in &report.failures {
        println!("  {}", f);
    }
    if !report.ok() {
        return Err(fail(
            EXIT_SOUNDNESS,
            format!("{} unlicensed sharing(s) found", report.failures.len()),
        ));
    }
    Ok(())
}

fn cmd_bench(
    grammar: &std::path::Path,
    domains: &std::path::Path,
    corpus: &std::path::Path,
    stats: &std::path::Path,
) -> Result<(), CliError> {
    let g = load_grammar(grammar)?;
    let outer = load_outer(domains, &g)?;
    let text = read(corpus)?;
    let mut rows = vec![CSV_HEADER.to_string()];
    let mut edge_reductions: Vec<f64> = Vec::new();
    let mut time_reductions: Vec<f64> = Vec::new();
    let mut total_int = 0usize;
    let mut total_ext = 0usize;
    let mut inputs = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let input = load_sem(line, &format!("{}:{}", corpus.display(), lineno + 1))?;
        inputs += 1;
        let mut per_mode: Vec<(PruneMode, GenResult, f64)> = Vec::new();
        for mode in [PruneMode::None, PruneMode::Both] {
            let opts = GenOptions {
                mode,
                agenda_seed: None,
            };
            let start = Instant::now();
            let r = generate(&g, &outer, &input, &opts, None)
                .map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
            let secs = start.elapsed().as_secs_f64();
            rows.push(csv_row(
                &input.to_string(),
                &mode.to_string(),
                &r.stats,
                r.outputs.len(),
                (secs * 1000.0) as u128,
            ));
            per_mode.push((mode, r, secs));
        }
        let (_, none_r, none_t) = &per_mode[0];
        let (_, both_r, both_t) = &per_mode[1];
        if none_r.outputs != both_r.outputs {
            return Err(fail(
                EXIT_SOUNDNESS,
                format!("pruning changed the output set for: {}", input),
            ));
        }
        total_int += both_r.stats.edges_pruned_internal;
        total_ext += both_r.stats.edges_pruned_external;
        if none_r.stats.edges_created > 0 {
            edge_reductions.push(
                100.0 * (none_r.stats.edges_created - both_r.stats.edges_created) as f64
                    / none_r.stats.edges_created as f64,
            );
        }
        if *none_t > 0.0 {
            time_reductions.push(100.0 * (none_t - both_t) / none_t);
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    rows.push(format!(
        "\"__aggregate__\",both_vs_none,{},{},{},{},{}",
        mean(&edge_reductions).round() as i64,
        total_int,
        total_ext,
        inputs,
        mean(&time_reductions).round() as i64,
    ));
    let mut out = rows.join("\n");
    out.push('\n');
    write_file(stats, &out)?;
    println!(
        "bench: {} input(s); mean edge reduction {:.0}%, mean time reduction {:.0}%",
        inputs,
        mean(&edge_reductions),
        mean(&time_reductions)
    );
    Ok(())
}
