//! Chart generation from flat semantics, with optional domain-based pruning.
//!
//! The generator runs a standard agenda/chart loop over edges that carry a
//! coverage set of positions into the input literal bag. Lexical edges enter
//! the agenda unvalidated; every complete edge produced by rule combination
//! is subjected to the internal and/or external index test, depending on the
//! pruning mode, before it may enter the chart.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domains::{expand_pairs, DomainTable, PathCtx};
use crate::fs::{FeatureStructure, Path};
use crate::grammar::{
    daughter_path, mother_path, Grammar, LexEntry, SemArg, SemInput, TemplateArg,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMode {
    None,
    Internal,
    External,
    Both,
}

impl PruneMode {
    pub fn internal(self) -> bool {
        matches!(self, PruneMode::Internal | PruneMode::Both)
    }

    pub fn external(self) -> bool {
        matches!(self, PruneMode::External | PruneMode::Both)
    }
}

impl std::str::FromStr for PruneMode {
    type Err = String;

    fn from_str(s: &str) -> Result<PruneMode, String> {
        match s {
            "none" => Ok(PruneMode::None),
            "internal" => Ok(PruneMode::Internal),
            "external" => Ok(PruneMode::External),
            "both" => Ok(PruneMode::Both),
            other => Err(format!(
                "bad prune mode '{}': expected none, internal, external or both",
                other
            )),
        }
    }
}

impl std::fmt::Display for PruneMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PruneMode::None => write!(f, "none"),
            PruneMode::Internal => write!(f, "internal"),
            PruneMode::External => write!(f, "external"),
            PruneMode::Both => write!(f, "both"),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum GenError {
    #[error("no lexical entry covers literal(s): {0}")]
    Uncovered(String),
    #[error("trace write failed: {0}")]
    Io(String),
}

/// An instantiated lexical sign matched against the input bag: the starting
/// point of generation and the candidate set for external validation.
#[derive(Debug, Clone)]
pub struct LexEdgeSeed {
    pub word: String,
    pub sign: FeatureStructure,
    pub covered: BTreeSet<usize>,
    pub indices: BTreeSet<String>,
}

/// Matches every lexical entry against the literal bag. An entry matches by
/// assigning its templates injectively to distinct bag positions, with
/// template variables bound consistently to input indices; each complete
/// assignment instantiates the sign with the bound indices as atoms. Fails
/// with a diagnostic naming every literal no entry can cover.
pub fn lex_lookup(g: &Grammar, input: &SemInput) -> Result<Vec<LexEdgeSeed>, GenError> {
    let mut out = Vec::new();
    for entry in &g.lexicon {
        for (covered, bind) in entry_matchings(entry, input) {
            let mut node_bind: HashMap<usize, String> = HashMap::new();
            let mut consistent = true;
            for (var, idx) in &bind {
                if let Some(&node) = entry.var_nodes.get(var) {
                    match node_bind.get(&node) {
                        Some(prev) if prev != idx => {
                            consistent = false;
                            break;
                        }
                        _ => {
                            node_bind.insert(node, idx.clone());
                        }
                    }
                }
            }
            if !consistent {
                continue;
            }
            let sign = match entry.sign.with_vars_bound(&node_bind) {
                Some(s) => s,
                None => continue,
            };
            let indices = covered
                .iter()
                .flat_map(|&i| input.literals[i].indices().map(|s| s.to_string()))
                .collect();
            out.push(LexEdgeSeed {
                word: entry.word.clone(),
                sign,
                covered,
                indices,
            });
        }
    }
    let uncovered: Vec<String> = (0..input.literals.len())
        .filter(|i| !out.iter().any(|s| s.covered.contains(i)))
        .map(|i| input.literals[i].to_string())
        .collect();
    if !uncovered.is_empty() {
        return Err(GenError::Uncovered(uncovered.join(", ")));
    }
    Ok(out)
}

type Matching = (BTreeSet<usize>, BTreeMap<String, String>);

fn entry_matchings(entry: &LexEntry, input: &SemInput) -> Vec<Matching> {
    let mut found: BTreeSet<Matching> = BTreeSet::new();
    let mut used: Vec<Option<usize>> = vec![None; entry.templates.len()];
    match_rec(entry, input, 0, &mut used, &BTreeMap::new(), &mut found);
    found.into_iter().collect()
}

fn match_rec(
    entry: &LexEntry,
    input: &SemInput,
    ti: usize,
    used: &mut Vec<Option<usize>>,
    bind: &BTreeMap<String, String>,
    found: &mut BTreeSet<Matching>,
) {
    if ti == entry.templates.len() {
        let covered: BTreeSet<usize> = used.iter().map(|p| p.unwrap()).collect();
        found.insert((covered, bind.clone()));
        return;
    }
    let t = &entry.templates[ti];
    for (i, lit) in input.literals.iter().enumerate() {
        if used[..ti].iter().any(|p| *p == Some(i))
            || lit.predicate != t.predicate
            || lit.args.len() != t.args.len()
        {
            continue;
        }
        let mut b = bind.clone();
        let mut ok = true;
        for (ta, la) in t.args.iter().zip(&lit.args) {
            match (ta, la) {
                (TemplateArg::Const(c), SemArg::Const(d)) => ok = c == d,
                (TemplateArg::Var(v), SemArg::Index(idx)) => match b.get(v) {
                    Some(prev) => ok = prev == idx,
                    None => {
                        b.insert(v.clone(), idx.clone());
                    }
                },
                _ => ok = false,
            }
            if !ok {
                break;
            }
        }
        if ok {
            used[ti] = Some(i);
            match_rec(entry, input, ti + 1, used, &b, found);
            used[ti] = None;
        }
    }
}

/// Indices of a constituent that remain bindable from outside it: those
/// sitting at a path the outer table relates to some outside sign.
pub fn external_indices(
    sign: &FeatureStructure,
    indices: &BTreeSet<String>,
    outer: &DomainTable,
    ctx: &PathCtx,
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in outer.triples.iter() {
        if t.left.unify(sign).is_none() {
            continue;
        }
        for pr in expand_pairs(&t.bindings, ctx) {
            if let Some(a) = sign.atom_at(&pr.left) {
                if indices.contains(a) {
                    out.insert(a.to_string());
                }
            }
        }
    }
    out
}

/// Internal test: no remaining literal may mention an index of this edge
/// that is no longer bindable from outside it.
pub fn internal_validation(
    sign: &FeatureStructure,
    edge_indices: &BTreeSet<String>,
    remaining: &[usize],
    input: &SemInput,
    outer: &DomainTable,
    ctx: &PathCtx,
) -> bool {
    let ext = external_indices(sign, edge_indices, outer, ctx);
    let internal: BTreeSet<&String> = edge_indices.iter().filter(|i| !ext.contains(*i)).collect();
    if internal.is_empty() {
        return true;
    }
    !remaining
        .iter()
        .any(|&i| input.literals[i].indices().any(|idx| internal.contains(&idx.to_string())))
}

/// External test: every usable lexical candidate for a remaining literal
/// that shares an externally bindable index with this edge must be licensed
/// by an outer triple binding that index on both sides.
pub fn external_validation(
    sign: &FeatureStructure,
    edge_indices: &BTreeSet<String>,
    covered: &BTreeSet<usize>,
    remaining: &[usize],
    lex: &[LexEdgeSeed],
    outer: &DomainTable,
    ctx: &PathCtx,
) -> bool {
    let ext = external_indices(sign, edge_indices, outer, ctx);
    for &pos in remaining {
        for seed in lex {
            if !seed.covered.contains(&pos) || !seed.covered.is_disjoint(covered) {
                continue;
            }
            if seed.indices.intersection(&ext).next().is_none() {
                continue;
            }
            let licensed = outer.triples.iter().any(|t| {
                t.left.unify(sign).is_some()
                    && t.right.unify(&seed.sign).is_some()
                    && expand_pairs(&t.bindings, ctx).iter().any(|pr| {
                        match (sign.atom_at(&pr.left), seed.sign.atom_at(&pr.right)) {
                            (Some(a), Some(b)) => a == b && ext.contains(a),
                            _ => false,
                        }
                    })
            });
            if !licensed {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Lex(usize),
    Rule(usize),
}

#[derive(Debug, Clone)]
struct Edge {
    id: usize,
    origin: Origin,
    /// Daughters filled so far (rule edges only).
    dot: usize,
    /// Rule edges: the rule-wide structure instance. Lex edges: the sign.
    fs: FeatureStructure,
    /// Constituent sign; present once the edge is complete.
    sign: Option<FeatureStructure>,
    covered: BTreeSet<usize>,
    words: Vec<String>,
    indices: BTreeSet<String>,
}

impl Edge {
    fn complete(&self) -> bool {
        self.sign.is_some()
    }

    fn sign(&self) -> &FeatureStructure {
        self.sign.as_ref().expect("complete edge")
    }

    fn key(&self) -> String {
        let covered: Vec<String> = self.covered.iter().map(|c| c.to_string()).collect();
        format!(
            "{:?}|{}|{}|{}|{}",
            self.origin,
            self.dot,
            covered.join(","),
            self.words.join(" "),
            self.fs.canonical_key()
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenStats {
    pub edges_created: usize,
    pub edges_pruned_internal: usize,
    pub edges_pruned_external: usize,
}

#[derive(Debug, Clone)]
pub struct GenResult {
    pub outputs: BTreeSet<String>,
    pub stats: GenStats,
    /// Complete edges in the final chart.
    pub inactive_edges: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenOptions {
    pub mode: PruneMode,
    /// When set, the agenda is popped in a seeded pseudo-random order
    /// instead of first-in first-out.
    pub agenda_seed: Option<u64>,
}

impl Default for PruneMode {
    fn default() -> PruneMode {
        PruneMode::None
    }
}

/// Generates all sentences realizing `input` under `g`, pruning per
/// `opts.mode` with the compiled outer table. `trace`, when given, receives
/// one line per edge event (`ADD`, `COMBINE`, `PRUNE-INT`, `PRUNE-EXT`).
pub fn generate(
    g: &Grammar,
    outer: &DomainTable,
    input: &SemInput,
    opts: &GenOptions,
    mut trace: Option<&mut dyn Write>,
) -> Result<GenResult, GenError> {
    let ctx = PathCtx::new(&g.paths);
    let lex = lex_lookup(g, input)?;
    let n = input.literals.len();
    let cat_path = Path::parse("cat").unwrap();

    let mut stats = GenStats::default();
    let mut agenda: VecDeque<Edge> = VecDeque::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut actives: Vec<Edge> = Vec::new();
    let mut inactives: Vec<Edge> = Vec::new();
    let mut next_id = 0usize;
    let mut rng = opts.agenda_seed.map(ChaCha8Rng::seed_from_u64);

    let emit = |trace: &mut Option<&mut dyn Write>,
                    what: &str,
                    e: &Edge|
     -> Result<(), GenError> {
        if let Some(w) = trace {
            let cat = match (&e.sign, e.origin) {
                (Some(s), _) => s.atom_at(&cat_path).unwrap_or("?").to_string(),
                (None, Origin::Rule(r)) => g.rules[r]
                    .mother()
                    .atom_at(&cat_path)
                    .unwrap_or("?")
                    .to_string(),
                (None, Origin::Lex(_)) => "?".to_string(),
            };
            writeln!(
                w,
                "{} {} cat={} covered={}/{} words=\"{}\"",
                what,
                e.id,
                cat,
                e.covered.len(),
                n,
                e.words.join(" ")
            )
            .map_err(|e| GenError::Io(e.to_string()))?;
        }
        Ok(())
    };

    // Lexical edges enter the agenda unvalidated.
    for (li, seed) in lex.iter().enumerate() {
        let e = Edge {
            id: next_id,
            origin: Origin::Lex(li),
            dot: 0,
            fs: seed.sign.clone(),
            sign: Some(seed.sign.clone()),
            covered: seed.covered.clone(),
            words: vec![seed.word.clone()],
            indices: seed.indices.clone(),
        };
        next_id += 1;
        if !seen.insert(e.key()) {
            continue;
        }
        stats.edges_created += 1;
        emit(&mut trace, "ADD", &e)?;
        agenda.push_back(e);
    }

    while !agenda.is_empty() {
        let e = match &mut rng {
            Some(r) => agenda.remove(r.gen_range(0..agenda.len())).unwrap(),
            None => agenda.pop_front().unwrap(),
        };
        let mut fresh: Vec<Edge> = Vec::new();
        if e.complete() {
            for (ri, rule) in g.rules.iter().enumerate() {
                if let Some(fs) = rule.fs.unify_at(&daughter_path(1), e.sign()) {
                    fresh.push(proto_edge(ri, 1, fs, &e, g));
                }
            }
            for a in &actives {
                if let Some(adv) = advance(a, &e, g) {
                    fresh.push(adv);
                }
            }
            inactives.push(e);
        } else {
            for i in &inactives {
                if let Some(adv) = advance(&e, i, g) {
                    fresh.push(adv);
                }
            }
            actives.push(e);
        }
        for mut ne in fresh {
            if seen.contains(&ne.key()) {
                continue;
            }
            seen.insert(ne.key());
            ne.id = next_id;
            next_id += 1;
            stats.edges_created += 1;
            if ne.complete() {
                let remaining: Vec<usize> =
                    (0..n).filter(|i| !ne.covered.contains(i)).collect();
                if opts.mode.internal()
                    && !internal_validation(ne.sign(), &ne.indices, &remaining, input, outer, &ctx)
                {
                    stats.edges_pruned_internal += 1;
                    emit(&mut trace, "PRUNE-INT", &ne)?;
                    continue;
                }
                if opts.mode.external()
                    && !external_validation(
                        ne.sign(),
                        &ne.indices,
                        &ne.covered,
                        &remaining,
                        &lex,
                        outer,
                        &ctx,
                    )
                {
                    stats.edges_pruned_external += 1;
                    emit(&mut trace, "PRUNE-EXT", &ne)?;
                    continue;
                }
            }
            emit(&mut trace, "COMBINE", &ne)?;
            agenda.push_back(ne);
        }
    }

    let mut outputs = BTreeSet::new();
    for e in &inactives {
        if e.covered.len() != n {
            continue;
        }
        let sign = e.sign();
        if g.start.unify(sign).is_none() {
            continue;
        }
        let rooted = g
            .paths
            .iter()
            .any(|p| sign.atom_at(p) == Some(input.distinguished.as_str()));
        if rooted {
            outputs.insert(e.words.join(" "));
        }
    }
    Ok(GenResult {
        outputs,
        stats,
        inactive_edges: inactives.len(),
    })
}

fn proto_edge(ri: usize, dot: usize, fs: FeatureStructure, daughter: &Edge, g: &Grammar) -> Edge {
    let complete = dot == g.rules[ri].arity;
    let sign = complete.then(|| fs.sub_at(&mother_path()).expect("mother slot"));
    Edge {
        id: 0,
        origin: Origin::Rule(ri),
        dot,
        fs,
        sign,
        covered: daughter.covered.clone(),
        words: daughter.words.clone(),
        indices: daughter.indices.clone(),
    }
}

fn advance(active: &Edge, inactive: &Edge, g: &Grammar) -> Option<Edge> {
    let ri = match active.origin {
        Origin::Rule(ri) => ri,
        Origin::Lex(_) => return None,
    };
    if !active.covered.is_disjoint(&inactive.covered) {
        return None;
    }
    let next = active.dot + 1;
    let fs = active.fs.unify_at(&daughter_path(next), inactive.sign())?;
    let complete = next == g.rules[ri].arity;
    let sign = complete.then(|| fs.sub_at(&mother_path()).expect("mother slot"));
    let mut covered = active.covered.clone();
    covered.extend(inactive.covered.iter().copied());
    let mut words = active.words.clone();
    words.extend(inactive.words.iter().cloned());
    let mut indices = active.indices.clone();
    indices.extend(inactive.indices.iter().cloned());
    Some(Edge {
        id: 0,
        origin: Origin::Rule(ri),
        dot: next,
        fs,
        sign,
        covered,
        words,
        indices,
    })
}

pub const CSV_HEADER: &str =
    "input,mode,edges_created,edges_pruned_internal,edges_pruned_external,outputs,time_ms";

/// One CSV row; the input field is quoted since literals contain commas.
pub fn csv_row(
    input: &str,
    mode: &str,
    stats: &GenStats,
    outputs: usize,
    time_ms: u128,
) -> String {
    format!(
        "\"{}\",{},{},{},{},{},{}",
        input.replace('"', "\"\""),
        mode,
        stats.edges_created,
        stats.edges_pruned_internal,
        stats.edges_pruned_external,
        outputs,
        time_ms
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{compile_inner, compile_outer, DEFAULT_MAX_ITER};
    use crate::grammar::{parse_grammar, parse_sem};

    const TOY: &str = include_str!("../grammars/toy.gram");
    const MINIMAL: &str = include_str!("../grammars/minimal.gram");

    fn outer_of(g: &Grammar) -> DomainTable {
        let inner = compile_inner(g, DEFAULT_MAX_ITER).unwrap();
        compile_outer(g, &inner, DEFAULT_MAX_ITER).unwrap()
    }

    fn run(g: &Grammar, outer: &DomainTable, sem: &str, mode: PruneMode) -> GenResult {
        let input = parse_sem(sem).unwrap();
        let opts = GenOptions {
            mode,
            agenda_seed: None,
        };
        generate(g, outer, &input, &opts, None).unwrap()
    }

    #[test]
    fn lex_lookup_instantiates_three_edges() {
        let g = parse_grammar(MINIMAL).unwrap();
        let input = parse_sem("r : run(r), past(r), fast(r), arg1(r,j), name(j,John)").unwrap();
        let seeds = lex_lookup(&g, &input).unwrap();
        assert_eq!(seeds.len(), 3);
        let ran = seeds.iter().find(|s| s.word == "ran").unwrap();
        assert_eq!(ran.covered.len(), 3);
        assert_eq!(
            ran.sign.atom_at(&Path::parse("sem.arg1").unwrap()),
            Some("r")
        );
        assert_eq!(
            ran.sign.atom_at(&Path::parse("sem.arg2").unwrap()),
            Some("j")
        );
    }

    #[test]
    fn lex_lookup_reports_uncovered_literals() {
        let g = parse_grammar(MINIMAL).unwrap();
        let input = parse_sem("r : run(r), sing(r)").unwrap();
        match lex_lookup(&g, &input) {
            Err(GenError::Uncovered(msg)) => assert!(msg.contains("sing(r)"), "{}", msg),
            other => panic!("expected uncovered error, got {:?}", other),
        }
    }

    #[test]
    fn generates_john_ran_fast() {
        let g = parse_grammar(MINIMAL).unwrap();
        let outer = outer_of(&g);
        for mode in [PruneMode::None, PruneMode::Both] {
            let r = run(
                &g,
                &outer,
                "r : run(r), past(r), fast(r), arg1(r,j), name(j,John)",
                mode,
            );
            assert_eq!(r.outputs, ["john ran fast".to_string()].into());
        }
    }

    #[test]
    fn pruning_never_changes_the_output_set() {
        let g = parse_grammar(TOY).unwrap();
        let outer = outer_of(&g);
        let sem = "s : def(d), dog(d), see(s,d,c), past(s), def(c), cat(c), white(c)";
        let base = run(&g, &outer, sem, PruneMode::None);
        assert!(!base.outputs.is_empty());
        for mode in [PruneMode::Internal, PruneMode::External, PruneMode::Both] {
            let r = run(&g, &outer, sem, mode);
            assert_eq!(r.outputs, base.outputs, "mode {}", mode);
            assert!(r.stats.edges_created <= base.stats.edges_created);
        }
    }

    #[test]
    fn internal_mode_prunes_saw_the_cat() {
        let g = parse_grammar(TOY).unwrap();
        let outer = outer_of(&g);
        let input =
            parse_sem("s : def(d), dog(d), see(s,d,c), past(s), def(c), cat(c), white(c)")
                .unwrap();
        let opts = GenOptions {
            mode: PruneMode::Internal,
            agenda_seed: None,
        };
        let mut buf = Vec::new();
        generate(&g, &outer, &input, &opts, Some(&mut buf)).unwrap();
        let trace = String::from_utf8(buf).unwrap();
        assert!(
            trace
                .lines()
                .any(|l| l.starts_with("PRUNE-INT") && l.ends_with("words=\"saw the cat\"")),
            "trace:\n{}",
            trace
        );
    }

    #[test]
    fn external_mode_prunes_the_incomplete_object_np() {
        let g = parse_grammar(TOY).unwrap();
        let outer = outer_of(&g);
        let input =
            parse_sem("s : def(d), dog(d), see(s,d,c), past(s), def(c), cat(c), white(c)")
                .unwrap();
        let opts = GenOptions {
            mode: PruneMode::External,
            agenda_seed: None,
        };
        let mut buf = Vec::new();
        generate(&g, &outer, &input, &opts, Some(&mut buf)).unwrap();
        let trace = String::from_utf8(buf).unwrap();
        // "the cat" (object np missing its adjective) cannot be bound from
        // outside; the subject "the dog" can, through the verb
        assert!(
            trace
                .lines()
                .any(|l| l.starts_with("PRUNE-EXT") && l.ends_with("words=\"the cat\"")),
            "trace:\n{}",
            trace
        );
        assert!(
            !trace
                .lines()
                .any(|l| l.starts_with("PRUNE-EXT") && l.ends_with("words=\"the dog\"")),
            "trace:\n{}",
            trace
        );
    }

    #[test]
    fn agenda_order_does_not_change_outputs() {
        let g = parse_grammar(TOY).unwrap();
        let outer = outer_of(&g);
        let input = parse_sem("e : def(c), little(c), cat(c), run(e), arg1(e,c), past(e), fast(e)")
            .unwrap();
        let base = generate(
            &g,
            &outer,
            &input,
            &GenOptions {
                mode: PruneMode::Both,
                agenda_seed: None,
            },
            None,
        )
        .unwrap();
        for seed in [1u64, 7, 42] {
            let r = generate(
                &g,
                &outer,
                &input,
                &GenOptions {
                    mode: PruneMode::Both,
                    agenda_seed: Some(seed),
                },
                None,
            )
            .unwrap();
            assert_eq!(r.outputs, base.outputs, "seed {}", seed);
        }
    }
}
