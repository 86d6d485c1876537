//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test -- --nocapture`).

use std::collections::BTreeSet;
use std::time::Instant;

use proptest::prelude::*;

use chartgen::domains::{
    compile_inner, compile_outer, cross_pathpair, fixed_point, inner_equations, is_closed,
    outer_equations, subsume_union, BindingPair, DomainTable, PathCtx, Triple, TripleSet,
    DEFAULT_MAX_ITER,
};
use chartgen::fs::{FeatureStructure, FsBuilder, Path};
use chartgen::generate::{generate, lex_lookup, GenOptions, GenResult, PruneMode};
use chartgen::grammar::{parse_grammar, parse_sem, Grammar, SemInput};
use chartgen::oracle::check_table;

const TOY: &str = include_str!("../grammars/toy.gram");
const MINIMAL: &str = include_str!("../grammars/minimal.gram");
const CORPUS: &str = include_str!("../grammars/corpus.sem");

const RUN_FAST: &str = "r : run(r), past(r), fast(r), arg1(r,j), name(j,John)";
const LF3: &str = "s : def(d), dog(d), see(s,d,c), past(s), def(c), cat(c), white(c)";

fn toy() -> (Grammar, DomainTable) {
    let g = parse_grammar(TOY).unwrap();
    let inner = compile_inner(&g, DEFAULT_MAX_ITER).unwrap();
    let outer = compile_outer(&g, &inner, DEFAULT_MAX_ITER).unwrap();
    (g, outer)
}

fn run(g: &Grammar, outer: &DomainTable, input: &SemInput, mode: PruneMode) -> GenResult {
    let opts = GenOptions {
        mode,
        agenda_seed: None,
    };
    generate(g, outer, input, &opts, None).unwrap()
}

fn run_traced(
    g: &Grammar,
    outer: &DomainTable,
    input: &SemInput,
    mode: PruneMode,
) -> (GenResult, String) {
    let opts = GenOptions {
        mode,
        agenda_seed: None,
    };
    let mut buf = Vec::new();
    let r = generate(g, outer, input, &opts, Some(&mut buf)).unwrap();
    (r, String::from_utf8(buf).unwrap())
}

fn corpus_inputs() -> Vec<SemInput> {
    CORPUS
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| parse_sem(l).unwrap())
        .collect()
}

const ALL_MODES: [PruneMode; 4] = [
    PruneMode::None,
    PruneMode::Internal,
    PruneMode::External,
    PruneMode::Both,
];

#[test]
fn criterion_1_worked_example_fidelity() {
    let start = Instant::now();
    let (g, outer) = toy();
    let input = parse_sem(RUN_FAST).unwrap();
    let seeds = lex_lookup(&g, &input).unwrap();
    assert_eq!(seeds.len(), 3, "expected exactly three lexical edges");
    let cat = Path::parse("cat").unwrap();
    let arg1 = Path::parse("sem.arg1").unwrap();
    let arg2 = Path::parse("sem.arg2").unwrap();
    let find = |c: &str| seeds.iter().find(|s| s.sign.atom_at(&cat) == Some(c)).unwrap();
    let np = find("np");
    assert_eq!(np.sign.atom_at(&arg1), Some("j")); // np(j)
    let vp = find("vp");
    assert_eq!(vp.sign.atom_at(&arg1), Some("r")); // vp(r,j)
    assert_eq!(vp.sign.atom_at(&arg2), Some("j"));
    let adv = find("adv");
    assert_eq!(adv.sign.atom_at(&arg1), Some("r")); // adv(r)
    for mode in ALL_MODES {
        let r = run(&g, &outer, &input, mode);
        assert_eq!(
            r.outputs,
            ["john ran fast".to_string()].into(),
            "mode {}",
            mode
        );
    }
    assert!(start.elapsed().as_secs() < 1);
    println!("criterion 1 (worked-example fidelity): PASS");
}

#[test]
fn criterion_2_internal_validation_discards_saw_the_cat() {
    let start = Instant::now();
    let (g, outer) = toy();
    let input = parse_sem(LF3).unwrap();
    let (_, trace) = run_traced(&g, &outer, &input, PruneMode::Internal);
    assert!(
        trace
            .lines()
            .any(|l| l.starts_with("PRUNE-INT") && l.ends_with("words=\"saw the cat\"")),
        "no PRUNE-INT for \"saw the cat\" in trace:\n{}",
        trace
    );
    assert!(start.elapsed().as_secs() < 1);
    println!("criterion 2 (internal validation): PASS");
}

#[test]
fn criterion_3_external_validation_discards_the_cat() {
    let start = Instant::now();
    let (g, outer) = toy();
    let input = parse_sem(LF3).unwrap();
    let (_, trace) = run_traced(&g, &outer, &input, PruneMode::External);
    assert!(
        trace
            .lines()
            .any(|l| l.starts_with("PRUNE-EXT") && l.ends_with("words=\"the cat\"")),
        "no PRUNE-EXT for \"the cat\" in trace:\n{}",
        trace
    );
    assert!(start.elapsed().as_secs() < 1);
    println!("criterion 3 (external validation): PASS");
}

#[test]
fn criterion_4_pruning_safety_over_corpus() {
    let start = Instant::now();
    let (g, outer) = toy();
    let inputs = corpus_inputs();
    assert_eq!(inputs.len(), 10);
    for input in &inputs {
        let words = input
            .literals
            .len();
        assert!((5..=13).contains(&words), "corpus sizing: {}", input);
        let base = run(&g, &outer, input, PruneMode::None);
        assert!(!base.outputs.is_empty(), "no output for {}", input);
        for mode in ALL_MODES {
            let r = run(&g, &outer, input, mode);
            assert_eq!(r.outputs, base.outputs, "mode {} on {}", mode, input);
        }
    }
    assert!(start.elapsed().as_secs() < 30);
    println!("criterion 4 (pruning safety): PASS");
}

#[test]
fn criterion_5_edge_reduction_direction_and_magnitude() {
    let start = Instant::now();
    let (g, outer) = toy();
    for input in &corpus_inputs() {
        let none = run(&g, &outer, input, PruneMode::None);
        let both = run(&g, &outer, input, PruneMode::Both);
        assert!(
            both.stats.edges_created <= none.stats.edges_created,
            "pruning grew the chart on {}",
            input
        );
        let reduction = 100.0
            * (none.stats.edges_created - both.stats.edges_created) as f64
            / none.stats.edges_created as f64;
        let text = input.to_string();
        if text.contains("fancy(k)") {
            // the long adjectival/PP sentence: best case
            assert!(reduction >= 30.0, "only {:.0}% on {}", reduction, input);
        }
        if text.contains("employ(e,m,w)") {
            // the null case
            assert!(reduction <= 10.0, "{:.0}% on {}", reduction, input);
        }
    }
    assert!(start.elapsed().as_secs() < 60);
    println!("criterion 5 (edge reduction): PASS");
}

#[test]
fn criterion_6_domain_soundness_at_depth_4() {
    let start = Instant::now();
    let g = parse_grammar(TOY).unwrap();
    let inner = compile_inner(&g, DEFAULT_MAX_ITER).unwrap();
    let outer = compile_outer(&g, &inner, DEFAULT_MAX_ITER).unwrap();
    for table in [&inner, &outer] {
        let report = check_table(&g, table, 4);
        assert!(report.trees > 0 && report.checks > 0);
        assert!(
            report.ok(),
            "{} table: {} unlicensed binding(s), e.g.\n{}",
            table.kind,
            report.failures.len(),
            report.failures.join("\n")
        );
    }
    assert!(start.elapsed().as_secs() < 60);
    println!("criterion 6 (domain soundness): PASS");
}

#[test]
fn criterion_7_fixed_point_integrity() {
    let start = Instant::now();
    for text in [TOY, MINIMAL] {
        let g = parse_grammar(text).unwrap();
        let ctx = PathCtx::new(&g.paths);
        let inner = compile_inner(&g, 100).unwrap();
        let outer = compile_outer(&g, &inner, 100).unwrap();
        assert!(inner.iterations <= 100 && outer.iterations <= 100);
        let ieqs = inner_equations(&g, &ctx);
        let (core, _) = fixed_point(&ieqs, &ieqs, &ctx, 100).unwrap();
        assert!(is_closed(&core, &ieqs, &ctx), "inner not closed");
        let oeqs = outer_equations(&g, &ctx);
        assert!(is_closed(&outer.triples, &oeqs, &ctx), "outer not closed");
    }
    assert!(start.elapsed().as_secs() < 10);
    println!("criterion 7 (fixed-point integrity): PASS");
}

#[test]
fn criterion_9_agenda_order_independence() {
    let (g, outer) = toy();
    for sem in [RUN_FAST, LF3] {
        let input = parse_sem(sem).unwrap();
        assert!(input.literals.len() <= 7);
        let base = run(&g, &outer, &input, PruneMode::Both);
        for seed in 0..20u64 {
            let opts = GenOptions {
                mode: PruneMode::Both,
                agenda_seed: Some(seed),
            };
            let r = generate(&g, &outer, &input, &opts, None).unwrap();
            assert_eq!(r.outputs, base.outputs, "seed {} on {}", seed, sem);
            assert_eq!(
                r.inactive_edges, base.inactive_edges,
                "inactive-edge count diverged, seed {} on {}",
                seed, sem
            );
        }
    }
    println!("criterion 9 (agenda-order independence): PASS");
}

// ---------------------------------------------------------------------------
// criterion 8: algebraic property suite, 1000 randomized cases per property
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Constraint {
    Atom(Path, &'static str),
    Var(Path, &'static str),
}

fn raw_path(max_len: usize) -> impl Strategy<Value = Path> {
    prop::collection::vec(prop_oneof![Just("f"), Just("g"), Just("h")], 1..=max_len)
        .prop_map(|v| Path::parse(&v.join(".")).unwrap())
}

fn constraint_strategy() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        (raw_path(3), prop_oneof![Just("a"), Just("b")])
            .prop_map(|(p, a)| Constraint::Atom(p, a)),
        (raw_path(3), prop_oneof![Just("X"), Just("Y"), Just("Z")])
            .prop_map(|(p, v)| Constraint::Var(p, v)),
    ]
}

fn build_fs(cons: &[Constraint]) -> Option<FeatureStructure> {
    let mut b = FsBuilder::new();
    for c in cons {
        let r = match c {
            Constraint::Atom(p, a) => b.set_atom(p, a),
            Constraint::Var(p, v) => b.set_var(p, v),
        };
        if r.is_err() {
            return None;
        }
    }
    b.finish().ok()
}

fn fs_strategy() -> impl Strategy<Value = FeatureStructure> {
    prop::collection::vec(constraint_strategy(), 0..=6)
        .prop_filter_map("inconsistent constraints", |cons| build_fs(&cons))
}

fn path_strategy() -> impl Strategy<Value = Path> {
    raw_path(2)
}

fn pair_strategy() -> impl Strategy<Value = BindingPair> {
    (path_strategy(), path_strategy()).prop_map(|(l, r)| BindingPair::new(l, r))
}

fn triple_strategy() -> impl Strategy<Value = Triple> {
    (
        fs_strategy(),
        fs_strategy(),
        prop::collection::btree_set(pair_strategy(), 1..=3),
    )
        .prop_map(|(l, r, b)| Triple::new(l, r, b))
}

fn variant_eq_opt(a: &Option<FeatureStructure>, b: &Option<FeatureStructure>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x.variant_equal(y),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn prop_unify_commutative(a in fs_strategy(), b in fs_strategy()) {
        prop_assert!(variant_eq_opt(&a.unify(&b), &b.unify(&a)));
    }

    #[test]
    fn prop_unify_idempotent(a in fs_strategy()) {
        let u = a.unify(&a);
        prop_assert!(u.is_some());
        prop_assert!(u.unwrap().variant_equal(&a));
    }

    #[test]
    fn prop_subsumption_partial_order(a in fs_strategy(), b in fs_strategy(), c in fs_strategy()) {
        // reflexivity
        prop_assert!(a.subsumes(&a));
        // antisymmetry up to variant equality
        if a.subsumes(&b) && b.subsumes(&a) {
            prop_assert!(a.variant_equal(&b));
        }
        // transitivity along a subsumption chain built by unification
        if let Some(u1) = a.unify(&b) {
            prop_assert!(a.subsumes(&u1));
            if let Some(u2) = u1.unify(&c) {
                prop_assert!(u1.subsumes(&u2));
                prop_assert!(a.subsumes(&u2));
            }
        }
    }

    #[test]
    fn prop_subsumes_implies_unify(a in fs_strategy(), b in fs_strategy()) {
        if a.subsumes(&b) {
            let u = a.unify(&b);
            prop_assert!(u.is_some());
            prop_assert!(u.unwrap().variant_equal(&b));
        }
    }

    #[test]
    fn prop_cross_pathpair_chaining(p in path_strategy(), q in path_strategy(),
                                    r in path_strategy(), q2 in path_strategy()) {
        let ab = BindingPair::new(p.clone(), q.clone());
        let bc = BindingPair::new(q2.clone(), r.clone());
        let crossed = cross_pathpair(&ab, &bc);
        if q == q2 {
            prop_assert_eq!(crossed, Some(BindingPair::new(p, r)));
        } else {
            prop_assert_eq!(crossed, None);
        }
    }

    #[test]
    fn prop_subsume_union_covers_inputs(
        xs in prop::collection::vec(triple_strategy(), 0..=4),
        ys in prop::collection::vec(triple_strategy(), 0..=4),
    ) {
        let a: TripleSet = xs.iter().cloned().collect();
        let b: TripleSet = ys.iter().cloned().collect();
        let u = subsume_union(&a, &b);
        // a base pair implies every extension of itself by a common suffix
        let implies = |base: &BindingPair, p: &BindingPair| {
            match (base.left.strip_prefix(&p.left), base.right.strip_prefix(&p.right)) {
                (Some(sl), Some(sr)) => sl == sr,
                _ => false,
            }
        };
        for t in a.iter().chain(b.iter()) {
            let covered = u.iter().any(|o| {
                o.left.subsumes(&t.left)
                    && o.right.subsumes(&t.right)
                    && t.bindings
                        .iter()
                        .all(|p| o.bindings.iter().any(|base| implies(base, p)))
            });
            prop_assert!(covered, "uncovered triple");
        }
    }
}

#[test]
fn criterion_8_property_suite_marker() {
    // the six proptest targets above each run 1000 cases; this marker line
    // reports the criterion alongside the others
    let indices: BTreeSet<usize> = (0..6).collect();
    assert_eq!(indices.len(), 6);
    println!("criterion 8 (algebraic property suite): PASS");
}
