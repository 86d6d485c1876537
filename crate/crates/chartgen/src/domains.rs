//! Off-line compilation of index-binding domain tables.
//!
//! A triple `(L, R, B)` relates two category skeletons: for the inner table,
//! `R` is reachable inside a constituent of shape `L`; for the outer table,
//! `R` is reachable outside a constituent of shape `L`. Each binding pair
//! `⟨p, q⟩` in `B` records that the value at path `p` of `L` is token-shared
//! with the value at path `q` of `R` in every derivation the triple stands
//! for. Tables are computed as fixed points of crossproduct-and-union over
//! the rule equations; skeletonization (restriction to the declared index
//! paths) keeps the universe of signs finite, so the iteration terminates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::avm::{parse_path, parse_sign_into};
use crate::fs::{to_avm, FeatureStructure, FsBuilder, Path};
use crate::grammar::{category_skeletons, daughter_path, mother_path, Grammar};
use crate::scan::{scan, Cursor, ScanError, Tok};

/// Declared index paths plus the set of their non-empty prefixes. Binding
/// pairs only ever mention members of `prefixes`.
#[derive(Debug, Clone)]
pub struct PathCtx {
    pub paths: Vec<Path>,
    pub prefixes: BTreeSet<Path>,
}

impl PathCtx {
    pub fn new(paths: &[Path]) -> PathCtx {
        let mut prefixes = BTreeSet::new();
        for p in paths {
            for i in 1..=p.len() {
                prefixes.insert(Path::from_features(p.features()[..i].to_vec()));
            }
        }
        PathCtx {
            paths: paths.to_vec(),
            prefixes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BindingPair {
    pub left: Path,
    pub right: Path,
}

impl BindingPair {
    pub fn new(left: Path, right: Path) -> BindingPair {
        BindingPair { left, right }
    }
}

impl fmt::Display for BindingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}~{}", self.left, self.right)
    }
}

#[derive(Debug, Clone)]
pub struct Triple {
    pub left: FeatureStructure,
    pub right: FeatureStructure,
    pub bindings: BTreeSet<BindingPair>,
}

impl Triple {
    pub fn new(
        left: FeatureStructure,
        right: FeatureStructure,
        bindings: BTreeSet<BindingPair>,
    ) -> Triple {
        Triple {
            left,
            right,
            bindings,
        }
    }

    /// Set/map key: identical exactly for triples with variant-equal signs
    /// and equal binding sets.
    pub fn key(&self) -> String {
        let pairs: Vec<String> = self.bindings.iter().map(|p| p.to_string()).collect();
        format!(
            "{}|{}|{}",
            self.left.canonical_key(),
            self.right.canonical_key(),
            pairs.join(";")
        )
    }
}

/// True iff `a`'s signs are componentwise at least as general as `b`'s,
/// i.e. `a` can stand in for `b` once their bindings are merged.
fn absorbs(a: &Triple, b: &Triple) -> bool {
    a.left.subsumes(&b.left) && a.right.subsumes(&b.right)
}

/// A set of triples, deduplicated under variant equality of the signs.
#[derive(Debug, Clone, Default)]
pub struct TripleSet {
    map: BTreeMap<String, Triple>,
}

impl TripleSet {
    pub fn new() -> TripleSet {
        TripleSet::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.map.values()
    }

    /// Plain insertion; duplicates (by key) are dropped.
    pub fn insert(&mut self, t: Triple) -> bool {
        let k = t.key();
        if self.map.contains_key(&k) {
            false
        } else {
            self.map.insert(k, t);
            true
        }
    }

    /// Insertion that maintains the absorption-reduced invariant: whenever
    /// an existing triple and the new one have componentwise comparable
    /// signs, they are merged into one triple with the more general signs
    /// and the union of bindings.
    pub fn reduce_insert(&mut self, t: Triple) {
        let mut t = t;
        loop {
            let hit = self
                .map
                .iter()
                .find(|(_, e)| absorbs(e, &t) || absorbs(&t, e))
                .map(|(k, _)| k.clone());
            match hit {
                Some(k) => {
                    let e = self.map.remove(&k).unwrap();
                    t = merge_triples(e, t);
                }
                None => {
                    self.map.insert(t.key(), t);
                    return;
                }
            }
        }
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    /// Triples of `self` whose key does not occur in `other`.
    pub fn minus(&self, other: &TripleSet) -> TripleSet {
        TripleSet {
            map: self
                .map
                .iter()
                .filter(|(k, _)| !other.map.contains_key(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn same_keys(&self, other: &TripleSet) -> bool {
        self.map.len() == other.map.len()
            && self.map.keys().zip(other.map.keys()).all(|(a, b)| a == b)
    }
}

impl FromIterator<Triple> for TripleSet {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> TripleSet {
        let mut s = TripleSet::new();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

fn merge_triples(a: Triple, b: Triple) -> Triple {
    let (general, other) = if absorbs(&a, &b) { (a, b) } else { (b, a) };
    let pairs: BTreeSet<BindingPair> = general
        .bindings
        .union(&other.bindings)
        .cloned()
        .collect();
    Triple {
        left: general.left,
        right: general.right,
        bindings: absorb_pairs(&pairs),
    }
}

/// Absorption-reduced triple set: merges every componentwise-comparable pair.
pub fn reduce<I: IntoIterator<Item = Triple>>(triples: I) -> TripleSet {
    let mut out = TripleSet::new();
    for t in triples {
        out.reduce_insert(t);
    }
    out
}

/// `q` absorbs `r` iff `r` extends both sides of `q` by one common suffix
/// (including the empty suffix): token sharing at `q` already implies the
/// sharing `r` records.
fn pair_absorbs(q: &BindingPair, r: &BindingPair) -> bool {
    match (q.left.strip_prefix(&r.left), q.right.strip_prefix(&r.right)) {
        (Some(s1), Some(s2)) => s1 == s2,
        _ => false,
    }
}

/// Drops every pair that is a common-suffix extension of another pair.
pub fn absorb_pairs(pairs: &BTreeSet<BindingPair>) -> BTreeSet<BindingPair> {
    pairs
        .iter()
        .filter(|r| !pairs.iter().any(|q| q != *r && pair_absorbs(q, r)))
        .cloned()
        .collect()
}

/// Closes a binding set under common-suffix extension within the declared
/// prefixes: `⟨l, r⟩` licenses `⟨l.s, r.s⟩` whenever both extended paths are
/// still prefixes of declared index paths. Chaining through the exact-match
/// pair crossproduct is done on expanded sets so that absorbed pairs still
/// connect.
pub fn expand_pairs(pairs: &BTreeSet<BindingPair>, ctx: &PathCtx) -> BTreeSet<BindingPair> {
    let mut out = pairs.clone();
    for pr in pairs {
        for q in &ctx.prefixes {
            if let Some(suffix) = pr.left.strip_prefix(q) {
                if suffix.is_empty() {
                    continue;
                }
                let r2 = pr.right.join(&suffix);
                if ctx.prefixes.contains(&r2) {
                    out.insert(BindingPair::new(q.clone(), r2));
                }
            }
        }
    }
    out
}

/// Pair crossproduct: `⟨p, q⟩ × ⟨q, r⟩ = ⟨p, r⟩`, requiring the middle paths
/// to match exactly.
pub fn cross_pathpair(a: &BindingPair, b: &BindingPair) -> Option<BindingPair> {
    (a.right == b.left).then(|| BindingPair::new(a.left.clone(), b.right.clone()))
}

/// Triple crossproduct: defined when the middle signs unify and at least one
/// expanded binding pair chains through.
pub fn cross_triple(a: &Triple, b: &Triple, ctx: &PathCtx) -> Option<Triple> {
    a.right.unify(&b.left)?;
    let ea = expand_pairs(&a.bindings, ctx);
    let eb = expand_pairs(&b.bindings, ctx);
    let mut pairs = BTreeSet::new();
    for x in &ea {
        for y in &eb {
            if let Some(p) = cross_pathpair(x, y) {
                pairs.insert(p);
            }
        }
    }
    if pairs.is_empty() {
        return None;
    }
    Some(Triple::new(
        a.left.restrict(&ctx.paths),
        b.right.restrict(&ctx.paths),
        absorb_pairs(&pairs),
    ))
}

/// Elementwise triple crossproduct of two sets, absorption-reduced.
pub fn cross_sets(a: &TripleSet, b: &TripleSet, ctx: &PathCtx) -> TripleSet {
    let mut out = TripleSet::new();
    for x in a.iter() {
        for y in b.iter() {
            if let Some(t) = cross_triple(x, y, ctx) {
                out.reduce_insert(t);
            }
        }
    }
    out
}

/// Union under absorption: componentwise-comparable triples collapse to the
/// more general signs with merged bindings.
pub fn subsume_union(a: &TripleSet, b: &TripleSet) -> TripleSet {
    reduce(a.iter().chain(b.iter()).cloned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Inner,
    Outer,
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableKind::Inner => write!(f, "inner"),
            TableKind::Outer => write!(f, "outer"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DomainTable {
    pub kind: TableKind,
    pub triples: TripleSet,
    pub iterations: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum DomainError {
    #[error("fixed-point iteration cap of {0} exceeded")]
    IterationCap(usize),
}

pub const DEFAULT_MAX_ITER: usize = 100;

/// Iterates `Result := Result ∪≤ (Function × A-new)` to a fixed point,
/// starting from `Result = Argument` and `A-new = Argument`, where `A-new`
/// after each round is the set of triples whose key is new in `Result`.
/// Fails once `cap` rounds have produced new material without converging.
pub fn fixed_point(
    function: &TripleSet,
    argument: &TripleSet,
    ctx: &PathCtx,
    cap: usize,
) -> Result<(TripleSet, usize), DomainError> {
    let mut result = reduce(argument.iter().cloned());
    let mut anew = result.clone();
    let mut iterations = 0usize;
    while !anew.is_empty() {
        if iterations == cap {
            return Err(DomainError::IterationCap(cap));
        }
        iterations += 1;
        let temp = cross_sets(function, &anew, ctx);
        let next = subsume_union(&result, &temp);
        anew = next.minus(&result);
        result = next;
    }
    Ok((result, iterations))
}

/// True iff one more crossproduct round over `table` adds nothing.
pub fn is_closed(table: &TripleSet, function: &TripleSet, ctx: &PathCtx) -> bool {
    let base = reduce(table.iter().cloned());
    let next = subsume_union(&base, &cross_sets(function, &base, ctx));
    next.same_keys(&base)
}

/// All binding pairs between two signs of one structure: prefixes of declared
/// paths, relative to the two sign roots, that reach the same node.
pub fn shared_indices(
    fs: &FeatureStructure,
    left: &Path,
    right: &Path,
    ctx: &PathCtx,
) -> BTreeSet<BindingPair> {
    let mut out = BTreeSet::new();
    for p in &ctx.prefixes {
        let ln = match fs.node_at(&left.join(p)) {
            Some(n) => n,
            None => continue,
        };
        for q in &ctx.prefixes {
            if fs.node_at(&right.join(q)) == Some(ln) {
                out.insert(BindingPair::new(p.clone(), q.clone()));
            }
        }
    }
    out
}

/// One triple `(mother, daughter, shared indices)` per rule daughter with a
/// non-empty shared-index set: the seed and step function of the inner fixed
/// point.
pub fn inner_equations(g: &Grammar, ctx: &PathCtx) -> TripleSet {
    let mut out = TripleSet::new();
    for r in &g.rules {
        for k in 1..=r.arity {
            let si = shared_indices(&r.fs, &mother_path(), &daughter_path(k), ctx);
            if !si.is_empty() {
                out.reduce_insert(Triple::new(
                    r.mother().restrict(&ctx.paths),
                    r.daughter(k).restrict(&ctx.paths),
                    absorb_pairs(&si),
                ));
            }
        }
    }
    out
}

/// The flipped equations `(daughter, mother, shared indices)`: prefixed onto
/// outer facts about a mother they yield outer facts about its daughters.
pub fn outer_equations(g: &Grammar, ctx: &PathCtx) -> TripleSet {
    let mut out = TripleSet::new();
    for r in &g.rules {
        for k in 1..=r.arity {
            let si = shared_indices(&r.fs, &daughter_path(k), &mother_path(), ctx);
            if !si.is_empty() {
                out.reduce_insert(Triple::new(
                    r.daughter(k).restrict(&ctx.paths),
                    r.mother().restrict(&ctx.paths),
                    absorb_pairs(&si),
                ));
            }
        }
    }
    out
}

/// Triples `(d_j, d_k)` for every ordered pair of distinct daughters of one
/// rule: the immediate "outside" relation.
pub fn sister_triples(g: &Grammar, ctx: &PathCtx) -> TripleSet {
    let mut out = TripleSet::new();
    for r in &g.rules {
        for j in 1..=r.arity {
            for k in 1..=r.arity {
                if j == k {
                    continue;
                }
                let si = shared_indices(&r.fs, &daughter_path(j), &daughter_path(k), ctx);
                if !si.is_empty() {
                    out.reduce_insert(Triple::new(
                        r.daughter(j).restrict(&ctx.paths),
                        r.daughter(k).restrict(&ctx.paths),
                        absorb_pairs(&si),
                    ));
                }
            }
        }
    }
    out
}

/// Seed of the outer fixed point: sister pairs extended through the inner
/// table, so the outside sign may be a sister or anything inside one.
pub fn initialise_outer(g: &Grammar, inner: &TripleSet, ctx: &PathCtx) -> TripleSet {
    cross_sets(&sister_triples(g, ctx), inner, ctx)
}

/// Compiles the inner table: fixed point of the rule equations, plus one
/// reflexive triple per category skeleton (a sign trivially reaches itself,
/// which the outer initialisation relies on to keep direct sister facts).
pub fn compile_inner(g: &Grammar, cap: usize) -> Result<DomainTable, DomainError> {
    let ctx = PathCtx::new(&g.paths);
    let eqs = inner_equations(g, &ctx);
    let (mut set, iterations) = fixed_point(&eqs, &eqs, &ctx, cap)?;
    for skel in category_skeletons(g) {
        let pairs: BTreeSet<BindingPair> = ctx
            .prefixes
            .iter()
            .filter(|q| skel.node_at(q).is_some())
            .map(|q| BindingPair::new(q.clone(), q.clone()))
            .collect();
        if !pairs.is_empty() {
            set.insert(Triple::new(skel.clone(), skel, absorb_pairs(&pairs)));
        }
    }
    Ok(DomainTable {
        kind: TableKind::Inner,
        triples: set,
        iterations,
    })
}

/// Compiles the outer table from a previously compiled inner table.
pub fn compile_outer(
    g: &Grammar,
    inner: &DomainTable,
    cap: usize,
) -> Result<DomainTable, DomainError> {
    let ctx = PathCtx::new(&g.paths);
    let init = initialise_outer(g, &inner.triples, &ctx);
    let eqs = outer_equations(g, &ctx);
    let (set, iterations) = fixed_point(&eqs, &init, &ctx, cap)?;
    Ok(DomainTable {
        kind: TableKind::Outer,
        triples: set,
        iterations,
    })
}

/// Text format, one triple per line:
///
/// ```text
/// domaintable v1 kind=outer iterations=3
/// [cat=np, sem.arg1=$0] | [cat=vtra, ...] | sem.arg1~sem.arg2 ; sem.arg1~sem.arg3
/// ```
pub fn serialize_table(t: &DomainTable) -> String {
    let mut out = format!(
        "domaintable v1 kind={} iterations={}\n",
        t.kind, t.iterations
    );
    for tr in t.triples.iter() {
        let pairs: Vec<String> = tr.bindings.iter().map(|p| p.to_string()).collect();
        out.push_str(&format!(
            "{} | {} | {}\n",
            to_avm(&tr.left),
            to_avm(&tr.right),
            pairs.join(" ; ")
        ));
    }
    out
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: {err}")]
    Syntax { line: usize, err: ScanError },
    #[error("{0}")]
    Malformed(String),
    #[error("line {line}: binding path '{path}' is not a prefix of a declared index path")]
    BadPath { line: usize, path: String },
}

/// Parses a serialized table, validating every binding path against the
/// declared index paths of the grammar the table will be used with.
pub fn load_table(text: &str, paths: &[Path]) -> Result<DomainTable, TableError> {
    let ctx = PathCtx::new(paths);
    let mut kind: Option<TableKind> = None;
    let mut iterations = 0usize;
    let mut triples = TripleSet::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let stripped = line.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        if !saw_header {
            let fields: Vec<&str> = stripped.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "domaintable" || fields[1] != "v1" {
                return Err(TableError::Malformed(format!(
                    "line {}: expected header 'domaintable v1 kind=... iterations=...'",
                    lineno
                )));
            }
            kind = match fields[2] {
                "kind=inner" => Some(TableKind::Inner),
                "kind=outer" => Some(TableKind::Outer),
                other => {
                    return Err(TableError::Malformed(format!(
                        "line {}: bad kind field '{}'",
                        lineno, other
                    )))
                }
            };
            iterations = fields[3]
                .strip_prefix("iterations=")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    TableError::Malformed(format!(
                        "line {}: bad iterations field '{}'",
                        lineno, fields[3]
                    ))
                })?;
            saw_header = true;
            continue;
        }
        let toks = scan(stripped).map_err(|err| TableError::Syntax { line: lineno, err })?;
        let mut cur = Cursor::new(toks);
        let left = parse_table_sign(&mut cur).map_err(|err| TableError::Syntax {
            line: lineno,
            err,
        })?;
        cur.expect(&Tok::Pipe)
            .map_err(|err| TableError::Syntax { line: lineno, err })?;
        let right = parse_table_sign(&mut cur).map_err(|err| TableError::Syntax {
            line: lineno,
            err,
        })?;
        cur.expect(&Tok::Pipe)
            .map_err(|err| TableError::Syntax { line: lineno, err })?;
        let mut bindings = BTreeSet::new();
        loop {
            let l = parse_path(&mut cur).map_err(|err| TableError::Syntax {
                line: lineno,
                err,
            })?;
            cur.expect(&Tok::Tilde)
                .map_err(|err| TableError::Syntax { line: lineno, err })?;
            let r = parse_path(&mut cur).map_err(|err| TableError::Syntax {
                line: lineno,
                err,
            })?;
            for p in [&l, &r] {
                if !ctx.prefixes.contains(p) {
                    return Err(TableError::BadPath {
                        line: lineno,
                        path: p.to_string(),
                    });
                }
            }
            bindings.insert(BindingPair::new(l, r));
            if !cur.eat(&Tok::Semi) {
                break;
            }
        }
        if !cur.at_end() {
            return Err(TableError::Syntax {
                line: lineno,
                err: cur.err("trailing input after triple"),
            });
        }
        triples.insert(Triple::new(left, right, bindings));
    }
    let kind = kind.ok_or_else(|| TableError::Malformed("missing table header".to_string()))?;
    Ok(DomainTable {
        kind,
        triples,
        iterations,
    })
}

fn parse_table_sign(cur: &mut Cursor) -> Result<FeatureStructure, ScanError> {
    let mut b = FsBuilder::new();
    parse_sign_into(cur, &mut b, &Path::root(), None)?;
    b.finish().map_err(|e| cur.err(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avm::parse_avm;
    use crate::grammar::parse_grammar;

    const TOY: &str = include_str!("../grammars/toy.gram");

    fn p(s: &str) -> Path {
        Path::parse(s).unwrap()
    }

    fn pair(l: &str, r: &str) -> BindingPair {
        BindingPair::new(p(l), p(r))
    }

    fn ctx3() -> PathCtx {
        PathCtx::new(&[p("sem.arg1"), p("sem.arg2"), p("sem.arg3")])
    }

    fn t(l: &str, r: &str, pairs: &[(&str, &str)]) -> Triple {
        Triple::new(
            parse_avm(l).unwrap(),
            parse_avm(r).unwrap(),
            pairs.iter().map(|(a, b)| pair(a, b)).collect(),
        )
    }

    fn cat_triples<'a>(
        set: &'a TripleSet,
        lcat: &str,
        rcat: &str,
    ) -> Vec<&'a Triple> {
        let cat = p("cat");
        set.iter()
            .filter(|tr| {
                tr.left.atom_at(&cat) == Some(lcat) && tr.right.atom_at(&cat) == Some(rcat)
            })
            .collect()
    }

    fn has_pair(triples: &[&Triple], l: &str, r: &str, ctx: &PathCtx) -> bool {
        triples
            .iter()
            .any(|tr| expand_pairs(&tr.bindings, ctx).contains(&pair(l, r)))
    }

    #[test]
    fn shared_indices_on_np_rule() {
        let g = parse_grammar(TOY).unwrap();
        let ctx = ctx3();
        let r = g.rules.iter().find(|r| r.name == "np_det_n1").unwrap();
        let si = shared_indices(&r.fs, &mother_path(), &daughter_path(1), &ctx);
        assert_eq!(si, [pair("sem.arg1", "sem.arg1")].into());
        let si2 = shared_indices(&r.fs, &mother_path(), &daughter_path(2), &ctx);
        assert!(si2.contains(&pair("sem", "sem")));
        assert!(si2.contains(&pair("sem.arg1", "sem.arg1")));
    }

    #[test]
    fn cross_pathpair_is_exact() {
        assert_eq!(
            cross_pathpair(&pair("sem.arg1", "sem.arg2"), &pair("sem.arg2", "sem.arg1")),
            Some(pair("sem.arg1", "sem.arg1"))
        );
        assert_eq!(
            cross_pathpair(&pair("sem.arg1", "sem.arg2"), &pair("sem.arg3", "sem.arg1")),
            None
        );
        // prefix relation is not enough: the middle paths must be identical
        assert_eq!(
            cross_pathpair(&pair("sem.arg1", "sem"), &pair("sem.arg2", "sem.arg1")),
            None
        );
    }

    #[test]
    fn expansion_recovers_absorbed_pairs() {
        let ctx = ctx3();
        let e = expand_pairs(&[pair("sem", "sem")].into(), &ctx);
        assert!(e.contains(&pair("sem.arg1", "sem.arg1")));
        assert!(e.contains(&pair("sem.arg3", "sem.arg3")));
        assert!(e.contains(&pair("sem", "sem")));
        // full paths have no extensions
        let e2 = expand_pairs(&[pair("sem.arg1", "sem.arg2")].into(), &ctx);
        assert_eq!(e2, [pair("sem.arg1", "sem.arg2")].into());
    }

    #[test]
    fn pair_absorption() {
        let pairs: BTreeSet<BindingPair> = [
            pair("sem", "sem"),
            pair("sem.arg1", "sem.arg1"),
            pair("sem.arg1", "sem.arg2"),
        ]
        .into();
        let r = absorb_pairs(&pairs);
        assert_eq!(r, [pair("sem", "sem"), pair("sem.arg1", "sem.arg2")].into());
    }

    #[test]
    fn cross_triple_chains_vp_pp_p() {
        let ctx = ctx3();
        let a = t(
            "[cat=vp, sem.arg1=$W]",
            "[cat=pp, sem.arg1=$X]",
            &[("sem.arg1", "sem.arg1")],
        );
        let b = t(
            "[cat=pp, sem.arg1=$Y]",
            "[cat=p, sem.arg1=$Z]",
            &[("sem.arg1", "sem.arg1")],
        );
        let c = cross_triple(&a, &b, &ctx).unwrap();
        assert_eq!(c.left.atom_at(&p("cat")), Some("vp"));
        assert_eq!(c.right.atom_at(&p("cat")), Some("p"));
        assert_eq!(c.bindings, [pair("sem.arg1", "sem.arg1")].into());
    }

    #[test]
    fn cross_triple_fails_on_clash_or_disjoint_bindings() {
        let ctx = ctx3();
        let a = t("[cat=vp]", "[cat=pp]", &[("sem.arg1", "sem.arg1")]);
        let b = t("[cat=np]", "[cat=p]", &[("sem.arg1", "sem.arg1")]);
        assert!(cross_triple(&a, &b, &ctx).is_none()); // pp vs np
        let c = t("[cat=pp]", "[cat=p]", &[("sem.arg2", "sem.arg1")]);
        assert!(cross_triple(&a, &c, &ctx).is_none()); // arg1 vs arg2
    }

    #[test]
    fn cross_triple_chains_through_expansion() {
        // an absorbed whole-sem pair still connects path-specific pairs
        let ctx = ctx3();
        let a = t(
            "[cat=np]",
            "[cat=vp]",
            &[("sem.arg1", "sem.arg2")],
        );
        let b = t("[cat=vp]", "[cat=vtra]", &[("sem", "sem")]);
        let c = cross_triple(&a, &b, &ctx).unwrap();
        assert_eq!(c.bindings, [pair("sem.arg1", "sem.arg2")].into());
    }

    #[test]
    fn subsume_union_merges_comparable_triples() {
        let a: TripleSet = [t(
            "[cat=vp, sem.arg1=$W]",
            "[cat=p, sem.arg1=$X]",
            &[("sem.arg1", "sem.arg1")],
        )]
        .into_iter()
        .collect();
        let b: TripleSet = [t(
            "[cat=vp, sem.arg1=$W]",
            "[cat=p, sem.arg1=$X]",
            &[("sem.arg2", "sem.arg2")],
        )]
        .into_iter()
        .collect();
        let u = subsume_union(&a, &b);
        assert_eq!(u.len(), 1);
        let tr = u.iter().next().unwrap();
        assert_eq!(
            tr.bindings,
            [pair("sem.arg1", "sem.arg1"), pair("sem.arg2", "sem.arg2")].into()
        );
    }

    #[test]
    fn subsume_union_identities() {
        let a: TripleSet = [t("[cat=np]", "[cat=det]", &[("sem.arg1", "sem.arg1")])]
            .into_iter()
            .collect();
        let e = TripleSet::new();
        assert!(subsume_union(&a, &e).same_keys(&reduce(a.iter().cloned())));
        assert!(subsume_union(&a, &a).same_keys(&reduce(a.iter().cloned())));
    }

    #[test]
    fn subsume_union_covers_inputs() {
        // every input triple is absorbed by some output triple
        let a: TripleSet = [
            t("[cat=np]", "[cat=det]", &[("sem.arg1", "sem.arg1")]),
            t("[cat=np, sem.arg1=$X]", "[cat=det]", &[("sem", "sem")]),
            t("[cat=vp]", "[cat=adv]", &[("sem.arg1", "sem.arg1")]),
        ]
        .into_iter()
        .collect();
        let u = subsume_union(&a, &TripleSet::new());
        for tr in a.iter() {
            assert!(u.iter().any(|o| absorbs(o, tr)));
        }
    }

    #[test]
    fn fixed_point_of_empty_function_is_argument() {
        let ctx = ctx3();
        let arg: TripleSet = [t("[cat=np]", "[cat=det]", &[("sem.arg1", "sem.arg1")])]
            .into_iter()
            .collect();
        let (r, iters) = fixed_point(&TripleSet::new(), &arg, &ctx, 10).unwrap();
        assert_eq!(iters, 1);
        assert!(r.same_keys(&reduce(arg.iter().cloned())));
    }

    #[test]
    fn fixed_point_cap_is_an_error() {
        let g = parse_grammar(TOY).unwrap();
        let ctx = PathCtx::new(&g.paths);
        let eqs = inner_equations(&g, &ctx);
        assert!(matches!(
            fixed_point(&eqs, &eqs, &ctx, 0),
            Err(DomainError::IterationCap(0))
        ));
    }

    #[test]
    fn inner_table_contains_transitive_domains() {
        let g = parse_grammar(TOY).unwrap();
        let ctx = PathCtx::new(&g.paths);
        let inner = compile_inner(&g, DEFAULT_MAX_ITER).unwrap();
        // direct: determiner inside noun phrase, index shared
        assert!(has_pair(
            &cat_triples(&inner.triples, "np", "det"),
            "sem.arg1",
            "sem.arg1",
            &ctx
        ));
        // chained: determiner reachable from the sentence node, binding the
        // subject index (s carries it at sem.arg2)
        assert!(has_pair(
            &cat_triples(&inner.triples, "s", "det"),
            "sem.arg2",
            "sem.arg1",
            &ctx
        ));
        // the fixed point proper is closed under one more round
        let eqs = inner_equations(&g, &ctx);
        let (fp, _) = fixed_point(&eqs, &eqs, &ctx, DEFAULT_MAX_ITER).unwrap();
        assert!(is_closed(&fp, &eqs, &ctx));
    }

    #[test]
    fn outer_table_binds_subject_and_object_through_the_verb() {
        let g = parse_grammar(TOY).unwrap();
        let ctx = PathCtx::new(&g.paths);
        let inner = compile_inner(&g, DEFAULT_MAX_ITER).unwrap();
        let outer = compile_outer(&g, &inner, DEFAULT_MAX_ITER).unwrap();
        let np_vtra = cat_triples(&outer.triples, "np", "vtra");
        // a noun phrase's index is bindable by a transitive verb outside it,
        // both as subject (verb's arg2) and as object (verb's arg3)
        assert!(has_pair(&np_vtra, "sem.arg1", "sem.arg2", &ctx));
        assert!(has_pair(&np_vtra, "sem.arg1", "sem.arg3", &ctx));
        // adjectives only modify nouns below N1, so nothing outside a
        // complete noun phrase can bind its index through an adjective
        assert!(cat_triples(&outer.triples, "np", "adj").is_empty());
        // a verb phrase's object index (sem.arg3) is not bindable from
        // outside the verb phrase at all
        let vp_out: Vec<&Triple> = outer
            .triples
            .iter()
            .filter(|tr| tr.left.atom_at(&p("cat")) == Some("vp"))
            .collect();
        assert!(!vp_out.iter().any(|tr| {
            expand_pairs(&tr.bindings, &ctx)
                .iter()
                .any(|pr| pr.left == p("sem.arg3"))
        }));
        // but its event index is, via an adverb
        assert!(has_pair(
            &cat_triples(&outer.triples, "vp", "adv"),
            "sem.arg1",
            "sem.arg1",
            &ctx
        ));
        let eqs = outer_equations(&g, &ctx);
        assert!(is_closed(&outer.triples, &eqs, &ctx));
    }

    #[test]
    fn table_round_trips_through_text() {
        let g = parse_grammar(TOY).unwrap();
        let inner = compile_inner(&g, DEFAULT_MAX_ITER).unwrap();
        let outer = compile_outer(&g, &inner, DEFAULT_MAX_ITER).unwrap();
        for table in [&inner, &outer] {
            let text = serialize_table(table);
            let back = load_table(&text, &g.paths).unwrap();
            assert_eq!(back.kind, table.kind);
            assert_eq!(back.iterations, table.iterations);
            assert!(back.triples.same_keys(&table.triples));
        }
    }

    #[test]
    fn load_table_rejects_bad_paths_and_headers() {
        let paths = [p("sem.arg1")];
        let bad = "domaintable v1 kind=outer iterations=1\n[cat=np] | [cat=v] | sem.argx~sem.arg1\n";
        assert!(matches!(
            load_table(bad, &paths),
            Err(TableError::BadPath { .. })
        ));
        assert!(matches!(
            load_table("domaintable v2 kind=outer iterations=1\n", &paths),
            Err(TableError::Malformed(_))
        ));
        assert!(load_table("", &paths).is_err());
    }
}
