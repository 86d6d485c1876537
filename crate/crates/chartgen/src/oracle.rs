//! Independent soundness check for compiled domain tables.
//!
//! Enumerates every derivation tree of the grammar up to a depth bound,
//! building one feature structure per tree by grafting rule instances into
//! daughter slots. Every token sharing the tree exhibits between two signs in
//! the relation a table claims to cover (descendant for the inner table,
//! outside leaf for the outer table) must be licensed by some triple of that
//! table. Unlicensed sharing means the table would let the generator prune a
//! viable edge.

use crate::domains::{expand_pairs, BindingPair, DomainTable, PathCtx, TableKind};
use crate::fs::{FeatureStructure, Path};
use crate::grammar::{daughter_path, mother_path, Grammar};

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub trees: usize,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl OracleReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

const MAX_REPORTED_FAILURES: usize = 20;

#[derive(Clone)]
struct TreeNode {
    /// Where the constituent's sign lives in the tree structure.
    sign: Path,
    /// Dominance scope: a constituent dominates exactly the nodes whose
    /// scope it prefixes. For an expanded node with sign at `R.%m` the scope
    /// is `R`; a leaf's scope is its own slot path.
    scope: Path,
    leaf: bool,
}

struct Tree {
    fs: FeatureStructure,
    nodes: Vec<TreeNode>,
}

fn enumerate_trees(g: &Grammar, depth: usize) -> Vec<Tree> {
    let mut out = Vec::new();
    for r in &g.rules {
        let nodes = vec![TreeNode {
            sign: mother_path(),
            scope: Path::root(),
            leaf: false,
        }];
        let pending: Vec<(Path, usize)> = (1..=r.arity)
            .map(|k| (daughter_path(k), depth.saturating_sub(1)))
            .collect();
        grow(g, r.fs.clone(), nodes, pending, &mut out);
    }
    out
}

fn grow(
    g: &Grammar,
    fs: FeatureStructure,
    nodes: Vec<TreeNode>,
    mut pending: Vec<(Path, usize)>,
    out: &mut Vec<Tree>,
) {
    let (path, d) = match pending.pop() {
        Some(p) => p,
        None => {
            out.push(Tree { fs, nodes });
            return;
        }
    };
    let mut as_leaf = nodes.clone();
    as_leaf.push(TreeNode {
        sign: path.clone(),
        scope: path.clone(),
        leaf: true,
    });
    grow(g, fs.clone(), as_leaf, pending.clone(), out);
    if d == 0 {
        return;
    }
    for r in &g.rules {
        if let Some(fs2) = fs.graft(&path, &r.fs, &mother_path()) {
            let mut nodes2 = nodes.clone();
            nodes2.push(TreeNode {
                sign: path.join(&mother_path()),
                scope: path.clone(),
                leaf: false,
            });
            let mut pending2 = pending.clone();
            for k in 1..=r.arity {
                pending2.push((path.join(&daughter_path(k)), d - 1));
            }
            grow(g, fs2, nodes2, pending2, out);
        }
    }
}

/// Checks one table against all trees up to `depth`. For an inner table the
/// covered relation is (constituent, constituent in its subtree, itself
/// included); for an outer table it is (constituent, leaf in a disjoint
/// subtree).
pub fn check_table(g: &Grammar, table: &DomainTable, depth: usize) -> OracleReport {
    let ctx = PathCtx::new(&g.paths);
    let trees = enumerate_trees(g, depth);
    let mut checks = 0usize;
    let mut failures = Vec::new();
    let cat = Path::parse("cat").unwrap();
    let expanded: Vec<_> = table
        .triples
        .iter()
        .map(|t| (t, expand_pairs(&t.bindings, &ctx)))
        .collect();
    // licensing depends only on the two skeletons and the pair, so memoize
    // across trees (the skeleton universe is small)
    let mut memo: std::collections::HashMap<(String, String, BindingPair), bool> =
        std::collections::HashMap::new();
    for (ti, tree) in trees.iter().enumerate() {
        let skels: Vec<FeatureStructure> = tree
            .nodes
            .iter()
            .map(|n| tree.fs.sub_at(&n.sign).expect("sign path").restrict(&g.paths))
            .collect();
        for (i, nn) in tree.nodes.iter().enumerate() {
            for (j, ln) in tree.nodes.iter().enumerate() {
                let in_relation = match table.kind {
                    TableKind::Inner => nn.scope.is_prefix_of(&ln.scope),
                    TableKind::Outer => {
                        ln.leaf
                            && !nn.scope.is_prefix_of(&ln.scope)
                            && !ln.scope.is_prefix_of(&nn.scope)
                    }
                };
                if !in_relation {
                    continue;
                }
                for p in &ctx.prefixes {
                    for q in &ctx.prefixes {
                        if !tree.fs.token_identical(&nn.sign.join(p), &ln.sign.join(q)) {
                            continue;
                        }
                        checks += 1;
                        let want = BindingPair::new(p.clone(), q.clone());
                        let memo_key = (
                            skels[i].canonical_key(),
                            skels[j].canonical_key(),
                            want.clone(),
                        );
                        let licensed = *memo.entry(memo_key).or_insert_with(|| {
                            expanded.iter().any(|(t, pairs)| {
                                pairs.contains(&want)
                                    && t.left.unify(&skels[i]).is_some()
                                    && t.right.unify(&skels[j]).is_some()
                            })
                        });
                        if !licensed && failures.len() < MAX_REPORTED_FAILURES {
                            failures.push(format!(
                                "tree {}: {} sharing {} between cat={} and cat={} is unlicensed",
                                ti,
                                table.kind,
                                want,
                                skels[i].atom_at(&cat).unwrap_or("?"),
                                skels[j].atom_at(&cat).unwrap_or("?"),
                            ));
                        } else if !licensed {
                            failures.push(String::new());
                        }
                    }
                }
            }
        }
    }
    failures.retain(|f| !f.is_empty());
    OracleReport {
        trees: trees.len(),
        checks,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{
        compile_inner, compile_outer, Triple, TripleSet, DEFAULT_MAX_ITER,
    };
    use crate::grammar::parse_grammar;

    const TOY: &str = include_str!("../grammars/toy.gram");
    const MINIMAL: &str = include_str!("../grammars/minimal.gram");

    #[test]
    fn compiled_tables_pass_the_oracle() {
        for text in [MINIMAL, TOY] {
            let g = parse_grammar(text).unwrap();
            let inner = compile_inner(&g, DEFAULT_MAX_ITER).unwrap();
            let outer = compile_outer(&g, &inner, DEFAULT_MAX_ITER).unwrap();
            for table in [&inner, &outer] {
                let report = check_table(&g, table, 3);
                assert!(report.trees > 0);
                assert!(report.checks > 0, "{:?} produced no checks", table.kind);
                assert!(
                    report.ok(),
                    "{} table failures:\n{}",
                    table.kind,
                    report.failures.join("\n")
                );
            }
        }
    }

    #[test]
    fn tampered_table_fails_the_oracle() {
        let g = parse_grammar(MINIMAL).unwrap();
        let inner = compile_inner(&g, DEFAULT_MAX_ITER).unwrap();
        let mut outer = compile_outer(&g, &inner, DEFAULT_MAX_ITER).unwrap();
        // drop a random half of the triples: some sharing goes unlicensed
        let kept: TripleSet = outer
            .triples
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 0)
            .map(|(_, t)| Triple::new(t.left.clone(), t.right.clone(), t.bindings.clone()))
            .collect();
        let dropped_everything_useful = kept.len() < outer.triples.len();
        assert!(dropped_everything_useful);
        outer.triples = kept;
        let report = check_table(&g, &outer, 2);
        assert!(!report.ok());
    }
}
