//! Grammar and lexicon model, file parsing, and input-semantics validation.
//!
//! Grammar file format:
//!
//! ```text
//! paths: sem.arg1, sem.arg2, sem.arg3
//! start: [cat=s]
//! rule s_np_vp: [cat=s, sem=$0] -> [cat=np, sem.arg1=$1] [cat=vp, sem=$0, sem.arg1=$1]
//! lex "ran": [cat=vp, sem.arg1=$E, sem.arg2=$X] : run($E), arg1($E,$X), past($E)
//! ```
//!
//! Semantics files use the flat notation
//! `r : run(r), past(r), fast(r), arg1(r,j), name(j,John)`: lowercase
//! argument symbols are indices, capitalized ones are constants.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::avm::{parse_path, parse_sign_into};
use crate::fs::{FeatureStructure, FsBuilder, Path, Value};
use crate::scan::{scan, Cursor, Pos, ScanError, Tok};

/// Internal slot features of a rule-wide structure. `%` never appears in
/// user feature names, so the slots cannot collide with the alphabet.
pub const MOTHER_SLOT: &str = "%m";

pub fn mother_path() -> Path {
    Path::from_features([MOTHER_SLOT])
}

pub fn daughter_path(k: usize) -> Path {
    Path::from_features([format!("%d{}", k)])
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    /// Rule-wide structure with slots `%m`, `%d1` .. `%dN`; variables shared
    /// across mother and daughters are reentrancies here.
    pub fs: FeatureStructure,
    pub arity: usize,
}

impl Rule {
    pub fn mother(&self) -> FeatureStructure {
        self.fs.sub_at(&mother_path()).expect("mother slot")
    }

    pub fn daughter(&self, k: usize) -> FeatureStructure {
        self.fs.sub_at(&daughter_path(k)).expect("daughter slot")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateArg {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub predicate: String,
    pub args: Vec<TemplateArg>,
}

#[derive(Debug, Clone)]
pub struct LexEntry {
    pub word: String,
    pub sign: FeatureStructure,
    /// Node ids (in `sign`) of the named variables that occur in the sign.
    pub var_nodes: BTreeMap<String, usize>,
    pub templates: Vec<Template>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemArg {
    Index(String),
    Const(String),
}

impl SemArg {
    pub fn index(&self) -> Option<&str> {
        match self {
            SemArg::Index(i) => Some(i),
            SemArg::Const(_) => None,
        }
    }
}

impl fmt::Display for SemArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemArg::Index(s) | SemArg::Const(s) => write!(f, "{}", s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<SemArg>,
}

impl Literal {
    pub fn indices(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|a| a.index())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.predicate, args.join(","))
    }
}

/// A flat semantic input: distinguished index plus a bag of literals.
/// Duplicate literals are distinct bag elements (positions in the vector).
#[derive(Debug, Clone)]
pub struct SemInput {
    pub distinguished: String,
    pub literals: Vec<Literal>,
}

impl SemInput {
    pub fn indices(&self) -> BTreeSet<String> {
        self.literals
            .iter()
            .flat_map(|l| l.indices().map(|s| s.to_string()))
            .collect()
    }
}

impl fmt::Display for SemInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lits: Vec<String> = self.literals.iter().map(|l| l.to_string()).collect();
        write!(f, "{} : {}", self.distinguished, lits.join(", "))
    }
}

#[derive(Debug, Clone)]
pub struct Grammar {
    pub paths: Vec<Path>,
    pub alphabet: BTreeSet<String>,
    pub start: FeatureStructure,
    pub rules: Vec<Rule>,
    pub lexicon: Vec<LexEntry>,
    /// All rule mothers, deduplicated under variant equality.
    pub nonterminals: Vec<FeatureStructure>,
    /// Daughter signs that unify with some lexical sign, deduplicated.
    pub terminals: Vec<FeatureStructure>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum GrammarError {
    #[error("{0}")]
    Syntax(#[from] ScanError),
    #[error("no rules")]
    NoRules,
    #[error("start sign missing")]
    StartMissing,
    #[error("paths declaration missing or empty")]
    PathsMissing,
    #[error("duplicate rule name '{0}'")]
    DuplicateRule(String),
    #[error("start sign unifies with no rule mother")]
    StartUnmatched,
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SemError {
    #[error("{0}")]
    Syntax(#[from] ScanError),
    #[error("distinguished index '{0}' occurs in no literal")]
    DistinguishedUnused(String),
}

/// Parses a grammar file. All declared index paths are materialized in every
/// rule and lexical sign (fresh variables where absent), so skeletons and
/// shared-index computation see the full path set.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let toks = scan(text).map_err(GrammarError::Syntax)?;
    let mut cur = Cursor::new(toks);

    let mut paths: Vec<Path> = Vec::new();
    let mut extra_features: Vec<String> = Vec::new();
    let mut start: Option<FeatureStructure> = None;
    let mut rules: Vec<Rule> = Vec::new();
    let mut lexicon: Vec<LexEntry> = Vec::new();
    let mut rule_names: BTreeSet<String> = BTreeSet::new();

    while !cur.at_end() {
        let pos = cur.pos();
        let kw = cur.expect_ident().map_err(GrammarError::Syntax)?;
        match kw.as_str() {
            "paths" => {
                cur.expect(&Tok::Colon).map_err(GrammarError::Syntax)?;
                loop {
                    let p = parse_path(&mut cur).map_err(GrammarError::Syntax)?;
                    paths.push(p);
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            "features" => {
                cur.expect(&Tok::Colon).map_err(GrammarError::Syntax)?;
                loop {
                    extra_features.push(cur.expect_ident().map_err(GrammarError::Syntax)?);
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            "start" => {
                cur.expect(&Tok::Colon).map_err(GrammarError::Syntax)?;
                let alpha = alphabet_of(&paths, &extra_features);
                let mut b = FsBuilder::new();
                parse_sign_into(&mut cur, &mut b, &Path::root(), Some(&alpha))
                    .map_err(GrammarError::Syntax)?;
                start = Some(b.finish().map_err(|e| GrammarError::Invalid {
                    pos,
                    msg: e,
                })?);
            }
            "rule" => {
                if paths.is_empty() {
                    return Err(GrammarError::PathsMissing);
                }
                let name = cur.expect_ident().map_err(GrammarError::Syntax)?;
                if !rule_names.insert(name.clone()) {
                    return Err(GrammarError::DuplicateRule(name));
                }
                cur.expect(&Tok::Colon).map_err(GrammarError::Syntax)?;
                let alpha = alphabet_of(&paths, &extra_features);
                let mut b = FsBuilder::new();
                parse_sign_into(&mut cur, &mut b, &mother_path(), Some(&alpha))
                    .map_err(GrammarError::Syntax)?;
                cur.expect(&Tok::Arrow).map_err(GrammarError::Syntax)?;
                let mut arity = 0usize;
                while cur.peek() == Some(&Tok::LBrack) {
                    arity += 1;
                    parse_sign_into(&mut cur, &mut b, &daughter_path(arity), Some(&alpha))
                        .map_err(GrammarError::Syntax)?;
                }
                if arity == 0 {
                    return Err(GrammarError::Invalid {
                        pos,
                        msg: format!("rule '{}' has no daughters", name),
                    });
                }
                materialize_slots(&mut b, arity, &paths, pos, &name)?;
                let fs = b.finish().map_err(|e| GrammarError::Invalid { pos, msg: e })?;
                check_cats(&fs, arity, pos, &name)?;
                rules.push(Rule { name, fs, arity });
            }
            "lex" => {
                if paths.is_empty() {
                    return Err(GrammarError::PathsMissing);
                }
                let word = match cur.next() {
                    Some(Tok::Str(w)) => w,
                    _ => {
                        return Err(GrammarError::Invalid {
                            pos,
                            msg: "expected quoted word after 'lex'".to_string(),
                        })
                    }
                };
                cur.expect(&Tok::Colon).map_err(GrammarError::Syntax)?;
                let alpha = alphabet_of(&paths, &extra_features);
                let mut b = FsBuilder::new();
                parse_sign_into(&mut cur, &mut b, &Path::root(), Some(&alpha))
                    .map_err(GrammarError::Syntax)?;
                cur.expect(&Tok::Colon).map_err(GrammarError::Syntax)?;
                for p in &paths {
                    b.touch(p).map_err(|e| GrammarError::Invalid { pos, msg: e })?;
                }
                let templates = parse_templates(&mut cur)?;
                let (sign, vars) = b
                    .finish_with_vars()
                    .map_err(|e| GrammarError::Invalid { pos, msg: e })?;
                if sign.value_at(&Path::parse("cat").unwrap()).as_atom().is_none() {
                    return Err(GrammarError::Invalid {
                        pos,
                        msg: format!("lexical entry '{}' has no cat value", word),
                    });
                }
                let entry = LexEntry {
                    word,
                    sign,
                    var_nodes: vars.into_iter().collect(),
                    templates,
                };
                check_lex_invariant(&entry, &paths, pos)?;
                lexicon.push(entry);
            }
            other => {
                return Err(GrammarError::Invalid {
                    pos,
                    msg: format!("unexpected keyword '{}'", other),
                })
            }
        }
    }

    if rules.is_empty() {
        return Err(GrammarError::NoRules);
    }
    if paths.is_empty() {
        return Err(GrammarError::PathsMissing);
    }
    let start = start.ok_or(GrammarError::StartMissing)?;

    // N = set of mothers, T = daughter signs unifying with lexical entries.
    let mut nonterminals: Vec<FeatureStructure> = Vec::new();
    let mut seen = BTreeSet::new();
    for r in &rules {
        let m = r.mother();
        if seen.insert(m.canonical_key()) {
            nonterminals.push(m);
        }
    }
    let mut terminals: Vec<FeatureStructure> = Vec::new();
    let mut seen_t = BTreeSet::new();
    for r in &rules {
        for k in 1..=r.arity {
            let d = r.daughter(k);
            if lexicon.iter().any(|e| e.sign.unify(&d).is_some())
                && seen_t.insert(d.canonical_key())
            {
                terminals.push(d);
            }
        }
    }
    if !rules.iter().any(|r| start.unify(&r.mother()).is_some()) {
        return Err(GrammarError::StartUnmatched);
    }

    Ok(Grammar {
        alphabet: alphabet_of(&paths, &extra_features),
        paths,
        start,
        rules,
        lexicon,
        nonterminals,
        terminals,
    })
}

fn alphabet_of(paths: &[Path], extra: &[String]) -> BTreeSet<String> {
    let mut alpha: BTreeSet<String> = ["cat".to_string()].into();
    for p in paths {
        for f in p.features() {
            alpha.insert(f.clone());
        }
    }
    alpha.extend(extra.iter().cloned());
    alpha
}

fn materialize_slots(
    b: &mut FsBuilder,
    arity: usize,
    paths: &[Path],
    pos: Pos,
    name: &str,
) -> Result<(), GrammarError> {
    let mut slots = vec![mother_path()];
    for k in 1..=arity {
        slots.push(daughter_path(k));
    }
    for slot in slots {
        for p in paths {
            b.touch(&slot.join(p)).map_err(|e| GrammarError::Invalid {
                pos,
                msg: format!("rule '{}': {}", name, e),
            })?;
        }
    }
    Ok(())
}

fn check_cats(
    fs: &FeatureStructure,
    arity: usize,
    pos: Pos,
    name: &str,
) -> Result<(), GrammarError> {
    let mut slots = vec![(mother_path(), "mother".to_string())];
    for k in 1..=arity {
        slots.push((daughter_path(k), format!("daughter {}", k)));
    }
    for (slot, what) in slots {
        match fs.value_at(&slot.child("cat")) {
            Value::Atom(_) => {}
            _ => {
                return Err(GrammarError::Invalid {
                    pos,
                    msg: format!("rule '{}': {} has no cat value", name, what),
                })
            }
        }
    }
    Ok(())
}

fn check_lex_invariant(
    entry: &LexEntry,
    paths: &[Path],
    pos: Pos,
) -> Result<(), GrammarError> {
    if entry.templates.is_empty() {
        return Err(GrammarError::Invalid {
            pos,
            msg: format!("lexical entry '{}' has no templates", entry.word),
        });
    }
    let template_vars: BTreeSet<&str> = entry
        .templates
        .iter()
        .flat_map(|t| t.args.iter())
        .filter_map(|a| match a {
            TemplateArg::Var(v) => Some(v.as_str()),
            TemplateArg::Const(_) => None,
        })
        .collect();
    let at_declared = paths.iter().any(|p| {
        entry.sign.node_at(p).is_some_and(|n| {
            template_vars
                .iter()
                .any(|v| entry.var_nodes.get(*v) == Some(&n))
        })
    });
    if !at_declared {
        return Err(GrammarError::Invalid {
            pos,
            msg: format!(
                "lexical entry '{}': no template variable occurs in the sign at a declared path",
                entry.word
            ),
        });
    }
    Ok(())
}

fn parse_templates(cur: &mut Cursor) -> Result<Vec<Template>, GrammarError> {
    let mut out = Vec::new();
    loop {
        let predicate = cur.expect_ident().map_err(GrammarError::Syntax)?;
        cur.expect(&Tok::LParen).map_err(GrammarError::Syntax)?;
        let mut args = Vec::new();
        loop {
            match cur.next() {
                Some(Tok::Var(v)) => args.push(TemplateArg::Var(v)),
                Some(Tok::Ident(c)) => args.push(TemplateArg::Const(c)),
                other => {
                    return Err(GrammarError::Invalid {
                        pos: cur.pos(),
                        msg: format!(
                            "expected template argument, found {}",
                            other
                                .map(|t| format!("'{}'", t))
                                .unwrap_or_else(|| "end of input".to_string())
                        ),
                    })
                }
            }
            if cur.eat(&Tok::Comma) {
                continue;
            }
            cur.expect(&Tok::RParen).map_err(GrammarError::Syntax)?;
            break;
        }
        out.push(Template { predicate, args });
        if cur.eat(&Tok::Comma) {
            continue;
        }
        break;
    }
    Ok(out)
}

/// Parses a flat semantics expression `index : pred(args), ...`.
pub fn parse_sem(text: &str) -> Result<SemInput, SemError> {
    let toks = scan(text).map_err(SemError::Syntax)?;
    let mut cur = Cursor::new(toks);
    let distinguished = cur.expect_ident().map_err(SemError::Syntax)?;
    cur.expect(&Tok::Colon).map_err(SemError::Syntax)?;
    let mut literals = Vec::new();
    loop {
        let predicate = cur.expect_ident().map_err(SemError::Syntax)?;
        cur.expect(&Tok::LParen).map_err(SemError::Syntax)?;
        let mut args = Vec::new();
        loop {
            let sym = cur.expect_ident().map_err(SemError::Syntax)?;
            args.push(classify_sem_arg(&sym));
            if cur.eat(&Tok::Comma) {
                continue;
            }
            cur.expect(&Tok::RParen).map_err(SemError::Syntax)?;
            break;
        }
        literals.push(Literal { predicate, args });
        if cur.eat(&Tok::Comma) {
            continue;
        }
        break;
    }
    if !cur.at_end() {
        return Err(SemError::Syntax(cur.err("trailing input")));
    }
    let input = SemInput {
        distinguished: distinguished.clone(),
        literals,
    };
    if !input
        .literals
        .iter()
        .any(|l| l.indices().any(|i| i == distinguished))
    {
        return Err(SemError::DistinguishedUnused(distinguished));
    }
    Ok(input)
}

/// Capitalized symbols are constants, lowercase ones are indices.
fn classify_sem_arg(sym: &str) -> SemArg {
    if sym.chars().next().is_some_and(|c| c.is_uppercase()) {
        SemArg::Const(sym.to_string())
    } else {
        SemArg::Index(sym.to_string())
    }
}

/// True iff the graph whose vertices are literals, with an arc between two
/// literals sharing an index, is connected.
pub fn validate_coherence(input: &SemInput) -> bool {
    let n = input.literals.len();
    if n <= 1 {
        return true;
    }
    let mut index_to_lits: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, lit) in input.literals.iter().enumerate() {
        for idx in lit.indices() {
            index_to_lits.entry(idx).or_default().push(i);
        }
    }
    let mut visited = vec![false; n];
    let mut stack = vec![0usize];
    visited[0] = true;
    let mut reached = 1usize;
    while let Some(i) = stack.pop() {
        for idx in input.literals[i].indices() {
            for &j in &index_to_lits[idx] {
                if !visited[j] {
                    visited[j] = true;
                    reached += 1;
                    stack.push(j);
                }
            }
        }
    }
    reached == n
}

/// Skeletons (restrictions) of every mother, daughter and lexical sign,
/// deduplicated under variant equality.
pub fn category_skeletons(g: &Grammar) -> Vec<FeatureStructure> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |fs: FeatureStructure| {
        if seen.insert(fs.canonical_key()) {
            out.push(fs);
        }
    };
    for r in &g.rules {
        push(r.mother().restrict(&g.paths));
        for k in 1..=r.arity {
            push(r.daughter(k).restrict(&g.paths));
        }
    }
    for e in &g.lexicon {
        push(e.sign.restrict(&g.paths));
    }
    out
}

/// Writes a grammar back out in the file format.
pub fn serialize_grammar(g: &Grammar) -> String {
    use crate::fs::AvmWriter;
    let mut out = String::new();
    let path_strs: Vec<String> = g.paths.iter().map(|p| p.to_string()).collect();
    out.push_str(&format!("paths: {}\n", path_strs.join(", ")));
    let mut extra: Vec<&String> = g
        .alphabet
        .iter()
        .filter(|f| {
            f.as_str() != "cat" && !g.paths.iter().any(|p| p.features().contains(f))
        })
        .collect();
    extra.sort();
    if !extra.is_empty() {
        let strs: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("features: {}\n", strs.join(", ")));
    }
    out.push_str(&format!("start: {}\n", crate::fs::to_avm(&g.start)));
    for r in &g.rules {
        let mut roots = vec![mother_path()];
        for k in 1..=r.arity {
            roots.push(daughter_path(k));
        }
        let mut w = AvmWriter::new(&r.fs, &roots);
        let mother = w.write_sign(&mother_path());
        let daughters: Vec<String> = (1..=r.arity)
            .map(|k| w.write_sign(&daughter_path(k)))
            .collect();
        out.push_str(&format!(
            "rule {}: {} -> {}\n",
            r.name,
            mother,
            daughters.join(" ")
        ));
    }
    for e in &g.lexicon {
        out.push_str(&serialize_lex(e));
    }
    out
}

fn serialize_lex(e: &LexEntry) -> String {
    use crate::fs::AvmWriter;
    let mut w = AvmWriter::new(&e.sign, &[Path::root()]);
    let sign = w.write_sign(&Path::root());
    // Template variables must keep the names chosen for the sign's nodes.
    let mut rename: HashMap<&str, String> = HashMap::new();
    let mut fresh = 1000usize;
    let mut templates = Vec::new();
    for t in &e.templates {
        let mut args = Vec::new();
        for a in &t.args {
            match a {
                TemplateArg::Const(c) => args.push(c.clone()),
                TemplateArg::Var(v) => {
                    let name = if let Some(n) = rename.get(v.as_str()) {
                        n.clone()
                    } else {
                        let n = match e.var_nodes.get(v).and_then(|id| w.node_name(*id)) {
                            Some(n) => n,
                            None => {
                                fresh += 1;
                                format!("{}", fresh)
                            }
                        };
                        rename.insert(v, n.clone());
                        n
                    };
                    args.push(format!("${}", name));
                }
            }
        }
        templates.push(format!("{}({})", t.predicate, args.join(",")));
    }
    format!("lex \"{}\": {} : {}\n", e.word, sign, templates.join(", "))
}
