//! Untyped attribute-value feature structures.
//!
//! A structure is a rooted acyclic graph whose nodes are atoms, variables
//! (unbound placeholders) or complex nodes mapping feature names to children.
//! Two paths may reach the same node (reentrancy); that sharing is
//! information, so it is preserved by every operation here. Structures are
//! immutable once built; `unify` and friends return fresh structures.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// A sequence of feature names, e.g. `sem.arg1`. The empty sequence denotes
/// the root and is only meaningful for `value_at`/`node_at`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Path(Vec<String>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn from_features<I, S>(feats: I) -> Path
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Path(feats.into_iter().map(Into::into).collect())
    }

    /// Parses a dotted path such as `sem.arg1`.
    pub fn parse(s: &str) -> Result<Path, String> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty path".to_string());
        }
        let mut feats = Vec::new();
        for part in s.split('.') {
            let part = part.trim();
            if part.is_empty() {
                return Err(format!("empty feature in path '{}'", s));
            }
            feats.push(part.to_string());
        }
        Ok(Path(feats))
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn features(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, feat: &str) -> Path {
        let mut v = self.0.clone();
        v.push(feat.to_string());
        Path(v)
    }

    pub fn join(&self, other: &Path) -> Path {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Path(v)
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// `other` minus `self`, when `self` is a prefix of `other`.
    pub fn strip_prefix(&self, other: &Path) -> Option<Path> {
        if self.is_prefix_of(other) {
            Some(Path(other.0[self.0.len()..].to_vec()))
        } else {
            None
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join("."))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Atom(String),
    Var,
    Complex(BTreeMap<String, usize>),
}

/// What `value_at` found at the end of a path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value<'a> {
    Atom(&'a str),
    Var,
    Complex,
    Absent,
}

impl<'a> Value<'a> {
    pub fn as_atom(&self) -> Option<&'a str> {
        match self {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, Value::Absent)
    }
}

#[derive(Debug, Clone)]
pub struct FeatureStructure {
    nodes: Vec<Node>,
    root: usize,
}

impl FeatureStructure {
    /// The empty structure: a single unbound variable.
    pub fn empty() -> FeatureStructure {
        FeatureStructure {
            nodes: vec![Node::Var],
            root: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.nodes[self.root], Node::Var)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node reached by `p` from the root, if every step resolves.
    pub fn node_at(&self, p: &Path) -> Option<usize> {
        let mut cur = self.root;
        for feat in p.features() {
            match &self.nodes[cur] {
                Node::Complex(map) => cur = *map.get(feat)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    pub fn value_at(&self, p: &Path) -> Value<'_> {
        match self.node_at(p) {
            None => Value::Absent,
            Some(n) => match &self.nodes[n] {
                Node::Atom(a) => Value::Atom(a),
                Node::Var => Value::Var,
                Node::Complex(_) => Value::Complex,
            },
        }
    }

    pub fn atom_at(&self, p: &Path) -> Option<&str> {
        self.value_at(p).as_atom()
    }

    /// True iff both paths resolve and reach the same node.
    pub fn token_identical(&self, p1: &Path, p2: &Path) -> bool {
        match (self.node_at(p1), self.node_at(p2)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    pub fn features_at(&self, p: &Path) -> Vec<String> {
        match self.node_at(p) {
            Some(n) => match &self.nodes[n] {
                Node::Complex(map) => map.keys().cloned().collect(),
                _ => Vec::new(),
            },
            None => Vec::new(),
        }
    }

    /// Most general structure subsumed by both inputs, or `None` on clash
    /// (distinct atoms, atom vs complex, or a cyclic result).
    pub fn unify(&self, other: &FeatureStructure) -> Option<FeatureStructure> {
        let mut m = Merger::from(self);
        let ob = m.add(other);
        m.merge(m.root, ob).ok()?;
        m.extract(m.root)
    }

    /// Unifies `other` into the node reached by `at`. Fails if `at` does not
    /// resolve or unification clashes.
    pub fn unify_at(&self, at: &Path, other: &FeatureStructure) -> Option<FeatureStructure> {
        let mut m = Merger::from(self);
        let target = m.node_at(m.root, at)?;
        let ob = m.add(other);
        m.merge(target, ob).ok()?;
        m.extract(m.root)
    }

    /// Merges the nodes at two paths of the same structure.
    pub fn merge_paths(&self, p1: &Path, p2: &Path) -> Option<FeatureStructure> {
        let mut m = Merger::from(self);
        let a = m.node_at(m.root, p1)?;
        let b = m.node_at(m.root, p2)?;
        m.merge(a, b).ok()?;
        m.extract(m.root)
    }

    /// Replaces the node at `at` with a copy of `sub`, unifying the old node
    /// with `sub`'s node at `inner`. Used to grow derivation trees in place.
    pub fn graft(
        &self,
        at: &Path,
        sub: &FeatureStructure,
        inner: &Path,
    ) -> Option<FeatureStructure> {
        if at.is_root() {
            return None;
        }
        let mut m = Merger::from(self);
        let old = m.node_at(m.root, at)?;
        let parent_path = Path(at.features()[..at.len() - 1].to_vec());
        let last = &at.features()[at.len() - 1];
        let parent = m.node_at(m.root, &parent_path)?;
        let sub_root = m.add(sub);
        let inner_node = m.node_at(sub_root, inner)?;
        m.repoint(parent, last, sub_root)?;
        m.merge(old, inner_node).ok()?;
        m.extract(m.root)
    }

    /// Extracts the substructure rooted at `p` (sharing within it preserved).
    pub fn sub_at(&self, p: &Path) -> Option<FeatureStructure> {
        let mut m = Merger::from(self);
        let n = m.node_at(m.root, p)?;
        m.extract(n)
    }

    /// True iff every piece of information in `self` (paths, atoms,
    /// reentrancies) is present in `other`.
    pub fn subsumes(&self, other: &FeatureStructure) -> bool {
        let mut memo: HashMap<usize, usize> = HashMap::new();
        let mut stack = vec![(self.root, other.root)];
        while let Some((x, y)) = stack.pop() {
            if let Some(&m) = memo.get(&x) {
                if m != y {
                    return false;
                }
                continue;
            }
            memo.insert(x, y);
            match &self.nodes[x] {
                Node::Var => {}
                Node::Atom(a) => match &other.nodes[y] {
                    Node::Atom(b) if a == b => {}
                    _ => return false,
                },
                Node::Complex(f) => match &other.nodes[y] {
                    Node::Complex(g) => {
                        for (feat, &child) in f {
                            match g.get(feat) {
                                Some(&oc) => stack.push((child, oc)),
                                None => return false,
                            }
                        }
                    }
                    _ => return false,
                },
            }
        }
        true
    }

    /// Alphabetic-variant equality: mutual subsumption.
    pub fn variant_equal(&self, other: &FeatureStructure) -> bool {
        self.subsumes(other) && other.subsumes(self)
    }

    /// Keeps the `cat` feature plus the subgraph along prefixes of `paths`;
    /// reentrancies among retained nodes survive. Idempotent.
    pub fn restrict(&self, paths: &[Path]) -> FeatureStructure {
        let mut keep: HashMap<usize, BTreeSet<String>> = HashMap::new();
        let mut mark = |p: &Path| {
            let mut cur = self.root;
            for feat in p.features() {
                match &self.nodes[cur] {
                    Node::Complex(map) => match map.get(feat) {
                        Some(&child) => {
                            keep.entry(cur).or_default().insert(feat.clone());
                            cur = child;
                        }
                        None => break,
                    },
                    _ => break,
                }
            }
        };
        mark(&Path::from_features(["cat"]));
        for p in paths {
            mark(p);
        }

        let mut out = FeatureStructure {
            nodes: Vec::new(),
            root: 0,
        };
        let mut memo: HashMap<usize, usize> = HashMap::new();
        let root = self.copy_restricted(self.root, &keep, &mut memo, &mut out);
        out.root = root;
        out
    }

    fn copy_restricted(
        &self,
        node: usize,
        keep: &HashMap<usize, BTreeSet<String>>,
        memo: &mut HashMap<usize, usize>,
        out: &mut FeatureStructure,
    ) -> usize {
        if let Some(&n) = memo.get(&node) {
            return n;
        }
        let id = out.nodes.len();
        out.nodes.push(Node::Var); // placeholder
        memo.insert(node, id);
        let content = match keep.get(&node) {
            Some(feats) if !feats.is_empty() => {
                let mut map = BTreeMap::new();
                if let Node::Complex(children) = &self.nodes[node] {
                    for feat in feats {
                        if let Some(&child) = children.get(feat) {
                            let c = self.copy_restricted(child, keep, memo, out);
                            map.insert(feat.clone(), c);
                        }
                    }
                }
                Node::Complex(map)
            }
            _ => match &self.nodes[node] {
                Node::Atom(a) => Node::Atom(a.clone()),
                _ => Node::Var,
            },
        };
        out.nodes[id] = content;
        id
    }

    /// Ensures every path in `paths` resolves under `base`, creating fresh
    /// variables (and intermediate complex nodes) where absent. Fails if an
    /// atom sits on the interior of a path.
    pub fn materialize(&self, base: &Path, paths: &[Path]) -> Option<FeatureStructure> {
        let mut m = Merger::from(self);
        m.node_at(m.root, base)?;
        for p in paths {
            m.ensure_path(m.root, &base.join(p)).ok()?;
        }
        m.extract(m.root)
    }

    /// Fresh copy with the listed variable nodes replaced by atoms.
    /// Every replaced node must currently be a variable.
    pub fn with_vars_bound(&self, bindings: &HashMap<usize, String>) -> Option<FeatureStructure> {
        let mut nodes = self.nodes.clone();
        for (&id, atom) in bindings {
            match nodes.get_mut(id)? {
                n @ Node::Var => *n = Node::Atom(atom.clone()),
                Node::Atom(a) if a == atom => {}
                _ => return None,
            }
        }
        Some(FeatureStructure { nodes, root: self.root })
    }

    /// Canonical textual form: identical for alphabetic variants, distinct
    /// otherwise. Suitable as a set/map key wherever variant equality is the
    /// intended notion of sameness.
    pub fn canonical_key(&self) -> String {
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut out = String::new();
        self.key_rec(self.root, &mut seen, &mut out);
        out
    }

    fn key_rec(&self, node: usize, seen: &mut HashMap<usize, usize>, out: &mut String) {
        if let Some(&n) = seen.get(&node) {
            out.push('#');
            out.push_str(&n.to_string());
            return;
        }
        seen.insert(node, seen.len());
        match &self.nodes[node] {
            Node::Var => out.push('?'),
            Node::Atom(a) => {
                out.push('\'');
                out.push_str(a);
            }
            Node::Complex(map) => {
                out.push('(');
                let mut first = true;
                for (feat, &child) in map {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    out.push_str(feat);
                    out.push(':');
                    self.key_rec(child, seen, out);
                }
                out.push(')');
            }
        }
    }

    /// All (path, node) pairs reachable from `base`, in sorted path order.
    /// Shared nodes appear once per path.
    pub fn walk(&self, base: &Path) -> Vec<(Path, usize)> {
        let mut out = Vec::new();
        if let Some(start) = self.node_at(base) {
            let mut stack = vec![(Path::root(), start)];
            while let Some((p, n)) = stack.pop() {
                if let Node::Complex(map) = &self.nodes[n] {
                    for (feat, &child) in map.iter().rev() {
                        stack.push((p.child(feat), child));
                    }
                }
                out.push((p, n));
            }
        }
        out
    }

    fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }
}

/// Union-find arena used by unification, grafting and the AVM builder.
pub(crate) struct Merger {
    nodes: Vec<Node>,
    parent: Vec<usize>,
    pub(crate) root: usize,
}

impl Merger {
    pub(crate) fn new() -> Merger {
        Merger {
            nodes: vec![Node::Var],
            parent: vec![0],
            root: 0,
        }
    }

    fn from(fs: &FeatureStructure) -> Merger {
        let mut m = Merger {
            nodes: Vec::new(),
            parent: Vec::new(),
            root: 0,
        };
        m.root = m.add(fs);
        m
    }

    /// Copies `fs` into the arena, returning its root.
    pub(crate) fn add(&mut self, fs: &FeatureStructure) -> usize {
        let off = self.nodes.len();
        for n in &fs.nodes {
            let shifted = match n {
                Node::Complex(map) => Node::Complex(
                    map.iter().map(|(k, v)| (k.clone(), v + off)).collect(),
                ),
                other => other.clone(),
            };
            self.nodes.push(shifted);
            self.parent.push(self.parent.len());
        }
        fs.root + off
    }

    fn fresh_atom(&mut self, a: &str) -> usize {
        self.nodes.push(Node::Atom(a.to_string()));
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Walks `p` from `from`, following representatives. None if absent.
    pub(crate) fn node_at(&mut self, from: usize, p: &Path) -> Option<usize> {
        let mut cur = self.find(from);
        for feat in p.features() {
            let next = match &self.nodes[cur] {
                Node::Complex(map) => *map.get(feat)?,
                _ => return None,
            };
            cur = self.find(next);
        }
        Some(cur)
    }

    /// Walks `p` from `from`, promoting variables to complex nodes and
    /// creating fresh variables where features are absent.
    pub(crate) fn ensure_path(&mut self, from: usize, p: &Path) -> Result<usize, ()> {
        let mut cur = self.find(from);
        for feat in p.features() {
            if matches!(self.nodes[cur], Node::Var) {
                self.nodes[cur] = Node::Complex(BTreeMap::new());
            }
            let next = match &mut self.nodes[cur] {
                Node::Complex(map) => {
                    if let Some(&n) = map.get(feat) {
                        n
                    } else {
                        let n = self.nodes.len();
                        self.nodes.push(Node::Var);
                        self.parent.push(n);
                        match &mut self.nodes[cur] {
                            Node::Complex(map) => {
                                map.insert(feat.clone(), n);
                            }
                            _ => unreachable!(),
                        }
                        n
                    }
                }
                Node::Atom(_) => return Err(()),
                Node::Var => unreachable!(),
            };
            cur = self.find(next);
        }
        Ok(cur)
    }

    pub(crate) fn set_atom(&mut self, node: usize, atom: &str) -> Result<(), ()> {
        let a = self.fresh_atom(atom);
        self.merge(node, a)
    }

    /// Redirects `feat` of the complex node `parent` to `target`.
    fn repoint(&mut self, parent: usize, feat: &str, target: usize) -> Option<()> {
        let rep = self.find(parent);
        match &mut self.nodes[rep] {
            Node::Complex(map) => {
                map.insert(feat.to_string(), target);
                Some(())
            }
            _ => None,
        }
    }

    /// Destructive unification of two classes; Err on atom clash.
    pub(crate) fn merge(&mut self, a: usize, b: usize) -> Result<(), ()> {
        let mut stack = vec![(a, b)];
        while let Some((x, y)) = stack.pop() {
            let rx = self.find(x);
            let ry = self.find(y);
            if rx == ry {
                continue;
            }
            let cx = std::mem::replace(&mut self.nodes[rx], Node::Var);
            let cy = std::mem::replace(&mut self.nodes[ry], Node::Var);
            let (winner, content) = match (cx, cy) {
                (Node::Var, other) => (ry, other),
                (other, Node::Var) => (rx, other),
                (Node::Atom(p), Node::Atom(q)) => {
                    if p == q {
                        (rx, Node::Atom(p))
                    } else {
                        return Err(());
                    }
                }
                (Node::Atom(_), Node::Complex(_)) | (Node::Complex(_), Node::Atom(_)) => {
                    return Err(())
                }
                (Node::Complex(mut f), Node::Complex(g)) => {
                    for (feat, cn) in g {
                        match f.get(&feat) {
                            Some(&existing) => stack.push((existing, cn)),
                            None => {
                                f.insert(feat, cn);
                            }
                        }
                    }
                    (rx, Node::Complex(f))
                }
            };
            let loser = if winner == rx { ry } else { rx };
            self.parent[loser] = winner;
            self.nodes[winner] = content;
        }
        Ok(())
    }

    /// Reads the structure rooted at `from` back out, or None if the merged
    /// graph became cyclic.
    pub(crate) fn extract(&mut self, from: usize) -> Option<FeatureStructure> {
        self.extract_with_map(from).map(|(fs, _)| fs)
    }

    /// As `extract`, also returning the map from arena node ids (pre-merge
    /// ids are fine; they are resolved through the union-find) to new ids.
    pub(crate) fn extract_with_map(
        &mut self,
        from: usize,
    ) -> Option<(FeatureStructure, HashMap<usize, usize>)> {
        let mut out = FeatureStructure {
            nodes: Vec::new(),
            root: 0,
        };
        let mut memo: HashMap<usize, usize> = HashMap::new();
        let mut on_stack: BTreeSet<usize> = BTreeSet::new();
        let start = self.find(from);
        let root = self.extract_rec(start, &mut memo, &mut on_stack, &mut out)?;
        out.root = root;
        Some((out, memo))
    }

    fn extract_rec(
        &mut self,
        rep: usize,
        memo: &mut HashMap<usize, usize>,
        on_stack: &mut BTreeSet<usize>,
        out: &mut FeatureStructure,
    ) -> Option<usize> {
        if let Some(&n) = memo.get(&rep) {
            return Some(n);
        }
        if on_stack.contains(&rep) {
            return None; // cyclic result: rejected
        }
        on_stack.insert(rep);
        let content = self.nodes[rep].clone();
        let id = out.nodes.len();
        out.nodes.push(Node::Var);
        memo.insert(rep, id);
        let new_content = match content {
            Node::Atom(a) => Node::Atom(a),
            Node::Var => Node::Var,
            Node::Complex(map) => {
                if map.is_empty() {
                    Node::Var
                } else {
                    let mut new_map = BTreeMap::new();
                    for (feat, child) in map {
                        let crep = self.find(child);
                        let c = self.extract_rec(crep, memo, on_stack, out)?;
                        new_map.insert(feat, c);
                    }
                    Node::Complex(new_map)
                }
            }
        };
        out.nodes[id] = new_content;
        on_stack.remove(&rep);
        Some(id)
    }
}

/// Builds feature structures from path constraints with named-variable
/// sharing, the semantics of the AVM text syntax.
pub struct FsBuilder {
    m: Merger,
    vars: HashMap<String, usize>,
}

impl Default for FsBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl FsBuilder {
    pub fn new() -> FsBuilder {
        FsBuilder {
            m: Merger::new(),
            vars: HashMap::new(),
        }
    }

    pub fn set_atom(&mut self, p: &Path, atom: &str) -> Result<(), String> {
        let root = self.m.root;
        let n = self
            .m
            .ensure_path(root, p)
            .map_err(|_| format!("atom in the middle of path '{}'", p))?;
        self.m
            .set_atom(n, atom)
            .map_err(|_| format!("conflicting value at path '{}'", p))
    }

    pub fn set_var(&mut self, p: &Path, name: &str) -> Result<(), String> {
        let root = self.m.root;
        let n = self
            .m
            .ensure_path(root, p)
            .map_err(|_| format!("atom in the middle of path '{}'", p))?;
        let v = match self.vars.get(name) {
            Some(&v) => v,
            None => {
                self.vars.insert(name.to_string(), n);
                return Ok(());
            }
        };
        self.m
            .merge(n, v)
            .map_err(|_| format!("conflicting value for ${} at path '{}'", name, p))
    }

    /// Declares the path as present without binding it to anything.
    pub fn touch(&mut self, p: &Path) -> Result<(), String> {
        let root = self.m.root;
        self.m
            .ensure_path(root, p)
            .map(|_| ())
            .map_err(|_| format!("atom in the middle of path '{}'", p))
    }

    pub fn finish(self) -> Result<FeatureStructure, String> {
        self.finish_with_vars().map(|(fs, _)| fs)
    }

    /// Finishes the build and reports where each named variable ended up
    /// (node ids in the returned structure; variables whose node became an
    /// atom or complex through sharing are still reported).
    pub fn finish_with_vars(
        mut self,
    ) -> Result<(FeatureStructure, HashMap<String, usize>), String> {
        let root = self.m.root;
        let (fs, map) = self
            .m
            .extract_with_map(root)
            .ok_or_else(|| "cyclic structure".to_string())?;
        let mut vars = HashMap::new();
        let mut m = self.m;
        for (name, id) in self.vars.drain() {
            let rep = m.find(id);
            if let Some(&new_id) = map.get(&rep) {
                vars.insert(name, new_id);
            }
        }
        Ok((fs, vars))
    }
}

/// Renders one or more signs of a single structure as AVM text, keeping
/// variable names consistent across the rendered roots so reentrancies
/// round-trip through the parser.
pub struct AvmWriter<'a> {
    fs: &'a FeatureStructure,
    shared: BTreeSet<usize>,
    names: HashMap<usize, String>,
    next: usize,
}

impl<'a> AvmWriter<'a> {
    pub fn new(fs: &'a FeatureStructure, roots: &[Path]) -> AvmWriter<'a> {
        // A node is "shared" if more than one edge (or root) reaches it.
        let mut count: HashMap<usize, usize> = HashMap::new();
        for r in roots {
            if let Some(start) = fs.node_at(r) {
                *count.entry(start).or_default() += 1;
                let mut stack = vec![start];
                let mut visited = BTreeSet::new();
                while let Some(n) = stack.pop() {
                    if !visited.insert(n) {
                        continue;
                    }
                    if let Node::Complex(map) = fs.node(n) {
                        for &c in map.values() {
                            *count.entry(c).or_default() += 1;
                            stack.push(c);
                        }
                    }
                }
            }
        }
        let shared = count
            .iter()
            .filter(|(_, c)| **c >= 2)
            .map(|(n, _)| *n)
            .collect();
        AvmWriter {
            fs,
            shared,
            names: HashMap::new(),
            next: 0,
        }
    }

    /// Name assigned to `node` during rendering, if any.
    pub fn node_name(&self, node: usize) -> Option<String> {
        self.names.get(&node).cloned()
    }

    fn name_for(&mut self, node: usize) -> (String, bool) {
        if let Some(n) = self.names.get(&node) {
            (n.clone(), false)
        } else {
            let n = format!("{}", self.next);
            self.next += 1;
            self.names.insert(node, n.clone());
            (n, true)
        }
    }

    /// Renders the sign rooted at `root` as `[p=v, ...]`.
    pub fn write_sign(&mut self, root: &Path) -> String {
        let mut parts: Vec<String> = Vec::new();
        let start = match self.fs.node_at(root) {
            Some(s) => s,
            None => return "[]".to_string(),
        };
        self.emit(start, &Path::root(), &mut parts);
        format!("[{}]", parts.join(", "))
    }

    fn emit(&mut self, node: usize, at: &Path, parts: &mut Vec<String>) {
        match self.fs.node(node) {
            Node::Atom(a) => {
                if self.shared.contains(&node) {
                    let (name, first) = self.name_for(node);
                    parts.push(format!("{}=${}", at, name));
                    if first {
                        parts.push(format!("{}={}", at, a));
                    }
                } else {
                    parts.push(format!("{}={}", at, a));
                }
            }
            Node::Var => {
                let (name, _) = self.name_for(node);
                parts.push(format!("{}=${}", at, name));
            }
            Node::Complex(map) => {
                let descend = if self.shared.contains(&node) && !at.is_root() {
                    let (name, first) = self.name_for(node);
                    parts.push(format!("{}=${}", at, name));
                    first
                } else {
                    true
                };
                if descend {
                    for (feat, &child) in map.clone().iter() {
                        self.emit(child, &at.child(feat), parts);
                    }
                }
            }
        }
    }
}

/// One-off rendering of a standalone structure.
pub fn to_avm(fs: &FeatureStructure) -> String {
    AvmWriter::new(fs, &[Path::root()]).write_sign(&Path::root())
}
