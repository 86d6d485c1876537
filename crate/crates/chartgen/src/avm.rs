//! AVM text syntax: `[cat=np, sem.arg1=$X, sem.arg2=j]`.
//!
//! Features are dot-pathed, `$NAME` names a variable scoped to the enclosing
//! construct (one sign here, one rule or lexical entry in grammar files),
//! bare lowercase tokens are atoms. Repeated constraints on a path unify.

use crate::fs::{FeatureStructure, FsBuilder, Path};
use crate::scan::{scan, Cursor, ScanError, Tok};

/// Parses a dotted feature path from the cursor.
pub fn parse_path(cur: &mut Cursor) -> Result<Path, ScanError> {
    let mut feats = vec![cur.expect_ident()?];
    while cur.eat(&Tok::Dot) {
        feats.push(cur.expect_ident()?);
    }
    Ok(Path::from_features(feats))
}

/// Parses one `[ ... ]` sign into `builder` at `base`, with variable scope
/// shared across all signs built through the same builder. When `alphabet`
/// is given, every feature name must be declared in it.
pub fn parse_sign_into(
    cur: &mut Cursor,
    builder: &mut FsBuilder,
    base: &Path,
    alphabet: Option<&std::collections::BTreeSet<String>>,
) -> Result<(), ScanError> {
    cur.expect(&Tok::LBrack)?;
    builder
        .touch(base)
        .map_err(|e| cur.err(&e))?;
    if cur.eat(&Tok::RBrack) {
        return Ok(());
    }
    loop {
        let path = parse_path(cur)?;
        if let Some(alpha) = alphabet {
            for feat in path.features() {
                if !alpha.contains(feat) {
                    return Err(cur.err(&format!("undeclared feature '{}'", feat)));
                }
            }
        }
        cur.expect(&Tok::Eq)?;
        let full = base.join(&path);
        match cur.next() {
            Some(Tok::Ident(atom)) => builder
                .set_atom(&full, &atom)
                .map_err(|e| cur.err(&e))?,
            Some(Tok::Var(name)) => builder
                .set_var(&full, &name)
                .map_err(|e| cur.err(&e))?,
            other => {
                return Err(cur.err(&format!(
                    "expected atom or $variable, found {}",
                    other
                        .map(|t| format!("'{}'", t))
                        .unwrap_or_else(|| "end of input".to_string())
                )))
            }
        }
        if cur.eat(&Tok::Comma) {
            continue;
        }
        cur.expect(&Tok::RBrack)?;
        return Ok(());
    }
}

/// Parses a standalone AVM string into a feature structure.
pub fn parse_avm(text: &str) -> Result<FeatureStructure, ScanError> {
    let mut cur = Cursor::new(scan(text)?);
    let mut builder = FsBuilder::new();
    parse_sign_into(&mut cur, &mut builder, &Path::root(), None)?;
    if !cur.at_end() {
        return Err(cur.err("trailing input after AVM"));
    }
    builder.finish().map_err(|e| cur.err(&e))
}
