//! Structural differences between documents.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::document::{render_path, PathSeg, StateDocument};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "change", rename_all = "snake_case")]
pub enum Change {
    Added { path: Vec<PathSeg>, value: StateDocument },
    Removed { path: Vec<PathSeg>, old: StateDocument },
    Changed { path: Vec<PathSeg>, old: StateDocument, new: StateDocument },
}

impl Change {
    pub fn path(&self) -> &[PathSeg] {
        match self {
            Change::Added { path, .. } | Change::Removed { path, .. } | Change::Changed { path, .. } => path,
        }
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |p: &[PathSeg]| if p.is_empty() { "<root>".to_string() } else { render_path(p) };
        match self {
            Change::Added { path, value } => write!(f, "+ {} = {}", at(path), value),
            Change::Removed { path, old } => write!(f, "- {} (was {})", at(path), old),
            Change::Changed { path, old, new } => write!(f, "~ {}: {} -> {}", at(path), old, new),
        }
    }
}

/// Ordered edit script turning one document into another.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocumentDiff {
    pub changes: Vec<Change>,
}

impl DocumentDiff {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn between(a: &StateDocument, b: &StateDocument) -> DocumentDiff {
        let mut changes = Vec::new();
        diff_into(a, b, &mut Vec::new(), &mut changes);
        DocumentDiff { changes }
    }

    /// Applies the edits in order.
    pub fn apply(&self, doc: &StateDocument) -> Result<StateDocument, DiffError> {
        let mut out = doc.clone();
        for change in &self.changes {
            apply_one(&mut out, change)?;
        }
        Ok(out)
    }
}

impl fmt::Display for DocumentDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.changes.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("diff does not apply at `{0}`")]
pub struct DiffError(pub String);

fn diff_into(a: &StateDocument, b: &StateDocument, path: &mut Vec<PathSeg>, out: &mut Vec<Change>) {
    if a == b {
        return;
    }
    match (a, b) {
        (StateDocument::Map(ma), StateDocument::Map(mb)) => {
            let mut keys: Vec<&String> = ma.keys().chain(mb.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                path.push(PathSeg::Key(k.clone()));
                match (ma.get(k), mb.get(k)) {
                    (Some(x), Some(y)) => diff_into(x, y, path, out),
                    (Some(x), None) => out.push(Change::Removed { path: path.clone(), old: x.clone() }),
                    (None, Some(y)) => out.push(Change::Added { path: path.clone(), value: y.clone() }),
                    (None, None) => unreachable!(),
                }
                path.pop();
            }
        }
        (StateDocument::List(la), StateDocument::List(lb)) => {
            let common = la.len().min(lb.len());
            for i in 0..common {
                path.push(PathSeg::Index(i));
                diff_into(&la[i], &lb[i], path, out);
                path.pop();
            }
            for (i, y) in lb.iter().enumerate().skip(common) {
                path.push(PathSeg::Index(i));
                out.push(Change::Added { path: path.clone(), value: y.clone() });
                path.pop();
            }
            for i in (common..la.len()).rev() {
                path.push(PathSeg::Index(i));
                out.push(Change::Removed { path: path.clone(), old: la[i].clone() });
                path.pop();
            }
        }
        _ => out.push(Change::Changed { path: path.clone(), old: a.clone(), new: b.clone() }),
    }
}

fn navigate<'a>(doc: &'a mut StateDocument, path: &[PathSeg]) -> Result<&'a mut StateDocument, DiffError> {
    let mut cur = doc;
    for seg in path {
        cur = match (cur, seg) {
            (StateDocument::Map(m), PathSeg::Key(k)) => m.get_mut(k),
            (StateDocument::List(l), PathSeg::Index(i)) => l.get_mut(*i),
            _ => None,
        }
        .ok_or_else(|| DiffError(render_path(path)))?;
    }
    Ok(cur)
}

fn apply_one(doc: &mut StateDocument, change: &Change) -> Result<(), DiffError> {
    let path = change.path();
    let err = || DiffError(render_path(path));
    let Some((last, parent_path)) = path.split_last() else {
        return match change {
            Change::Changed { new, .. } => {
                *doc = new.clone();
                Ok(())
            }
            _ => Err(err()),
        };
    };
    let parent = navigate(doc, parent_path)?;
    match (change, parent, last) {
        (Change::Added { value, .. }, StateDocument::Map(m), PathSeg::Key(k)) => {
            m.insert(k.clone(), value.clone());
        }
        (Change::Added { value, .. }, StateDocument::List(l), PathSeg::Index(i)) if *i == l.len() => {
            l.push(value.clone());
        }
        (Change::Removed { .. }, StateDocument::Map(m), PathSeg::Key(k)) => {
            m.remove(k).ok_or_else(err)?;
        }
        (Change::Removed { .. }, StateDocument::List(l), PathSeg::Index(i)) if *i + 1 == l.len() => {
            l.pop();
        }
        (Change::Changed { new, .. }, parent, _) => {
            *navigate(parent, std::slice::from_ref(last))? = new.clone();
        }
        _ => return Err(err()),
    }
    Ok(())
}
