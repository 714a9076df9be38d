//! Field include/exclude rules.
//!
//! Patterns match dot-separated document paths (`items.0.title`). Globs use
//! `*` for one segment or part of one, `**` for any depth and `?` for one
//! character; a `re:` prefix takes the rest as a regular expression. Both
//! must match the whole path. The first matching rule decides; unmatched
//! paths are included.

use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::document::{render_path, PathSeg, StateDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleAction {
    Include,
    Exclude,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRule {
    pub pattern: String,
    pub action: RuleAction,
    /// Compare matching lists as multisets.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unordered: bool,
}

impl FieldRule {
    pub fn include(pattern: &str) -> Self {
        FieldRule { pattern: pattern.into(), action: RuleAction::Include, unordered: false }
    }

    pub fn exclude(pattern: &str) -> Self {
        FieldRule { pattern: pattern.into(), action: RuleAction::Exclude, unordered: false }
    }

    pub fn unordered(mut self) -> Self {
        self.unordered = true;
        self
    }
}

fn glob_to_regex(glob: &str) -> String {
    let mut re = String::from("^(?:");
    let mut chars = glob.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '*' if chars.peek() == Some(&'*') => {
                chars.next();
                re.push_str(".*");
            }
            '*' => re.push_str("[^.]*"),
            '?' => re.push_str("[^.]"),
            other => re.push_str(&regex::escape(&other.to_string())),
        }
    }
    re.push_str(")$");
    re
}

#[derive(Clone, Debug)]
pub struct FieldRuleSet {
    rules: Vec<FieldRule>,
    compiled: Vec<Regex>,
}

impl Default for FieldRuleSet {
    fn default() -> Self {
        FieldRuleSet { rules: Vec::new(), compiled: Vec::new() }
    }
}

impl PartialEq for FieldRuleSet {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

impl Serialize for FieldRuleSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rules.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldRuleSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rules = Vec::<FieldRule>::deserialize(d)?;
        FieldRuleSet::new(rules).map_err(serde::de::Error::custom)
    }
}

impl FieldRuleSet {
    pub fn new(rules: Vec<FieldRule>) -> Result<Self, String> {
        let compiled = rules
            .iter()
            .map(|r| {
                let src = match r.pattern.strip_prefix("re:") {
                    Some(re) => format!("^(?:{re})$"),
                    None => glob_to_regex(&r.pattern),
                };
                Regex::new(&src).map_err(|e| format!("bad pattern `{}`: {e}", r.pattern))
            })
            .collect::<Result<_, _>>()?;
        Ok(FieldRuleSet { rules, compiled })
    }

    pub fn rules(&self) -> &[FieldRule] {
        &self.rules
    }

    fn first_match(&self, path: &str) -> Option<&FieldRule> {
        self.compiled.iter().position(|re| re.is_match(path)).map(|i| &self.rules[i])
    }

    pub fn action(&self, path: &str) -> RuleAction {
        self.first_match(path).map_or(RuleAction::Include, |r| r.action)
    }

    pub fn is_unordered(&self, path: &str) -> bool {
        self.first_match(path).is_some_and(|r| r.unordered)
    }

    /// Stable identity of the rule set; snapshots filtered under different
    /// fingerprints are not comparable.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(&self.rules).expect("rules serialize");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }

    /// Removes excluded fields and sorts unordered lists.
    ///
    /// A map or list whose children were all excluded is removed too.
    pub fn apply(&self, doc: &StateDocument) -> StateDocument {
        let mut path = Vec::new();
        self.filter_node(doc, &mut path).unwrap_or_else(StateDocument::empty_map)
    }

    fn filter_node(&self, node: &StateDocument, path: &mut Vec<PathSeg>) -> Option<StateDocument> {
        match node {
            StateDocument::Map(map) => {
                let mut out = BTreeMap::new();
                for (k, v) in map {
                    path.push(PathSeg::Key(k.clone()));
                    if self.action(&render_path(path)) == RuleAction::Include {
                        if let Some(child) = self.filter_node(v, path) {
                            out.insert(k.clone(), child);
                        }
                    }
                    path.pop();
                }
                (map.is_empty() || !out.is_empty()).then_some(StateDocument::Map(out))
            }
            StateDocument::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, v) in items.iter().enumerate() {
                    path.push(PathSeg::Index(i));
                    if self.action(&render_path(path)) == RuleAction::Include {
                        if let Some(child) = self.filter_node(v, path) {
                            out.push(child);
                        }
                    }
                    path.pop();
                }
                if !path.is_empty() && self.is_unordered(&render_path(path)) {
                    out.sort_by_cached_key(|d| d.canonical_text());
                }
                (items.is_empty() || !out.is_empty()).then_some(StateDocument::List(out))
            }
            scalar => Some(scalar.clone()),
        }
    }
}
