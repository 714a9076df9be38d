//! Canonical off-chain state documents.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value as Json;

/// A finite decimal with `-0` folded into `0`.
///
/// Rendering uses the shortest representation that round-trips, so there are
/// no trailing zeros.
#[derive(Clone, Copy, Debug)]
pub struct Decimal(f64);

impl Decimal {
    pub fn new(v: f64) -> Option<Decimal> {
        v.is_finite().then_some(Decimal(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Decimal {}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A tree of maps, lists and scalars. Map keys are kept sorted.
///
/// Integers and decimals are distinct: `1` and `1.0` are not equal.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum StateDocument {
    #[default]
    Null,
    Bool(bool),
    Int(i64),
    Decimal(Decimal),
    Str(String),
    List(Vec<StateDocument>),
    Map(BTreeMap<String, StateDocument>),
}

impl StateDocument {
    pub fn empty_map() -> Self {
        StateDocument::Map(BTreeMap::new())
    }

    pub fn from_json(value: &Json) -> Result<Self, String> {
        Ok(match value {
            Json::Null => StateDocument::Null,
            Json::Bool(b) => StateDocument::Bool(*b),
            Json::Number(n) => match n.as_i64() {
                Some(i) => StateDocument::Int(i),
                None => {
                    let f = n.as_f64().ok_or_else(|| format!("unrepresentable number {n}"))?;
                    StateDocument::Decimal(Decimal::new(f).ok_or_else(|| format!("non-finite number {n}"))?)
                }
            },
            Json::String(s) => StateDocument::Str(s.clone()),
            Json::Array(items) => StateDocument::List(items.iter().map(Self::from_json).collect::<Result<_, _>>()?),
            Json::Object(map) => StateDocument::Map(
                map.iter().map(|(k, v)| Ok((k.clone(), Self::from_json(v)?))).collect::<Result<_, String>>()?,
            ),
        })
    }

    pub fn to_json(&self) -> Json {
        match self {
            StateDocument::Null => Json::Null,
            StateDocument::Bool(b) => Json::Bool(*b),
            StateDocument::Int(i) => Json::from(*i),
            StateDocument::Decimal(d) => serde_json::Number::from_f64(d.get()).map(Json::Number).unwrap_or(Json::Null),
            StateDocument::Str(s) => Json::String(s.clone()),
            StateDocument::List(items) => Json::Array(items.iter().map(Self::to_json).collect()),
            StateDocument::Map(map) => Json::Object(map.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let json: Json = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Self::from_json(&json)
    }

    /// Canonical text: sorted keys, no insignificant whitespace.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        match self {
            StateDocument::Null => out.push_str("null"),
            StateDocument::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            StateDocument::Int(i) => out.push_str(&i.to_string()),
            StateDocument::Decimal(d) => {
                let s = d.to_string();
                out.push_str(&s);
                // Keep decimals distinguishable from integers in text form.
                if !s.contains(['.', 'e', 'E']) {
                    out.push_str(".0");
                }
            }
            StateDocument::Str(s) => out.push_str(&Json::String(s.clone()).to_string()),
            StateDocument::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_canonical(out);
                }
                out.push(']');
            }
            StateDocument::Map(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&Json::String(k.clone()).to_string());
                    out.push(':');
                    v.write_canonical(out);
                }
                out.push('}');
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&StateDocument> {
        match self {
            StateDocument::Map(m) => m.get(key),
            _ => None,
        }
    }
}

impl fmt::Display for StateDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text())
    }
}

impl Serialize for StateDocument {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateDocument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = Json::deserialize(deserializer)?;
        StateDocument::from_json(&json).map_err(serde::de::Error::custom)
    }
}

impl From<&str> for StateDocument {
    fn from(s: &str) -> Self {
        StateDocument::Str(s.to_string())
    }
}

impl From<i64> for StateDocument {
    fn from(i: i64) -> Self {
        StateDocument::Int(i)
    }
}

/// One step of a document path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathSeg {
    Index(usize),
    Key(String),
}

/// Renders a path as dot-separated segments, e.g. `items.0.title`.
pub fn render_path(path: &[PathSeg]) -> String {
    path.iter()
        .map(|s| match s {
            PathSeg::Index(i) => i.to_string(),
            PathSeg::Key(k) => k.clone(),
        })
        .collect::<Vec<_>>()
        .join(".")
}
