use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two target classes. `Private` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Private,
    Public,
}

impl Class {
    pub fn sign(self) -> f64 {
        match self {
            Class::Private => 1.0,
            Class::Public => -1.0,
        }
    }

    /// Maps a decision sign back to a class; zero goes to `Private`.
    pub fn from_sign(value: f64) -> Self {
        if value >= 0.0 {
            Class::Private
        } else {
            Class::Public
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "private" => Some(Class::Private),
            "public" => Some(Class::Public),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Private => "private",
            Class::Public => "public",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `sample_id -> class` table, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet {
    order: Vec<String>,
    entries: HashMap<String, Class>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, class: Class) -> Result<()> {
        let id = id.into();
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.order.push(id.clone());
        self.entries.insert(id, class);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Class> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Class)> + '_ {
        self.order.iter().map(|id| (id.as_str(), self.entries[id]))
    }

    /// ±1 targets for `ids`, in order. Every id must be labelled.
    pub fn signs_for(&self, ids: &[String]) -> Result<Vec<f64>> {
        ids.iter()
            .map(|id| {
                self.get(id)
                    .map(Class::sign)
                    .ok_or_else(|| Error::MissingLabel(id.clone()))
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_id,label\n");
        for (id, class) in self.iter() {
            out.push_str(id);
            out.push(',');
            out.push_str(class.as_str());
            out.push('\n');
        }
        out
    }
}

pub fn parse_labels(text: &str, path: &Path) -> Result<LabelSet> {
    let mut labels = LabelSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 && line == "sample_id,label" {
            continue;
        }
        let (id, token) = line.rsplit_once(',').ok_or_else(|| Error::MalformedLabel {
            path: path.to_path_buf(),
            line: idx + 1,
            record: line.to_owned(),
        })?;
        let token = token.trim();
        let class = Class::parse(token).ok_or_else(|| Error::UnknownLabel {
            path: path.to_path_buf(),
            line: idx + 1,
            label: token.to_owned(),
        })?;
        labels.insert(id, class)?;
    }
    if labels.is_empty() {
        return Err(Error::EmptyLabels(path.to_path_buf()));
    }
    Ok(labels)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, path)
}

pub fn write_labels(labels: &LabelSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, labels.to_csv()).map_err(|e| Error::io(path, e))
}
