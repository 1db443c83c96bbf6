use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// The coarse supersense inventory shared by every preposition.
pub const COARSE_SUPERSENSES: [&str; 12] = [
    "Affector",
    "Attribute",
    "Circumstance",
    "Co-Participant",
    "Configuration",
    "Experiencer",
    "Explanation",
    "Manner",
    "Place",
    "Stimulus",
    "Temporal",
    "Undergoer",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InventoryMode {
    Unified,
    PerPreposition,
}

/// Which sense labels each preposition may take.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SenseInventory {
    /// One label list for all prepositions.
    Unified(Vec<String>),
    /// A label list per preposition key.
    PerPreposition(BTreeMap<String, Vec<String>>),
}

impl SenseInventory {
    pub fn coarse() -> Self {
        SenseInventory::Unified(COARSE_SUPERSENSES.iter().map(|s| s.to_string()).collect())
    }

    pub fn mode(&self) -> InventoryMode {
        match self {
            SenseInventory::Unified(_) => InventoryMode::Unified,
            SenseInventory::PerPreposition(_) => InventoryMode::PerPreposition,
        }
    }

    pub fn labels_for(&self, preposition: &str) -> Option<&[String]> {
        match self {
            SenseInventory::Unified(labels) => Some(labels),
            SenseInventory::PerPreposition(map) => map.get(preposition).map(Vec::as_slice),
        }
    }

    pub fn contains(&self, preposition: &str, label: &str) -> bool {
        self.labels_for(preposition)
            .is_some_and(|ls| ls.iter().any(|l| l == label))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses an inventory file.
    ///
    /// Either every line is a bare label (unified inventory), or every line
    /// is `preposition<TAB>label,label,...`. Blank lines and `#` comments are
    /// ignored. Prepositions use the same `_`-joined lowercase keys as
    /// [`super::PrepInstance::preposition`].
    pub fn parse(text: &str, source_name: &str) -> Result<Self, CorpusError> {
        let mut unified = Vec::new();
        let mut per_prep: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                None => unified.push(line.to_string()),
                Some((prep, labels)) => {
                    let labels: Vec<String> = labels
                        .split(',')
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(String::from)
                        .collect();
                    if labels.is_empty() {
                        return Err(CorpusError::EmptyLabels {
                            source_name: source_name.to_string(),
                            line: i + 1,
                        });
                    }
                    per_prep.insert(prep.trim().to_lowercase(), labels);
                }
            }
            if !unified.is_empty() && !per_prep.is_empty() {
                return Err(CorpusError::format(
                    source_name,
                    i + 1,
                    "mixes unified labels with per-preposition rows",
                ));
            }
        }
        if !per_prep.is_empty() {
            Ok(SenseInventory::PerPreposition(per_prep))
        } else if !unified.is_empty() {
            Ok(SenseInventory::Unified(unified))
        } else {
            Err(CorpusError::format(source_name, 0, "empty sense inventory"))
        }
    }
}
