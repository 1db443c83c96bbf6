use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{PrepInstance, Sentence};
use crate::bitext::TranslationExample;

pub const UNK_ID: usize = 0;
pub const BOUNDARY_ID: usize = 1;
pub const NONE_ID: usize = 2;
const RESERVED: usize = 3;

/// Placeholder for feature positions outside the sentence.
pub const BOUNDARY: &str = "<BOUNDARY>";
/// Placeholder for a missing head, head's head or modifier.
pub const NONE: &str = "<NONE>";
const UNK: &str = "<UNK>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Namespace {
    Wordform,
    Lemma,
    Pos,
    Deprel,
    Preposition,
}

impl Namespace {
    pub const ALL: [Namespace; 5] = [
        Namespace::Wordform,
        Namespace::Lemma,
        Namespace::Pos,
        Namespace::Deprel,
        Namespace::Preposition,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Table {
    entries: Vec<String>,
    index: HashMap<String, usize>,
}

impl Table {
    fn from_entries(entries: Vec<String>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i + RESERVED))
            .collect();
        Self { entries, index }
    }
}

/// Per-namespace string ids. Ids 0, 1 and 2 are UNK, BOUNDARY and NONE.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabSnapshot", into = "VocabSnapshot")]
pub struct VocabIndex {
    tables: [Table; 5],
}

#[derive(Serialize, Deserialize)]
struct VocabSnapshot {
    wordform: Vec<String>,
    lemma: Vec<String>,
    pos: Vec<String>,
    deprel: Vec<String>,
    preposition: Vec<String>,
}

impl From<VocabSnapshot> for VocabIndex {
    fn from(s: VocabSnapshot) -> Self {
        Self {
            tables: [s.wordform, s.lemma, s.pos, s.deprel, s.preposition].map(Table::from_entries),
        }
    }
}

impl From<VocabIndex> for VocabSnapshot {
    fn from(v: VocabIndex) -> Self {
        let [wordform, lemma, pos, deprel, preposition] = v.tables.map(|t| t.entries);
        Self {
            wordform,
            lemma,
            pos,
            deprel,
            preposition,
        }
    }
}

impl VocabIndex {
    /// Id of `s`, falling back to UNK. Placeholder spellings map to their reserved ids.
    pub fn lookup(&self, ns: Namespace, s: &str) -> usize {
        match s {
            BOUNDARY => BOUNDARY_ID,
            NONE => NONE_ID,
            _ => self.get(ns, s).unwrap_or(UNK_ID),
        }
    }

    /// Id of a real entry, if present.
    pub fn get(&self, ns: Namespace, s: &str) -> Option<usize> {
        self.tables[ns.slot()].index.get(s).copied()
    }

    /// Number of ids including the reserved ones.
    pub fn size(&self, ns: Namespace) -> usize {
        self.tables[ns.slot()].entries.len() + RESERVED
    }

    pub fn entries(&self, ns: Namespace) -> &[String] {
        &self.tables[ns.slot()].entries
    }

    pub fn string(&self, ns: Namespace, id: usize) -> &str {
        match id {
            UNK_ID => UNK,
            BOUNDARY_ID => BOUNDARY,
            NONE_ID => NONE,
            _ => &self.tables[ns.slot()].entries[id - RESERVED],
        }
    }

    /// Copy of `self` with one namespace taken from `other`.
    pub fn with_namespace_from(&self, ns: Namespace, other: &VocabIndex) -> VocabIndex {
        let mut v = self.clone();
        v.tables[ns.slot()] = other.tables[ns.slot()].clone();
        v
    }
}

/// Collects strings per namespace; ids are assigned in sorted order.
#[derive(Clone, Debug, Default)]
pub struct VocabBuilder {
    sets: [BTreeSet<String>; 5],
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, ns: Namespace, s: &str) {
        if s != BOUNDARY && s != NONE && s != UNK {
            self.sets[ns.slot()].insert(s.to_string());
        }
    }

    /// Adds lowercased forms, lemmas, POS tags and dependency labels.
    pub fn add_sentence(&mut self, s: &Sentence) {
        for t in &s.tokens {
            self.add(Namespace::Wordform, &t.form.to_lowercase());
            self.add(Namespace::Lemma, &t.lemma);
            self.add(Namespace::Pos, &t.upos);
            self.add(Namespace::Deprel, &t.deprel);
        }
    }

    pub fn add_instance(&mut self, inst: &PrepInstance) {
        self.add(Namespace::Preposition, &inst.preposition());
    }

    pub fn add_translation(&mut self, ex: &TranslationExample) {
        for t in &ex.tokens {
            self.add(Namespace::Wordform, &t.to_lowercase());
        }
    }

    pub fn build(self) -> VocabIndex {
        VocabIndex {
            tables: self.sets.map(|s| Table::from_entries(s.into_iter().collect())),
        }
    }
}

/// Vocabulary over sentences, the prepositions of `instances` and the
/// English side of pretraining examples.
pub fn build_vocab<'a>(
    sentences: impl IntoIterator<Item = &'a Sentence>,
    instances: &[PrepInstance],
    examples: &[TranslationExample],
) -> VocabIndex {
    let mut b = VocabBuilder::new();
    for s in sentences {
        b.add_sentence(s);
    }
    for i in instances {
        b.add_instance(i);
    }
    for e in examples {
        b.add_translation(e);
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn sentence(lemmas: &[&str]) -> Sentence {
        Sentence {
            id: "s".into(),
            tokens: lemmas
                .iter()
                .enumerate()
                .map(|(i, l)| Token {
                    index: i + 1,
                    form: l.to_uppercase(),
                    lemma: l.to_string(),
                    upos: "NOUN".into(),
                    head: 0,
                    deprel: "dep".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn empty_input_only_reserved() {
        let v = build_vocab([], &[], &[]);
        for ns in Namespace::ALL {
            assert_eq!(v.size(ns), 3);
        }
    }

    #[test]
    fn shared_lemma_single_id() {
        let a = sentence(&["book", "a"]);
        let b = sentence(&["book", "room"]);
        let v = build_vocab([&a, &b], &[], &[]);
        assert_eq!(v.entries(Namespace::Lemma), &["a", "book", "room"]);
        assert_eq!(
            v.lookup(Namespace::Wordform, "book"),
            v.get(Namespace::Wordform, "book").unwrap()
        );
    }

    #[test]
    fn lookups_are_total_and_placeholders_reserved() {
        let a = sentence(&["x"]);
        let v = build_vocab([&a], &[], &[]);
        assert_eq!(v.lookup(Namespace::Lemma, "never-seen-word"), UNK_ID);
        assert_eq!(v.lookup(Namespace::Lemma, BOUNDARY), BOUNDARY_ID);
        assert_eq!(v.lookup(Namespace::Pos, NONE), NONE_ID);
        assert!(v.lookup(Namespace::Lemma, "x") >= 3);
    }

    #[test]
    fn ids_stable_across_builds_and_serde() {
        let a = sentence(&["c", "b", "a"]);
        let v1 = build_vocab([&a], &[], &[]);
        let v2 = build_vocab([&a], &[], &[]);
        assert_eq!(v1, v2);
        let json = serde_json::to_string(&v1).unwrap();
        let back: VocabIndex = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v1);
        assert_eq!(back.lookup(Namespace::Lemma, "b"), v1.lookup(Namespace::Lemma, "b"));
    }
}
