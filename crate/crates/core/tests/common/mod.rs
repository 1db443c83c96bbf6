//! Synthetic preposition-sense task shared by the integration tests.
//!
//! Every sentence carries one preposition and one cue word. The cue decides
//! the sense and sits three to five tokens away from the preposition, so it
//! never lands in the feature window (neighbors, head, head of head, first
//! modifier). In every foreign language the preposition translates to a
//! word determined by the sense.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use prepsense::bitext::{ForeignPrepInventory, SentencePair};
use prepsense::corpus::{PrepInstance, Sentence, Span, Token};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SENSES: [&str; 4] = ["Temporal", "Place", "Manner", "Explanation"];
pub const ENGLISH_PREPS: [&str; 3] = ["in", "on", "at"];
pub const LANGUAGES: [(&str, [&str; 4]); 3] = [
    ("fr", ["pendant", "dans", "avec", "pour"]),
    ("de", ["während", "bei", "mit", "wegen"]),
    ("es", ["durante", "en", "con", "por"]),
];

#[derive(Clone, Debug)]
pub struct TaskShape {
    pub fillers: usize,
    pub cues: usize,
}

impl Default for TaskShape {
    fn default() -> Self {
        Self { fillers: 60, cues: 80 }
    }
}

pub struct Generated {
    pub sentence: Sentence,
    pub span: Span,
    pub sense: usize,
}

pub struct Task {
    pub shape: TaskShape,
    rng: ChaCha8Rng,
    next_id: usize,
}

impl Task {
    pub fn new(shape: TaskShape, seed: u64) -> Self {
        Self {
            shape,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_id: 0,
        }
    }

    fn filler(&mut self) -> String {
        format!("w{:02}", self.rng.gen_range(0..self.shape.fillers))
    }

    pub fn sentence(&mut self) -> Generated {
        let len: usize = self.rng.gen_range(10..=14);
        let d: usize = self.rng.gen_range(3..=5);
        // Token 1 is the root and must stay a filler: it is the head of the
        // preposition's head.
        let (prep, cue) = loop {
            let prep = self.rng.gen_range(2..=len);
            let left = self.rng.gen_bool(0.5);
            let cue = if left { prep.checked_sub(d) } else { Some(prep + d) };
            match cue {
                Some(c) if (2..=len).contains(&c) => break (prep, c),
                _ => continue,
            }
        };
        let cue_id = self.rng.gen_range(0..self.shape.cues);
        let sense = cue_id % SENSES.len();
        let prep_word = *ENGLISH_PREPS.choose(&mut self.rng).unwrap();
        let prep_head = if prep < len { prep + 1 } else { prep - 1 };
        let tokens = (1..=len)
            .map(|i| {
                let form = if i == prep {
                    prep_word.to_string()
                } else if i == cue {
                    format!("c{cue_id:02}")
                } else {
                    self.filler()
                };
                let (head, deprel, upos) = match i {
                    1 => (0, "root", "VERB"),
                    _ if i == prep => (prep_head, "case", "ADP"),
                    _ => (1, "dep", "NOUN"),
                };
                Token {
                    index: i,
                    lemma: form.clone(),
                    form,
                    upos: upos.into(),
                    head,
                    deprel: deprel.into(),
                }
            })
            .collect();
        self.next_id += 1;
        Generated {
            sentence: Sentence {
                id: format!("s{}", self.next_id),
                tokens,
            },
            span: Span::single(prep),
            sense,
        }
    }

    /// Labeled instances over fresh sentences.
    pub fn instances(&mut self, n: usize) -> Vec<PrepInstance> {
        (0..n)
            .map(|_| {
                let g = self.sentence();
                PrepInstance {
                    sentence: Arc::new(g.sentence),
                    span: g.span,
                    gold: Some(vec![SENSES[g.sense].to_string()]),
                }
            })
            .collect()
    }

    /// Word-aligned translations, languages taken in turn. Each foreign token
    /// is a prefixed copy of its English token except the preposition.
    pub fn bitext(&mut self, n: usize) -> Vec<SentencePair> {
        (0..n)
            .map(|k| {
                let (lang, preps) = LANGUAGES[k % LANGUAGES.len()];
                let g = self.sentence();
                let english: Vec<String> = g.sentence.tokens.iter().map(|t| t.form.clone()).collect();
                let foreign = english
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        if i + 1 == g.span.start {
                            preps[g.sense].to_string()
                        } else {
                            format!("{lang}_{w}")
                        }
                    })
                    .collect();
                SentencePair {
                    links: (0..english.len()).map(|i| (i, i)).collect(),
                    english,
                    foreign,
                    language: lang.to_string(),
                }
            })
            .collect()
    }
}

pub fn prep_list() -> Vec<String> {
    ENGLISH_PREPS.iter().map(|s| s.to_string()).collect()
}

pub fn foreign_inventory() -> ForeignPrepInventory {
    let mut inv = ForeignPrepInventory::default();
    for (lang, preps) in LANGUAGES {
        inv.insert(lang, preps.iter().map(|s| s.to_string()));
    }
    inv
}

pub fn sentences_of(instances: &[PrepInstance]) -> Vec<Sentence> {
    let mut seen = BTreeSet::new();
    instances
        .iter()
        .filter(|i| seen.insert(i.sentence.id.clone()))
        .map(|i| (*i.sentence).clone())
        .collect()
}

/// Rows in the annotation format read by `train` and `eval`.
pub fn annotation_rows(instances: &[PrepInstance]) -> String {
    let mut out = String::new();
    for i in instances {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            i.sentence.id,
            i.span.start,
            i.span.end,
            i.gold.as_deref().unwrap_or_default().join(",")
        );
    }
    out
}

/// The three files of a bitext for one language: English, foreign, Pharaoh links.
pub fn bitext_files(pairs: &[SentencePair], language: &str) -> (String, String, String) {
    let (mut en, mut fr, mut al) = (String::new(), String::new(), String::new());
    for p in pairs.iter().filter(|p| p.language == language) {
        let _ = writeln!(en, "{}", p.english.join(" "));
        let _ = writeln!(fr, "{}", p.foreign.join(" "));
        let links: Vec<String> = p.links.iter().map(|(e, f)| format!("{e}-{f}")).collect();
        let _ = writeln!(al, "{}", links.join(" "));
    }
    (en, fr, al)
}
