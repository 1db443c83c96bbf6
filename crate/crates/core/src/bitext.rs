//! Mining (English preposition context, foreign preposition) pairs from
//! word-aligned parallel text.
//!
//! A candidate translation is accepted only when the words on both sides of
//! the English preposition are linked to the words on both sides of the
//! foreign one. Afterwards, per English preposition, foreign labels seen in
//! under 5% of its accepted candidates are dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Lines, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{preposition_key, Span};

#[derive(Debug, Error)]
pub enum BitextError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Format {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("line {line}: `{shorter}` ends before the other bitext files")]
    LineCountMismatch { line: usize, shorter: String },
    #[error("no foreign preposition inventory for language `{0}`")]
    UnknownLanguage(String),
    #[error("the English preposition list is empty")]
    EmptyPrepositionList,
}

fn format_err(source_name: &str, line: usize, message: impl Into<String>) -> BitextError {
    BitextError::Format {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

/// One sentence pair with 0-based `(english, foreign)` alignment links.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub english: Vec<String>,
    pub foreign: Vec<String>,
    pub links: BTreeSet<(usize, usize)>,
    pub language: String,
}

/// Foreign prepositions per language, case-folded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForeignPrepInventory {
    pub languages: BTreeMap<String, BTreeSet<String>>,
}

impl ForeignPrepInventory {
    pub fn insert(&mut self, language: &str, preps: impl IntoIterator<Item = String>) {
        self.languages
            .entry(language.to_string())
            .or_default()
            .extend(preps.into_iter().map(|p| p.to_lowercase()));
    }

    pub fn get(&self, language: &str) -> Option<&BTreeSet<String>> {
        self.languages.get(language)
    }
}

/// Reads a resource file with one entry per line; blank lines and `#` comments are skipped.
pub fn read_word_list(path: impl AsRef<Path>) -> Result<Vec<String>, BitextError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| BitextError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// An English sentence whose preposition `span` was translated as `label` in `language`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TranslationExample {
    pub tokens: Vec<String>,
    pub span: Span,
    pub language: String,
    pub label: String,
}

impl TranslationExample {
    pub fn english_prep(&self) -> String {
        preposition_key(
            self.tokens[self.span.start - 1..self.span.end]
                .iter()
                .map(String::as_str),
        )
    }
}

/// Iterates over three line-aligned files: English, foreign and Pharaoh alignments.
pub struct BitextReader {
    en: Lines<BufReader<File>>,
    fr: Lines<BufReader<File>>,
    align: Lines<BufReader<File>>,
    names: [String; 3],
    line: usize,
    language: String,
    done: bool,
}

fn open_lines(path: &Path) -> Result<Lines<BufReader<File>>, BitextError> {
    File::open(path)
        .map(|f| BufReader::new(f).lines())
        .map_err(|e| BitextError::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

pub fn read_bitext(
    en_path: impl AsRef<Path>,
    fr_path: impl AsRef<Path>,
    align_path: impl AsRef<Path>,
    language: &str,
) -> Result<BitextReader, BitextError> {
    let (en_path, fr_path, align_path) = (en_path.as_ref(), fr_path.as_ref(), align_path.as_ref());
    Ok(BitextReader {
        en: open_lines(en_path)?,
        fr: open_lines(fr_path)?,
        align: open_lines(align_path)?,
        names: [en_path, fr_path, align_path].map(|p| p.display().to_string()),
        line: 0,
        language: language.to_string(),
        done: false,
    })
}

/// Parses one Pharaoh line (`i-j` pairs, 0-based) and range-checks it.
pub fn parse_alignment(
    line: &str,
    en_len: usize,
    fr_len: usize,
    source_name: &str,
    lineno: usize,
) -> Result<BTreeSet<(usize, usize)>, BitextError> {
    let mut links = BTreeSet::new();
    for item in line.split_whitespace() {
        let (i, j) = item
            .split_once('-')
            .and_then(|(i, j)| Some((i.parse::<usize>().ok()?, j.parse::<usize>().ok()?)))
            .ok_or_else(|| format_err(source_name, lineno, format!("malformed link `{item}`")))?;
        if i >= en_len || j >= fr_len {
            return Err(format_err(
                source_name,
                lineno,
                format!("link `{item}` out of range for {en_len} English and {fr_len} foreign tokens"),
            ));
        }
        links.insert((i, j));
    }
    Ok(links)
}

impl BitextReader {
    fn next_line(lines: &mut Lines<BufReader<File>>, name: &str) -> Result<Option<String>, BitextError> {
        lines.next().transpose().map_err(|e| BitextError::Io {
            path: PathBuf::from(name),
            source: e,
        })
    }

    fn step(&mut self) -> Result<Option<SentencePair>, BitextError> {
        let en = Self::next_line(&mut self.en, &self.names[0])?;
        let fr = Self::next_line(&mut self.fr, &self.names[1])?;
        let al = Self::next_line(&mut self.align, &self.names[2])?;
        self.line += 1;
        let (en, fr, al) = match (en, fr, al) {
            (None, None, None) => return Ok(None),
            (Some(en), Some(fr), Some(al)) => (en, fr, al),
            (en, fr, _) => {
                let shorter = if en.is_none() {
                    0
                } else if fr.is_none() {
                    1
                } else {
                    2
                };
                return Err(BitextError::LineCountMismatch {
                    line: self.line,
                    shorter: self.names[shorter].clone(),
                });
            }
        };
        let english: Vec<String> = en.split_whitespace().map(String::from).collect();
        let foreign: Vec<String> = fr.split_whitespace().map(String::from).collect();
        let links = parse_alignment(&al, english.len(), foreign.len(), &self.names[2], self.line)?;
        Ok(Some(SentencePair {
            english,
            foreign,
            links,
            language: self.language.clone(),
        }))
    }
}

impl Iterator for BitextReader {
    type Item = Result<SentencePair, BitextError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(p)) => Some(Ok(p)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Foreign preposition aligned to `span` (1-based, inclusive) if it passes
/// the surrounding-word check.
///
/// Exactly one distinct foreign preposition string must be linked to the
/// span. If it occurs at several linked positions, the first position that
/// passes the check wins.
pub fn candidate_translation(pair: &SentencePair, span: Span, inventory: &BTreeSet<String>) -> Option<String> {
    let (start, end) = (span.start - 1, span.end - 1);
    let mut positions: BTreeSet<usize> = BTreeSet::new();
    let mut strings: BTreeSet<String> = BTreeSet::new();
    for &(e, f) in &pair.links {
        if e < start || e > end {
            continue;
        }
        let folded = pair.foreign[f].to_lowercase();
        if inventory.contains(&folded) {
            positions.insert(f);
            strings.insert(folded);
        }
    }
    if strings.len() != 1 {
        return None;
    }
    let side_ok = |e: Option<usize>, f: Option<usize>| match (e, f) {
        (None, None) => true,
        (Some(e), Some(f)) => pair.links.contains(&(e, f)),
        _ => false,
    };
    let en_len = pair.english.len();
    let fr_len = pair.foreign.len();
    let right_e = (end + 1 < en_len).then_some(end + 1);
    let left_e = start.checked_sub(1);
    positions
        .into_iter()
        .any(|f| {
            let left_f = f.checked_sub(1);
            let right_f = (f + 1 < fr_len).then_some(f + 1);
            side_ok(left_e, left_f) && side_ok(right_e, right_f)
        })
        .then(|| strings.into_iter().next().unwrap_or_default())
}

/// Occurrences of listed prepositions, longest match first, left to right.
pub fn find_prepositions(tokens: &[String], preps: &[Vec<String>]) -> Vec<Span> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut spans = Vec::new();
    let mut k = 0;
    while k < lowered.len() {
        let best = preps
            .iter()
            .filter(|p| !p.is_empty() && lowered[k..].starts_with(p))
            .map(Vec::len)
            .max();
        match best {
            Some(n) => {
                spans.push(Span::new(k + 1, k + n));
                k += n;
            }
            None => k += 1,
        }
    }
    spans
}

/// Splits list entries such as `because of` or `because_of` into lowercase tokens.
pub fn normalize_prep_list(list: &[String]) -> Vec<Vec<String>> {
    list.iter()
        .map(|p| {
            p.split(|c: char| c.is_whitespace() || c == '_')
                .filter(|s| !s.is_empty())
                .map(str::to_lowercase)
                .collect::<Vec<_>>()
        })
        .filter(|p| !p.is_empty())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelCount {
    pub english_prep: String,
    pub foreign: String,
    /// Occurrences that passed the surrounding check.
    pub candidates: usize,
    /// Whether the label survived the 5% filter.
    pub kept: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtractionStats {
    pub occurrences: usize,
    pub candidates: usize,
    pub kept: usize,
    pub labels: Vec<LabelCount>,
}

/// A label is kept when it accounts for at least 5% of its preposition's candidates.
pub fn passes_frequency_filter(count: usize, total: usize) -> bool {
    count * 100 >= total * 5
}

/// Mines translation examples for one language.
pub fn extract_examples(
    pairs: &[SentencePair],
    english_preps: &[String],
    inventory: &ForeignPrepInventory,
    language: &str,
) -> Result<(Vec<TranslationExample>, ExtractionStats), BitextError> {
    let preps = normalize_prep_list(english_preps);
    if preps.is_empty() {
        return Err(BitextError::EmptyPrepositionList);
    }
    let foreign = inventory
        .get(language)
        .ok_or_else(|| BitextError::UnknownLanguage(language.to_string()))?;

    let per_pair: Vec<(usize, Vec<TranslationExample>)> = pairs
        .par_iter()
        .map(|pair| {
            let spans = find_prepositions(&pair.english, &preps);
            let found = spans
                .iter()
                .filter_map(|&span| {
                    candidate_translation(pair, span, foreign).map(|label| TranslationExample {
                        tokens: pair.english.clone(),
                        span,
                        language: language.to_string(),
                        label,
                    })
                })
                .collect();
            (spans.len(), found)
        })
        .collect();

    let occurrences = per_pair.iter().map(|(n, _)| n).sum();
    let candidates: Vec<TranslationExample> = per_pair.into_iter().flat_map(|(_, c)| c).collect();

    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    for ex in &candidates {
        let prep = ex.english_prep();
        *counts.entry((prep.clone(), ex.label.clone())).or_default() += 1;
        *totals.entry(prep).or_default() += 1;
    }
    let labels: Vec<LabelCount> = counts
        .iter()
        .map(|((prep, label), &n)| LabelCount {
            english_prep: prep.clone(),
            foreign: label.clone(),
            candidates: n,
            kept: passes_frequency_filter(n, totals[prep]),
        })
        .collect();
    let keep: BTreeSet<(&str, &str)> = labels
        .iter()
        .filter(|l| l.kept)
        .map(|l| (l.english_prep.as_str(), l.foreign.as_str()))
        .collect();
    let candidate_count = candidates.len();
    let examples: Vec<TranslationExample> = candidates
        .iter()
        .filter(|ex| keep.contains(&(ex.english_prep().as_str(), ex.label.as_str())))
        .cloned()
        .collect();
    let stats = ExtractionStats {
        occurrences,
        candidates: candidate_count,
        kept: examples.len(),
        labels,
    };
    Ok((examples, stats))
}

/// Counts per `(language, English preposition, foreign label)`.
pub fn corpus_stats(examples: &[TranslationExample]) -> BTreeMap<(String, String, String), usize> {
    let mut table = BTreeMap::new();
    for ex in examples {
        *table
            .entry((ex.language.clone(), ex.english_prep(), ex.label.clone()))
            .or_default() += 1;
    }
    table
}

/// Writes `tokens<TAB>span_start<TAB>span_end<TAB>language<TAB>label` rows.
pub fn write_examples<W: Write>(mut out: W, examples: &[TranslationExample]) -> io::Result<()> {
    for ex in examples {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            ex.tokens.join(" "),
            ex.span.start,
            ex.span.end,
            ex.language,
            ex.label
        )?;
    }
    Ok(())
}

pub fn read_examples(path: impl AsRef<Path>) -> Result<Vec<TranslationExample>, BitextError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| BitextError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_examples(BufReader::new(file), &path.display().to_string())
}

pub fn parse_examples<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<TranslationExample>, BitextError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| BitextError::Io {
            path: PathBuf::from(source_name),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(format_err(
                source_name,
                lineno,
                format!("expected 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        let tokens: Vec<String> = cols[0].split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| format_err(source_name, lineno, format!("invalid span index `{s}`")))
        };
        let span = Span::new(num(cols[1])?, num(cols[2])?);
        if !span.is_valid_for(tokens.len()) {
            return Err(format_err(source_name, lineno, "span outside the sentence"));
        }
        out.push(TranslationExample {
            tokens,
            span,
            language: cols[3].to_string(),
            label: cols[4].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn pair(en: &str, fr: &str, links: &[(usize, usize)]) -> SentencePair {
        SentencePair {
            english: toks(en),
            foreign: toks(fr),
            links: links.iter().copied().collect(),
            language: "fr".into(),
        }
    }

    fn french() -> BTreeSet<String> {
        ["dans", "en", "de", "à"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn crisis_in_the_region_is_dans() {
        // 0 crisis 1 and 2 tension 3 in 4 the 5 region
        // 0 crise 1 et 2 tension 3 dans 4 la 5 région
        let links = [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5)];
        let p = pair(
            "crisis and tension in the region",
            "crise et tension dans la région",
            &links,
        );
        assert_eq!(
            candidate_translation(&p, Span::single(4), &french()),
            Some("dans".into())
        );

        let without_the: Vec<_> = links.iter().copied().filter(|l| *l != (4, 4)).collect();
        let p = pair(
            "crisis and tension in the region",
            "crise et tension dans la région",
            &without_the,
        );
        assert_eq!(candidate_translation(&p, Span::single(4), &french()), None);
    }

    #[test]
    fn unaligned_preposition_gives_nothing() {
        let p = pair(
            "tension in the region",
            "tension dans la région",
            &[(0, 0), (2, 2), (3, 3)],
        );
        assert_eq!(candidate_translation(&p, Span::single(2), &french()), None);
    }

    #[test]
    fn edges_pass_only_when_both_sides_lack_a_neighbour() {
        let p = pair("in Paris", "à Paris", &[(0, 0), (1, 1)]);
        assert_eq!(candidate_translation(&p, Span::single(1), &french()), Some("à".into()));
        let p = pair("in Paris", "vive à Paris", &[(0, 1), (1, 2)]);
        assert_eq!(candidate_translation(&p, Span::single(1), &french()), None);
    }

    #[test]
    fn two_distinct_foreign_preps_are_rejected() {
        let p = pair("a in b", "x dans en b", &[(0, 0), (1, 1), (1, 2), (2, 3)]);
        assert_eq!(candidate_translation(&p, Span::single(2), &french()), None);
    }

    #[test]
    fn alignment_parsing() {
        assert_eq!(
            parse_alignment("0-0 1-1", 2, 2, "a", 1).unwrap(),
            [(0, 0), (1, 1)].into_iter().collect()
        );
        assert!(parse_alignment("", 2, 2, "a", 1).unwrap().is_empty());
        assert!(parse_alignment("5-0", 2, 2, "a", 1).is_err());
        assert!(parse_alignment("0_0", 2, 2, "a", 1).is_err());
    }

    #[test]
    fn longest_match_for_multiword() {
        let list = normalize_prep_list(&["in".into(), "in front of".into(), "of".into()]);
        let spans = find_prepositions(&toks("In front of the house of"), &list);
        assert_eq!(spans, vec![Span::new(1, 3), Span::single(6)]);
    }

    fn repeated(n: usize, fr_prep: &str) -> Vec<SentencePair> {
        (0..n)
            .map(|_| pair("x in y", &format!("x {fr_prep} y"), &[(0, 0), (1, 1), (2, 2)]))
            .collect()
    }

    #[test]
    fn five_percent_filter_drops_rare_label() {
        let mut pairs = repeated(96, "dans");
        pairs.extend(repeated(4, "en"));
        let mut inv = ForeignPrepInventory::default();
        inv.insert("fr", french());
        let (ex, stats) = extract_examples(&pairs, &["in".into()], &inv, "fr").unwrap();
        assert_eq!(ex.len(), 96);
        assert!(ex.iter().all(|e| e.label == "dans"));
        assert_eq!(stats.candidates, 100);
        assert_eq!(stats.labels.iter().filter(|l| !l.kept).count(), 1);
    }

    #[test]
    fn single_candidate_is_kept() {
        let mut inv = ForeignPrepInventory::default();
        inv.insert("fr", french());
        let (ex, _) = extract_examples(&repeated(1, "en"), &["in".into()], &inv, "fr").unwrap();
        assert_eq!(ex.len(), 1);
        assert!(extract_examples(&repeated(1, "en"), &["in".into()], &inv, "de").is_err());
        assert!(extract_examples(&repeated(1, "en"), &[], &inv, "fr").is_err());
    }

    #[test]
    fn stats_and_tsv() {
        assert!(corpus_stats(&[]).is_empty());
        let e = TranslationExample {
            tokens: toks("a in b"),
            span: Span::single(2),
            language: "fr".into(),
            label: "dans".into(),
        };
        let table = corpus_stats(&[e.clone(), e.clone()]);
        assert_eq!(table[&("fr".into(), "in".into(), "dans".into())], 2);
        let mut buf = Vec::new();
        write_examples(&mut buf, std::slice::from_ref(&e)).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a in b\t2\t2\tfr\tdans\n");
        assert_eq!(parse_examples(buf.as_slice(), "t").unwrap(), vec![e]);
    }

    #[test]
    fn link_order_does_not_matter() {
        let links = vec![(2, 2), (0, 0), (1, 1)];
        let mut rev = links.clone();
        rev.reverse();
        let a = pair("x in y", "x dans y", &links);
        let b = pair("x in y", "x dans y", &rev);
        assert_eq!(
            candidate_translation(&a, Span::single(2), &french()),
            candidate_translation(&b, Span::single(2), &french())
        );
    }
}
