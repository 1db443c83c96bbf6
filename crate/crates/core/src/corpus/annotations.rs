use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use super::{CorpusError, PrepInstance, SenseInventory, Sentence, Span};

pub fn read_sense_annotations(
    path: impl AsRef<Path>,
    sentences: &[Arc<Sentence>],
    inventory: &SenseInventory,
) -> Result<Vec<PrepInstance>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_sense_annotations(BufReader::new(file), &path.display().to_string(), sentences, inventory)
}

/// Rows are `sentence_id<TAB>span_start<TAB>span_end<TAB>label[,label...]`.
pub fn parse_sense_annotations<R: BufRead>(
    reader: R,
    source_name: &str,
    sentences: &[Arc<Sentence>],
    inventory: &SenseInventory,
) -> Result<Vec<PrepInstance>, CorpusError> {
    let rows = parse_rows(reader, source_name, sentences, true)?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, inst) in rows {
        let prep = inst.preposition();
        let gold = inst.gold.as_deref().unwrap_or_default();
        for label in gold {
            if !inventory.contains(&prep, label) {
                return Err(CorpusError::UnknownLabel {
                    source_name: source_name.to_string(),
                    line,
                    label: label.clone(),
                    preposition: prep,
                });
            }
        }
        out.push(inst);
    }
    Ok(out)
}

pub fn read_spans(path: impl AsRef<Path>, sentences: &[Arc<Sentence>]) -> Result<Vec<PrepInstance>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_spans(BufReader::new(file), &path.display().to_string(), sentences)
}

/// Like the annotation format, but the label column is optional and unchecked.
pub fn parse_spans<R: BufRead>(
    reader: R,
    source_name: &str,
    sentences: &[Arc<Sentence>],
) -> Result<Vec<PrepInstance>, CorpusError> {
    Ok(parse_rows(reader, source_name, sentences, false)?
        .into_iter()
        .map(|(_, inst)| inst)
        .collect())
}

fn parse_rows<R: BufRead>(
    reader: R,
    source_name: &str,
    sentences: &[Arc<Sentence>],
    labels_required: bool,
) -> Result<Vec<(usize, PrepInstance)>, CorpusError> {
    let by_id: HashMap<&str, &Arc<Sentence>> = sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::io(source_name, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let expected = if labels_required { 4..=4 } else { 3..=4 };
        if !expected.contains(&cols.len()) {
            return Err(CorpusError::format(
                source_name,
                lineno,
                format!(
                    "expected {} tab-separated columns, found {}",
                    expected.end(),
                    cols.len()
                ),
            ));
        }
        let sentence = by_id.get(cols[0]).ok_or_else(|| CorpusError::UnknownSentence {
            source_name: source_name.to_string(),
            line: lineno,
            id: cols[0].to_string(),
        })?;
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CorpusError::format(source_name, lineno, format!("invalid span index `{s}`")))
        };
        let span = Span::new(num(cols[1])?, num(cols[2])?);
        if !span.is_valid_for(sentence.len()) {
            return Err(CorpusError::format(
                source_name,
                lineno,
                format!(
                    "span {}-{} outside sentence `{}` of length {}",
                    span.start,
                    span.end,
                    sentence.id,
                    sentence.len()
                ),
            ));
        }
        let gold = match cols.get(3) {
            Some(labels) => {
                let labels: Vec<String> = labels
                    .split(',')
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect();
                if labels.is_empty() {
                    if labels_required {
                        return Err(CorpusError::EmptyLabels {
                            source_name: source_name.to_string(),
                            line: lineno,
                        });
                    }
                    None
                } else {
                    Some(labels)
                }
            }
            None => None,
        };
        out.push((
            lineno,
            PrepInstance {
                sentence: Arc::clone(sentence),
                span,
                gold,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_conllu;

    fn corpus() -> Vec<Arc<Sentence>> {
        let text = "# sent_id = s1\n\
1\tWe\twe\tPRON\t_\t_\t2\tnsubj\t_\t_\n\
2\tmet\tmeet\tVERB\t_\t_\t0\tROOT\t_\t_\n\
3\tthem\tthey\tPRON\t_\t_\t2\tdobj\t_\t_\n\
4\tat\tat\tADP\t_\t_\t2\tprep\t_\t_\n\
5\tnoon\tnoon\tNOUN\t_\t_\t4\tpobj\t_\t_\n";
        parse_conllu(text.as_bytes(), "t")
            .unwrap()
            .into_iter()
            .map(Arc::new)
            .collect()
    }

    #[test]
    fn single_label_row() {
        let inst = parse_sense_annotations(
            "s1\t4\t4\tTemporal\n".as_bytes(),
            "t",
            &corpus(),
            &SenseInventory::coarse(),
        )
        .unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst[0].gold.as_deref().unwrap(), &["Temporal".to_string()]);
        assert_eq!(inst[0].preposition(), "at");
    }

    #[test]
    fn multiple_labels_row() {
        let inst = parse_sense_annotations(
            "s1\t4\t4\tPlace,Circumstance\n".as_bytes(),
            "t",
            &corpus(),
            &SenseInventory::coarse(),
        )
        .unwrap();
        assert_eq!(inst[0].gold.as_ref().unwrap().len(), 2);
        assert_eq!(inst[0].primary_sense(), Some("Place"));
    }

    #[test]
    fn unknown_label_sentence_and_empty_labels() {
        let inv = SenseInventory::coarse();
        let c = corpus();
        assert!(matches!(
            parse_sense_annotations("s1\t4\t4\tFoo\n".as_bytes(), "t", &c, &inv),
            Err(CorpusError::UnknownLabel { .. })
        ));
        assert!(matches!(
            parse_sense_annotations("s9\t4\t4\tPlace\n".as_bytes(), "t", &c, &inv),
            Err(CorpusError::UnknownSentence { .. })
        ));
        assert!(matches!(
            parse_sense_annotations("s1\t4\t4\t \n".as_bytes(), "t", &c, &inv),
            Err(CorpusError::EmptyLabels { .. })
        ));
        assert!(parse_sense_annotations("s1\t4\t6\tPlace\n".as_bytes(), "t", &c, &inv).is_err());
    }

    #[test]
    fn spans_without_labels() {
        let inst = parse_spans("s1\t4\t4\n".as_bytes(), "t", &corpus()).unwrap();
        assert_eq!(inst[0].gold, None);
        assert!(parse_spans("".as_bytes(), "t", &corpus()).unwrap().is_empty());
    }
}
