use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CorpusError, Sentence, Token};

pub fn read_conllu(path: impl AsRef<Path>) -> Result<Vec<Sentence>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_conllu(BufReader::new(file), &path.display().to_string())
}

/// Reads 10-column CoNLL-U, keeping FORM, LEMMA, UPOS, HEAD and DEPREL.
///
/// Sentence ids come from `# sent_id = ...` comments; sentences without one
/// are numbered by their 1-based position in the file.
pub fn parse_conllu<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut id: Option<String> = None;
    let mut start_line = 0;

    let finish = |tokens: &mut Vec<Token>,
                  id: &mut Option<String>,
                  start_line: usize,
                  sentences: &mut Vec<Sentence>|
     -> Result<(), CorpusError> {
        if tokens.is_empty() {
            *id = None;
            return Ok(());
        }
        let n = tokens.len();
        if let Some(t) = tokens.iter().find(|t| t.head > n) {
            return Err(CorpusError::format(
                source_name,
                start_line,
                format!("token {} has head {} beyond sentence length {n}", t.index, t.head),
            ));
        }
        let sid = id.take().unwrap_or_else(|| (sentences.len() + 1).to_string());
        sentences.push(Sentence {
            id: sid,
            tokens: std::mem::take(tokens),
        });
        Ok(())
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| CorpusError::io(source_name, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut tokens, &mut id, start_line, &mut sentences)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("sent_id") {
                let v = v.trim_start().trim_start_matches('=').trim();
                if !v.is_empty() {
                    id = Some(v.to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(CorpusError::format(
                source_name,
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if tokens.is_empty() {
            start_line = lineno;
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| CorpusError::format(source_name, lineno, format!("invalid token id `{}`", cols[0])))?;
        if index != tokens.len() + 1 {
            return Err(CorpusError::format(
                source_name,
                lineno,
                format!("token id {index} out of sequence"),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| CorpusError::format(source_name, lineno, format!("non-integer HEAD `{}`", cols[6])))?;
        tokens.push(Token {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    finish(&mut tokens, &mut id, start_line, &mut sentences)?;
    Ok(sentences)
}

/// Writes the retained columns back out; dropped columns become `_`.
pub fn write_conllu<W: Write>(mut out: W, sentences: &[Sentence]) -> std::io::Result<()> {
    for s in sentences {
        writeln!(out, "# sent_id = {}", s.id)?;
        for t in &s.tokens {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                t.index, t.form, t.lemma, t.upos, t.head, t.deprel
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}
