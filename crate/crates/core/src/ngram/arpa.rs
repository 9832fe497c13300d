//! ARPA text format for n-gram models.
//!
//! Layout: a `\data\` header with `ngram k=count` lines, one `\k-grams:`
//! section per order with `logprob<TAB>w1 .. wk<TAB>backoff` entries (backoff
//! omitted at the highest order and where zero), and a final `\end\`.
//! Probabilities and backoffs are log10. Numbers are written with 10
//! significant digits so a write/read round trip moves any sentence score by
//! far less than 1e-6.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rustc_hash::FxHashMap;

use crate::{Error, Result};

use super::model::{Entry, ModelMeta};
use super::{
    gram_key, GramKey, KneserNeyModel, Vocab, BOS, BOS_TOKEN, EOS, EOS_TOKEN, MAX_ORDER, UNK,
    UNK_TOKEN,
};

/// Format with `sig` significant digits, plain decimal, trailing zeros
/// trimmed.
fn fmt_sig(v: f64, sig: i32) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (sig - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Write the model to `path` in ARPA format. Output is byte-deterministic
/// for a given model.
pub fn write_arpa(model: &KneserNeyModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_arpa_to(model, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write the model in ARPA format to any writer.
pub fn write_arpa_to<W: Write>(model: &KneserNeyModel, w: &mut W) -> std::io::Result<()> {
    let order = model.order();
    writeln!(w, "\\data\\")?;
    for k in 1..=order {
        writeln!(w, "ngram {k}={}", model.ngram_count(k))?;
    }
    for k in 1..=order {
        writeln!(w)?;
        writeln!(w, "\\{k}-grams:")?;
        let table = &model.tables()[k - 1];
        let mut keys: Vec<&GramKey> = table.keys().collect();
        keys.sort_unstable();
        let mut words = String::new();
        for key in keys {
            let entry = &table[key];
            words.clear();
            for (i, &id) in key[..k].iter().enumerate() {
                if i > 0 {
                    words.push(' ');
                }
                words.push_str(model.vocab().word(id));
            }
            write!(w, "{}\t{}", fmt_sig(entry.log_prob, 10), words)?;
            match entry.log_backoff {
                Some(b) if b != 0.0 && k < order => write!(w, "\t{}", fmt_sig(b, 10))?,
                _ => {}
            }
            writeln!(w)?;
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")?;
    Ok(())
}

/// Read an ARPA file into a model.
pub fn read_arpa(path: impl AsRef<Path>) -> Result<KneserNeyModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_arpa_from(BufReader::new(file), path)
}

struct LineSource<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
    path: PathBuf,
}

impl<R: BufRead> LineSource<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(line)) => {
                self.line_no += 1;
                Ok(Some(line))
            }
            Some(Err(e)) => Err(Error::io(&self.path, e)),
        }
    }

    /// Next non-blank line, or None at EOF.
    fn next_content(&mut self) -> Result<Option<String>> {
        while let Some(line) = self.next_line()? {
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
        Ok(None)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::ArpaFormat {
            path: self.path.clone(),
            line: self.line_no,
            msg: msg.into(),
        }
    }
}

/// Read ARPA from any buffered reader; `label` names the source in errors.
pub fn read_arpa_from<R: BufRead>(reader: R, label: impl Into<PathBuf>) -> Result<KneserNeyModel> {
    let mut src = LineSource {
        inner: reader.lines(),
        line_no: 0,
        path: label.into(),
    };

    match src.next_content()? {
        Some(line) if line.trim() == "\\data\\" => {}
        Some(_) => return Err(src.err("expected \\data\\ header")),
        None => return Err(src.err("empty file, expected \\data\\ header")),
    }

    // "ngram k=n" lines, terminated by a blank line
    let mut counts: Vec<usize> = Vec::new();
    loop {
        let Some(line) = src.next_line()? else {
            return Err(src.err("unexpected end of file in \\data\\ section"));
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        let rest = trimmed
            .strip_prefix("ngram ")
            .ok_or_else(|| src.err(format!("expected 'ngram k=count', got {trimmed:?}")))?;
        let (k_str, n_str) = rest
            .split_once('=')
            .ok_or_else(|| src.err(format!("expected 'ngram k=count', got {trimmed:?}")))?;
        let k: usize = k_str
            .trim()
            .parse()
            .map_err(|_| src.err(format!("bad ngram order {k_str:?}")))?;
        let n: usize = n_str
            .trim()
            .parse()
            .map_err(|_| src.err(format!("bad ngram count {n_str:?}")))?;
        if k != counts.len() + 1 {
            return Err(src.err(format!(
                "ngram orders must be consecutive from 1, got {k} after {}",
                counts.len()
            )));
        }
        counts.push(n);
    }
    if counts.is_empty() {
        return Err(src.err("no 'ngram k=count' lines in \\data\\ section"));
    }
    let order = counts.len();
    if order > MAX_ORDER {
        return Err(src.err(format!(
            "order {order} exceeds supported maximum {MAX_ORDER}"
        )));
    }

    let mut vocab = Vocab::new();
    let mut tables: Vec<FxHashMap<GramKey, Entry>> = Vec::with_capacity(order);

    for (k, &expected) in counts.iter().enumerate().map(|(i, n)| (i + 1, n)) {
        let marker = format!("\\{k}-grams:");
        match src.next_content()? {
            Some(line) if line.trim() == marker => {}
            Some(line) => {
                return Err(src.err(format!("expected {marker:?}, got {:?}", line.trim())))
            }
            None => return Err(src.err(format!("unexpected end of file, expected {marker:?}"))),
        }

        let mut table: FxHashMap<GramKey, Entry> = FxHashMap::default();
        let mut ids = Vec::with_capacity(k);
        for i in 0..expected {
            let Some(line) = src.next_line()? else {
                return Err(src.err(format!(
                    "unexpected end of file: expected {expected} {k}-grams, found {i}"
                )));
            };
            if line.trim().is_empty() {
                return Err(src.err(format!(
                    "blank line inside section: expected {expected} {k}-grams, found {i}"
                )));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let backoff = if fields.len() == k + 1 {
                None
            } else if fields.len() == k + 2 {
                if k == order {
                    return Err(src.err("backoff weight on a highest-order gram"));
                }
                let b: f64 = fields[k + 1]
                    .parse()
                    .map_err(|_| src.err(format!("bad backoff {:?}", fields[k + 1])))?;
                if !b.is_finite() {
                    return Err(src.err(format!("non-finite backoff {b}")));
                }
                if b == 0.0 {
                    None
                } else {
                    Some(b)
                }
            } else {
                return Err(src.err(format!(
                    "expected 'logprob {k} words [backoff]', got {} fields",
                    fields.len()
                )));
            };
            let log_prob: f64 = fields[0]
                .parse()
                .map_err(|_| src.err(format!("bad log probability {:?}", fields[0])))?;
            if !log_prob.is_finite() {
                return Err(src.err(format!("non-finite log probability {log_prob}")));
            }
            ids.clear();
            for &word in &fields[1..=k] {
                let id = if k == 1 {
                    vocab.intern(word)
                } else {
                    vocab.id(word).ok_or_else(|| {
                        src.err(format!("word {word:?} not in the unigram section"))
                    })?
                };
                ids.push(id);
            }
            let prev = table.insert(
                gram_key(&ids),
                Entry {
                    log_prob,
                    log_backoff: backoff,
                },
            );
            if prev.is_some() {
                return Err(src.err(format!("duplicate {k}-gram {:?}", &fields[1..=k])));
            }
        }
        if k == 1 {
            for (tok, id) in [(UNK_TOKEN, UNK), (BOS_TOKEN, BOS), (EOS_TOKEN, EOS)] {
                if !table.contains_key(&gram_key(&[id])) {
                    return Err(src.err(format!("unigram section is missing {tok}")));
                }
            }
        }
        tables.push(table);
    }

    match src.next_content()? {
        Some(line) if line.trim() == "\\end\\" => {}
        Some(line) => return Err(src.err(format!("expected \\end\\, got {:?}", line.trim()))),
        None => return Err(src.err("missing \\end\\ terminator")),
    }

    Ok(KneserNeyModel::from_tables(
        order,
        vocab,
        tables,
        ModelMeta::default(),
    ))
}
