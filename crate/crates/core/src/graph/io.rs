//! Tab-separated triple files and `id<TAB>label` vocabulary files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{KnowledgeGraph, Triple, Vocabulary};
use crate::error::{KgeError, Result};

/// What to do with a valid/test triple whose entity or relation never
/// appears in train.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnknownPolicy {
    #[default]
    Skip,
    Error,
}

impl std::str::FromStr for UnknownPolicy {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" => Ok(Self::Skip),
            "error" => Ok(Self::Error),
            other => Err(KgeError::InvalidArgument(format!("unknown policy `{other}` (skip|error)"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DatasetPaths {
    pub train: PathBuf,
    pub valid: PathBuf,
    pub test: PathBuf,
    pub entity_vocab: Option<PathBuf>,
    pub relation_vocab: Option<PathBuf>,
}

impl DatasetPaths {
    /// `train.txt`, `valid.txt`, `test.txt` (plus optional `entities.dict`
    /// and `relations.dict`) inside `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let opt = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        Self {
            train: dir.join("train.txt"),
            valid: dir.join("valid.txt"),
            test: dir.join("test.txt"),
            entity_vocab: opt("entities.dict"),
            relation_vocab: opt("relations.dict"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub unknown: UnknownPolicy,
}

struct Row<'a> {
    line: usize,
    fields: [&'a str; 3],
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| KgeError::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| KgeError::io(path, e))
}

fn parse_rows<'a>(path: &Path, lines: &'a [String]) -> Result<Vec<Row<'a>>> {
    let mut rows = Vec::with_capacity(lines.len());
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(KgeError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        rows.push(Row {
            line: i + 1,
            fields: [fields[0], fields[1], fields[2]],
        });
    }
    Ok(rows)
}

fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    let lines = read_lines(path)?;
    let mut labels: Vec<Option<String>> = Vec::new();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| KgeError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `id<TAB>label`".into()))?;
        let id: usize = id.trim().parse().map_err(|_| parse_err(format!("bad id `{id}`")))?;
        if labels.len() <= id {
            labels.resize(id + 1, None);
        }
        if labels[id].replace(label.to_string()).is_some() {
            return Err(parse_err(format!("id {id} assigned twice")));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(id, l)| l.ok_or_else(|| KgeError::InvalidArgument(format!("{}: vocabulary is not dense, id {id} missing", path.display()))))
        .collect::<Result<Vec<_>>>()?;
    Vocabulary::from_labels(labels)
}

/// Loads train/valid/test splits into a [`KnowledgeGraph`].
///
/// Without vocabulary files, ids are assigned in order of first appearance in
/// the train file. Valid/test rows that mention symbols unseen in train are
/// skipped with a warning or rejected, per `options.unknown`.
pub fn load_knowledge_graph(paths: &DatasetPaths, options: LoadOptions) -> Result<KnowledgeGraph> {
    let fixed_entities = paths.entity_vocab.as_deref().map(read_vocabulary).transpose()?;
    let fixed_relations = paths.relation_vocab.as_deref().map(read_vocabulary).transpose()?;
    let mut entities = fixed_entities.clone().unwrap_or_default();
    let mut relations = fixed_relations.clone().unwrap_or_default();

    let train_lines = read_lines(&paths.train)?;
    let mut train = Vec::new();
    for row in parse_rows(&paths.train, &train_lines)? {
        let [h, r, t] = row.fields;
        let lookup = |vocab: &mut Vocabulary, fixed: bool, token: &str| -> Result<u32> {
            if fixed {
                vocab.get(token).ok_or_else(|| KgeError::UnknownSymbol {
                    split: "train",
                    line: row.line,
                    token: token.to_string(),
                })
            } else {
                Ok(vocab.intern(token))
            }
        };
        let head = lookup(&mut entities, fixed_entities.is_some(), h)?;
        let relation = lookup(&mut relations, fixed_relations.is_some(), r)?;
        let tail = lookup(&mut entities, fixed_entities.is_some(), t)?;
        train.push(Triple { head, relation, tail });
    }

    let mut seen_entity = vec![false; entities.len()];
    let mut seen_relation = vec![false; relations.len()];
    for t in &train {
        seen_entity[t.head as usize] = true;
        seen_entity[t.tail as usize] = true;
        seen_relation[t.relation as usize] = true;
    }

    let eval_split = |path: &Path, split: &'static str| -> Result<Vec<Triple>> {
        let lines = read_lines(path)?;
        let mut out = Vec::new();
        let mut skipped = 0usize;
        for row in parse_rows(path, &lines)? {
            let [h, r, t] = row.fields;
            let known_e = |tok: &str| entities.get(tok).filter(|&id| seen_entity[id as usize]);
            let known_r = |tok: &str| relations.get(tok).filter(|&id| seen_relation[id as usize]);
            match (known_e(h), known_r(r), known_e(t)) {
                (Some(head), Some(relation), Some(tail)) => out.push(Triple { head, relation, tail }),
                parts => {
                    let token = match parts {
                        (None, _, _) => h,
                        (_, None, _) => r,
                        _ => t,
                    };
                    match options.unknown {
                        UnknownPolicy::Error => {
                            return Err(KgeError::UnknownSymbol {
                                split,
                                line: row.line,
                                token: token.to_string(),
                            })
                        }
                        UnknownPolicy::Skip => skipped += 1,
                    }
                }
            }
        }
        if skipped > 0 {
            log::warn!("{split}: skipped {skipped} triples with symbols absent from train");
        }
        Ok(out)
    };
    let valid = eval_split(&paths.valid, "valid")?;
    let test = eval_split(&paths.test, "test")?;

    KnowledgeGraph::from_triples(entities, relations, train, valid, test)
}

/// Writes a split back as labelled TSV.
pub fn save_split(kg: &KnowledgeGraph, triples: &[Triple], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| KgeError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in triples {
        writeln!(
            w,
            "{}\t{}\t{}",
            kg.entities().label(t.head),
            kg.relations().label(t.relation),
            kg.entities().label(t.tail)
        )
        .map_err(|e| KgeError::io(path, e))?;
    }
    w.flush().map_err(|e| KgeError::io(path, e))
}

pub fn save_vocabulary(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| KgeError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (id, label) in vocab.labels().iter().enumerate() {
        writeln!(w, "{id}\t{label}").map_err(|e| KgeError::io(path, e))?;
    }
    w.flush().map_err(|e| KgeError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn paths(dir: &Path, train: &str, valid: &str, test: &str) -> DatasetPaths {
        DatasetPaths {
            train: write(dir, "train.txt", train),
            valid: write(dir, "valid.txt", valid),
            test: write(dir, "test.txt", test),
            entity_vocab: None,
            relation_vocab: None,
        }
    }

    #[test]
    fn three_line_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path(), "a\tr1\tb\nb\tr1\tc\na\tr2\tc\n", "", "");
        let kg = load_knowledge_graph(&p, LoadOptions::default()).unwrap();
        assert_eq!((kg.entity_count(), kg.relation_count(), kg.train().len()), (3, 2, 3));
    }

    #[test]
    fn duplicate_train_line_is_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path(), "a\tr1\tb\na\tr1\tb\n", "", "");
        let kg = load_knowledge_graph(&p, LoadOptions::default()).unwrap();
        assert_eq!(kg.train().len(), 1);
        assert_eq!(kg.duplicates_removed(), 1);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path(), "a\tr1\tb\na r1 c\n", "", "");
        match load_knowledge_graph(&p, LoadOptions::default()) {
            Err(KgeError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_eval_symbols_follow_policy() {
        let dir = tempfile::tempdir().unwrap();
        let p = paths(dir.path(), "a\tr1\tb\n", "a\tr1\tz\na\tr1\tb\n", "a\tr9\tb\n");
        let kg = load_knowledge_graph(&p, LoadOptions::default()).unwrap();
        assert_eq!(kg.valid().len(), 1);
        assert_eq!(kg.test().len(), 0);
        let err = load_knowledge_graph(&p, LoadOptions { unknown: UnknownPolicy::Error }).unwrap_err();
        assert!(matches!(err, KgeError::UnknownSymbol { split: "valid", line: 1, .. }), "{err}");
    }

    #[test]
    fn vocabulary_files_fix_ids() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = paths(dir.path(), "a\tr\tb\n", "", "");
        p.entity_vocab = Some(write(dir.path(), "entities.dict", "0\tb\n1\ta\n2\tc\n"));
        p.relation_vocab = Some(write(dir.path(), "relations.dict", "0\tr\n"));
        let kg = load_knowledge_graph(&p, LoadOptions::default()).unwrap();
        assert_eq!(kg.entity_count(), 3);
        assert_eq!(kg.train()[0], Triple::new(1, 0, 0));

        let bad = write(dir.path(), "bad.dict", "0\ta\n2\tb\n");
        p.entity_vocab = Some(bad);
        assert!(load_knowledge_graph(&p, LoadOptions::default()).is_err());
    }
}
