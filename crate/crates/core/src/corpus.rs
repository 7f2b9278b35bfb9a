//! QA and dialogue corpora in line-delimited JSON.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{Dialogue, DialogueError};
use crate::rng::SeededRng;

pub const SCHEMA_VERSION: &str = "1";

/// One single-turn exchange: a question and one chosen answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QaPair {
    pub id: String,
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub source_tag: Option<String>,
}

impl QaPair {
    pub fn new(id: impl Into<String>, question: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            answer: answer.into(),
            source_tag: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id is empty".into());
        }
        if self.question.trim().is_empty() {
            return Err("question is empty".into());
        }
        if self.answer.trim().is_empty() {
            return Err("answer is empty".into());
        }
        Ok(())
    }

    /// Question identity used for de-duplication.
    pub fn question_key(&self) -> &str {
        self.question.trim()
    }

    pub fn char_len(&self) -> usize {
        self.question.chars().count() + self.answer.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub path: PathBuf,
    pub record_count: usize,
    pub schema_version: String,
}

impl CorpusManifest {
    fn new(path: &Path, record_count: usize) -> Self {
        Self {
            path: path.to_path_buf(),
            record_count,
            schema_version: SCHEMA_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate id `{id}`")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("dialogue {index} is invalid: {source}")]
    InvalidDialogue {
        index: usize,
        #[source]
        source: DialogueError,
    },
    #[error("pool of {pool_size} requested but corpus has only {available} records")]
    PoolTooLarge { pool_size: usize, available: usize },
    #[error("sample of {requested} requested but the pool holds only {available} distinct questions")]
    SampleTooLarge { requested: usize, available: usize },
}

impl CorpusError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, CorpusError::Io { .. })
    }
}

/// Reads every non-blank line of a JSONL file as a `T`, tagging errors with
/// the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, CorpusError> {
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

/// Serializes records one per line, newline-terminated.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Writes `contents` to a sibling temp file, then renames it over `path`.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<(), CorpusError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| CorpusError::io(path, std::io::Error::other("path has no file name")))?;
    let tmp = dir.join(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CorpusError::io(path, e)
    })
}

pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<CorpusManifest, CorpusError> {
    atomic_write(path, to_jsonl(records).as_bytes())?;
    Ok(CorpusManifest::new(path, records.len()))
}

/// Loads a QA corpus in file order.
pub fn load_qa_corpus(path: &Path) -> Result<(Vec<QaPair>, CorpusManifest), CorpusError> {
    let records: Vec<(usize, QaPair)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, qa) in records {
        qa.validate().map_err(|reason| CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            reason,
        })?;
        if !seen.insert(qa.id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: qa.id,
            });
        }
        out.push(qa);
    }
    let manifest = CorpusManifest::new(path, out.len());
    Ok((out, manifest))
}

pub fn write_qa_corpus(qas: &[QaPair], path: &Path) -> Result<CorpusManifest, CorpusError> {
    write_jsonl(qas, path)
}

/// Draws `sample_size` distinct questions from the first `pool_size`
/// records, then one answer per drawn question, each uniformly at random.
///
/// Questions are grouped by trimmed text in order of first appearance.
/// Question indices are drawn with [`SeededRng::sample_indices`], then one
/// answer index per question with [`SeededRng::index`], in draw order.
pub fn sample_seed_qas(
    corpus: &[QaPair],
    pool_size: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<QaPair>, CorpusError> {
    if pool_size > corpus.len() {
        return Err(CorpusError::PoolTooLarge {
            pool_size,
            available: corpus.len(),
        });
    }
    let mut groups: Vec<Vec<&QaPair>> = Vec::new();
    let mut by_question: HashMap<&str, usize> = HashMap::new();
    for qa in &corpus[..pool_size] {
        let slot = *by_question.entry(qa.question_key()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(qa);
    }
    if sample_size > groups.len() {
        return Err(CorpusError::SampleTooLarge {
            requested: sample_size,
            available: groups.len(),
        });
    }
    let mut rng = SeededRng::new(seed);
    let picked = rng.sample_indices(groups.len(), sample_size);
    Ok(picked
        .into_iter()
        .map(|g| {
            let answers = &groups[g];
            answers[rng.index(answers.len())].clone()
        })
        .collect())
}

pub fn write_dialogue_corpus(dialogues: &[Dialogue], path: &Path) -> Result<CorpusManifest, CorpusError> {
    for (index, d) in dialogues.iter().enumerate() {
        d.validate()
            .map_err(|source| CorpusError::InvalidDialogue { index, source })?;
    }
    write_jsonl(dialogues, path)
}

pub fn read_dialogue_corpus(path: &Path) -> Result<Vec<Dialogue>, CorpusError> {
    let records: Vec<(usize, Dialogue)> = read_jsonl(path)?;
    let mut out = Vec::with_capacity(records.len());
    for (line, d) in records {
        d.validate().map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            reason: e.to_string(),
        })?;
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{Method, Role, Utterance};
    use std::collections::BTreeSet;

    fn write_lines(dir: &Path, name: &str, lines: &[&str]) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, lines.join("\n")).unwrap();
        p
    }

    fn corpus(n: usize, distinct_questions: usize) -> Vec<QaPair> {
        (0..n)
            .map(|i| QaPair::new(format!("q{i}"), format!("问题{}", i % distinct_questions), format!("回答{i}")))
            .collect()
    }

    #[test]
    fn loads_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(
            dir.path(),
            "qa.jsonl",
            &[
                r#"{"id":"b","question":"Q1","answer":"A1"}"#,
                r#"{"id":"a","question":"Q2","answer":"A2","source_tag":"psyqa"}"#,
                r#"{"id":"c","question":"Q3","answer":"A3"}"#,
            ],
        );
        let (qas, manifest) = load_qa_corpus(&p).unwrap();
        assert_eq!(qas.iter().map(|q| q.id.as_str()).collect::<Vec<_>>(), ["b", "a", "c"]);
        assert_eq!(qas[1].source_tag.as_deref(), Some("psyqa"));
        assert_eq!(manifest.record_count, 3);
    }

    #[test]
    fn empty_file_yields_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(dir.path(), "qa.jsonl", &[]);
        let (qas, manifest) = load_qa_corpus(&p).unwrap();
        assert!(qas.is_empty());
        assert_eq!(manifest.record_count, 0);
    }

    #[test]
    fn missing_answer_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(
            dir.path(),
            "qa.jsonl",
            &[
                r#"{"id":"a","question":"Q1","answer":"A1"}"#,
                "",
                r#"{"id":"b","question":"Q2"}"#,
            ],
        );
        match load_qa_corpus(&p) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn blank_answer_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(dir.path(), "qa.jsonl", &[r#"{"id":"a","question":"Q1","answer":"  "}"#]);
        assert!(matches!(load_qa_corpus(&p), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(
            dir.path(),
            "qa.jsonl",
            &[
                r#"{"id":"a","question":"Q1","answer":"A1"}"#,
                r#"{"id":"a","question":"Q2","answer":"A2"}"#,
            ],
        );
        assert!(matches!(load_qa_corpus(&p), Err(CorpusError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_qa_corpus(Path::new("/nonexistent/qa.jsonl")).unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn sample_500_of_first_5000() {
        // 6000 records, each question repeated twice within the pool.
        let c = corpus(6000, 3000);
        let s = sample_seed_qas(&c, 5000, 500, 42).unwrap();
        assert_eq!(s.len(), 500);
        let questions: BTreeSet<_> = s.iter().map(|q| q.question_key()).collect();
        assert_eq!(questions.len(), 500);
        for qa in &s {
            let idx: usize = qa.id[1..].parse().unwrap();
            assert!(idx < 5000);
        }
    }

    #[test]
    fn exhaustive_sample_covers_every_question() {
        let c = corpus(40, 10);
        let s = sample_seed_qas(&c, 40, 10, 1).unwrap();
        let questions: BTreeSet<_> = s.iter().map(|q| q.question_key().to_string()).collect();
        let expected: BTreeSet<_> = (0..10).map(|i| format!("问题{i}")).collect();
        assert_eq!(questions, expected);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = corpus(100, 50);
        assert_eq!(sample_seed_qas(&c, 100, 20, 9).unwrap(), sample_seed_qas(&c, 100, 20, 9).unwrap());
        assert_ne!(sample_seed_qas(&c, 100, 20, 9).unwrap(), sample_seed_qas(&c, 100, 20, 10).unwrap());
    }

    #[test]
    fn sampling_trims_question_identity() {
        let c = vec![QaPair::new("a", "问题", "甲"), QaPair::new("b", " 问题 ", "乙")];
        assert!(matches!(
            sample_seed_qas(&c, 2, 2, 0),
            Err(CorpusError::SampleTooLarge { requested: 2, available: 1 })
        ));
    }

    #[test]
    fn answer_choice_covers_alternatives() {
        let c = vec![QaPair::new("a", "问题", "甲"), QaPair::new("b", "问题", "乙")];
        let ids: BTreeSet<_> = (0..64).map(|s| sample_seed_qas(&c, 2, 1, s).unwrap()[0].id.clone()).collect();
        assert_eq!(ids.len(), 2);
    }

    fn dialogue(i: usize) -> Dialogue {
        let utts = (0..10)
            .map(|k| {
                let role = if k % 2 == 0 { Role::HelpSeeker } else { Role::Supporter };
                Utterance::new(role, format!("第{i}段第{k}句")).unwrap()
            })
            .collect();
        Dialogue::new(format!("smile-{i:05}"), Method::Smile, utts)
            .unwrap()
            .with_seed_qa(format!("q{i}"))
    }

    #[test]
    fn dialogue_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let ds: Vec<_> = (0..10).map(dialogue).collect();
        let manifest = write_dialogue_corpus(&ds, &p).unwrap();
        assert_eq!(manifest.record_count, 10);
        assert_eq!(read_dialogue_corpus(&p).unwrap(), ds);
    }

    #[test]
    fn empty_dialogue_list_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let manifest = write_dialogue_corpus(&[], &p).unwrap();
        assert_eq!(manifest.record_count, 0);
        assert_eq!(fs::read_to_string(&p).unwrap(), "");
    }

    #[test]
    fn empty_utterance_rejected_with_index() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds: Vec<_> = (0..3).map(dialogue).collect();
        ds[2].utterances[3].text.clear();
        let err = write_dialogue_corpus(&ds, &dir.path().join("d.jsonl")).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidDialogue { index: 2, .. }));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = write_dialogue_corpus(&[], Path::new("/nonexistent-dir/d.jsonl")).unwrap_err();
        assert!(err.is_io());
    }
}
