//! JSON-lines files: annotated corpora, candidate-label training files and
//! baseline model files.
//!
//! Corpus records are one object per line:
//!
//! ```text
//! {"essay_id": "e1", "learner_id": "l1", "wave": 1, "quality_level": "low",
//!  "text": "T.\nA.", "moves": [{"start": 0, "end": 3, "label": "title"}, ...],
//!  "source": "human"}
//! ```
//!
//! `quality_level`, `moves` and `source` may be `null`. Blank lines are skipped.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use argmove_core::corpus::{AnnotatedMove, EssayError, InvalidAnnotation};
use argmove_core::labeler::{build_context, BaselineModel, ModelError, TrainingExample};
use argmove_core::segmenter::CandidateMove;
use argmove_core::{AnnotatedEssay, CandidateLabel, Essay, MoveLabel, QualityLevel, Source, Span};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveRecord {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssayRecord {
    pub essay_id: String,
    pub learner_id: String,
    pub wave: i64,
    #[serde(default)]
    pub quality_level: Option<String>,
    pub text: String,
    #[serde(default)]
    pub moves: Option<Vec<MoveRecord>>,
    #[serde(default)]
    pub source: Option<Source>,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("unknown quality level {0:?}")]
    UnknownQuality(String),
    #[error("essay {0}: wave {1} out of range")]
    Wave(String, i64),
    #[error(transparent)]
    Essay(#[from] EssayError),
    #[error(transparent)]
    Invalid(#[from] InvalidAnnotation),
    #[error("essay {0}: no moves")]
    MissingMoves(String),
    #[error("essay {essay_id}: {labels} labels for {segments} segments")]
    LabelCount { essay_id: String, segments: usize, labels: usize },
    #[error("essay {0}: empty segment")]
    EmptySegment(String),
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("line {line}: {source}")]
    Io { line: usize, source: io::Error },
    #[error("line {line}: {source}")]
    Record { line: usize, source: RecordError },
    #[error("model file: {0}")]
    Model(String),
}

impl FormatError {
    /// Prefixes the error with a file path.
    pub fn in_file(self, path: &Path) -> FileError {
        FileError { path: path.to_path_buf(), source: self }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct FileError {
    pub path: PathBuf,
    pub source: FormatError,
}

/// A corpus line: annotated, or bare text when `moves` is null.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Annotated(AnnotatedEssay),
    Plain(Essay),
}

impl Document {
    pub fn essay(&self) -> &Essay {
        match self {
            Document::Annotated(a) => a.essay(),
            Document::Plain(e) => e,
        }
    }

    pub fn into_essay(self) -> Essay {
        match self {
            Document::Annotated(a) => a.into_essay(),
            Document::Plain(e) => e,
        }
    }
}

fn parse_quality(q: Option<String>) -> Result<Option<QualityLevel>, RecordError> {
    q.map(|s| QualityLevel::parse(&s).ok_or(RecordError::UnknownQuality(s))).transpose()
}

impl EssayRecord {
    pub fn into_document(self) -> Result<Document, RecordError> {
        let wave = u32::try_from(self.wave).map_err(|_| RecordError::Wave(self.essay_id.clone(), self.wave))?;
        let quality = parse_quality(self.quality_level)?;
        let essay = Essay::new(self.essay_id, self.learner_id, wave, self.text, quality)?;
        let Some(moves) = self.moves else {
            return Ok(Document::Plain(essay));
        };
        let moves = moves
            .into_iter()
            .map(|m| {
                let label: MoveLabel = m.label.parse().map_err(|_| RecordError::UnknownLabel(m.label.clone()))?;
                Ok(AnnotatedMove { span: Span { start: m.start, end: m.end }, label })
            })
            .collect::<Result<Vec<_>, RecordError>>()?;
        let source = self.source.unwrap_or(Source::Human);
        Ok(Document::Annotated(AnnotatedEssay::new(essay, moves, source)?))
    }

    fn from_essay(e: &Essay) -> EssayRecord {
        EssayRecord {
            essay_id: e.essay_id().into(),
            learner_id: e.learner_id().into(),
            wave: e.wave().into(),
            quality_level: e.quality_level().map(|q| q.as_str().into()),
            text: e.text().into(),
            moves: None,
            source: None,
        }
    }

    pub fn from_annotated(a: &AnnotatedEssay) -> EssayRecord {
        let moves = a
            .moves()
            .iter()
            .map(|m| MoveRecord { start: m.span.start, end: m.span.end, label: m.label.as_str().into() })
            .collect();
        EssayRecord { moves: Some(moves), source: Some(a.source()), ..EssayRecord::from_essay(a.essay()) }
    }
}

/// Calls `f` with each non-blank line and its 1-based number.
fn for_each_line<R: BufRead>(
    reader: R,
    mut f: impl FnMut(usize, &str) -> Result<(), RecordError>,
) -> Result<(), FormatError> {
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| FormatError::Io { line: line_no, source })?;
        if line.trim().is_empty() {
            continue;
        }
        f(line_no, &line).map_err(|source| FormatError::Record { line: line_no, source })?;
    }
    Ok(())
}

pub fn parse_documents<R: BufRead>(reader: R) -> Result<Vec<Document>, FormatError> {
    let mut out = Vec::new();
    for_each_line(reader, |_, line| {
        let rec: EssayRecord = serde_json::from_str(line)?;
        out.push(rec.into_document()?);
        Ok(())
    })?;
    Ok(out)
}

/// Annotated essays only: a record without moves is an error.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<AnnotatedEssay>, FormatError> {
    let mut out = Vec::new();
    for_each_line(reader, |_, line| {
        let rec: EssayRecord = serde_json::from_str(line)?;
        match rec.into_document()? {
            Document::Annotated(a) => out.push(a),
            Document::Plain(e) => return Err(RecordError::MissingMoves(e.essay_id().into())),
        }
        Ok(())
    })?;
    Ok(out)
}

/// Essays with any annotations dropped.
pub fn parse_essays<R: BufRead>(reader: R) -> Result<Vec<Essay>, FormatError> {
    Ok(parse_documents(reader)?.into_iter().map(Document::into_essay).collect())
}

pub fn annotated_line(essay: &AnnotatedEssay) -> String {
    serde_json::to_string(&EssayRecord::from_annotated(essay)).expect("records serialize")
}

pub fn essay_line(essay: &Essay) -> String {
    serde_json::to_string(&EssayRecord::from_essay(essay)).expect("records serialize")
}

pub fn write_corpus<W: Write>(mut w: W, essays: &[AnnotatedEssay]) -> io::Result<()> {
    for e in essays {
        writeln!(w, "{}", annotated_line(e))?;
    }
    w.flush()
}

pub fn write_essays<W: Write>(mut w: W, essays: &[Essay]) -> io::Result<()> {
    for e in essays {
        writeln!(w, "{}", essay_line(e))?;
    }
    w.flush()
}

/// One line of a training file: an essay's candidate texts and their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingRecord {
    pub essay_id: String,
    pub segments: Vec<String>,
    pub labels: Vec<CandidateLabel>,
}

impl TrainingRecord {
    pub fn from_example(ex: &TrainingExample) -> TrainingRecord {
        TrainingRecord {
            essay_id: ex.context.essay_id.clone(),
            segments: ex.context.texts().into_iter().map(String::from).collect(),
            labels: ex.labels.clone(),
        }
    }

    pub fn into_example(self) -> Result<TrainingExample, RecordError> {
        if self.segments.len() != self.labels.len() {
            return Err(RecordError::LabelCount {
                essay_id: self.essay_id,
                segments: self.segments.len(),
                labels: self.labels.len(),
            });
        }
        let mut candidates = Vec::with_capacity(self.segments.len());
        let mut start = 0;
        for (index, s) in self.segments.iter().enumerate() {
            let len = s.chars().count();
            if len == 0 {
                return Err(RecordError::EmptySegment(self.essay_id));
            }
            candidates.push(CandidateMove { span: Span { start, end: start + len }, index });
            start += len;
        }
        let text: String = self.segments.concat();
        let essay = Essay::new(self.essay_id, "", 1, text, None)?;
        let context = build_context(&essay, &candidates).expect("segments partition their concatenation");
        Ok(TrainingExample { context, labels: self.labels })
    }
}

pub fn parse_training<R: BufRead>(reader: R) -> Result<Vec<TrainingExample>, FormatError> {
    let mut out = Vec::new();
    for_each_line(reader, |_, line| {
        let rec: TrainingRecord = serde_json::from_str(line)?;
        out.push(rec.into_example()?);
        Ok(())
    })?;
    Ok(out)
}

pub fn write_training<W: Write>(mut w: W, examples: &[TrainingExample]) -> io::Result<()> {
    for ex in examples {
        let line = serde_json::to_string(&TrainingRecord::from_example(ex)).expect("records serialize");
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn read_model<R: Read>(reader: R) -> Result<BaselineModel, FormatError> {
    let model: BaselineModel = serde_json::from_reader(reader).map_err(|e| FormatError::Model(e.to_string()))?;
    model.validate().map_err(|e: ModelError| FormatError::Model(e.to_string()))?;
    Ok(model)
}

pub fn write_model<W: Write>(mut w: W, model: &BaselineModel) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, model).map_err(io::Error::other)?;
    writeln!(w)?;
    w.flush()
}

pub fn open(path: &Path) -> Result<BufReader<File>, FormatError> {
    File::open(path).map(BufReader::new).map_err(|source| FormatError::Open { path: path.into(), source })
}

pub fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    File::create(path).map(BufWriter::new).map_err(|source| FormatError::Open { path: path.into(), source })
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<AnnotatedEssay>, FileError> {
    open(path).and_then(parse_corpus).map_err(|e| e.in_file(path))
}

pub fn read_documents_file(path: &Path) -> Result<Vec<Document>, FileError> {
    open(path).and_then(parse_documents).map_err(|e| e.in_file(path))
}
