//! Dataset ingestion, validation, and class rebalancing for the three
//! moderation tasks.
//!
//! Datasets are line-delimited UTF-8 JSON, one record per line:
//!
//! ```text
//! {"id": "t1-0001", "text": "...", "image": null, "labels": {"task1": "hope",
//!  "emotion": null, "offensive": null, "hate_text": null, "meme_hate": null}}
//! ```
//!
//! Each record carries exactly the label group of its task. Validation is
//! strict: unknown labels, duplicate ids, and records violating the
//! conditional hate sub-task invariant are rejected at load time.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TASK1_LABELS: [&str; 3] = ["hope", "hate", "not_applicable"];
/// Canonical twelve-emotion set. `confidence` is accepted on input as an
/// alias for `trust` and normalized away when serializing.
pub const EMOTION_LABELS: [&str; 12] = [
    "neutral",
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "love",
    "optimism",
    "pessimism",
    "sadness",
    "surprise",
    "trust",
];
pub const OFFENSIVE_LABELS: [&str; 2] = ["yes", "no"];
pub const HATE_TEXT_LABELS: [&str; 2] = ["hate", "not_hate"];
pub const MEME_LABELS: [&str; 2] = ["hateful", "not_hateful"];

/// Histogram key for records whose selected label is absent.
pub const MISSING_LABEL_KEY: &str = "missing";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate record id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("record `{id}`: {msg}")]
    InvalidRecord { id: String, msg: String },
    #[error("id `{id}` appears in both the `{first}` and `{second}` splits")]
    OverlappingSplits { id: String, first: SplitName, second: SplitName },
    #[error("minority class `{0}` does not occur in the split")]
    MinorityAbsent(String),
    #[error("oversample factor must be at least 1")]
    InvalidFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskId {
    Task1,
    Task2,
    Task3,
}

impl TaskId {
    pub fn number(self) -> u8 {
        match self {
            TaskId::Task1 => 1,
            TaskId::Task2 => 2,
            TaskId::Task3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(TaskId::Task1),
            2 => Some(TaskId::Task2),
            3 => Some(TaskId::Task3),
            _ => None,
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        };
        f.write_str(s)
    }
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "validation" => Ok(SplitName::Validation),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split `{other}` (expected train/validation/test)")),
        }
    }
}

macro_rules! label_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant,)+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $(Self::$variant => $text,)+
                }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s {
                    $($text => Some(Self::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

label_enum!(Task1Label {
    Hope => "hope",
    Hate => "hate",
    NotApplicable => "not_applicable",
});

label_enum!(YesNo {
    Yes => "yes",
    No => "no",
});

label_enum!(HateTextLabel {
    Hate => "hate",
    NotHate => "not_hate",
});

label_enum!(MemeLabel {
    Hateful => "hateful",
    NotHateful => "not_hateful",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Neutral,
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Love,
    Optimism,
    Pessimism,
    Sadness,
    Surprise,
    #[serde(alias = "confidence")]
    Trust,
}

impl Emotion {
    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Anger => "anger",
            Emotion::Anticipation => "anticipation",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Love => "love",
            Emotion::Optimism => "optimism",
            Emotion::Pessimism => "pessimism",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Trust => "trust",
        }
    }

    /// Parses a canonical emotion label, accepting `confidence` as an
    /// alias for `trust`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "neutral" => Some(Emotion::Neutral),
            "anger" => Some(Emotion::Anger),
            "anticipation" => Some(Emotion::Anticipation),
            "disgust" => Some(Emotion::Disgust),
            "fear" => Some(Emotion::Fear),
            "joy" => Some(Emotion::Joy),
            "love" => Some(Emotion::Love),
            "optimism" => Some(Emotion::Optimism),
            "pessimism" => Some(Emotion::Pessimism),
            "sadness" => Some(Emotion::Sadness),
            "surprise" => Some(Emotion::Surprise),
            "trust" | "confidence" => Some(Emotion::Trust),
            _ => None,
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gold labels of one record. Exactly one task's label group is populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct GoldLabels {
    #[serde(default)]
    pub task1: Option<Task1Label>,
    #[serde(default)]
    pub emotion: Option<Emotion>,
    #[serde(default)]
    pub offensive: Option<YesNo>,
    #[serde(default)]
    pub hate_text: Option<HateTextLabel>,
    #[serde(default)]
    pub meme_hate: Option<MemeLabel>,
}

/// One labeled sample: text, optional image reference, gold labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub text: String,
    #[serde(rename = "image", default)]
    pub image_ref: Option<String>,
    #[serde(rename = "labels")]
    pub gold: GoldLabels,
}

impl Record {
    /// Canonical single-line serialization (stable key order, aliases
    /// normalized).
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }

    /// Validates the per-record invariants for the given task.
    pub fn validate(&self, task: TaskId) -> Result<(), CorpusError> {
        let invalid = |msg: String| CorpusError::InvalidRecord { id: self.id.clone(), msg };
        if self.id.is_empty() {
            return Err(CorpusError::InvalidRecord {
                id: String::from("<empty>"),
                msg: "record id must be non-empty".into(),
            });
        }
        if self.text.is_empty() && self.image_ref.is_none() {
            return Err(invalid("text may be empty only when an image is present".into()));
        }
        let g = &self.gold;
        let forbid = |present: bool, field: &str| {
            if present {
                Err(invalid(format!("label `{field}` is not part of the {task} schema")))
            } else {
                Ok(())
            }
        };
        match task {
            TaskId::Task1 => {
                if g.task1.is_none() {
                    return Err(invalid("task1 label missing".into()));
                }
                forbid(g.emotion.is_some(), "emotion")?;
                forbid(g.offensive.is_some(), "offensive")?;
                forbid(g.hate_text.is_some(), "hate_text")?;
                forbid(g.meme_hate.is_some(), "meme_hate")?;
            }
            TaskId::Task2 => {
                if g.emotion.is_none() {
                    return Err(invalid("emotion label missing".into()));
                }
                if g.offensive.is_none() {
                    return Err(invalid("offensive label missing".into()));
                }
                if g.hate_text.is_some() && g.offensive != Some(YesNo::Yes) {
                    return Err(invalid(
                        "hate_text label present but offensive != yes (conditional sub-task)"
                            .into(),
                    ));
                }
                forbid(g.task1.is_some(), "task1")?;
                forbid(g.meme_hate.is_some(), "meme_hate")?;
            }
            TaskId::Task3 => {
                if g.meme_hate.is_none() {
                    return Err(invalid("meme_hate label missing".into()));
                }
                if self.image_ref.is_none() {
                    return Err(invalid("task-3 records require an image reference".into()));
                }
                forbid(g.task1.is_some(), "task1")?;
                forbid(g.emotion.is_some(), "emotion")?;
                forbid(g.offensive.is_some(), "offensive")?;
                forbid(g.hate_text.is_some(), "hate_text")?;
            }
        }
        Ok(())
    }
}

/// An ordered, validated list of records for one split of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<Record>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Accessor for one of the five gold label fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelField {
    Task1,
    Emotion,
    Offensive,
    HateText,
    MemeHate,
}

impl LabelField {
    /// The canonical gold label behind this field, if present.
    pub fn get(self, record: &Record) -> Option<&'static str> {
        match self {
            LabelField::Task1 => record.gold.task1.map(Task1Label::as_str),
            LabelField::Emotion => record.gold.emotion.map(Emotion::as_str),
            LabelField::Offensive => record.gold.offensive.map(YesNo::as_str),
            LabelField::HateText => record.gold.hate_text.map(HateTextLabel::as_str),
            LabelField::MemeHate => record.gold.meme_hate.map(MemeLabel::as_str),
        }
    }

    /// The gold field a task is scored on (task 2 has three; this is the
    /// primary one used for rebalancing).
    pub fn primary_for(task: TaskId) -> Self {
        match task {
            TaskId::Task1 => LabelField::Task1,
            TaskId::Task2 => LabelField::HateText,
            TaskId::Task3 => LabelField::MemeHate,
        }
    }
}

/// Loads and validates one line-delimited dataset file.
pub fn load_dataset(
    path: impl AsRef<Path>,
    task: TaskId,
    name: SplitName,
) -> Result<DatasetSplit, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Parse { line: line_no, msg: e.to_string() })?;
        record.validate(task)?;
        if !seen_ids.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id: record.id });
        }
        records.push(record);
    }
    Ok(DatasetSplit { name, records })
}

/// Writes a split back out in the canonical line format.
pub fn save_dataset(split: &DatasetSplit, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mk_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let mut out = BufWriter::new(File::create(path).map_err(mk_err)?);
    for record in &split.records {
        writeln!(out, "{}", record.to_line()).map_err(mk_err)?;
    }
    out.flush().map_err(mk_err)
}

/// Checks that no record id appears in two splits.
pub fn check_disjoint_ids(splits: &[&DatasetSplit]) -> Result<(), CorpusError> {
    let mut owner: BTreeMap<&str, SplitName> = BTreeMap::new();
    for split in splits {
        for record in &split.records {
            if let Some(first) = owner.insert(record.id.as_str(), split.name) {
                return Err(CorpusError::OverlappingSplits {
                    id: record.id.clone(),
                    first,
                    second: split.name,
                });
            }
        }
    }
    Ok(())
}

/// Counts records per label value of `field`. Records without the label
/// are counted under [`MISSING_LABEL_KEY`]; counts always sum to the
/// number of records.
pub fn class_histogram(split: &DatasetSplit, field: LabelField) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for record in &split.records {
        let key = field.get(record).unwrap_or(MISSING_LABEL_KEY);
        *counts.entry(key.to_string()).or_insert(0) += 1;
    }
    counts
}

/// Duplicates every record of `minority_class` so it appears exactly
/// `factor` times, then applies a seeded shuffle.
///
/// Duplicate copies get `#k` id suffixes (k = 1..factor-1) so ids stay
/// unique. All non-minority records appear exactly once.
pub fn oversample_minority(
    split: &DatasetSplit,
    field: LabelField,
    minority_class: &str,
    factor: u32,
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    if factor < 1 {
        return Err(CorpusError::InvalidFactor);
    }
    if !split.records.iter().any(|r| field.get(r) == Some(minority_class)) {
        return Err(CorpusError::MinorityAbsent(minority_class.to_string()));
    }
    let mut records = Vec::with_capacity(split.records.len());
    for record in &split.records {
        records.push(record.clone());
        if field.get(record) == Some(minority_class) {
            for k in 1..factor {
                let mut copy = record.clone();
                copy.id = format!("{}#{}", record.id, k);
                records.push(copy);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    Ok(DatasetSplit { name: split.name, records })
}
