//! Claim corpora: loading delimited or JSON-lines files into [`Claim`]
//! records, stratified dev splitting, and per-split label statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    CT22,
    PoliClaim,
    Custom,
}

impl Dataset {
    /// Only the COVID-19 tweet corpus enables the disease lexicon.
    pub fn uses_disease_lexicon(self) -> bool {
        matches!(self, Dataset::CT22)
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ct22" => Ok(Dataset::CT22),
            "policlaim" => Ok(Dataset::PoliClaim),
            "custom" => Ok(Dataset::Custom),
            _ => Err(Error::InvalidArgument(format!("unknown dataset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split `{s}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// Binary verifiability label. `Verifiable` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Verifiable,
    NonVerifiable,
}

impl Label {
    pub fn is_verifiable(self) -> bool {
        self == Label::Verifiable
    }

    /// The answer word the detection prompt expects for this label.
    pub fn answer(self) -> &'static str {
        match self {
            Label::Verifiable => "Yes",
            Label::NonVerifiable => "No",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "verifiable" => Ok(Label::Verifiable),
            "non_verifiable" | "non-verifiable" => Ok(Label::NonVerifiable),
            _ => Err(Error::InvalidArgument(format!("unknown label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    pub dataset: Dataset,
    pub split: Split,
    pub gold_label: Option<Label>,
}

impl Claim {
    /// Builds a claim, NFC-normalizing id and text. Rejects blank text.
    pub fn new(
        id: impl AsRef<str>,
        text: impl AsRef<str>,
        dataset: Dataset,
        split: Split,
        gold_label: Option<Label>,
    ) -> Result<Self> {
        let text: String = text.as_ref().nfc().collect();
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument("claim text is empty".into()));
        }
        Ok(Claim {
            id: id.as_ref().nfc().collect(),
            text,
            dataset,
            split,
            gold_label,
        })
    }

    pub fn gold(&self) -> Result<Label> {
        self.gold_label.ok_or_else(|| Error::Unlabeled(self.id.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Delimited { delimiter: u8 },
    JsonLines,
}

impl InputFormat {
    /// `.tsv` is tab-delimited, `.jsonl`/`.json` is JSON-lines, anything else comma-delimited.
    pub fn infer(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("tsv") | Some("tab") => InputFormat::Delimited { delimiter: b'\t' },
            Some("jsonl") | Some("json") | Some("ndjson") => InputFormat::JsonLines,
            _ => InputFormat::Delimited { delimiter: b',' },
        }
    }
}

/// Column mapping and label normalization for one input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSchema {
    pub id_column: Option<String>,
    pub text_column: String,
    pub label_column: Option<String>,
    pub split_column: Option<String>,
    pub dataset: Dataset,
    /// Split assigned when no split column is mapped.
    pub split: Split,
    /// Lowercased raw label string to normalized label.
    pub labels: BTreeMap<String, Label>,
}

impl Default for CorpusSchema {
    fn default() -> Self {
        let mut labels = BTreeMap::new();
        for raw in ["1", "yes", "true", "verifiable", "checkable"] {
            labels.insert(raw.to_string(), Label::Verifiable);
        }
        for raw in [
            "0",
            "no",
            "false",
            "non_verifiable",
            "non-verifiable",
            "not_verifiable",
            "unverifiable",
        ] {
            labels.insert(raw.to_string(), Label::NonVerifiable);
        }
        CorpusSchema {
            id_column: Some("id".into()),
            text_column: "text".into(),
            label_column: Some("label".into()),
            split_column: None,
            dataset: Dataset::Custom,
            split: Split::Test,
            labels,
        }
    }
}

impl CorpusSchema {
    pub fn normalize_label(&self, raw: &str) -> Option<Label> {
        self.labels.get(&raw.trim().to_lowercase()).copied()
    }
}

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub claims: Vec<Claim>,
    pub rejected: Vec<RowError>,
}

pub fn load_corpus(path: &Path, format: InputFormat, schema: &CorpusSchema) -> Result<LoadedCorpus> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let rows = match format {
        InputFormat::Delimited { delimiter } => read_delimited(path, delimiter, schema)?,
        InputFormat::JsonLines => read_json_lines(path, schema)?,
    };

    let mut corpus = LoadedCorpus::default();
    let mut seen = HashSet::new();
    for row in rows {
        let raw = match row {
            Ok(raw) => raw,
            Err(e) => {
                corpus.rejected.push(e);
                continue;
            }
        };
        let line = raw.line;
        match raw.into_claim(schema) {
            Ok(claim) => {
                if seen.insert(claim.id.clone()) {
                    corpus.claims.push(claim);
                } else {
                    corpus.rejected.push(RowError {
                        line,
                        message: format!("duplicate id `{}`", claim.id),
                    });
                }
            }
            Err(e) => corpus.rejected.push(e),
        }
    }
    if corpus.claims.is_empty() {
        return Err(Error::EmptyCorpus(path.to_path_buf()));
    }
    Ok(corpus)
}

/// A dataset stored as one file per split, all sharing a schema.
///
/// ```toml
/// dataset = "CT22"
/// [schema]
/// id_column = "tweet_id"
/// text_column = "tweet_text"
/// label_column = "class_label"
/// [splits]
/// train = "train.tsv"
/// test = "test.tsv"
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub dataset: Dataset,
    /// `csv`, `tsv` or `jsonl`; inferred per file when absent.
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub schema: CorpusSchema,
    /// Paths are relative to the manifest.
    pub splits: BTreeMap<Split, PathBuf>,
}

/// Loads every split listed in a [`CorpusManifest`]. Ids must be unique
/// across splits; rejected rows carry the file name in their message.
pub fn load_manifest(path: &Path) -> Result<LoadedCorpus> {
    let text = io::read_to_string(path)?;
    let manifest: CorpusManifest =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = LoadedCorpus::default();
    let mut seen = HashSet::new();
    for (split, file) in &manifest.splits {
        let file = base.join(file);
        let format = match manifest.format.as_deref() {
            None => InputFormat::infer(&file),
            Some("csv") => InputFormat::Delimited { delimiter: b',' },
            Some("tsv") => InputFormat::Delimited { delimiter: b'\t' },
            Some("jsonl") => InputFormat::JsonLines,
            Some(other) => return Err(Error::Config(format!("unknown corpus format `{other}`"))),
        };
        let schema = CorpusSchema {
            dataset: manifest.dataset,
            split: *split,
            split_column: None,
            ..manifest.schema.clone()
        };
        let loaded = load_corpus(&file, format, &schema)?;
        let name = file.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        out.rejected.extend(loaded.rejected.into_iter().map(|r| RowError {
            line: r.line,
            message: format!("{name}: {}", r.message),
        }));
        for claim in loaded.claims {
            if seen.insert(claim.id.clone()) {
                out.claims.push(claim);
            } else {
                return Err(Error::InvalidArgument(format!("id `{}` appears in more than one split", claim.id)));
            }
        }
    }
    Ok(out)
}

struct RawRow {
    line: u64,
    id: Option<String>,
    text: String,
    label: Option<String>,
    split: Option<String>,
}

impl RawRow {
    fn into_claim(self, schema: &CorpusSchema) -> std::result::Result<Claim, RowError> {
        let line = self.line;
        let err = |message: String| RowError { line, message };
        let gold_label = match (&schema.label_column, self.label) {
            (None, _) => None,
            (Some(_), None) => return Err(err("missing label".into())),
            (Some(_), Some(raw)) => match schema.normalize_label(&raw) {
                Some(label) => Some(label),
                None => return Err(err(format!("unrecognized label `{raw}`"))),
            },
        };
        let split = match self.split {
            Some(raw) => raw.parse().map_err(|e: Error| err(e.to_string()))?,
            None => schema.split,
        };
        let id = match self.id {
            Some(id) if !id.trim().is_empty() => id.trim().to_string(),
            Some(_) => return Err(err("empty id".into())),
            None => format!("{split}-{line}"),
        };
        Claim::new(id, self.text, schema.dataset, split, gold_label)
            .map_err(|_| err("empty claim text".into()))
    }
}

fn column_index(headers: &csv::StringRecord, column: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::UnmappedColumn {
            column: column.to_string(),
        })
}

type RowResult = std::result::Result<RawRow, RowError>;

fn read_delimited(path: &Path, delimiter: u8, schema: &CorpusSchema) -> Result<Vec<RowResult>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .quoting(delimiter != b'\t')
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidArgument(format!("{other:?}")),
        })?;
    let headers = reader.headers()?.clone();
    let text_idx = column_index(&headers, &schema.text_column)?;
    let id_idx = schema
        .id_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;
    let label_idx = schema
        .label_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;
    let split_idx = schema
        .split_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                rows.push(Err(RowError {
                    line,
                    message: e.to_string(),
                }));
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            rows.push(Err(RowError {
                line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            }));
            continue;
        }
        let field = |i: usize| record.get(i).map(str::to_string);
        rows.push(Ok(RawRow {
            line,
            id: id_idx.and_then(field),
            text: field(text_idx).unwrap_or_default(),
            label: label_idx.and_then(field),
            split: split_idx.and_then(field),
        }));
    }
    Ok(rows)
}

fn read_json_lines(path: &Path, schema: &CorpusSchema) -> Result<Vec<RowResult>> {
    let text = io::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                rows.push(Err(RowError {
                    line: line_no,
                    message: format!("invalid JSON: {e}"),
                }));
                continue;
            }
        };
        let get = |key: &str| -> Option<String> {
            match value.get(key)? {
                serde_json::Value::String(s) => Some(s.clone()),
                serde_json::Value::Null => None,
                other => Some(other.to_string()),
            }
        };
        let Some(text) = get(&schema.text_column) else {
            rows.push(Err(RowError {
                line: line_no,
                message: format!("missing field `{}`", schema.text_column),
            }));
            continue;
        };
        rows.push(Ok(RawRow {
            line: line_no,
            id: schema.id_column.as_deref().and_then(get),
            text,
            label: schema.label_column.as_deref().and_then(get),
            split: schema.split_column.as_deref().and_then(get),
        }));
    }
    Ok(rows)
}

/// Writes the canonical JSON-lines form `{id, text, dataset, split, gold_label}`.
pub fn write_corpus(path: &Path, claims: &[Claim]) -> Result<()> {
    io::write_jsonl(path, claims)
}

/// Reads a canonical corpus written by [`write_corpus`].
pub fn read_corpus(path: &Path) -> Result<Vec<Claim>> {
    let claims: Vec<Claim> = io::read_jsonl(path)?;
    if claims.is_empty() {
        return Err(Error::EmptyCorpus(path.to_path_buf()));
    }
    Ok(claims)
}

/// Splits labeled claims into `(train, dev)` preserving class proportions.
///
/// The dev set receives `ceil(dev_fraction * n)` items, apportioned across
/// classes by largest remainder. Each class is shuffled independently with a
/// ChaCha generator seeded from `seed`. Both halves keep input order.
pub fn stratified_split(
    claims: &[Claim],
    dev_fraction: f64,
    seed: u64,
) -> Result<(Vec<Claim>, Vec<Claim>)> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dev_fraction must lie in (0, 1), got {dev_fraction}"
        )));
    }
    let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, claim) in claims.iter().enumerate() {
        by_class.entry(claim.gold()?).or_default().push(i);
    }
    let n = claims.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    // 1e-9 guards against products such as 0.1 * 30 = 3.0000000000000004.
    let dev_total = ((dev_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let dev_total = dev_total.min(n);

    let mut quotas: Vec<(Label, usize, f64)> = by_class
        .iter()
        .map(|(label, members)| {
            let exact = dev_total as f64 * members.len() as f64 / n as f64;
            (*label, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then(a.cmp(&b)));
    for &k in order.iter().take(dev_total - assigned) {
        quotas[k].1 += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_dev = vec![false; n];
    for (label, quota, _) in &quotas {
        let mut members = by_class[label].clone();
        members.shuffle(&mut rng);
        for &i in members.iter().take(*quota) {
            in_dev[i] = true;
        }
    }
    let (dev, train): (Vec<_>, Vec<_>) = claims
        .iter()
        .enumerate()
        .partition(|(i, _)| in_dev[*i]);
    let strip = |v: Vec<(usize, &Claim)>, split: Split| -> Vec<Claim> {
        v.into_iter()
            .map(|(_, c)| Claim {
                split,
                ..c.clone()
            })
            .collect()
    };
    Ok((strip(train, Split::Train), strip(dev, Split::Dev)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub total: usize,
    pub verifiable: usize,
    pub non_verifiable: usize,
    pub unlabeled: usize,
}

impl SplitStats {
    /// `None` when no labeled claims exist.
    pub fn verifiable_fraction(&self) -> Option<f64> {
        let labeled = self.verifiable + self.non_verifiable;
        (labeled > 0).then(|| self.verifiable as f64 / labeled as f64)
    }

    pub fn non_verifiable_fraction(&self) -> Option<f64> {
        self.verifiable_fraction().map(|f| 1.0 - f)
    }

    fn add(&mut self, label: Option<Label>) {
        self.total += 1;
        match label {
            Some(Label::Verifiable) => self.verifiable += 1,
            Some(Label::NonVerifiable) => self.non_verifiable += 1,
            None => self.unlabeled += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub overall: SplitStats,
    pub splits: BTreeMap<Split, SplitStats>,
}

pub fn corpus_stats(claims: &[Claim]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for claim in claims {
        stats.overall.add(claim.gold_label);
        stats.splits.entry(claim.split).or_default().add(claim.gold_label);
    }
    stats
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:>7} {:>6} {:>6}", "split", "total", "veri", "non")?;
        let pct = |x: Option<f64>| match x {
            Some(x) => format!("{:.0}%", x * 100.0),
            None => "-".to_string(),
        };
        for (split, s) in &self.splits {
            writeln!(
                f,
                "{:<6} {:>7} {:>6} {:>6}",
                split.to_string(),
                s.total,
                pct(s.verifiable_fraction()),
                pct(s.non_verifiable_fraction())
            )?;
        }
        Ok(())
    }
}
