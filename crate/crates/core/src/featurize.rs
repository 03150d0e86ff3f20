//! Hourly feature assembly: raw (normalized + imputed) or physiological-word
//! measurement blocks, forward-aggregated note topics, replicated statics,
//! intervention state and time of day.
//!
//! A physiological word is a one-hot category for a (variable, rounded and
//! clamped z-score) pair; all nine columns zero encodes a missing value
//! without imputation.

use crate::stay::{InterventionKind, MeasurementGrid, PatientStay, N_VARIABLES, VARIABLES};
use crate::topics::{infer_topics, DocTopicDist, TopicModel};
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// Number of topic-proportion columns.
pub const N_TOPICS: usize = 50;
/// z-score categories per variable: integers -4..=4.
pub const WORD_BINS: usize = 9;
/// Static block: age + gender(2) + ethnicity(4) + unit(5) + admission(3).
pub const STATIC_WIDTH: usize = 15;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("variable '{name}' is degenerate: {reason}")]
    DegenerateVariable { name: String, reason: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad features file: {0}")]
    BadFile(String),
}

// ---------------------------------------------------------------------------
// Normalization statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarStats {
    pub mean: f64,
    /// Population standard deviation over observed cells.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Per-variable moments and extrema, computed on the training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub per_var: Vec<VarStats>,
    pub age_min: f64,
    pub age_max: f64,
}

/// Moments over observed (non-absent) cells only. A variable with fewer than
/// two observations or zero variance is rejected.
pub fn compute_stats(train_stays: &[PatientStay]) -> Result<NormalizationStats, FeaturizeError> {
    let mut per_var = Vec::with_capacity(N_VARIABLES);
    for var in 0..N_VARIABLES {
        let mut count = 0usize;
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for stay in train_stays {
            for cell in stay.grid.column(var) {
                if let Some(v) = cell {
                    count += 1;
                    sum += v;
                    sum_sq += v * v;
                    min = min.min(*v);
                    max = max.max(*v);
                }
            }
        }
        let name = VARIABLES[var].name.to_string();
        if count < 2 {
            return Err(FeaturizeError::DegenerateVariable {
                name,
                reason: format!("{count} observation(s), need at least 2"),
            });
        }
        let mean = sum / count as f64;
        let var_hat = (sum_sq / count as f64 - mean * mean).max(0.0);
        let std = var_hat.sqrt();
        if std == 0.0 {
            return Err(FeaturizeError::DegenerateVariable { name, reason: "zero variance".into() });
        }
        per_var.push(VarStats { mean, std, min, max, count });
    }
    let mut age_min = f64::INFINITY;
    let mut age_max = f64::NEG_INFINITY;
    for stay in train_stays {
        age_min = age_min.min(stay.statics.age);
        age_max = age_max.max(stay.statics.age);
    }
    Ok(NormalizationStats { per_var, age_min, age_max })
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Raw,
    Words,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Raw => "raw",
            FeatureMode::Words => "words",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(FeatureMode::Raw),
            "words" => Some(FeatureMode::Words),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnGroup {
    Vital,
    Lab,
    Topic,
    Static,
    Context,
}

impl ColumnGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnGroup::Vital => "vital",
            ColumnGroup::Lab => "lab",
            ColumnGroup::Topic => "topic",
            ColumnGroup::Static => "static",
            ColumnGroup::Context => "context",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub group: ColumnGroup,
}

/// Ordered column layout of a feature matrix.
///
/// Layout: measurement block (29 raw or 29x9 word columns), 50 topic columns,
/// 15 static columns, intervention state, time of day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    pub mode: FeatureMode,
    pub kind: InterventionKind,
    pub columns: Vec<ColumnDef>,
}

pub const STATIC_COLUMNS: [&str; STATIC_WIDTH] = [
    "age",
    "gender_f",
    "gender_m",
    "ethnicity_white",
    "ethnicity_black",
    "ethnicity_hispanic",
    "ethnicity_other",
    "unit_ccu",
    "unit_csru",
    "unit_micu",
    "unit_sicu",
    "unit_tsicu",
    "admit_elective",
    "admit_urgent",
    "admit_emergency",
];

impl FeatureSchema {
    pub fn new(mode: FeatureMode, kind: InterventionKind) -> Arc<FeatureSchema> {
        let mut columns = Vec::new();
        for def in VARIABLES.iter() {
            let group = if def.vital { ColumnGroup::Vital } else { ColumnGroup::Lab };
            match mode {
                FeatureMode::Raw => columns.push(ColumnDef { name: def.name.to_string(), group }),
                FeatureMode::Words => {
                    for z in -4i32..=4 {
                        let name = if z > 0 {
                            format!("{}_+{z}", def.name)
                        } else {
                            format!("{}_{z}", def.name)
                        };
                        columns.push(ColumnDef { name, group });
                    }
                }
            }
        }
        for t in 0..N_TOPICS {
            columns.push(ColumnDef { name: format!("topic_{t}"), group: ColumnGroup::Topic });
        }
        for name in STATIC_COLUMNS {
            columns.push(ColumnDef { name: name.to_string(), group: ColumnGroup::Static });
        }
        columns.push(ColumnDef { name: "intervention_state".into(), group: ColumnGroup::Context });
        columns.push(ColumnDef { name: "time_of_day".into(), group: ColumnGroup::Context });
        Arc::new(FeatureSchema { mode, kind, columns })
    }

    /// Total width V.
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn measurement_width(&self) -> usize {
        match self.mode {
            FeatureMode::Raw => N_VARIABLES,
            FeatureMode::Words => N_VARIABLES * WORD_BINS,
        }
    }

    /// Columns carrying one variable's measurement (1 raw or 9 word columns).
    pub fn measurement_columns(&self, var: usize) -> std::ops::Range<usize> {
        match self.mode {
            FeatureMode::Raw => var..var + 1,
            FeatureMode::Words => var * WORD_BINS..(var + 1) * WORD_BINS,
        }
    }

    pub fn topic_offset(&self) -> usize {
        self.measurement_width()
    }

    pub fn static_offset(&self) -> usize {
        self.topic_offset() + N_TOPICS
    }

    pub fn state_column(&self) -> usize {
        self.static_offset() + STATIC_WIDTH
    }

    pub fn time_column(&self) -> usize {
        self.state_column() + 1
    }

    /// Structural identity of (mode, intervention kind, column layout).
    pub fn schema_hash(&self) -> String {
        let mut parts: Vec<&[u8]> = vec![self.mode.as_str().as_bytes(), self.kind.as_str().as_bytes()];
        for c in &self.columns {
            parts.push(c.name.as_bytes());
        }
        crate::seeding::to_hex(&crate::seeding::digest_parts(&parts))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

// ---------------------------------------------------------------------------
// Feature matrix
// ---------------------------------------------------------------------------

/// n_hours x V dense features for one stay.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: Arc<FeatureSchema>,
    pub n_hours: usize,
    /// Row-major: `data[hour * V + column]`.
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn at(&self, hour: usize, column: usize) -> f64 {
        self.data[hour * self.schema.width() + column]
    }

    pub fn row(&self, hour: usize) -> &[f64] {
        let v = self.schema.width();
        &self.data[hour * v..(hour + 1) * v]
    }
}

/// Word block: z-score each observed cell, round half-away-from-zero, clamp
/// to [-4, 4], and one-hot the resulting bin. Absent cells leave all nine
/// columns zero.
pub fn encode_words(grid: &MeasurementGrid, stats: &NormalizationStats) -> Vec<f64> {
    let width = N_VARIABLES * WORD_BINS;
    let mut out = vec![0.0; grid.n_hours() * width];
    for (var, col) in grid.columns() {
        let vs = &stats.per_var[var];
        for (hour, cell) in col.iter().enumerate() {
            if let Some(v) = cell {
                let z = (v - vs.mean) / vs.std;
                let bin = z.round().clamp(-4.0, 4.0) as i32;
                let col_idx = var * WORD_BINS + (bin + 4) as usize;
                out[hour * width + col_idx] = 1.0;
            }
        }
    }
    out
}

/// Raw block: forward-fill each column from the first observation onward,
/// fill the leading gap with the training mean, then min-max scale with the
/// training extrema, clamped to [0, 1].
pub fn normalize_impute(grid: &MeasurementGrid, stats: &NormalizationStats) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_hours() * N_VARIABLES];
    for (var, col) in grid.columns() {
        let vs = &stats.per_var[var];
        let range = vs.max - vs.min;
        let mut last: Option<f64> = None;
        for (hour, cell) in col.iter().enumerate() {
            if cell.is_some() {
                last = *cell;
            }
            let filled = last.unwrap_or(vs.mean);
            let scaled = if range > 0.0 { ((filled - vs.min) / range).clamp(0.0, 1.0) } else { 0.5 };
            out[hour * N_VARIABLES + var] = scaled;
        }
    }
    out
}

/// Topic block: at hour t, the arithmetic mean of the distributions of all
/// notes recorded at hours <= t; all-zero rows before the first note.
pub fn aggregate_topics(note_dists: &[(usize, DocTopicDist)], n_hours: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_hours * N_TOPICS];
    let mut sum = vec![0.0f64; N_TOPICS];
    let mut seen = 0usize;
    let mut sorted: Vec<&(usize, DocTopicDist)> = note_dists.iter().collect();
    sorted.sort_by_key(|(h, _)| *h);
    let mut next = 0usize;
    for hour in 0..n_hours {
        while next < sorted.len() && sorted[next].0 <= hour {
            for (t, v) in sorted[next].1.iter().enumerate() {
                sum[t] += v;
            }
            seen += 1;
            next += 1;
        }
        if seen > 0 {
            for t in 0..N_TOPICS {
                out[hour * N_TOPICS + t] = sum[t] / seen as f64;
            }
        }
    }
    out
}

/// Infer one distribution per note of a stay, seeded per note index.
pub fn note_distributions(
    stay: &PatientStay,
    model: &TopicModel,
    fold_in_iterations: usize,
    seed: u64,
) -> Vec<(usize, DocTopicDist)> {
    stay.notes
        .iter()
        .enumerate()
        .map(|(i, note)| {
            let note_seed =
                crate::seeding::derive_seed(seed, &["fold-in", &stay.stay_id, &i.to_string()]);
            (note.hour, infer_topics(model, &note.tokens, fold_in_iterations, note_seed))
        })
        .collect()
}

fn static_block(stay: &PatientStay, stats: &NormalizationStats) -> [f64; STATIC_WIDTH] {
    use crate::stay::{AdmissionType, Ethnicity, Gender, IcuUnit};
    let mut out = [0.0; STATIC_WIDTH];
    let range = stats.age_max - stats.age_min;
    out[0] = if range > 0.0 {
        ((stay.statics.age - stats.age_min) / range).clamp(0.0, 1.0)
    } else {
        0.5
    };
    match stay.statics.gender {
        Gender::Female => out[1] = 1.0,
        Gender::Male => out[2] = 1.0,
    }
    match stay.statics.ethnicity {
        Ethnicity::White => out[3] = 1.0,
        Ethnicity::Black => out[4] = 1.0,
        Ethnicity::Hispanic => out[5] = 1.0,
        Ethnicity::Other => out[6] = 1.0,
    }
    match stay.statics.icu_unit {
        IcuUnit::Ccu => out[7] = 1.0,
        IcuUnit::Csru => out[8] = 1.0,
        IcuUnit::Micu => out[9] = 1.0,
        IcuUnit::Sicu => out[10] = 1.0,
        IcuUnit::Tsicu => out[11] = 1.0,
    }
    match stay.statics.admission_type {
        AdmissionType::Elective => out[12] = 1.0,
        AdmissionType::Urgent => out[13] = 1.0,
        AdmissionType::Emergency => out[14] = 1.0,
    }
    out
}

/// Assemble the full per-hour feature matrix for one stay. Pure: identical
/// inputs produce a bit-identical matrix.
pub fn assemble(
    stay: &PatientStay,
    schema: &Arc<FeatureSchema>,
    stats: &NormalizationStats,
    topics: &TopicModel,
    fold_in_iterations: usize,
    seed: u64,
) -> Result<FeatureMatrix, FeaturizeError> {
    let track = stay.track(schema.kind).ok_or_else(|| {
        FeaturizeError::SchemaMismatch(format!(
            "stay '{}' has no track for intervention '{}'",
            stay.stay_id, schema.kind
        ))
    })?;
    if track.len() != stay.n_hours() {
        return Err(FeaturizeError::SchemaMismatch(format!(
            "stay '{}' track length {} != {} hours",
            stay.stay_id,
            track.len(),
            stay.n_hours()
        )));
    }
    let n_hours = stay.n_hours();
    let v = schema.width();
    let measurement = match schema.mode {
        FeatureMode::Raw => normalize_impute(&stay.grid, stats),
        FeatureMode::Words => encode_words(&stay.grid, stats),
    };
    let m_width = schema.measurement_width();
    let dists = note_distributions(stay, topics, fold_in_iterations, seed);
    let topic_block = aggregate_topics(&dists, n_hours);
    let statics = static_block(stay, stats);

    let mut data = vec![0.0; n_hours * v];
    for hour in 0..n_hours {
        let row = &mut data[hour * v..(hour + 1) * v];
        row[..m_width].copy_from_slice(&measurement[hour * m_width..(hour + 1) * m_width]);
        row[m_width..m_width + N_TOPICS]
            .copy_from_slice(&topic_block[hour * N_TOPICS..(hour + 1) * N_TOPICS]);
        row[m_width + N_TOPICS..m_width + N_TOPICS + STATIC_WIDTH].copy_from_slice(&statics);
        row[schema.state_column()] = track[hour] as f64;
        let wall = (stay.admission_hour as usize + hour) % 24;
        row[schema.time_column()] = wall as f64 / 23.0;
    }
    Ok(FeatureMatrix { schema: schema.clone(), n_hours, data })
}

/// Write one matrix as CSV: header row of column names, one row per hour.
pub fn write_matrix_csv(path: &Path, matrix: &FeatureMatrix) -> Result<(), FeaturizeError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let names: Vec<&str> = matrix.schema.columns.iter().map(|c| c.name.as_str()).collect();
    writeln!(w, "{}", names.join(","))?;
    for hour in 0..matrix.n_hours {
        let cells: Vec<String> = matrix.row(hour).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Features file: binary artifact bridging featurize -> window
// ---------------------------------------------------------------------------

const FEATURES_MAGIC: &[u8; 8] = b"ICUFEAT1";

/// Cohort split membership, assigned at the patient level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StayFeatures {
    pub stay_id: String,
    pub split: Split,
    pub matrix: FeatureMatrix,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct FeaturesHeader {
    mode: FeatureMode,
    kind: InterventionKind,
    schema_hash: String,
    config_hash: String,
    n_stays: usize,
}

/// Write the featurized cohort with per-stay split tags.
pub fn write_features(
    path: &Path,
    stays: &[StayFeatures],
    config_hash: &str,
) -> Result<(), FeaturizeError> {
    let schema = match stays.first() {
        Some(s) => s.matrix.schema.clone(),
        None => return Err(FeaturizeError::SchemaMismatch("no stays to write".into())),
    };
    let header = FeaturesHeader {
        mode: schema.mode,
        kind: schema.kind,
        schema_hash: schema.schema_hash(),
        config_hash: config_hash.to_string(),
        n_stays: stays.len(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| FeaturizeError::BadFile(format!("header encode: {e}")))?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(FEATURES_MAGIC)?;
    w.write_all(&(header_json.len() as u32).to_le_bytes())?;
    w.write_all(&header_json)?;
    for sf in stays {
        if sf.matrix.schema.schema_hash() != header.schema_hash {
            return Err(FeaturizeError::SchemaMismatch(format!(
                "stay '{}' schema differs from file schema",
                sf.stay_id
            )));
        }
        let id = sf.stay_id.as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
        w.write_all(&[sf.split as u8])?;
        w.write_all(&(sf.matrix.n_hours as u32).to_le_bytes())?;
        for v in &sf.matrix.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a features file; returns (stays, schema, config hash).
pub fn read_features(
    path: &Path,
) -> Result<(Vec<StayFeatures>, Arc<FeatureSchema>, String), FeaturizeError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != FEATURES_MAGIC {
        return Err(FeaturizeError::BadFile("bad magic".into()));
    }
    let mut len4 = [0u8; 4];
    file.read_exact(&mut len4)?;
    let hlen = u32::from_le_bytes(len4) as usize;
    let mut hbuf = vec![0u8; hlen];
    file.read_exact(&mut hbuf)?;
    let header: FeaturesHeader = serde_json::from_slice(&hbuf)
        .map_err(|e| FeaturizeError::BadFile(format!("header decode: {e}")))?;
    let schema = FeatureSchema::new(header.mode, header.kind);
    if schema.schema_hash() != header.schema_hash {
        return Err(FeaturizeError::BadFile("schema hash mismatch".into()));
    }
    let v = schema.width();
    let mut stays = Vec::with_capacity(header.n_stays);
    for _ in 0..header.n_stays {
        file.read_exact(&mut len4)?;
        let id_len = u32::from_le_bytes(len4) as usize;
        let mut id = vec![0u8; id_len];
        file.read_exact(&mut id)?;
        let stay_id = String::from_utf8(id)
            .map_err(|_| FeaturizeError::BadFile("stay id not utf-8".into()))?;
        let mut split_byte = [0u8; 1];
        file.read_exact(&mut split_byte)?;
        let split = match split_byte[0] {
            0 => Split::Train,
            1 => Split::Val,
            2 => Split::Test,
            b => return Err(FeaturizeError::BadFile(format!("bad split tag {b}"))),
        };
        file.read_exact(&mut len4)?;
        let n_hours = u32::from_le_bytes(len4) as usize;
        let mut data = vec![0.0f64; n_hours * v];
        let mut buf8 = [0u8; 8];
        for cell in data.iter_mut() {
            file.read_exact(&mut buf8)?;
            *cell = f64::from_le_bytes(buf8);
        }
        stays.push(StayFeatures {
            stay_id,
            split,
            matrix: FeatureMatrix { schema: schema.clone(), n_hours, data },
        });
    }
    Ok((stays, schema, header.config_hash))
}
