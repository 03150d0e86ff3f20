//! Sliding-window example extraction and gap-time labeling.
//!
//! Each example carries a fixed 6-hour feature lookback; its label describes
//! the intervention track in a 4-hour prediction window that starts after a
//! 6-hour gap, so the feature slice never overlaps the labeled hours.

use crate::featurize::{FeatureMatrix, FeatureSchema, Split};
use crate::stay::{InterventionKind, PatientStay};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WindowError {
    #[error("track has non-binary value {value} at hour {hour}")]
    NonBinaryTrack { hour: usize, value: u8 },
    #[error("track length {track} != matrix hours {hours}")]
    TrackLengthMismatch { track: usize, hours: usize },
    #[error("label window is empty")]
    EmptyLabelWindow,
    #[error("need at least {min} stays to split, got {got}")]
    TooFewStays { min: usize, got: usize },
    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    BadRatios((f64, f64, f64)),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad shard file: {0}")]
    BadShard(String),
}

/// Window geometry, in hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub lookback: usize,
    pub gap: usize,
    pub horizon: usize,
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { lookback: 6, gap: 6, horizon: 4, stride: 1 }
    }
}

impl WindowConfig {
    pub fn total_span(&self) -> usize {
        self.lookback + self.gap + self.horizon
    }
}

/// Class vocabulary for an intervention kind: four outcomes for kinds with
/// duration, onset / no-onset for instantaneous boluses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub kind: InterventionKind,
}

pub const ONSET: u8 = 0;
pub const WEAN: u8 = 1;
pub const STAY_ON: u8 = 2;
pub const STAY_OFF: u8 = 3;
pub const NO_ONSET: u8 = 1;

impl LabelScheme {
    pub fn for_kind(kind: InterventionKind) -> Self {
        LabelScheme { kind }
    }

    pub fn n_classes(&self) -> usize {
        if self.kind.has_duration() {
            4
        } else {
            2
        }
    }

    pub fn class_names(&self) -> &'static [&'static str] {
        if self.kind.has_duration() {
            &["onset", "wean", "stay_on", "stay_off"]
        } else {
            &["onset", "no_onset"]
        }
    }

    pub fn class_name(&self, label: u8) -> &'static str {
        self.class_names()[label as usize]
    }
}

/// Label one prediction window.
///
/// For kinds with duration the entry state (the hour immediately before the
/// prediction window) participates in the transition test: a rise anywhere in
/// [entry, window...] is an onset, otherwise a fall is a wean, otherwise the
/// window is constant and labels stay-on / stay-off. Onset takes precedence
/// when both transitions occur. For boluses, onset iff any administration.
pub fn label_window(entry_state: u8, window: &[u8], scheme: LabelScheme) -> Result<u8, WindowError> {
    if window.is_empty() {
        return Err(WindowError::EmptyLabelWindow);
    }
    if entry_state > 1 {
        return Err(WindowError::NonBinaryTrack { hour: 0, value: entry_state });
    }
    if let Some(pos) = window.iter().position(|v| *v > 1) {
        return Err(WindowError::NonBinaryTrack { hour: pos, value: window[pos] });
    }
    if !scheme.kind.has_duration() {
        return Ok(if window.contains(&1) { ONSET } else { NO_ONSET });
    }
    let mut prev = entry_state;
    let mut rose = false;
    let mut fell = false;
    for &v in window {
        if prev == 0 && v == 1 {
            rose = true;
        }
        if prev == 1 && v == 0 {
            fell = true;
        }
        prev = v;
    }
    Ok(if rose {
        ONSET
    } else if fell {
        WEAN
    } else if window[0] == 1 {
        STAY_ON
    } else {
        STAY_OFF
    })
}

/// One training instance: a lookback feature slice plus its label and
/// provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub stay_id: String,
    pub window_start: usize,
    pub label: u8,
    /// lookback x V, row-major by hour.
    pub features: Vec<f64>,
}

/// A labeled example collection sharing one schema and label scheme.
#[derive(Debug, Clone)]
pub struct ExampleSet {
    pub schema: Arc<FeatureSchema>,
    pub scheme: LabelScheme,
    pub lookback: usize,
    pub examples: Vec<Example>,
}

impl ExampleSet {
    pub fn feature_len(&self) -> usize {
        self.lookback * self.schema.width()
    }
}

/// Extract the binary intervention track from a matrix's state column.
pub fn state_track(matrix: &FeatureMatrix) -> Vec<u8> {
    let col = matrix.schema.state_column();
    (0..matrix.n_hours).map(|h| matrix.at(h, col) as u8).collect()
}

/// Slide windows along one stay. Stays shorter than lookback + gap + horizon
/// produce no examples (not an error).
pub fn slide(
    stay_id: &str,
    matrix: &FeatureMatrix,
    track: &[u8],
    config: &WindowConfig,
) -> Result<Vec<Example>, WindowError> {
    if track.len() != matrix.n_hours {
        return Err(WindowError::TrackLengthMismatch { track: track.len(), hours: matrix.n_hours });
    }
    let span = config.total_span();
    let n = matrix.n_hours;
    if n < span {
        return Ok(Vec::new());
    }
    let scheme = LabelScheme::for_kind(matrix.schema.kind);
    let v = matrix.schema.width();
    let mut out = Vec::with_capacity((n - span) / config.stride + 1);
    let mut start = 0;
    while start + span <= n {
        let pred_start = start + config.lookback + config.gap;
        let entry = track[pred_start - 1];
        let window = &track[pred_start..pred_start + config.horizon];
        let label = label_window(entry, window, scheme)?;
        let features = matrix.data[start * v..(start + config.lookback) * v].to_vec();
        out.push(Example { stay_id: stay_id.to_string(), window_start: start, label, features });
        start += config.stride;
    }
    Ok(out)
}

/// Per-class counts and fractions, reportable as a proportions table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProportions {
    pub scheme: LabelScheme,
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
}

pub fn class_proportions(examples: &[Example], scheme: LabelScheme) -> Option<ClassProportions> {
    if examples.is_empty() {
        return None;
    }
    let mut counts = vec![0usize; scheme.n_classes()];
    for ex in examples {
        counts[ex.label as usize] += 1;
    }
    let total = examples.len() as f64;
    let fractions = counts.iter().map(|c| *c as f64 / total).collect();
    Some(ClassProportions { scheme, counts, fractions })
}

impl std::fmt::Display for ClassProportions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:", self.scheme.kind)?;
        for (name, frac) in self.scheme.class_names().iter().zip(&self.fractions) {
            write!(f, " {name}={frac:.3}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Cohort split
// ---------------------------------------------------------------------------

/// Patient-level split assignment with stratification diagnostics.
#[derive(Debug, Clone)]
pub struct CohortSplit {
    pub assignment: BTreeMap<String, Split>,
    pub warnings: Vec<String>,
}

impl CohortSplit {
    pub fn split_of(&self, stay_id: &str) -> Option<Split> {
        self.assignment.get(stay_id).copied()
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0usize; 3];
        for s in self.assignment.values() {
            c[*s as usize] += 1;
        }
        c
    }
}

/// Largest-remainder apportionment of `n` into parts proportional to ratios.
fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut parts = [quotas[0].floor() as usize, quotas[1].floor() as usize, quotas[2].floor() as usize];
    let mut remaining = n - parts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        (quotas[b] - quotas[b].floor())
            .partial_cmp(&(quotas[a] - quotas[a].floor()))
            .unwrap()
            .then(a.cmp(&b))
    });
    for i in order {
        if remaining == 0 {
            break;
        }
        parts[i] += 1;
        remaining -= 1;
    }
    parts
}

/// Signature of the interventions a stay ever experiences (one bit per kind).
fn experience_signature(stay: &PatientStay) -> u8 {
    let mut sig = 0u8;
    for (i, kind) in InterventionKind::ALL.iter().enumerate() {
        if stay.track(*kind).is_some_and(|t| t.contains(&1)) {
            sig |= 1 << i;
        }
    }
    sig
}

/// Partition stays into train/validation/test at the patient level,
/// stratified so that the fraction of patients ever experiencing each
/// intervention matches across splits. Deterministic given the seed.
pub fn split_cohort(
    stays: &[PatientStay],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<CohortSplit, WindowError> {
    const MIN_STAYS: usize = 10;
    if stays.len() < MIN_STAYS {
        return Err(WindowError::TooFewStays { min: MIN_STAYS, got: stays.len() });
    }
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|x| *x <= 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(WindowError::BadRatios(ratios));
    }

    // Canonical patient order, then group by experience signature.
    let mut order: Vec<&PatientStay> = stays.iter().collect();
    order.sort_by(|a, b| a.stay_id.cmp(&b.stay_id));
    let mut groups: BTreeMap<u8, Vec<&PatientStay>> = BTreeMap::new();
    for stay in order {
        groups.entry(experience_signature(stay)).or_default().push(stay);
    }
    for (sig, members) in groups.iter_mut() {
        use rand::seq::SliceRandom;
        let mut rng = crate::seeding::derive_rng(seed, &["split", &sig.to_string()]);
        members.shuffle(&mut rng);
    }

    // Per-group largest-remainder allocation, repaired to exact global sizes.
    let targets = apportion(stays.len(), &r);
    let sigs: Vec<u8> = groups.keys().copied().collect();
    let mut allocs: BTreeMap<u8, [usize; 3]> =
        sigs.iter().map(|s| (*s, apportion(groups[s].len(), &r))).collect();
    loop {
        let mut totals = [0usize; 3];
        for a in allocs.values() {
            for s in 0..3 {
                totals[s] += a[s];
            }
        }
        let over = (0..3).find(|&s| totals[s] > targets[s]);
        let under = (0..3).find(|&s| totals[s] < targets[s]);
        match (over, under) {
            (Some(o), Some(u)) => {
                // Move one patient from the group with the largest `o` slice.
                let donor = sigs
                    .iter()
                    .max_by_key(|s| allocs[s][o])
                    .copied()
                    .expect("at least one group");
                let a = allocs.get_mut(&donor).unwrap();
                a[o] -= 1;
                a[u] += 1;
            }
            _ => break,
        }
    }

    let mut warnings = Vec::new();
    let mut assignment = BTreeMap::new();
    for sig in &sigs {
        let members = &groups[sig];
        let a = allocs[sig];
        if members.len() < 3 {
            warnings.push(format!(
                "signature {sig:#07b}: only {} patient(s); stratification is best-effort",
                members.len()
            ));
        }
        for (i, stay) in members.iter().enumerate() {
            let split = if i < a[0] {
                Split::Train
            } else if i < a[0] + a[1] {
                Split::Val
            } else {
                Split::Test
            };
            assignment.insert(stay.stay_id.clone(), split);
        }
    }

    // Stratification diagnostics: per-intervention experience fraction.
    let counts = {
        let mut c = [0usize; 3];
        for s in assignment.values() {
            c[*s as usize] += 1;
        }
        c
    };
    for (i, kind) in InterventionKind::ALL.iter().enumerate() {
        let overall = stays
            .iter()
            .filter(|s| experience_signature(s) & (1 << i) != 0)
            .count() as f64
            / stays.len() as f64;
        for split in Split::ALL {
            let in_split = stays
                .iter()
                .filter(|s| {
                    assignment[&s.stay_id] == split && experience_signature(s) & (1 << i) != 0
                })
                .count() as f64;
            let frac = in_split / counts[split as usize].max(1) as f64;
            if (frac - overall).abs() > 0.02 {
                warnings.push(format!(
                    "{kind} fraction in {} is {:.3} vs overall {:.3}",
                    split.as_str(),
                    frac,
                    overall
                ));
            }
        }
    }

    Ok(CohortSplit { assignment, warnings })
}

// ---------------------------------------------------------------------------
// Shard I/O
// ---------------------------------------------------------------------------

const SHARD_MAGIC: &[u8; 8] = b"ICUSHRD1";

#[derive(Serialize, Deserialize)]
struct ShardHeader {
    mode: crate::featurize::FeatureMode,
    kind: InterventionKind,
    schema_hash: String,
    config_hash: String,
    lookback: usize,
    n_examples: usize,
}

/// Write one example shard: header, then fixed-layout records.
pub fn write_shard(path: &Path, set: &ExampleSet, config_hash: &str) -> Result<(), WindowError> {
    let header = ShardHeader {
        mode: set.schema.mode,
        kind: set.schema.kind,
        schema_hash: set.schema.schema_hash(),
        config_hash: config_hash.to_string(),
        lookback: set.lookback,
        n_examples: set.examples.len(),
    };
    let hjson = serde_json::to_vec(&header).map_err(|e| WindowError::BadShard(e.to_string()))?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(SHARD_MAGIC)?;
    w.write_all(&(hjson.len() as u32).to_le_bytes())?;
    w.write_all(&hjson)?;
    let flen = set.feature_len();
    for ex in &set.examples {
        if ex.features.len() != flen {
            return Err(WindowError::BadShard(format!(
                "example from '{}' has {} features, expected {flen}",
                ex.stay_id,
                ex.features.len()
            )));
        }
        let id = ex.stay_id.as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
        w.write_all(&(ex.window_start as u32).to_le_bytes())?;
        w.write_all(&[ex.label])?;
        for v in &ex.features {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read one shard; returns the example set and the producer's config hash.
pub fn read_shard(path: &Path) -> Result<(ExampleSet, String), WindowError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != SHARD_MAGIC {
        return Err(WindowError::BadShard("bad magic".into()));
    }
    let mut len4 = [0u8; 4];
    file.read_exact(&mut len4)?;
    let hlen = u32::from_le_bytes(len4) as usize;
    let mut hbuf = vec![0u8; hlen];
    file.read_exact(&mut hbuf)?;
    let header: ShardHeader =
        serde_json::from_slice(&hbuf).map_err(|e| WindowError::BadShard(e.to_string()))?;
    let schema = FeatureSchema::new(header.mode, header.kind);
    if schema.schema_hash() != header.schema_hash {
        return Err(WindowError::BadShard("schema hash mismatch".into()));
    }
    let scheme = LabelScheme::for_kind(header.kind);
    let flen = header.lookback * schema.width();
    let mut examples = Vec::with_capacity(header.n_examples);
    let mut buf8 = [0u8; 8];
    for _ in 0..header.n_examples {
        file.read_exact(&mut len4)?;
        let id_len = u32::from_le_bytes(len4) as usize;
        let mut id = vec![0u8; id_len];
        file.read_exact(&mut id)?;
        let stay_id =
            String::from_utf8(id).map_err(|_| WindowError::BadShard("stay id not utf-8".into()))?;
        file.read_exact(&mut len4)?;
        let window_start = u32::from_le_bytes(len4) as usize;
        let mut label = [0u8; 1];
        file.read_exact(&mut label)?;
        if label[0] as usize >= scheme.n_classes() {
            return Err(WindowError::BadShard(format!("label {} out of range", label[0])));
        }
        let mut features = vec![0.0f64; flen];
        for cell in features.iter_mut() {
            file.read_exact(&mut buf8)?;
            *cell = f64::from_le_bytes(buf8);
        }
        examples.push(Example { stay_id, window_start, label: label[0], features });
    }
    Ok((ExampleSet { schema, scheme, lookback: header.lookback, examples }, header.config_hash))
}

/// Manifest CSV with per-shard class counts: rows of (shard, class, count).
pub fn write_manifest(
    path: &Path,
    shards: &[(&str, &ExampleSet)],
    config_hash: &str,
) -> Result<(), WindowError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# config_hash={config_hash}")?;
    writeln!(w, "shard,class,count")?;
    for (name, set) in shards {
        if let Some(p) = class_proportions(&set.examples, set.scheme) {
            for (class, count) in set.scheme.class_names().iter().zip(&p.counts) {
                writeln!(w, "{name},{class},{count}")?;
            }
        } else {
            for class in set.scheme.class_names() {
                writeln!(w, "{name},{class},0")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::FeatureMode;
    use crate::stay::{
        AdmissionType, Ethnicity, Gender, IcuUnit, MeasurementGrid, PatientStay, StaticProfile,
    };
    use proptest::prelude::*;

    /// Textual-rule oracle: scan [entry, window...] for "01" then "10".
    pub(crate) fn oracle_label_4(entry: u8, w: &[u8; 4]) -> u8 {
        let seq = [entry, w[0], w[1], w[2], w[3]];
        if seq.windows(2).any(|p| p == [0, 1]) {
            ONSET
        } else if seq.windows(2).any(|p| p == [1, 0]) {
            WEAN
        } else if w.iter().all(|v| *v == 1) {
            STAY_ON
        } else {
            STAY_OFF
        }
    }

    fn matrix_for(kind: InterventionKind, track: &[u8]) -> FeatureMatrix {
        let schema = FeatureSchema::new(FeatureMode::Raw, kind);
        let v = schema.width();
        let n = track.len();
        let mut data = vec![0.0; n * v];
        for (h, cell) in track.iter().enumerate() {
            data[h * v + schema.state_column()] = *cell as f64;
            // put the hour index in column 0 so feature slices are identifiable
            data[h * v] = h as f64;
        }
        FeatureMatrix { schema, n_hours: n, data }
    }

    #[test]
    fn label_matches_oracle_on_all_patterns() {
        let scheme = LabelScheme::for_kind(InterventionKind::Vent);
        for entry in 0u8..=1 {
            for bits in 0u8..16 {
                let w = [(bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1];
                let got = label_window(entry, &w, scheme).unwrap();
                assert_eq!(got, oracle_label_4(entry, &w), "entry={entry} window={w:?}");
            }
        }
    }

    #[test]
    fn label_examples_from_rules() {
        let scheme = LabelScheme::for_kind(InterventionKind::Vent);
        assert_eq!(label_window(0, &[0, 0, 1, 1], scheme).unwrap(), ONSET);
        assert_eq!(label_window(0, &[0, 0, 0, 0], scheme).unwrap(), STAY_OFF);
        assert_eq!(label_window(0, &[1, 0, 0, 1], scheme).unwrap(), ONSET); // both transitions
        assert_eq!(label_window(1, &[1, 1, 1, 1], scheme).unwrap(), STAY_ON);
        assert_eq!(label_window(0, &[1, 1, 1, 1], scheme).unwrap(), ONSET); // entry-state rise
        assert_eq!(label_window(1, &[0, 0, 0, 0], scheme).unwrap(), WEAN); // entry-state fall

        let bolus = LabelScheme::for_kind(InterventionKind::CrysBol);
        assert_eq!(label_window(0, &[0, 1, 0, 0], bolus).unwrap(), ONSET);
        assert_eq!(label_window(1, &[0, 0, 0, 0], bolus).unwrap(), NO_ONSET);
    }

    #[test]
    fn label_rejects_non_binary() {
        let scheme = LabelScheme::for_kind(InterventionKind::Vent);
        assert!(label_window(0, &[0, 2, 0, 0], scheme).is_err());
        assert!(label_window(3, &[0, 0, 0, 0], scheme).is_err());
    }

    #[test]
    fn slide_counts_match_span_arithmetic() {
        let cfg = WindowConfig::default();
        for (len, expected) in [(16usize, 1usize), (15, 0), (20, 5)] {
            let track = vec![0u8; len];
            let m = matrix_for(InterventionKind::Vent, &track);
            let ex = slide("s", &m, &track, &cfg).unwrap();
            assert_eq!(ex.len(), expected, "stay length {len}");
        }
    }

    #[test]
    fn slide_uses_gap_separated_prediction_window() {
        let cfg = WindowConfig::default();
        // onset transition at hour 12: visible only to the window starting at 0
        let mut track = vec![0u8; 17];
        for cell in track.iter_mut().skip(12) {
            *cell = 1;
        }
        let m = matrix_for(InterventionKind::Vent, &track);
        let ex = slide("s", &m, &track, &cfg).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].window_start, 0);
        assert_eq!(ex[0].label, ONSET);
        // second window: entry state 1 (hour 12), prediction all 1 -> stay on
        assert_eq!(ex[1].label, STAY_ON);
        // feature slice covers hours 0..6 only (column 0 stores hour index)
        let v = m.schema.width();
        assert_eq!(ex[0].features[0], 0.0);
        assert_eq!(ex[0].features[5 * v], 5.0);
        assert_eq!(ex[0].features.len(), 6 * v);
        // no overlap: labeled hours start at lookback + gap
        assert_eq!(ex[1].window_start + cfg.lookback + cfg.gap, 13);
    }

    fn synthetic_cohort(n: usize) -> Vec<PatientStay> {
        use std::collections::BTreeMap;
        (0..n)
            .map(|i| {
                let n_hours = 16 + (i % 5);
                let mut grid = MeasurementGrid::empty(n_hours);
                grid.set_cell(0, 0, i as f64);
                let mut interventions = BTreeMap::new();
                for (k, kind) in InterventionKind::ALL.iter().enumerate() {
                    let mut t = vec![0u8; n_hours];
                    // deterministic pseudo-pattern of experiences
                    if (i * 7 + k * 3) % 4 == 0 {
                        t[8] = 1;
                        t[9] = 1;
                    }
                    interventions.insert(*kind, t);
                }
                PatientStay {
                    stay_id: format!("p{i:04}"),
                    admission_hour: (i % 24) as u8,
                    statics: StaticProfile {
                        gender: if i % 2 == 0 { Gender::Female } else { Gender::Male },
                        age: 40.0 + i as f64 % 40.0,
                        ethnicity: Ethnicity::Other,
                        icu_unit: IcuUnit::Micu,
                        admission_type: AdmissionType::Emergency,
                    },
                    grid,
                    notes: vec![],
                    interventions,
                }
            })
            .collect()
    }

    #[test]
    fn split_100_stays_is_70_10_20() {
        let stays = synthetic_cohort(100);
        let split = split_cohort(&stays, (0.7, 0.1, 0.2), 5).unwrap();
        assert_eq!(split.counts(), [70, 10, 20]);
        assert_eq!(split.assignment.len(), 100);
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let stays = synthetic_cohort(57);
        let a = split_cohort(&stays, (0.7, 0.1, 0.2), 9).unwrap();
        let b = split_cohort(&stays, (0.7, 0.1, 0.2), 9).unwrap();
        assert_eq!(a.assignment, b.assignment);
        let c = split_cohort(&stays, (0.7, 0.1, 0.2), 10).unwrap();
        assert_ne!(a.assignment, c.assignment);
        // every stay in exactly one split
        assert_eq!(a.assignment.len(), stays.len());
        let counts = a.counts();
        assert_eq!(counts.iter().sum::<usize>(), stays.len());
    }

    #[test]
    fn split_rejects_tiny_cohorts_and_bad_ratios() {
        let stays = synthetic_cohort(5);
        assert!(matches!(
            split_cohort(&stays, (0.7, 0.1, 0.2), 0),
            Err(WindowError::TooFewStays { .. })
        ));
        let stays = synthetic_cohort(20);
        assert!(matches!(
            split_cohort(&stays, (0.7, 0.2, 0.2), 0),
            Err(WindowError::BadRatios(_))
        ));
    }

    #[test]
    fn split_stratifies_experience_fractions() {
        let stays = synthetic_cohort(1000);
        let split = split_cohort(&stays, (0.7, 0.1, 0.2), 3).unwrap();
        let strat_warnings: Vec<&String> =
            split.warnings.iter().filter(|w| w.contains("fraction")).collect();
        assert!(strat_warnings.is_empty(), "deviation > 2pp: {strat_warnings:?}");
    }

    #[test]
    fn proportions_sum_to_one() {
        let scheme = LabelScheme::for_kind(InterventionKind::Vent);
        let examples: Vec<Example> = [ONSET, STAY_OFF, STAY_OFF, WEAN]
            .iter()
            .map(|l| Example { stay_id: "s".into(), window_start: 0, label: *l, features: vec![] })
            .collect();
        let p = class_proportions(&examples, scheme).unwrap();
        assert!((p.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.counts, vec![1, 1, 0, 2]);

        let single: Vec<Example> = vec![Example {
            stay_id: "s".into(),
            window_start: 0,
            label: STAY_ON,
            features: vec![],
        }];
        let p = class_proportions(&single, scheme).unwrap();
        assert_eq!(p.fractions[STAY_ON as usize], 1.0);
    }

    #[test]
    fn shard_round_trips() {
        let track = vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0];
        let m = matrix_for(InterventionKind::Vaso, &track);
        let examples = slide("p7", &m, &track, &WindowConfig::default()).unwrap();
        assert!(!examples.is_empty());
        let set = ExampleSet {
            schema: m.schema.clone(),
            scheme: LabelScheme::for_kind(InterventionKind::Vaso),
            lookback: 6,
            examples,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.examples");
        write_shard(&path, &set, "ff00").unwrap();
        let (back, config_hash) = read_shard(&path).unwrap();
        assert_eq!(config_hash, "ff00");
        assert_eq!(back.examples.len(), set.examples.len());
        for (a, b) in set.examples.iter().zip(&back.examples) {
            assert_eq!(a, b);
        }

        let manifest = dir.path().join("manifest.csv");
        write_manifest(&manifest, &[("train", &set)], "ff00").unwrap();
        let text = std::fs::read_to_string(&manifest).unwrap();
        assert!(text.starts_with("# config_hash=ff00\nshard,class,count\n"));
        assert!(text.contains("train,onset,"));
    }

    proptest! {
        // Total example count follows the span formula for every stride.
        #[test]
        fn slide_count_formula(len in 0usize..60, stride in 1usize..4) {
            let cfg = WindowConfig { stride, ..WindowConfig::default() };
            let track = vec![0u8; len];
            if len >= 12 {
                let m = matrix_for(InterventionKind::Vent, &track);
                let got = slide("s", &m, &track, &cfg).unwrap().len();
                let expected = if len < 16 { 0 } else { (len - 16) / stride + 1 };
                prop_assert_eq!(got, expected);
            }
        }

        // label_window equals the oracle for random windows.
        #[test]
        fn label_oracle_property(entry in 0u8..=1, bits in 0u8..16) {
            let w = [(bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1];
            let scheme = LabelScheme::for_kind(InterventionKind::NiVent);
            prop_assert_eq!(label_window(entry, &w, scheme).unwrap(), oracle_label_4(entry, &w));
        }
    }
}
