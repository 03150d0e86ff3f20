//! Canonical in-memory representation of an ICU stay.
//!
//! A stay is an hourly measurement grid over a fixed catalog of 29 vitals and
//! labs, a static demographic profile, timestamped tokenized notes, and one
//! binary per-hour track per intervention kind. Stays are immutable after
//! construction and safe to share read-only across parallel workers.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Inclusive bounds on stay length, in hours.
pub const MIN_STAY_HOURS: usize = 12;
pub const MAX_STAY_HOURS: usize = 240;

/// Number of time-varying vitals and labs.
pub const N_VARIABLES: usize = 29;

#[derive(Debug, Clone, Copy)]
pub struct VariableDef {
    /// Canonical snake_case column name.
    pub name: &'static str,
    /// Bedside vital sign (true) vs laboratory value (false).
    pub vital: bool,
}

/// The fixed catalog of time-varying variables, in canonical column order.
pub const VARIABLES: [VariableDef; N_VARIABLES] = [
    VariableDef { name: "anion_gap", vital: false },
    VariableDef { name: "bicarbonate", vital: false },
    VariableDef { name: "blood_ph", vital: false },
    VariableDef { name: "blood_urea_nitrogen", vital: false },
    VariableDef { name: "chloride", vital: false },
    VariableDef { name: "creatinine", vital: false },
    VariableDef { name: "diastolic_blood_pressure", vital: true },
    VariableDef { name: "fraction_inspired_oxygen", vital: true },
    VariableDef { name: "gcs_total", vital: true },
    VariableDef { name: "glucose", vital: false },
    VariableDef { name: "heart_rate", vital: true },
    VariableDef { name: "hematocrit", vital: false },
    VariableDef { name: "hemoglobin", vital: false },
    VariableDef { name: "inr", vital: false },
    VariableDef { name: "lactate", vital: false },
    VariableDef { name: "magnesium", vital: false },
    VariableDef { name: "mean_blood_pressure", vital: true },
    VariableDef { name: "oxygen_saturation", vital: true },
    VariableDef { name: "partial_thromboplastin_time", vital: false },
    VariableDef { name: "phosphate", vital: false },
    VariableDef { name: "platelets", vital: false },
    VariableDef { name: "potassium", vital: false },
    VariableDef { name: "prothrombin_time", vital: false },
    VariableDef { name: "respiratory_rate", vital: true },
    VariableDef { name: "sodium", vital: false },
    VariableDef { name: "systolic_blood_pressure", vital: true },
    VariableDef { name: "temperature", vital: true },
    VariableDef { name: "weight", vital: true },
    VariableDef { name: "white_blood_cell_count", vital: false },
];

/// Index of a variable in the canonical catalog, or None for unknown names.
pub fn variable_index(name: &str) -> Option<usize> {
    VARIABLES.iter().position(|v| v.name == name)
}

#[derive(Debug, Error)]
pub enum StayError {
    #[error("unknown variable '{0}' (not in the 29-variable catalog)")]
    UnknownVariable(String),
    #[error("negative event time {minutes} min for '{variable}'")]
    NegativeTime { variable: String, minutes: i64 },
    #[error("event for '{variable}' at {minutes} min rounds to hour {hour}, beyond stay end ({n_hours} h)")]
    EventBeyondStay { variable: String, minutes: i64, hour: usize, n_hours: usize },
    #[error("stay '{stay_id}' failed validation: {summary}")]
    InvalidStay { stay_id: String, summary: String },
}

// ---------------------------------------------------------------------------
// Static demographics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ethnicity {
    White,
    #[serde(rename = "Black/African American")]
    Black,
    #[serde(rename = "Hispanic/Latino")]
    Hispanic,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IcuUnit {
    Ccu,
    Csru,
    Micu,
    Sicu,
    Tsicu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissionType {
    Elective,
    Urgent,
    Emergency,
}

/// The five static variables, replicated across all timesteps at featurization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticProfile {
    pub gender: Gender,
    /// Age in years.
    pub age: f64,
    pub ethnicity: Ethnicity,
    pub icu_unit: IcuUnit,
    pub admission_type: AdmissionType,
}

// ---------------------------------------------------------------------------
// Intervention kinds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterventionKind {
    /// Invasive mechanical ventilation.
    Vent,
    /// Non-invasive ventilation.
    NiVent,
    /// Vasopressors.
    Vaso,
    /// Colloid bolus.
    ColBol,
    /// Crystalloid bolus.
    CrysBol,
}

impl InterventionKind {
    pub const ALL: [InterventionKind; 5] = [
        InterventionKind::Vent,
        InterventionKind::NiVent,
        InterventionKind::Vaso,
        InterventionKind::ColBol,
        InterventionKind::CrysBol,
    ];

    /// Boluses are instantaneous administrations; the other kinds run for
    /// on-going durations and support wean / stay-on / stay-off outcomes.
    pub fn has_duration(self) -> bool {
        !matches!(self, InterventionKind::ColBol | InterventionKind::CrysBol)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InterventionKind::Vent => "vent",
            InterventionKind::NiVent => "nivent",
            InterventionKind::Vaso => "vaso",
            InterventionKind::ColBol => "colbol",
            InterventionKind::CrysBol => "crysbol",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.as_str() == s)
    }
}

impl std::fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// Measurement grid
// ---------------------------------------------------------------------------

/// Hours x 29 grid of optional measurements. Absence is an explicit `None`,
/// never a sentinel number.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGrid {
    n_hours: usize,
    /// Column-major: `values[variable][hour]`.
    values: Vec<Vec<Option<f64>>>,
}

impl MeasurementGrid {
    pub fn empty(n_hours: usize) -> Self {
        MeasurementGrid { n_hours, values: vec![vec![None; n_hours]; N_VARIABLES] }
    }

    pub fn n_hours(&self) -> usize {
        self.n_hours
    }

    pub fn cell(&self, variable: usize, hour: usize) -> Option<f64> {
        self.values[variable][hour]
    }

    pub fn set_cell(&mut self, variable: usize, hour: usize, value: f64) {
        self.values[variable][hour] = Some(value);
    }

    pub fn clear_cell(&mut self, variable: usize, hour: usize) {
        self.values[variable][hour] = None;
    }

    /// One column of the grid, indexed by hour.
    pub fn column(&self, variable: usize) -> &[Option<f64>] {
        &self.values[variable]
    }

    pub fn columns(&self) -> impl Iterator<Item = (usize, &[Option<f64>])> {
        self.values.iter().enumerate().map(|(i, c)| (i, c.as_slice()))
    }
}

/// One timestamped measurement event, relative to ICU admission.
#[derive(Debug, Clone)]
pub struct RawEvent {
    /// Minutes since admission.
    pub minutes: i64,
    pub variable: String,
    pub value: f64,
}

/// Round-half-up on minutes: minute 30 rounds to the next hour.
fn minutes_to_hour(minutes: i64) -> usize {
    ((minutes + 30) / 60) as usize
}

/// Bin events to the nearest hour and average duplicates within an hour.
///
/// Each cell becomes the arithmetic mean of the events rounding to that hour;
/// cells with no events stay absent. Bit-exact permutation invariance in the
/// event list: each cell's values are summed in sorted order.
pub fn ingest_events(events: &[RawEvent], n_hours: usize) -> Result<MeasurementGrid, StayError> {
    let mut cells: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n_hours]; N_VARIABLES];
    for ev in events {
        let var = variable_index(&ev.variable)
            .ok_or_else(|| StayError::UnknownVariable(ev.variable.clone()))?;
        if ev.minutes < 0 {
            return Err(StayError::NegativeTime { variable: ev.variable.clone(), minutes: ev.minutes });
        }
        let hour = minutes_to_hour(ev.minutes);
        if hour >= n_hours {
            return Err(StayError::EventBeyondStay {
                variable: ev.variable.clone(),
                minutes: ev.minutes,
                hour,
                n_hours,
            });
        }
        cells[var][hour].push(ev.value);
    }
    let mut grid = MeasurementGrid::empty(n_hours);
    for (var, col) in cells.into_iter().enumerate() {
        for (hour, mut values) in col.into_iter().enumerate() {
            if !values.is_empty() {
                values.sort_by(f64::total_cmp);
                let sum: f64 = values.iter().sum();
                grid.set_cell(var, hour, sum / values.len() as f64);
            }
        }
    }
    Ok(grid)
}

// ---------------------------------------------------------------------------
// Patient stay
// ---------------------------------------------------------------------------

/// One tokenized clinical note with the stay-relative hour it was recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub hour: usize,
    /// Token -> count. Sub-hour duplicate notes keep input order.
    pub tokens: BTreeMap<String, u32>,
}

/// One ICU stay: the unit of cohort membership (first ICU stay per patient).
#[derive(Debug, Clone, PartialEq)]
pub struct PatientStay {
    pub stay_id: String,
    /// Wall-clock hour of admission (0..=23); anchors the time-of-day feature.
    pub admission_hour: u8,
    pub statics: StaticProfile,
    pub grid: MeasurementGrid,
    pub notes: Vec<Note>,
    /// Per-hour binary track per intervention kind; length = stay hours.
    pub interventions: BTreeMap<InterventionKind, Vec<u8>>,
}

impl PatientStay {
    pub fn n_hours(&self) -> usize {
        self.grid.n_hours()
    }

    pub fn track(&self, kind: InterventionKind) -> Option<&[u8]> {
        self.interventions.get(&kind).map(|t| t.as_slice())
    }
}

/// One invariant violation found by [`validate_stay`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Check every stay invariant; an empty list means the stay conforms.
pub fn validate_stay(stay: &PatientStay) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = stay.n_hours();
    if n < MIN_STAY_HOURS {
        out.push(Violation { field: "grid".into(), rule: format!("length {n} < {MIN_STAY_HOURS}") });
    }
    if n > MAX_STAY_HOURS {
        out.push(Violation { field: "grid".into(), rule: format!("length {n} > {MAX_STAY_HOURS}") });
    }
    if stay.admission_hour > 23 {
        out.push(Violation {
            field: "admission_hour".into(),
            rule: format!("{} outside 0..=23", stay.admission_hour),
        });
    }
    if !stay.statics.age.is_finite() || stay.statics.age < 0.0 {
        out.push(Violation { field: "statics.age".into(), rule: format!("{} not a nonnegative real", stay.statics.age) });
    }
    for (var, col) in stay.grid.columns() {
        for (hour, v) in col.iter().enumerate() {
            if let Some(x) = v {
                if !x.is_finite() {
                    out.push(Violation {
                        field: format!("grid.{}", VARIABLES[var].name),
                        rule: format!("non-finite value at hour {hour}"),
                    });
                }
            }
        }
    }
    for (i, note) in stay.notes.iter().enumerate() {
        if note.hour >= n {
            out.push(Violation {
                field: format!("notes[{i}]"),
                rule: format!("note hour {} >= stay length {n}", note.hour),
            });
        }
        if note.tokens.is_empty() {
            out.push(Violation { field: format!("notes[{i}]"), rule: "empty token map".into() });
        }
    }
    for (kind, track) in &stay.interventions {
        if track.len() != n {
            out.push(Violation {
                field: format!("interventions.{kind}"),
                rule: format!("track length mismatch: {} != stay length {n}", track.len()),
            });
        }
        if let Some(bad) = track.iter().position(|v| *v > 1) {
            out.push(Violation {
                field: format!("interventions.{kind}"),
                rule: format!("non-binary value {} at hour {bad}", track[bad]),
            });
        }
    }
    out
}
