//! ICU intervention prediction toolkit.
//!
//! Turns hourly ICU stay records (vitals/labs, clinical note topics, static
//! demographics) into sliding-window classification examples, trains LSTM,
//! CNN and logistic-regression classifiers with a hand-derived-gradient
//! numeric core, evaluates them with per-class and macro AUC, and probes
//! trained models with feature occlusion, extreme-trajectory selection and
//! activation maximization. A synthetic cohort generator with planted,
//! documented signal makes the whole pipeline verifiable end to end.

pub mod cohort;
pub mod featurize;
pub mod nn;
pub mod seeding;
pub mod stay;
pub mod topics;
pub mod windowing;
