//! Rule-driven layout synthesis: unidirectional metal and via generation,
//! independent rule checking, GDSII I/O, and the feature extraction and
//! learning pieces used to evaluate hotspot detectors on generated clips.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod drc;
pub mod experiment;
pub mod faults;
pub mod features;
pub mod gdsii;
pub mod geom;
pub mod jsonl;
pub mod learning;
pub mod metal;
pub mod rng;
pub mod via;
