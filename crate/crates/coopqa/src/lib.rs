//! File formats, persistence, analysis and simulation drivers, and the live
//! game service built on `coopqa-core`.

pub mod analyze;
pub mod eventlog;
pub mod io;
pub mod logstore;
pub mod service;
pub mod simulate;
