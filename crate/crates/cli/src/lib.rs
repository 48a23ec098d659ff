//! Command-line front end for `friable-core`.

pub mod app;
pub mod grid;
pub mod scan;
pub mod table;
pub mod verify;
