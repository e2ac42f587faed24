//! File formats, dataset plumbing and the analysis driver around
//! [`protgeom_core`].

pub mod commands;
pub mod config;
pub mod manifest;
pub mod npy;
pub mod pdb;
pub mod pipeline;
pub mod report;

pub use protgeom_core as core;
