//! On-disk formats of the `dfw` tool.

pub mod files;
