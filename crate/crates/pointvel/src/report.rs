//! Metrics reports as flat TOML.

use std::path::Path;

use pointvel_core::MetricsReport;

use crate::error::Result;
use crate::files::{read_toml, write_toml};

pub fn write_report(path: &Path, report: &MetricsReport) -> Result<()> {
    write_toml(path, report)
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    read_toml(path)
}
