//! Result files: CSV/JSON sweep records and static SVG figures.

pub mod plots;
pub mod records;

pub use plots::{emit_plot, write_plots, PlotKind};
pub use records::{read_csv_records, read_json_records, write_records, Format, RecordRow, RecordsFile, RunMetadata};

use std::path::Path;

use crate::{Error, Result};

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
