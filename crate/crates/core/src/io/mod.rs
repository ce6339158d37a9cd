//! File formats: label maps, manifests and reports.

mod labelmap;
mod manifest;
mod report;

pub use labelmap::{
    decode_pgm, decode_text, encode_pgm, encode_text, read_label_map, write_label_map, LabelFormat,
};
pub use manifest::{read_manifest, Manifest, ManifestEntry, MANIFEST_HEADER};
pub use report::{
    format_float, render_report, write_report, ReportData, ReportFormat, SampleReport, SAMPLE_COLUMNS,
    SWEEP_COLUMNS,
};
