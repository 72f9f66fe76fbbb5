//! CSV output. Header rows are frozen; tools downstream parse them by name.

use std::io::Write;

use crate::analysis::ScalingRow;
use crate::error::{Error, Result};
use crate::pipeline::CompressionReport;

pub const REPORT_HEADER: [&str; 22] = [
    "dataset",
    "original_bytes",
    "variant",
    "backend",
    "mode",
    "token_count",
    "varint_bytes",
    "compressed_bytes",
    "metadata_bytes",
    "header_bytes",
    "total_bytes",
    "ratio_percent",
    "tokenize_s",
    "reorder_s",
    "varint_s",
    "backend_s",
    "total_s",
    "hist_1",
    "hist_2",
    "hist_3",
    "hist_4",
    "hist_5",
];

pub const ABLATION_HEADER: [&str; 9] = [
    "dataset",
    "backend",
    "mode",
    "raw",
    "tokenized_only",
    "reordered",
    "tokenization_gain_pp",
    "reordering_gain_pp",
    "total_gain_pp",
];

pub const ANALYSIS_HEADER: [&str; 4] = ["dataset", "section", "metric", "value"];

pub const SCALING_HEADER: [&str; 6] = [
    "dataset",
    "size",
    "backend",
    "raw_ratio",
    "ours_ratio",
    "improvement_pp",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

pub fn report_record(dataset: &str, r: &CompressionReport) -> Vec<String> {
    let t = &r.timings;
    let mut row = vec![
        dataset.to_string(),
        r.original_bytes.to_string(),
        r.variant.name().to_string(),
        r.backend.clone(),
        r.mode.name().to_string(),
        r.token_count.to_string(),
        r.varint_bytes.to_string(),
        r.compressed_bytes.to_string(),
        r.metadata_bytes.to_string(),
        r.header_bytes.to_string(),
        r.total_bytes().to_string(),
        format!("{:.4}", r.ratio_percent()),
    ];
    row.extend([t.tokenize, t.reorder, t.varint, t.backend, t.total()].map(|s| format!("{s:.6}")));
    row.extend(r.histogram.iter().map(u64::to_string));
    row
}

/// Writes a header row, then one row per call.
pub struct CsvTable<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvTable<W> {
    pub fn new(out: W, header: &[&str]) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(header).map_err(csv_err)?;
        Ok(CsvTable { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(csv_err)
    }

    pub fn report(&mut self, dataset: &str, r: &CompressionReport) -> Result<()> {
        self.row(report_record(dataset, r))
    }

    pub fn scaling(&mut self, dataset: &str, r: &ScalingRow) -> Result<()> {
        self.row([
            dataset.to_string(),
            r.size.to_string(),
            r.backend.clone(),
            format!("{:.4}", r.raw_ratio),
            format!("{:.4}", r.ours_ratio),
            format!("{:.4}", r.improvement_pp()),
        ])
    }

    /// One backend's row of the raw / tokenized-only / reordered comparison.
    pub fn ablation(
        &mut self,
        dataset: &str,
        raw: &CompressionReport,
        tokenized: &CompressionReport,
        reordered: &CompressionReport,
    ) -> Result<()> {
        let (r, t, o) = (raw.ratio_percent(), tokenized.ratio_percent(), reordered.ratio_percent());
        self.row([
            dataset.to_string(),
            raw.backend.clone(),
            reordered.mode.name().to_string(),
            format!("{r:.4}"),
            format!("{t:.4}"),
            format!("{o:.4}"),
            format!("{:.4}", r - t),
            format!("{:.4}", t - o),
            format!("{:.4}", r - o),
        ])
    }

    pub fn metric(&mut self, dataset: &str, section: &str, metric: &str, value: f64) -> Result<()> {
        self.row([dataset, section, metric, &format!("{value:.6}")])
    }

    pub fn finish(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}
