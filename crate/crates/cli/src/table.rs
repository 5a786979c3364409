//! Summary tables: rows keyed by `(n, h)`, PDR and FDR column groups per
//! gamma policy, one block per structure and `c`.

use std::io::{Read, Write};

use ebic_core::SettingSummary;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// `0.921` → `.921`; values of one or more keep their integer part.
fn decimal(v: f64) -> String {
    if !v.is_finite() {
        return "NA".into();
    }
    let s = format!("{v:.3}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

/// `mean(sd)` with three decimals and no leading zero, e.g. `.921(.159)`.
/// Flagged summaries get a trailing `*`.
pub fn format_cell(mean: f64, sd: f64, flagged: bool) -> String {
    format!("{}({}){}", decimal(mean), decimal(sd), if flagged { "*" } else { "" })
}

fn first_seen<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

struct Block {
    title: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn blocks(summaries: &[SettingSummary]) -> Vec<Block> {
    let labels = first_seen(summaries.iter().map(|s| s.gamma_label.clone()));
    let groups = first_seen(summaries.iter().map(|s| (s.structure, s.c)));
    let mut out = Vec::new();
    for (structure, c) in groups {
        let members: Vec<&SettingSummary> = summaries
            .iter()
            .filter(|s| s.structure == structure && s.c == c)
            .collect();
        let mut header = vec!["structure".to_string(), "c".into(), "n".into(), "h".into()];
        for metric in ["PDR", "FDR"] {
            header.extend(labels.iter().map(|l| format!("{metric} {l}")));
        }
        let keys = first_seen(members.iter().map(|s| (s.n, s.h.to_bits())));
        let rows = keys
            .into_iter()
            .map(|(n, hbits)| {
                let h = f64::from_bits(hbits);
                let mut row = vec![structure.label().to_string(), c.to_string(), n.to_string(), h.to_string()];
                for pdr in [true, false] {
                    for label in &labels {
                        let cell = members
                            .iter()
                            .find(|s| s.n == n && s.h.to_bits() == hbits && &s.gamma_label == label)
                            .map(|s| {
                                if pdr {
                                    format_cell(s.pdr_mean, s.pdr_sd, s.flagged)
                                } else {
                                    format_cell(s.fdr_mean, s.fdr_sd, s.flagged)
                                }
                            })
                            .unwrap_or_default();
                        row.push(cell);
                    }
                }
                row
            })
            .collect();
        out.push(Block {
            title: format!("Structure {}, c = {c}", structure.label()),
            header,
            rows,
        });
    }
    out
}

/// Renders summaries as one CSV document or as markdown with a table per
/// structure and `c`. Both carry the same cells.
pub fn emit_table(summaries: &[SettingSummary], format: TableFormat) -> String {
    let blocks = blocks(summaries);
    match format {
        TableFormat::Csv => {
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
            if let Some(b) = blocks.first() {
                w.write_record(&b.header).expect("in-memory write");
            }
            for row in blocks.iter().flat_map(|b| &b.rows) {
                w.write_record(row).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            for b in &blocks {
                // Structure and c are in the heading; drop them from the columns.
                out.push_str(&format!("### {}\n\n", b.title));
                out.push_str(&format!("| {} |\n", b.header[2..].join(" | ")));
                out.push_str(&format!("|{}\n", "---|".repeat(b.header.len() - 2)));
                for row in &b.rows {
                    out.push_str(&format!("| {} |\n", row[2..].join(" | ")));
                }
                out.push('\n');
            }
            if summaries.iter().any(|s| s.flagged) {
                out.push_str("\\* fewer than two replicates completed or more than 10% failed.\n");
            }
            out
        }
    }
}

pub fn write_summaries<W: Write>(writer: W, summaries: &[SettingSummary]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in summaries {
        w.serialize(s).map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

pub fn read_summaries<R: Read>(reader: R) -> CliResult<Vec<SettingSummary>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e| CliError::Input(e.to_string())))
        .collect()
}
