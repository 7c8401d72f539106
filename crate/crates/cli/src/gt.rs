//! `gt-v1`: ground-truth boundary indices per trajectory id.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const GT_SCHEMA: &str = "gt-v1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub rows: Vec<(String, Vec<usize>)>,
}

impl GroundTruth {
    pub fn to_map(&self) -> HashMap<String, Vec<usize>> {
        self.rows.iter().cloned().collect()
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "# {GT_SCHEMA}")?;
        let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Necessary).from_writer(out);
        w.write_record(["id", "boundaries"])?;
        for (id, b) in &self.rows {
            let joined = b.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
            w.write_record([id.as_str(), joined.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.write(std::io::BufWriter::new(file))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.splitn(2, '\n');
        let first = lines.next().unwrap_or("").trim_end_matches('\r');
        if first.trim() != format!("# {GT_SCHEMA}") {
            bail!("schema: expected first line `# {GT_SCHEMA}`, found `{first}`");
        }
        let body = lines.next().unwrap_or("");
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["id", "boundaries"] {
            bail!("schema: expected header `id,boundaries`");
        }
        let mut rows = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n + 3;
            let rec = rec.with_context(|| format!("line {line}"))?;
            if rec.len() != 2 {
                bail!("line {line}: expected 2 fields, found {}", rec.len());
            }
            let id = rec[0].to_string();
            if !seen.insert(id.clone()) {
                bail!("line {line}: duplicate id `{id}`");
            }
            let field = rec[1].trim();
            let b: Vec<usize> = if field.is_empty() {
                Vec::new()
            } else {
                field
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().with_context(|| format!("line {line}: bad boundary index `{s}`")))
                    .collect::<Result<_>>()?
            };
            if b.windows(2).any(|w| w[1] <= w[0]) {
                bail!("line {line}: boundaries of `{id}` not strictly increasing");
            }
            rows.push((id, b));
        }
        Ok(Self { rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}
