//! Result files. Every file carries the schema version and model digest:
//! CSV and text as leading `#` lines, JSON as top-level fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::Value;

use super::{Command, SCHEMA_VERSION};
use crate::error::{Error, Result};

pub(super) struct Header {
    pub model_digest: String,
    command: Command,
    seed: u64,
    /// Unix seconds at startup; `None` under --deterministic.
    generated: Option<u64>,
}

impl Header {
    pub fn new(model_digest: String, command: Command, seed: u64, deterministic: bool) -> Self {
        let generated =
            if deterministic { None } else { SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs()) };
        Self { model_digest, command, seed, generated }
    }

    fn comment_lines(&self) -> String {
        let mut s = format!(
            "# schema_version={SCHEMA_VERSION}\n# model_digest={}\n# command={}\n# seed={}\n",
            self.model_digest,
            self.command.name(),
            self.seed
        );
        if let Some(t) = self.generated {
            s.push_str(&format!("# generated_unix={t}\n"));
        }
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub(super) struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn write_record<I, S>(&mut self, record: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(record).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub(super) fn write_csv(path: &Path, header: &Header, columns: &[&str]) -> Result<CsvOut> {
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(header.comment_lines().as_bytes())?;
    let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    inner.write_record(columns).map_err(csv_err)?;
    Ok(CsvOut { inner })
}

pub(super) fn write_text(path: &Path, header: &Header, body: &str) -> Result<()> {
    std::fs::write(path, format!("{}{body}", header.comment_lines()))?;
    Ok(())
}

/// Writes `body` (an object) with `schema_version`, `model_digest`,
/// `command` and `seed` merged in front.
pub(super) fn write_json(path: &Path, header: &Header, body: Value) -> Result<()> {
    let mut obj = serde_json::Map::new();
    obj.insert("schema_version".into(), SCHEMA_VERSION.into());
    obj.insert("model_digest".into(), header.model_digest.clone().into());
    obj.insert("command".into(), header.command.name().into());
    obj.insert("seed".into(), header.seed.into());
    if let Some(t) = header.generated {
        obj.insert("generated_unix".into(), t.into());
    }
    if let Value::Object(m) = body {
        obj.extend(m);
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(|e| Error::Io(e.into()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
