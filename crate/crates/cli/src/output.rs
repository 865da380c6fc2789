use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{Effective, Format};
use crate::CliError;

/// Files produced by one run, named `<kind>[-<suffix>].<ext>`.
#[derive(Debug)]
pub struct Artifacts {
    kind: &'static str,
    files: Vec<(Format, String, Vec<u8>)>,
    /// One-line summary printed on success.
    pub line: String,
}

impl Artifacts {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            files: Vec::new(),
            line: String::new(),
        }
    }

    fn name(&self, suffix: &str, ext: &str) -> String {
        if suffix.is_empty() {
            format!("{}.{ext}", self.kind)
        } else {
            format!("{}-{suffix}.{ext}", self.kind)
        }
    }

    pub fn csv(&mut self, suffix: &str, bytes: Vec<u8>) {
        let name = self.name(suffix, "csv");
        self.files.push((Format::Csv, name, bytes));
    }

    pub fn svg(&mut self, suffix: &str, text: String) {
        let name = self.name(suffix, "svg");
        self.files.push((Format::Svg, name, text.into_bytes()));
    }

    pub fn json(&mut self, value: Value) {
        let mut text = serde_json::to_string_pretty(&value).expect("json values serialize");
        text.push('\n');
        let name = self.name("", "json");
        self.files.push((Format::Json, name, text.into_bytes()));
    }

    /// Writes the requested formats into the output directory.
    pub fn write(&self, eff: &Effective) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&eff.out_dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", eff.out_dir.display())))?;
        let mut written = Vec::new();
        for (format, name, bytes) in &self.files {
            if eff.wants(*format) {
                let path = eff.out_dir.join(name);
                write_atomic(&path, bytes)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// Temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let err = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(err)?;
    }
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
