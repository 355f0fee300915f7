use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// `# key = value` lines opening every output. Nothing time-dependent goes
/// in here, so identical inputs give identical files.
#[derive(Debug, Clone)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str) -> Self {
        let mut h = Header { entries: Vec::new() };
        h.set("tool", concat!("coboson ", env!("CARGO_PKG_VERSION")));
        h.set("command", command);
        h
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k} = {v}")?;
        }
        Ok(())
    }
}

/// Comma-separated rows under a fixed column list.
#[derive(Debug, Clone, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }
}

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // no negative zero
        format!("{:.16e}", x + 0.0)
    }
}

/// Where a command's primary output goes.
#[derive(Debug, Clone)]
pub enum Target {
    Stdout,
    File(PathBuf),
}

impl Target {
    pub fn from_arg(path: Option<&Path>) -> Self {
        match path {
            Some(p) if p != Path::new("-") => Target::File(p.to_path_buf()),
            _ => Target::Stdout,
        }
    }

    /// Opens the target, refusing to replace an existing file unless forced.
    pub fn open(&self, force: bool) -> Result<Box<dyn Write>, CliError> {
        match self {
            Target::Stdout => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
            Target::File(p) => create_file(p, force).map(|f| Box::new(f) as Box<dyn Write>),
        }
    }
}

pub fn create_file(path: &Path, force: bool) -> Result<BufWriter<File>, CliError> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn emit(target: &Target, force: bool, header: &Header, table: &Table) -> Result<(), CliError> {
    let mut w = target.open(force)?;
    header.write(&mut w)?;
    table.write(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_replaces_existing_keys() {
        let mut h = Header::new("chi");
        h.set("k", 3).set("k", 4);
        let mut out = Vec::new();
        h.write(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("# command = chi\n"));
        assert!(text.contains("# k = 4\n"));
        assert!(!text.contains("# k = 3"));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn refuses_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "keep").unwrap();
        assert!(matches!(create_file(&p, false), Err(CliError::Usage(_))));
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "keep");
        assert!(create_file(&p, true).is_ok());
    }
}
