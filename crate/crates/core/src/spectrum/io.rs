//! Text formats for spectra.
//!
//! * structured: `# key = value` metadata, then tab-separated
//!   `j n l m lambda energy`, one row per state;
//! * plain: comma-separated `j,n,l,lambda,energy`, one row per state;
//! * shells: comma-separated `n,l,g,lambda,energy`, one row per shell.
//!
//! Missing energies are written as `nan`. Readers accept spectra whose sum
//! is within [`NORMALIZATION_TOLERANCE`](super::NORMALIZATION_TOLERANCE) of
//! one without touching the stored digits, and rescale anything else.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sympoly::{fmt_f64, parse_f64};

use super::{Provenance, SchmidtSpectrum, Shell, Truncation};

const STRUCTURED_TAG: &str = "coboson-spectrum/1";
const SHELLS_TAG: &str = "coboson-shells/1";
const STRUCTURED_HEADER: &str = "j\tn\tl\tm\tlambda\tenergy";
const PLAIN_HEADER: &str = "j,n,l,lambda,energy";
const SHELLS_HEADER: &str = "n,l,g,lambda,energy";

fn energy_text(e: Option<f64>) -> String {
    e.map(fmt_f64).unwrap_or_else(|| "nan".into())
}

fn write_metadata<W: Write>(s: &SchmidtSpectrum, tag: &str, w: &mut W) -> Result<()> {
    writeln!(w, "# format = {tag}")?;
    writeln!(w, "# provenance = {}", s.provenance().source)?;
    for (k, v) in &s.provenance().details {
        writeln!(w, "# provenance.{k} = {v}")?;
    }
    writeln!(w, "# sum_lambda = {}", fmt_f64(s.total_weight()))?;
    writeln!(w, "# discarded_weight = {}", fmt_f64(s.truncation().discarded_weight))?;
    writeln!(w, "# renormalization = {}", fmt_f64(s.truncation().renormalization))?;
    writeln!(w, "# fingerprint = {}", s.fingerprint())?;
    Ok(())
}

pub fn write_structured<W: Write>(s: &SchmidtSpectrum, mut w: W) -> Result<()> {
    write_metadata(s, STRUCTURED_TAG, &mut w)?;
    writeln!(w, "{STRUCTURED_HEADER}")?;
    for (j, st) in s.states().iter().enumerate() {
        let sh = &s.shells()[st.shell];
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            j + 1,
            sh.n,
            sh.l,
            st.m,
            fmt_f64(sh.lambda),
            energy_text(sh.energy)
        )?;
    }
    Ok(())
}

pub fn write_plain<W: Write>(s: &SchmidtSpectrum, mut w: W) -> Result<()> {
    writeln!(w, "{PLAIN_HEADER}")?;
    for (j, st) in s.states().iter().enumerate() {
        let sh = &s.shells()[st.shell];
        writeln!(w, "{},{},{},{},{}", j + 1, sh.n, sh.l, fmt_f64(sh.lambda), energy_text(sh.energy))?;
    }
    Ok(())
}

pub fn write_shells<W: Write>(s: &SchmidtSpectrum, mut w: W) -> Result<()> {
    write_metadata(s, SHELLS_TAG, &mut w)?;
    writeln!(w, "{SHELLS_HEADER}")?;
    for sh in s.shells() {
        writeln!(
            w,
            "{},{},{},{},{}",
            sh.n,
            sh.l,
            sh.degeneracy(),
            fmt_f64(sh.lambda),
            energy_text(sh.energy)
        )?;
    }
    Ok(())
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Metadata {
    provenance: Provenance,
    truncation: Truncation,
}

impl Metadata {
    fn absorb(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let num = || parse_f64(value).ok_or_else(|| perr(line, format!("bad number for {key}")));
        match key {
            "provenance" => self.provenance.source = value.to_string(),
            "discarded_weight" => self.truncation.discarded_weight = num()?,
            "renormalization" => self.truncation.renormalization = num()?,
            k => {
                if let Some(sub) = k.strip_prefix("provenance.") {
                    self.provenance.details.push((sub.to_string(), value.to_string()));
                }
            }
        }
        Ok(())
    }
}

struct Row {
    line: usize,
    n: u32,
    l: u32,
    m: Option<i32>,
    lambda: f64,
    energy: Option<f64>,
}

fn parse_energy(s: &str) -> Option<Option<f64>> {
    let v = parse_f64(s)?;
    Some(if v.is_nan() { None } else { Some(v) })
}

fn field<T: std::str::FromStr>(cols: &[&str], i: usize, line: usize, name: &str) -> Result<T> {
    cols.get(i)
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| perr(line, format!("bad {name}")))
}

/// Groups per-state rows into shells, checking `m = -l..l` when present.
fn rows_to_shells(rows: Vec<Row>) -> Result<Vec<Shell>> {
    let mut shells = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let first = &rows[i];
        let g = 2 * first.l as usize + 1;
        if i + g > rows.len() {
            return Err(perr(first.line, format!("shell (n={}, l={}) is incomplete", first.n, first.l)));
        }
        for (k, r) in rows[i..i + g].iter().enumerate() {
            if r.n != first.n || r.l != first.l {
                return Err(perr(r.line, format!("shell (n={}, l={}) is incomplete", first.n, first.l)));
            }
            if r.lambda.to_bits() != first.lambda.to_bits() {
                return Err(perr(r.line, "coefficient differs within a shell"));
            }
            if let Some(m) = r.m {
                if m != k as i32 - first.l as i32 {
                    return Err(perr(r.line, "magnetic numbers must run from -l to l"));
                }
            }
        }
        shells.push(Shell {
            n: first.n,
            l: first.l,
            lambda: first.lambda,
            energy: first.energy,
        });
        i += g;
    }
    Ok(shells)
}

/// Reads any of the three formats, detected from the first non-comment line.
pub fn read_any<R: BufRead>(r: R) -> Result<SchmidtSpectrum> {
    let mut meta = Metadata::default();
    let mut header: Option<String> = None;
    let mut rows = Vec::new();
    let mut shells = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.absorb(k.trim(), v.trim(), lineno)?;
            }
            continue;
        }
        let Some(h) = header.as_deref() else {
            if t != STRUCTURED_HEADER && t != PLAIN_HEADER && t != SHELLS_HEADER {
                return Err(perr(lineno, format!("unrecognized header {t:?}")));
            }
            header = Some(t.to_string());
            continue;
        };
        match h {
            STRUCTURED_HEADER => {
                let c: Vec<&str> = t.split('\t').collect();
                if c.len() != 6 {
                    return Err(perr(lineno, "expected 6 tab-separated columns"));
                }
                let j: usize = field(&c, 0, lineno, "j")?;
                if j != rows.len() + 1 {
                    return Err(perr(lineno, "j must count up from 1"));
                }
                rows.push(Row {
                    line: lineno,
                    n: field(&c, 1, lineno, "n")?,
                    l: field(&c, 2, lineno, "l")?,
                    m: Some(field(&c, 3, lineno, "m")?),
                    lambda: parse_f64(c[4]).ok_or_else(|| perr(lineno, "bad lambda"))?,
                    energy: parse_energy(c[5]).ok_or_else(|| perr(lineno, "bad energy"))?,
                });
            }
            PLAIN_HEADER => {
                let c: Vec<&str> = t.split(',').collect();
                if c.len() != 5 {
                    return Err(perr(lineno, "expected 5 comma-separated columns"));
                }
                let j: usize = field(&c, 0, lineno, "j")?;
                if j != rows.len() + 1 {
                    return Err(perr(lineno, "j must count up from 1"));
                }
                rows.push(Row {
                    line: lineno,
                    n: field(&c, 1, lineno, "n")?,
                    l: field(&c, 2, lineno, "l")?,
                    m: None,
                    lambda: parse_f64(c[3]).ok_or_else(|| perr(lineno, "bad lambda"))?,
                    energy: parse_energy(c[4]).ok_or_else(|| perr(lineno, "bad energy"))?,
                });
            }
            _ => {
                let c: Vec<&str> = t.split(',').collect();
                if c.len() != 5 {
                    return Err(perr(lineno, "expected 5 comma-separated columns"));
                }
                let l: u32 = field(&c, 1, lineno, "l")?;
                let g: usize = field(&c, 2, lineno, "g")?;
                if g != 2 * l as usize + 1 {
                    return Err(perr(lineno, format!("degeneracy {g} does not equal 2l+1 for l={l}")));
                }
                shells.push(Shell {
                    n: field(&c, 0, lineno, "n")?,
                    l,
                    lambda: parse_f64(c[3]).ok_or_else(|| perr(lineno, "bad lambda"))?,
                    energy: parse_energy(c[4]).ok_or_else(|| perr(lineno, "bad energy"))?,
                });
            }
        }
    }
    if header.is_none() {
        return Err(perr(0, "no header line"));
    }
    if !rows.is_empty() {
        shells = rows_to_shells(rows)?;
    }
    if shells.is_empty() {
        return Err(perr(0, "no coefficients"));
    }
    if meta.provenance.source.is_empty() {
        meta.provenance.source = "file".into();
    }
    SchmidtSpectrum::restore(shells, meta.truncation, meta.provenance)
}

pub fn read_structured<R: BufRead>(r: R) -> Result<SchmidtSpectrum> {
    read_any(r)
}

pub fn read_plain<R: BufRead>(r: R) -> Result<SchmidtSpectrum> {
    read_any(r)
}

pub fn read_shells<R: BufRead>(r: R) -> Result<SchmidtSpectrum> {
    read_any(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{synth_spectrum, SynthKind};

    fn sample() -> SchmidtSpectrum {
        SchmidtSpectrum::from_shells(
            vec![
                Shell { n: 0, l: 0, lambda: 0.4, energy: Some(1.5) },
                Shell { n: 0, l: 1, lambda: 0.1, energy: Some(2.5) },
                Shell { n: 1, l: 0, lambda: 0.3, energy: Some(3.5) },
            ],
            Truncation { discarded_weight: 1e-11, renormalization: 1.0 },
            Provenance::new("test").with("a", 0.25),
        )
        .unwrap()
    }

    fn roundtrip(write: fn(&SchmidtSpectrum, &mut Vec<u8>) -> Result<()>, s: &SchmidtSpectrum) -> SchmidtSpectrum {
        let mut buf = Vec::new();
        write(s, &mut buf).unwrap();
        read_any(&buf[..]).unwrap()
    }

    #[test]
    fn all_formats_roundtrip() {
        let s = sample();
        for f in [
            |s: &SchmidtSpectrum, b: &mut Vec<u8>| write_structured(s, b),
            |s: &SchmidtSpectrum, b: &mut Vec<u8>| write_plain(s, b),
            |s: &SchmidtSpectrum, b: &mut Vec<u8>| write_shells(s, b),
        ] {
            let back = roundtrip(f, &s);
            assert_eq!(back.weights(), s.weights());
            assert_eq!(back.shells(), s.shells());
            assert_eq!(back.fingerprint(), s.fingerprint());
        }
        let back = roundtrip(|s, b| write_structured(s, b), &s);
        assert_eq!(back.provenance().get("a"), Some("0.25"));
        assert_eq!(back.truncation().discarded_weight, 1e-11);
    }

    #[test]
    fn synthetic_energy_is_nan() {
        let s = synth_spectrum(&SynthKind::Custom { weights: vec![5.0, 3.0, 2.0] }).unwrap();
        let mut buf = Vec::new();
        write_plain(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,n,l,lambda,energy\n1,0,0,5.0000000000000000e-1,nan"));
        let back = read_any(text.as_bytes()).unwrap();
        assert_eq!(back.weights(), s.weights());
        assert!(!back.has_energies());
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_any("j,n,l,lambda,energy\n1,0,1,0.5,nan\n".as_bytes()).is_err());
        assert!(read_any("bogus\n".as_bytes()).is_err());
        assert!(read_any("n,l,g,lambda,energy\n0,1,2,0.5,1\n".as_bytes()).is_err());
        let bad_m = "j\tn\tl\tm\tlambda\tenergy\n1\t0\t1\t0\t0.3\t1\n2\t0\t1\t-1\t0.3\t1\n3\t0\t1\t1\t0.3\t1\n";
        assert!(read_any(bad_m.as_bytes()).is_err());
    }

    #[test]
    fn unnormalized_file_rescaled() {
        let s = read_any("j,n,l,lambda,energy\n1,0,0,2,nan\n2,1,0,2,nan\n".as_bytes()).unwrap();
        assert_eq!(s.weights(), &[0.5, 0.5]);
    }
}
