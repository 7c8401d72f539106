//! Line-oriented `key value...` documents used for model persistence.
//!
//! Floats are written with 17 significant digits so they parse back to the
//! same bits.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Default)]
pub(crate) struct DocWriter {
    buf: String,
}

impl DocWriter {
    pub fn new(schema: &str) -> Self {
        let mut w = Self::default();
        w.line("format", &[schema]);
        w
    }

    pub fn line<S: AsRef<str>>(&mut self, key: &str, values: &[S]) {
        self.buf.push_str(key);
        for v in values {
            self.buf.push(' ');
            self.buf.push_str(v.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn floats(&mut self, key: &str, values: &[f64]) {
        let _ = write!(self.buf, "{key}");
        for v in values {
            let _ = write!(self.buf, " {}", fmt_f64(*v));
        }
        self.buf.push('\n');
    }

    pub fn usizes(&mut self, key: &str, values: &[usize]) {
        let _ = write!(self.buf, "{key}");
        for v in values {
            let _ = write!(self.buf, " {v}");
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub(crate) struct DocReader<'a> {
    lines: Vec<(&'a str, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> DocReader<'a> {
    pub fn new(text: &'a str, schema: &str) -> Result<Self> {
        let lines: Vec<(&str, Vec<&str>)> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut it = l.split_whitespace();
                let key = it.next().unwrap_or_default();
                (key, it.collect())
            })
            .collect();
        let mut reader = Self { lines, pos: 0 };
        let found = reader.strings("format")?;
        if found.len() != 1 || found[0] != schema {
            return Err(Error::schema(
                "format",
                format!("expected `{schema}`, found `{}`", found.join(" ")),
            ));
        }
        Ok(reader)
    }

    fn next_line(&mut self, key: &str) -> Result<&[&'a str]> {
        let (found, values) = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::schema(key, "missing (unexpected end of document)"))?;
        if *found != key {
            return Err(Error::schema(key, format!("expected field, found `{found}`")));
        }
        self.pos += 1;
        Ok(values)
    }

    pub fn strings(&mut self, key: &str) -> Result<Vec<&'a str>> {
        Ok(self.next_line(key)?.to_vec())
    }

    pub fn floats(&mut self, key: &str, label: &str, n: Option<usize>) -> Result<Vec<f64>> {
        let values = self.next_line(key)?.to_vec();
        if let Some(n) = n {
            if values.len() != n {
                return Err(Error::schema(label, format!("expected {n} values, found {}", values.len())));
            }
        }
        values
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::schema(label, format!("not a finite number: `{v}`")))
            })
            .collect()
    }

    pub fn usizes(&mut self, key: &str, label: &str, n: Option<usize>) -> Result<Vec<usize>> {
        let values = self.next_line(key)?.to_vec();
        if let Some(n) = n {
            if values.len() != n {
                return Err(Error::schema(label, format!("expected {n} values, found {}", values.len())));
            }
        }
        values
            .iter()
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::schema(label, format!("not a non-negative integer: `{v}`")))
            })
            .collect()
    }

    pub fn usize1(&mut self, key: &str) -> Result<usize> {
        Ok(self.usizes(key, key, Some(1))?[0])
    }

    pub fn finish(self) -> Result<()> {
        match self.lines.get(self.pos) {
            None => Ok(()),
            Some((key, _)) => Err(Error::schema(*key, "unexpected trailing field")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips_bits() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456.789e10, f64::MIN_POSITIVE, -0.0] {
            let back: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn reader_names_the_bad_field() {
        let mut w = DocWriter::new("x-v1");
        w.floats("alpha", &[1.0, 2.0]);
        let text = w.finish();
        let mut r = DocReader::new(&text, "x-v1").unwrap();
        let err = r.floats("alpha", "thing.alpha", Some(3)).unwrap_err();
        assert!(err.to_string().contains("thing.alpha"));
        assert!(DocReader::new(&text, "y-v1").is_err());
    }
}
