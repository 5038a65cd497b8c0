use std::io::Write;

use serde::Serialize;

use crate::Result;

#[derive(Serialize)]
struct Record<'a> {
    step: usize,
    term: &'a str,
    value: f64,
}

/// Newline-delimited JSON log of `(step, term, value)` records.
pub struct EnergyLog<W: Write> {
    out: W,
}

impl<W: Write> EnergyLog<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn record(&mut self, step: usize, term: &str, value: f64) -> Result<()> {
        serde_json::to_writer(&mut self.out, &Record { step, term, value })?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_one_record_per_line() {
        let mut log = EnergyLog::new(Vec::new());
        log.record(0, "eikonal", 1.5).unwrap();
        log.record(1, "normal", 0.25).unwrap();
        let text = String::from_utf8(log.into_inner()).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["term"], "normal");
        assert_eq!(lines[0]["value"], 1.5);
    }
}
