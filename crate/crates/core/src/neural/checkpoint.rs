//! Plain-text checkpoints.
//!
//! ```text
//! mlp <n_sizes> <size_0> ... <size_n-1> <activation>
//! weights 0
//! <out_0 lines, each with in_0 values>
//! bias 0
//! <one line with out_0 values>
//! weights 1
//! ...
//! end
//! ```
//!
//! Values are written in shortest round-trip form, so a read after a write
//! restores parameters bit for bit. A standardizer is written as
//! `standardizer <d>` followed by a `mean` line and a `std` line.

use std::io::{BufRead, Write};

use super::{Activation, Mlp, Standardizer};
use crate::{Error, Result};

pub(crate) fn write_row(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let line = values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ");
    writeln!(w, "{line}")?;
    Ok(())
}

/// Line reader that tracks line numbers for error reporting.
pub(crate) struct Lines<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line: 0,
            buf: String::new(),
        }
    }

    pub fn error(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            reason: reason.into(),
        }
    }

    /// Next non-empty line, trimmed.
    pub fn next_line(&mut self) -> Result<&str> {
        loop {
            self.buf.clear();
            self.line += 1;
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Err(self.error("unexpected end of input"));
            }
            if !self.buf.trim().is_empty() {
                return Ok(self.buf.trim());
            }
        }
    }

    pub fn expect(&mut self, keyword: &str) -> Result<Vec<String>> {
        let line = self.next_line()?.to_owned();
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(self.error(format!("expected `{keyword}`, found `{line}`")));
        }
        Ok(parts.map(str::to_owned).collect())
    }

    pub fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?.to_owned();
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| self.error(format!("`{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(self.error(format!("expected {n} values, found {}", values.len())));
        }
        Ok(values)
    }

    pub fn parse<T: std::str::FromStr>(&self, token: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.error(format!("cannot parse `{token}`")))
    }
}

impl Mlp {
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        let sizes = self
            .sizes()
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            w,
            "mlp {} {} {}",
            self.sizes().len(),
            sizes,
            self.hidden().name()
        )?;
        for l in 0..self.num_layers() {
            let n_in = self.sizes()[l];
            let (weights, bias) = self.layer(l);
            writeln!(w, "weights {l}")?;
            for row in weights.chunks(n_in) {
                write_row(w, row)?;
            }
            writeln!(w, "bias {l}")?;
            write_row(w, bias)?;
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        Self::read_lines(&mut Lines::new(r))
    }

    pub(crate) fn read_lines<R: BufRead>(lines: &mut Lines<R>) -> Result<Self> {
        let header = lines.expect("mlp")?;
        let n: usize = lines.parse(header.first().map(String::as_str).unwrap_or(""))?;
        if n < 2 || header.len() != n + 2 {
            return Err(lines.error("malformed mlp header"));
        }
        let sizes = header[1..=n]
            .iter()
            .map(|t| lines.parse::<usize>(t))
            .collect::<Result<Vec<_>>>()?;
        let act = Activation::from_name(&header[n + 1])
            .ok_or_else(|| lines.error(format!("unknown activation `{}`", header[n + 1])))?;
        let mut mlp = Mlp::zeros(&sizes, act);
        for l in 0..mlp.num_layers() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            lines.expect("weights")?;
            let mut weights = Vec::with_capacity(n_in * n_out);
            for _ in 0..n_out {
                weights.extend(lines.floats(n_in)?);
            }
            lines.expect("bias")?;
            let bias = lines.floats(n_out)?;
            let (w, b) = mlp.layer_mut(l);
            w.copy_from_slice(&weights);
            b.copy_from_slice(&bias);
        }
        lines.expect("end")?;
        Ok(mlp)
    }
}

impl Standardizer {
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "standardizer {}", self.dim())?;
        write!(w, "mean ")?;
        write_row(w, &self.mean)?;
        write!(w, "std ")?;
        write_row(w, &self.std)?;
        Ok(())
    }

    pub(crate) fn read_lines<R: BufRead>(lines: &mut Lines<R>) -> Result<Self> {
        let header = lines.expect("standardizer")?;
        let d: usize = lines.parse(header.first().map(String::as_str).unwrap_or(""))?;
        let parse_row = |lines: &mut Lines<R>, key: &str| -> Result<Vec<f64>> {
            let parts = lines.expect(key)?;
            let values = parts
                .iter()
                .map(|t| lines.parse::<f64>(t))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != d {
                return Err(lines.error(format!("expected {d} values")));
            }
            Ok(values)
        };
        let mean = parse_row(lines, "mean")?;
        let std = parse_row(lines, "std")?;
        Ok(Self { mean, std })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn mlp_text_round_trip(seed in any::<u64>(), hidden in 1usize..6) {
            let mlp = Mlp::init(&[3, hidden, 2], Activation::Tanh, &mut rng::stream(seed, 0));
            let mut buf = Vec::new();
            mlp.write_text(&mut buf).unwrap();
            let back = Mlp::read_text(buf.as_slice()).unwrap();
            prop_assert_eq!(back, mlp);
        }
    }

    #[test]
    fn truncated_checkpoint_reports_line() {
        let text = "mlp 2 2 1 tanh\nweights 0\n0.5 0.5\nbias 0\n";
        match Mlp::read_text(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
