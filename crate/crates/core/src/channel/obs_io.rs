//! Text format for pilot observation streams.
//!
//! One symbol per line: `m,re_0,im_0,...,re_{P-1},im_{P-1}`. Blank lines and
//! lines starting with `#` are ignored. Floats are written in shortest
//! round-trip form, so a write/read cycle is lossless.

use std::io::{BufRead, Write};

use nalgebra::DVector;
use num_complex::Complex64;

use super::PilotObservation;
use crate::error::{Error, Result};

pub fn write_observations<W: Write>(mut w: W, observations: &[PilotObservation]) -> Result<()> {
    for obs in observations {
        write!(w, "{}", obs.symbol_index)?;
        for v in obs.values.iter() {
            write!(w, ",{},{}", v.re, v.im)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_observations<R: BufRead>(r: R) -> Result<Vec<PilotObservation>> {
    let mut out: Vec<PilotObservation> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let obs = parse_line(trimmed).map_err(|msg| Error::Parse { line: line_no, msg })?;
        if let Some(first) = out.first() {
            if first.len() != obs.len() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {} pilots, found {}", first.len(), obs.len()),
                });
            }
        }
        out.push(obs);
    }
    Ok(out)
}

fn parse_line(line: &str) -> std::result::Result<PilotObservation, String> {
    let mut fields = line.split(',').map(str::trim);
    let m = fields
        .next()
        .ok_or("empty line")?
        .parse::<u64>()
        .map_err(|e| format!("bad symbol index: {e}"))?;
    let nums = fields
        .map(|f| {
            f.parse::<f64>()
                .map_err(|e| format!("bad number {f:?}: {e}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if nums.is_empty() || nums.len() % 2 != 0 {
        return Err(format!("expected re/im pairs, found {} values", nums.len()));
    }
    let values = DVector::from_iterator(
        nums.len() / 2,
        nums.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])),
    );
    Ok(PilotObservation::new(m, values))
}
