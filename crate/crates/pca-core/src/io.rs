//! Text formats for ensembles, time series, update rules, spectra, and
//! operator dumps.
//!
//! All formats are line oriented; `#` starts a comment and blank lines are
//! skipped.

use crate::error::{PcaError, Result};
use crate::lattice::{CellRule, Ensemble, SeriesPoint, SpinConfig};
use crate::op::OperatorMatrix;
use num_complex::Complex64;
use std::io::{BufRead, BufReader, Read, Write};

fn content_lines(reader: impl Read) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim().to_string();
        if !body.is_empty() {
            out.push((lineno + 1, body));
        }
    }
    Ok(out)
}

/// Reads an ensemble: one `<configuration> <weight>` pair per line, with
/// multi-plane configurations written as `|`-separated bitstrings.
pub fn read_ensemble(reader: impl Read) -> Result<Ensemble> {
    let mut entries = Vec::new();
    for (lineno, body) in content_lines(reader)? {
        let mut parts = body.split_whitespace();
        let cfg = parts
            .next()
            .ok_or_else(|| PcaError::Input(format!("line {lineno}: missing configuration")))?;
        let weight = parts
            .next()
            .ok_or_else(|| PcaError::Input(format!("line {lineno}: missing weight")))?;
        if parts.next().is_some() {
            return Err(PcaError::Input(format!(
                "line {lineno}: expected exactly two fields"
            )));
        }
        let cfg =
            SpinConfig::parse(cfg).map_err(|e| PcaError::Input(format!("line {lineno}: {e}")))?;
        let weight: f64 = weight
            .parse()
            .map_err(|_| PcaError::Input(format!("line {lineno}: bad weight {weight:?}")))?;
        entries.push((cfg, weight));
    }
    let ensemble = Ensemble { entries };
    ensemble.validate()?;
    Ok(ensemble)
}

pub fn write_ensemble(mut writer: impl Write, ensemble: &Ensemble) -> Result<()> {
    writeln!(writer, "# configuration weight")?;
    for (cfg, w) in &ensemble.entries {
        writeln!(writer, "{} {:.17e}", cfg.format(), w)?;
    }
    Ok(())
}

/// Writes a sampled time series as CSV with columns `t,observable,mean,stderr`.
pub fn write_series(mut writer: impl Write, rows: &[SeriesPoint]) -> Result<()> {
    writeln!(writer, "t,observable,mean,stderr")?;
    for row in rows {
        writeln!(
            writer,
            "{},{},{:.17e},{:.17e}",
            row.t, row.observable, row.mean, row.stderr
        )?;
    }
    Ok(())
}

pub fn read_series(reader: impl Read) -> Result<Vec<SeriesPoint>> {
    let mut rows = Vec::new();
    for (lineno, body) in content_lines(reader)? {
        if body.starts_with("t,observable") {
            continue;
        }
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() != 4 {
            return Err(PcaError::Input(format!(
                "line {lineno}: expected 4 comma-separated fields"
            )));
        }
        rows.push(SeriesPoint {
            t: parts[0]
                .trim()
                .parse()
                .map_err(|_| PcaError::Input(format!("line {lineno}: bad time")))?,
            observable: parts[1].trim().to_string(),
            mean: parts[2]
                .trim()
                .parse()
                .map_err(|_| PcaError::Input(format!("line {lineno}: bad mean")))?,
            stderr: parts[3]
                .trim()
                .parse()
                .map_err(|_| PcaError::Input(format!("line {lineno}: bad stderr")))?,
        });
    }
    Ok(rows)
}

/// Reads a cell update table. Each line maps one cell configuration to its
/// image: `<in-bits> -> <out-bits>`, where the bits of each side use the
/// same plane-major, most-significant-first order as the table index
/// (planes separated by `|` for readability). Configurations not listed map
/// to themselves. The header line `cell <width>x<planes>` fixes the shape.
pub fn read_rule(reader: impl Read) -> Result<CellRule> {
    let lines = content_lines(reader)?;
    let mut iter = lines.into_iter();
    let (lineno, header) = iter
        .next()
        .ok_or_else(|| PcaError::Input("empty rule file".into()))?;
    let shape = header.strip_prefix("cell").map(str::trim).ok_or_else(|| {
        PcaError::Input(format!(
            "line {lineno}: rule file must start with 'cell <width>x<planes>'"
        ))
    })?;
    let (w, g) = shape
        .split_once('x')
        .ok_or_else(|| PcaError::Input(format!("line {lineno}: bad cell shape {shape:?}")))?;
    let width: usize = w
        .trim()
        .parse()
        .map_err(|_| PcaError::Input(format!("line {lineno}: bad width {w:?}")))?;
    let planes: usize = g
        .trim()
        .parse()
        .map_err(|_| PcaError::Input(format!("line {lineno}: bad plane count {g:?}")))?;
    let bits = width * planes;
    if bits == 0 || bits > 16 {
        return Err(PcaError::Input(format!(
            "line {lineno}: cell carries {bits} bits, supported range is 1..=16"
        )));
    }
    let size = 1usize << bits;
    let mut table: Vec<u16> = (0..size as u16).collect();
    let mut assigned = vec![false; size];
    let parse_side = |lineno: usize, side: &str| -> Result<u16> {
        let digits: String = side.chars().filter(|c| *c != '|').collect();
        if digits.len() != bits || digits.chars().any(|c| c != '0' && c != '1') {
            return Err(PcaError::Input(format!(
                "line {lineno}: expected {bits} bits, got {side:?}"
            )));
        }
        Ok(u16::from_str_radix(&digits, 2).expect("validated binary"))
    };
    for (lineno, body) in iter {
        let (lhs, rhs) = body
            .split_once("->")
            .ok_or_else(|| PcaError::Input(format!("line {lineno}: missing '->'")))?;
        let src = parse_side(lineno, lhs.trim())?;
        let dst = parse_side(lineno, rhs.trim())?;
        if assigned[src as usize] {
            return Err(PcaError::Input(format!(
                "line {lineno}: configuration listed twice"
            )));
        }
        assigned[src as usize] = true;
        table[src as usize] = dst;
    }
    CellRule::new(width, planes, table)
}

/// Writes a rule's non-identity transitions in the format of [`read_rule`].
pub fn write_rule(mut writer: impl Write, rule: &CellRule) -> Result<()> {
    writeln!(writer, "cell {}x{}", rule.width(), rule.planes())?;
    writeln!(
        writer,
        "# plane-major bits, most significant first; unlisted configurations are fixed"
    )?;
    let bits = rule.width() * rule.planes();
    let fmt = |v: u16| -> String {
        let raw: String = (0..bits)
            .rev()
            .map(|b| if v >> b & 1 == 1 { '1' } else { '0' })
            .collect();
        raw.as_bytes()
            .chunks(rule.width())
            .map(|c| std::str::from_utf8(c).expect("ascii"))
            .collect::<Vec<_>>()
            .join("|")
    };
    for (src, &dst) in rule.table().iter().enumerate() {
        if src != dst as usize {
            writeln!(writer, "{} -> {}", fmt(src as u16), fmt(dst))?;
        }
    }
    Ok(())
}

/// Writes eigenvalues as CSV with columns `index,re,im`.
pub fn write_spectrum(mut writer: impl Write, values: &[Complex64]) -> Result<()> {
    writeln!(writer, "index,re,im")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(writer, "{},{:.17e},{:.17e}", i, v.re, v.im)?;
    }
    Ok(())
}

/// Writes an operator in coordinate-list form: `row col re im` per entry.
pub fn write_operator(mut writer: impl Write, op: &OperatorMatrix) -> Result<()> {
    writeln!(writer, "# dim {}", op.dim())?;
    writeln!(writer, "# row col re im")?;
    for (r, c, v) in op.triplets() {
        writeln!(writer, "{} {} {:.17e} {:.17e}", r, c, v.re, v.im)?;
    }
    Ok(())
}

pub fn read_operator(reader: impl Read) -> Result<OperatorMatrix> {
    let mut dim: Option<usize> = None;
    let mut triplets = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("# dim") {
            dim = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| PcaError::Input(format!("line {lineno}: bad dimension")))?,
            );
            continue;
        }
        let body = trimmed.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(PcaError::Input(format!(
                "line {lineno}: expected 'row col re im'"
            )));
        }
        let r: usize = parts[0]
            .parse()
            .map_err(|_| PcaError::Input(format!("line {lineno}: bad row")))?;
        let c: usize = parts[1]
            .parse()
            .map_err(|_| PcaError::Input(format!("line {lineno}: bad col")))?;
        let re: f64 = parts[2]
            .parse()
            .map_err(|_| PcaError::Input(format!("line {lineno}: bad real part")))?;
        let im: f64 = parts[3]
            .parse()
            .map_err(|_| PcaError::Input(format!("line {lineno}: bad imaginary part")))?;
        triplets.push((r, c, Complex64::new(re, im)));
    }
    let dim = dim.ok_or_else(|| PcaError::Input("missing '# dim' header".into()))?;
    if triplets.iter().any(|&(r, c, _)| r >= dim || c >= dim) {
        return Err(PcaError::Input("entry outside declared dimension".into()));
    }
    Ok(OperatorMatrix::from_triplets(dim, triplets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_round_trip() {
        let text = "# comment\n10010|00110 0.25\n01001|00011 0.75\n";
        let ens = read_ensemble(text.as_bytes()).unwrap();
        assert_eq!(ens.entries.len(), 2);
        assert_eq!(ens.entries[0].0.format(), "10010|00110");
        let mut out = Vec::new();
        write_ensemble(&mut out, &ens).unwrap();
        let again = read_ensemble(out.as_slice()).unwrap();
        assert_eq!(again.entries[1].0, ens.entries[1].0);
        assert!((again.entries[1].1 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ensemble_rejects_bad_weights() {
        assert!(read_ensemble("10010 0.5\n".as_bytes()).is_err());
        assert!(read_ensemble("10010 -0.2\n01001 1.2\n".as_bytes()).is_err());
    }

    #[test]
    fn series_round_trip() {
        let rows = vec![
            SeriesPoint {
                t: 0,
                observable: "n[R](1)".into(),
                mean: 0.5,
                stderr: 0.0,
            },
            SeriesPoint {
                t: 1,
                observable: "n[R](1)".into(),
                mean: 0.25,
                stderr: 0.01,
            },
        ];
        let mut out = Vec::new();
        write_series(&mut out, &rows).unwrap();
        let again = read_series(out.as_slice()).unwrap();
        assert_eq!(again, rows);
    }

    #[test]
    fn rule_round_trip() {
        let text = "cell 3x2\n100|101 -> 010|110\n010|110 -> 100|101\n";
        let rule = read_rule(text.as_bytes()).unwrap();
        assert_eq!(rule.width(), 3);
        assert_eq!(rule.planes(), 2);
        assert_eq!(rule.apply_index(0b100101), 0b010110);
        assert_eq!(rule.apply_index(0b010110), 0b100101);
        assert_eq!(rule.apply_index(0b111111), 0b111111);
        let mut out = Vec::new();
        write_rule(&mut out, &rule).unwrap();
        let again = read_rule(out.as_slice()).unwrap();
        assert_eq!(again, rule);
    }

    #[test]
    fn rule_rejects_non_bijective_tables() {
        let text = "cell 3x1\n100 -> 010\n001 -> 010\n";
        assert!(read_rule(text.as_bytes()).is_err());
    }

    #[test]
    fn operator_round_trip() {
        let op = OperatorMatrix::from_triplets(
            3,
            vec![
                (0, 1, Complex64::new(1.5, -0.5)),
                (2, 0, Complex64::new(0.0, 2.0)),
            ],
        );
        let mut out = Vec::new();
        write_operator(&mut out, &op).unwrap();
        let again = read_operator(out.as_slice()).unwrap();
        assert!(op.distance(&again).unwrap() < 1e-15);
    }
}
