use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Embeddings, Manifold, UnitBall};
use crate::error::{Error, Result};
use crate::poincare::PoincareBall;

/// A trained table together with the token of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<M> {
    pub tokens: Vec<String>,
    pub table: Embeddings<M>,
}

/// A checkpoint whose model is chosen by the header tag.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyCheckpoint {
    UnitBall(Checkpoint<UnitBall>),
    Poincare(Checkpoint<PoincareBall>),
}

impl AnyCheckpoint {
    pub fn tokens(&self) -> &[String] {
        match self {
            AnyCheckpoint::UnitBall(c) => &c.tokens,
            AnyCheckpoint::Poincare(c) => &c.tokens,
        }
    }
}

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::Checkpoint {
        line,
        msg: msg.into(),
    }
}

/// Writes the header line and one tab-separated row per node. Floats carry
/// 17 significant digits, so a reload is bit-exact.
pub fn write_checkpoint<M: Manifold, W: Write>(
    table: &Embeddings<M>,
    tokens: &[String],
    out: W,
) -> Result<()> {
    if tokens.len() != table.num_rows() {
        return Err(Error::DimensionMismatch {
            expected: table.num_rows(),
            found: tokens.len(),
        });
    }
    let mut out = BufWriter::new(out);
    writeln!(
        out,
        "{} {} {}",
        M::TAG,
        table.num_rows(),
        table.manifold().header_dim()
    )?;
    for (i, token) in tokens.iter().enumerate() {
        if token.is_empty() || token.contains(['\t', '\n', '\r']) {
            return Err(bad(i + 2, format!("token {token:?} cannot be written")));
        }
        out.write_all(token.as_bytes())?;
        for v in table.row(i) {
            write!(out, "\t{v:.16e}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_checkpoint<M: Manifold>(
    table: &Embeddings<M>,
    tokens: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    write_checkpoint(table, tokens, file)
}

fn parse_header(line: &str) -> Result<(&str, usize, usize)> {
    let mut parts = line.split_whitespace();
    let (Some(tag), Some(m), Some(d), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(bad(1, "header must be `<tag> <rows> <dim>`"));
    };
    let m = m
        .parse()
        .map_err(|_| bad(1, format!("bad row count {m:?}")))?;
    let d = d
        .parse()
        .map_err(|_| bad(1, format!("bad dimension {d:?}")))?;
    Ok((tag, m, d))
}

fn read_rows<M: Manifold>(
    lines: impl Iterator<Item = std::io::Result<String>>,
    manifold: M,
    m: usize,
) -> Result<Checkpoint<M>> {
    let len = manifold.row_len();
    let mut tokens = Vec::with_capacity(m);
    let mut data = Vec::with_capacity(m * len);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.is_empty() && i >= m {
            continue;
        }
        if i >= m {
            return Err(bad(lineno, format!("more rows than the {m} declared")));
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or_default();
        if token.is_empty() {
            return Err(bad(lineno, "empty token"));
        }
        let start = data.len();
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| bad(lineno, format!("row {token:?}: bad float {f:?}")))?;
            if !v.is_finite() {
                return Err(bad(lineno, format!("row {token:?}: non-finite value")));
            }
            data.push(v);
        }
        let found = data.len() - start;
        if found != len {
            return Err(bad(
                lineno,
                format!("row {token:?}: expected {len} values, found {found}"),
            ));
        }
        let norm_sq: f64 = data[start..].iter().map(|v| v * v).sum();
        if norm_sq >= 1.0 {
            return Err(bad(
                lineno,
                format!("row {token:?}: squared norm {norm_sq} is not < 1"),
            ));
        }
        tokens.push(token.to_owned());
    }
    if tokens.len() != m {
        return Err(bad(
            tokens.len() + 2,
            format!("truncated: {m} rows declared, {} found", tokens.len()),
        ));
    }
    let table = Embeddings::from_data(manifold, data)?;
    Ok(Checkpoint { tokens, table })
}

fn header_line(lines: &mut impl Iterator<Item = std::io::Result<String>>) -> Result<String> {
    lines
        .next()
        .ok_or_else(|| bad(1, "empty file"))?
        .map_err(Error::from)
}

/// Reads a checkpoint whose tag must be `M::TAG`.
pub fn read_checkpoint<M: Manifold, R: BufRead>(reader: R) -> Result<Checkpoint<M>> {
    let mut lines = reader.lines();
    let header = header_line(&mut lines)?;
    let (tag, m, d) = parse_header(&header)?;
    if tag != M::TAG {
        return Err(bad(1, format!("expected tag {}, found {tag:?}", M::TAG)));
    }
    let manifold = M::from_header_dim(d).map_err(|e| bad(1, e.to_string()))?;
    read_rows(lines, manifold, m)
}

pub fn load_checkpoint_as<M: Manifold>(path: impl AsRef<Path>) -> Result<Checkpoint<M>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    read_checkpoint(BufReader::new(file))
}

/// Loads a complex unit-ball checkpoint.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint<UnitBall>> {
    load_checkpoint_as(path)
}

/// Loads either model, dispatching on the header tag.
pub fn load_any_checkpoint(path: impl AsRef<Path>) -> Result<AnyCheckpoint> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = header_line(&mut lines)?;
    let (tag, m, d) = parse_header(&header)?;
    match tag {
        t if t == UnitBall::TAG => {
            let manifold = UnitBall::from_header_dim(d).map_err(|e| bad(1, e.to_string()))?;
            Ok(AnyCheckpoint::UnitBall(read_rows(lines, manifold, m)?))
        }
        t if t == PoincareBall::TAG => {
            let manifold = PoincareBall::from_header_dim(d).map_err(|e| bad(1, e.to_string()))?;
            Ok(AnyCheckpoint::Poincare(read_rows(lines, manifold, m)?))
        }
        other => Err(bad(1, format!("unknown model tag {other:?}"))),
    }
}
