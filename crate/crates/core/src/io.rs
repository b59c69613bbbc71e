//! Plain-text formats for networks, node attributes and posterior draws.
//!
//! Edge list:
//!
//! ```text
//! # comments start with '#'
//! n 5 undirected
//! 0 1
//! 1 2
//! ```
//!
//! Attribute table: a header row of attribute names, then one row per node
//! in node order, separated by tabs, commas or semicolons (detected from
//! the header) or else by runs of whitespace.
//!
//! Draws table: tab-separated, header `chain iter theta_1 ... theta_d`,
//! chains and iterations numbered from 1.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{ErgmError, Result};
use crate::exchange::PosteriorSample;
use crate::graph::{Attribute, AttributeTable, Graph};
use crate::matrix::RowMatrix;

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> ErgmError {
    ErgmError::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Parses an edge list; `source` names the input in error messages.
pub fn parse_edge_list(text: &str, source: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| {
        parse_error(
            source,
            1,
            "missing `n <count> <undirected|directed>` header",
        )
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, directed) = match fields.as_slice() {
        ["n", count, kind] => {
            let n: usize = count
                .parse()
                .map_err(|_| parse_error(source, hline, format!("bad node count `{count}`")))?;
            let directed = match *kind {
                "undirected" => false,
                "directed" => true,
                other => {
                    return Err(parse_error(
                        source,
                        hline,
                        format!("expected `undirected` or `directed`, found `{other}`"),
                    ))
                }
            };
            (n, directed)
        }
        _ => {
            return Err(parse_error(
                source,
                hline,
                "expected header `n <count> <undirected|directed>`",
            ))
        }
    };
    let mut graph = Graph::empty(n, directed);
    for (lineno, line) in lines {
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_error(source, lineno, "expected two node indices"));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_error(source, lineno, format!("bad node index `{s}`")))
        };
        let (i, j) = (parse(a)?, parse(b)?);
        if !graph
            .has_edge(i, j)
            .map_err(|e| parse_error(source, lineno, e.to_string()))?
        {
            graph.toggle_edge(i, j)?;
        }
    }
    Ok(graph)
}

pub fn read_edge_list(path: &Path) -> Result<Graph> {
    parse_edge_list(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Writes the header and the edges in sorted order.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    let kind = if g.is_directed() {
        "directed"
    } else {
        "undirected"
    };
    writeln!(out, "n {} {kind}", g.n())?;
    for (i, j) in g.edge_list() {
        writeln!(out, "{i} {j}")?;
    }
    Ok(())
}

fn delimited_rows(text: &str, delimiter: u8) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn whitespace_rows(text: &str) -> Vec<(usize, Vec<String>)> {
    content_lines(text)
        .map(|(line, l)| (line, l.split_whitespace().map(str::to_string).collect()))
        .collect()
}

/// Parses an attribute table for `n` nodes.
pub fn parse_attributes(text: &str, n: usize, source: &str) -> Result<AttributeTable> {
    let header = content_lines(text)
        .next()
        .map(|(_, l)| l)
        .ok_or_else(|| parse_error(source, 1, "missing header row"))?;
    let rows = match b"\t,;"
        .iter()
        .copied()
        .find(|&d| header.contains(d as char))
    {
        Some(d) => delimited_rows(text, d)?,
        None => whitespace_rows(text),
    };
    let mut rows = rows.into_iter();
    let (hline, names) = rows.next().expect("header row present");
    if names.iter().any(String::is_empty) {
        return Err(parse_error(source, hline, "empty attribute name in header"));
    }
    let mut columns: Vec<Vec<String>> = vec![Vec::with_capacity(n); names.len()];
    for (line, fields) in rows {
        if fields.len() != names.len() {
            return Err(parse_error(
                source,
                line,
                format!("expected {} fields, found {}", names.len(), fields.len()),
            ));
        }
        for (col, f) in columns.iter_mut().zip(fields) {
            col.push(f);
        }
    }
    let mut table = AttributeTable::new();
    for (name, values) in names.into_iter().zip(columns) {
        if values.len() != n {
            return Err(ErgmError::AttributeLength {
                name,
                expected: n,
                found: values.len(),
            });
        }
        table.insert(name, Attribute::new(&values));
    }
    Ok(table)
}

pub fn read_attributes(path: &Path, n: usize) -> Result<AttributeTable> {
    parse_attributes(&fs::read_to_string(path)?, n, &path.display().to_string())
}

/// Writes an attribute table, tab-separated.
pub fn write_attributes<W: Write>(table: &AttributeTable, n: usize, mut out: W) -> Result<()> {
    let names: Vec<&str> = table.keys().map(String::as_str).collect();
    writeln!(out, "{}", names.join("\t"))?;
    for i in 0..n {
        let row: Vec<&str> = table.values().map(|a| a.labels()[i].as_str()).collect();
        writeln!(out, "{}", row.join("\t"))?;
    }
    Ok(())
}

/// Network with its attributes attached.
pub fn read_network(edges: &Path, attributes: Option<&Path>) -> Result<Graph> {
    let mut g = read_edge_list(edges)?;
    if let Some(path) = attributes {
        for (name, attr) in read_attributes(path, g.n())? {
            g.set_attribute(name, attr)?;
        }
    }
    Ok(g)
}

/// Writes draws with the `chain iter theta_1 ... theta_d` header. Values use
/// the shortest representation that round-trips.
pub fn write_draws<W: Write>(sample: &PosteriorSample, mut out: W) -> Result<()> {
    write!(out, "chain\titer")?;
    for k in 1..=sample.dim() {
        write!(out, "\ttheta_{k}")?;
    }
    writeln!(out)?;
    for c in 0..sample.nchains() {
        for t in 0..sample.iters() {
            write!(out, "{}\t{}", c + 1, t + 1)?;
            for v in sample.draw(c, t) {
                write!(out, "\t{v}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Parses a draws table. Every chain must have the same number of rows,
/// listed chain by chain.
pub fn parse_draws(text: &str, source: &str) -> Result<PosteriorSample> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_error(source, 1, "missing header row"))?;
    let cols: Vec<&str> = header.split_whitespace().collect();
    if cols.len() < 3 || cols[0] != "chain" || cols[1] != "iter" {
        return Err(parse_error(
            source,
            hline,
            "expected header `chain iter theta_1 ... theta_d`",
        ));
    }
    let dim = cols.len() - 2;
    let mut draws = RowMatrix::new(dim);
    let mut chain_lengths: Vec<usize> = Vec::new();
    let mut row = vec![0.0; dim];
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != cols.len() {
            return Err(parse_error(
                source,
                lineno,
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let chain: usize = fields[0]
            .parse()
            .map_err(|_| parse_error(source, lineno, format!("bad chain `{}`", fields[0])))?;
        if chain == 0 || chain < chain_lengths.len() || chain > chain_lengths.len() + 1 {
            return Err(parse_error(
                source,
                lineno,
                "chains must be numbered from 1 and listed in order",
            ));
        }
        if chain > chain_lengths.len() {
            chain_lengths.push(0);
        }
        *chain_lengths.last_mut().expect("pushed above") += 1;
        for (slot, f) in row.iter_mut().zip(&fields[2..]) {
            *slot = f
                .parse()
                .map_err(|_| parse_error(source, lineno, format!("bad number `{f}`")))?;
        }
        draws.push(&row);
    }
    let iters = chain_lengths.first().copied().unwrap_or(0);
    if chain_lengths.iter().any(|&l| l != iters) {
        return Err(parse_error(
            source,
            hline,
            format!("chains have unequal lengths {chain_lengths:?}"),
        ));
    }
    PosteriorSample::new(chain_lengths.len(), iters, draws)
}

pub fn read_draws(path: &Path) -> Result<PosteriorSample> {
    parse_draws(&fs::read_to_string(path)?, &path.display().to_string())
}
