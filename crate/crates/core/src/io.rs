//! Graph and membership file formats.
//!
//! Two graph formats are supported:
//!
//! * **Edge list**: a header line `n_v <count> loops <0|1>` followed by one
//!   undirected edge per line as two 1-based vertex indices separated by
//!   whitespace. Blank lines and `#` comments are ignored.
//! * **Dense CSV**: an n_v × n_v comma-separated 0/1 matrix with no header.
//!   The self-loop convention is inferred: loops are allowed exactly when
//!   some diagonal entry is 1 (callers may override after loading).
//!
//! Membership files carry one 1-based block label per line, one line per
//! vertex, with blank lines and `#` comments ignored.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    DenseCsv,
}

impl GraphFormat {
    /// Picks a format from the file extension: `.csv` means dense CSV,
    /// anything else the edge-list format.
    pub fn from_path(path: &Path) -> GraphFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => GraphFormat::DenseCsv,
            _ => GraphFormat::EdgeList,
        }
    }
}

pub fn load_graph(path: &Path, format: GraphFormat) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text),
        GraphFormat::DenseCsv => parse_dense_csv(&text),
    }
}

pub fn save_graph(g: &Graph, path: &Path, format: GraphFormat) -> Result<()> {
    let mut out = fs::File::create(path)?;
    match format {
        GraphFormat::EdgeList => {
            writeln!(
                out,
                "n_v {} loops {}",
                g.n_v(),
                if g.loops_allowed() { 1 } else { 0 }
            )?;
            for (i, j) in g.pairs() {
                if g.has_edge(i, j) {
                    writeln!(out, "{} {}", i + 1, j + 1)?;
                }
            }
        }
        GraphFormat::DenseCsv => {
            for i in 0..g.n_v() {
                let row: Vec<&str> = (0..g.n_v())
                    .map(|j| if g.has_edge(i, j) { "1" } else { "0" })
                    .collect();
                writeln!(out, "{}", row.join(","))?;
            }
        }
    }
    Ok(())
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header line 'n_v <count> loops <0|1>'"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 4 || tok[0] != "n_v" || tok[2] != "loops" {
        return Err(Error::parse(
            line_no,
            format!("bad header '{header}', expected 'n_v <count> loops <0|1>'"),
        ));
    }
    let n_v: usize = tok[1]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad vertex count '{}'", tok[1])))?;
    let loops_allowed = match tok[3] {
        "0" => false,
        "1" => true,
        other => {
            return Err(Error::parse(
                line_no,
                format!("bad loops flag '{other}', expected 0 or 1"),
            ))
        }
    };
    if n_v == 0 {
        return Err(Error::parse(line_no, "vertex count must be positive"));
    }
    let mut g = Graph::empty(n_v, loops_allowed)
        .map_err(|e| Error::parse(line_no, e.to_string()))?;
    for (line_no, line) in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 2 {
            return Err(Error::parse(
                line_no,
                format!("expected 'i j', found '{line}'"),
            ));
        }
        let mut idx = [0usize; 2];
        for (slot, t) in idx.iter_mut().zip(tok.iter()) {
            let v: usize = t
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad vertex index '{t}'")))?;
            if v == 0 || v > n_v {
                return Err(Error::parse(
                    line_no,
                    format!("vertex index {v} outside 1..={n_v}"),
                ));
            }
            *slot = v - 1;
        }
        if idx[0] == idx[1] && !loops_allowed {
            return Err(Error::parse(
                line_no,
                format!("self-loop at vertex {} but header says loops 0", idx[0] + 1),
            ));
        }
        g.set_edge(idx[0], idx[1], true);
    }
    Ok(g)
}

fn parse_dense_csv(text: &str) -> Result<Graph> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut line_nos: Vec<usize> = Vec::new();
    for (line_no, line) in content_lines(text) {
        let mut row = Vec::new();
        for cell in line.split(',') {
            match cell.trim() {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(Error::parse(
                        line_no,
                        format!("bad adjacency cell '{other}', expected 0 or 1"),
                    ))
                }
            }
        }
        line_nos.push(line_no);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "empty adjacency matrix"));
    }
    let n_v = rows.len();
    for (row, &line_no) in rows.iter().zip(line_nos.iter()) {
        if row.len() != n_v {
            return Err(Error::parse(
                line_no,
                format!(
                    "row has {} columns but the matrix has {} rows",
                    row.len(),
                    n_v
                ),
            ));
        }
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, &cell) in row.iter().enumerate() {
            if cell != rows[j][i] {
                return Err(Error::parse(
                    line_nos[i],
                    format!("adjacency not symmetric at ({},{})", i + 1, j + 1),
                ));
            }
        }
    }
    let loops_allowed = (0..n_v).any(|i| rows[i][i] == 1);
    Graph::from_adjacency(&rows, loops_allowed)
}

/// Loads a block assignment: one 1-based label per vertex line. The block
/// count is the largest label, and every label in 1..=K must occur.
pub fn load_membership(path: &Path) -> Result<BlockAssignment> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let v: usize = line
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad block label '{line}'")))?;
        if v == 0 {
            return Err(Error::parse(line_no, "block labels are 1-based"));
        }
        labels.push(v);
    }
    if labels.is_empty() {
        return Err(Error::parse(1, "membership file has no labels"));
    }
    let k = *labels.iter().max().unwrap();
    BlockAssignment::new(labels, k)
}

pub fn save_membership(a: &BlockAssignment, path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for &lab in a.labels() {
        writeln!(out, "{lab}")?;
    }
    Ok(())
}
