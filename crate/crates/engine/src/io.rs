//! Text file formats: edge lists and feature matrices.
//!
//! Edge files are UTF-8 text, one `src<TAB>dst` pair per line, `#` comment
//! lines ignored. The generator writes the vertex count as a `# n <count>`
//! header line so isolated trailing vertices survive a round trip; the
//! reader picks it up but a caller-supplied count wins.
//!
//! Feature files carry a `rows cols` header line followed by one line of
//! space-separated floats per row. Values are written in shortest
//! round-trip form, so read(write(m)) is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use gasline_core::graph::{parse_edge_list, ParseError};
use gasline_core::matrix::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

fn read_error(path: &Path, source: std::io::Error) -> IoError {
    IoError::Read {
        path: path.display().to_string(),
        source,
    }
}

fn write_error(path: &Path, source: std::io::Error) -> IoError {
    IoError::Write {
        path: path.display().to_string(),
        source,
    }
}

/// Read an edge-list file. Returns the header-declared vertex count, if any,
/// and the edges in file order.
pub fn read_edge_file(path: &Path) -> Result<(Option<usize>, Vec<(usize, usize)>), IoError> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let mut declared = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# n ") {
            if let Ok(n) = rest.trim().parse::<usize>() {
                declared = Some(n);
                break;
            }
        }
    }
    let edges = parse_edge_list(&text).map_err(|source| IoError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    Ok((declared, edges))
}

/// Write an edge-list file with the `# n` header.
pub fn write_edge_file(path: &Path, num_vertices: usize, edges: &[(usize, usize)]) -> Result<(), IoError> {
    let mut out = String::with_capacity(16 + edges.len() * 8);
    out.push_str(&format!("# n {num_vertices}\n"));
    for &(src, dst) in edges {
        out.push_str(&format!("{src}\t{dst}\n"));
    }
    fs::write(path, out).map_err(|e| write_error(path, e))
}

/// Read a feature file (`rows cols` header, then one row per line).
pub fn read_feature_file(path: &Path) -> Result<Matrix, IoError> {
    let text = fs::read_to_string(path).map_err(|e| read_error(path, e))?;
    let malformed = |line: usize, message: String| IoError::Malformed {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file".into()))?;
    let mut parts = header.split_whitespace();
    let rows: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed(1, "expected \"rows cols\" header".into()))?;
    let cols: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed(1, "expected \"rows cols\" header".into()))?;

    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0usize;
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for token in line.split_whitespace() {
            let value: f32 = token
                .parse()
                .map_err(|_| malformed(index + 1, format!("bad float {token:?}")))?;
            data.push(value);
            count += 1;
        }
        if count != cols {
            return Err(malformed(
                index + 1,
                format!("expected {cols} values, got {count}"),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(malformed(
            1,
            format!("header declares {rows} rows, file has {seen}"),
        ));
    }
    Ok(Matrix::from_vec(rows, cols, data).expect("validated above"))
}

/// Write a feature file in the documented format.
pub fn write_feature_file(path: &Path, values: &Matrix) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|e| write_error(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| write_error(path, e);
    writeln!(out, "{} {}", values.rows(), values.cols()).map_err(io)?;
    for r in 0..values.rows() {
        let row = values.row(r);
        let mut line = String::new();
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}
