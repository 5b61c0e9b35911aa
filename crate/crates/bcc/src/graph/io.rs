//! File formats: edge-list graphs, delimited ratings, clustering JSON.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Clustering, GraphError, IdMaps, SignedBipartiteGraph, Threshold};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads an edge-list graph: a header line `m<TAB>n` followed by one record
/// `u<TAB>v<TAB>w` per line, 0-based indices, `w` in {+1, -1}.
pub fn read_edge_list<R: Read>(reader: R) -> Result<SignedBipartiteGraph, IoError> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line"))??;
    let mut parts = header.split('\t');
    let m: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| parse_err(1, "header must be `m<TAB>n`"))?;
    let n: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| parse_err(1, "header must be `m<TAB>n`"))?;
    let mut edges = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let mut f = line.split('\t');
        let u: usize = f
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(lineno, "bad u index"))?;
        let v: usize = f
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(lineno, "bad v index"))?;
        let w: i32 = f
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(lineno, "bad weight"))?;
        edges.push((u, v, w));
    }
    Ok(SignedBipartiteGraph::from_edge_list(m, n, &edges)?)
}

/// Writes the edge-list format accepted by [`read_edge_list`]. Records are
/// emitted in row-major order, so output bytes are a pure function of the
/// graph.
pub fn write_edge_list<W: Write>(g: &SignedBipartiteGraph, mut w: W) -> Result<(), IoError> {
    writeln!(w, "{}\t{}", g.m(), g.n())?;
    for u in 0..g.m() {
        for (v, &s) in g.row(u).iter().enumerate() {
            match s {
                1 => writeln!(w, "{u}\t{v}\t+1")?,
                -1 => writeln!(w, "{u}\t{v}\t-1")?,
                _ => {}
            }
        }
    }
    Ok(())
}

pub fn read_edge_list_file(path: &Path) -> Result<SignedBipartiteGraph, IoError> {
    read_edge_list(std::fs::File::open(path)?)
}

pub fn write_edge_list_file(g: &SignedBipartiteGraph, path: &Path) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Parses `user<DELIM>item<DELIM>rating[<DELIM>extra...]` records. Extra
/// columns (timestamps) are ignored. Blank lines are skipped.
pub fn read_ratings<R: Read>(
    reader: R,
    delimiter: &str,
) -> Result<Vec<(String, String, f64)>, IoError> {
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut f = line.split(delimiter);
        let user = f
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| parse_err(lineno, "missing user id"))?;
        let item = f
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| parse_err(lineno, "missing item id"))?;
        let rating_str = f.next().ok_or_else(|| parse_err(lineno, "missing rating"))?;
        let rating: f64 = rating_str.trim().parse().map_err(|_| {
            parse_err(lineno, format!("non-numeric rating {rating_str:?}"))
        })?;
        records.push((user.to_string(), item.to_string(), rating));
    }
    Ok(records)
}

/// Reads a ratings file and thresholds it into a signed graph.
pub fn read_ratings_file(
    path: &Path,
    delimiter: &str,
    threshold: Threshold,
) -> Result<(SignedBipartiteGraph, IdMaps), IoError> {
    let records = read_ratings(std::fs::File::open(path)?, delimiter)?;
    Ok(super::from_ratings(&records, threshold)?)
}

pub fn read_clustering_file(path: &Path) -> Result<Clustering, IoError> {
    let data = std::fs::read(path)?;
    let c: Clustering = serde_json::from_slice(&data)?;
    c.validate()?;
    Ok(c)
}

pub fn write_clustering_file(c: &Clustering, path: &Path) -> Result<(), IoError> {
    let mut data = serde_json::to_vec(c)?;
    data.push(b'\n');
    std::fs::write(path, data)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let g = SignedBipartiteGraph::from_edge_list(2, 3, &[(0, 0, 1), (1, 2, -1)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn edge_list_write_is_deterministic() {
        let g = SignedBipartiteGraph::from_edge_list(2, 2, &[(0, 1, -1), (1, 0, 1)]).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_edge_list(&g, &mut a).unwrap();
        write_edge_list(&g, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_list_rejects_garbage() {
        assert!(read_edge_list("not a header".as_bytes()).is_err());
        assert!(read_edge_list("2\t2\n0\t0\tx\n".as_bytes()).is_err());
    }

    #[test]
    fn ratings_parse_with_double_colon_delimiter() {
        let text = "1::10::4.0::978300760\n1::11::2.0::978300761\n";
        let records = read_ratings(text.as_bytes(), "::").unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0], ("1".to_string(), "10".to_string(), 4.0));
    }

    #[test]
    fn ratings_parse_rejects_non_numeric() {
        let err = read_ratings("a,x,high\n".as_bytes(), ",").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 1, .. }));
    }

    #[test]
    fn clustering_json_round_trip() {
        let c = Clustering::new(2, vec![0, 1], vec![1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        write_clustering_file(&c, &path).unwrap();
        let back = read_clustering_file(&path).unwrap();
        assert_eq!(c, back);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"k\":2,\"labels_u\":[0,1],\"labels_v\":[1]}"));
    }
}
