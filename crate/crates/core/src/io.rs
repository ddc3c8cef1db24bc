//! File formats: Matrix Market adjacency, one-id-per-line labels, and
//! column-per-signal CSV.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::Graph;

fn mm_err(line: usize, reason: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        reason: reason.into(),
    }
}

/// Writes the lower triangle as `coordinate real symmetric`, 1-based.
pub fn write_matrix_market<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    let lower: Vec<(usize, usize, f64)> = g.edges().into_iter().map(|(u, v, wt)| (u.max(v), u.min(v), wt)).collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", g.n(), g.n(), lower.len())?;
    for (i, j, wt) in lower {
        writeln!(w, "{} {} {}", i + 1, j + 1, wt)?;
    }
    Ok(())
}

/// Reads a square `coordinate` matrix (`real`, `integer` or `pattern`;
/// `symmetric` or `general`) as an undirected graph. A `general` file must
/// list both orientations of every edge with equal weights.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Graph> {
    let mut lines = r.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| mm_err(1, "empty file"))?;
    let banner = banner?.to_ascii_lowercase();
    let fields: Vec<&str> = banner.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(mm_err(1, "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`"));
    }
    let pattern = match fields[3] {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(mm_err(1, format!("unsupported field `{other}`"))),
    };
    let symmetric = match fields[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(mm_err(1, format!("unsupported symmetry `{other}`"))),
    };
    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(mm_err(lineno, "size line needs `rows cols nnz`"));
                }
                let nums: Vec<usize> = parts
                    .iter()
                    .map(|p| p.parse().map_err(|_| mm_err(lineno, format!("bad integer `{p}`"))))
                    .collect::<Result<_>>()?;
                if nums[0] != nums[1] {
                    return Err(mm_err(lineno, "adjacency must be square"));
                }
                size = Some((nums[0], nums[2]));
            }
            Some((n, _)) => {
                let want = if pattern { 2 } else { 3 };
                if parts.len() != want {
                    return Err(mm_err(lineno, format!("expected {want} fields")));
                }
                let idx = |p: &str| -> Result<usize> {
                    let v: usize = p.parse().map_err(|_| mm_err(lineno, format!("bad index `{p}`")))?;
                    if v == 0 || v > n {
                        return Err(mm_err(lineno, format!("index {v} outside 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let (i, j) = (idx(parts[0])?, idx(parts[1])?);
                let w = if pattern {
                    1.0
                } else {
                    parts[2]
                        .parse::<f64>()
                        .map_err(|_| mm_err(lineno, format!("bad value `{}`", parts[2])))?
                };
                entries.push((lineno, i, j, w));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| mm_err(1, "missing size line"))?;
    if entries.len() != nnz {
        return Err(mm_err(0, format!("header promises {nnz} entries, found {}", entries.len())));
    }
    let mut edges = Vec::new();
    if symmetric {
        for &(line, i, j, w) in &entries {
            if i == j {
                return Err(mm_err(line, "self-loops are not allowed"));
            }
            edges.push((i, j, w));
        }
    } else {
        let mut seen = std::collections::BTreeMap::new();
        for &(line, i, j, w) in &entries {
            if i == j {
                return Err(mm_err(line, "self-loops are not allowed"));
            }
            seen.insert((i, j), (line, w));
        }
        for (&(i, j), &(line, w)) in &seen {
            match seen.get(&(j, i)) {
                Some(&(_, w2)) if w2 == w => {
                    if i > j {
                        edges.push((i, j, w));
                    }
                }
                _ => return Err(mm_err(line, format!("entry ({}, {}) has no symmetric partner", i + 1, j + 1))),
            }
        }
    }
    Graph::from_edges(n, &edges)
}

pub fn write_labels<W: Write>(labels: &[usize], mut w: W) -> Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse()
                .map_err(|_| Error::param("labels", format!("line {}: `{t}` is not an id", idx + 1)))?,
        );
    }
    Ok(out)
}

/// Signals as CSV with a header row, one row per vertex and one column per
/// signal.
pub fn write_signals<W: Write>(names: &[&str], columns: &[Vec<f64>], w: W) -> Result<()> {
    assert_eq!(names.len(), columns.len());
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(names)?;
    let n = columns.first().map_or(0, |c| c.len());
    for i in 0..n {
        wr.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads signals written by [`write_signals`]: `(header, columns)`.
pub fn read_signals<R: std::io::Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        for (c, field) in rec.iter().enumerate() {
            let v = field.trim().parse::<f64>().map_err(|_| {
                Error::param("signal", format!("row {}: `{field}` is not a number", row + 2))
            })?;
            columns[c].push(v);
        }
    }
    Ok((header, columns))
}
