//! File formats: `fvecs`/`ivecs`, raw `f32` matrices, attribute tables,
//! JSONL workloads.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::dataset::{Workload, WorkloadQuery};
use crate::error::{invalid, Error, Result};
use crate::vector::Vectors;

fn read_i32(r: &mut impl Read) -> Result<Option<i32>> {
    let mut buf = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return invalid("truncated record header"),
            Ok(k) => got += k,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(i32::from_le_bytes(buf)))
}

/// Reads `(dim, values)` records where each value is 4 bytes.
fn read_vecs(path: &Path) -> Result<Vec<(usize, Vec<[u8; 4]>)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    while let Some(dim) = read_i32(&mut r)? {
        if dim < 0 {
            return invalid(format!("{}: negative dimension {dim}", path.display()));
        }
        let mut bytes = vec![0u8; dim as usize * 4];
        r.read_exact(&mut bytes).map_err(|_| {
            Error::InvalidInput(format!("{}: truncated record {}", path.display(), rows.len()))
        })?;
        let vals = bytes.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
        rows.push((dim as usize, vals));
    }
    Ok(rows)
}

/// Reads an `fvecs` file: per vector, a little-endian `i32` dimension then
/// that many little-endian `f32`s.
pub fn read_fvecs(path: impl AsRef<Path>) -> Result<Vectors> {
    let path = path.as_ref();
    let rows = read_vecs(path)?;
    let Some(&(dim, _)) = rows.first() else {
        return invalid(format!("{}: no vectors", path.display()));
    };
    let mut data = Vec::with_capacity(rows.len() * dim);
    for (i, (d, vals)) in rows.into_iter().enumerate() {
        if d != dim {
            return invalid(format!("{}: vector {i} has dim {d}, expected {dim}", path.display()));
        }
        data.extend(vals.into_iter().map(f32::from_le_bytes));
    }
    Vectors::new(dim, data)
}

pub fn write_fvecs(path: impl AsRef<Path>, vectors: &Vectors) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in vectors.iter() {
        w.write_all(&(v.len() as i32).to_le_bytes())?;
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a headerless little-endian `f32` matrix with `dim` columns.
pub fn read_raw_f32(path: impl AsRef<Path>, dim: usize) -> Result<Vectors> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return invalid(format!("{}: size is not a multiple of 4", path.display()));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Vectors::new(dim, data)
}

/// `fvecs` when the extension says so or no `dim` is given, raw otherwise.
pub fn read_vectors(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Vectors> {
    let path = path.as_ref();
    let is_fvecs = path.extension().is_some_and(|e| e == "fvecs");
    match dim {
        Some(d) if !is_fvecs => read_raw_f32(path, d),
        _ => read_fvecs(path),
    }
}

/// Reads an `ivecs` file (rows may have different lengths).
pub fn read_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<u32>>> {
    let rows = read_vecs(path.as_ref())?;
    Ok(rows
        .into_iter()
        .map(|(_, vals)| vals.into_iter().map(u32::from_le_bytes).collect())
        .collect())
}

pub fn write_ivecs(path: impl AsRef<Path>, rows: &[Vec<u32>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        w.write_all(&(row.len() as i32).to_le_bytes())?;
        for x in row {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an attribute table, one row per vector. Tab-separated when the file
/// ends in `.tsv` or its first line contains a tab, comma-separated otherwise.
///
/// Returns row-major values and the column count.
pub fn read_attrs(path: impl AsRef<Path>, header: bool) -> Result<(Vec<f64>, usize)> {
    let path = path.as_ref();
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    let tsv = path.extension().is_some_and(|e| e == "tsv") || first.contains('\t');
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .delimiter(if tsv { b'\t' } else { b',' })
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let mut values = Vec::new();
    let mut cols = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if i == 0 {
            cols = rec.len();
        } else if rec.len() != cols {
            return invalid(format!("{}: row {i} has {} columns, expected {cols}", path.display(), rec.len()));
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidInput(format!("{}: row {i}: '{field}' is not a number", path.display()))
            })?;
            values.push(v);
        }
    }
    if cols == 0 {
        return invalid(format!("{}: no attribute rows", path.display()));
    }
    Ok((values, cols))
}

pub fn write_attrs(path: impl AsRef<Path>, values: &[f64], cols: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in values.chunks(cols) {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::InvalidInput(e.to_string())
    }
}

/// Writes one JSON object per line. The first line carries the seed.
pub fn write_workload(path: impl AsRef<Path>, workload: &Workload) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &serde_json::json!({ "seed": workload.seed }))?;
    writeln!(w)?;
    for q in &workload.queries {
        serde_json::to_writer(&mut w, q)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSONL workload. A leading `{"seed": ...}` line is optional.
pub fn read_workload(path: impl AsRef<Path>) -> Result<Workload> {
    let r = BufReader::new(File::open(path)?);
    let mut queries = Vec::new();
    let mut seed = 0;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            let v: serde_json::Value = serde_json::from_str(&line)?;
            if v.get("query_index").is_none() {
                seed = v.get("seed").and_then(|s| s.as_u64()).unwrap_or(0);
                continue;
            }
        }
        let q: WorkloadQuery = serde_json::from_str(&line)?;
        if q.ranges.is_empty() {
            return invalid(format!("workload line {}: no ranges", i + 1));
        }
        queries.push(q);
    }
    Ok(Workload { queries, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fvecs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.fvecs");
        let v = Vectors::new(3, vec![1.0, 2.0, 3.0, -0.5, 0.25, 1e9]).unwrap();
        write_fvecs(&p, &v).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 2 * (4 + 12));
        assert_eq!(&bytes[..4], &3i32.to_le_bytes());
        assert_eq!(read_fvecs(&p).unwrap(), v);
        assert_eq!(read_vectors(&p, Some(99)).unwrap(), v);
    }

    #[test]
    fn fvecs_rejects_truncation_and_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.fvecs");
        let mut bytes = 2i32.to_le_bytes().to_vec();
        bytes.extend(1f32.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_fvecs(&p), Err(Error::InvalidInput(_))));

        let mut bytes = 1i32.to_le_bytes().to_vec();
        bytes.extend(1f32.to_le_bytes());
        bytes.extend(2i32.to_le_bytes());
        bytes.extend(1f32.to_le_bytes());
        bytes.extend(1f32.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_fvecs(&p).is_err());
    }

    #[test]
    fn raw_matrix_needs_matching_dim() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        let bytes: Vec<u8> = (0..6).flat_map(|i| (i as f32).to_le_bytes()).collect();
        std::fs::write(&p, bytes).unwrap();
        assert_eq!(read_vectors(&p, Some(2)).unwrap().len(), 3);
        assert!(read_raw_f32(&p, 4).is_err());
    }

    #[test]
    fn ivecs_ragged_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gt.ivecs");
        let rows = vec![vec![3, 1, 2], vec![], vec![7]];
        write_ivecs(&p, &rows).unwrap();
        assert_eq!(read_ivecs(&p).unwrap(), rows);
    }

    #[test]
    fn attrs_csv_tsv_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("a.csv");
        std::fs::write(&csv, "year,score\n2001, 0.5\n1999,1.5\n").unwrap();
        assert_eq!(read_attrs(&csv, true).unwrap(), (vec![2001.0, 0.5, 1999.0, 1.5], 2));
        assert!(read_attrs(&csv, false).is_err());

        let tsv = dir.path().join("a.txt");
        std::fs::write(&tsv, "3\t4\n5\t6\n").unwrap();
        assert_eq!(read_attrs(&tsv, false).unwrap(), (vec![3.0, 4.0, 5.0, 6.0], 2));

        let ragged = dir.path().join("r.csv");
        std::fs::write(&ragged, "1,2\n3\n").unwrap();
        assert!(read_attrs(&ragged, false).is_err());
    }

    #[test]
    fn attrs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let vals = vec![0.1, -2.0, 1e-7, 3.25];
        write_attrs(&p, &vals, 2).unwrap();
        assert_eq!(read_attrs(&p, false).unwrap(), (vals, 2));
    }

    #[test]
    fn workload_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.jsonl");
        let w = Workload {
            queries: vec![
                WorkloadQuery { query_index: 0, ranges: vec![(1.0, 2.5)], k: 10, fraction: Some(3) },
                WorkloadQuery { query_index: 4, ranges: vec![(0.0, 1.0), (5.0, 9.0)], k: 5, fraction: None },
            ],
            seed: 42,
        };
        write_workload(&p, &w).unwrap();
        assert_eq!(read_workload(&p).unwrap(), w);

        std::fs::write(&p, "{\"query_index\":2,\"ranges\":[[0,1]],\"k\":3}\n").unwrap();
        let w = read_workload(&p).unwrap();
        assert_eq!((w.seed, w.queries[0].query_index, w.queries[0].fraction), (0, 2, None));
    }
}
