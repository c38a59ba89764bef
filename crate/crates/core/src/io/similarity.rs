use std::io::{Read, Write};
use std::path::Path;

use super::pmap::{read_pmap, MAGIC};
use super::IoError;
use crate::view_graph::{GraphError, SimilarityMatrix};

/// Reads a headerless comma-separated square matrix.
pub fn read_similarity_csv<R: Read>(r: R) -> Result<SimilarityMatrix, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Format(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| IoError::Format(format!("entry {f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(GraphError::NotSquare { rows: n, row, cols: r.len() }.into());
    }
    Ok(SimilarityMatrix::new(n, rows.concat())?)
}

/// Reads a CSV file or a single-channel PMAP container.
pub fn read_similarity(path: &Path) -> Result<SimilarityMatrix, IoError> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        let data = read_pmap(&mut bytes.as_slice())?;
        if data.channels != 1 {
            return Err(IoError::Format(format!("similarity needs 1 channel, found {}", data.channels)));
        }
        if data.height != data.width {
            return Err(GraphError::NotSquare { rows: data.height, row: 0, cols: data.width }.into());
        }
        return Ok(SimilarityMatrix::new(data.height, data.values)?);
    }
    read_similarity_csv(bytes.as_slice())
}

/// Writes with shortest round-trip float formatting.
pub fn write_similarity_csv<W: Write>(w: W, sim: &SimilarityMatrix) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_writer(w);
    let n = sim.n();
    for i in 0..n {
        writer.write_record((0..n).map(|j| sim.get(i, j).to_string())).map_err(|e| IoError::Format(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_similarity_csv(path: &Path, sim: &SimilarityMatrix) -> Result<(), IoError> {
    write_similarity_csv(std::fs::File::create(path)?, sim)
}
