//! Field serialization: CSV (x, y, value) and binary row-major grids with
//! a JSON header line.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteDomain, Field};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("field file does not match domain (grid {0}x{1}, h {2})")]
    DomainMismatch(usize, usize, f64),
}

#[derive(Debug, Serialize, Deserialize)]
struct BinHeader {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    layout: String,
    interior_cells: usize,
}

/// Write `x,y,value` rows for every interior cell.
pub fn write_field_csv(
    domain: &DiscreteDomain,
    field: &Field,
    path: &Path,
) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,y,value")?;
    for i in 0..domain.num_cells() {
        let (x, y) = domain.cell_center(i);
        writeln!(w, "{x},{y},{}", field.values[i])?;
    }
    Ok(())
}

/// Write the full rectangular grid row-major as little-endian f64, zero
/// outside the interior, preceded by one JSON header line.
pub fn write_field_binary(
    domain: &DiscreteDomain,
    field: &Field,
    path: &Path,
) -> Result<(), IoError> {
    let (nx, ny) = domain.grid_shape();
    let (x0, y0) = domain.bbox_origin();
    let header = BinHeader {
        nx,
        ny,
        h: domain.h(),
        origin: [x0, y0],
        layout: "row-major".into(),
        interior_cells: domain.num_cells(),
    };
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut grid = vec![0.0f64; nx * ny];
    for (i, &(ix, iy)) in domain.cells().iter().enumerate() {
        grid[iy as usize * nx + ix as usize] = field.values[i];
    }
    for v in grid {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a binary field written by [`write_field_binary`] back onto the
/// same domain.
pub fn read_field_binary(domain: &DiscreteDomain, path: &Path) -> Result<Field, IoError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut header_line = String::new();
    r.read_line(&mut header_line)?;
    let header: BinHeader = serde_json::from_str(header_line.trim_end())?;
    let (nx, ny) = domain.grid_shape();
    if header.nx != nx
        || header.ny != ny
        || (header.h - domain.h()).abs() > 1e-15
        || header.interior_cells != domain.num_cells()
    {
        return Err(IoError::DomainMismatch(header.nx, header.ny, header.h));
    }
    let mut bytes = Vec::with_capacity(nx * ny * 8);
    r.read_to_end(&mut bytes)?;
    let mut field = Field::zeros(domain);
    for (i, &(ix, iy)) in domain.cells().iter().enumerate() {
        let o = (iy as usize * nx + ix as usize) * 8;
        field.values[i] = f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;

    #[test]
    fn binary_roundtrip_is_exact() {
        let domain = DiscreteDomain::build(&DomainSpec::unit_disk(1.0 / 16.0)).unwrap();
        let field = Field::from_fn(&domain, |x, y| (x * 7.1).sin() + y);
        let dir = std::env::temp_dir().join("mfe_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        write_field_binary(&domain, &field, &path).unwrap();
        let back = read_field_binary(&domain, &path).unwrap();
        assert_eq!(field, back);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let domain = DiscreteDomain::build(&DomainSpec::unit_square(0.25)).unwrap();
        let field = Field::zeros(&domain);
        let dir = std::env::temp_dir().join("mfe_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        write_field_csv(&domain, &field, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.count(), domain.num_cells());
    }
}
