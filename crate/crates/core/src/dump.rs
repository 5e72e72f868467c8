//! Binary field dumps: a flat little-endian `f64` array in row-major node
//! order plus a JSON sidecar `{"dim", "k", "n"}` at `<path>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PeriodicField};
use crate::real::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DumpSidecar {
    pub dim: usize,
    pub k: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode_values<T: Real>(field: &PeriodicField<T>) -> Vec<u8> {
    field
        .values()
        .iter()
        .flat_map(|v| v.as_f64().to_le_bytes())
        .collect()
}

pub fn decode_values(bytes: &[u8], expected: usize) -> Result<Vec<f64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            format!(
                "field dump holds {} bytes, expected {} ({} values)",
                bytes.len(),
                expected * 8,
                expected
            ),
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Writes the binary dump and its sidecar.
pub fn write_field_dump<T: Real>(
    path: &Path,
    field: &PeriodicField<T>,
    config_hash: Option<&str>,
) -> Result<()> {
    let g = field.grid();
    let sidecar = DumpSidecar {
        dim: g.dim(),
        k: g.cell_edge(),
        n: g.points_per_unit(),
        config_hash: config_hash.map(str::to_owned),
    };
    fs::write(path, encode_values(field))?;
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn read_field_dump<T: Real>(path: &Path) -> Result<PeriodicField<T>> {
    let side = fs::read_to_string(sidecar_path(path))?;
    let sidecar: DumpSidecar =
        serde_json::from_str(&side).map_err(|e| Error::Format(format!("sidecar: {e}")))?;
    let grid = GridSpec::new(sidecar.dim, sidecar.k, sidecar.n)?;
    let bytes = fs::read(path)?;
    let values = decode_values(&bytes, grid.len())?;
    PeriodicField::new(grid, values.into_iter().map(T::lit).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("gapsol-dump-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = make_grid(2, 2, 4).unwrap();
        let u = PeriodicField::from_lattice_fn(g, |x: &[f64]| (x[0] * 0.7).exp() / 3.0 - x[1]);
        let p = dir.join("u.bin");
        write_field_dump(&p, &u, Some("abc")).unwrap();
        let back: PeriodicField<f64> = read_field_dump(&p).unwrap();
        assert_eq!(back.grid(), u.grid());
        for (a, b) in back.values().iter().zip(u.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn truncated_dump_is_io_error() {
        let dir = std::env::temp_dir().join(format!("gapsol-trunc-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = make_grid(1, 1, 8).unwrap();
        let u = PeriodicField::constant(g, 1.0_f64);
        let p = dir.join("u.bin");
        write_field_dump(&p, &u, None).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_field_dump::<f64>(&p), Err(Error::Io(_))));
        let _ = fs::remove_dir_all(&dir);
    }
}
