//! Binary + JSON sidecar dumps for complex tensors, solver state and
//! estimation traces, for debugging and cross-implementation comparison.
//!
//! Complex matrices are written as interleaved real/imag little-endian
//! float64 in row-major order; the `.json` sidecar records the shape.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::doa::TraceStep;
use crate::error::{CoreError, Result};
use crate::linalg::CMat;
use crate::solver::{ActiveSetState, NormalSystem};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorSidecar {
    pub schema_version: u32,
    pub dtype: String,
    pub order: String,
    pub shape: Vec<usize>,
    pub kind: String,
}

/// Write a stack of per-bin complex matrices as `<base>.bin` +
/// `<base>.json`.
pub fn write_complex_matrices(base: &Path, mats: &[CMat], kind: &str) -> Result<()> {
    if mats.is_empty() {
        return Err(CoreError::EmptyInput("export: no matrices"));
    }
    let (rows, cols) = (mats[0].nrows(), mats[0].ncols());
    let mut bytes = Vec::with_capacity(mats.len() * rows * cols * 16);
    for m in mats {
        if m.nrows() != rows || m.ncols() != cols {
            return Err(CoreError::DimensionMismatch(
                "export: inconsistent matrix shapes".into(),
            ));
        }
        for i in 0..rows {
            for j in 0..cols {
                bytes.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                bytes.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
        }
    }
    std::fs::write(base.with_extension("bin"), &bytes)?;
    let sidecar = TensorSidecar {
        schema_version: 1,
        dtype: "complex128_interleaved_le".into(),
        order: "row_major".into(),
        shape: vec![mats.len(), rows, cols],
        kind: kind.into(),
    };
    std::fs::write(
        base.with_extension("json"),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}

/// Write per-bin complex weight vectors in the same layout (shape K x M x 1).
pub fn write_complex_vectors(
    base: &Path,
    vecs: &[crate::linalg::CVec],
    kind: &str,
) -> Result<()> {
    if vecs.is_empty() {
        return Err(CoreError::EmptyInput("export: no vectors"));
    }
    let m = vecs[0].len();
    let mut bytes = Vec::with_capacity(vecs.len() * m * 16);
    for v in vecs {
        for z in v.iter() {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    std::fs::write(base.with_extension("bin"), &bytes)?;
    let sidecar = TensorSidecar {
        schema_version: 1,
        dtype: "complex128_interleaved_le".into(),
        order: "row_major".into(),
        shape: vec![vecs.len(), m, 1],
        kind: kind.into(),
    };
    std::fs::write(
        base.with_extension("json"),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}

/// Read matrices back (testing and cross-checking).
pub fn read_complex_matrices(base: &Path) -> Result<(TensorSidecar, Vec<CMat>)> {
    let sidecar: TensorSidecar =
        serde_json::from_str(&std::fs::read_to_string(base.with_extension("json"))?)?;
    let bytes = std::fs::read(base.with_extension("bin"))?;
    if sidecar.shape.len() != 3 {
        return Err(CoreError::DimensionMismatch(format!(
            "export: expected 3-d shape, got {:?}",
            sidecar.shape
        )));
    }
    let (count, rows, cols) = (sidecar.shape[0], sidecar.shape[1], sidecar.shape[2]);
    if bytes.len() != count * rows * cols * 16 {
        return Err(CoreError::DimensionMismatch(format!(
            "export: {} bytes for shape {:?}",
            bytes.len(),
            sidecar.shape
        )));
    }
    let mut mats = Vec::with_capacity(count);
    let mut off = 0;
    for _ in 0..count {
        let mut m = CMat::zeros((rows, cols));
        for i in 0..rows {
            for j in 0..cols {
                let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
                m[(i, j)] = Complex64::new(re, im);
                off += 16;
            }
        }
        mats.push(m);
    }
    Ok((sidecar, mats))
}

/// Per-bin solver state dump for cross-checking implementations.
#[derive(Debug, Serialize)]
pub struct SolverDump<'a> {
    pub bin: usize,
    pub system: &'a NormalSystem,
    pub state: &'a ActiveSetState,
}

pub fn write_solver_dump(path: &Path, rows: &[SolverDump<'_>]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for row in rows {
        serde_json::to_writer(&mut f, row)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

/// Estimation trace as JSON lines.
pub fn write_trace_jsonl(path: &Path, trace: &[TraceStep]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for step in trace {
        serde_json::to_writer(&mut f, step)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

/// Pseudospectra as CSV rows (bin, angle_deg, value).
pub fn write_pseudospectrum_csv(path: &Path, spectra: &[crate::music::MusicSpectrum]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "bin,angle_deg,value")?;
    for s in spectra {
        for (theta, v) in s.grid.iter().zip(s.values.iter()) {
            writeln!(f, "{},{:.4},{:.12e}", s.bin, theta.to_degrees(), v)?;
        }
    }
    Ok(())
}
