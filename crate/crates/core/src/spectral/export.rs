//! Plain-text export of operators and coefficient vectors.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::assemble::OperatorMatrix;
use super::basis::{QBasisKind, SpectralBasis};
use crate::error::Result;
use crate::io::fmt_f64;
use crate::linalg::LinearOperator;

#[derive(Debug, Serialize)]
pub struct BasisDescriptor {
    pub fingerprint: String,
    pub q_kind: QBasisKind,
    pub n_q: usize,
    pub n_p: usize,
    pub n_z: usize,
    pub m: usize,
    pub beta: f64,
    pub dims: Vec<usize>,
    pub layout: &'static str,
}

impl BasisDescriptor {
    pub fn of(basis: &SpectralBasis) -> Self {
        BasisDescriptor {
            fingerprint: basis.fingerprint().to_string(),
            q_kind: basis.q.kind,
            n_q: basis.q.n_q,
            n_p: basis.n_p,
            n_z: basis.n_z,
            m: basis.m,
            beta: basis.beta,
            dims: basis.dims().to_vec(),
            layout: "row-major [q][p][z1]..[zm]",
        }
    }
}

/// Writes `row col value` lines after a `#`-prefixed JSON basis descriptor.
pub fn write_triplets(path: &Path, op: &OperatorMatrix, basis: &SpectralBasis) -> Result<()> {
    op.check_basis(basis)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# basis {}", serde_json::to_string(&BasisDescriptor::of(basis)).expect("serializes"))?;
    writeln!(f, "# operator {:?} shape {}x{} components {}", op.tag, op.nrows(), op.ncols(), op.components)?;
    for (i, j, v) in op.matrix.triplets() {
        writeln!(f, "{i} {j} {}", fmt_f64(v))?;
    }
    f.flush()?;
    Ok(())
}

/// Writes one coefficient per line with its multi-index.
pub fn write_coefficients(path: &Path, coeffs: &[f64], basis: &SpectralBasis) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# basis {}", serde_json::to_string(&BasisDescriptor::of(basis)).expect("serializes"))?;
    for (idx, c) in coeffs.iter().enumerate() {
        if *c != 0.0 {
            let mi = basis.multi_index(idx);
            let mi: Vec<String> = mi.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{} {}", mi.join(" "), fmt_f64(*c))?;
        }
    }
    f.flush()?;
    Ok(())
}
