use std::io::Write;

use super::TriMesh;
use crate::{Error, Result};

/// Writes positions and faces as Wavefront OBJ (1-based indices).
pub fn write_obj<W: Write>(tri: &TriMesh, mut w: W) -> Result<()> {
    for v in &tri.vertices {
        writeln!(w, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
    }
    for t in &tri.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-vertex provenance table as CSV: `vertex,edge,k1,k2,weight`.
pub fn write_provenance<W: Write>(tri: &TriMesh, mut w: W) -> Result<()> {
    if !tri.has_provenance() && !tri.vertices.is_empty() {
        return Err(Error::MissingProvenance);
    }
    writeln!(w, "vertex,edge,k1,k2,weight")?;
    for (i, c) in tri.provenance.iter().enumerate() {
        writeln!(w, "{i},{},{},{},{:.17e}", c.edge, c.k1, c.k2, c.weight)?;
    }
    w.flush()?;
    Ok(())
}
