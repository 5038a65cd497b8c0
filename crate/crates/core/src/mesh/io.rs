//! Binary tet-mesh and field files.
//!
//! Both formats are little-endian:
//!
//! ```text
//! tet mesh:  b"TETMESH\0" | version u32 | n_vertices u32 | n_tets u32
//!            | n_vertices × (x f64, y f64, z f64) | n_tets × (4 × u32)
//! field:     b"SCALARF\0" | version u32 | n_values u32 | n_values × f64
//! ```

use std::io::{Read, Write};

use crate::mesh::{ScalarField, TetMesh};
use crate::{Error, Result, Vec3};

const MESH_MAGIC: &[u8; 8] = b"TETMESH\0";
const FIELD_MAGIC: &[u8; 8] = b"SCALARF\0";
const VERSION: u32 = 1;

pub fn write_tetmesh<W: Write>(mesh: &TetMesh, mut w: W) -> Result<()> {
    w.write_all(MESH_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(mesh.num_vertices() as u32).to_le_bytes())?;
    w.write_all(&(mesh.num_tets() as u32).to_le_bytes())?;
    for v in mesh.vertices() {
        for c in v.iter() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    for t in mesh.tets() {
        for k in t {
            w.write_all(&k.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_tetmesh<R: Read>(mut r: R) -> Result<TetMesh> {
    read_header(&mut r, MESH_MAGIC)?;
    let nv = read_u32(&mut r)? as usize;
    let nt = read_u32(&mut r)? as usize;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Vec3::new(read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?));
    }
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        tets.push([read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?]);
    }
    TetMesh::new(vertices, tets)
}

pub fn write_field<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.len() as u32).to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<ScalarField> {
    read_header(&mut r, FIELD_MAGIC)?;
    let n = read_u32(&mut r)? as usize;
    let values = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    ScalarField::new(values)
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&buf),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
