use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use tetsdf::isosurface::{write_obj, TriMesh};
use tetsdf::mesh::io::{read_field, read_tetmesh, write_field, write_tetmesh};
use tetsdf::mesh::{ScalarField, TetMesh};
use tetsdf::render::{decode_depth_png, encode_depth_png, read_normal_png, write_normal_png, NormalMap};
use tetsdf::Vec3;

use crate::error::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", path.display())))
}

fn context(path: &Path, e: tetsdf::Error) -> CliError {
    match CliError::from(e) {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn load_mesh(path: &Path) -> Result<TetMesh, CliError> {
    read_tetmesh(open(path)?).map_err(|e| context(path, e))
}

pub fn save_mesh(mesh: &TetMesh, path: &Path) -> Result<(), CliError> {
    Ok(write_tetmesh(mesh, create(path)?)?)
}

pub fn load_field(path: &Path) -> Result<ScalarField, CliError> {
    read_field(open(path)?).map_err(|e| context(path, e))
}

pub fn save_field(field: &ScalarField, path: &Path) -> Result<(), CliError> {
    Ok(write_field(field, create(path)?)?)
}

pub fn save_obj(tri: &TriMesh, path: &Path) -> Result<(), CliError> {
    Ok(write_obj(tri, create(path)?)?)
}

/// Reads the triangles of an OBJ file, merging all of its objects into one mesh.
pub fn load_obj(path: &Path) -> Result<TriMesh, CliError> {
    let opts = tobj::LoadOptions {
        triangulate: true,
        single_index: true,
        ..Default::default()
    };
    let (models, _) =
        tobj::load_obj(path, &opts).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for m in models {
        let base = vertices.len() as u32;
        vertices.extend(m.mesh.positions.chunks_exact(3).map(|p| Vec3::new(p[0], p[1], p[2])));
        triangles.extend(m.mesh.indices.chunks_exact(3).map(|t| [base + t[0], base + t[1], base + t[2]]));
    }
    Ok(TriMesh::from_raw(vertices, triangles))
}

pub fn save_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn save_normal_png(nm: &NormalMap, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(write_normal_png(nm, path)?)
}

pub fn save_depth_png(nm: &NormalMap, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    encode_depth_png(nm).save(path)?;
    Ok(())
}

pub fn load_depth_png(path: &Path) -> Result<Vec<Option<f64>>, CliError> {
    let img = image::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    decode_depth_png(&img).map_err(|e| context(path, e))
}

/// Reads a normal-map PNG and, when given, attaches the depth stored in a matching 16-bit
/// depth PNG.
pub fn load_target(normals: &Path, depth: Option<&Path>) -> Result<NormalMap, CliError> {
    let mut nm = read_normal_png(normals).map_err(|e| context(normals, e))?;
    if let Some(dp) = depth {
        let d = load_depth_png(dp)?;
        if d.len() != nm.pixels().len() {
            return Err(CliError::Validation(format!(
                "{}: depth image size does not match {}",
                dp.display(),
                normals.display()
            )));
        }
        for (p, z) in nm.pixels_mut().iter_mut().zip(d) {
            if let Some(f) = p {
                f.depth = z;
            }
        }
    }
    Ok(nm)
}
