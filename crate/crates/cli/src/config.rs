use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tetsdf::energy::EnergyConfig;
use tetsdf::mesh::TemplateShape;
use tetsdf::optim::FitConfig;
use tetsdf::render::Camera;
use tetsdf::Vec3;

use crate::error::CliError;

/// Band-mesh grid parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub cell_size: f64,
    pub inflation: f64,
}

/// Where the initial field comes from. Defaults to the template's own distance field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Initial {
    File { field: PathBuf },
    Shape(TemplateShape),
}

/// A camera given inline, by look-at parameters, or as a JSON/TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CameraSpec {
    File(PathBuf),
    LookAt(LookAt),
    Explicit(Camera),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookAt {
    pub eye: [f64; 3],
    #[serde(default)]
    pub target: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    pub near: f64,
    pub far: f64,
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

/// One training or evaluation view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub camera: CameraSpec,
    /// Normal-map PNG.
    pub target: PathBuf,
    /// Optional 16-bit depth PNG aligned with `target`.
    pub depth: Option<PathBuf>,
}

/// Everything a batch run needs. Paths are relative to the working directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub template: TemplateShape,
    pub grid: Grid,
    /// Precomputed tet mesh; built from `template` and `grid` when absent.
    pub mesh: Option<PathBuf>,
    pub initial: Option<Initial>,
    pub skeleton: Option<PathBuf>,
    pub pose: Option<PathBuf>,
    #[serde(default)]
    pub views: Vec<ViewSpec>,
    /// Overrides `fit.energy` when present.
    pub energy: Option<EnergyConfig>,
    #[serde(default)]
    pub fit: FitConfig,
    /// Write a field checkpoint every this many iterations; 0 disables.
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl SceneConfig {
    /// Parses a TOML scene. Syntax and schema errors carry the line and column.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let mut cfg: SceneConfig =
            toml::from_str(text).map_err(|e| CliError::Validation(format!("{}: {e}", origin.display())))?;
        if let Some(energy) = cfg.energy.take() {
            cfg.fit.energy = energy;
        }
        Ok(cfg)
    }

    pub fn load(workdir: &Path, path: &Path) -> Result<Self, CliError> {
        let full = workdir.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", full.display())))?;
        Self::parse(&text, &full)
    }

    /// Checks parameters and that every referenced file exists, without loading anything
    /// large. `fit` selects whether views and the fit settings are required.
    pub fn validate(&self, workdir: &Path, fit: bool) -> Result<(), CliError> {
        self.template.validate()?;
        if !(self.grid.cell_size > 0.0) || !(self.grid.inflation >= 0.0) {
            return Err(CliError::Validation("grid needs cell_size > 0 and inflation >= 0".into()));
        }
        if self.skeleton.is_some() != self.pose.is_some() {
            return Err(CliError::Validation("skeleton and pose must be given together".into()));
        }
        let mut files: Vec<&Path> = Vec::new();
        files.extend(self.mesh.as_deref());
        files.extend(self.skeleton.as_deref());
        files.extend(self.pose.as_deref());
        if let Some(Initial::File { field }) = &self.initial {
            files.push(field);
        }
        if fit {
            if self.views.is_empty() {
                return Err(CliError::Validation("the scene has no views".into()));
            }
            let check = FitConfig {
                iterations: self.fit.iterations.max(1),
                ..self.fit.clone()
            };
            check.validate()?;
            for v in &self.views {
                files.push(&v.target);
                files.extend(v.depth.as_deref());
                if let CameraSpec::File(p) = &v.camera {
                    files.push(p);
                }
            }
        }
        for f in files {
            let full = workdir.join(f);
            if !full.is_file() {
                return Err(CliError::Validation(format!("missing file {}", full.display())));
            }
        }
        Ok(())
    }
}

impl CameraSpec {
    pub fn resolve(&self, workdir: &Path) -> Result<Camera, CliError> {
        match self {
            Self::File(p) => load_camera(&workdir.join(p)),
            Self::LookAt(l) => Ok(Camera::look_at(
                Vec3::from(l.eye),
                Vec3::from(l.target),
                Vec3::from(l.up),
                l.near,
                l.far,
                l.fov,
                l.width,
                l.height,
            )?),
            Self::Explicit(c) => Ok(c.clone()),
        }
    }
}

/// Reads a camera from JSON, or from TOML when the extension is `.toml`. Either file may
/// hold explicit extrinsics or look-at parameters.
pub fn load_camera(path: &Path) -> Result<Camera, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let parsed: CameraSpec = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    };
    match parsed {
        CameraSpec::File(_) => Err(CliError::Validation(format!("{}: camera file refers to another file", path.display()))),
        other => other.resolve(Path::new(".")),
    }
}
