//! Normal-map rendering: camera model, scanline rasterizer, ray-cast reference renderer,
//! gradient backpropagation and PNG encoding.

mod backprop;
mod camera;
mod normal_map;
mod normals;
mod oracle;
mod png;
mod raster;
pub mod shapes;

pub use backprop::backprop_pixels;
pub use camera::{project_via_matrices, Camera};
pub use normal_map::{Fragment, FragmentSource, NormalMap};
pub use normals::{area_weighted_normals, vertex_normals};
pub use oracle::{raytrace_oracle, raytrace_oracle_unnormalized};
pub use png::{decode_depth_png, decode_png, encode_depth_png, encode_png, read_normal_png, write_normal_png};
pub use raster::{area_2d, rasterize, rasterize_coverage, rasterize_ids, rasterize_with_normals};
