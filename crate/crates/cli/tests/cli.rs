use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tetsdf::mesh::io::{read_field, read_tetmesh};
use tetsdf::mesh::{build_band_tetmesh, sample_exact_sdf, Capsule, TemplateShape};
use tetsdf::skinning::RigidTransform;
use tetsdf::Vec3;

const GOLDEN: &str = "tests/golden/sphere_normals.png";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Temporary working directory holding a copy of the fixtures.
fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&fixtures(), dir.path());
    dir
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dst = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &dst);
        } else {
            fs::copy(entry.path(), dst).unwrap();
        }
    }
}

fn run(wd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tetsdf"))
        .arg("--workdir")
        .arg(wd)
        .args(args)
        .output()
        .unwrap()
}

fn ok(wd: &Path, args: &[&str]) -> Value {
    let out = run(wd, args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn template(wd: &Path) {
    ok(wd, &["template", "--config", "sphere.toml"]);
}

fn render_targets(wd: &Path) {
    template(wd);
    for (v, depth) in [("a", true), ("b", false), ("c", false)] {
        let cam = format!("cams/{v}.json");
        let png = format!("targets/{v}.png");
        let dpng = format!("targets/{v}_depth.png");
        let mut args = vec!["render", "--mesh", "out/mesh.tet", "--field", "out/phi.field", "--camera", &cam, "--out", &png];
        if depth {
            args.extend(["--depth", dpng.as_str()]);
        }
        ok(wd, &args);
    }
}

/// Makes the fit start from the field the targets were rendered from.
fn start_from_template_field(wd: &Path) {
    let path = wd.join("fit.toml");
    let text = fs::read_to_string(&path).unwrap().replace(
        "[initial]\nkind = \"sphere\"\ncenter = [0.0, 0.0, 0.0]\nradius = 0.55",
        "[initial]\nfield = \"out/phi.field\"",
    );
    fs::write(&path, format!("mesh = \"out/mesh.tet\"\n{text}")).unwrap();
}

fn set_iterations(wd: &Path, n: usize, extra: &str) {
    let path = wd.join("fit.toml");
    let text = fs::read_to_string(&path).unwrap();
    let text = text.replace("iterations = 12", &format!("iterations = {n}\n{extra}"));
    fs::write(path, text).unwrap();
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn help_documents_every_subcommand() {
    let out = Command::new(env!("CARGO_BIN_EXE_tetsdf")).arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["template", "render", "fit", "eval", "gradcheck", "icp-refine", "prune", "--workdir", "--threads"] {
        assert!(text.contains(cmd), "missing {cmd} in help");
    }
}

#[test]
fn template_writes_mesh_and_field() {
    let wd = workdir();
    let counts = ok(wd.path(), &["template", "--config", "sphere.toml"]);
    for key in ["vertices", "tets", "edges"] {
        assert!(counts[key].as_u64().unwrap() > 0, "{key}");
    }
    assert!(wd.path().join("out/mesh.tet").is_file());
    assert!(wd.path().join("out/phi.field").is_file());
}

#[test]
fn malformed_toml_reports_the_line() {
    let wd = workdir();
    let path = wd.path().join("sphere.toml");
    let text = fs::read_to_string(&path).unwrap().replace("radius = 0.5", "radius = = 0.5");
    fs::write(&path, text).unwrap();
    let out = run(wd.path(), &["template", "--config", "sphere.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 6"), "{err}");
}

#[test]
fn capsule_files_round_trip_exactly() {
    let wd = workdir();
    let counts = ok(wd.path(), &["template", "--config", "capsule.toml"]);
    let shape = TemplateShape::Capsule(Capsule::new(Vec3::new(-0.4, 0.0, 0.0), Vec3::new(0.4, 0.1, 0.0), 0.3));
    let mesh = build_band_tetmesh(&shape, 0.12, 0.1).unwrap();
    let phi = sample_exact_sdf(&shape, &mesh);
    let back = read_tetmesh(fs::File::open(wd.path().join("capsule/mesh.tet")).unwrap()).unwrap();
    let back_phi = read_field(fs::File::open(wd.path().join("capsule/phi.field")).unwrap()).unwrap();
    assert_eq!(counts["tets"].as_u64().unwrap() as usize, mesh.num_tets());
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.tets(), mesh.tets());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(back_phi.values()), bits(phi.values()));
}

#[test]
fn sphere_render_matches_golden_image() {
    let wd = workdir();
    template(wd.path());
    ok(
        wd.path(),
        &["render", "--mesh", "out/mesh.tet", "--field", "out/phi.field", "--camera", "camera.json", "--out", "n.png", "--depth", "d.png"],
    );
    let produced = fs::read(wd.path().join("n.png")).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN);
    if std::env::var_os("TETSDF_BLESS").is_some() {
        fs::create_dir_all(golden.parent().unwrap()).unwrap();
        fs::write(&golden, &produced).unwrap();
    }
    assert_eq!(produced, fs::read(&golden).unwrap(), "render differs from {GOLDEN}");
    let depth = image::open(wd.path().join("d.png")).unwrap();
    assert!(matches!(depth, image::DynamicImage::ImageLuma16(_)));
}

#[test]
fn camera_facing_away_gives_black_image() {
    let wd = workdir();
    template(wd.path());
    let stats = ok(
        wd.path(),
        &["render", "--mesh", "out/mesh.tet", "--field", "out/phi.field", "--camera", "behind.json", "--out", "n.png"],
    );
    assert_eq!(stats["covered_pixels"], 0);
    let img = image::open(wd.path().join("n.png")).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (16, 16));
    assert!(img.pixels().all(|p| p.0 == [0, 0, 0]));
}

#[test]
fn oracle_flag_uses_ray_caster() {
    let wd = workdir();
    template(wd.path());
    let base = ["render", "--mesh", "out/mesh.tet", "--field", "out/phi.field", "--camera", "camera.json"];
    let r = ok(wd.path(), &[&base[..], &["--out", "r.png"]].concat());
    let o = ok(wd.path(), &[&base[..], &["--out", "o.png", "--oracle"]].concat());
    assert_eq!(r["renderer"], "raster");
    assert_eq!(o["renderer"], "oracle");
    let e = ok(wd.path(), &["eval", "--pred", "o.png", "--target", "r.png"]);
    assert!(e["e_normal"].as_f64().unwrap() < 1e-2, "{e}");
}

#[test]
fn eval_of_identical_images_is_zero() {
    let wd = workdir();
    render_targets(wd.path());
    let e = ok(
        wd.path(),
        &[
            "eval",
            "--pred",
            "targets/a.png",
            "--target",
            "targets/a.png",
            "--pred-depth",
            "targets/a_depth.png",
            "--target-depth",
            "targets/a_depth.png",
            "--camera",
            "cams/a.json",
        ],
    );
    assert_eq!(e["e_normal"], 0.0);
    assert_eq!(e["e_depth"], 0.0);
    let e = ok(wd.path(), &["eval", "--pred", "targets/a.png", "--target", "targets/b.png"]);
    assert!(e["e_normal"].as_f64().unwrap() > 0.0);
    assert!(e["e_depth"].is_null());
}

#[test]
fn missing_target_fails_before_any_output() {
    let wd = workdir();
    let out = run(wd.path(), &["fit", "--config", "fit.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing file"));
    assert!(!wd.path().join("fit").exists());
}

#[test]
fn zero_iterations_returns_the_input() {
    let wd = workdir();
    render_targets(wd.path());
    set_iterations(wd.path(), 0, "");
    start_from_template_field(wd.path());
    ok(wd.path(), &["fit", "--config", "fit.toml"]);
    assert_eq!(
        fs::read(wd.path().join("fit/phi.field")).unwrap(),
        fs::read(wd.path().join("out/phi.field")).unwrap()
    );
    let report: Value = serde_json::from_slice(&fs::read(wd.path().join("fit/report.json")).unwrap()).unwrap();
    assert_eq!(report["iterations"].as_array().unwrap().len(), 0);
    // the targets were rendered from this very field
    for m in report["view_metrics"].as_array().unwrap() {
        assert!(m["e_normal"].as_f64().unwrap() < 1e-4, "{m}");
    }
    // depth targets are 16-bit quantized
    assert!(report["view_metrics"][0]["e_depth"].as_f64().unwrap() < 1e-6);
}

#[test]
fn fit_writes_outputs_and_improves() {
    let wd = workdir();
    render_targets(wd.path());
    set_iterations(wd.path(), 12, "");
    fs::write(
        wd.path().join("fit.toml"),
        fs::read_to_string(wd.path().join("fit.toml")).unwrap().replace("output = \"fit\"", "output = \"fit\"\ncheckpoint_every = 5"),
    )
    .unwrap();
    let metrics = ok(wd.path(), &["fit", "--config", "fit.toml"]);
    let out = wd.path().join("fit");
    for f in ["fit.obj", "phi.field", "report.json", "loss.ndjson", "renders/view0.png", "renders/view2_depth.png", "checkpoints/phi_000005.field", "checkpoints/phi_000010.field"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let log = fs::read_to_string(out.join("loss.ndjson")).unwrap();
    assert_eq!(log.lines().count(), 12 * 8);
    let first: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(first["step"], 0);
    assert_eq!(first["term"], "total");

    let report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let iters = report["iterations"].as_array().unwrap();
    let normal = |r: &Value| r["normal"].as_f64().unwrap();
    assert!(normal(&iters[11]) < 0.5 * normal(&iters[0]), "{} -> {}", normal(&iters[0]), normal(&iters[11]));
    assert_eq!(metrics.as_array().unwrap().len(), 3);
    assert!(metrics[0]["e_depth"].is_number());
    assert!(metrics[1]["e_depth"].is_null());
}

#[test]
fn single_threaded_runs_are_bitwise_identical() {
    let wd = workdir();
    render_targets(wd.path());
    set_iterations(wd.path(), 4, "");
    ok(wd.path(), &["--threads", "1", "fit", "--config", "fit.toml", "--out", "run1"]);
    ok(wd.path(), &["--threads", "1", "fit", "--config", "fit.toml", "--out", "run2"]);
    let a = files_under(&wd.path().join("run1"));
    let b = files_under(&wd.path().join("run2"));
    assert_eq!(a.len(), b.len());
    assert!(a.len() >= 8);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn divergence_exits_with_partial_report() {
    let wd = workdir();
    render_targets(wd.path());
    set_iterations(wd.path(), 5, "divergence_limit = 1e-12");
    let out = run(wd.path(), &["fit", "--config", "fit.toml"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(wd.path().join("fit/report.json")).unwrap()).unwrap();
    assert_eq!(report["iterations"].as_array().unwrap().len(), 1);
    assert!(wd.path().join("fit/phi.field").is_file());
}

#[test]
fn gradcheck_passes_and_fails_on_threshold() {
    let wd = workdir();
    render_targets(wd.path());
    let res = ok(wd.path(), &["gradcheck", "--config", "fit.toml", "--samples", "30"]);
    assert!(res["max_rel_error"].as_f64().unwrap() <= 1e-4, "{res}");
    assert_eq!(res["pass"], true);
    let out = run(wd.path(), &["gradcheck", "--config", "fit.toml", "--samples", "30", "--threshold", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn icp_on_identical_meshes_gives_identity() {
    let wd = workdir();
    render_targets(wd.path());
    set_iterations(wd.path(), 0, "");
    start_from_template_field(wd.path());
    ok(wd.path(), &["fit", "--config", "fit.toml"]);
    let cams: Vec<Value> = ["a", "b"]
        .iter()
        .map(|v| serde_json::from_slice(&fs::read(wd.path().join(format!("cams/{v}.json"))).unwrap()).unwrap())
        .collect();
    // the explicit form, as refine output would write it
    let explicit: Vec<tetsdf::render::Camera> = cams
        .iter()
        .map(|c| {
            let e = &c["eye"];
            tetsdf::render::Camera::look_at(
                Vec3::new(e[0].as_f64().unwrap(), e[1].as_f64().unwrap(), e[2].as_f64().unwrap()),
                Vec3::zeros(),
                Vec3::y(),
                0.1,
                10.0,
                0.6,
                32,
                32,
            )
            .unwrap()
        })
        .collect();
    fs::write(wd.path().join("cams.json"), serde_json::to_string(&explicit).unwrap()).unwrap();
    let res = ok(
        wd.path(),
        &["icp-refine", "--cameras", "cams.json", "--meshes", "fit/fit.obj", "fit/fit.obj", "--out", "refined.json"],
    );
    for t in res["transforms"].as_array().unwrap() {
        let tr: RigidTransform = serde_json::from_value(t.clone()).unwrap();
        assert!((tr.rotation - RigidTransform::identity().rotation).norm() < 1e-9, "{t}");
        assert!(tr.translation.norm() < 1e-9, "{t}");
    }
    assert!(res["rms_history"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() < 1e-9));
    let refined: Vec<tetsdf::render::Camera> =
        serde_json::from_slice(&fs::read(wd.path().join("refined.json")).unwrap()).unwrap();
    assert_eq!(refined.len(), 2);
    assert!((refined[1].eye() - explicit[1].eye()).norm() < 1e-9);
}

#[test]
fn prune_against_own_render_keeps_everything() {
    let wd = workdir();
    render_targets(wd.path());
    set_iterations(wd.path(), 0, "");
    start_from_template_field(wd.path());
    ok(wd.path(), &["fit", "--config", "fit.toml"]);
    let res = ok(
        wd.path(),
        &["prune", "--mesh", "fit/fit.obj", "--camera", "cams/a.json", "--target", "targets/a.png", "--out", "pruned.obj"],
    );
    assert_eq!(res["triangles_in"], res["triangles_out"]);
    // an empty target rejects every visible triangle
    image::RgbImage::new(32, 32).save(wd.path().join("empty.png")).unwrap();
    let res = ok(
        wd.path(),
        &["prune", "--mesh", "fit/fit.obj", "--camera", "cams/a.json", "--target", "empty.png", "--out", "pruned.obj"],
    );
    assert!(res["triangles_out"].as_u64().unwrap() < res["triangles_in"].as_u64().unwrap());
    assert!(wd.path().join("pruned.obj").is_file());
}

#[test]
fn eight_view_sphere_scene_reaches_target_error() {
    let wd = workdir();
    let scene = wd.path().join("sphere8");
    ok(&scene, &["template", "--config", "truth.toml"]);
    for v in 0..8 {
        let cam = format!("cams/{v}.json");
        let png = format!("targets/{v}.png");
        ok(&scene, &["render", "--mesh", "truth/mesh.tet", "--field", "truth/phi.field", "--camera", &cam, "--out", &png]);
    }
    let metrics = ok(&scene, &["fit", "--config", "scene.toml"]);
    let values: Vec<f64> = metrics.as_array().unwrap().iter().map(|m| m["e_normal"].as_f64().unwrap()).collect();
    assert_eq!(values.len(), 8);
    let mean = values.iter().sum::<f64>() / 8.0;
    assert!(mean <= 0.01, "mean e_normal {mean}");
}
