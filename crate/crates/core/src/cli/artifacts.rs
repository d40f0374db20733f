use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{parse_point_cloud, CloudFormat, PointCloud};
use crate::links::SkeletonMesh;
use crate::skeleton::{parse_balls, SkeletonBall};
use crate::skelgraph::{from_mesh, parse_swc, SkeletonGraph};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes through a sibling temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(contents)?;
            f.sync_all()
        })
        .and_then(|()| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Inputs read and outputs written by one subcommand run.
#[derive(Debug)]
pub struct Manifest {
    subcommand: String,
    out_dir: PathBuf,
    inputs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str, cfg: &RunConfig) -> Self {
        Manifest {
            subcommand: subcommand.to_string(),
            out_dir: PathBuf::from(&cfg.output_dir),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push((path.display().to_string(), sha256_hex(&bytes)));
        String::from_utf8(bytes).map_err(|_| Error::Parse {
            line: 0,
            message: format!("{} is not UTF-8 text", path.display()),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.outputs.push((name.to_string(), sha256_hex(contents.as_bytes())));
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        let files = |v: &[(String, String)]| -> Vec<Value> {
            v.iter().map(|(p, d)| json!({ "path": p, "sha256": d })).collect()
        };
        let config: Map<String, Value> = cfg
            .entries()
            .into_iter()
            .filter(|(k, _)| *k != "output_dir")
            .map(|(k, v)| (k.to_string(), Value::String(v)))
            .collect();
        let seeds: Map<String, Value> = cfg
            .seeds()
            .into_iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        json!({
            "subcommand": self.subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "config_sha256": cfg.hash(),
            "config": config,
            "seeds": seeds,
            "inputs": files(&self.inputs),
            "outputs": files(&self.outputs),
        })
    }

    /// Writes `<subcommand>.manifest.json` next to the outputs.
    pub fn finish(self, cfg: &RunConfig) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(&self.to_json(cfg)).expect("json values serialize");
        text.push('\n');
        let path = self.out_dir.join(format!("{}.manifest.json", self.subcommand));
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

pub(crate) fn cloud_format(path: &Path, setting: &str) -> Result<CloudFormat> {
    if setting == "auto" {
        Ok(CloudFormat::from_path(path).unwrap_or(CloudFormat::Xyz))
    } else {
        setting.parse().map_err(|e: Error| Error::Config(e.to_string()))
    }
}

pub(crate) fn read_cloud(m: &mut Manifest, path: &Path, cfg: &RunConfig) -> Result<PointCloud> {
    let format = cloud_format(path, &cfg.input_format)?;
    let text = m.read(path)?;
    parse_point_cloud(&text, format)
}

/// Balls with their graph when the artifact carries connectivity.
#[derive(Debug, Clone)]
pub struct SkeletonArtifact {
    pub balls: Vec<SkeletonBall>,
    pub graph: Option<SkeletonGraph>,
}

fn looks_like_mesh(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            f.len() == 2 && f.iter().all(|x| x.parse::<usize>().is_ok())
        })
        .unwrap_or(false)
}

/// SWC by extension, otherwise a skeleton mesh when the header is two
/// counts, otherwise plain `x y z r` balls.
pub fn load_skeleton(path: &Path, text: &str) -> Result<SkeletonArtifact> {
    let is_swc = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("swc"));
    if is_swc {
        let g = parse_swc(text)?;
        let balls = g
            .nodes()
            .iter()
            .map(|n| SkeletonBall::new(n.position, n.radius))
            .collect();
        return Ok(SkeletonArtifact { balls, graph: Some(g) });
    }
    if looks_like_mesh(text) {
        let mesh = SkeletonMesh::parse(text)?;
        let g = from_mesh(&mesh.balls, &mesh.adjacency)?;
        return Ok(SkeletonArtifact {
            balls: mesh.balls,
            graph: Some(g),
        });
    }
    Ok(SkeletonArtifact {
        balls: parse_balls(text)?,
        graph: None,
    })
}

pub(crate) fn read_skeleton(m: &mut Manifest, path: &Path) -> Result<SkeletonArtifact> {
    let text = m.read(path)?;
    load_skeleton(path, &text)
}

pub(crate) fn read_graph(m: &mut Manifest, path: &Path) -> Result<SkeletonGraph> {
    read_skeleton(m, path)?.graph.ok_or_else(|| {
        Error::Precondition(format!(
            "{} holds balls without links; run `links` first",
            path.display()
        ))
    })
}

/// File stem used as the graph id in CSV outputs.
pub(crate) fn graph_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().replace(',', "_"))
        .unwrap_or_else(|| path.display().to_string())
}
