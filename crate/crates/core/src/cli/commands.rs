use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ArgMatches;

use super::artifacts::{graph_id, read_cloud, read_graph, read_skeleton, Manifest, SkeletonArtifact};
use super::RunConfig;
use crate::embed::{
    clustering_accuracy, dendrogram_csv, distance_matrix, embeddings_csv, graph_spectrum, hierarchical_cluster,
    infograph_train, inter_intra, kmeanspp, majority_label, matrix_csv,
};
use crate::error::{Error, Result};
use crate::geometry::{
    chamfer_distance, estimate_normals, hausdorff_distance, normalize_to_unit_cube, synth_shape, weighted_sample,
    write_point_cloud_xyz, CdMode, NormalizationTransform, Point3, PointCloud, SynthShapeSpec,
};
use crate::links::build_mesh;
use crate::mat_oracle::{
    interior_grid, medial_points, reconstruct_volume, simplify_mat, vol_pct, write_medial_points, MedialPoint,
};
use crate::skeleton::{self, sample_sphere_points, write_balls, SkeletonBall};
use crate::skelgraph::{
    branches, default_min_branch_len, len_pct, neuron_length, num_pct, Morphometry, SkeletonGraph, MORPHOMETRY_HEADER,
};

pub(super) fn dispatch(name: &str, m: &ArgMatches, cfg: &RunConfig) -> Result<()> {
    let mut manifest = Manifest::new(name, cfg);
    match name {
        "synth" => synth(&mut manifest, cfg)?,
        "sample" => sample(&mut manifest, &path(m, "input"), cfg)?,
        "normals" => normals(&mut manifest, &path(m, "input"), cfg)?,
        "skeletonize" => skeletonize(&mut manifest, &path(m, "input"), cfg)?,
        "links" => links(
            &mut manifest,
            &path(m, "skeleton"),
            opt_path(m, "surface").as_deref(),
            cfg,
        )?,
        "analyze" => analyze(&mut manifest, &paths(m, "graphs"), cfg)?,
        "embed" => embed(&mut manifest, &paths(m, "graphs"), cfg)?,
        "cluster" => cluster(
            &mut manifest,
            &path(m, "embeddings"),
            opt_path(m, "labels").as_deref(),
            cfg,
        )?,
        "metrics" => metrics(
            &mut manifest,
            &path(m, "computed"),
            &path(m, "reference"),
            opt_path(m, "surface").as_deref(),
            cfg,
        )?,
        "oracle" => oracle(&mut manifest, &path(m, "input"), &path(m, "skeleton"), cfg)?,
        other => return Err(Error::Config(format!("unknown subcommand '{other}'"))),
    }
    let at = manifest.finish(cfg)?;
    println!("manifest {}", at.display());
    Ok(())
}

fn path(m: &ArgMatches, id: &str) -> PathBuf {
    PathBuf::from(m.get_one::<String>(id).expect("required by the parser"))
}

fn opt_path(m: &ArgMatches, id: &str) -> Option<PathBuf> {
    m.get_one::<String>(id).map(PathBuf::from)
}

fn paths(m: &ArgMatches, id: &str) -> Vec<PathBuf> {
    m.get_many::<String>(id)
        .into_iter()
        .flatten()
        .map(PathBuf::from)
        .collect()
}

/// Gnuplot-ready `index value` lines.
fn trace_dat(label: &str, values: &[f64]) -> String {
    let mut s = format!("# iteration {label}\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(s, "{i} {v:.9e}").expect("writing to a String");
    }
    s
}

fn metric_rows(rows: &[(&str, Option<f64>)]) -> String {
    let mut s = String::from("metric,value\n");
    for (name, v) in rows {
        match v {
            Some(v) => writeln!(s, "{name},{v:.9}"),
            None => writeln!(s, "{name},NA"),
        }
        .expect("writing to a String");
    }
    s
}

fn with_normals(cloud: PointCloud, cfg: &RunConfig) -> Result<PointCloud> {
    if cloud.normals().is_some() {
        return Ok(cloud);
    }
    log::warn!("input has no normals; estimating them with k = {}", cfg.normals_k);
    estimate_normals(&cloud, cfg.normals_k)
}

fn synth(m: &mut Manifest, cfg: &RunConfig) -> Result<()> {
    let spec = SynthShapeSpec::new(cfg.shape()?, cfg.synth_count);
    let cloud = synth_shape(&spec, cfg.synth_seed)?;
    m.write("surface.xyz", &write_point_cloud_xyz(&cloud))?;
    Ok(())
}

fn sample(m: &mut Manifest, input: &Path, cfg: &RunConfig) -> Result<()> {
    let cloud = read_cloud(m, input, cfg)?;
    let out = weighted_sample(&cloud, cfg.sample_m, cfg.sample_seed)?;
    m.write("sampled.xyz", &write_point_cloud_xyz(&out))?;
    Ok(())
}

fn normals(m: &mut Manifest, input: &Path, cfg: &RunConfig) -> Result<()> {
    let cloud = read_cloud(m, input, cfg)?;
    let out = estimate_normals(&cloud, cfg.normals_k)?;
    m.write("normals.xyz", &write_point_cloud_xyz(&out))?;
    Ok(())
}

fn skeletonize(m: &mut Manifest, input: &Path, cfg: &RunConfig) -> Result<()> {
    let cloud = with_normals(read_cloud(m, input, cfg)?, cfg)?;
    let res = skeleton::skeletonize(&cloud, &cfg.skeleton())?;
    m.write("skeleton.txt", &write_balls(&res.balls))?;
    m.write("loss_trace.dat", &trace_dat("loss", &res.loss_trace))?;
    if cfg.write_weights {
        m.write("weights.csv", &res.weights.to_csv())?;
    }
    Ok(())
}

fn links(m: &mut Manifest, skeleton: &Path, surface: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let balls = read_skeleton(m, skeleton)?.balls;
    let cloud = surface.map(|p| read_cloud(m, p, cfg)).transpose()?;
    let mesh = build_mesh(&balls, cloud.as_ref(), None, &cfg.links()?)?;
    m.write("mesh.txt", &mesh.to_text())?;
    Ok(())
}

fn min_branch_len(g: &SkeletonGraph, cfg: &RunConfig) -> f64 {
    if cfg.min_branch_len < 0.0 {
        default_min_branch_len(g)
    } else {
        cfg.min_branch_len
    }
}

fn analyze(m: &mut Manifest, inputs: &[PathBuf], cfg: &RunConfig) -> Result<()> {
    let mut csv = format!("{MORPHOMETRY_HEADER}\n");
    for p in inputs {
        let g = read_graph(m, p)?;
        let row = Morphometry::measure(&graph_id(p), &g, min_branch_len(&g, cfg), cfg.path_budget)?;
        if !row.exact {
            log::warn!("{}: search budget exhausted, values are best-so-far", p.display());
        }
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    m.write("morphometry.csv", &csv)?;
    Ok(())
}

fn embed(m: &mut Manifest, inputs: &[PathBuf], cfg: &RunConfig) -> Result<()> {
    let ecfg = cfg.embed()?;
    let mut ids = Vec::with_capacity(inputs.len());
    let mut graphs = Vec::with_capacity(inputs.len());
    for p in inputs {
        graphs.push(read_graph(m, p)?);
        ids.push(graph_id(p));
    }
    let res = infograph_train(&graphs, &ecfg)?;
    let spectra = graphs
        .iter()
        .map(|g| graph_spectrum(g, cfg.spectrum_dim))
        .collect::<Result<Vec<_>>>()?;
    m.write("embeddings.csv", &embeddings_csv(&ids, &res.embeddings))?;
    m.write("spectrum.csv", &embeddings_csv(&ids, &spectra))?;
    m.write("objective_trace.dat", &trace_dat("mi", &res.objective_trace))?;
    Ok(())
}

/// `graph_id,v0,v1,...` with one header line.
fn parse_embeddings(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or("").trim().to_string();
        let values: Vec<f64> = fields
            .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: "expected finite numbers after the graph id".into(),
            })?;
        if rows.first().is_some_and(|r: &Vec<f64>| r.len() != values.len()) || values.is_empty() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "rows must share one non-zero width".into(),
            });
        }
        ids.push(id);
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no embedding rows".into()));
    }
    Ok((ids, rows))
}

/// `graph_id,label` lines, optional header; labels become indices in
/// sorted order of their names.
fn parse_labels(text: &str, ids: &[String]) -> Result<(Vec<String>, Vec<usize>)> {
    let mut by_id = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == "graph_id,label") {
            continue;
        }
        let (id, label) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: "expected 'graph_id,label'".into(),
        })?;
        by_id.insert(id.trim().to_string(), label.trim().to_string());
    }
    let names: Vec<String> = by_id
        .values()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels = ids
        .iter()
        .map(|id| {
            let name = by_id
                .get(id)
                .ok_or_else(|| Error::Validation(format!("no label for graph '{id}'")))?;
            Ok(names.iter().position(|n| n == name).expect("collected above"))
        })
        .collect::<Result<_>>()?;
    Ok((names, labels))
}

fn cluster(m: &mut Manifest, input: &Path, labels: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let (ids, vectors) = parse_embeddings(&m.read(input)?)?;
    let km = kmeanspp(&vectors, cfg.cluster_k, cfg.cluster_seed, cfg.kmeans_iters)?;
    let matrix = distance_matrix(&vectors)?;
    let merges = hierarchical_cluster(&matrix, cfg.linkage)?;
    let truth = labels
        .map(|p| m.read(p).and_then(|t| parse_labels(&t, &ids)))
        .transpose()?;

    let mut csv = String::from("graph_id,cluster");
    let mut summary = vec![("inertia", Some(km.inertia()))];
    match &truth {
        Some((names, idx)) => {
            let mapping = majority_label(&km.assignments, idx, cfg.cluster_k)?;
            csv.push_str(",label,predicted\n");
            for ((id, &a), &l) in ids.iter().zip(&km.assignments).zip(idx) {
                let predicted = mapping[a].map_or("NA", |p| names[p].as_str());
                writeln!(csv, "{id},{a},{},{predicted}", names[l]).expect("writing to a String");
            }
            summary.push(("accuracy", Some(clustering_accuracy(&km.assignments, idx, &mapping))));
            let (classes, means) = inter_intra(&matrix, idx)?;
            let mut s = String::from("class");
            for &c in &classes {
                write!(s, ",{}", names[c]).expect("writing to a String");
            }
            s.push('\n');
            for (&c, row) in classes.iter().zip(&means) {
                s.push_str(&names[c]);
                for v in row {
                    match v {
                        Some(v) => write!(s, ",{v:.9}"),
                        None => write!(s, ",NA"),
                    }
                    .expect("writing to a String");
                }
                s.push('\n');
            }
            m.write("inter_intra.csv", &s)?;
        }
        None => {
            csv.push('\n');
            for (id, a) in ids.iter().zip(&km.assignments) {
                writeln!(csv, "{id},{a}").expect("writing to a String");
            }
        }
    }
    m.write("clusters.csv", &csv)?;
    m.write("distance_matrix.csv", &matrix_csv(&ids, &matrix))?;
    m.write("dendrogram.csv", &dendrogram_csv(&merges))?;
    m.write("inertia_trace.dat", &trace_dat("inertia", &km.inertia_trace))?;
    m.write("cluster_summary.csv", &metric_rows(&summary))?;
    Ok(())
}

/// Sphere samples of the balls that lie on the boundary of their union.
pub(crate) fn union_surface(balls: &[SkeletonBall], k: usize) -> Result<Vec<Point3>> {
    let cloud = sample_sphere_points(balls, k)?;
    Ok(cloud
        .points()
        .iter()
        .enumerate()
        .filter(|&(i, &p)| {
            let own = i / k;
            !balls
                .iter()
                .enumerate()
                .any(|(j, b)| j != own && p.distance(b.center) < b.radius - 1e-9)
        })
        .map(|(_, &p)| p)
        .collect())
}

fn ball_extent(balls: &[SkeletonBall]) -> Vec<Point3> {
    balls
        .iter()
        .flat_map(|b| {
            let r = Point3::new(b.radius, b.radius, b.radius);
            [b.center - r, b.center + r]
        })
        .collect()
}

fn transform_balls(balls: &[SkeletonBall], tr: &NormalizationTransform) -> Vec<SkeletonBall> {
    balls
        .iter()
        .map(|b| SkeletonBall::new(tr.apply(b.center), tr.apply_length(b.radius)))
        .collect()
}

fn centers(balls: &[SkeletonBall]) -> Vec<Point3> {
    balls.iter().map(|b| b.center).collect()
}

/// CD-skel, HD-skel, CD-recon, HD-recon and vol-pct between two ball sets in
/// common normalized coordinates.
pub(crate) fn skeleton_metrics(
    computed: &[SkeletonBall],
    reference: &[SkeletonBall],
    surface: Option<&[Point3]>,
    cfg: &RunConfig,
) -> Result<Vec<(&'static str, Option<f64>)>> {
    let rc = union_surface(computed, cfg.recon_samples)?;
    let target = match surface {
        Some(s) => s.to_vec(),
        None => union_surface(reference, cfg.recon_samples)?,
    };
    let (cc, cr) = (centers(computed), centers(reference));
    let v_computed = reconstruct_volume(computed, cfg.volume_resolution)?;
    let v_reference = reconstruct_volume(reference, cfg.volume_resolution)?;
    Ok(vec![
        ("cd_skel", Some(chamfer_distance(&cc, &cr, CdMode::Mean)?)),
        ("hd_skel", Some(hausdorff_distance(&cc, &cr)?)),
        ("cd_recon", Some(chamfer_distance(&rc, &target, CdMode::Mean)?)),
        ("hd_recon", Some(hausdorff_distance(&rc, &target)?)),
        ("vol_pct", Some(vol_pct(v_computed, v_reference)?)),
    ])
}

/// Equal counts give 0 even for a zero reference; other zero-reference
/// cases are undefined.
fn count_pct(computed: usize, reference: usize) -> Result<Option<f64>> {
    if computed == reference {
        return Ok(Some(0.0));
    }
    if reference == 0 {
        log::warn!("num_pct undefined: reference has no branches, computed has {computed}");
        return Ok(None);
    }
    num_pct(computed, reference).map(Some)
}

fn graph_metrics(
    computed: &SkeletonGraph,
    reference: &SkeletonGraph,
    cfg: &RunConfig,
) -> Result<[(&'static str, Option<f64>); 2]> {
    let (lc, _) = neuron_length(computed, cfg.path_budget)?;
    let (lr, _) = neuron_length(reference, cfg.path_budget)?;
    let bc = branches(computed, min_branch_len(computed, cfg), cfg.path_budget)?.count;
    let br = branches(reference, min_branch_len(reference, cfg), cfg.path_budget)?.count;
    let len = if lc == lr {
        Some(0.0)
    } else if lr > 0.0 {
        Some(len_pct(lc, lr)?)
    } else {
        log::warn!("len_pct undefined: reference length is zero");
        None
    };
    Ok([("len_pct", len), ("num_pct", count_pct(bc, br)?)])
}

fn metrics(m: &mut Manifest, computed: &Path, reference: &Path, surface: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let c: SkeletonArtifact = read_skeleton(m, computed)?;
    let r: SkeletonArtifact = read_skeleton(m, reference)?;
    let cloud = surface.map(|p| read_cloud(m, p, cfg)).transpose()?;
    let tr = match &cloud {
        Some(s) => NormalizationTransform::fit(s.points())?,
        None => NormalizationTransform::fit(&ball_extent(&r.balls))?,
    };
    let unit_surface: Option<Vec<Point3>> = cloud.map(|s| s.points().iter().map(|&p| tr.apply(p)).collect());
    let mut rows = skeleton_metrics(
        &transform_balls(&c.balls, &tr),
        &transform_balls(&r.balls, &tr),
        unit_surface.as_deref(),
        cfg,
    )?;
    match (&c.graph, &r.graph) {
        (Some(gc), Some(gr)) => rows.extend(graph_metrics(gc, gr, cfg)?),
        _ => {
            log::warn!("len_pct and num_pct need linked skeletons on both sides");
            rows.extend([("len_pct", None), ("num_pct", None)]);
        }
    }
    m.write("metrics.csv", &metric_rows(&rows))?;
    Ok(())
}

fn oracle(m: &mut Manifest, input: &Path, skeleton: &Path, cfg: &RunConfig) -> Result<()> {
    let cloud = with_normals(read_cloud(m, input, cfg)?, cfg)?;
    let balls = read_skeleton(m, skeleton)?.balls;
    let (unit, tr) = normalize_to_unit_cube(&cloud)?;
    let grid = interior_grid(&unit, cfg.oracle_resolution)?;
    let medial = medial_points(&grid, &unit, cfg.oracle_eps, cfg.oracle_min_angle)?;
    let simplified = simplify_mat(&medial, cfg.oracle_angle_floor)?;
    if simplified.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no medial points survive angle_floor {} at resolution {}",
            cfg.oracle_angle_floor, cfg.oracle_resolution
        )));
    }
    let exported: Vec<MedialPoint> = simplified
        .iter()
        .map(|p| MedialPoint {
            position: tr.invert(p.position),
            radius: p.radius / tr.scale,
            separation_angle: p.separation_angle,
        })
        .collect();
    m.write("medial.txt", &write_medial_points(&exported))?;

    let unit_balls = transform_balls(&balls, &tr);
    let skel = centers(&unit_balls);
    let mat: Vec<Point3> = simplified.iter().map(|p| p.position).collect();
    let v_gt = grid.n_inside() as f64 * grid.spacing.powi(3);
    let v_recon = reconstruct_volume(&unit_balls, cfg.volume_resolution)?;
    let rows = [
        ("n_medial", Some(medial.len() as f64)),
        ("n_simplified", Some(simplified.len() as f64)),
        ("cd_skel", Some(chamfer_distance(&skel, &mat, CdMode::Mean)?)),
        ("hd_skel", Some(hausdorff_distance(&skel, &mat)?)),
        ("grid_spacing", Some(grid.spacing)),
        ("volume_gt", Some(v_gt)),
        ("volume_recon", Some(v_recon)),
        ("vol_pct", Some(vol_pct(v_recon, v_gt)?)),
    ];
    m.write("oracle.csv", &metric_rows(&rows))?;
    Ok(())
}
