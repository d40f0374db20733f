//! Command-line front end. Every subcommand reads its declared inputs,
//! writes its outputs atomically into the output directory and records a
//! manifest with the config hash, seeds and input digests.

mod artifacts;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

pub use artifacts::{load_skeleton, Manifest, SkeletonArtifact};
pub use config::{ConfigValue, RunConfig, OUTPUT_DIR_ENV};

use crate::error::{Error, ErrorClass, Result};

const SUBCOMMANDS: [(&str, &str); 10] = [
    ("synth", "Sample a synthetic shape with normals"),
    ("sample", "Subsample a point cloud to sample_m well-spread points"),
    ("normals", "Estimate oriented normals"),
    ("skeletonize", "Fit skeleton balls to a surface point cloud"),
    ("links", "Connect skeleton balls into a skeleton mesh"),
    ("analyze", "Neuron length and branch count per skeleton graph"),
    ("embed", "Graph embeddings and spectra for a set of skeleton graphs"),
    ("cluster", "k-means and hierarchical clustering of embeddings"),
    ("metrics", "Compare a computed skeleton against a reference"),
    ("oracle", "Brute-force medial axis compared with a fitted skeleton"),
];

fn input_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).required(true).value_name("PATH").help(help)
}

fn flag_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("PATH").help(help)
}

pub fn command() -> Command {
    let mut cmd = Command::new("neuromorph")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Skeleton meshes, skeleton graphs and morphometry from surface point clouds")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .global(true)
                .value_name("FILE")
                .help("key = value run configuration"),
        );
    for (key, default) in RunConfig::default().entries() {
        let shown = if default.is_empty() { "empty".to_string() } else { default };
        let mut arg = Arg::new(key)
            .long(key)
            .global(true)
            .value_name("VALUE")
            .action(ArgAction::Set)
            .help(format!("[default: {shown}]"))
            .help_heading("Config overrides");
        arg = match key {
            "synth_kind" => arg.visible_alias("kind"),
            "synth_count" => arg.visible_alias("count"),
            _ => arg,
        };
        cmd = cmd.arg(arg);
    }
    for (name, about) in SUBCOMMANDS {
        let sub = Command::new(name).about(about);
        let sub = match name {
            "sample" | "normals" | "skeletonize" => sub.arg(input_arg("input", "Point cloud (xyz, ply or off)")),
            "links" => sub
                .arg(input_arg("skeleton", "Skeleton balls, one 'x y z r' per line"))
                .arg(flag_arg("surface", "Surface cloud for the node features")),
            "analyze" | "embed" => sub.arg(
                Arg::new("graphs")
                    .required(true)
                    .num_args(1..)
                    .value_name("GRAPH")
                    .help("Skeleton meshes or SWC files"),
            ),
            "cluster" => sub
                .arg(input_arg("embeddings", "Embedding CSV with a graph_id column"))
                .arg(flag_arg("labels", "graph_id,label CSV for majority-vote accuracy")),
            "metrics" => sub
                .arg(flag_arg("computed", "Computed skeleton").required(true))
                .arg(flag_arg("reference", "Reference skeleton").required(true))
                .arg(flag_arg("surface", "Surface cloud for the reconstruction distances")),
            "oracle" => sub
                .arg(input_arg("input", "Surface point cloud"))
                .arg(flag_arg("skeleton", "Skeleton to compare").required(true)),
            _ => sub,
        };
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Config file, then the output-directory environment variable, then flags.
fn resolve_config(m: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => RunConfig::from_file(&PathBuf::from(path))?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.output_dir = dir.to_string_lossy().into_owned();
    }
    for &key in RunConfig::KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate().map_err(|e| match e {
        Error::Parameter(m) => Error::Config(m),
        other => other,
    })?;
    Ok(cfg)
}

/// Parses `args` and runs one subcommand.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = command()
        .try_get_matches_from(args)
        .map_err(|e| Error::Config(clap_message(&e)))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cfg = resolve_config(sub)?;
    commands::dispatch(name, sub, &cfg)
}

fn clap_message(e: &clap::Error) -> String {
    let text = e.to_string();
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments");
    first.trim_start_matches("error: ").to_string()
}

/// One-line machine-parsable error report.
pub fn error_line(e: &Error) -> String {
    let message = e.to_string().replace('\n', " ");
    format!("error code={}: {message}", e.class().tag())
}

/// Runs the CLI and maps the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<T> = args.into_iter().collect();
    if let Err(e) = command().try_get_matches_from(args.clone()) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            return 0;
        }
        if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
            let _ = e.print();
            return ErrorClass::Config.exit_code();
        }
    }
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.class().exit_code()
        }
    }
}
