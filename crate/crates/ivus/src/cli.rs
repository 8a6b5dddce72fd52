//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use erel_core::phantom::{generate_sequence, Artifact, PhantomSpec};

use crate::batch::{gold_paths, run_batch, BatchConfig, Mode, TAGS_FILE};
use crate::config::{phantom_from_kv, phantom_to_kv, Tunables};
use crate::contour_io::save_contour;
use crate::error::{IvusError, Result};
use crate::pgm::save_frame;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ivus", version, about = "Lumen and media segmentation of IVUS frames from nested extremal regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment frames; scores are added when --gold is given.
    Segment(RunArgs),
    /// Segment frames and score them against gold contours.
    Evaluate(RunArgs),
    /// Score every extracted region against gold and report the best ones.
    Bestcase(RunArgs),
    /// Write synthetic frames with ground-truth contours.
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// PGM files or directories of PGM files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory with `<frame>_lumen.txt` and `<frame>_media.txt`.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
    /// key=value file applied before the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<usize>,
    #[arg(long)]
    pub amin_frac: Option<f64>,
    #[arg(long)]
    pub amax_frac: Option<f64>,
    /// Seed pixel as x,y, or `center`.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub despeckle_radius: Option<usize>,
    #[arg(long)]
    pub ringdown_threshold: Option<u8>,
    #[arg(long)]
    pub no_ringdown: bool,
    #[arg(long)]
    pub min_peaks: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub zmin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub zmax: Option<f64>,
    #[arg(long)]
    pub mm_per_px: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write a JSON selection trace per frame.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub no_overlay: bool,
}

impl RunArgs {
    fn flag_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("amin_frac", self.amin_frac.map(|v| v.to_string()));
        push("amax_frac", self.amax_frac.map(|v| v.to_string()));
        push("seed", self.seed.clone());
        push("despeckle_radius", self.despeckle_radius.map(|v| v.to_string()));
        push("ringdown_threshold", self.ringdown_threshold.map(|v| v.to_string()));
        push("no_ringdown", self.no_ringdown.then(|| "true".to_string()));
        push("min_peaks", self.min_peaks.map(|v| v.to_string()));
        push("zmin", self.zmin.map(|v| v.to_string()));
        push("zmax", self.zmax.map(|v| v.to_string()));
        push("mm_per_px", self.mm_per_px.map(|v| v.to_string()));
        push("jobs", self.jobs.map(|v| v.to_string()));
        push("trace", self.trace.then(|| "true".to_string()));
        out
    }

    /// Defaults, then the config file, then explicit flags.
    pub fn tunables(&self) -> Result<Tunables> {
        let mut t = Tunables::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| IvusError::io(path, e))?;
            t.apply_config(&text)?;
        }
        for (k, v) in self.flag_pairs() {
            t.set(k, &v)?;
        }
        t.validate()?;
        Ok(t)
    }

    pub fn batch_config(&self, mode: Mode) -> Result<BatchConfig> {
        Ok(BatchConfig {
            inputs: self.inputs.clone(),
            gold: self.gold.clone(),
            out: self.out.clone(),
            tunables: self.tunables()?,
            mode,
            overlays: !self.no_overlay,
        })
    }
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(short, long)]
    pub out: PathBuf,
    /// key=value phantom spec; defaults are used without it.
    #[arg(long, conflicts_with = "randomized")]
    pub spec: Option<PathBuf>,
    /// Frames of one phantom with independent speckle.
    #[arg(long, default_value_t = 1)]
    pub frames: usize,
    /// Distinct random geometries, one frame each.
    #[arg(long)]
    pub randomized: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub base_seed: u64,
    /// Add a seeded acoustic shadow to randomized phantoms.
    #[arg(long, requires = "randomized")]
    pub shadow: bool,
}

fn artifact_tag(spec: &PhantomSpec) -> String {
    let mut kinds: Vec<&str> = spec
        .artifacts
        .iter()
        .map(|a| match a {
            Artifact::Shadow { .. } => "shadow",
            Artifact::Bifurcation { .. } => "bifurcation",
            Artifact::RingDown { .. } => "ringdown",
        })
        .collect();
    kinds.sort_unstable();
    kinds.dedup();
    if kinds.is_empty() {
        "none".to_string()
    } else {
        kinds.join("+")
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| IvusError::io(path, e))
}

/// Writes frames to `out`, ground truth, tags and specs to `out/gold`.
/// Returns the frame names.
pub fn write_phantoms(args: &PhantomArgs) -> Result<Vec<String>> {
    if args.frames == 0 {
        return Err(IvusError::Config("--frames must be at least 1".to_string()));
    }
    let specs: Vec<(String, PhantomSpec, usize)> = match args.randomized {
        Some(0) => return Err(IvusError::Config("--randomized must be at least 1".to_string())),
        Some(n) => (0..n as u64)
            .map(|i| {
                let seed = args.base_seed + i;
                let spec = if args.shadow { PhantomSpec::randomized_shadow(seed) } else { PhantomSpec::randomized(seed) };
                (format!("phantom_{i:03}"), spec, 1)
            })
            .collect(),
        None => {
            let spec = match &args.spec {
                Some(path) => phantom_from_kv(&fs::read_to_string(path).map_err(|e| IvusError::io(path, e))?)?,
                None => PhantomSpec::default(),
            };
            vec![("frame".to_string(), spec, args.frames)]
        }
    };
    let gold = args.out.join("gold");
    fs::create_dir_all(&gold).map_err(|e| IvusError::io(&gold, e))?;
    let mut names = Vec::new();
    let mut tags = String::new();
    for (base, spec, count) in &specs {
        let (seq, gt) = generate_sequence(spec, *count)?;
        write_text(&gold.join(format!("{base}_spec.txt")), &phantom_to_kv(spec))?;
        for (i, frame) in seq.frames().iter().enumerate() {
            let name = if args.randomized.is_some() { base.clone() } else { format!("{base}_{i:03}") };
            save_frame(&args.out.join(format!("{name}.pgm")), frame)?;
            let (l, m) = gold_paths(&gold, &name);
            save_contour(&l, &gt.lumen_contour)?;
            save_contour(&m, &gt.media_contour)?;
            tags.push_str(&format!("{name} {}\n", artifact_tag(spec)));
            names.push(name);
        }
    }
    write_text(&gold.join(TAGS_FILE), &tags)?;
    Ok(names)
}

fn exit_for(e: &IvusError) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_FATAL
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code. Usage errors count as configuration errors.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Phantom(args) => write_phantoms(args).map(|names| {
            println!("wrote {} frames to {}", names.len(), args.out.display());
            EXIT_OK
        }),
        Command::Segment(args) | Command::Evaluate(args) | Command::Bestcase(args) => {
            let mode = match cli.command {
                Command::Segment(_) => Mode::Segment,
                Command::Evaluate(_) => Mode::Evaluate,
                _ => Mode::Bestcase,
            };
            args.batch_config(mode).and_then(|cfg| run_batch(&cfg)).map(|s| {
                println!("{} frames, {} failed, outputs in {}", s.records.len(), s.failures(), args.out.display());
                s.exit_code()
            })
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_for(&e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(argv: &[&str]) -> RunArgs {
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Segment(a) | Command::Evaluate(a) | Command::Bestcase(a) => a,
            Command::Phantom(_) => panic!("not a run command"),
        }
    }

    #[test]
    fn flags_override_config_file() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tmp.path().join("run.cfg");
        std::fs::write(&cfg, "alpha = 0.5\nbeta = 3\nmin-peaks = 4\nseed = 10,12\nringdown_threshold = 90\n").unwrap();
        let c = cfg.to_str().unwrap();
        let t = run_args(&["ivus", "segment", "in", "-o", "out", "--config", c, "--beta", "2", "--zmin", "-2.5"]).tunables().unwrap();
        assert_eq!(t.segment.alpha, 0.5);
        assert_eq!(t.segment.beta, 2);
        assert_eq!(t.segment.selection.min_peaks, 4);
        assert_eq!(t.segment.selection.z_min, -2.5);
        assert_eq!(t.segment.seed, Some((10, 12)));
        assert_eq!(t.ringdown_threshold, 90);
        assert!(t.ringdown);
        let t = run_args(&["ivus", "bestcase", "in", "-o", "out", "--config", c, "--no-ringdown", "--seed", "center"]).tunables().unwrap();
        assert!(!t.ringdown);
        assert_eq!(t.segment.seed, None);
    }

    #[test]
    fn defaults_without_config() {
        let t = run_args(&["ivus", "evaluate", "a.pgm", "b.pgm", "-o", "out"]).tunables().unwrap();
        assert_eq!(t, crate::config::Tunables::default());
    }

    #[test]
    fn phantom_command_writes_frames_gold_and_tags() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("ph");
        let o = out.to_str().unwrap();
        let Command::Phantom(args) = Cli::try_parse_from(["ivus", "phantom", "-o", o, "--randomized", "3", "--shadow"]).unwrap().command else {
            panic!("phantom");
        };
        let names = write_phantoms(&args).unwrap();
        assert_eq!(names, ["phantom_000", "phantom_001", "phantom_002"]);
        let tags = std::fs::read_to_string(out.join("gold/tags.txt")).unwrap();
        assert_eq!(tags.lines().count(), 3);
        assert!(tags.lines().all(|l| l.ends_with(" shadow")));
        let spec = std::fs::read_to_string(out.join("gold/phantom_001_spec.txt")).unwrap();
        let parsed = crate::config::phantom_from_kv(&spec).unwrap();
        assert_eq!(parsed, erel_core::phantom::PhantomSpec::randomized_shadow(2));
        let frame = crate::pgm::load_frame(&out.join("phantom_001.pgm")).unwrap();
        let (expected, _) = erel_core::phantom::generate_phantom(&parsed).unwrap();
        assert_eq!(frame, expected);

        let seq = tmp.path().join("seq");
        let s = seq.to_str().unwrap();
        let Command::Phantom(args) = Cli::try_parse_from(["ivus", "phantom", "-o", s, "--frames", "4"]).unwrap().command else {
            panic!("phantom");
        };
        assert_eq!(write_phantoms(&args).unwrap(), ["frame_000", "frame_001", "frame_002", "frame_003"]);
        assert!(seq.join("gold/frame_003_media.txt").exists());
    }
}
