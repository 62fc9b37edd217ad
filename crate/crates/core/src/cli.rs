//! Command-line front end: argument parsing, CSV/manifest output and the
//! Eb/N0 gap report.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::harness::{BerRecord, Detector, SimConfig};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["ebn0_db", "ber", "bit_errors", "bits_total", "frames", "lsd_retries"];

/// BER at which the gap report compares curves.
pub const GAP_TARGET_BER: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "ncsa-sim", version, about = "Network-coded slotted ALOHA detection BER simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an Eb/N0 sweep and write CSV results.
    Run(RunArgs),
    /// Eb/N0 gap between two result files at a target BER.
    Gap(GapArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Number of sources K.
    #[arg(long)]
    pub sources: Option<usize>,
    /// Modulation order M.
    #[arg(long)]
    pub mod_order: Option<usize>,
    /// Information bits per source per frame, L.
    #[arg(long)]
    pub info_bits: Option<usize>,
    /// Symbols per fading block, N (default: one block per frame).
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Candidate list size N_S.
    #[arg(long)]
    pub list_size: Option<usize>,
    /// Radius scale B, radius r = 2 B N0.
    #[arg(long)]
    pub radius_scale: Option<f64>,
    /// Fixed sphere radius, overriding the radius scale.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Eb/N0 grid in dB: "start:step:stop" or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// Maximum frames per point.
    #[arg(long)]
    pub frames: Option<u64>,
    /// Bit errors after which a point stops early.
    #[arg(long)]
    pub target_errors: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// lsd or exhaustive.
    #[arg(long)]
    pub detector: Option<String>,
    /// Shrink the radius to the farthest listed point once the list is full.
    #[arg(long)]
    pub tighten_radius: bool,
    /// Output CSV path; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file with SimConfig keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores). Does not affect results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Suppress per-point progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    /// Results for K sources.
    pub lower: PathBuf,
    /// Results for K+1 sources.
    pub upper: PathBuf,
    #[arg(long, default_value_t = GAP_TARGET_BER)]
    pub target: f64,
}

/// Parses an Eb/N0 grid: `start:step:stop` (inclusive) or `a,b,c`.
pub fn parse_grid(grid: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::InvalidConfig(format!("bad --snr '{grid}': {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = grid.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
                return Err(bad("need step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // Round to the step's decimal grid so 0.1 steps print cleanly.
            Ok((0..count)
                .map(|i| {
                    let v = start + i as f64 * step;
                    (v * 1e9).round() / 1e9
                })
                .collect())
        }
        [list] => {
            let values = list.split(',').map(num).collect::<Result<Vec<_>>>()?;
            if values.is_empty() {
                return Err(bad("empty grid"));
            }
            Ok(values)
        }
        _ => Err(bad("expected start:step:stop or a comma list")),
    }
}

/// A resolved `run` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub config: SimConfig,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub quiet: bool,
}

/// Merges a config file (if any) with flag overrides and validates.
pub fn resolve(args: &RunArgs) -> Result<RunPlan> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<SimConfig>(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?,
        None => SimConfig::default(),
    };
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                config.$field = v;
            }
        };
    }
    set!(sources, args.sources);
    set!(mod_order, args.mod_order);
    set!(info_bits, args.info_bits);
    set!(list_size, args.list_size);
    set!(radius_scale, args.radius_scale);
    set!(max_frames, args.frames);
    set!(target_errors, args.target_errors);
    set!(seed, args.seed);
    if args.block_size.is_some() {
        config.block_size = args.block_size;
    }
    if args.radius.is_some() {
        config.radius = args.radius;
    }
    if let Some(grid) = &args.snr {
        config.ebn0_grid = parse_grid(grid)?;
    }
    if let Some(d) = &args.detector {
        config.detector = d.parse::<Detector>()?;
    }
    if args.tighten_radius {
        config.tighten_radius = true;
    }
    config.validate()?;
    if config.ebn0_grid.is_empty() {
        return Err(Error::InvalidConfig("no Eb/N0 grid given (--snr)".into()));
    }
    if args.workers == Some(0) {
        return Err(Error::InvalidConfig("--workers must be >= 1".into()));
    }
    Ok(RunPlan {
        config,
        out: args.out.clone(),
        workers: args.workers,
        quiet: args.quiet,
    })
}

/// Parses `run` flags from a full argv (program name first).
pub fn parse_args<I, S>(argv: I) -> Result<SimConfig>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    parse_run(argv).map(|plan| plan.config)
}

pub fn parse_run<I, S>(argv: I) -> Result<RunPlan>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    #[derive(Parser)]
    struct Standalone {
        #[command(flatten)]
        run: RunArgs,
    }
    let parsed = Standalone::try_parse_from(argv).map_err(|e| Error::InvalidConfig(first_line(&e.to_string())))?;
    resolve(&parsed.run)
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string()
}

/// Everything needed to reproduce a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub version: String,
    pub timestamp: String,
    pub records: Vec<BerRecord>,
}

impl RunManifest {
    pub fn new(config: SimConfig, records: Vec<BerRecord>) -> Self {
        Self {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            records,
        }
    }
}

pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// CSV text for `records`. Floats use Rust's shortest round-trip decimal
/// form, which is locale independent.
pub fn format_csv(records: &[BerRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.ebn0_db.to_string(),
            r.ber.to_string(),
            r.bit_errors.to_string(),
            r.bits_total.to_string(),
            r.frames.to_string(),
            r.lsd_retries.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

/// Writes the CSV and its sibling manifest.
pub fn write_csv(records: &[BerRecord], manifest: &RunManifest, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty("record list"));
    }
    fs::write(path, format_csv(records)?)?;
    fs::write(manifest_path(path), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Eb/N0 where the curve first falls through `target`, interpolating
/// linearly in (dB, log10 BER).
pub fn ber_crossing(records: &[BerRecord], target: f64) -> Result<f64> {
    let no = |reason: String| Error::NoCrossing { target, reason };
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.ber >= target && b.ber < target {
            if b.ber <= 0.0 {
                return Err(no(format!(
                    "point at {} dB has zero errors, cannot interpolate in log BER",
                    b.ebn0_db
                )));
            }
            let (la, lb, lt) = (a.ber.log10(), b.ber.log10(), target.log10());
            let t = if la == lb { 0.0 } else { (la - lt) / (la - lb) };
            return Ok(a.ebn0_db + t * (b.ebn0_db - a.ebn0_db));
        }
    }
    let reason = match records.iter().map(|r| r.ber).reduce(f64::min) {
        None => "no points".to_string(),
        Some(min) if min >= target => format!("curve stays above (lowest BER {min})"),
        _ => "curve never falls through the target from above".to_string(),
    };
    Err(no(reason))
}

/// Gap in dB between the `upper` and `lower` curves at `target`.
pub fn gap_report(lower: &Path, upper: &Path, target: f64) -> Result<f64> {
    let a = ber_crossing(&read_csv(lower)?, target)?;
    let b = ber_crossing(&read_csv(upper)?, target)?;
    Ok(b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("ncsa-sim".to_string())
            .chain(s.split_whitespace().map(str::to_string))
            .collect()
    }

    #[test]
    fn parses_basic_flags() {
        let cfg = parse_args(argv("--sources 2 --mod-order 2 --snr 0:1:12 --seed 7")).unwrap();
        assert_eq!(cfg.sources, 2);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.ebn0_grid.len(), 13);
        assert_eq!(cfg.ebn0_grid[12], 12.0);
        assert_eq!(cfg.info_bits, 2304);
        assert_eq!(cfg.list_size, 5);
        assert_eq!(cfg.radius_scale, 2.0);
    }

    #[test]
    fn rejects_bad_flags() {
        let err = parse_args(argv("--mod-order 3 --snr 0")).unwrap_err();
        assert_eq!(err, Error::InvalidModOrder(3));
        assert!(parse_args(argv("--snr 0 --detector ml")).is_err());
        assert!(parse_args(argv("--snr 5:1:0")).is_err());
        assert!(parse_args(argv("--sources 2")).is_err());
        assert!(parse_args(argv("--bogus 1 --snr 0")).is_err());
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("1,2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
        assert_eq!(parse_grid("0:0.5:2").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0:0.1:0.3").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn config_file_with_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"sources":5,"mod_order":4}"#).unwrap();
        let cfg = parse_args(argv(&format!("--config {} --snr 1", path.display()))).unwrap();
        assert_eq!((cfg.sources, cfg.mod_order, cfg.info_bits, cfg.list_size), (5, 4, 2304, 5));
        let cfg = parse_args(argv(&format!("--config {} --sources 3 --snr 1", path.display()))).unwrap();
        assert_eq!(cfg.sources, 3);

        fs::write(&path, r#"{"sources":5,"nonsense":1}"#).unwrap();
        assert!(parse_args(argv(&format!("--config {} --snr 1", path.display()))).is_err());
    }

    #[test]
    fn manifest_config_round_trips_through_parser() {
        let cfg = parse_args(argv("--sources 4 --mod-order 4 --snr 0:2:10 --seed 9 --tighten-radius --radius 0.5")).unwrap();
        let manifest = RunManifest::new(cfg.clone(), vec![]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, serde_json::to_string(&manifest.config).unwrap()).unwrap();
        let back = parse_args(argv(&format!("--config {}", path.display()))).unwrap();
        assert_eq!(back, cfg);
    }

    fn rec(db: f64, ber: f64) -> BerRecord {
        BerRecord {
            ebn0_db: db,
            bit_errors: (ber * 1e6) as u64,
            bits_total: 1_000_000,
            ber,
            frames: 10,
            lsd_retries: 0,
        }
    }

    #[test]
    fn csv_layout() {
        let text = format_csv(&[rec(0.0, 0.1), rec(5.0, 0.0), rec(10.5, 1.25e-7)]).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "ebn0_db,ber,bit_errors,bits_total,frames,lsd_retries");
        assert_eq!(lines[2], "5,0,0,1000000,10,0");
        assert_eq!(lines[3].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 1.25e-7);
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let curve = [rec(0.0, 1e-1), rec(10.0, 1e-2), rec(20.0, 1e-4)];
        assert!((ber_crossing(&curve, 1e-3).unwrap() - 15.0).abs() < 1e-12);
        assert!(ber_crossing(&[rec(0.0, 0.5), rec(1.0, 0.1)], 1e-3).is_err());
        assert!(ber_crossing(&[rec(0.0, 0.5), rec(1.0, 0.0)], 1e-3).is_err());
    }
}
