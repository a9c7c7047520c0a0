//! Command-line front end.
//!
//! Subcommands:
//! - `theory`: analytical SER/BER over an SNR grid;
//! - `simulate`: Monte Carlo sweep plus a JSON run manifest;
//! - `rerun`: repeat a sweep from its manifest;
//! - `compare`: SNR gap at a target BER and the matching coverage factor.
//!
//! Output is assembled in memory and written through a temporary file, so a
//! failed run never leaves a partial result behind.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize, Serializer};

use crate::channel::ChannelModel;
use crate::linkbudget::{range_factor, snr_gap_at_ber, CurvePoint, LabeledCurve, PathLossModel};
use crate::montecarlo::{self, BerCurve, BerPoint, BitMapping, DetectorKind, SimConfig};
use crate::theory::{self, TheoryDetector};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LORA_COMBINING_OUT_DIR";

/// Header of `simulate` CSV output, in column order.
pub const SIMULATE_COLUMNS: [&str; 14] = [
    "detector", "channel", "sf", "l", "snr_db", "symbols", "sym_errs", "bit_errs", "ser", "ber",
    "ci95_lo", "ci95_hi", "theory_ber", "mean_iters",
];

/// Header of `theory` CSV output, in column order.
pub const THEORY_COLUMNS: [&str; 6] = ["detector", "sf", "l", "snr_db", "ser", "ber"];

const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "lora-combining",
    version,
    about = "LoRa multi-antenna receiver simulator and error-rate calculator",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical error rates over an SNR grid.
    Theory(TheoryArgs),
    /// Monte Carlo error-rate sweep.
    Simulate(SimulateArgs),
    /// Repeat a sweep recorded in a run manifest.
    Rerun(RerunArgs),
    /// SNR gap between two curves at a target BER, and the coverage it buys.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mapping {
    Natural,
    Gray,
}

impl From<Mapping> for BitMapping {
    fn from(m: Mapping) -> Self {
        match m {
            Mapping::Natural => BitMapping::Natural,
            Mapping::Gray => BitMapping::Gray,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; defaults to a generated name under $LORA_COMBINING_OUT_DIR, else stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// coh-awgn or noncoh-rayleigh.
    #[arg(long)]
    pub detector: TheoryDetector,
    #[arg(long, default_value_t = 10)]
    pub sf: u32,
    /// Number of receive antennas.
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Per-antenna SNR in dB: `start:step:stop`, a single value, `inf`, or a comma list of these.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// coh, noncoh or semicoh.
    #[arg(long)]
    pub detector: DetectorKind,
    /// awgn or rayleigh.
    #[arg(long, default_value = "rayleigh")]
    pub channel: ChannelModel,
    #[arg(long, default_value_t = 10)]
    pub sf: u32,
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Per-antenna SNR grid in dB (same syntax as `theory --snr`).
    #[arg(long, allow_hyphen_values = true)]
    pub snr: String,
    /// Minimum symbols per SNR point.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Keep going until this many bit errors are seen (bounded by --max-symbols).
    #[arg(long, default_value_t = 100)]
    pub target_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_symbols: u64,
    /// Symbols per coherence frame.
    #[arg(long, default_value_t = 10)]
    pub tau_c: usize,
    /// Iteration cap of the semi-coherent receiver.
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; never changes the numbers.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Add the analytical BER where one exists.
    #[arg(long)]
    pub with_theory: bool,
    #[arg(long, value_enum, default_value_t = Mapping::Natural)]
    pub mapping: Mapping,
    /// Manifest path; defaults to `<out>.manifest.json`, or stderr when writing to stdout.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier `simulate`.
    pub from: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fail unless every point matches the manifest exactly.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Curve A: a CSV file with `snr_db` and `ber` columns, or `DETECTOR:SF:L` for a theory curve.
    #[arg(long)]
    pub a: String,
    /// Curve B, same forms as --a.
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = 1e-4)]
    pub target_ber: f64,
    /// SNR grid for inline theory curves.
    #[arg(long, default_value = "-40:0.1:40", allow_hyphen_values = true)]
    pub snr: String,
    /// Path-loss exponent.
    #[arg(long, default_value_t = 2.0)]
    pub exponent: f64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Parse an SNR grid such as `-10:0.5:0`, `3`, `inf` or a comma list.
///
/// Accepts comma-separated items, each a value in dB, `inf`, or an
/// arithmetic range `start:step:stop` that includes `stop` when it is
/// reached within 1e-9. Range values are rounded to 1e-9 dB.
pub fn parse_snr_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim) {
        if item.is_empty() {
            bail!("empty item in SNR grid `{spec}`");
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_db(v)?),
            [start, step, stop] => {
                let (start, step, stop) = (parse_db(start)?, parse_db(step)?, parse_db(stop)?);
                if ![start, step, stop].iter().all(|v| v.is_finite()) {
                    bail!("range `{item}` must be finite");
                }
                if step == 0.0 || (stop - start) * step < 0.0 {
                    bail!("step in `{item}` does not move from start towards stop");
                }
                let span = (stop - start) / step;
                let count = (span + 1e-9).floor() as usize + 1;
                if count > MAX_GRID_POINTS {
                    bail!("range `{item}` has {count} points (limit {MAX_GRID_POINTS})");
                }
                out.extend((0..count).map(|i| round_nano(start + i as f64 * step)));
            }
            _ => bail!("cannot parse SNR item `{item}`"),
        }
    }
    Ok(out)
}

fn parse_db(s: &str) -> anyhow::Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| anyhow!("`{s}` is not a number"))?;
    if v.is_nan() || v == f64::NEG_INFINITY {
        bail!("SNR value `{s}` is not allowed");
    }
    Ok(v)
}

fn round_nano(v: f64) -> f64 {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// SNR column value: a number, or the string `inf` for the noiseless point.
fn ser_snr<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Serialize)]
struct TheoryRow {
    detector: TheoryDetector,
    sf: u32,
    l: usize,
    #[serde(serialize_with = "ser_snr")]
    snr_db: f64,
    ser: f64,
    ber: f64,
}

#[derive(Debug, Serialize)]
struct SimRow {
    detector: DetectorKind,
    channel: ChannelModel,
    sf: u32,
    l: usize,
    #[serde(serialize_with = "ser_snr")]
    snr_db: f64,
    symbols: u64,
    sym_errs: u64,
    bit_errs: u64,
    ser: f64,
    ber: f64,
    ci95_lo: f64,
    ci95_hi: f64,
    theory_ber: Option<f64>,
    mean_iters: Option<f64>,
}

impl SimRow {
    fn new(cfg: &SimConfig, p: &BerPoint) -> Self {
        Self {
            detector: cfg.detector,
            channel: cfg.channel,
            sf: cfg.spreading_factor,
            l: cfg.num_antennas,
            snr_db: p.snr_db,
            symbols: p.symbols_tested,
            sym_errs: p.symbol_errors,
            bit_errs: p.bit_errors,
            ser: p.ser,
            ber: p.ber,
            ci95_lo: p.ci95_low,
            ci95_hi: p.ci95_high,
            theory_ber: p.theory_ber,
            mean_iters: p.mean_iterations,
        }
    }
}

/// Everything needed to reproduce a `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: SimConfig,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    /// Informational; the numbers do not depend on it.
    pub jobs: Option<usize>,
    pub points: Vec<ManifestPoint>,
    pub warnings: Vec<String>,
}

/// A [`BerPoint`] with the SNR stored so that the noiseless point survives JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPoint {
    #[serde(serialize_with = "ser_snr", deserialize_with = "de_snr")]
    pub snr_db: f64,
    pub symbols_tested: u64,
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub ser: f64,
    pub ber: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub ber_from_ser: f64,
    pub theory_ber: Option<f64>,
    pub mean_iterations: Option<f64>,
}

fn de_snr<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum V {
        N(f64),
        S(String),
    }
    match V::deserialize(d)? {
        V::N(v) => Ok(v),
        V::S(s) if s == "inf" => Ok(f64::INFINITY),
        V::S(s) => Err(serde::de::Error::custom(format!("bad SNR `{s}`"))),
    }
}

impl From<&BerPoint> for ManifestPoint {
    fn from(p: &BerPoint) -> Self {
        Self {
            snr_db: p.snr_db,
            symbols_tested: p.symbols_tested,
            symbol_errors: p.symbol_errors,
            bit_errors: p.bit_errors,
            ser: p.ser,
            ber: p.ber,
            ci95_low: p.ci95_low,
            ci95_high: p.ci95_high,
            ber_from_ser: p.ber_from_ser,
            theory_ber: p.theory_ber,
            mean_iterations: p.mean_iterations,
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Theory(a) => cmd_theory(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Rerun(a) => cmd_rerun(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn cmd_theory(a: TheoryArgs) -> anyhow::Result<()> {
    let grid = parse_snr_grid(&a.snr)?;
    let params = crate::chirp::ModulationParams::new(a.sf, 1.0)?;
    let rows: Vec<TheoryRow> = grid
        .iter()
        .map(|&s| {
            let p = theory::theory_point(a.detector, params.m(), a.l, s)?;
            Ok(TheoryRow {
                detector: a.detector,
                sf: a.sf,
                l: a.l,
                snr_db: s,
                ser: p.ser,
                ber: p.ber,
            })
        })
        .collect::<crate::Result<_>>()?;
    let body = render(&rows, a.output.format)?;
    let name = format!("theory_{}_sf{}_l{}", a.detector, a.sf, a.l);
    emit(&body, resolve_out(&a.output, &name)?.as_deref())
}

fn cmd_simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = SimConfig::new(a.sf, a.l, a.detector, a.channel);
    cfg.snr_db = parse_snr_grid(&a.snr)?;
    cfg.trials = a.trials;
    cfg.target_errors = a.target_errors;
    cfg.max_symbols = a.max_symbols;
    cfg.tau_c = a.tau_c;
    cfg.n_max = a.n_max;
    cfg.seed = a.seed;
    cfg.with_theory = a.with_theory;
    cfg.bit_mapping = a.mapping.into();
    cfg.validate()?;
    execute(cfg, a.jobs, &a.output, a.manifest.as_deref(), None)
}

fn cmd_rerun(a: RerunArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.from).with_context(|| format!("reading {}", a.from.display()))?;
    let old: RunManifest =
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", a.from.display()))?;
    let expect = a.verify.then_some(old.points.as_slice());
    execute(old.config, a.jobs, &a.output, a.manifest.as_deref(), expect)
}

fn execute(
    cfg: SimConfig,
    jobs: Option<usize>,
    output: &OutputArgs,
    manifest: Option<&Path>,
    expect: Option<&[ManifestPoint]>,
) -> anyhow::Result<()> {
    let started_at = now();
    let curve: BerCurve = match jobs {
        Some(j) => montecarlo::run_sweep_with_jobs(&cfg, j)?,
        None => montecarlo::run_sweep(&cfg)?,
    };
    let finished_at = now();
    for w in &curve.warnings {
        eprintln!("warning: {w}");
    }
    let points: Vec<ManifestPoint> = curve.points.iter().map(ManifestPoint::from).collect();
    if let Some(expect) = expect {
        if expect != points.as_slice() {
            bail!("rerun does not reproduce the manifest");
        }
    }
    let rows: Vec<SimRow> = curve.points.iter().map(|p| SimRow::new(&cfg, p)).collect();
    let body = render(&rows, output.format)?;
    let name = format!(
        "sim_{}_{}_sf{}_l{}_seed{}",
        cfg.detector, cfg.channel, cfg.spreading_factor, cfg.num_antennas, cfg.seed
    );
    let out = resolve_out(output, &name)?;
    let m = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg,
        started_at,
        finished_at,
        jobs,
        points,
        warnings: curve.warnings,
    };
    let manifest_text = serde_json::to_string_pretty(&m)? + "\n";
    let manifest_path = manifest.map(Path::to_path_buf).or_else(|| {
        out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    emit(&body, out.as_deref())?;
    match manifest_path {
        Some(p) => write_atomic(&p, manifest_text.as_bytes()),
        None => {
            io::stderr().write_all(manifest_text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_compare(a: CompareArgs) -> anyhow::Result<()> {
    if !(a.target_ber > 0.0 && a.target_ber < 1.0) {
        bail!("target BER {} outside (0, 1)", a.target_ber);
    }
    let model = PathLossModel::new(PathLossModel::default().reference_loss_db, a.exponent, 1.0)?;
    let ca = load_curve(&a.a, &a.snr)?;
    let cb = load_curve(&a.b, &a.snr)?;
    let gap = snr_gap_at_ber(&ca, &cb, a.target_ber)
        .with_context(|| format!("curves must both cross BER {}", a.target_ber))?;
    let factor = range_factor(gap, &model);
    match a.format {
        Some(Format::Json) => {
            let v = serde_json::json!({
                "a": a.a, "b": a.b, "target_ber": a.target_ber,
                "gap_db": gap, "range_factor": factor, "exponent": a.exponent,
            });
            println!("{v}");
        }
        _ => println!("gap {gap:.2} dB, range ×{factor:.2}"),
    }
    Ok(())
}

/// A curve from a CSV file, or a theory curve from `DETECTOR:SF:L`.
fn load_curve(spec: &str, grid: &str) -> anyhow::Result<LabeledCurve> {
    let path = Path::new(spec);
    if path.is_file() {
        return read_curve_csv(path);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let [det, sf, l] = parts.as_slice() else {
        bail!("`{spec}` is neither a file nor DETECTOR:SF:L");
    };
    let det: TheoryDetector = det.parse()?;
    let sf: u32 = sf.parse().with_context(|| format!("spreading factor in `{spec}`"))?;
    let l: usize = l.parse().with_context(|| format!("antenna count in `{spec}`"))?;
    let params = crate::chirp::ModulationParams::new(sf, 1.0)?;
    let snr = parse_snr_grid(grid)?;
    let points = snr
        .iter()
        .map(|&s| {
            theory::theory_point(det, params.m(), l, s).map(|p| CurvePoint {
                snr_db: s,
                ber: p.ber,
            })
        })
        .collect::<crate::Result<_>>()?;
    Ok(LabeledCurve::new(spec, points))
}

fn read_curve_csv(path: &Path) -> anyhow::Result<LabeledCurve> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{} has no `{name}` column", path.display()))
    };
    let (is, ib) = (col("snr_db")?, col("ber")?);
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> anyhow::Result<f64> {
            rec[i]
                .parse()
                .with_context(|| format!("bad number `{}` in {}", &rec[i], path.display()))
        };
        points.push(CurvePoint {
            snr_db: num(is)?,
            ber: num(ib)?,
        });
    }
    Ok(LabeledCurve::new(path.display().to_string(), points))
}

fn render<T: Serialize>(rows: &[T], format: Format) -> anyhow::Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            Ok(w.into_inner().map_err(|e| anyhow!("{e}"))?)
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows)?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

fn resolve_out(o: &OutputArgs, stem: &str) -> anyhow::Result<Option<PathBuf>> {
    if let Some(p) = &o.out {
        return Ok(Some(p.clone()));
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            let ext = match o.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            Ok(Some(PathBuf::from(dir).join(format!("{stem}.{ext}"))))
        }
        _ => Ok(None),
    }
}

fn emit(body: &[u8], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, body),
        None => {
            let mut s = io::stdout().lock();
            s.write_all(body)?;
            s.flush()?;
            Ok(())
        }
    }
}

/// Write through a sibling temporary file and rename into place.
fn write_atomic(path: &Path, body: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let res = fs::write(&tmp, body).and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res.with_context(|| format!("writing {}", path.display()))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_reachable_stop() {
        let g = parse_snr_grid("-30:0.5:0").unwrap();
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], -30.0);
        assert_eq!(*g.last().unwrap(), 0.0);
        // 0.1 steps accumulate rounding error; values are snapped to 1e-9
        let g = parse_snr_grid("0:0.1:1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(parse_snr_grid("0:0.3:1").unwrap(), vec![0.0, 0.3, 0.6, 0.9]);
    }

    #[test]
    fn grid_other_forms() {
        assert_eq!(parse_snr_grid("-5").unwrap(), vec![-5.0]);
        assert_eq!(parse_snr_grid("inf").unwrap(), vec![f64::INFINITY]);
        assert_eq!(parse_snr_grid("1, 2:1:3,inf").unwrap(), vec![1.0, 2.0, 3.0, f64::INFINITY]);
        assert_eq!(parse_snr_grid("3:-1:1").unwrap(), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn grid_rejects_nonsense() {
        for bad in ["", "a", "1:0:2", "0:1:-1", "nan", "-inf", "1:2", "0:1:inf", "1,,2", "0:1e-9:1"] {
            assert!(parse_snr_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn csv_headers_are_stable() {
        let cfg = SimConfig::new(7, 2, DetectorKind::Semicoherent, ChannelModel::Rayleigh);
        let p = BerPoint {
            snr_db: f64::INFINITY,
            symbols_tested: 10,
            symbol_errors: 0,
            bit_errors: 0,
            ser: 0.0,
            ber: 0.0,
            ci95_low: 0.0,
            ci95_high: 0.3,
            ber_from_ser: 0.0,
            theory_ber: None,
            mean_iterations: Some(1.0),
        };
        let body = String::from_utf8(render(&[SimRow::new(&cfg, &p)], Format::Csv).unwrap()).unwrap();
        let mut lines = body.lines();
        assert_eq!(lines.next().unwrap(), SIMULATE_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "semicoh,rayleigh,7,2,inf,10,0,0,0.0,0.0,0.0,0.3,,1.0");

        let row = TheoryRow {
            detector: TheoryDetector::CoherentAwgn,
            sf: 7,
            l: 1,
            snr_db: -3.5,
            ser: 0.25,
            ber: 0.125,
        };
        let body = String::from_utf8(render(&[row], Format::Csv).unwrap()).unwrap();
        assert_eq!(body, format!("{}\ncoh-awgn,7,1,-3.5,0.25,0.125\n", THEORY_COLUMNS.join(",")));
    }

    #[test]
    fn manifest_round_trips_noiseless_point() {
        let p = ManifestPoint {
            snr_db: f64::INFINITY,
            symbols_tested: 1,
            symbol_errors: 0,
            bit_errors: 0,
            ser: 0.0,
            ber: 0.0,
            ci95_low: 0.0,
            ci95_high: 1.0,
            ber_from_ser: 0.0,
            theory_ber: Some(0.0),
            mean_iterations: None,
        };
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"snr_db\":\"inf\""));
        assert_eq!(serde_json::from_str::<ManifestPoint>(&s).unwrap(), p);
    }

    #[test]
    fn atomic_write_leaves_no_partial() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/out.csv");
        write_atomic(&p, b"x\n").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"x\n");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
