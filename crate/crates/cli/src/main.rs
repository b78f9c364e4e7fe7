//! `fbl` — finite-blocklength limits of the coherent MIMO block-fading
//! channel from the command line.
//!
//! Every run emits a manifest (tool version, full parameter echo, seed, RNG
//! identifier, schema version) alongside the results, so any output can be
//! reproduced bit-identically from its manifest. Wall-clock time is logged to
//! stderr to keep stdout deterministic.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbl_core::{
    assemble_design, build_hr_family, conditional_mean_per_cu, empirical_conditional_moments,
    min_blocklength, normal_approx_log_m, rho, sample_haar_orthogonal, truncation_search,
    v1_of_x, vstar_table, BlockInput, ChannelParams, Error, FadingModel, Mat, MomentPass,
    MonteCarloConfig, OccupancyDesign, PowerConvention, RngStream, TableEntry, Units, LOG2_E,
    RNG_ID,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "fbl", version, about = "Finite-blocklength MIMO block-fading limits")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ergodic capacity per channel use.
    Capacity(ChannelCmd),
    /// Capacity, dispersion and the per-term breakdown.
    Dispersion(DispersionCmd),
    /// Normal-approximation rate vs blocklength table.
    Approx(ApproxCmd),
    /// Minimum blocklength to reach a fraction of capacity.
    Blocklength(BlocklengthCmd),
    /// The v*(n_t, T) table of exact values and bounds.
    Vstar(VstarCmd),
    /// An orthogonal (or truncated) design for given n_t, T.
    Design(DesignCmd),
    /// Empirical Haar moments against the closed forms.
    HaarCheck(HaarCmd),
    /// Simulated conditional moments of the information density.
    Simulate(SimulateCmd),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum UnitsArg {
    Bits,
    Nats,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    Transmit,
    Received,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Gaussian,
    Rademacher,
}

/// Channel, estimator and output flags shared by the numeric subcommands.
/// Every field is optional at parse time so a `--config` file can fill in
/// whatever the command line leaves out; explicit flags always win.
#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Transmit antennas.
    #[arg(long)]
    nt: Option<usize>,
    /// Receive antennas.
    #[arg(long)]
    nr: Option<usize>,
    /// Coherence time: symbols per fading block.
    #[arg(long = "T")]
    t: Option<usize>,
    /// SNR in dB, 10·log10(P).
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, value_enum)]
    power_convention: Option<ConventionArg>,
    /// Fading model.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Per-entry variance of the Gaussian fading model.
    #[arg(long)]
    variance: Option<f64>,
    /// Monte Carlo sample budget.
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per deterministic substream.
    #[arg(long)]
    chunk: Option<usize>,
    #[arg(long, value_enum)]
    units: Option<UnitsArg>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value file mirroring the long flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ChannelCmd {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DispersionCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Rank-1 input family: use this v* instead of the Telatar input.
    #[arg(long)]
    vstar: Option<f64>,
}

#[derive(Args)]
struct ApproxCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Block error probability.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Smallest number of coherence blocks.
    #[arg(long, default_value_t = 1)]
    blocks_min: usize,
    /// Largest number of coherence blocks.
    #[arg(long, default_value_t = 10_000)]
    blocks_max: usize,
    /// Number of (geometrically spaced) table rows.
    #[arg(long, default_value_t = 50)]
    points: usize,
}

#[derive(Args)]
struct BlocklengthCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Target fraction of capacity (η in n ≈ (Q⁻¹(ε)/(1−η))² V/C²).
    #[arg(long, default_value_t = 0.9)]
    eta: f64,
    /// Block error probability.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Rank-1 input family: use this v* instead of the Telatar input.
    #[arg(long)]
    vstar: Option<f64>,
}

#[derive(Args)]
struct VstarCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Table covers 1 ≤ n_t, T ≤ max.
    #[arg(long, default_value_t = 8)]
    max: usize,
}

#[derive(Args)]
struct DesignCmd {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct HaarCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Matrix size.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct SimulateCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Input block as rows separated by ';', entries by ','. Defaults to the
    /// constant power-sphere input with every entry √(P/n_t).
    #[arg(long)]
    x: Option<String>,
}

/// Key=value pairs loaded from `--config`.
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&PathBuf>) -> Result<Config, Error> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::invalid(format!("cannot read config {path:?}: {e}")))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::invalid(format!("config line {} is not key=value", lineno + 1))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    /// Flag value if given, else the config entry, else `None`.
    fn merge<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Error> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::invalid(format!("config key {key}: cannot parse {raw:?}"))),
        }
    }
}

impl std::str::FromStr for ConventionArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

impl std::str::FromStr for ModelArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

impl std::str::FromStr for UnitsArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

impl std::str::FromStr for FormatArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Fully resolved run settings after the config merge.
struct Resolved {
    params: Option<ChannelParams>,
    model: FadingModel,
    mc: MonteCarloConfig,
    units: Units,
    format: FormatArg,
    out: Option<PathBuf>,
}

impl Resolved {
    /// `channel: true` demands nt/nr/T/snr-db; table-style subcommands
    /// (vstar, design, haar-check) resolve without them.
    fn from(common: &CommonArgs, channel: bool) -> Result<Resolved, Error> {
        let cfg = Config::load(common.config.as_ref())?;
        let nt = cfg.merge(common.nt, "nt")?;
        let nr = cfg.merge(common.nr, "nr")?;
        let t = cfg.merge(common.t, "T")?;
        let snr_db = cfg.merge(common.snr_db, "snr-db")?;
        let convention = cfg
            .merge(common.power_convention, "power-convention")?
            .unwrap_or(ConventionArg::Transmit);
        let model_arg = cfg.merge(common.model, "model")?.unwrap_or(ModelArg::Gaussian);
        let variance = cfg.merge(common.variance, "variance")?.unwrap_or(1.0);
        let samples = cfg.merge(common.samples, "samples")?.unwrap_or(100_000);
        let seed = cfg.merge(common.seed, "seed")?.unwrap_or(0);
        let chunk = cfg.merge(common.chunk, "chunk")?;
        let units = cfg.merge(common.units, "units")?.unwrap_or(UnitsArg::Bits);
        let format = cfg.merge(common.format, "format")?.unwrap_or(FormatArg::Json);

        let params = if channel {
            let need = |v: Option<usize>, name: &str| {
                v.ok_or_else(|| Error::invalid(format!("--{name} is required")))
            };
            let p = snr_db
                .ok_or_else(|| Error::invalid("--snr-db is required"))
                .map(|db| 10f64.powf(db / 10.0))?;
            Some(ChannelParams::new(
                need(nt, "nt")?,
                need(nr, "nr")?,
                need(t, "T")?,
                p,
                match convention {
                    ConventionArg::Transmit => PowerConvention::Transmit,
                    ConventionArg::Received => PowerConvention::Received,
                },
            )?)
        } else {
            None
        };
        let model = match model_arg {
            ModelArg::Gaussian => FadingModel::iid_gaussian(variance)?,
            ModelArg::Rademacher => FadingModel::ScalarRademacher,
        };
        let mc = match chunk {
            Some(c) => MonteCarloConfig::new(samples, seed, c)?,
            None => MonteCarloConfig::with_samples(samples, seed)?,
        };
        Ok(Resolved {
            params,
            model,
            mc,
            units: match units {
                UnitsArg::Bits => Units::Bits,
                UnitsArg::Nats => Units::Nats,
            },
            format,
            out: common.out.clone(),
        })
    }

    fn params(&self) -> &ChannelParams {
        self.params.as_ref().expect("channel subcommand resolved without params")
    }

    /// Conversion factors for (capacity-like, variance-like) values.
    fn factors(&self) -> (f64, f64) {
        match self.units {
            Units::Nats => (1.0, 1.0),
            Units::Bits => (LOG2_E, LOG2_E * LOG2_E),
        }
    }

    fn units_name(&self) -> &'static str {
        match self.units {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    subcommand: String,
    rng: &'static str,
    seed: u64,
    samples: usize,
    chunk: usize,
    units: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<ChannelParams>,
    model: FadingModel,
}

impl Manifest {
    fn new(sub: &str, r: &Resolved) -> Manifest {
        Manifest {
            schema_version: SCHEMA_VERSION,
            tool: "fbl",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: sub.to_string(),
            rng: RNG_ID,
            seed: r.mc.seed,
            samples: r.mc.samples,
            chunk: r.mc.chunk,
            units: r.units_name(),
            params: r.params,
            model: r.model,
        }
    }
}

/// JSON-safe float: `+∞` sentinels become the string "inf".
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

struct Output {
    manifest: Manifest,
    /// Structured result for JSON.
    result: Value,
    /// (header, rows) for CSV.
    csv_header: String,
    csv_rows: Vec<String>,
}

fn write_output(r: &Resolved, o: &Output) -> Result<(), Error> {
    let text = match r.format {
        FormatArg::Json => {
            let doc = json!({ "manifest": o.manifest, "result": o.result });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable output");
            s.push('\n');
            s
        }
        FormatArg::Csv => {
            let mut s = String::new();
            let manifest = serde_json::to_string(&o.manifest).expect("serializable manifest");
            writeln!(s, "# manifest: {manifest}").unwrap();
            writeln!(s, "{}", o.csv_header).unwrap();
            for row in &o.csv_rows {
                writeln!(s, "{row}").unwrap();
            }
            s
        }
    };
    match &r.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::invalid(format!("cannot write {path:?}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_capacity(cmd: &ChannelCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, true)?;
    let (fc, _) = r.factors();
    let (c, se) = fbl_core::capacity(r.params(), &r.model, &r.mc)?;
    let out = Output {
        manifest: Manifest::new("capacity", &r),
        result: json!({
            "capacity_per_cu": c * fc,
            "capacity_stderr": se * fc,
            "units": r.units_name(),
        }),
        csv_header: "capacity_per_cu,capacity_stderr,units".into(),
        csv_rows: vec![format!("{},{},{}", c * fc, se * fc, r.units_name())],
    };
    write_output(&r, &out)
}

fn dispersion_report(
    r: &Resolved,
    vstar: Option<f64>,
) -> Result<fbl_core::DispersionReport, Error> {
    let rep = match vstar {
        None => fbl_core::v_iid(r.params(), &r.model, &r.mc)?,
        Some(v) => fbl_core::v_rank1(r.params(), &r.model, v, &r.mc)?,
    };
    Ok(rep.in_units(r.units))
}

fn cmd_dispersion(cmd: &DispersionCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, true)?;
    let rep = dispersion_report(&r, cmd.vstar)?;
    let out = Output {
        manifest: Manifest::new("dispersion", &r),
        result: serde_json::to_value(&rep).expect("serializable report"),
        csv_header: "capacity_per_cu,capacity_stderr,v_per_cu,v_stderr,\
                     term_fading_variance,term_awgn_dispersion,term_power_eta,units"
            .into(),
        csv_rows: vec![format!(
            "{},{},{},{},{},{},{},{}",
            rep.capacity_per_cu,
            rep.capacity_stderr,
            rep.v_per_cu,
            rep.v_stderr,
            rep.term_fading_variance,
            rep.term_awgn_dispersion,
            rep.term_power_eta,
            r.units_name()
        )],
    };
    write_output(&r, &out)
}

fn cmd_approx(cmd: &ApproxCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, true)?;
    if cmd.blocks_min == 0 || cmd.blocks_max < cmd.blocks_min || cmd.points == 0 {
        return Err(Error::invalid("need 1 <= blocks-min <= blocks-max and points >= 1"));
    }
    let (fc, _) = r.factors();
    let rep = dispersion_report(&r, None)?; // already in requested units
    let t = r.params().coherence_t;
    // geometric spacing over block counts, deduplicated after rounding
    let mut blocks = Vec::with_capacity(cmd.points);
    let (lo, hi) = (cmd.blocks_min as f64, cmd.blocks_max as f64);
    for i in 0..cmd.points {
        let frac = if cmd.points == 1 { 0.0 } else { i as f64 / (cmd.points - 1) as f64 };
        let b = (lo * (hi / lo).powf(frac)).round() as usize;
        if blocks.last() != Some(&b) {
            blocks.push(b);
        }
    }
    let mut rows = Vec::with_capacity(blocks.len());
    let mut json_rows = Vec::with_capacity(blocks.len());
    for &b in &blocks {
        // normal_approx works in nats internally
        let na = normal_approx_log_m(
            b,
            cmd.eps,
            rep.capacity_per_cu / fc,
            rep.v_per_cu / (fc * fc),
            t,
        )?;
        let rate = na.rate_per_cu * fc;
        rows.push(format!("{},{rate}", na.channel_uses));
        json_rows.push(json!({ "channel_uses": na.channel_uses, "rate_per_cu": rate }));
    }
    let out = Output {
        manifest: Manifest::new("approx", &r),
        result: json!({
            "eps": cmd.eps,
            "capacity_per_cu": rep.capacity_per_cu,
            "v_per_cu": rep.v_per_cu,
            "units": r.units_name(),
            "rows": json_rows,
        }),
        csv_header: "channel_uses,rate_per_cu".into(),
        csv_rows: rows,
    };
    write_output(&r, &out)
}

fn cmd_blocklength(cmd: &BlocklengthCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, true)?;
    let rep = dispersion_report(&r, cmd.vstar)?;
    let (fc, _) = r.factors();
    let est = min_blocklength(
        cmd.eta,
        cmd.eps,
        rep.capacity_per_cu / fc,
        rep.v_per_cu / (fc * fc),
        r.params().coherence_t,
    )?;
    let out = Output {
        manifest: Manifest::new("blocklength", &r),
        result: json!({
            "eta": cmd.eta,
            "eps": cmd.eps,
            "capacity_per_cu": rep.capacity_per_cu,
            "v_per_cu": rep.v_per_cu,
            "units": r.units_name(),
            "channel_uses": num(est.channel_uses),
            "rounded_channel_uses": num(est.rounded_channel_uses),
        }),
        csv_header: "eta,eps,channel_uses,rounded_channel_uses".into(),
        csv_rows: vec![format!(
            "{},{},{},{}",
            cmd.eta, cmd.eps, est.channel_uses, est.rounded_channel_uses
        )],
    };
    write_output(&r, &out)
}

fn cmd_vstar(cmd: &VstarCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, false)?;
    let table = vstar_table(cmd.max)?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            let exact = matches!(entry, TableEntry::Exact(_));
            rows.push(format!("{},{},{},{},{exact}", i + 1, j + 1, entry.lower(), entry.upper()));
            json_rows.push(json!({
                "nt": i + 1,
                "T": j + 1,
                "lower": entry.lower(),
                "upper": entry.upper(),
                "exact": exact,
            }));
        }
    }
    let out = Output {
        manifest: Manifest::new("vstar", &r),
        result: json!({ "max": cmd.max, "entries": json_rows }),
        csv_header: "nt,T,lower,upper,exact".into(),
        csv_rows: rows,
    };
    write_output(&r, &out)
}

/// Full-rate design when Thm.-5 exactness applies, otherwise the best
/// truncation of the smallest power-of-two full-rate design that fits.
fn best_design(n_t: usize, t: usize) -> Result<(OccupancyDesign, bool), Error> {
    if n_t <= rho(t) {
        let fam = build_hr_family(t, n_t)?;
        return Ok((assemble_design(&fam, n_t)?, true));
    }
    for a in 3..=16usize {
        let n = 1usize << a;
        if n >= t && rho(n) >= n_t {
            let fam = build_hr_family(n, n_t)?;
            let base = assemble_design(&fam, n_t)?;
            let (best, _) = truncation_search(n_t, t, &base)?;
            return Ok((best, false));
        }
    }
    Err(Error::invalid("no base design fits the requested dimensions"))
}

fn cmd_design(cmd: &DesignCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, false)?;
    let cfg = Config::load(cmd.common.config.as_ref())?;
    let n_t = cfg
        .merge(cmd.common.nt, "nt")?
        .ok_or_else(|| Error::invalid("--nt is required"))?;
    let t = cfg
        .merge(cmd.common.t, "T")?
        .ok_or_else(|| Error::invalid("--T is required"))?;
    let (design, full_rate) = best_design(n_t, t)?;
    let tokens = design.tokens();
    let rows: Vec<String> = tokens.iter().map(|row| row.join(",")).collect();
    let out = Output {
        manifest: Manifest::new("design", &r),
        result: json!({
            "nt": n_t,
            "T": t,
            "full_rate": full_rate,
            "score": design.score(),
            "counts": design.counts(),
            "grid": tokens,
        }),
        csv_header: (1..=t).map(|j| format!("c{j}")).collect::<Vec<_>>().join(","),
        csv_rows: rows,
    };
    write_output(&r, &out)
}

fn cmd_haar_check(cmd: &HaarCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, false)?;
    let n = cmd.n.ok_or_else(|| Error::invalid("--n is required"))?;
    if n < 2 {
        return Err(Error::invalid("--n must be at least 2"));
    }
    let nf = n as f64;
    let names = ["E[Vij^2]", "E[Vij Vik]", "E[Vij^2 Vik^2]", "E[Vij^2 Vkl^2]", "E[Vij^4]",
        "E[Vij Vik Vlj Vlk]"];
    let expected = [
        1.0 / nf,
        0.0,
        1.0 / (nf * (nf + 2.0)),
        (nf + 1.0) / (nf * (nf - 1.0) * (nf + 2.0)),
        3.0 / (nf * (nf + 2.0)),
        -1.0 / (nf * (nf - 1.0) * (nf + 2.0)),
    ];
    let mut rng = RngStream::new(r.mc.seed, 0).rng();
    let mut mean = [0.0f64; 6];
    let mut m2 = [0.0f64; 6];
    for k in 0..r.mc.samples {
        let v = sample_haar_orthogonal(n, &mut rng);
        let (a, b, c, d) = (v[(0, 0)], v[(0, 1)], v[(1, 0)], v[(1, 1)]);
        let obs = [a * a, a * b, a * a * b * b, a * a * d * d, a.powi(4), a * b * c * d];
        let kf = (k + 1) as f64;
        for i in 0..6 {
            let delta = obs[i] - mean[i];
            mean[i] += delta / kf;
            m2[i] += delta * (obs[i] - mean[i]);
        }
    }
    let samples = r.mc.samples as f64;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut all_pass = true;
    for i in 0..6 {
        let se = (m2[i] / (samples - 1.0) / samples).sqrt();
        let z = (mean[i] - expected[i]) / se;
        let pass = z.abs() < 4.0;
        all_pass &= pass;
        rows.push(format!("{},{},{},{},{},{pass}", names[i], mean[i], expected[i], se, z));
        json_rows.push(json!({
            "moment": names[i],
            "estimate": mean[i],
            "expected": expected[i],
            "stderr": se,
            "z": z,
            "pass": pass,
        }));
    }
    let out = Output {
        manifest: Manifest::new("haar-check", &r),
        result: json!({ "n": n, "moments": json_rows, "all_pass": all_pass }),
        csv_header: "moment,estimate,expected,stderr,z,pass".into(),
        csv_rows: rows,
    };
    write_output(&r, &out)
}

fn parse_block(spec: &str, n_t: usize, t: usize) -> Result<Mat, Error> {
    let rows: Vec<&str> = spec.split(';').collect();
    if rows.len() != n_t {
        return Err(Error::invalid(format!("--x needs {n_t} rows, got {}", rows.len())));
    }
    let mut m = Mat::zeros(n_t, t);
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != t {
            return Err(Error::invalid(format!("--x row {} needs {t} entries", i + 1)));
        }
        for (j, cell) in cells.iter().enumerate() {
            m[(i, j)] = cell
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("--x entry {cell:?} is not a number")))?;
        }
    }
    Ok(m)
}

fn cmd_simulate(cmd: &SimulateCmd) -> Result<(), Error> {
    let r = Resolved::from(&cmd.common, true)?;
    let params = r.params().resolved(&r.model)?;
    let (n_t, t) = (params.n_t, params.coherence_t);
    let x = match &cmd.x {
        Some(spec) => parse_block(spec, n_t, t)?,
        // constant power-sphere input: ‖x‖_F² = TP
        None => {
            let v = params.snr_per_antenna().sqrt();
            Mat::from_fn(n_t, t, |_, _| v)
        }
    };
    let x = BlockInput::new(x)?;
    let est = empirical_conditional_moments(&x, &r.model, &params, &r.mc)?;
    // analytic comparison from the same sample budget
    let pass = MomentPass::compute(&params, &r.model, &r.mc)?;
    let (cap, _) = pass.capacity();
    let d1 = conditional_mean_per_cu(&x, &params, cap, pass.eta_moments().eta2)?;
    let v1 = v1_of_x(&x.x, &params, &pass.eta_moments(), &pass.fading_functionals())?;
    let (fc, fv) = r.factors();
    let out = Output {
        manifest: Manifest::new("simulate", &r),
        result: json!({
            "x": (0..n_t).map(|i| (0..t).map(|j| x.x[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "mean_per_cu": est.mean * fc,
            "mean_stderr": est.mean_stderr * fc,
            "variance_per_cu": est.variance * fv,
            "variance_stderr": est.variance_stderr * fv,
            "abs_third_central": est.abs_third_central,
            "analytic_mean_per_cu": d1 * fc,
            "analytic_variance_per_cu": v1 * fv,
            "units": r.units_name(),
        }),
        csv_header: "mean_per_cu,mean_stderr,variance_per_cu,variance_stderr,\
                     analytic_mean_per_cu,analytic_variance_per_cu,units"
            .into(),
        csv_rows: vec![format!(
            "{},{},{},{},{},{},{}",
            est.mean * fc,
            est.mean_stderr * fc,
            est.variance * fv,
            est.variance_stderr * fv,
            d1 * fc,
            v1 * fv,
            r.units_name()
        )],
    };
    write_output(&r, &out)
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.cmd {
        Command::Capacity(c) => cmd_capacity(c),
        Command::Dispersion(c) => cmd_dispersion(c),
        Command::Approx(c) => cmd_approx(c),
        Command::Blocklength(c) => cmd_blocklength(c),
        Command::Vstar(c) => cmd_vstar(c),
        Command::Design(c) => cmd_design(c),
        Command::HaarCheck(c) => cmd_haar_check(c),
        Command::Simulate(c) => cmd_simulate(c),
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                Error::NumericalFailure(_) => 3,
            }
        }
    };
    eprintln!("elapsed_ms={}", started.elapsed().as_millis());
    std::process::exit(code);
}
