//! Command-line front end. [`run`] parses arguments, validates them, runs
//! one subcommand and maps the outcome to an exit status: 0 on success,
//! 2 on invalid input, 1 when the computation or file I/O fails.

pub mod io;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::{
    bifurcation_scan, cobweb_trace, divergence_rate, logistic_family, lorenz_equilibria, verify_equilibrium,
};
use crate::cipher::{self, ChaosKey};
use crate::compression::{self, EncoderConfig, PifsCode};
use crate::dynamics::{integrate, iterate_map, IntegratorConfig, StateVector};
use crate::fractals::{box_count_dimension, mandelbrot_grid, sierpinski_raster, similarity_dimension, ComplexWindow};
use crate::systems::{LogisticParams, Preset, System};

pub const KEY_ENV: &str = "CHAOSCOPE_KEY";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{operation} failed: {message}")]
    Failed { operation: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed { .. } => 1,
        }
    }
}

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failed<E: Display>(operation: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Failed { operation, message: e.to_string() }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "chaoscope",
    version,
    about = "Chaotic dynamics, fractals, fractal image coding and a toy chaos cipher"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a flow preset and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Iterate a map preset and write its orbit as CSV.
    Iterate(IterateArgs),
    /// Write the cobweb staircase of the logistic map as CSV.
    Cobweb(CobwebArgs),
    /// Sweep the logistic parameter and write the bifurcation diagram as CSV.
    Bifurcate(BifurcateArgs),
    /// Measure exponential divergence of nearby trajectories of a flow.
    Divergence(DivergenceArgs),
    /// List equilibria of a flow preset, or check a candidate point.
    Equilibria(EquilibriaArgs),
    /// Render escape-time counts of the Mandelbrot set as PGM.
    Mandelbrot(MandelbrotArgs),
    /// Render an iterated function system attractor as PGM.
    Ifs(IfsArgs),
    /// Estimate the box-counting dimension of a PGM raster.
    Boxdim(BoxdimArgs),
    /// Similarity dimension of a self-similar set.
    Simdim(SimdimArgs),
    /// Fractal-compress a PGM image.
    Compress(CompressArgs),
    /// Decode a fractal-compressed image to PGM.
    Decompress(DecompressArgs),
    /// Encrypt a file with the logistic-map stream cipher.
    Encrypt(EncryptArgs),
    /// Decrypt a file produced by `encrypt`.
    Decrypt(DecryptArgs),
    /// Report the keystream avalanche fraction for a key.
    Avalanche(AvalancheArgs),
}

/// Comma-separated list of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Reals(pub Vec<f64>);

fn parse_reals(s: &str) -> Result<Reals, String> {
    s.split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|_| format!("not a number: {f:?}")))
        .collect::<Result<_, _>>()
        .map(Reals)
}

fn parse_colon<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != N {
        return Err(format!("expected {N} colon-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.trim().parse().map_err(|_| format!("not a number: {part:?}"))?;
    }
    Ok(out)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    parse_colon::<2>(s).map(|[a, b]| (a, b))
}

fn parse_window(s: &str) -> Result<[f64; 4], String> {
    parse_colon::<4>(s)
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let value = value.trim().parse().map_err(|_| format!("not a number: {value:?}"))?;
    Ok((name.trim().to_string(), value))
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Preset name: logistic, henon, lorenz, chua, chua-paper-code, linear1d.
    #[arg(long)]
    pub system: String,
    /// Override a preset parameter, e.g. `--param r=28`. Repeatable.
    #[arg(long = "param", value_parser = parse_assignment, allow_hyphen_values = true)]
    pub params: Vec<(String, f64)>,
    /// Initial state, comma-separated. Defaults to the preset's standard start.
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub x0: Option<Reals>,
}

impl SystemArgs {
    fn resolve(&self) -> CliResult<(System, StateVector)> {
        let preset: Preset = self.system.parse().map_err(usage)?;
        let mut system = System::preset(preset);
        for (name, value) in &self.params {
            system = system.with_param(name, *value).map_err(usage)?;
        }
        let x0 = self.x0.clone().map_or_else(|| default_start(preset).to_vec(), |r| r.0);
        if x0.len() != preset.dim() {
            return Err(usage(format!("`{preset}` needs {} initial components, got {}", preset.dim(), x0.len())));
        }
        Ok((system, StateVector::new(x0).map_err(usage)?))
    }
}

/// Standard initial condition for each preset.
pub fn default_start(preset: Preset) -> &'static [f64] {
    match preset {
        Preset::Logistic => &[0.2],
        Preset::Henon => &[0.1, 0.0],
        Preset::Lorenz => &[15.0, 20.0, 30.0],
        Preset::Chua | Preset::ChuaPaperCode => &[-1.6, 0.0, 1.6],
        Preset::Linear1D => &[1.0],
    }
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: usize,
}

impl ToleranceArgs {
    fn config(&self) -> CliResult<IntegratorConfig> {
        let config = IntegratorConfig {
            max_steps: self.max_steps,
            ..IntegratorConfig::with_tolerances(self.rel_tol, self.abs_tol)
        };
        config.validate().map_err(usage)?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Integration interval `t0:t1`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0:100")]
    pub span: (f64, f64),
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct IterateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Length of the raw orbit, including the initial point.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Leading orbit entries to drop.
    #[arg(long, default_value_t = 0)]
    pub discard: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CobwebArgs {
    #[arg(long, default_value_t = LogisticParams::COBWEB.mu())]
    pub mu: f64,
    #[arg(long, default_value_t = 0.2)]
    pub x0: f64,
    /// Number of map applications.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV of the map curve `(x, f(x))`.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BifurcateArgs {
    /// Parameter interval `lo:hi`.
    #[arg(long, value_parser = parse_pair, default_value = "2.8:4")]
    pub mu_range: (f64, f64),
    #[arg(long, default_value_t = 600)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub x0: f64,
    #[arg(long, default_value_t = 1000)]
    pub discard: usize,
    #[arg(long, default_value_t = 100)]
    pub keep: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Initial offset applied to the first component of the twin.
    #[arg(long, default_value_t = 1e-8)]
    pub delta0: f64,
    #[arg(long, default_value_t = 40.0)]
    pub t1: f64,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
    /// CSV of `t,log_separation`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EquilibriaArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long = "param", value_parser = parse_assignment, allow_hyphen_values = true)]
    pub params: Vec<(String, f64)>,
    /// Candidate point to test instead of listing equilibria.
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub check: Option<Reals>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MandelbrotArgs {
    /// `xmin:xmax:ymin:ymax`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "-2.4:1.2:-1.5:1.5")]
    pub window: [f64; 4],
    #[arg(long, default_value_t = 0.005)]
    pub scale: f64,
    #[arg(long, default_value_t = 50)]
    pub nmax: u32,
    #[arg(long, default_value_t = crate::fractals::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IfsPreset {
    Sierpinski,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct IfsArgs {
    #[arg(long, value_enum, default_value = "sierpinski")]
    pub preset: IfsPreset,
    /// Raster side in pixels.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 7)]
    pub depth: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BoxdimArgs {
    /// PGM raster; pixels above 127 count as set.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub min_exp: u32,
    /// Defaults to the largest `k` with `2^k` at most the smaller side.
    #[arg(long)]
    pub max_exp: Option<u32>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimdimArgs {
    #[arg(long)]
    pub copies: u32,
    #[arg(long)]
    pub ratio: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompressArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub range_size: usize,
    #[arg(long, default_value_t = 8)]
    pub domain_step: usize,
    #[arg(long, default_value_t = 1.0)]
    pub s_max: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DecompressArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Start image; defaults to uniform mid-gray.
    #[arg(long)]
    pub start: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KeyArgs {
    /// Map parameter; with `--x0`, overrides the CHAOSCOPE_KEY variable.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
}

impl KeyArgs {
    fn key(&self, warmup: u32) -> CliResult<ChaosKey> {
        match (self.mu, self.x0) {
            (Some(mu), Some(x0)) => ChaosKey::new(mu, x0, warmup).map_err(usage),
            (None, None) => {
                let text = std::env::var(KEY_ENV)
                    .map_err(|_| usage(format!("no key: pass --mu and --x0 or set {KEY_ENV}=\"mu,x0\"")))?;
                ChaosKey::parse(&text, warmup).map_err(|e| usage(format!("{KEY_ENV}: {e}")))
            }
            _ => Err(usage("--mu and --x0 must be given together")),
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EncryptArgs {
    #[command(flatten)]
    pub key: KeyArgs,
    #[arg(long, default_value_t = cipher::DEFAULT_WARMUP)]
    pub warmup: u32,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DecryptArgs {
    #[command(flatten)]
    pub key: KeyArgs,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct AvalancheArgs {
    #[command(flatten)]
    pub key: KeyArgs,
    #[arg(long, default_value_t = cipher::DEFAULT_WARMUP)]
    pub warmup: u32,
    #[arg(long, default_value_t = 10_240)]
    pub bytes: usize,
    #[arg(long, default_value_t = 16)]
    pub trials: usize,
}

fn write(operation: &'static str, path: &Path, bytes: &[u8]) -> CliResult<()> {
    io::write_atomic(path, bytes).map_err(failed(operation))
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let (system, x0) = a.system.resolve()?;
    let field = system.field().ok_or_else(|| usage(format!("`{}` is a map; use `iterate`", system.kind())))?;
    let config = a.tolerances.config()?;
    let (t0, t1) = a.span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(usage(format!("--span needs finite t0 < t1, got {t0}:{t1}")));
    }
    let traj = integrate(field, &x0, t0, t1, &config).map_err(failed("simulate"))?;
    write("simulate", &a.out, io::trajectory_csv(&traj).as_bytes())?;
    println!("{} accepted steps, t = {} .. {}", traj.steps(), t0, traj.last_time());
    Ok(())
}

fn iterate(a: &IterateArgs) -> CliResult<()> {
    let (system, x0) = a.system.resolve()?;
    let map = system.map().ok_or_else(|| usage(format!("`{}` is a flow; use `simulate`", system.kind())))?;
    if a.n == 0 || a.discard >= a.n {
        return Err(usage(format!("need 0 <= discard < n, got discard {} and n {}", a.discard, a.n)));
    }
    let orbit = iterate_map(map, &x0, a.n, a.discard).map_err(failed("iterate"))?;
    write("iterate", &a.out, io::map_orbit_csv(&orbit).as_bytes())
}

fn cobweb(a: &CobwebArgs) -> CliResult<()> {
    let params = LogisticParams::new(a.mu).map_err(usage)?;
    if !(0.0..=1.0).contains(&a.x0) || a.n == 0 {
        return Err(usage("need x0 in [0, 1] and n >= 1"));
    }
    let trace = cobweb_trace(params, a.x0, a.n).map_err(failed("cobweb"))?;
    write("cobweb", &a.out, io::cobweb_csv(&trace).as_bytes())?;
    if let Some(curve) = &a.curve {
        write("cobweb", curve, io::pairs_csv(&trace.curve_samples).as_bytes())?;
    }
    Ok(())
}

fn bifurcate(a: &BifurcateArgs) -> CliResult<()> {
    let (lo, hi) = a.mu_range;
    if !(0.0 <= lo && lo < hi && hi <= 4.0) {
        return Err(usage(format!("--mu-range needs 0 <= lo < hi <= 4, got {lo}:{hi}")));
    }
    if !(0.0..=1.0).contains(&a.x0) {
        return Err(usage(format!("--x0 must lie in [0, 1], got {}", a.x0)));
    }
    if a.steps == 0 || a.keep == 0 || a.discard < crate::analysis::MIN_BIFURCATION_DISCARD {
        return Err(usage(format!(
            "need steps >= 1, keep >= 1 and discard >= {}",
            crate::analysis::MIN_BIFURCATION_DISCARD
        )));
    }
    let diagram =
        bifurcation_scan(logistic_family, lo, hi, a.steps, a.x0, a.discard, a.keep).map_err(failed("bifurcate"))?;
    write("bifurcate", &a.out, io::bifurcation_csv(&diagram).as_bytes())
}

fn divergence(a: &DivergenceArgs) -> CliResult<()> {
    let (system, x0) = a.system.resolve()?;
    let field =
        system.field().ok_or_else(|| usage(format!("`{}` is a map; divergence needs a flow", system.kind())))?;
    let config = a.tolerances.config()?;
    if !(a.delta0 > 0.0 && a.delta0.is_finite() && a.t1 > 0.0 && a.t1.is_finite()) {
        return Err(usage("need delta0 > 0 and t1 > 0"));
    }
    let report = divergence_rate(field, &x0, a.delta0, a.t1, &config).map_err(failed("divergence"))?;
    if let Some(out) = &a.out {
        let rows =
            report.times.iter().zip(&report.log_separation).map(|(t, l)| [io::format_real(*t), io::format_real(*l)]);
        let text = io::csv_text(&["t".to_string(), "log_separation".to_string()], rows);
        write("divergence", out, text.as_bytes())?;
    }
    println!("rate {} over t = {} .. {}", report.fitted_rate, report.fit_window.0, report.fit_window.1);
    Ok(())
}

/// Equilibria for the flow presets that have closed forms.
fn equilibria_of(system: &System) -> CliResult<Vec<StateVector>> {
    let sv = |v: Vec<f64>| StateVector::new(v).map_err(failed("equilibria"));
    match system {
        System::Lorenz(p) => Ok(lorenz_equilibria(*p)),
        System::Linear1D(p) if p.a != 0.0 => Ok(vec![sv(vec![0.0])?]),
        System::Linear1D(_) => Err(usage("every point is an equilibrium when a = 0")),
        System::ChuaPaperCode => Ok(vec![sv(vec![0.0; 3])?]),
        System::Chua(p) => {
            // Outer equilibria solve x + g(x) = 0 on |x| > 1, with y = 0, z = -x.
            let mut out = vec![sv(vec![0.0; 3])?];
            if 1.0 + p.m1() != 0.0 {
                let x = (p.m1() - p.m0()) / (1.0 + p.m1());
                if x.abs() > 1.0 {
                    out.push(sv(vec![x, 0.0, -x])?);
                    out.push(sv(vec![-x, 0.0, x])?);
                }
            }
            Ok(out)
        }
        System::Logistic(_) | System::Henon(_) => {
            Err(usage(format!("`{}` is a map; equilibria applies to flows", system.kind())))
        }
    }
}

fn equilibria(a: &EquilibriaArgs) -> CliResult<()> {
    let sys_args = SystemArgs { system: a.system.clone(), params: a.params.clone(), x0: None };
    let (system, _) = sys_args.resolve()?;
    let field =
        system.field().ok_or_else(|| usage(format!("`{}` is a map; equilibria applies to flows", system.kind())))?;
    if !(a.tol >= 0.0) {
        return Err(usage("--tol must be non-negative"));
    }
    if let Some(Reals(point)) = &a.check {
        if point.len() != system.dim() {
            return Err(usage(format!("--check needs {} components", system.dim())));
        }
        let point = StateVector::new(point.clone()).map_err(usage)?;
        println!("{}", verify_equilibrium(field, &point, a.tol));
        return Ok(());
    }
    let points = equilibria_of(&system)?;
    let header: Vec<String> = (0..system.dim()).map(|k| format!("x{k}")).collect();
    let rows = points.iter().map(|p| p.iter().map(|v| io::format_real(*v)).collect::<Vec<_>>());
    let text = io::csv_text(&header, rows);
    match &a.out {
        Some(out) => write("equilibria", out, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn mandelbrot(a: &MandelbrotArgs) -> CliResult<()> {
    let [xmin, xmax, ymin, ymax] = a.window;
    let window = ComplexWindow::new(xmin, xmax, ymin, ymax, a.scale).map_err(usage)?;
    if a.nmax == 0 || !(a.threshold >= 2.0) {
        return Err(usage("need nmax >= 1 and threshold >= 2"));
    }
    let grid = mandelbrot_grid(window, a.nmax, a.threshold).map_err(failed("mandelbrot"))?;
    write("mandelbrot", &a.out, &io::escape_grid_pgm(&grid))
}

fn ifs(a: &IfsArgs) -> CliResult<()> {
    if a.size == 0 || a.size > 1 << 14 {
        return Err(usage(format!("--size must lie in 1..=16384, got {}", a.size)));
    }
    let image = match a.preset {
        IfsPreset::Sierpinski => sierpinski_raster(a.size, a.depth).map_err(failed("ifs"))?,
    };
    write("ifs", &a.out, &io::binary_pgm(&image))
}

fn boxdim(a: &BoxdimArgs) -> CliResult<()> {
    let gray = io::read_pgm(&a.input).map_err(failed("boxdim"))?;
    let image = io::binary_from_gray(&gray);
    let side = image.width().min(image.height());
    let max_exp = a.max_exp.unwrap_or(usize::BITS - 1 - side.leading_zeros());
    let estimate = box_count_dimension(&image, a.min_exp, max_exp).map_err(usage)?;
    println!("{}", estimate.dimension);
    Ok(())
}

fn simdim(a: &SimdimArgs) -> CliResult<()> {
    println!("{}", similarity_dimension(a.copies, a.ratio).map_err(usage)?);
    Ok(())
}

fn compress(a: &CompressArgs) -> CliResult<()> {
    let config = EncoderConfig { range_size: a.range_size, domain_step: a.domain_step, s_max: a.s_max, parallel: true };
    let image = io::read_pgm(&a.input).map_err(failed("compress"))?;
    config.validate_for(image.width(), image.height()).map_err(usage)?;
    let code = compression::pifs_encode_with(&image, &config).map_err(failed("compress"))?;
    write("compress", &a.out, &code.to_bytes().map_err(failed("compress"))?)
}

fn decompress(a: &DecompressArgs) -> CliResult<()> {
    if a.iterations == 0 {
        return Err(usage("--iterations must be at least 1"));
    }
    let code =
        PifsCode::from_bytes(&io::read_file(&a.input).map_err(failed("decompress"))?).map_err(failed("decompress"))?;
    let start = match &a.start {
        Some(p) => Some(io::read_pgm(p).map_err(failed("decompress"))?),
        None => None,
    };
    if let Some(s) = &start {
        if s.width() != code.width || s.height() != code.height {
            return Err(usage(format!(
                "start image is {}x{}, code is {}x{}",
                s.width(),
                s.height(),
                code.width,
                code.height
            )));
        }
    }
    let image = compression::pifs_decode(&code, a.iterations, start.as_ref()).map_err(failed("decompress"))?;
    write("decompress", &a.out, &io::gray_pgm(&image))
}

fn encrypt(a: &EncryptArgs) -> CliResult<()> {
    let key = a.key.key(a.warmup)?;
    let plaintext = io::read_file(&a.input).map_err(failed("encrypt"))?;
    let sealed = cipher::seal(&key, &plaintext).map_err(failed("encrypt"))?;
    write("encrypt", &a.out, &sealed)
}

fn decrypt(a: &DecryptArgs) -> CliResult<()> {
    let sealed = io::read_file(&a.input).map_err(failed("decrypt"))?;
    let warmup = cipher::container_warmup(&sealed).map_err(failed("decrypt"))?;
    let key = a.key.key(warmup)?;
    let plaintext = cipher::open(&key, &sealed).map_err(failed("decrypt"))?;
    write("decrypt", &a.out, &plaintext)
}

fn avalanche(a: &AvalancheArgs) -> CliResult<()> {
    let key = a.key.key(a.warmup)?;
    if a.bytes < cipher::MIN_AVALANCHE_BYTES || a.trials < cipher::MIN_AVALANCHE_TRIALS {
        return Err(usage(format!(
            "need --bytes >= {} and --trials >= {}",
            cipher::MIN_AVALANCHE_BYTES,
            cipher::MIN_AVALANCHE_TRIALS
        )));
    }
    println!("{}", cipher::avalanche_test(&key, a.bytes, a.trials).map_err(failed("avalanche"))?);
    Ok(())
}

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Iterate(a) => iterate(a),
        Command::Cobweb(a) => cobweb(a),
        Command::Bifurcate(a) => bifurcate(a),
        Command::Divergence(a) => divergence(a),
        Command::Equilibria(a) => equilibria(a),
        Command::Mandelbrot(a) => mandelbrot(a),
        Command::Ifs(a) => ifs(a),
        Command::Boxdim(a) => boxdim(a),
        Command::Simdim(a) => simdim(a),
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Encrypt(a) => encrypt(a),
        Command::Decrypt(a) => decrypt(a),
        Command::Avalanche(a) => avalanche(a),
    }
}

/// Folds a clap diagnostic into a single line, dropping the usage block.
fn one_line(e: &clap::Error) -> String {
    if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
        return "missing subcommand (see `chaoscope --help`)".to_string();
    }
    let rendered = e.to_string();
    let parts: Vec<&str> = rendered
        .lines()
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    parts.join(" ").trim_start_matches("error: ").to_string()
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("chaoscope: {}", one_line(&e));
            return 2;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("chaoscope: {e}");
            e.exit_code()
        }
    }
}
