//! `sl2lab`: command-line front end of the SL(2,R) harmonic-analysis lab.
//!
//! Exit codes: 0 success, 1 check or computation failure, 2 usage or
//! configuration error.

use clap::{Args, Parser, Subcommand};
use sl2lab::config::RunConfig;
use sl2lab::packets::{read_packet_csv, Lab, Route};
use sl2lab::radial::{uniform_grid, RadialFunction};
use sl2lab::spherical::{spherical_phi, SpectralParameter};
use sl2lab::transforms::{an_form_transform, relative_l2_difference, spherical_transform};
use sl2lab::tube::SymbolFunction;
use sl2lab::verify::{run_suite, Suite};
use sl2lab::LabError;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sl2lab", version, about = "Spherical harmonic analysis on SL(2,R) at desk scale")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for tables and reports; stdout when absent.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `run.seed` of the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Table of phi_lambda(a_t).
    Spherical {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.5,1,2,4")]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,4")]
        ts: Vec<f64>,
    },
    /// Polar and AN-form transforms of exp(-beta t^2).
    Transform {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.5,1,2,4")]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 8.0)]
        t_max: f64,
        #[arg(long, default_value_t = 513)]
        nodes: usize,
    },
    /// Synthesizes a wave-packet and writes its (t, value) table.
    Wavepacket {
        /// Symbol in text form, e.g. `gaussian(0.5)`.
        #[arg(long)]
        symbol: String,
        /// Canonical packet of `h = symbol` by the given route.
        #[arg(long, value_parser = parse_route)]
        route: Option<Route>,
    },
    /// Runs a verification suite.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
    },
    /// Fits the Plancherel constant against exp(-t^2).
    Calibrate,
    /// Relative L2(J) difference of two wave-packet tables on [lo, hi].
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        lo: f64,
        #[arg(long, default_value_t = 4.0)]
        hi: f64,
        /// Pass threshold; `tolerances.dual_route` when absent.
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn parse_route(s: &str) -> Result<Route, String> {
    s.parse().map_err(|e: LabError| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: LabError| e.to_string())
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Config(_) | LabError::Parse(_) | LabError::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

struct Ctx {
    cfg: RunConfig,
    out: Option<PathBuf>,
}

impl Ctx {
    /// Writes `text` to `out/name`, or to stdout without an output directory.
    fn emit(&self, name: &str, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                let path = dir.join(name);
                fs::write(&path, text).map_err(|e| io_err(&path, e))?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        cfg.run.seed = seed;
    }
    let out = cli.global.out.clone().or_else(|| cfg.run.out.clone());
    let ctx = Ctx { cfg, out };
    match cli.command {
        Command::Spherical { lambdas, ts } => cmd_spherical(&ctx, &lambdas, &ts),
        Command::Transform { beta, lambdas, t_max, nodes } => cmd_transform(&ctx, beta, &lambdas, t_max, nodes),
        Command::Wavepacket { symbol, route } => cmd_wavepacket(&ctx, &symbol, route),
        Command::Verify { suite } => cmd_verify(&ctx, suite),
        Command::Calibrate => cmd_calibrate(&ctx),
        Command::Compare { a, b, lo, hi, threshold } => cmd_compare(&ctx, &a, &b, lo, hi, threshold),
    }
}

fn cmd_spherical(ctx: &Ctx, lambdas: &[f64], ts: &[f64]) -> Result<bool, Failure> {
    let mut csv = String::from("lambda,t,re,im\n");
    let mut ok = true;
    for &l in lambdas {
        for &t in ts {
            match spherical_phi(SpectralParameter::real(l), t) {
                Ok(v) => csv.push_str(&format!("{l:?},{t:?},{:?},{:?}\n", v.re, v.im)),
                Err(e) => {
                    ok = false;
                    csv.push_str(&format!("{l:?},{t:?},NaN,NaN\n"));
                    eprintln!("lambda {l}, t {t}: {e}");
                }
            }
        }
    }
    ctx.emit("spherical.csv", &csv)?;
    Ok(ok)
}

fn cmd_transform(ctx: &Ctx, beta: f64, lambdas: &[f64], t_max: f64, nodes: usize) -> Result<bool, Failure> {
    if !(beta > 0.0) {
        return Err(Failure::Usage("beta must be positive".into()));
    }
    if nodes < 4 || !(t_max > 0.0) {
        return Err(Failure::Usage("need t_max > 0 and at least 4 nodes".into()));
    }
    let f = RadialFunction::from_real_fn(uniform_grid(t_max, nodes), |t| (-beta * t * t).exp())?;
    let ratio = ctx.cfg.transforms.an_ratio;
    let mut csv = String::new();
    csv.push_str(&format!("# f: exp(-{beta:?} t^2) on [0,{t_max:?}] with {nodes} nodes\n"));
    if let Some(r) = ratio {
        csv.push_str(&format!("# an_ratio: {r:?}\n"));
    }
    csv.push_str("lambda,polar_re,polar_im,an_re,an_im,tail\n");
    for &l in lambdas {
        let lam = SpectralParameter::real(l);
        let polar = spherical_transform(&f, lam)?;
        let an = an_form_transform(&f, lam)?;
        let an_value = an.value / ratio.unwrap_or(1.0);
        csv.push_str(&format!(
            "{l:?},{:?},{:?},{:?},{:?},{:?}\n",
            polar.value.re,
            polar.value.im,
            an_value.re,
            an_value.im,
            polar.tail.relative()
        ));
    }
    ctx.emit("transform.csv", &csv)?;
    Ok(true)
}

fn cmd_wavepacket(ctx: &Ctx, symbol: &str, route: Option<Route>) -> Result<bool, Failure> {
    let s: SymbolFunction = symbol.parse()?;
    let lab = Lab::new(ctx.cfg.packets.synthesis.clone())?;
    let xi = ctx.cfg.tube.xi()?;
    // the header records kappa
    lab.calibration()?;
    let packet = match route {
        None => lab.spherical_wave_packet(&s)?,
        Some(Route::Direct) => lab.canonical_wave_packet_direct(&s, &xi)?,
        Some(Route::Factorized) => lab.canonical_wave_packet_factorized(&s, &xi)?,
    };
    let name = match route {
        None => "wavepacket.csv".to_string(),
        Some(r) => format!("wavepacket_{r}.csv"),
    };
    ctx.emit(&name, &packet.to_csv())?;
    Ok(true)
}

fn cmd_verify(ctx: &Ctx, suite: Suite) -> Result<bool, Failure> {
    let (report, timings) = run_suite(&ctx.cfg, suite)?;
    let text = report.to_text(&timings);
    print!("{text}");
    if let Some(dir) = &ctx.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let timings_json = serde_json::to_string_pretty(&timings).expect("timings serialize");
        for (name, body) in [("report.json", report.to_json()), ("report.txt", text), ("timings.json", timings_json)] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        }
        eprintln!("wrote report.json, report.txt, timings.json to {}", dir.display());
    }
    Ok(report.pass)
}

fn cmd_calibrate(ctx: &Ctx) -> Result<bool, Failure> {
    let mut synthesis = ctx.cfg.packets.synthesis.clone();
    synthesis.kappa = None;
    let lab = Lab::new(synthesis)?;
    let cal = lab.calibration()?;
    let pass = cal.residual <= ctx.cfg.tolerances.inversion;
    let mut text = serde_json::to_string_pretty(&cal).expect("calibration serializes");
    text.push('\n');
    ctx.emit("calibration.json", &text)?;
    eprintln!("kappa = {:?} (residual {:.3e}); freeze with `kappa = {:?}` under [packets]", cal.kappa, cal.residual, cal.kappa);
    Ok(pass)
}

fn cmd_compare(ctx: &Ctx, a: &Path, b: &Path, lo: f64, hi: f64, threshold: Option<f64>) -> Result<bool, Failure> {
    let read = |p: &Path| -> Result<RadialFunction, Failure> {
        let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        Ok(read_packet_csv(&text)?.1)
    };
    let (fa, fb) = (read(a)?, read(b)?);
    let diff = relative_l2_difference(&fa, &fb, lo, hi)?;
    let threshold = threshold.unwrap_or(ctx.cfg.tolerances.dual_route);
    let pass = diff <= threshold;
    println!(
        "relative L2(J) difference on [{lo}, {hi}]: {diff:.6e} (threshold {threshold:.1e}) {}",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(pass)
}
