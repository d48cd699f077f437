//! `freecontract` command-line front end.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use freecontract::additivity::{self, ScanConfig};
use freecontract::qchannel::{self, ChannelInstance};
use freecontract::{free_power, rmt, tnorm, AtomicMeasure, HermitianSpec};

use output::{Artifact, CliError, Format};

#[derive(Parser, Debug)]
#[command(name = "freecontract", version, about = "Free contraction norms, free convolution powers and random channels")]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance for iterative solvers.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file (stdout when absent). CSV outputs get a `<out>.meta.json` sidecar.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transforms of an atomic measure.
    Measure {
        #[command(subcommand)]
        op: MeasureOp,
    },
    /// Free convolution power `μ^{⊞T}`.
    Power(PowerArgs),
    /// The `(t)`-norm and its bounds.
    Tnorm(TnormArgs),
    /// Random-matrix compression spectrum.
    Rmt(RmtArgs),
    /// Random quantum channels.
    Channel {
        #[command(subcommand)]
        op: ChannelOp,
    },
    /// Additivity-violation gap.
    Violation {
        #[command(subcommand)]
        op: ViolationOp,
    },
}

#[derive(Args, Debug)]
struct MeasureFile {
    /// Measure JSON (`-` for stdin).
    #[arg(long)]
    measure: PathBuf,
}

#[derive(Subcommand, Debug)]
enum MeasureOp {
    /// Nevanlinna measure `ρ` of the reciprocal Cauchy transform.
    Rho(MeasureFile),
    /// Mass, mean and variance.
    Moments(MeasureFile),
    /// Voiculescu transform at a point of the upper half plane.
    Voiculescu {
        #[command(flatten)]
        file: MeasureFile,
        #[arg(long)]
        re: f64,
        #[arg(long)]
        im: f64,
    },
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[command(flatten)]
    file: MeasureFile,
    #[arg(long = "T")]
    power: f64,
    /// Points in the evenly spaced density table over the support hull.
    #[arg(long, default_value_t = 200)]
    density_grid: usize,
}

#[derive(Args, Debug)]
struct TnormArgs {
    /// Spectrum JSON (`-` for stdin).
    #[arg(long)]
    spec: PathBuf,
    /// One or more values in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    /// Report every bound, not only the exact value.
    #[arg(long)]
    all_bounds: bool,
    /// Norm bound `L ≥ ‖a‖` for the lower estimate (default `‖a‖`).
    #[arg(long)]
    l: Option<f64>,
}

#[derive(Args, Debug)]
struct RmtArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long = "N", default_value_t = 2000)]
    n: usize,
}

#[derive(Args, Debug)]
struct ChannelArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    t: f64,
}

#[derive(Subcommand, Debug)]
enum ChannelOp {
    /// Output spectra of Haar-random pure inputs, one row per input.
    Sample {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// `(Φ ⊗ Φ̄)` applied to the maximally entangled state.
    Bell {
        #[command(flatten)]
        ch: ChannelArgs,
    },
    /// Largest `‖Φ(X) − I/k‖₂` over random pure inputs.
    Concentration {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Multi-start search for the minimum output entropy.
    Hmin {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
}

#[derive(Subcommand, Debug)]
enum ViolationOp {
    /// Gap `g(k, r)` at one point.
    Eval {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        r: f64,
    },
    /// Gap over a log-k × r grid with the smallest violating dimension.
    Scan {
        #[arg(long, default_value_t = 1e4)]
        kmin: f64,
        #[arg(long, default_value_t = 1e5)]
        kmax: f64,
        #[arg(long, default_value_t = 200)]
        kpoints: usize,
        #[arg(long, default_value_t = 1.0)]
        rmin: f64,
        #[arg(long, default_value_t = 2.0)]
        rmax: f64,
        #[arg(long, default_value_t = 0.001)]
        rstep: f64,
        /// Also write the zero contour as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FREECONTRACT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("FREECONTRACT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    configure_threads()?;
    let ctx = Ctx { seed: cli.seed, tol: cli.tol, format: cli.format };
    let (artifact, extra) = match &cli.command {
        Command::Measure { op } => (measure(&ctx, op)?, None),
        Command::Power(a) => (power(&ctx, a)?, None),
        Command::Tnorm(a) => (tnorm_cmd(&ctx, a)?, None),
        Command::Rmt(a) => (rmt_cmd(&ctx, a)?, None),
        Command::Channel { op } => (channel(&ctx, op)?, None),
        Command::Violation { op } => violation(&ctx, op)?,
    };
    artifact.write(cli.out.as_deref())?;
    if let Some((path, svg)) = extra {
        output::write_file(&path, svg.as_bytes())?;
    }
    Ok(())
}

struct Ctx {
    seed: u64,
    tol: f64,
    format: Format,
}

impl Ctx {
    /// JSON body with `seed` and `tol` merged in, or CSV with them in the sidecar.
    fn emit<T: Serialize>(&self, command: &str, value: &T, csv: impl FnOnce() -> String) -> Result<Artifact, CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::Usage(e.to_string()))?;
        let meta = json!({ "command": command, "seed": self.seed, "tol": self.tol });
        match self.format {
            Format::Json => {
                if let Value::Object(map) = &mut v {
                    map.insert("command".into(), json!(command));
                    map.insert("seed".into(), json!(self.seed));
                    map.insert("tol".into(), json!(self.tol));
                }
                Ok(Artifact::json(v))
            }
            Format::Csv => Ok(Artifact::csv(csv(), meta)),
        }
    }
}

fn measure(ctx: &Ctx, op: &MeasureOp) -> Result<Artifact, CliError> {
    match op {
        MeasureOp::Rho(f) => {
            let m: AtomicMeasure = output::read_json(&f.measure)?;
            let rho = m.nevanlinna_rho()?;
            ctx.emit("measure rho", &rho, || atoms_csv(&rho))
        }
        MeasureOp::Moments(f) => {
            let m: AtomicMeasure = output::read_json(&f.measure)?;
            let (mean, variance) = m.moments()?;
            let v = json!({ "mass": m.total_mass(), "mean": mean, "variance": variance });
            ctx.emit("measure moments", &v, || format!("mass,mean,variance\n{},{},{}\n", m.total_mass(), mean, variance))
        }
        MeasureOp::Voiculescu { file, re, im } => {
            let m: AtomicMeasure = output::read_json(&file.measure)?;
            let z = Complex64::new(*re, *im);
            let phi = m.voiculescu_transform(z, ctx.tol)?;
            let v = json!({ "z": [re, im], "phi": [phi.re, phi.im] });
            ctx.emit("measure voiculescu", &v, || format!("z_re,z_im,phi_re,phi_im\n{re},{im},{},{}\n", phi.re, phi.im))
        }
    }
}

fn atoms_csv(m: &AtomicMeasure) -> String {
    let mut s = String::from("x,w\n");
    for a in m.atoms() {
        s.push_str(&format!("{},{}\n", a.x, a.w));
    }
    s
}

fn power(ctx: &Ctx, a: &PowerArgs) -> Result<Artifact, CliError> {
    let m: AtomicMeasure = output::read_json(&a.file.measure)?;
    let r = free_power(&m, a.power)?;
    let xs: Vec<f64> = if r.system().is_some() && a.density_grid > 0 {
        let (lo, hi) = r
            .support_components
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| (l.min(c.a), h.max(c.b)));
        let n = a.density_grid;
        (0..n)
            .map(|i| if n == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()
    } else {
        Vec::new()
    };
    let ds = r.density_many(&xs);
    let mut v = serde_json::to_value(&r).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Value::Object(map) = &mut v {
        let table: Vec<Value> = xs.iter().zip(&ds).map(|(x, d)| json!({ "x": x, "density": d })).collect();
        map.insert("density".into(), Value::Array(table));
    }
    ctx.emit("power", &v, || {
        let mut s = String::from("x,density\n");
        for (x, d) in xs.iter().zip(&ds) {
            s.push_str(&format!("{x},{d}\n"));
        }
        s
    })
}

fn tnorm_cmd(ctx: &Ctx, a: &TnormArgs) -> Result<Artifact, CliError> {
    let spec: HermitianSpec = output::read_json(&a.spec)?;
    if a.all_bounds {
        let reports = a
            .t
            .iter()
            .map(|&t| tnorm::report(&spec, t, a.l))
            .collect::<freecontract::Result<Vec<_>>>()?;
        ctx.emit("tnorm", &json!({ "reports": reports }), || {
            let mut s = format!("{}\n", tnorm::TNormReport::CSV_HEADER);
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        })
    } else {
        let rows = a
            .t
            .iter()
            .map(|&t| Ok(json!({ "t": t, "exact": tnorm::tnorm_exact(&spec, t)? })))
            .collect::<freecontract::Result<Vec<_>>>()?;
        ctx.emit("tnorm", &json!({ "reports": rows }), || {
            let mut s = String::from("t,exact\n");
            for r in &rows {
                s.push_str(&format!("{},{}\n", r["t"], r["exact"]));
            }
            s
        })
    }
}

fn rmt_cmd(ctx: &Ctx, a: &RmtArgs) -> Result<Artifact, CliError> {
    let spec: HermitianSpec = output::read_json(&a.spec)?;
    let sample = rmt::compressed_spectrum(&spec, a.t, a.n, ctx.seed)?;
    let exact = tnorm::tnorm_exact(&spec, a.t)?;
    let reference = free_power(&spec.measure(), 1.0 / a.t)?;
    let ks = rmt::ks_statistic(&sample.eigenvalues, &reference);
    let radius = sample.min().abs().max(sample.max().abs());
    let summary = json!({
        "N": a.n,
        "t": a.t,
        "rank": sample.eigenvalues.len(),
        "ks_distance": ks,
        "norm_estimate": a.t * radius,
        "tnorm_exact": exact,
        "generator": freecontract::rng::GENERATOR,
        "spec_sha256": output::spec_hash(&spec)?,
    });
    match ctx.format {
        Format::Json => {
            let mut v = summary;
            v["eigenvalues"] = json!(sample.eigenvalues);
            ctx.emit("rmt", &v, String::new)
        }
        Format::Csv => {
            let mut csv = format!("{}\n", rmt::CompressionSample::CSV_HEADER);
            for row in sample.csv_rows() {
                csv.push_str(&row);
                csv.push('\n');
            }
            let mut meta = summary;
            meta["command"] = json!("rmt");
            meta["seed"] = json!(ctx.seed);
            meta["tol"] = json!(ctx.tol);
            Ok(Artifact::csv(csv, meta))
        }
    }
}

fn build_channel(ctx: &Ctx, c: &ChannelArgs) -> Result<ChannelInstance, CliError> {
    Ok(qchannel::random_channel(c.k, c.n, c.t, ctx.seed)?)
}

fn channel_header(ch: &ChannelInstance) -> Value {
    json!({ "k": ch.k(), "n": ch.n(), "t": ch.effective_t(), "t_requested": ch.t(), "d": ch.d() })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

fn channel(ctx: &Ctx, op: &ChannelOp) -> Result<Artifact, CliError> {
    match op {
        ChannelOp::Sample { ch, count } => {
            if *count == 0 {
                return Err(CliError::Usage("--count must be at least 1".into()));
            }
            let ch = build_channel(ctx, ch)?;
            let spectra = qchannel::sample_output_spectra(&ch, *count, ctx.seed)?;
            let v = merge(channel_header(&ch), json!({ "count": count, "spectra": spectra }));
            let meta_header = channel_header(&ch);
            let artifact = ctx.emit("channel sample", &v, || {
                let cols: Vec<String> = (1..=ch.k()).map(|i| format!("lambda{i}")).collect();
                let mut s = format!("sample,{}\n", cols.join(","));
                for (j, sp) in spectra.iter().enumerate() {
                    let vals: Vec<String> = sp.iter().map(|x| x.to_string()).collect();
                    s.push_str(&format!("{j},{}\n", vals.join(",")));
                }
                s
            })?;
            Ok(artifact.with_meta(meta_header))
        }
        ChannelOp::Bell { ch } => {
            let ch = build_channel(ctx, ch)?;
            let state = qchannel::bell_output(&ch)?;
            let spectrum = state.eigenvalues()?;
            let entropy = qchannel::entropy(&spectrum, 1.0)?;
            let t = ch.effective_t();
            let bound = additivity::product_bound(ch.k() as u64, t).ok();
            let v = merge(
                channel_header(&ch),
                json!({
                    "lambda_max": spectrum[0],
                    "entropy": entropy,
                    "product_bound": bound,
                    "spectrum": spectrum,
                }),
            );
            let row = format!(
                "k,n,t,d,lambda_max,entropy,product_bound\n{},{},{},{},{},{},{}\n",
                ch.k(),
                ch.n(),
                t,
                ch.d(),
                spectrum[0],
                entropy,
                bound.map(|b| b.to_string()).unwrap_or_default()
            );
            ctx.emit("channel bell", &v, || row)
        }
        ChannelOp::Concentration { ch, count } => {
            let ch = build_channel(ctx, ch)?;
            let r = qchannel::concentration_stat(&ch, *count, ctx.seed)?;
            if !r.in_regime {
                eprintln!("warning: t = {} exceeds 1 − 1/k = {}; the bound is not claimed here", r.t, 1.0 - 1.0 / r.k as f64);
            }
            ctx.emit("channel concentration", &r, || {
                format!(
                    "k,n,t,d,count,max_l2,bound,seed,in_regime\n{},{},{},{},{},{},{},{},{}\n",
                    r.k, r.n, r.t, r.d, r.count, r.max_l2, r.bound, r.seed, r.in_regime
                )
            })
        }
        ChannelOp::Hmin { ch, restarts } => {
            let ch = build_channel(ctx, ch)?;
            let est = qchannel::hmin_estimate(&ch, *restarts, ctx.seed)?;
            let v = merge(channel_header(&ch), serde_json::to_value(&est).map_err(|e| CliError::Usage(e.to_string()))?);
            ctx.emit("channel hmin", &v, || {
                format!("k,n,t,d,restarts,hmin\n{},{},{},{},{},{}\n", ch.k(), ch.n(), ch.effective_t(), ch.d(), restarts, est.value)
            })
        }
    }
}

fn violation(ctx: &Ctx, op: &ViolationOp) -> Result<(Artifact, Option<(PathBuf, String)>), CliError> {
    match op {
        ViolationOp::Eval { k, r } => {
            let rep = additivity::gap_g(*k, *r)?;
            let a = ctx.emit("violation eval", &rep, || {
                format!(
                    "k,r,t,g,product_bound,single_lower,violated\n{},{},{:e},{:e},{},{},{}\n",
                    rep.k, rep.r, rep.t, rep.g, rep.product_bound, rep.single_lower, rep.violated
                )
            })?;
            Ok((a, None))
        }
        ViolationOp::Scan { kmin, kmax, kpoints, rmin, rmax, rstep, svg } => {
            let cfg = ScanConfig {
                k_min: *kmin,
                k_max: *kmax,
                k_points: *kpoints,
                r_min: *rmin,
                r_max: *rmax,
                r_step: *rstep,
            };
            let res = additivity::scan_violation(&cfg)?;
            let a = ctx.emit("violation scan", &res.summary, || {
                let mut s = format!("{}\n", additivity::SCAN_CSV_HEADER);
                for row in res.csv_rows() {
                    s.push_str(&row);
                    s.push('\n');
                }
                s
            })?;
            let summary = serde_json::to_value(&res.summary).map_err(|e| CliError::Usage(e.to_string()))?;
            let a = a.with_meta(summary);
            Ok((a, svg.clone().map(|p| (p, res.contour_svg()))))
        }
    }
}
