mod config;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use zboundary::curves::CeVariant;
use zboundary::dirichlet::a_weights;
use zboundary::stochastic::{batch_sign_study, BatchConfig};
use zboundary::verify::{self, VerifyContext};
use zboundary::zseries::{sign_scan, z_xnu, BoundKind, SignReport, ZeEvaluator};
use zboundary::{CoeffSeries, Error};

use config::{CurveSource, Format, RunConfig, Target, What};

/// Boundary-term series of two-dimensional zeta integrals for elliptic curves.
#[derive(Parser)]
#[command(name = "zboundary", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for grid and batch work.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Args, Default)]
struct CurveArgs {
    /// 11a, 37a, an inline model a1,a2,a3,a4,a6, or a JSON curve file.
    #[arg(long, allow_hyphen_values = true)]
    curve: Option<String>,
    /// Conductor of an inline model.
    #[arg(long)]
    conductor: Option<u64>,
    /// Coefficient variant: qE (conductor only) or nE (with fiber data).
    #[arg(long, value_parser = parse_variant)]
    variant: Option<CeVariant>,
}

#[derive(Args, Default)]
struct GridArgs {
    #[arg(long)]
    x_lo: Option<f64>,
    #[arg(long)]
    x_hi: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Truncation point T; defaults to R/x_lo².
    #[arg(long = "T", alias = "cutoff")]
    t: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    /// Tail certificate: chain or sharp.
    #[arg(long)]
    bound: Option<BoundKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a coefficient series.
    Coeffs {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_enum)]
        what: Option<What>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Tabulate Z_E(x) with certified bounds.
    Ztable {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Certified sign scan of Z_E(x) or Z(x,ν).
    Signscan {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        target: Option<Target>,
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Partial Euler products at s = 1 over a ladder of cutoffs.
    Goldfeld {
        #[command(flatten)]
        curve: CurveArgs,
        /// Comma-separated cutoffs.
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<f64>>,
        /// Exponent r in L_T·(log T)^r.
        #[arg(long = "r")]
        r: Option<u32>,
    },
    /// Batch sign study over random Euler products.
    Omega {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        samples: Option<usize>,
        /// Primes up to this bound get random angles.
        #[arg(long)]
        prime_bound: Option<u64>,
        /// Coefficient limit, also the truncation point.
        #[arg(long)]
        limit: Option<usize>,
        /// Comma-separated primes with the numerator dropped.
        #[arg(long, value_delimiter = ',')]
        exclude: Option<Vec<u64>>,
    },
    /// Run the self-verification battery.
    Verify {
        /// Run a single criterion by id.
        #[arg(long)]
        only: Option<String>,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

fn parse_variant(s: &str) -> Result<CeVariant, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown variant `{s}` (use qE or nE)"))
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) | Error::Config(_) | Error::Domain(_) | Error::RequiresOverride(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Failed(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Failed(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn apply_curve(cfg: &mut RunConfig, a: &CurveArgs) {
    if let Some(c) = &a.curve {
        cfg.curve = CurveSource::Name(c.clone());
    }
    if a.conductor.is_some() {
        cfg.conductor = a.conductor;
    }
    if let Some(v) = a.variant {
        cfg.variant = v;
    }
}

fn apply_grid(cfg: &mut RunConfig, g: &GridArgs) {
    if let Some(v) = g.x_lo {
        cfg.grid.x_lo = v;
    }
    if let Some(v) = g.x_hi {
        cfg.grid.x_hi = v;
    }
    if let Some(v) = g.points {
        cfg.grid.points = v;
    }
    if g.t.is_some() {
        cfg.plan.t = g.t;
    }
    if let Some(v) = g.r {
        cfg.plan.r = v;
    }
    if let Some(v) = g.bound {
        cfg.bound = v;
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let g = &cli.global;
    if g.out.is_some() {
        cfg.out = g.out.clone();
    }
    if let Some(f) = g.format {
        cfg.format = f;
    }
    if g.threads.is_some() {
        cfg.threads = g.threads;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.rel_tol {
        cfg.budget.rel_tol = t;
    }
    let name = match &cli.command {
        Command::Coeffs { curve, what, limit } => {
            apply_curve(&mut cfg, curve);
            if let Some(w) = what {
                cfg.coeffs.what = *w;
            }
            if let Some(l) = limit {
                cfg.coeffs.limit = *l;
            }
            "coeffs"
        }
        Command::Ztable { curve, grid } => {
            apply_curve(&mut cfg, curve);
            apply_grid(&mut cfg, grid);
            "ztable"
        }
        Command::Signscan { curve, grid, target, nu } => {
            apply_curve(&mut cfg, curve);
            apply_grid(&mut cfg, grid);
            if let Some(t) = target {
                cfg.scan.target = *t;
            }
            if let Some(n) = nu {
                cfg.scan.nu = *n;
            }
            "signscan"
        }
        Command::Goldfeld { curve, ladder, r } => {
            apply_curve(&mut cfg, curve);
            if let Some(l) = ladder {
                cfg.goldfeld.ladder = l.clone();
            }
            if let Some(r) = r {
                cfg.goldfeld.r = *r;
            }
            "goldfeld"
        }
        Command::Omega { grid, samples, prime_bound, limit, exclude } => {
            apply_grid(&mut cfg, grid);
            if let Some(v) = samples {
                cfg.omega.samples = *v;
            }
            if let Some(v) = prime_bound {
                cfg.omega.prime_bound = *v;
            }
            if let Some(v) = limit {
                cfg.omega.limit = *v;
            }
            if let Some(v) = exclude {
                cfg.omega.excluded = v.clone();
            }
            "omega"
        }
        Command::Verify { .. } => "verify",
    };
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let out = Output::new(&cfg, name);
    match &cli.command {
        Command::Coeffs { .. } => cmd_coeffs(&cfg, &out),
        Command::Ztable { .. } => cmd_ztable(&cfg, &out),
        Command::Signscan { .. } => cmd_signscan(&cfg, &out),
        Command::Goldfeld { .. } => cmd_goldfeld(&cfg, &out),
        Command::Omega { .. } => cmd_omega(&cfg, &out),
        Command::Verify { only, inject_fault } => cmd_verify(&cfg, &out, only.as_deref(), inject_fault.as_deref()),
    }
}

/// Destination plus the metadata every emitted file carries.
struct Output {
    path: Option<PathBuf>,
    format: Format,
    meta: Vec<(String, String)>,
}

impl Output {
    fn new(cfg: &RunConfig, command: &str) -> Self {
        let meta = vec![
            ("tool".to_string(), format!("zboundary {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), command.to_string()),
            ("config_hash".to_string(), cfg.hash(command)),
            ("seed".to_string(), cfg.seed.to_string()),
            ("config".to_string(), cfg.canonical()),
        ];
        Self { path: cfg.out.clone(), format: cfg.format, meta }
    }

    fn with(&self, extra: &[(&str, String)]) -> Vec<(String, String)> {
        let mut m = self.meta.clone();
        m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        m
    }

    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn json<T: Serialize>(&self, meta: &[(String, String)], data: &T) -> Result<(), Failure> {
        let meta: serde_json::Map<String, serde_json::Value> =
            meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, &json!({ "meta": meta, "data": data }))
            .map_err(|e| Failure::Failed(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Metadata lines then `body`.
    fn csv<F>(&self, meta: &[(String, String)], body: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        let mut w = self.writer()?;
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn cmd_coeffs(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let curve = cfg.curve()?;
    let n = cfg.coeffs.limit;
    let series: CoeffSeries = match cfg.coeffs.what {
        What::Ce => curve.ce_coeffs(n, cfg.variant)?,
        What::Weights => a_weights(&curve.ce_coeffs(n, cfg.variant)?)?,
        What::L => curve.l_coeffs(n)?,
        What::ZetaESq => curve.zeta_e_sq_coeffs(n)?,
    };
    let (imin, vmin) = series.min();
    match out.format {
        Format::Csv => out.csv(&[], |w| series.write_csv(w, &out.meta))?,
        Format::Json => {
            let rows: Vec<(usize, f64)> = series.support().map(|i| (i, series.get(i))).collect();
            let meta = out.with(&[("label", series.label.clone()), ("limit", n.to_string())]);
            out.json(&meta, &rows)?;
        }
    }
    eprintln!("min {} = {vmin} at index {imin}", series.label);
    let must_be_nonneg = matches!(cfg.coeffs.what, What::Ce | What::Weights);
    if must_be_nonneg && vmin < 0.0 {
        return Err(Failure::Failed(format!("negative coefficient {vmin} at index {imin}")));
    }
    Ok(())
}

fn check_domain(cfg: &RunConfig) -> Result<(), Failure> {
    let plan = cfg.plan()?;
    let xmin = plan.x_min();
    if cfg.grid.x_lo < xmin * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "grid starts at x = {} but T = {} only admits x >= sqrt(R/T) = {xmin:.6}",
            cfg.grid.x_lo, plan.t
        ))
        .into());
    }
    Ok(())
}

type Meta = Vec<(&'static str, String)>;

fn scan(cfg: &RunConfig) -> Result<(SignReport, Meta), Failure> {
    let budget = cfg.budget();
    let g = cfg.grid;
    let bound = cfg.bound;
    match cfg.scan.target {
        Target::Ze => {
            check_domain(cfg)?;
            let plan = cfg.plan()?;
            let ev = ZeEvaluator::for_curve(&cfg.curve()?, cfg.variant, plan)?;
            let report = sign_scan(
                |x| {
                    let r = ev.z_e(x, &budget)?;
                    Ok((r.value, r.bound(bound)))
                },
                g.x_lo,
                g.x_hi,
                g.points,
            )?;
            let extra = vec![
                ("T", plan.t.to_string()),
                ("bound", format!("{bound:?}").to_lowercase()),
                ("m_eps", format!("{:e}", ev.m_eps)),
                ("m_one", format!("{:e}", ev.m_one)),
            ];
            Ok((report, extra))
        }
        Target::Z => {
            let nu = cfg.scan.nu;
            let report = sign_scan(
                |x| {
                    let z = z_xnu(x, nu, &budget)?;
                    Ok((z.value, z.bound))
                },
                g.x_lo,
                g.x_hi,
                g.points,
            )?;
            Ok((report, vec![("nu", nu.to_string())]))
        }
    }
}

fn cmd_ztable(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let cfg = &RunConfig { scan: Default::default(), ..cfg.clone() };
    let (report, extra) = scan(cfg)?;
    let meta = out.with(&extra);
    match out.format {
        Format::Csv => out.csv(&meta, |w| report.write_csv(w)),
        Format::Json => out.json(&meta, &report.points),
    }
}

fn cmd_signscan(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let (report, mut extra) = scan(cfg)?;
    match out.format {
        Format::Csv => {
            let br: Vec<String> = report.brackets.iter().map(|(a, b)| format!("{a:e}:{b:e}")).collect();
            extra.push(("brackets", br.join(" ")));
            extra.push(("prefix_sign", report.prefix_sign.map(String::from).unwrap_or_default()));
            extra.push(("prefix_end", report.prefix_end.map(|v| format!("{v:e}")).unwrap_or_default()));
            extra.push(("indeterminate", report.indeterminate.to_string()));
            out.csv(&out.with(&extra), |w| report.write_csv(w))
        }
        Format::Json => out.json(&out.with(&extra), &report),
    }
}

fn cmd_goldfeld(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let curve = cfg.curve()?;
    let r = cfg.goldfeld.r;
    let rows = curve.goldfeld_ladder(&cfg.goldfeld.ladder, r)?;
    match out.format {
        Format::Csv => out.csv(&out.meta, |w| {
            writeln!(w, "T,L_T,C1,L_T*(log T)^{r}")?;
            for row in &rows {
                writeln!(w, "{:e},{:.16e},{:.16e},{:.16e}", row.t, row.l_t, row.c1, row.trend)?;
            }
            Ok(())
        }),
        Format::Json => out.json(&out.meta, &rows),
    }
}

fn cmd_omega(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let o = &cfg.omega;
    let batch = BatchConfig {
        excluded: o.excluded.iter().copied().collect::<BTreeSet<u64>>(),
        bound: o.prime_bound,
        limit: o.limit,
        num_samples: o.samples,
        x_lo: cfg.grid.x_lo,
        x_hi: cfg.grid.x_hi,
        points: cfg.grid.points,
        seed: cfg.seed,
        plan: cfg.plan()?,
        bound_kind: cfg.bound,
    };
    let summary = batch_sign_study(&batch, &cfg.budget())?;
    match out.format {
        Format::Csv => {
            let q: Vec<String> = summary.first_change_quantiles.iter().map(|v| format!("{v:e}")).collect();
            let meta = out.with(&[
                ("nonneg_violations", summary.nonneg_violations.to_string()),
                (
                    "no_sign_change_fraction",
                    summary.no_sign_change_fraction.map(|v| v.to_string()).unwrap_or_default(),
                ),
                ("first_change_quantiles", q.join(" ")),
            ]);
            out.csv(&meta, |w| {
                writeln!(w, "index,seed,sign_changes,first_change,indeterminate")?;
                for s in &summary.samples {
                    let fc = s.first_change.map(|v| format!("{v:.16e}")).unwrap_or_default();
                    writeln!(w, "{},{},{},{},{}", s.index, s.seed, s.sign_changes, fc, s.indeterminate)?;
                }
                Ok(())
            })
        }
        Format::Json => out.json(&out.meta, &summary),
    }
}

fn cmd_verify(cfg: &RunConfig, out: &Output, only: Option<&str>, fault: Option<&str>) -> Result<(), Failure> {
    if let Some(id) = only {
        if verify::find(id).is_none() {
            let ids: Vec<&str> = verify::CRITERIA.iter().map(|c| c.id).collect();
            return Err(Failure::Usage(format!("unknown criterion `{id}`; known: {}", ids.join(", "))));
        }
    }
    let mut ctx = VerifyContext { budget: cfg.budget(), seed: cfg.seed, ..Default::default() };
    match fault {
        None => {}
        Some("bessel") => ctx.bessel_scale = 1.0 + 1e-6,
        Some(f) => return Err(Failure::Usage(format!("unknown fault `{f}`"))),
    }
    let only = only.and_then(verify::find).map(|c| c.id);
    let outcomes = verify::run(&ctx, only);
    match out.format {
        Format::Csv => out.csv(&[], |w| {
            for o in &outcomes {
                writeln!(w, "{}", o.line())?;
            }
            Ok(())
        })?,
        Format::Json => out.json(&out.meta, &outcomes)?,
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Failed(format!("failed criteria: {}", failed.join(", "))))
    }
}
