mod grid;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kpairs_core::arith::{build_sieves, SieveTables, SIEVE_MEM_ENV};
use kpairs_core::constants::{
    constant_bundle, fraction_string, leading_constant_ck, residue_cross_check,
};
use kpairs_core::counters::{
    count_coprime_pairs, count_pairs_kernel, count_pairs_naive_guarded, count_pairs_radical,
    s2_dirichlet_identity, sum_tau_powers, weighted_sums, CountResult, NAIVE_GUARD,
};
use kpairs_core::par::{available_workers, effective_workers};
use kpairs_core::verify::{
    convergence_table, fit_u_over_grid, oracle_cross_validate, CounterChoice,
};
use kpairs_core::{selftest, Error};

use grid::{parse_grid, parse_u64, Grid};

#[derive(Parser)]
#[command(
    name = "kpairs",
    version,
    about = "Exact counts of pairs whose product is a k-th power",
    after_help = format!("Environment:\n  {SIEVE_MEM_ENV}  byte cap for sieve tables (default 1 GiB)")
)]
struct Cli {
    /// Worker threads for the counters [default: available parallelism]
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CountAlgorithm {
    /// S_k(H) by testing all pairs
    Naive,
    /// S_k(H) from a k-free sieve up to H
    Kernel,
    /// S_k(H) by walking radicals up to H^{2/k}
    Radical,
    /// S_k*(H), coprime pairs
    Coprime,
    /// T_k(H), sum of tau(n^k)
    Tau,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableCounter {
    Naive,
    Kernel,
    Radical,
}

impl From<TableCounter> for CounterChoice {
    fn from(c: TableCounter) -> Self {
        match c {
            TableCounter::Naive => CounterChoice::Naive,
            TableCounter::Kernel => CounterChoice::Kernel,
            TableCounter::Radical => CounterChoice::Radical,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact count for one k and H
    Count {
        #[arg(long, value_parser = parse_k)]
        k: u32,
        #[arg(long, value_parser = parse_h)]
        h: u64,
        #[arg(long, value_enum, default_value_t = CountAlgorithm::Radical)]
        algorithm: CountAlgorithm,
        /// Largest H the naive counter accepts
        #[arg(long, default_value_t = NAIVE_GUARD)]
        naive_guard: u64,
    },
    /// Weighted sums U_k(H) and W_k(H) with rounding bounds
    Weights {
        #[arg(long, value_parser = parse_k)]
        k: u32,
        #[arg(long, value_parser = parse_h)]
        h: u64,
    },
    /// P_k, F_k, c_k and the residue multipliers
    Constants {
        #[arg(long, value_parser = parse_k)]
        k: u32,
        /// Target relative error of P_k
        #[arg(long, value_parser = parse_precision, default_value_t = 1e-12)]
        precision: f64,
    },
    /// Convergence table as CSV: k,H,exact,main_term,ratio,scaled_residual
    Table {
        #[arg(long, value_parser = parse_k)]
        k: u32,
        /// START:STOP:geometric:POINTS or a comma-separated list
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
        #[arg(long, value_enum, default_value_t = TableCounter::Radical)]
        algorithm: TableCounter,
        #[arg(long, value_parser = parse_precision, default_value_t = 1e-12)]
        precision: f64,
    },
    /// Fit U_k(H) by a polynomial in log H and compare its leading term with c_k
    Fit {
        #[arg(long, value_parser = parse_k)]
        k: u32,
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
        #[arg(long, value_parser = parse_precision, default_value_t = 1e-12)]
        precision: f64,
    },
    /// Cross-validate the counters and check the exact identities
    Verify {
        #[arg(long, value_parser = parse_h, default_value = "2000")]
        h_max: u64,
        #[arg(long, value_parser = parse_k, value_delimiter = ',', default_value = "2,3,4,5,6")]
        ks: Vec<u32>,
        /// Check the k=2 Dirichlet identity for every H up to this
        #[arg(long, value_parser = parse_h, default_value = "10000")]
        identity_h: u64,
    },
    /// Quick run of the invariant checks at small scale
    Selftest,
}

fn parse_k(s: &str) -> Result<u32, String> {
    let k: u32 = s.trim().parse().map_err(|_| format!("bad k {s:?}"))?;
    if k < 2 {
        return Err(format!("k must be at least 2, got {k}"));
    }
    Ok(k)
}

fn parse_h(s: &str) -> Result<u64, String> {
    let h = parse_u64(s)?;
    if h == 0 {
        return Err("H must be at least 1".into());
    }
    Ok(h)
}

fn parse_precision(s: &str) -> Result<f64, String> {
    let p: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("bad precision {s:?}"))?;
    if !(p > 0.0 && p < 1.0) {
        return Err(format!("precision must lie in (0, 1), got {s}"));
    }
    Ok(p)
}

#[derive(Serialize)]
struct Provenance {
    algorithm: String,
    workers: usize,
    elapsed_secs: f64,
    tool_version: &'static str,
}

/// One JSON object per run: the result's own fields plus provenance.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    #[serde(flatten)]
    result: &'a T,
    provenance: Provenance,
}

struct Ctx {
    workers: usize,
    format: Format,
    out: Box<dyn Write>,
}

impl Ctx {
    fn json<T: Serialize>(
        &mut self,
        command: &str,
        result: &T,
        algorithm: &str,
        start: Instant,
    ) -> anyhow::Result<()> {
        let env = Envelope {
            command,
            result,
            provenance: Provenance {
                algorithm: algorithm.to_string(),
                workers: effective_workers(self.workers),
                elapsed_secs: start.elapsed().as_secs_f64(),
                tool_version: env!("CARGO_PKG_VERSION"),
            },
        };
        serde_json::to_writer_pretty(&mut self.out, &env)?;
        writeln!(self.out)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct CsvRow {
    k: u32,
    #[serde(rename = "H")]
    h: u64,
    exact: String,
    main_term: String,
    ratio: String,
    scaled_residual: String,
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct WeightsReport {
    u: kpairs_core::counters::WeightedSumResult,
    w: kpairs_core::counters::WeightedSumResult,
}

#[derive(Serialize)]
struct VerifyReport {
    cross_validation: kpairs_core::verify::CrossValidation,
    dirichlet_h_max: u64,
    dirichlet_passed: bool,
    residue_ks: Vec<u32>,
    residues_passed: bool,
}

#[derive(Serialize)]
struct SelftestReport {
    passed: bool,
    checks: Vec<selftest::Check>,
}

#[derive(Serialize)]
struct TableReport {
    k: u32,
    ck: f64,
    rows: Vec<kpairs_core::verify::ConvergenceRow>,
}

fn count(
    ctx: &mut Ctx,
    k: u32,
    h: u64,
    algorithm: CountAlgorithm,
    guard: u64,
) -> anyhow::Result<()> {
    let start = Instant::now();
    let w = ctx.workers;
    let res: CountResult = match algorithm {
        CountAlgorithm::Naive => count_pairs_naive_guarded(h, k, guard, w)?,
        CountAlgorithm::Kernel => count_pairs_kernel(h, k, &build_sieves(h, k)?, w)?,
        CountAlgorithm::Radical => count_pairs_radical(h, k, w)?,
        CountAlgorithm::Coprime => {
            let z = kpairs_core::arith::integer_kth_root(h, k)?;
            count_coprime_pairs(h, k, &plain(z)?)?
        }
        CountAlgorithm::Tau => {
            let n = kpairs_core::arith::root_floor_u128(u128::from(h) * u128::from(h), k);
            let n = u64::try_from(n).context("H^{2/k} exceeds u64")?;
            sum_tau_powers(h, k, &plain(n)?)?
        }
    };
    match ctx.format {
        Format::Json => ctx.json("count", &res, res.algorithm.name(), start),
        Format::Text => {
            let o = &mut ctx.out;
            let kind = serde_json::to_value(res.kind)?;
            writeln!(o, "quantity   {}", kind.as_str().unwrap_or("?"))?;
            writeln!(o, "k          {}", res.k)?;
            writeln!(o, "H          {}", res.h)?;
            writeln!(o, "value      {}", res.value)?;
            writeln!(o, "algorithm  {}", res.algorithm.name())?;
            writeln!(o, "workers    {}", res.workers)?;
            writeln!(o, "elapsed    {:.6}s", res.elapsed.as_secs_f64())?;
            Ok(())
        }
    }
}

fn plain(n: u64) -> kpairs_core::Result<SieveTables> {
    SieveTables::build(n.max(1), None, kpairs_core::arith::SieveBudget::from_env())
}

fn weights(ctx: &mut Ctx, k: u32, h: u64) -> anyhow::Result<()> {
    let start = Instant::now();
    let (u, w) = weighted_sums(h, k, ctx.workers)?;
    let rep = WeightsReport { u, w };
    match ctx.format {
        Format::Json => ctx.json("weights", &rep, "radical", start),
        Format::Text => {
            let o = &mut ctx.out;
            writeln!(o, "k          {k}")?;
            writeln!(o, "H          {h}")?;
            writeln!(o, "pairs      {}", rep.u.terms)?;
            writeln!(
                o,
                "U_k        {}  (error <= {:.3e})",
                rep.u.value, rep.u.error_bound
            )?;
            writeln!(
                o,
                "W_k        {}  (error <= {:.3e})",
                rep.w.value, rep.w.error_bound
            )?;
            Ok(())
        }
    }
}

fn constants(ctx: &mut Ctx, k: u32, precision: f64) -> anyhow::Result<()> {
    let start = Instant::now();
    let b = constant_bundle(k, precision)?;
    match ctx.format {
        Format::Json => ctx.json("constants", &b, "euler_product", start),
        Format::Text => {
            let o = &mut ctx.out;
            writeln!(o, "k          {k}")?;
            writeln!(
                o,
                "P_k        {}  (rel. error <= {:.2e}, cutoff {}, {} series terms)",
                b.pk.value, b.pk.error_bound, b.pk.cutoff, b.pk.series_terms
            )?;
            writeln!(o, "F_k        {}", fraction_string(&b.factor))?;
            writeln!(
                o,
                "c_k        {}  (rel. error <= {:.2e})",
                b.ck.value, b.ck.error_bound
            )?;
            writeln!(o, "L_0/P_k    {}", fraction_string(&b.residues.l0))?;
            for (m, l) in &b.residues.lm {
                writeln!(o, "L_{m}/P_k    {}", fraction_string(l))?;
            }
            Ok(())
        }
    }
}

fn table(
    ctx: &mut Ctx,
    k: u32,
    grid: &Grid,
    counter: TableCounter,
    precision: f64,
) -> anyhow::Result<()> {
    let start = Instant::now();
    let ck = leading_constant_ck(k, precision)?.value;
    let choice = CounterChoice::from(counter);
    let rows = convergence_table(k, &grid.0, choice, ck, ctx.workers)?;
    let name = serde_json::to_value(choice)?;
    let name = name.as_str().unwrap_or("?").to_string();
    match ctx.format {
        Format::Json => ctx.json("table", &TableReport { k, ck, rows }, &name, start),
        Format::Text => {
            let mut w = csv::Writer::from_writer(&mut ctx.out);
            for r in rows {
                w.serialize(CsvRow {
                    k: r.k,
                    h: r.h,
                    exact: r.exact.to_string(),
                    main_term: full(r.main_term),
                    ratio: full(r.ratio),
                    scaled_residual: full(r.scaled_residual),
                })?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn fit(ctx: &mut Ctx, k: u32, grid: &Grid, precision: f64) -> anyhow::Result<()> {
    let start = Instant::now();
    let ck = leading_constant_ck(k, precision)?.value;
    let rep = fit_u_over_grid(k, &grid.0, ck, ctx.workers)?;
    match ctx.format {
        Format::Json => ctx.json("fit", &rep, "svd_least_squares", start),
        Format::Text => {
            let o = &mut ctx.out;
            writeln!(o, "k                   {k}")?;
            writeln!(o, "grid                {:?}", rep.grid)?;
            for (i, a) in rep.coefficients.iter().enumerate() {
                writeln!(o, "a_{i:<17} {a}")?;
            }
            writeln!(o, "leading             {}", rep.leading)?;
            writeln!(o, "c_k                 {}", rep.reference)?;
            writeln!(o, "relative_deviation  {}", rep.relative_deviation)?;
            Ok(())
        }
    }
}

fn verify(ctx: &mut Ctx, h_max: u64, ks: &[u32], identity_h: u64) -> anyhow::Result<()> {
    let start = Instant::now();
    let cv = oracle_cross_validate(h_max, ks, ctx.workers)?;
    let tables = plain(identity_h)?;
    for h in 1..=identity_h {
        let (l, r) = s2_dirichlet_identity(h, &tables, ctx.workers)?;
        if l != r {
            return Err(Error::Validation {
                h,
                k: 2,
                detail: format!("Dirichlet identity: {l} != {r}"),
            }
            .into());
        }
    }
    let residue_ks: Vec<u32> = (2..=20).collect();
    for &k in &residue_ks {
        let c = residue_cross_check(k)?;
        if !c.holds {
            return Err(Error::Validation {
                h: 0,
                k,
                detail: format!(
                    "residue sum {} != {}",
                    fraction_string(&c.residue_sum),
                    fraction_string(&c.closed_form)
                ),
            }
            .into());
        }
    }
    let rep = VerifyReport {
        cross_validation: cv,
        dirichlet_h_max: identity_h,
        dirichlet_passed: true,
        residue_ks,
        residues_passed: true,
    };
    match ctx.format {
        Format::Json => ctx.json("verify", &rep, "naive+kernel+radical", start),
        Format::Text => {
            let o = &mut ctx.out;
            writeln!(
                o,
                "counters agree on {} probes (H <= {h_max}, k in {ks:?})",
                rep.cross_validation.probes
            )?;
            writeln!(o, "Dirichlet identity holds for H <= {identity_h}")?;
            writeln!(o, "residue identity holds for k = 2..20")?;
            writeln!(o, "ok ({:.2}s)", start.elapsed().as_secs_f64())?;
            Ok(())
        }
    }
}

fn run_selftest(ctx: &mut Ctx) -> anyhow::Result<bool> {
    let start = Instant::now();
    let checks = selftest::run();
    let passed = checks.iter().all(|c| c.passed);
    match ctx.format {
        Format::Json => ctx.json(
            "selftest",
            &SelftestReport { passed, checks },
            "selftest",
            start,
        )?,
        Format::Text => {
            for c in &checks {
                let tag = if c.passed { "ok  " } else { "FAIL" };
                if c.detail.is_empty() {
                    writeln!(ctx.out, "{tag} {}", c.name)?;
                } else {
                    writeln!(ctx.out, "{tag} {}: {}", c.name, c.detail)?;
                }
            }
        }
    }
    Ok(passed)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Resource(_)) => 3,
        Some(Error::Domain(_) | Error::Range { .. }) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    let mut ctx = Ctx {
        workers: cli.threads.map_or_else(available_workers, |t| t as usize),
        format: cli.format,
        out,
    };
    let ok = match &cli.command {
        Command::Count {
            k,
            h,
            algorithm,
            naive_guard,
        } => count(&mut ctx, *k, *h, *algorithm, *naive_guard).map(|_| true),
        Command::Weights { k, h } => weights(&mut ctx, *k, *h).map(|_| true),
        Command::Constants { k, precision } => constants(&mut ctx, *k, *precision).map(|_| true),
        Command::Table {
            k,
            grid,
            algorithm,
            precision,
        } => table(&mut ctx, *k, grid, *algorithm, *precision).map(|_| true),
        Command::Fit { k, grid, precision } => fit(&mut ctx, *k, grid, *precision).map(|_| true),
        Command::Verify {
            h_max,
            ks,
            identity_h,
        } => verify(&mut ctx, *h_max, ks, *identity_h).map(|_| true),
        Command::Selftest => run_selftest(&mut ctx),
    }?;
    ctx.out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
