use clap::{Args, Parser, Subcommand};
use pellsum::amplify::{
    holder_amplification_check, lemma2_enumerate, proposition_cancellation, AmplificationPlan,
};
use pellsum::arith::{is_prime, is_square, primes_in};
use pellsum::expsum::{
    complete_square_character_sum, h_range, incomplete_kloosterman_sq, KloostermanQuery, SumValue,
    DEFAULT_H_EPS,
};
use pellsum::factor::{
    box_partition, exceptional_set_with, partition_sum_identity, psi_smooth_count_with,
    ExceptionalParams, SpfTable,
};
use pellsum::fouvry::{
    admissible_main_term, b_branch, coefficient_table, excluded_deficit, hooley_coefficient,
    range_parameters, restricted_bound_probe,
};
use pellsum::output::{Format, Record, RecordWriter};
use pellsum::pell::{check_power_identity, count_solutions, fundamental_solution};
use pellsum::{Budget, Error};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pellsum",
    version,
    about = "Pell counts and Kloosterman-sum experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Largest enumeration size allowed.
    #[arg(long, global = true, default_value_t = Budget::DEFAULT.0)]
    budget: u64,
    /// Seed for any sampling.
    #[arg(long, global = true, default_value_t = 20_240_601)]
    seed: u64,
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {s}"))?;
    let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

#[derive(Subcommand)]
enum Command {
    /// Fundamental Pell solutions for every nonsquare D in a range.
    PellTable {
        #[arg(long, default_value_t = 2)]
        from: u64,
        #[arg(long)]
        to: u64,
    },
    /// S^f(x, α) against the main-term prediction.
    HooleyCompare {
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<u64>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Also report the residuals of the power identity.
        #[arg(long)]
        identity: bool,
    },
    /// Incomplete sum of e_q(a·x̄²) over x ≤ N.
    Kloosterman {
        #[arg(long)]
        q: u64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        a: Vec<i64>,
        #[arg(long)]
        n: u64,
    },
    /// Exceptional set size against its budgets.
    ExceptionalSet {
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        no_spacing: bool,
        #[arg(long)]
        strict: bool,
        /// Also build the box partition.
        #[arg(long)]
        boxes: bool,
        /// Smooth counts ψ(N, N^α) for these α.
        #[arg(long, value_delimiter = ',')]
        psi_alpha: Vec<f64>,
    },
    /// Direct restricted sum against the sum over boxes.
    PartitionCheck {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        q: u64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        a: Vec<i64>,
    },
    /// Solutions of equal sums of inverse squares over primes in (M/2, M].
    Lemma2 {
        #[arg(long, default_value_t = 2)]
        ell: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
    },
    /// Iterated Hölder bound and density norms for a plan.
    AmplifyCheck {
        #[arg(long)]
        q: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        beta_i: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        a: i64,
        /// Prime intervals lo:hi, one per β_i; defaults to (M_i/2, M_i].
        #[arg(long, value_parser = parse_range)]
        interval: Vec<(u64, u64)>,
    },
    /// Cancellation of the restricted sum for sampled a.
    Cancellation {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Main-term coefficients as functions of α.
    Coefficients {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.25,0.5,0.75,1,1.5,2.5,3"
        )]
        alpha: Vec<f64>,
    },
    /// Admissible-region main term and the deficit from the excluded range.
    RegionTerm {
        #[arg(long)]
        x: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 3)]
        r: u32,
    },
    /// Restricted inner sums e(h ū₂²/u₁²) with the exceptional u₂ removed.
    ProbeTrilinear {
        #[arg(long, value_parser = parse_range)]
        u1: (u64, u64),
        #[arg(long, value_parser = parse_range)]
        u2: (u64, u64),
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 3)]
        r: u32,
        /// Frequency cutoff H; derived from --x and --alpha when omitted.
        #[arg(long)]
        h_max: Option<u64>,
        #[arg(long, default_value_t = 1_000_000.0)]
        x: f64,
        #[arg(long, default_value_t = 0.55)]
        alpha: f64,
        /// ε in H = x^{α−1/2+ε}.
        #[arg(long, default_value_t = DEFAULT_H_EPS)]
        eps: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PellTable { .. } => "pell-table",
            Command::HooleyCompare { .. } => "hooley-compare",
            Command::Kloosterman { .. } => "kloosterman",
            Command::ExceptionalSet { .. } => "exceptional-set",
            Command::PartitionCheck { .. } => "partition-check",
            Command::Lemma2 { .. } => "lemma2",
            Command::AmplifyCheck { .. } => "amplify-check",
            Command::Cancellation { .. } => "cancellation",
            Command::Coefficients { .. } => "coefficients",
            Command::RegionTerm { .. } => "region-term",
            Command::ProbeTrilinear { .. } => "probe-trilinear",
        }
    }
}

enum Failure {
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Out<W> = RecordWriter<W>;

fn sum_record(kind: &'static str, s: &SumValue) -> Record {
    Record::new(kind)
        .with("real", s.real_part)
        .with("imag", s.imag_part)
        .with("abs", s.abs())
        .with("terms", s.term_count)
        .with("cancellation", s.cancellation_ratio)
}

fn run<W: Write>(cmd: &Command, common: &Common, out: &mut Out<W>) -> Result<(), Failure> {
    let budget = Budget(common.budget);
    out.write(
        &Record::new("config")
            .with("command", cmd.name())
            .with("seed", common.seed)
            .with("budget", common.budget),
    )?;
    match cmd {
        Command::PellTable { from, to } => {
            budget.check(to.saturating_sub(*from) as u128)?;
            for d in (*from).max(2)..=*to {
                if is_square(d) {
                    continue;
                }
                let s = fundamental_solution(d)?;
                out.write(
                    &Record::new("pell")
                        .with("d", d)
                        .with("t", &s.t)
                        .with("u", &s.u)
                        .with("eps_log", s.eps_log),
                )?;
            }
        }
        Command::HooleyCompare { x, alpha, identity } => {
            for &x in x {
                let c = count_solutions(x, *alpha)?;
                let xf = x as f64;
                let main = hooley_coefficient(*alpha) * xf.sqrt() * xf.ln().powi(2);
                out.write(
                    &Record::new("hooley")
                        .with("x", x)
                        .with("alpha", *alpha)
                        .with("s_f", c.count_fundamental)
                        .with("s_all", c.count_all_powers)
                        .with("main_term", main)
                        .with("ratio", c.count_fundamental as f64 / main)
                        .with("b_main_term", c.main_term)
                        .with("b_ratio", c.count_fundamental as f64 / c.main_term),
                )?;
                if *identity {
                    let rep = check_power_identity(x, *alpha)?;
                    for r in &rep.residuals {
                        out.write(
                            &Record::new("identity")
                                .with("x", x)
                                .with("alpha", *alpha)
                                .with("shift", r.variant.name())
                                .with("shifted_alpha", r.shifted_alpha)
                                .with("shifted_count", r.shifted_count)
                                .with("residual", r.residual),
                        )?;
                    }
                }
            }
        }
        Command::Kloosterman { q, a, n } => {
            budget.check(*n as u128)?;
            for &a in a {
                let s = incomplete_kloosterman_sq(&KloostermanQuery::new(*q, a, *n))?;
                out.write(
                    &sum_record("kloosterman", &s)
                        .with("q", *q)
                        .with("a", a)
                        .with("n", *n),
                )?;
                if is_prime(*q) && *q <= budget.0 {
                    let c = complete_square_character_sum(*q, a)?;
                    out.write(&sum_record("complete", &c).with("q", *q).with("a", a))?;
                }
            }
        }
        Command::ExceptionalSet {
            n,
            beta,
            r,
            no_spacing,
            strict,
            boxes,
            psi_alpha,
        } => {
            let table = SpfTable::new(*n)?;
            for &b in beta {
                let params = ExceptionalParams::new(*n, b, *r)?
                    .with_spacing(!no_spacing)
                    .with_strict(*strict);
                let e = exceptional_set_with(&table, &params)?;
                let s = e.summary();
                out.write(
                    &Record::new("exceptional")
                        .with("n", s.n)
                        .with("beta", b)
                        .with("r", *r)
                        .with("size", s.size)
                        .with("density", s.density)
                        .with("lemma_budget", s.lemma_budget)
                        .with("spacing_budget", s.spacing_budget)
                        .with("within_5", s.within(5.0)),
                )?;
                if *boxes {
                    let d = box_partition(&table, &params)?;
                    out.write(
                        &Record::new("boxes")
                            .with("n", *n)
                            .with("beta", b)
                            .with("r", *r)
                            .with("boxes", d.boxes.len())
                            .with("count_constant", d.count_constant())
                            .with("members", d.member_total())
                            .with("endpoints_separated", d.endpoints_separated()),
                    )?;
                }
            }
            for &alpha in psi_alpha {
                let y = (*n as f64).powf(alpha);
                let count = psi_smooth_count_with(&table, *n, y);
                out.write(
                    &Record::new("psi")
                        .with("n", *n)
                        .with("alpha", alpha)
                        .with("count", count)
                        .with("density", count as f64 / *n as f64)
                        .with("bound", 5.0 * alpha.powf(1.0 / alpha)),
                )?;
            }
        }
        Command::PartitionCheck { n, beta, r, q, a } => {
            let table = SpfTable::new(*n)?;
            let params = ExceptionalParams::new(*n, *beta, *r)?;
            for &a in a {
                let id = partition_sum_identity(&table, &params, *q, a)?;
                out.write(
                    &Record::new("partition")
                        .with("q", *q)
                        .with("a", a)
                        .with("direct_real", id.direct.real_part)
                        .with("direct_imag", id.direct.imag_part)
                        .with("decomposed_real", id.decomposed.real_part)
                        .with("decomposed_imag", id.decomposed.imag_part)
                        .with("residual", id.residual)
                        .with("boxes", id.boxes)
                        .with("blocks", id.blocks)
                        .with("exceptional", id.exceptional_size),
                )?;
            }
        }
        Command::Lemma2 { ell, m } => {
            for &m in m {
                let primes = primes_in(m / 2 + 1, m);
                let sets = vec![primes.clone(); *ell as usize];
                let inst = lemma2_enumerate(*ell, &sets, budget)?;
                let bound = inst.bound_with(&vec![m as f64; *ell as usize]);
                out.write(
                    &Record::new("lemma2")
                        .with("ell", *ell)
                        .with("m", m)
                        .with("primes", primes.len())
                        .with("solutions", inst.solutions)
                        .with("matched", inst.matched)
                        .with("bound", bound)
                        .with("below_bound", (inst.solutions as f64) < bound),
                )?;
            }
        }
        Command::AmplifyCheck {
            q,
            beta_i,
            rho,
            beta,
            a,
            interval,
        } => {
            let plan = AmplificationPlan::new(*q, *rho, *beta, beta_i.clone())?;
            let intervals = if interval.is_empty() {
                plan.intervals()
            } else {
                interval.clone()
            };
            for v in plan.violations() {
                out.write(&Record::new("plan_violation").with("detail", v))?;
            }
            let rep = holder_amplification_check(&plan, *a, &intervals, budget)?;
            out.write(
                &sum_record("holder", &rep.sum)
                    .with("q", rep.q)
                    .with("a", rep.a)
                    .with("exponent", rep.exponent)
                    .with("amplified_abs", rep.amplified.abs())
                    .with("lhs_log", rep.lhs_log)
                    .with("rhs_log", rep.rhs_log)
                    .with("holds", rep.holds),
            )?;
            for f in &rep.factors {
                out.write(
                    &Record::new("density")
                        .with("lo", f.interval.0)
                        .with("hi", f.interval.1)
                        .with("ell", f.ell)
                        .with("primes", f.prime_count)
                        .with("primes_pnt", f.prime_count_pnt)
                        .with("l1", f.l1)
                        .with("l2_squared", f.l2_squared)
                        .with("linf", f.linf)
                        .with("l2_bound", f.l2_bound)
                        .with("l2_ok", f.l2_ok)
                        .with("l2_ok_pnt", f.l2_ok_pnt)
                        .with("linf_ratio", f.linf_ratio)
                        .with("linf_threshold", f.linf_threshold)
                        .with("linf_ok", f.linf_ok)
                        .with("margin", f.margin)
                        .with("size_proxy", f.size_proxy),
                )?;
            }
        }
        Command::Cancellation {
            q,
            rho,
            beta,
            r,
            samples,
        } => {
            let rep = proposition_cancellation(*q, *rho, *beta, *r, *samples, common.seed)?;
            for s in &rep.samples {
                out.write(
                    &Record::new("sample")
                        .with("a", s.a)
                        .with("abs", s.abs)
                        .with("ratio", s.ratio)
                        .with("exponent", s.exponent),
                )?;
            }
            out.write(
                &Record::new("summary")
                    .with("q", rep.q)
                    .with("n", rep.n)
                    .with("rho", rep.rho)
                    .with("beta", rep.beta)
                    .with("r", rep.r)
                    .with("samples", rep.samples.len())
                    .with("max_ratio", rep.max_ratio)
                    .with("median_ratio", rep.median_ratio)
                    .with("median_exponent", rep.median_exponent)
                    .with("exceptional_density", rep.exceptional_density)
                    .with("beta_in_range", rep.beta_in_range),
            )?;
        }
        Command::Coefficients { alpha } => {
            for &al in alpha {
                let c = coefficient_table(al)?;
                out.write(
                    &Record::new("coefficients")
                        .with("alpha", al)
                        .with("hooley_main", c.hooley_main)
                        .with("b_alpha", c.b_alpha)
                        .with("fouvry_lower", c.fouvry_lower)
                        .with("fouvry_lower_restated", c.fouvry_lower_restated)
                        .with("discrepancy", c.lower_bound_discrepancy())
                        .with("improved_lower", c.improved_lower)
                        .with("delta_claim", c.delta_exponent_claim),
                )?;
            }
            for (at, left, right) in [(1.0, 1u8, 2u8), (2.5, 2, 3)] {
                out.write(
                    &Record::new("continuity")
                        .with("alpha", at)
                        .with("left", b_branch(left, at))
                        .with("right", b_branch(right, at))
                        .with("gap", (b_branch(left, at) - b_branch(right, at)).abs()),
                )?;
            }
            let one = coefficient_table(1.0)?;
            out.write(
                &Record::new("lower_bound_discrepancy")
                    .with("alpha", 1.0)
                    .with("fouvry_lower", one.fouvry_lower)
                    .with("fouvry_lower_restated", one.fouvry_lower_restated)
                    .with("difference", one.lower_bound_discrepancy()),
            )?;
        }
        Command::RegionTerm { x, alpha, beta, r } => {
            for &al in alpha {
                let main = admissible_main_term(*x, al)?;
                let p = range_parameters(*x, al, 1)?;
                let mut rec = Record::new("region")
                    .with("x", *x)
                    .with("alpha", al)
                    .with("admissible_main", main)
                    .with("x_alpha", p.x_alpha)
                    .with("y2_u1", p.y2)
                    .with("y3_u1", p.y3);
                if al >= 0.5 {
                    let d = excluded_deficit(*x, al, *beta, *r)?;
                    rec = rec
                        .with("deficit", d.deficit)
                        .with("deficit_reference", d.reference)
                        .with("deficit_ratio", d.ratio)
                        .with("fitted_c", d.fitted_c)
                        .with("exceptional_u2", d.exceptional_u2);
                }
                out.write(&rec)?;
            }
        }
        Command::ProbeTrilinear {
            u1,
            u2,
            beta,
            r,
            h_max,
            x,
            alpha,
            eps,
        } => {
            let h_max = &match h_max {
                Some(h) => *h,
                None => h_range(*x, *alpha, *eps)?,
            };
            let rows = (*h_max as u128) * (u1.1.saturating_sub(u1.0) + 1) as u128;
            budget.check(rows * (u2.1.saturating_sub(u2.0) + 1) as u128)?;
            let rep = restricted_bound_probe(*u1, *u2, *beta, *r, *h_max)?;
            for row in &rep.rows {
                out.write(
                    &Record::new("inner")
                        .with("h", row.h)
                        .with("u1", row.u1)
                        .with("gcd", row.gcd)
                        .with("abs", row.abs)
                        .with("terms", row.terms)
                        .with("cancellation", row.cancellation)
                        .with("normalized", row.normalized)
                        .with("shape", row.shape),
                )?;
            }
            out.write(
                &Record::new("probe_summary")
                    .with("h_max", *h_max)
                    .with("total_abs", rep.total_abs)
                    .with("u2_len", rep.u2_len)
                    .with("exceptional_in_u2", rep.exceptional_in_u2)
                    .with("max_generic_cancellation", rep.max_generic_cancellation),
            )?;
        }
    }
    Ok(())
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Lib(Error::BudgetExceeded { .. }) => 3,
        Failure::Lib(Error::Io(_) | Error::Cache(_)) | Failure::Io(_) => 1,
        Failure::Lib(_) => 2,
    }
}

/// Run a parsed command; output is buffered so a failed run leaves no partial file.
fn execute(cli: &Cli) -> Result<Vec<u8>, (u8, String)> {
    let mut out = RecordWriter::new(Vec::new(), cli.common.format);
    let fail = |f: Failure| {
        let msg = match &f {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(e) => e.to_string(),
        };
        (exit_code(&f), msg)
    };
    run(&cli.command, &cli.common, &mut out).map_err(fail)?;
    out.finish().map_err(|e| fail(Failure::Io(e)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let bytes = match execute(&cli) {
        Ok(b) => b,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code);
        }
    };
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
