//! `fsbasis` command-line front end.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fsbasis::dual::{verify_annihilator, DualReport};
use fsbasis::fib::fib_character;
use fsbasis::modes::{sl2_bracket_check, Report, VertexOps};
use fsbasis::series::{char_basic_subspace, char_lattice, parse_window, BiSeries, ChargeWindow};
use fsbasis::straighten::{evaluate_polynomial, independence_and_span_check, SpanReport, Straightener};
use fsbasis::{Error, Lattice};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::process::ExitCode;

const SCHEMA: u32 = 1;
const DEFAULT_CUTOFF: u32 = 8;

#[derive(Parser)]
#[command(name = "fsbasis", version, about = "Semi-infinite bases of one-dimensional lattice vertex superalgebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print character coefficients.
    Char {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Source::Formula)]
        source: Source,
        /// Charge of the basic subspace for `--source basic`.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        j: i64,
    },
    /// Run a verification suite; exits 1 on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Rewrite a mode monomial applied to the highest-weight vector of
    /// charge `j` into the Fibonacci basis.
    Straighten {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        j: i64,
        /// Mode indices in written order, e.g. `-2,-2`.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
        monomial: Vec<i64>,
        /// Compare the normal form with direct Fock-space application.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Lattice radicand, at least 2.
    #[arg(long = "D")]
    d: u32,
    /// Charge window `lo..hi`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_charge)]
    charge: Option<ChargeWindow>,
    /// Degree cutoff (straighten: weight cutoff, unbounded by default).
    #[arg(long)]
    cutoff: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Seed for randomized sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Formula,
    Enumeration,
    Basic,
    Both,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Suite {
    Relations,
    Sl2,
    Heisenberg,
    Annihilator,
    Rank,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Table,
}

fn parse_charge(s: &str) -> Result<ChargeWindow, String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    parse_window(lo, hi).map_err(|e| e.to_string())
}

/// Result of a command: payload, pass flag and the table rendering.
struct Outcome {
    payload: Value,
    pass: bool,
    table: String,
}

enum Failure {
    Input(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonTermination(_)
            | Error::SingularMinor { .. }
            | Error::Inconsistent
            | Error::AmbiguousSolve { .. } => Failure::Verification(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Char { common, .. } => ("char", common),
        Command::Verify { common, .. } => ("verify", common),
        Command::Straighten { common, .. } => ("straighten", common),
    };
    let result = Lattice::new(common.d).map_err(Failure::from).and_then(|lattice| match &cli.command {
        Command::Char { common, source, j } => cmd_char(lattice, common, *source, *j),
        Command::Verify { common, suite } => cmd_verify(lattice, common, *suite),
        Command::Straighten { common, j, monomial, check } => cmd_straighten(lattice, common, *j, monomial, *check),
    });
    match result {
        Ok(out) => {
            match common.format {
                Format::Json => {
                    let mut doc = json!({
                        "schema": SCHEMA,
                        "command": name,
                        "D": common.d,
                        "seed": common.seed,
                        "pass": out.pass,
                    });
                    if let (Value::Object(doc), Value::Object(payload)) = (&mut doc, out.payload) {
                        doc.extend(payload);
                    }
                    println!("{}", serde_json::to_string_pretty(&doc).expect("json output"));
                }
                Format::Table => print!("{}", out.table),
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn series_table(s: &BiSeries) -> String {
    let (lo, hi) = s.charge_window();
    let cutoff = s.degree_cutoff();
    let width = s.iter().map(|(_, _, v)| v.to_string().len()).max().unwrap_or(1).max(3);
    let mut out = format!("{:>6} |", "m\\d");
    for d in 0..=cutoff {
        out += &format!(" {d:>width$}");
    }
    out += "\n";
    out += &"-".repeat(out.len() - 1);
    out += "\n";
    for m in lo..=hi {
        out += &format!("{m:>6} |");
        for d in 0..=cutoff {
            out += &format!(" {:>width$}", s.get(m, d).unwrap_or(0));
        }
        out += "\n";
    }
    out
}

fn cmd_char(lattice: Lattice, common: &Common, source: Source, j: i64) -> Result<Outcome, Failure> {
    let window = common.charge.unwrap_or((-2, 2));
    let cutoff = common.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let d = lattice.d();
    let formula = || char_lattice(d, window, cutoff);
    let enumeration = || fib_character(lattice.fib_type(), lattice, window, cutoff);
    let (series, extra, pass, note) = match source {
        Source::Formula => (formula()?, json!({}), true, String::new()),
        Source::Enumeration => (enumeration()?, json!({}), true, String::new()),
        Source::Basic => (char_basic_subspace(d, j, window, cutoff)?, json!({ "j": j }), true, String::new()),
        Source::Both => {
            let f = formula()?;
            let mismatches = f.diff(&enumeration()?);
            let pass = mismatches.is_empty();
            let mut note = if pass { "MATCH\n".to_string() } else { "MISMATCH\n".to_string() };
            for m in &mismatches {
                note += &format!("  ({},{}): formula {} enumeration {}\n", m.charge, m.degree, m.left, m.right);
            }
            (f, json!({ "mismatches": mismatches }), pass, note)
        }
    };
    let source_name = match source {
        Source::Formula => "formula",
        Source::Enumeration => "enumeration",
        Source::Basic => "basic",
        Source::Both => "both",
    };
    let mut payload = json!({ "source": source_name, "series": series.to_json() });
    if let (Value::Object(p), Value::Object(e)) = (&mut payload, extra) {
        p.extend(e);
    }
    let table = format!("character D={d} ({source_name})\n{}{note}", series_table(&series));
    Ok(Outcome { payload, pass, table })
}

fn charges(window: ChargeWindow) -> Vec<i64> {
    (window.0..=window.1).collect()
}

fn report_outcome(suite: &str, lattice: Lattice, report: &Report) -> Outcome {
    let mut table = format!("{suite} D={}: {report}\n", lattice.d());
    for e in report.failures() {
        table += &format!("  FAIL {} charge {} mode {}\n", e.relation, e.charge, e.mode_index);
    }
    table += if report.all_pass() { "PASS\n" } else { "FAIL\n" };
    Outcome {
        payload: json!({ "suite": suite, "checks": report.len(), "entries": report.to_json() }),
        pass: report.all_pass(),
        table,
    }
}

fn cmd_verify(lattice: Lattice, common: &Common, suite: Suite) -> Result<Outcome, Failure> {
    let cutoff = common.cutoff.unwrap_or(DEFAULT_CUTOFF);
    if cutoff == 0 {
        return Err(Failure::Input("cutoff must be positive".into()));
    }
    let ops = VertexOps::new(lattice);
    let c = cutoff as i64;
    Ok(match suite {
        Suite::Relations => {
            let report = ops.verify_relations(&charges(common.charge.unwrap_or((-1, 1))), c);
            report_outcome("relations", lattice, &report)
        }
        Suite::Heisenberg => {
            let report = ops.heisenberg_vertex_commutator_check(&charges(common.charge.unwrap_or((-1, 1))), c);
            report_outcome("heisenberg", lattice, &report)
        }
        Suite::Sl2 => {
            if lattice.d() != 2 {
                return Err(Failure::Input("the sl2 suite needs D=2".into()));
            }
            report_outcome("sl2", lattice, &sl2_bracket_check(c))
        }
        Suite::Annihilator => annihilator_outcome(lattice, common.charge.unwrap_or((0, 3)), c)?,
        Suite::Rank => rank_outcome(&ops, common, c)?,
    })
}

fn annihilator_outcome(lattice: Lattice, window: ChargeWindow, cutoff: i64) -> Result<Outcome, Failure> {
    if window.0 < 0 {
        return Err(Failure::Input("annihilator charges must be non-negative".into()));
    }
    let reports: Vec<DualReport> =
        (window.0..=window.1).flat_map(|m| verify_annihilator(lattice, m as usize, cutoff)).collect();
    let pass = reports.iter().all(|r| r.pass(lattice));
    let mut table = format!(
        "annihilator D={}\n{:>3} {:>6} {:>6} {:>5} {:>10}\n",
        lattice.d(),
        "m",
        "degree",
        "forms",
        "rank",
        "annihilate"
    );
    for r in &reports {
        table += &format!("{:>3} {:>6} {:>6} {:>5} {:>10}\n", r.m, r.degree, r.n_forms, r.rank, r.annihilator_ok);
    }
    table += if pass { "PASS\n" } else { "FAIL\n" };
    Ok(Outcome { payload: json!({ "suite": "annihilator", "entries": reports }), pass, table })
}

/// Number of random monomials straightened per run of the rank suite.
const SAMPLES: usize = 16;

fn rank_outcome(ops: &VertexOps, common: &Common, cutoff: i64) -> Result<Outcome, Failure> {
    let lattice = ops.lattice();
    let window = common.charge.unwrap_or((-1, 0));
    let mut spans: Vec<SpanReport> = Vec::new();
    for j in window.0..=window.1 {
        for m in j..=j + 3 {
            for d in 0..=cutoff {
                spans.push(independence_and_span_check(ops, j, m, d)?);
            }
        }
    }
    let straightener = Straightener::new(lattice);
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut samples = Vec::new();
    for _ in 0..SAMPLES {
        let j = rng.gen_range(window.0..=window.1);
        let thr = lattice.threshold(j);
        let len = rng.gen_range(1..=3);
        let indices: Vec<i64> = (0..len).map(|_| rng.gen_range(thr - 4..=thr + 2)).collect();
        let nf = straightener.straighten_monomial(j, &indices, i64::MAX)?;
        let ok = nf.is_fibonacci() && evaluate_polynomial(ops, &nf, j) == ops.evaluate_monomial(&indices, j);
        samples.push(json!({ "j": j, "monomial": indices, "pass": ok }));
    }
    let spans_ok = spans.iter().all(|s| s.pass);
    let samples_ok = samples.iter().all(|s| s["pass"] == true);
    let mut table = format!(
        "rank D={}\n{:>3} {:>3} {:>6} {:>9} {:>5} {:>8}\n",
        lattice.d(),
        "j",
        "m",
        "degree",
        "monomials",
        "rank",
        "expected"
    );
    for s in spans.iter().filter(|s| s.expected > 0 || !s.pass) {
        table +=
            &format!("{:>3} {:>3} {:>6} {:>9} {:>5} {:>8}\n", s.j, s.charge, s.degree, s.monomials, s.rank, s.expected);
    }
    let sample_pass = samples.iter().filter(|s| s["pass"] == true).count();
    table += &format!("straightening samples (seed {}): {sample_pass}/{SAMPLES} agree\n", common.seed);
    let pass = spans_ok && samples_ok;
    table += if pass { "PASS\n" } else { "FAIL\n" };
    Ok(Outcome { payload: json!({ "suite": "rank", "entries": spans, "samples": samples }), pass, table })
}

fn cmd_straighten(
    lattice: Lattice,
    common: &Common,
    j: i64,
    monomial: &[i64],
    check: bool,
) -> Result<Outcome, Failure> {
    let cutoff = common.cutoff.map_or(i64::MAX, i64::from);
    let straightener = Straightener::new(lattice);
    let nf = straightener.straighten_monomial(j, monomial, cutoff)?;
    let agrees = check.then(|| {
        let ops = VertexOps::new(lattice);
        evaluate_polynomial(&ops, &nf, j) == ops.evaluate_monomial(monomial, j)
    });
    let mut table = format!("{nf}\n");
    if let Some(ok) = agrees {
        table += if ok { "check: agrees with Fock action\n" } else { "check: DISAGREES with Fock action\n" };
    }
    Ok(Outcome {
        payload: json!({
            "j": j,
            "monomial": monomial,
            "normal_form": nf.to_json(),
            "display": nf.to_string(),
            "check": agrees,
        }),
        pass: agrees.unwrap_or(true),
        table,
    })
}
