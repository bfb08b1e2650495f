//! `cellnet`: compile occurrence nets to stochastic matrices and reason
//! about them from the command line.
//!
//! Exit status is 0 on success, 1 when the input is rejected or a check
//! fails, and 2 on usage errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cellnet::decompose::{canonical_form, is_indecomposable};
use cellnet::dot::export_diagram;
use cellnet::infer::{condition, forward, marginalize, pullback, validity, Predicate};
use cellnet::io::{
    matrix_to_csv, matrix_to_json, parse_place_set, read_delta, read_net, read_state,
};
use cellnet::kleisli::{validate_delta, DeltaIssue, Interpreter, DEFAULT_MAX_WIDTH};
use cellnet::oracle::{
    ab_outcome_distribution, check_correspondence, enumerate_outcome_distribution, pes_at,
    r_stopped_configs, render_configuration,
};
use cellnet::term::subsets;
use cellnet::{
    compile_net, scells, DeltaTable, Dist, KleisliArrow, MarkedNet, PlaceId, PlaceSet, Term, Wiring,
};

const TOLERANCE_VAR: &str = "CELLNET_TOLERANCE";
const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(
    name = "cellnet",
    version,
    about = "Compile occurrence nets into stochastic matrices"
)]
struct Cli {
    /// Fail on δ entries that are missing, overriding the file setting.
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Fill missing δ entries with the uniform distribution.
    #[arg(long, global = true)]
    lenient: bool,
    /// Largest interface, in places, that may be turned into a matrix.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_WIDTH)]
    max_width: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a file describes a marked occurrence net.
    Validate { net: PathBuf },
    /// List the structural branching cells and their order.
    Cells { net: PathBuf },
    /// Print the canonical parallel/sequential decomposition.
    Canon {
        net: PathBuf,
        /// Emit a DOT string diagram instead.
        #[arg(long)]
        dot: bool,
    },
    /// Translate a net into a term.
    Compile {
        net: PathBuf,
        #[arg(long, conflicts_with = "emit_constants")]
        emit_term: bool,
        /// List the constants the term needs instead of the term.
        #[arg(long)]
        emit_constants: bool,
        /// Print the normal form of the term.
        #[arg(long)]
        normalize: bool,
    },
    /// List the constants of the compiled term with their transactions.
    Constants { net: PathBuf },
    /// Parse and type-check a term written to a file.
    CheckTerm { term: PathBuf },
    /// Print the matrix of a net under a δ table.
    Matrix {
        net: PathBuf,
        delta: PathBuf,
        #[command(flatten)]
        wiring: WiringArgs,
        /// Output places to keep; the others are summed out.
        #[arg(long, value_delimiter = ',')]
        keep: Vec<PlaceId>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Forward and backward inference on the compiled matrix.
    Infer(InferArgs),
    /// List maximal recursively stopped configurations for each input marking.
    Configs {
        net: PathBuf,
        /// Include the non-maximal ones.
        #[arg(long)]
        all: bool,
    },
    /// Cross-check the compiled term against the event-structure oracle.
    OracleCheck { net: PathBuf, delta: PathBuf },
    /// Emit the string diagram of a net in DOT.
    Diagram { net: PathBuf },
}

#[derive(Args, Debug)]
struct WiringArgs {
    /// Order of the input places; defaults to lexicographic.
    #[arg(long, value_delimiter = ',')]
    in_order: Option<Vec<PlaceId>>,
    /// Order of the output places; defaults to lexicographic.
    #[arg(long, value_delimiter = ',')]
    out_order: Option<Vec<PlaceId>>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["marginal", "forward", "posterior"]))]
struct InferArgs {
    net: PathBuf,
    delta: PathBuf,
    /// Distribution of the listed output places.
    #[arg(long, value_delimiter = ',')]
    marginal: Option<Vec<PlaceId>>,
    /// Marked inputs for --marginal, e.g. `{p1}`; defaults to all inputs.
    #[arg(long, requires = "marginal")]
    input: Option<String>,
    /// Push the state in this file through the net.
    #[arg(long)]
    forward: Option<PathBuf>,
    /// Update a prior on the inputs with evidence on the outputs.
    #[arg(long, requires_all = ["prior", "evidence"])]
    posterior: bool,
    #[arg(long)]
    prior: Option<PathBuf>,
    /// Sharp observations such as `p7=1` (marked) or `p8=0` (unmarked).
    #[arg(long, value_parser = parse_evidence)]
    evidence: Vec<(PlaceId, bool)>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

fn parse_evidence(s: &str) -> Result<(PlaceId, bool), String> {
    let (p, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected PLACE=0|1, found {s:?}"))?;
    let marked = match v.trim() {
        "1" => true,
        "0" => false,
        other => return Err(format!("evidence value must be 0 or 1, found {other:?}")),
    };
    Ok((PlaceId::new(p.trim()), marked))
}

/// Marks errors that should exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn tolerance() -> Result<f64> {
    match std::env::var(TOLERANCE_VAR) {
        Err(_) => Ok(DEFAULT_TOLERANCE),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t.is_finite() && t >= 0.0 => Ok(t),
            _ => Err(usage(format!(
                "{TOLERANCE_VAR} must be a non-negative number, found {s:?}"
            ))),
        },
    }
}

fn load_net(path: &Path) -> Result<MarkedNet> {
    read_net(path).with_context(|| format!("net {}", path.display()))
}

struct Ctx {
    strict: Option<bool>,
    max_width: usize,
}

impl Ctx {
    fn load_delta(&self, path: &Path) -> Result<DeltaTable> {
        let mut delta = read_delta(path).with_context(|| format!("delta {}", path.display()))?;
        if let Some(s) = self.strict {
            delta.set_strict(s);
        }
        Ok(delta)
    }

    /// Checks δ against the term, reporting warnings on stderr.
    fn checked_delta(&self, path: &Path, term: &Term) -> Result<DeltaTable> {
        let delta = self.load_delta(path)?;
        let report = validate_delta(&delta, &term.constants());
        for issue in &report.issues {
            if !matches!(issue, DeltaIssue::Missing { .. } | DeltaIssue::Invalid(_)) {
                eprintln!("{issue}");
            }
        }
        if let Some(issue) = report.issues.iter().find(|i| i.is_error()) {
            bail!("delta {}: {}", path.display(), issue);
        }
        Ok(report.filled)
    }

    fn arrow(&self, term: &Term, delta: &DeltaTable, wiring: &WiringArgs) -> Result<KleisliArrow> {
        let ty = term.typecheck()?;
        let pick = |order: &Option<Vec<PlaceId>>, set: &PlaceSet, side: &str| -> Result<Wiring> {
            match order {
                None => Ok(Wiring::lexicographic(set)),
                Some(places) => {
                    let w = Wiring::new(places.clone())
                        .map_err(|e| usage(format!("--{side}-order: {e}")))?;
                    if &w.set() != set {
                        return Err(usage(format!(
                            "--{side}-order must list exactly {}",
                            cellnet::net::render_places(set)
                        )));
                    }
                    Ok(w)
                }
            }
        };
        let pi = pick(&wiring.in_order, &ty.inputs, "in")?;
        let rho = pick(&wiring.out_order, &ty.outputs, "out")?;
        Ok(Interpreter::new(delta)
            .with_max_width(self.max_width)
            .interpret(term, &pi, &rho)?)
    }
}

fn place_set(places: &[PlaceId]) -> PlaceSet {
    places.iter().cloned().collect()
}

/// Marginalizes onto `keep`, keeping the order in which the places were given.
fn keep_ordered(a: &KleisliArrow, keep: &[PlaceId]) -> Result<KleisliArrow> {
    let m = marginalize(a, &place_set(keep))?;
    let order = Wiring::new(keep.to_vec()).map_err(|e| usage(format!("--keep: {e}")))?;
    Ok(m.with_output_wiring(&order)?)
}

fn cmd_validate(net: &Path) -> Result<String> {
    let m = load_net(net)?;
    Ok(format!(
        "OK: {} places, {} transitions, marking {}, inputs {}, outputs {}\n",
        m.net().places().len(),
        m.net().transition_count(),
        cellnet::net::render_places(m.marking()),
        cellnet::net::render_places(&m.inputs()),
        cellnet::net::render_places(&m.outputs())
    ))
}

fn cmd_cells(net: &Path) -> Result<String> {
    let poset = scells(&load_net(net)?);
    let mut out = poset.to_string();
    for (k, c) in poset.cells.iter().enumerate() {
        if !is_indecomposable(c) {
            writeln!(out, "warning: C{} decomposes further", k + 1)?;
        }
    }
    Ok(out)
}

fn cmd_constants(net: &Path) -> Result<String> {
    let term = compile_net(&load_net(net)?)?;
    let mut out = String::new();
    for (sig, key) in term.constants() {
        writeln!(out, "{sig}")?;
        for p in key.ordered_transactions() {
            writeln!(
                out,
                "  {}: {} -> {}",
                p.key(),
                cellnet::net::render_places(&p.initial_places),
                cellnet::net::render_places(&p.final_places)
            )?;
        }
    }
    Ok(out)
}

fn cmd_check_term(path: &Path) -> Result<String> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let term: Term = text
        .trim()
        .parse()
        .with_context(|| format!("term {}", path.display()))?;
    let ty = term.typecheck()?;
    Ok(format!(
        "inputs {}\noutputs {}\nnodes {}\nconstants {}\nnormal form {}\n",
        cellnet::net::render_places(&ty.inputs),
        cellnet::net::render_places(&ty.outputs),
        ty.nodes.len(),
        term.constants().len(),
        term.normalize()?
    ))
}

fn cmd_infer(ctx: &Ctx, args: &InferArgs) -> Result<String> {
    let term = compile_net(&load_net(&args.net)?)?;
    let delta = ctx.checked_delta(&args.delta, &term)?;
    let a = ctx.arrow(
        &term,
        &delta,
        &WiringArgs {
            in_order: None,
            out_order: None,
        },
    )?;
    let mut out = String::new();

    if let Some(keep) = &args.marginal {
        let m = keep_ordered(&a, keep)?;
        let marked = match &args.input {
            Some(s) => parse_place_set(s)?,
            None => a.input().set(),
        };
        let state =
            Dist::point(a.input().clone(), &marked).map_err(|e| usage(format!("--input: {e}")))?;
        let d = forward(&state, &m)?;
        writeln!(out, "inputs {}", cellnet::net::render_places(&marked))?;
        writeln!(out, "{d}")?;
        for p in keep {
            writeln!(out, "P({p}) = {}", d.marginal(p)?)?;
        }
    } else if let Some(path) = &args.forward {
        let state = read_state(path).with_context(|| format!("state {}", path.display()))?;
        let arrow = a.with_input_wiring(state.wiring())?;
        let d = forward(&state, &arrow)?;
        writeln!(out, "{d}")?;
        for p in d.wiring().places() {
            writeln!(out, "P({p}) = {}", d.marginal(p)?)?;
        }
    } else {
        let path = args.prior.as_ref().expect("clap requires --prior");
        let prior = read_state(path).with_context(|| format!("state {}", path.display()))?;
        let arrow = a.with_input_wiring(prior.wiring())?;
        let mut q = Predicate::constant(arrow.output().clone(), 1.0)?;
        for (p, marked) in &args.evidence {
            q = q.and(&Predicate::place(arrow.output().clone(), p, *marked)?)?;
        }
        let back = pullback(&arrow, &q)?;
        writeln!(out, "validity {}", validity(&prior, &back)?)?;
        let post = condition(&prior, &back)?;
        writeln!(out, "posterior {post}")?;
        for p in post.wiring().places() {
            writeln!(out, "P({p}) = {}", post.marginal(p)?)?;
        }
    }
    Ok(out)
}

fn cmd_configs(net: &Path, all: bool) -> Result<String> {
    let m = load_net(net)?;
    let mut out = String::new();
    for j in subsets(&m.inputs()) {
        writeln!(out, "j = {}", cellnet::net::render_places(&j))?;
        for r in r_stopped_configs(&pes_at(&m, &j)?) {
            if !(all || r.maximal) {
                continue;
            }
            let chain: Vec<String> = r.chain.iter().map(render_configuration).collect();
            let flag = if r.maximal { " maximal" } else { "" };
            writeln!(
                out,
                "  {}{flag} via {}",
                render_configuration(&r.config),
                chain.join(" < ")
            )?;
        }
    }
    Ok(out)
}

fn cmd_oracle_check(ctx: &Ctx, net: &Path, delta: &Path) -> Result<String> {
    let tol = tolerance()?;
    let m = load_net(net)?;
    let term = compile_net(&m)?;
    let delta = ctx.checked_delta(delta, &term)?;
    let a = ctx.arrow(
        &term,
        &delta,
        &WiringArgs {
            in_order: None,
            out_order: None,
        },
    )?;

    let report = check_correspondence(&m)?;
    let mut out = String::from("configurations\n");
    out.push_str(&report.to_string());
    let mut ok = report.is_ok();

    out.push_str("marginals\n");
    let mut worst: f64 = 0.0;
    for j in subsets(&m.inputs()) {
        let exact = enumerate_outcome_distribution(&m, &delta, &j)?;
        let pushed = forward(&Dist::point(a.input().clone(), &j)?, &a)?;
        let mut line = format!("j = {}:", cellnet::net::render_places(&j));
        for (p, w) in exact.marginals() {
            let v = pushed.marginal(&p)?;
            worst = worst.max((w - v).abs());
            write!(line, " {p}={w}")?;
        }
        writeln!(out, "{line}")?;
        match ab_outcome_distribution(&m, &delta, &j) {
            Ok(ab) => {
                let d = ab.max_abs_diff(&exact);
                worst = worst.max(d);
                writeln!(out, "  event-structure walk differs by {d:e}")?;
            }
            Err(e) => writeln!(out, "  event-structure walk skipped: {e}")?,
        }
    }
    ok &= worst <= tol;
    writeln!(out, "max |difference| = {worst:e} (tolerance {tol:e})")?;
    writeln!(out, "{}", if ok { "OK" } else { "MISMATCH" })?;
    if !ok {
        print!("{out}");
        bail!("oracle check failed");
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<String> {
    let ctx = Ctx {
        strict: if cli.strict {
            Some(true)
        } else if cli.lenient {
            Some(false)
        } else {
            None
        },
        max_width: cli.max_width,
    };
    match &cli.command {
        Command::Validate { net } => cmd_validate(net),
        Command::Cells { net } => cmd_cells(net),
        Command::Canon { net, dot } => {
            let tree = canonical_form(&load_net(net)?);
            Ok(if *dot {
                export_diagram(&tree)
            } else {
                format!("{tree}\n")
            })
        }
        Command::Compile {
            net,
            emit_constants,
            normalize,
            ..
        } => {
            let term = compile_net(&load_net(net)?)?;
            if *emit_constants {
                Ok(term.constants().keys().map(|s| format!("{s}\n")).collect())
            } else if *normalize {
                Ok(format!("{}\n", term.normalize()?))
            } else {
                Ok(format!("{term}\n"))
            }
        }
        Command::Constants { net } => cmd_constants(net),
        Command::CheckTerm { term } => cmd_check_term(term),
        Command::Matrix {
            net,
            delta,
            wiring,
            keep,
            format,
        } => {
            let term = compile_net(&load_net(net)?)?;
            let delta = ctx.checked_delta(delta, &term)?;
            let mut a = ctx.arrow(&term, &delta, wiring)?;
            if !keep.is_empty() {
                a = keep_ordered(&a, keep)?;
            }
            Ok(match format {
                Format::Text => a.to_string(),
                Format::Json => matrix_to_json(&a) + "\n",
                Format::Csv => matrix_to_csv(&a),
            })
        }
        Command::Infer(args) => cmd_infer(&ctx, args),
        Command::Configs { net, all } => cmd_configs(net, *all),
        Command::OracleCheck { net, delta } => cmd_oracle_check(&ctx, net, delta),
        Command::Diagram { net } => Ok(export_diagram(&canonical_form(&load_net(net)?))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
