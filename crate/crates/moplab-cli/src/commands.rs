//! Implementations of the harness subcommands.

use std::f64::consts::TAU;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

use moplab::bipartite::random_bipartite_state;
use moplab::channel::{random_cp_map, random_tp_channel};
use moplab::checks::{self, CheckOptions, CounterexampleFamily};
use moplab::eb::random_eb_channel;
use moplab::io;
use moplab::rng::{ginibre, random_psd, stream_rng};
use moplab::{
    decompose_block_toeplitz, nu_q, nu_q_tensor, nu_s, schatten_norm, verify_decomposition,
    Channel, CheckReport, Complex64, ComplexMatrix, MopOptions, MoplabError, SchattenOrder,
};

use crate::inputs::{self, CHECK_NAMES};
use crate::{
    CheckArgs, Command, ComplementArgs, CounterexampleArgs, DecomposeArgs, MopArgs, NormArgs,
    OutputFormat, SearchArgs, SweepArgs,
};

type Result<T> = moplab::Result<T>;
type Items = std::collections::BTreeMap<String, Value>;

/// Run one subcommand. `Ok(true)` means a mathematical violation was
/// witnessed and the process should exit 2.
pub fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Norm(args) => run_norm(args),
        Command::Mop(args) => run_mop(args),
        Command::Check(args) => run_check(args),
        Command::Counterexample(args) => run_counterexample(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Search(args) => run_search(args),
        Command::Decompose(args) => run_decompose(args),
        Command::Complement(args) => run_complement(args),
    }
}

/// Fixed-width float form so identical runs emit identical bytes.
fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn parse_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    parse_list(s)
        .into_iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| MoplabError::Format(format!("`{t}` is not a number")))
        })
        .collect()
}

fn parse_orders(s: &str) -> Result<Vec<SchattenOrder>> {
    let list = parse_list(s);
    if list.is_empty() {
        return Err(MoplabError::Format("empty norm-order list".into()));
    }
    list.iter().map(|t| SchattenOrder::from_str(t)).collect()
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
    let bad = || MoplabError::Format(format!("grid must look like \"120,240\", got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let rows = parts[0].parse().map_err(|_| bad())?;
    let cols = parts[1].parse().map_err(|_| bad())?;
    Ok((rows, cols))
}

/// Tabular output shared by the table-producing subcommands: leading `#`
/// comment lines, a column header, and stringly rows.
struct Table {
    comments: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self, format: OutputFormat) -> String {
        let mut s = String::new();
        for line in &self.comments {
            s.push_str(line);
            s.push('\n');
        }
        match format {
            OutputFormat::Csv => {
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.rows {
                    s.push_str(&row.join(","));
                    s.push('\n');
                }
            }
            OutputFormat::StructuredText => {
                for row in &self.rows {
                    for (key, value) in self.columns.iter().zip(row) {
                        s.push_str(key);
                        s.push_str(": ");
                        s.push_str(value);
                        s.push('\n');
                    }
                    s.push('\n');
                }
            }
        }
        s
    }
}

/// Write to stdout. A broken pipe means the consumer stopped reading
/// (`moplab ... | head`), which is a clean early exit, not a failure.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(err) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if err.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("moplab: {err}");
        std::process::exit(1);
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            emit(text);
            Ok(())
        }
    }
}

fn run_norm(args: NormArgs) -> Result<bool> {
    let doc = io::load_document(&args.input)?;
    let m = io::any_matrix_from_document(&doc)?;
    let q = SchattenOrder::from_str(&args.q)?;
    let value = schatten_norm(&m, &q)?;
    let table = Table {
        comments: vec![],
        columns: vec!["q", "rows", "cols", "value"],
        rows: vec![vec![
            q.to_string(),
            m.rows().to_string(),
            m.cols().to_string(),
            num(value),
        ]],
    };
    emit(&table.render(OutputFormat::StructuredText));
    Ok(false)
}

fn mop_options(
    grid: &Option<String>,
    restarts: Option<usize>,
    tol: Option<f64>,
    max_dim: Option<usize>,
    seed: u64,
) -> Result<MopOptions> {
    let mut opts = MopOptions::default();
    if let Some(g) = grid {
        opts.grid = parse_grid(g)?;
    }
    if let Some(r) = restarts {
        opts.restarts = r;
    }
    if let Some(t) = tol {
        opts.tol = t;
    }
    if let Some(m) = max_dim {
        opts.max_dim = m;
    }
    opts.seed = seed;
    Ok(opts)
}

fn run_mop(args: MopArgs) -> Result<bool> {
    let ch = io::channel_from_document(&io::load_document(&args.input)?)?;
    let opts = mop_options(&args.grid, args.restarts, args.tol, args.max_dim, args.seed)?;
    let (columns, row) = if args.entropy {
        let r = nu_s(&ch, &opts)?;
        (
            vec!["entropy", "evaluations"],
            vec![num(r.value), r.evaluations.to_string()],
        )
    } else {
        let q = SchattenOrder::from_str(&args.q)?;
        let r = match &args.with {
            Some(second) => {
                let other = io::channel_from_document(&io::load_document(second)?)?;
                nu_q_tensor(&ch, &other, &q, &opts)?
            }
            None => nu_q(&ch, &q, &opts)?,
        };
        (
            vec!["q", "value", "evaluations"],
            vec![q.to_string(), num(r.value), r.evaluations.to_string()],
        )
    };
    let table = Table {
        comments: vec![],
        columns,
        rows: vec![row],
    };
    emit(&table.render(OutputFormat::StructuredText));
    Ok(false)
}

fn render_report_text(report: &CheckReport, comments: &[String]) -> String {
    let mut s = String::new();
    for line in comments {
        s.push_str(line);
        s.push('\n');
    }
    s.push_str(&format!("check: {}\n", report.name));
    s.push_str(&format!("q: {}\n", report.q));
    s.push_str(&format!("lhs: {}\n", num(report.lhs)));
    s.push_str(&format!("rhs: {}\n", num(report.rhs)));
    s.push_str(&format!("gap: {}\n", num(report.gap)));
    s.push_str(&format!("holds: {}\n", report.holds));
    s.push_str(&format!("tol: {:e}\n", report.tol));
    for (key, value) in &report.params {
        s.push_str(&format!("param.{key}: {value}\n"));
    }
    if let Some(w) = &report.witness {
        s.push_str(&format!("witness: {}\n", w.note));
    }
    s
}

fn report_row(report: &CheckReport) -> Vec<String> {
    vec![
        report.name.clone(),
        report.q.clone(),
        num(report.lhs),
        num(report.rhs),
        num(report.gap),
        report.holds.to_string(),
    ]
}

fn check_options(args: &CheckArgs) -> Result<CheckOptions> {
    let mut opts = CheckOptions::default();
    if let Some(t) = args.tol {
        opts.tol = t;
    }
    if let Some(g) = &args.grid {
        opts.mop.grid = parse_grid(g)?;
    }
    if let Some(r) = args.restarts {
        opts.mop.restarts = r;
    }
    opts.mop.seed = args.seed;
    Ok(opts)
}

fn run_check(args: CheckArgs) -> Result<bool> {
    let doc = io::load_document(&args.input)?;
    let tag = io::document_format(&doc)?.to_string();
    let opts = check_options(&args)?;
    let mut comments = Vec::new();

    let report = match tag.as_str() {
        "moplab/report" => {
            let recorded = io::report_from_document(&doc)?;
            if let Some(name) = &args.name {
                if *name != recorded.name {
                    return Err(MoplabError::Format(format!(
                        "document records check `{}`, not `{name}`",
                        recorded.name
                    )));
                }
            }
            comments.push(format!(
                "# replaying recorded witness (recorded gap {})",
                num(recorded.gap)
            ));
            match &args.q {
                None => inputs::replay_report(&recorded, &opts)?,
                Some(qs) => {
                    let witness = recorded.witness.as_ref().ok_or_else(|| {
                        MoplabError::Format(
                            "the report holds, so it carries no witness to replay".into(),
                        )
                    })?;
                    let q = inputs::order_for(&recorded.name, qs)?;
                    inputs::run_check_on_items(&recorded.name, &witness.items, &q, &opts)?
                }
            }
        }
        "moplab/check-input" => {
            let obj = doc
                .as_object()
                .ok_or_else(|| MoplabError::Format("document is not an object".into()))?;
            let name = match (&args.name, obj.get("check").and_then(Value::as_str)) {
                (Some(n), _) => n.clone(),
                (None, Some(n)) => n.to_string(),
                (None, None) => {
                    return Err(MoplabError::Format(
                        "no check name: pass one as the positional argument or a `check` field"
                            .into(),
                    ))
                }
            };
            let q = match (&args.q, obj.get("q").and_then(Value::as_str)) {
                (Some(s), _) => inputs::order_for(&name, s)?,
                (None, Some(s)) => inputs::order_for(&name, s)?,
                (None, None) if name == "block-difference" => SchattenOrder::TWO,
                (None, None) => {
                    return Err(MoplabError::Format(
                        "no norm order: pass --q or a `q` field".into(),
                    ))
                }
            };
            let items: Items = obj
                .get("inputs")
                .and_then(Value::as_object)
                .ok_or_else(|| MoplabError::Format("missing `inputs` object".into()))?
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            inputs::run_check_on_items(&name, &items, &q, &opts)?
        }
        other => {
            return Err(MoplabError::Format(format!(
                "cannot run a check on a `{other}` document"
            )))
        }
    };

    if let Some(out) = &args.out {
        io::save_document(out, &io::report_document(&report))?;
    }
    let text = match args.format {
        OutputFormat::StructuredText => render_report_text(&report, &comments),
        OutputFormat::Csv => Table {
            comments,
            columns: vec!["check", "q", "lhs", "rhs", "gap", "holds"],
            rows: vec![report_row(&report)],
        }
        .render(OutputFormat::Csv),
    };
    emit(&text);
    Ok(!report.holds)
}

fn run_counterexample(args: CounterexampleArgs) -> Result<bool> {
    let bs = parse_f64_list(&args.b)?;
    let explicit: Option<Vec<f64>> = match &args.q {
        Some(s) => Some(parse_f64_list(s)?),
        None => None,
    };
    let mut opts = CheckOptions::default();
    if let Some(t) = args.tol {
        opts.tol = t;
    }
    let mut rows = Vec::new();
    for &b in &bs {
        match CounterexampleFamily::new(b) {
            Ok(family) => {
                let grid = explicit
                    .clone()
                    .unwrap_or_else(|| vec![2.05, 0.5 * (2.0 + family.p0), family.p0 + 1.0]);
                for two_q in grid {
                    let report = family.check_at(two_q, &opts)?;
                    rows.push(vec![
                        num(b),
                        num(family.p0),
                        num(two_q),
                        num(report.lhs),
                        num(report.rhs),
                        num(report.gap),
                        report.holds.to_string(),
                    ]);
                }
            }
            Err(err) => {
                eprintln!("moplab: b = {b}: {err}");
                let dash = "-".to_string();
                rows.push(vec![
                    num(b),
                    dash.clone(),
                    dash.clone(),
                    dash.clone(),
                    dash.clone(),
                    dash.clone(),
                    dash,
                ]);
            }
        }
    }
    let table = Table {
        comments: vec![],
        columns: vec!["b", "p0", "two_q", "lhs", "rhs", "gap", "holds"],
        rows,
    };
    write_output(args.out.as_deref(), &table.render(args.format))?;
    // The window rows are supposed to fail; the table itself is the result.
    Ok(false)
}

/// A map with all four Choi blocks PSD but no CP requirement: the regime of
/// the block-norm check.
fn psd_block_channel(seed: u64) -> Channel {
    let mut rng = stream_rng(seed, 0x34);
    let p00 = random_psd(2, 2, false, &mut rng);
    let p11 = random_psd(2, 2, false, &mut rng);
    let p01 = random_psd(2, 2, false, &mut rng).scale(Complex64::new(0.4, 0.0));
    let mut choi = ComplexMatrix::zeros(4, 4);
    choi.set_block(0, 0, &p00);
    choi.set_block(0, 2, &p01);
    choi.set_block(2, 0, &p01);
    choi.set_block(2, 2, &p11);
    Channel::from_choi(2, 2, choi.hermitize()).expect("Hermitian by construction")
}

/// A PSD block-Toeplitz pair built as a positive combination of phased
/// separable terms.
fn toeplitz_blocks(seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    let mut rng = stream_rng(seed, 0x36);
    let mut b = ComplexMatrix::zeros(2, 2);
    let mut c = ComplexMatrix::zeros(2, 2);
    for _ in 0..3 {
        let p = random_psd(2, 2, false, &mut rng);
        let theta: f64 = rng.gen_range(0.0..TAU);
        b.add_scaled(Complex64::new(1.0, 0.0), &p);
        c.add_scaled(Complex64::from_polar(1.0, theta), &p);
    }
    (b, c)
}

/// Deterministic instance for one sweep cell. Generators draw from streams
/// keyed per check, so adding a check never reshuffles another's inputs.
fn sweep_cell(name: &str, q: &SchattenOrder, seed: u64, tol: Option<f64>) -> Result<CheckReport> {
    let mut opts = CheckOptions::default();
    if let Some(t) = tol {
        opts.tol = t;
    }
    opts.mop.seed = seed;
    match name {
        "purity-diagonal" => {
            let ch = random_cp_map(2, 2, 2, seed);
            let rho = random_bipartite_state(2, seed);
            checks::check_purity_diagonal_bound(&ch, &rho, q, &opts)
        }
        "phase-envelope" => {
            let ch = random_cp_map(2, 2, 2, seed);
            let rho = random_bipartite_state(2, seed);
            checks::check_phase_envelope_bound(&ch, &rho, q, &opts)
        }
        "sqrt-factor" => {
            let mut rng = stream_rng(seed, 0x30);
            let g1 = ginibre(2, 2, &mut rng);
            let g2 = ginibre(2, 2, &mut rng);
            let x1 = ginibre(2, 2, &mut rng);
            let x2 = ginibre(2, 2, &mut rng);
            checks::check_sqrt_factor_bound(&g1, &g2, &x1, &x2, q, &opts)
        }
        "phased-psd" => {
            let mut rng = stream_rng(seed, 0x31);
            let h1 = random_psd(2, 2, false, &mut rng);
            let h2 = random_psd(2, 2, false, &mut rng);
            let t1: f64 = rng.gen_range(0.0..TAU);
            let t2: f64 = rng.gen_range(0.0..TAU);
            let x1 = ginibre(2, 2, &mut rng);
            let x2 = ginibre(2, 2, &mut rng);
            checks::check_phased_psd_factors(&h1, &h2, t1, t2, &x1, &x2, q, &opts)
        }
        "sandwich" => {
            let mut rng = stream_rng(seed, 0x32);
            let f = ginibre(3, 3, &mut rng);
            let h = ginibre(3, 3, &mut rng);
            checks::check_sandwich_bound(&f, &h, q, &opts)
        }
        "psd-tensor" => {
            let mut rng = stream_rng(seed, 0x33);
            let a: Vec<ComplexMatrix> = (0..3).map(|_| random_psd(2, 2, false, &mut rng)).collect();
            let b: Vec<ComplexMatrix> = (0..3).map(|_| ginibre(2, 2, &mut rng)).collect();
            checks::check_psd_tensor_bound(&a, &b, q, &opts)
        }
        "block-norm" => {
            let ch = psd_block_channel(seed);
            let mut rng = stream_rng(seed, 0x3c);
            let x = ginibre(4, 4, &mut rng);
            checks::check_block_norm_bound(&ch, &x, q, &opts)
        }
        "separable" => {
            let ch = random_cp_map(2, 2, 2, seed);
            let mut rng = stream_rng(seed, 0x35);
            let components: Vec<(ComplexMatrix, ComplexMatrix)> = (0..3)
                .map(|_| {
                    (
                        random_psd(2, 2, true, &mut rng),
                        random_psd(2, 2, false, &mut rng),
                    )
                })
                .collect();
            checks::check_separable_output_bound(&ch, &components, q, &opts)
        }
        "eb-multiplicativity" => {
            let ch = random_tp_channel(2, 2, 2, seed);
            let eb = random_eb_channel(2, 2, 3, seed);
            checks::check_eb_multiplicativity(&ch, &eb, q, &opts)
        }
        "toeplitz" => {
            let ch = random_cp_map(2, 2, 2, seed);
            let (b, c) = toeplitz_blocks(seed);
            checks::check_toeplitz_output_bound(&ch, &b, &c, q, &opts)
        }
        "block-difference" => {
            let ch = random_cp_map(2, 2, 1 + (seed % 4) as usize, seed);
            checks::check_block_difference_bound(&ch, &opts)
        }
        other => Err(MoplabError::Unsupported(format!(
            "unknown check `{other}`; known checks: {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}

fn run_sweep(args: SweepArgs) -> Result<bool> {
    let names = parse_list(&args.check);
    if names.is_empty() {
        return Err(MoplabError::Format("empty check list".into()));
    }
    for name in &names {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(MoplabError::Unsupported(format!(
                "unknown check `{name}`; known checks: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let orders = parse_orders(&args.q)?;
    let seeds: Vec<u64> = (0..args.samples as u64)
        .map(|k| args.seed.wrapping_add(k))
        .collect();

    let mut cells = Vec::new();
    for name in &names {
        for order in &orders {
            for &seed in &seeds {
                cells.push((name.clone(), *order, seed));
            }
        }
    }
    // Cells are independent; each draws from its own seed streams, so the
    // schedule cannot change the sampled inputs. The collector sorts.
    let computed: Result<Vec<_>> = cells
        .par_iter()
        .map(|(name, order, seed)| {
            let report = sweep_cell(name, order, *seed, args.tol)?;
            Ok((name.clone(), order.value(), *seed, report))
        })
        .collect();
    let mut computed = computed?;
    computed.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let violation = computed.iter().any(|(_, _, _, report)| !report.holds);
    let rows = computed
        .iter()
        .map(|(name, _, seed, report)| {
            vec![
                name.clone(),
                seed.to_string(),
                report.q.clone(),
                num(report.lhs),
                num(report.rhs),
                num(report.gap),
                report.holds.to_string(),
            ]
        })
        .collect();

    let canonical = format!(
        "check={};q={};seed={};samples={};tol={}",
        names.join(","),
        orders
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(","),
        args.seed,
        args.samples,
        args.tol.map(|t| format!("{t:e}")).unwrap_or_else(|| "default".into()),
    );
    let digest = Sha256::digest(canonical.as_bytes());
    let hash: String = digest.iter().map(|byte| format!("{byte:02x}")).collect();

    let table = Table {
        comments: vec![format!(
            "# moplab {} config_hash={hash}",
            env!("CARGO_PKG_VERSION")
        )],
        columns: vec!["name", "seed", "q", "lhs", "rhs", "gap", "holds"],
        rows,
    };
    write_output(args.out.as_deref(), &table.render(args.format))?;
    Ok(violation)
}

fn run_search(args: SearchArgs) -> Result<bool> {
    let orders = parse_orders(&args.q)?;
    let opts = {
        let mut o = CheckOptions::default();
        if let Some(t) = args.tol {
            o.tol = t;
        }
        o
    };
    let mut failures: Vec<CheckReport> = Vec::new();
    let mut checks_run = 0usize;

    match args.check.as_str() {
        "phase-envelope" => {
            for k in 0..args.samples {
                let seed = args.seed.wrapping_add(k as u64);
                let ch = if args.eb_only {
                    random_eb_channel(2, 2, 3, seed)
                } else {
                    random_cp_map(2, 2, 1 + k % 3, seed)
                };
                let rho = random_bipartite_state(2, seed);
                for order in &orders {
                    let report = checks::check_phase_envelope_bound(&ch, &rho, order, &opts)?;
                    checks_run += 1;
                    if !report.holds {
                        failures.push(report);
                    }
                }
            }
        }
        "sqrt-factor" => {
            if args.include_family {
                for b in parse_f64_list(&args.b)? {
                    let family = CounterexampleFamily::new(b)?;
                    for order in &orders {
                        let report = family.check_at(2.0 * order.value(), &opts)?;
                        checks_run += 1;
                        if !report.holds {
                            failures.push(report);
                        }
                    }
                }
            }
            for k in 0..args.samples {
                let seed = args.seed.wrapping_add(k as u64);
                let mut rng = stream_rng(seed, 0x37);
                let g1 = ginibre(2, 2, &mut rng);
                let g2 = ginibre(2, 2, &mut rng);
                let x1 = ginibre(2, 2, &mut rng);
                let x2 = ginibre(2, 2, &mut rng);
                for order in &orders {
                    let report =
                        checks::check_sqrt_factor_bound(&g1, &g2, &x1, &x2, order, &opts)?;
                    checks_run += 1;
                    if !report.holds {
                        failures.push(report);
                    }
                }
            }
        }
        other => {
            return Err(MoplabError::Unsupported(format!(
                "unknown search target `{other}`; use phase-envelope or sqrt-factor"
            )))
        }
    }

    fs::create_dir_all(&args.out)?;
    for (index, report) in failures.iter().enumerate() {
        let path = args.out.join(format!("witness-{index:03}.json"));
        io::save_document(&path, &io::report_document(report))?;
        emit(&format!("witness: {} ({})\n", path.display(), report.summary_line()));
    }
    emit(&format!(
        "target: {}\nchecks: {checks_run}\nwitnesses: {}\n",
        args.check,
        failures.len()
    ));
    Ok(!failures.is_empty())
}

fn run_decompose(args: DecomposeArgs) -> Result<bool> {
    let (b, c) = io::toeplitz_input_from_document(&io::load_document(&args.input)?)?;
    let decomposition = decompose_block_toeplitz(&b, &c)?;
    let report = verify_decomposition(&decomposition, &b, &c);
    if let Some(out) = &args.out {
        io::save_document(out, &io::decomposition_document(&decomposition))?;
    }
    let rows = decomposition
        .terms()
        .iter()
        .enumerate()
        .map(|(k, (theta, p))| vec![k.to_string(), num(*theta), num(p.trace().re)])
        .collect();
    let table = Table {
        comments: vec![format!(
            "# terms={} residual={} holds={}",
            decomposition.len(),
            num(report.lhs),
            report.holds
        )],
        columns: vec!["term", "theta", "weight"],
        rows,
    };
    emit(&table.render(args.format));
    Ok(!report.holds)
}

fn run_complement(args: ComplementArgs) -> Result<bool> {
    let ch = io::channel_from_document(&io::load_document(&args.input)?)?;
    let kraus = ch.kraus()?;
    let complement = kraus.complementary()?;
    let doc = io::channel_document(&complement);
    match &args.out {
        Some(path) => io::save_document(path, &doc)?,
        None => emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?)),
    }
    Ok(false)
}
