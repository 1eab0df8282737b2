use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridperturb::ac::NrOptions;
use gridperturb::analysis::{similarity_summary, sweep_all_buses, GammaCurveOptions, GridContext, Similarity};
use gridperturb::case::emit_case_json;
use gridperturb::{
    parse_case_json, parse_case_matpower, validate_case, AnalysisError, GraphError, GridCase, Model, PerturbationKind,
    PerturbationSpec,
};

mod output;

use output::{Cell, Table};

#[derive(Debug, Parser)]
#[command(name = "gridperturb", version)]
#[command(about = "Spread of single-bus power perturbations through a grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a case; exit 1 if it has findings
    Validate(CommonArgs),
    /// Hop profile and spreadability for one perturbation
    Spread {
        #[command(flatten)]
        common: CommonArgs,
        /// Perturbed bus id.
        #[arg(long)]
        bus: i64,
        /// Perturbation strength, MW.
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
    },
    /// Spreadability measures for every eligible bus
    SweepBuses {
        #[command(flatten)]
        common: CommonArgs,
        /// Perturbation strength applied at every bus, MW.
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
    },
    /// Global smoothness of the perturbed angles over a strength grid
    GammaCurve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        bus: i64,
        /// First strength of the grid, MW.
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        /// Last strength of the grid, MW (included).
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        /// Grid spacing, MW.
        #[arg(long)]
        step: f64,
        /// Bisection resolution of the non-convergence strength, MW.
        #[arg(long, default_value_t = 0.1)]
        nc_resolution: f64,
    },
    /// Rewrite a case (MATPOWER script or JSON) as canonical JSON
    Convert {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Case file: `.m` is read as a MATPOWER script, anything else as JSON.
    #[arg(long)]
    case: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Dc)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = KindArg::Load)]
    kind: KindArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Newton-Raphson mismatch tolerance, per unit.
    #[arg(long, default_value_t = 1e-8)]
    nr_tol: f64,
    #[arg(long, default_value_t = 30)]
    nr_max_iter: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Dc,
    Ac,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Load,
    Gen,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl CommonArgs {
    fn model(&self) -> Model {
        match self.model {
            ModelArg::Dc => Model::Dc,
            ModelArg::Ac => Model::Ac,
        }
    }

    fn kind(&self) -> PerturbationKind {
        match self.kind {
            KindArg::Load => PerturbationKind::Load,
            KindArg::Gen => PerturbationKind::Generation,
        }
    }

    fn nr_options(&self) -> Result<NrOptions, Failure> {
        let options = NrOptions {
            tolerance: self.nr_tol,
            max_iterations: self.nr_max_iter,
            flat_start: true,
        };
        options.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(options)
    }

    fn context(&self) -> Result<GridContext, Failure> {
        let case = load_case(&self.case)?;
        Ok(GridContext::for_model(case, self.model(), &self.nr_options()?)?)
    }

    fn emit(&self, table: &Table) -> Result<(), Failure> {
        let text = match self.format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        };
        write_output(self.out.as_deref(), &text)
    }
}

#[derive(Debug)]
enum Failure {
    /// Domain finding: invalid case, nothing to sweep.
    Finding(String),
    Usage(String),
    Solver(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Finding(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Finding(m) | Failure::Usage(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let msg = e.to_string();
        match e {
            AnalysisError::NonConvergence { .. } => Failure::Solver(msg),
            AnalysisError::Graph(GraphError::Singular { .. }) => Failure::Solver(msg),
            AnalysisError::Graph(GraphError::UnknownBus(_))
            | AnalysisError::SlackPerturbation(_)
            | AnalysisError::InvalidInput(_) => Failure::Usage(msg),
            _ => Failure::Finding(msg),
        }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        AnalysisError::from(e).into()
    }
}

fn load_case(path: &Path) -> Result<GridCase, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|ext| ext == "m") {
        parse_case_matpower(&text)
    } else {
        parse_case_json(&text)
    };
    parsed.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Dc => "dc",
        Model::Ac => "ac",
    }
}

fn cmd_validate(args: &CommonArgs) -> Result<(), Failure> {
    let case = load_case(&args.case)?;
    let report = validate_case(&case);
    let mut table = Table::new(vec!["finding"]);
    for f in &report.findings {
        table.rows.push(vec![Cell::Text(f.to_string())]);
    }
    table.summary.push(("case", Cell::Text(case.name.clone())));
    table.summary.push(("buses", Cell::Int(case.buses.len() as i64)));
    table.summary.push(("branches", Cell::Int(case.branches.len() as i64)));
    table.summary.push(("gens", Cell::Int(case.gens.len() as i64)));
    table.summary.push(("valid", Cell::Bool(report.is_valid())));
    args.emit(&table)?;
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure::Finding(format!("{} finding(s)", report.findings.len())))
    }
}

fn cmd_spread(args: &CommonArgs, bus: i64, gamma: f64) -> Result<(), Failure> {
    let ctx = args.context()?;
    let model = args.model();
    let report = ctx.spread_report(&PerturbationSpec::new(bus, gamma, args.kind(), model))?;

    let mut table = Table::new(vec!["K", "mean_psi_deg_per_mw", "shell_size"]);
    for (&(k, mean), &size) in report.profile.means.iter().zip(&report.profile.shell_sizes) {
        table.rows.push(vec![Cell::Int(k as i64), Cell::Num(mean), Cell::Int(size as i64)]);
    }
    table.summary.extend([
        ("bus", Cell::Int(bus)),
        ("gamma_mw", Cell::Num(gamma)),
        ("model", Cell::Text(model_name(model).into())),
        ("s", Cell::opt(report.s)),
        ("s_prime", Cell::Num(report.s_prime)),
        ("g_delta_theta", Cell::Num(report.g_delta_theta)),
        ("l_delta_theta_u", Cell::Num(report.l_delta_theta_at_u)),
        ("slope", Cell::Num(report.slope)),
        ("slope_degenerate", Cell::Bool(report.slope_degenerate)),
    ]);
    args.emit(&table)
}

fn similarity_cells(table: &mut Table, spearman: &'static str, cosine: &'static str, sim: Similarity) {
    table.summary.push((spearman, Cell::opt(sim.spearman)));
    table.summary.push((cosine, Cell::opt(sim.cosine)));
}

fn cmd_sweep(args: &CommonArgs, gamma: f64) -> Result<(), Failure> {
    let ctx = args.context()?;
    let rows = sweep_all_buses(&ctx, gamma, args.kind(), args.model())?;
    if rows.is_empty() {
        return Err(Failure::Finding("no eligible buses to perturb".into()));
    }

    let mut table = Table::new(vec!["bus", "s", "s_prime", "g_delta_theta", "l_delta_theta_u", "status"]);
    let mut successes = 0;
    for row in &rows {
        let cells = match &row.outcome {
            Ok(r) => {
                successes += 1;
                let status = if r.slope_degenerate { "degenerate_slope" } else { "ok" };
                vec![
                    Cell::Int(row.bus),
                    Cell::opt(r.s),
                    Cell::Num(r.s_prime),
                    Cell::Num(r.g_delta_theta),
                    Cell::Num(r.l_delta_theta_at_u),
                    Cell::Text(status.into()),
                ]
            }
            Err(e) => vec![
                Cell::Int(row.bus),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Text(format!("error: {e}")),
            ],
        };
        table.rows.push(cells);
    }
    let summary = similarity_summary(&rows);
    table.summary.push(("rows_used", Cell::Int(summary.rows_used as i64)));
    similarity_cells(&mut table, "spearman_s_s_prime", "cosine_s_s_prime", summary.s_vs_s_prime);
    similarity_cells(&mut table, "spearman_s_g_delta_theta", "cosine_s_g_delta_theta", summary.s_vs_g_delta_theta);
    similarity_cells(&mut table, "spearman_s_l_delta_theta_u", "cosine_s_l_delta_theta_u", summary.s_vs_l_delta_theta);
    args.emit(&table)?;

    if successes == 0 {
        return Err(Failure::Solver("every perturbation in the sweep failed".into()));
    }
    Ok(())
}

fn cmd_gamma_curve(args: &CommonArgs, bus: i64, options: GammaCurveOptions) -> Result<(), Failure> {
    let ctx = args.context()?;
    let model = args.model();
    let curve = ctx.gamma_curve(bus, args.kind(), model, &options)?;

    let mut table = Table::new(vec!["gamma_mw", "g_theta", "converged"]);
    for (&gamma, g) in curve.gammas.iter().zip(&curve.g_theta) {
        table.rows.push(vec![Cell::Num(gamma), Cell::opt(*g), Cell::Bool(g.is_some())]);
    }
    table.summary.push(("gamma_c_mw", Cell::opt(curve.gamma_c)));
    if model == Model::Ac {
        table.summary.push(("gamma_nc_mw", Cell::opt(curve.gamma_nc)));
    }
    args.emit(&table)
}

fn cmd_convert(case: &Path, out: Option<&Path>) -> Result<(), Failure> {
    write_output(out, &emit_case_json(&load_case(case)?))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("GRIDPERTURB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("GRIDPERTURB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Spread { common, bus, gamma } => cmd_spread(&common, bus, gamma),
        Command::SweepBuses { common, gamma } => cmd_sweep(&common, gamma),
        Command::GammaCurve {
            common,
            bus,
            from,
            to,
            step,
            nc_resolution,
        } => cmd_gamma_curve(
            &common,
            bus,
            GammaCurveOptions {
                from_mw: from,
                to_mw: to,
                step_mw: step,
                nc_resolution_mw: nc_resolution,
            },
        ),
        Command::Convert { case, out } => cmd_convert(&case, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("gridperturb: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
