//! Convergence studies, element checks and timing runs behind the `mfmfe`
//! binary.

use std::fs::File;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use mfmfe::mesh::{example1_mesh, example2_mesh, io as mesh_io, refine_uniform, Mesh};
use mfmfe::pipeline::{solve_level, LevelResult, Method, RunOptions};
use mfmfe::refbasis::check_element;
use mfmfe::verify::{rates, ErrorRecord, ManufacturedCase};
use mfmfe::MfmfeError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Solver(#[from] MfmfeError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
    #[error("element checks failed for {0}")]
    ElementChecks(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "mfmfe",
    version,
    about = "Multipoint flux mixed finite elements for Darcy flow"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Errors and rates over a sequence of refinements.
    Convergence(RunArgs),
    /// Self-checks of the reference velocity element.
    CheckElement(CheckArgs),
    /// Assemble-plus-solve wall times of the multipoint and Raviart-Thomas methods.
    Timing(RunArgs),
    /// Writes a generated mesh in the text format and prints its geometry.
    Mesh(MeshArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mfmfe,
    Rt,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Mfmfe => Method::Mfmfe,
            MethodArg::Rt => Method::Rt,
        }
    }
}

/// Parses an inclusive range `A..B` (or a single level `A`).
pub fn parse_levels(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad level '{t}': {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let a = parse(s)?;
            (a, a)
        }
    };
    if a > b {
        return Err(format!("empty level range {s}"));
    }
    Ok(a..=b)
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Manufactured test case: 1 (2d) or 2 (3d).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: u8,
    #[arg(long, value_enum, default_value_t = MethodArg::Mfmfe)]
    pub method: MethodArg,
    /// Velocity order; the Raviart-Thomas method uses RT_{k-1}.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Refinement levels `A..B` (inclusive); defaults to 0..4 in 2d, 0..2 in 3d.
    #[arg(long, value_parser = parse_levels)]
    pub levels: Option<RangeInclusive<usize>>,
    /// Relative residual tolerance of the pressure solve.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    pub deterministic: bool,
    /// Gauss points per axis for loads, postprocessing and norms (default k+3).
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Level-0 mesh file in the text format, refined uniformly per level.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Order; all of 1..4 when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4))]
    pub k: Option<u64>,
    /// Dimension; both 2 and 3 when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=3))]
    pub dim: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: u8,
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn case(&self) -> ManufacturedCase {
        if self.example == 1 {
            ManufacturedCase::example1()
        } else {
            ManufacturedCase::example2()
        }
    }

    pub fn level_range(&self) -> RangeInclusive<usize> {
        self.levels
            .clone()
            .unwrap_or(if self.example == 1 { 0..=4 } else { 0..=2 })
    }

    pub fn options(&self, method: Method) -> RunOptions {
        RunOptions {
            tol: self.tol,
            quad_order: self.quad_order,
            ..RunOptions::new(method, self.k)
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.k < 1 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CliError::Config("tol must be positive".into()));
        }
        if self.quad_order == Some(0) {
            return Err(CliError::Config("quad-order must be positive".into()));
        }
        Ok(())
    }

    /// Mesh of one level.
    pub fn mesh(&self, level: usize) -> CliResult<Mesh> {
        let case = self.case();
        let mesh = match &self.mesh {
            Some(path) => {
                let mut m = mesh_io::read_mesh(std::io::BufReader::new(File::open(path)?))?;
                let h0 = m.h();
                for _ in 0..level {
                    m = refine_uniform(&m);
                }
                m.with_nominal_h(h0 / f64::from(1u32 << level.min(31)))
            }
            None if self.example == 1 => example1_mesh(level),
            None => example2_mesh(level),
        };
        if mesh.dim() != case.dim {
            return Err(CliError::Config(format!(
                "example {} needs a {}d mesh, got {}d",
                self.example,
                case.dim,
                mesh.dim()
            )));
        }
        Ok(mesh)
    }
}

pub const CONVERGENCE_HEADER: [&str; 17] = [
    "level",
    "h",
    "err_u",
    "rate_u",
    "err_div",
    "rate_div",
    "err_p",
    "rate_p",
    "err_pG",
    "rate_pG",
    "err_qp",
    "rate_qp",
    "err_pstar",
    "rate_pstar",
    "cg_iters",
    "assemble_s",
    "solve_s",
];

fn fmt_rate(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn convergence_row(rec: &ErrorRecord, res: &LevelResult) -> Vec<String> {
    let mut row = vec![rec.level.to_string(), format!("{:.6e}", rec.h)];
    for i in 0..6 {
        row.push(format!("{:.6e}", rec.errors[i]));
        row.push(fmt_rate(rec.rates[i]));
    }
    row.push(res.stats.iterations.to_string());
    row.push(format!("{:.6}", res.stats.assemble_seconds));
    row.push(format!("{:.6}", res.stats.solve_seconds));
    row
}

fn open_csv(out: &Option<PathBuf>) -> CliResult<Option<csv::Writer<File>>> {
    Ok(match out {
        Some(p) => Some(csv::Writer::from_path(p)?),
        None => None,
    })
}

/// Prints rows as an aligned table.
pub fn print_table<W: Write>(mut w: W, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            width[i] = width[i].max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:>w$}", w = width[i]))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(w, "{}", line(header.to_vec()))?;
    for r in rows {
        writeln!(w, "{}", line(r.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

/// Runs the levels, writing each CSV row as soon as it is known so a
/// failure leaves a partial file.
pub fn run_convergence(args: &RunArgs) -> CliResult<Vec<ErrorRecord>> {
    args.validate()?;
    let case = args.case();
    let opts = args.options(args.method.into());
    let mut csv = open_csv(&args.out)?;
    if let Some(w) = csv.as_mut() {
        w.write_record(CONVERGENCE_HEADER)?;
        w.flush()?;
    }
    let mut records: Vec<ErrorRecord> = Vec::new();
    let mut rows = Vec::new();
    let mut failure = None;
    for level in args.level_range() {
        info!("level {level}");
        let res = match args.mesh(level).and_then(|m| Ok(solve_level(&m, &case, level, &opts)?)) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        records.push(res.record.clone());
        rates(&mut records)?;
        let row = convergence_row(records.last().expect("just pushed"), &res);
        if let Some(w) = csv.as_mut() {
            w.write_record(&row)?;
            w.flush()?;
        }
        rows.push(row);
    }
    print_table(std::io::stdout().lock(), &CONVERGENCE_HEADER, &rows)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(records),
    }
}

pub const TIMING_HEADER: [&str; 15] = [
    "method",
    "level",
    "h",
    "err_u",
    "err_div",
    "err_p",
    "err_pG",
    "err_qp",
    "err_pstar",
    "iters",
    "num_dofs",
    "assemble_s",
    "solve_s",
    "total_s",
    "factor",
];

/// Wall times of both methods per level; `factor` is the ratio to the
/// previous level's total time.
pub fn run_timing(args: &RunArgs) -> CliResult<Vec<Vec<String>>> {
    args.validate()?;
    let case = args.case();
    let mut csv = open_csv(&args.out)?;
    if let Some(w) = csv.as_mut() {
        w.write_record(TIMING_HEADER)?;
    }
    let mut rows = Vec::new();
    for (name, method) in [("mfmfe", Method::Mfmfe), ("rt", Method::Rt)] {
        let opts = args.options(method);
        let mut prev: Option<f64> = None;
        for level in args.level_range() {
            let mesh = args.mesh(level)?;
            let res = solve_level(&mesh, &case, level, &opts)?;
            let total = res.stats.assemble_seconds + res.stats.solve_seconds;
            let mut row = vec![name.to_string(), level.to_string(), format!("{:.6e}", res.record.h)];
            row.extend(res.record.errors.iter().map(|e| format!("{e:.6e}")));
            row.push(res.stats.iterations.to_string());
            row.push((res.num_velocity + res.num_pressure).to_string());
            row.push(format!("{:.6}", res.stats.assemble_seconds));
            row.push(format!("{:.6}", res.stats.solve_seconds));
            row.push(format!("{total:.6}"));
            row.push(prev.map(|p| format!("{:.3}", total / p)).unwrap_or_default());
            prev = Some(total);
            if let Some(w) = csv.as_mut() {
                w.write_record(&row)?;
                w.flush()?;
            }
            rows.push(row);
        }
    }
    print_table(std::io::stdout().lock(), &TIMING_HEADER, &rows)?;
    Ok(rows)
}

pub fn run_check_element(args: &CheckArgs) -> CliResult<()> {
    let ks: Vec<usize> = args.k.map_or((1..=4).collect(), |k| vec![k as usize]);
    let dims: Vec<usize> = args.dim.map_or(vec![2, 3], |d| vec![d as usize]);
    let mut failed = Vec::new();
    for &dim in &dims {
        for &k in &ks {
            let r = check_element(dim, k)?;
            let ok = r.passes(1e-10);
            println!("{r}");
            println!("  result               {}", if ok { "pass" } else { "FAIL" });
            if !ok {
                failed.push(format!("d = {dim}, k = {k}"));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ElementChecks(failed.join("; ")))
    }
}

pub fn run_mesh(args: &MeshArgs) -> CliResult<()> {
    let mesh = if args.example == 1 {
        example1_mesh(args.level)
    } else {
        example2_mesh(args.level)
    };
    if let Some(p) = &args.out {
        mesh_io::write_mesh(&mesh, std::io::BufWriter::new(File::create(p)?))?;
    }
    let rep = mfmfe::mesh::geometry_report(&mesh);
    println!(
        "{}d mesh: {} cells, {} vertices, h = {:.4e}",
        mesh.dim(),
        mesh.num_cells(),
        mesh.num_vertices(),
        rep.h
    );
    println!(
        "  max face deviation        {:.4e} (= {:.3} h^2)",
        rep.max_face_deviation(),
        rep.h2_constant()
    );
    if mesh.dim() == 3 {
        println!(
            "  max regularity deviation  {:.4e} (= {:.3} h^3)",
            rep.max_regularity_deviation(),
            rep.h3_constant()
        );
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Convergence(a) => run_convergence(a).map(|_| ()),
        Command::Timing(a) => run_timing(a).map(|_| ()),
        Command::CheckElement(a) => run_check_element(a),
        Command::Mesh(a) => run_mesh(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("0..3").unwrap(), 0..=3);
        assert_eq!(parse_levels("2").unwrap(), 2..=2);
        assert_eq!(parse_levels("1..=2").unwrap(), 1..=2);
        assert!(parse_levels("3..1").is_err());
        assert!(parse_levels("a..b").is_err());
    }

    #[test]
    fn defaults_follow_the_example() {
        let cli = Cli::parse_from(["mfmfe", "convergence", "--example", "2"]);
        let Command::Convergence(a) = cli.command else { panic!() };
        assert_eq!(a.level_range(), 0..=2);
        assert_eq!(a.k, 2);
        assert_eq!(a.method, MethodArg::Mfmfe);
    }

    #[test]
    fn rejects_bad_example() {
        assert!(Cli::try_parse_from(["mfmfe", "convergence", "--example", "3"]).is_err());
    }

    #[test]
    fn table_is_aligned() {
        let mut buf = Vec::new();
        print_table(&mut buf, &["a", "bbb"], &[vec!["1234".into(), "5".into()]]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0].len(), lines[1].len());
    }
}
