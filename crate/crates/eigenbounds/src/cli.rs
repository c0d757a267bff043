//! Command-line front end: run pipelines, reproduce the constants tables,
//! and emit machine- and human-readable reports.

use crate::bounds::{
    constant_enclosure_pipeline, neumann_pipeline, ConstantEnclosure, Mode, RunConfig,
};
use crate::error::{Error, Result};
use crate::mesh::{refined, DomainId};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Md,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "md" => Ok(OutputFormat::Md),
            _ => Err(Error::Config(format!("unknown format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    Table1,
    Table3,
    Generic,
}

/// Rows plus presentation metadata for one report.
#[derive(Debug, Clone)]
pub struct ReportTable {
    pub rows: Vec<ConstantEnclosure>,
    pub layout: TableLayout,
    pub format: OutputFormat,
    pub compact: bool,
}

#[derive(Parser, Debug)]
#[command(
    name = "eigenbounds",
    version,
    about = "Certified eigenvalue and projection-constant enclosures on reference simplices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enclose the projection error constant C_k on one reference domain.
    Constants(ConstantsArgs),
    /// Two-sided bounds for the leading Neumann eigenvalues of one domain.
    Neumann(NeumannArgs),
    /// Reproduce the triangular-domain constants table (K1-K3, k = 0..2).
    Table1(TableArgs),
    /// Reproduce the tetrahedral-domain constants table (T1-T5, k = 0..2).
    Table3(TableArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// fast | rigorous
    #[arg(long, default_value = "rigorous")]
    mode: String,
    /// json | csv | md
    #[arg(long, default_value = "json")]
    format: String,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render enclosures in compressed shared-prefix notation (md only).
    #[arg(long)]
    compact: bool,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Reference domain: K1, K2, K3, T1..T5 or SQUARE.
    #[arg(long)]
    domain: String,
    /// Projection degree k >= 0.
    #[arg(long, default_value_t = 0)]
    degree: usize,
    /// Uniform refinement level.
    #[arg(long, default_value_t = 5)]
    refine: u32,
    /// Write the refined mesh as JSON to this path.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    /// Debug: write the pencil matrices as plain text to PREFIX.a.txt and
    /// PREFIX.b.txt.
    #[arg(long, value_name = "PREFIX")]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NeumannArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    domain: String,
    #[arg(long, default_value_t = 4)]
    refine: u32,
    /// Number of eigenvalues to bound (the zero eigenvalue counts).
    #[arg(long, default_value_t = 3)]
    count: usize,
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    #[arg(long, value_name = "PREFIX")]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Uniform refinement level (defaults to the published runs: 5 in 2D,
    /// 4 in 3D).
    #[arg(long)]
    refine: Option<u32>,
}

/// Entry point used by the binary and by tests. Exit status: 0 on success,
/// 1 on usage or configuration errors, 2 when rigorous-mode certification
/// failed (results are still written, flagged certified = false).
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(all_certified_or_fast) => {
            if all_certified_or_fast {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn parse_common(common: &CommonArgs) -> Result<(Mode, OutputFormat)> {
    Ok((common.mode.parse()?, common.format.parse()?))
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Constants(args) => {
            let (mode, format) = parse_common(&args.common)?;
            let domain: DomainId = args.domain.parse()?;
            let cfg = RunConfig {
                domain,
                degree: args.degree,
                refine_level: args.refine,
                mode,
                count: 1,
            };
            dump_artifacts(domain, args.refine, args.dump_mesh.as_deref(), args.dump_matrix.as_deref(), args.degree)?;
            let row = constant_enclosure_pipeline(&cfg)?;
            let ok = mode == Mode::Fast || row.certified;
            let table = ReportTable {
                rows: vec![row],
                layout: TableLayout::Generic,
                format,
                compact: args.common.compact,
            };
            write_report(&table, args.common.out.as_deref())?;
            Ok(ok)
        }
        Command::Neumann(args) => {
            let (mode, format) = parse_common(&args.common)?;
            let domain: DomainId = args.domain.parse()?;
            if args.count == 0 {
                return Err(Error::Config("--count must be at least 1".into()));
            }
            let cfg = RunConfig {
                domain,
                degree: 0,
                refine_level: args.refine,
                mode,
                count: args.count,
            };
            dump_artifacts(domain, args.refine, args.dump_mesh.as_deref(), args.dump_matrix.as_deref(), 0)?;
            let rows = neumann_pipeline(&cfg)?;
            let ok = mode == Mode::Fast || rows.iter().all(|r| r.certified);
            let table = ReportTable {
                rows,
                layout: TableLayout::Generic,
                format,
                compact: args.common.compact,
            };
            write_report(&table, args.common.out.as_deref())?;
            Ok(ok)
        }
        Command::Table1(args) => run_table(args, TableLayout::Table1),
        Command::Table3(args) => run_table(args, TableLayout::Table3),
    }
}

fn run_table(args: TableArgs, layout: TableLayout) -> Result<bool> {
    let (mode, format) = parse_common(&args.common)?;
    let (domains, default_refine): (&[DomainId], u32) = match layout {
        TableLayout::Table1 => (&[DomainId::K1, DomainId::K2, DomainId::K3], 5),
        TableLayout::Table3 => (
            &[
                DomainId::T1,
                DomainId::T2,
                DomainId::T3,
                DomainId::T4,
                DomainId::T5,
            ],
            4,
        ),
        TableLayout::Generic => unreachable!(),
    };
    let refine = args.refine.unwrap_or(default_refine);
    let configs: Vec<RunConfig> = (0..=2)
        .flat_map(|k| {
            domains.iter().map(move |&domain| RunConfig {
                domain,
                degree: k,
                refine_level: refine,
                mode,
                count: 1,
            })
        })
        .collect();
    // cells run concurrently; output order is fixed by the config order
    let results: Vec<Result<ConstantEnclosure>> = configs
        .par_iter()
        .map(constant_enclosure_pipeline)
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    let ok = mode == Mode::Fast || rows.iter().all(|r| r.certified);
    let table = ReportTable {
        rows,
        layout,
        format,
        compact: args.common.compact,
    };
    write_report(&table, args.common.out.as_deref())?;
    Ok(ok)
}

fn dump_artifacts(
    domain: DomainId,
    refine: u32,
    mesh_path: Option<&std::path::Path>,
    matrix_prefix: Option<&std::path::Path>,
    degree: usize,
) -> Result<()> {
    if mesh_path.is_none() && matrix_prefix.is_none() {
        return Ok(());
    }
    let mesh = refined(domain, refine);
    if let Some(path) = mesh_path {
        let mut f = File::create(path)?;
        serde_json::to_writer(&mut f, &mesh.to_json()).map_err(std::io::Error::from)?;
        writeln!(f)?;
    }
    if let Some(prefix) = matrix_prefix {
        let pencil: crate::assembly::Pencil<f64> = crate::assembly::projection_pencil(
            &mesh,
            crate::assembly::ElementKind::CrouzeixRaviart,
            degree,
        )?;
        let kind = pencil.scalar_kind().as_str();
        let mut pa = prefix.as_os_str().to_owned();
        pa.push(".a.txt");
        let mut fa = File::create(PathBuf::from(pa))?;
        pencil.a.write_plain(&mut fa, kind)?;
        let mut pb = prefix.as_os_str().to_owned();
        pb.push(".b.txt");
        let mut fb = File::create(PathBuf::from(pb))?;
        pencil.b.write_plain(&mut fb, kind)?;
    }
    Ok(())
}

fn write_report(table: &ReportTable, out: Option<&std::path::Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = File::create(path)?;
            emit_report(table, &mut f)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_report(table, &mut lock)
        }
    }
}

/// Serialize a report. CSV uses the fixed eight columns
/// (domain, k, lo, hi, certified, refine_level, mode, h) with 17 significant
/// digits; JSON is newline-delimited result records; Markdown renders the
/// table layouts, optionally with compressed enclosure notation.
pub fn emit_report(table: &ReportTable, sink: &mut dyn Write) -> Result<()> {
    validate_layout(table)?;
    match table.format {
        OutputFormat::Json => {
            for row in &table.rows {
                serde_json::to_writer(&mut *sink, &row.to_json()).map_err(std::io::Error::from)?;
                writeln!(sink)?;
            }
        }
        OutputFormat::Csv => {
            writeln!(sink, "domain,k,lo,hi,certified,refine_level,mode,h")?;
            for row in &table.rows {
                writeln!(
                    sink,
                    "{},{},{:.16e},{:.16e},{},{},{},{:.16e}",
                    row.domain,
                    row.quantity.index(),
                    row.lo,
                    row.hi,
                    row.certified,
                    row.refine_level,
                    row.mode.as_str(),
                    row.h_used
                )?;
            }
        }
        OutputFormat::Md => emit_markdown(table, sink)?,
    }
    Ok(())
}

fn validate_layout(table: &ReportTable) -> Result<()> {
    let allowed: Option<&[DomainId]> = match table.layout {
        TableLayout::Table1 => Some(&[DomainId::K1, DomainId::K2, DomainId::K3]),
        TableLayout::Table3 => Some(&[
            DomainId::T1,
            DomainId::T2,
            DomainId::T3,
            DomainId::T4,
            DomainId::T5,
        ]),
        TableLayout::Generic => None,
    };
    if let Some(allowed) = allowed {
        for row in &table.rows {
            if !allowed.contains(&row.domain) || row.quantity.index() > 2 {
                return Err(Error::Config(format!(
                    "row ({}, k={}) does not fit the table layout",
                    row.domain,
                    row.quantity.index()
                )));
            }
        }
    }
    Ok(())
}

fn emit_markdown(table: &ReportTable, sink: &mut dyn Write) -> Result<()> {
    let enc = |row: &ConstantEnclosure| -> String {
        if table.compact {
            compact_enclosure(row.lo, row.hi)
        } else {
            format!("[{:.6}, {:.6}]", row.lo, row.hi)
        }
    };
    match table.layout {
        TableLayout::Generic => {
            writeln!(
                sink,
                "| domain | quantity | k | enclosure | certified | refine | mode | h |"
            )?;
            writeln!(sink, "|---|---|---|---|---|---|---|---|")?;
            for row in &table.rows {
                writeln!(
                    sink,
                    "| {} | {} | {} | {} | {} | {} | {} | {:.6} |",
                    row.domain,
                    row.quantity.name(),
                    row.quantity.index(),
                    enc(row),
                    row.certified,
                    row.refine_level,
                    row.mode.as_str(),
                    row.h_used
                )?;
            }
        }
        TableLayout::Table1 | TableLayout::Table3 => {
            let domains: &[DomainId] = if table.layout == TableLayout::Table1 {
                &[DomainId::K1, DomainId::K2, DomainId::K3]
            } else {
                &[
                    DomainId::T1,
                    DomainId::T2,
                    DomainId::T3,
                    DomainId::T4,
                    DomainId::T5,
                ]
            };
            write!(sink, "| |")?;
            for d in domains {
                write!(sink, " {d} |")?;
            }
            writeln!(sink)?;
            write!(sink, "|---|")?;
            for _ in domains {
                write!(sink, "---|")?;
            }
            writeln!(sink)?;
            for k in 0..=2usize {
                write!(sink, "| C_{k} |")?;
                for d in domains {
                    let cell = table
                        .rows
                        .iter()
                        .find(|r| r.domain == *d && r.quantity.index() == k);
                    match cell {
                        Some(row) => write!(sink, " {} |", enc(row))?,
                        None => write!(sink, " - |")?,
                    }
                }
                writeln!(sink)?;
            }
        }
    }
    Ok(())
}

/// Compressed enclosure notation: longest shared decimal prefix, then the
/// remaining digits of the rounded-down lower and rounded-up upper bound as
/// sub/superscript, e.g. [0.3183, 0.3186] -> "0.318_3^6". Digits are added
/// until the rendered interval is at most 1.5x wider than the actual one.
pub fn compact_enclosure(lo: f64, hi: f64) -> String {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo || hi >= 1e9 {
        return format!("[{lo}, {hi}]");
    }
    if lo == hi {
        return format!("{lo}");
    }
    let width = hi - lo;
    for nd in 1..=14usize {
        let scale = 10f64.powi(nd as i32);
        if hi * scale >= 9e15 {
            break;
        }
        let lo_scaled = (lo * scale).floor() as i64;
        let hi_scaled = (hi * scale).ceil() as i64;
        if hi_scaled <= lo_scaled {
            continue;
        }
        let rendered_width = (hi_scaled - lo_scaled) as f64 / scale;
        if rendered_width <= 1.5 * width + 1e-15 {
            let lo_s = decimal_string(lo_scaled, nd);
            let hi_s = decimal_string(hi_scaled, nd);
            let shared: usize = lo_s
                .chars()
                .zip(hi_s.chars())
                .take_while(|(a, b)| a == b)
                .count();
            if shared == 0 || lo_s.len() != hi_s.len() {
                return format!("[{lo_s}, {hi_s}]");
            }
            return format!("{}_{}^{}", &lo_s[..shared], &lo_s[shared..], &hi_s[shared..]);
        }
    }
    format!("[{lo}, {hi}]")
}

fn decimal_string(scaled: i64, nd: usize) -> String {
    let base = 10i64.pow(nd as u32);
    let int = scaled / base;
    let frac = (scaled % base).abs();
    format!("{int}.{frac:0nd$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Quantity;

    fn sample_row() -> ConstantEnclosure {
        ConstantEnclosure {
            domain: DomainId::K1,
            quantity: Quantity::Ck(0),
            lo: 0.31829,
            hi: 0.31861,
            refine_level: 5,
            mode: Mode::Rigorous,
            certified: true,
            h_used: 0.0442,
            c_h_used: 0.0083,
            wall_time_s: 0.5,
            mesh_cells: 1024,
            dofs_cr: 1583,
            dofs_p2: 2144,
        }
    }

    #[test]
    fn compact_notation_matches_published_style() {
        assert_eq!(compact_enclosure(0.3183, 0.3186), "0.318_3^6");
        assert_eq!(compact_enclosure(0.099, 0.107), "0._099^107");
        assert_eq!(compact_enclosure(0.2387, 0.2389), "0.238_7^9");
        assert_eq!(compact_enclosure(0.1755, 0.1760), "0.17_55^60");
    }

    #[test]
    fn csv_line_has_fixed_columns() {
        let table = ReportTable {
            rows: vec![sample_row()],
            layout: TableLayout::Generic,
            format: OutputFormat::Csv,
            compact: false,
        };
        let mut buf = Vec::new();
        emit_report(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "domain,k,lo,hi,certified,refine_level,mode,h");
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "K1");
        assert_eq!(fields[1], "0");
        assert_eq!(fields[4], "true");
        assert_eq!(fields[6], "rigorous");
        // 17 significant digits round-trip exactly
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.31829);
    }

    #[test]
    fn empty_table_is_header_only() {
        let table = ReportTable {
            rows: vec![],
            layout: TableLayout::Generic,
            format: OutputFormat::Csv,
            compact: false,
        };
        let mut buf = Vec::new();
        emit_report(&table, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "domain,k,lo,hi,certified,refine_level,mode,h\n"
        );
    }

    #[test]
    fn json_round_trips() {
        let table = ReportTable {
            rows: vec![sample_row()],
            layout: TableLayout::Generic,
            format: OutputFormat::Json,
            compact: false,
        };
        let mut buf = Vec::new();
        emit_report(&table, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let back = ConstantEnclosure::from_json(&v).unwrap();
        assert_eq!(back.lo, 0.31829);
        assert_eq!(back.hi, 0.31861);
        assert_eq!(back.dofs_p2, 2144);
    }

    #[test]
    fn table1_layout_rejects_foreign_domains() {
        let mut row = sample_row();
        row.domain = DomainId::T1;
        let table = ReportTable {
            rows: vec![row],
            layout: TableLayout::Table1,
            format: OutputFormat::Md,
            compact: false,
        };
        let mut buf = Vec::new();
        assert!(emit_report(&table, &mut buf).is_err());
    }

    #[test]
    fn usage_error_exit_code() {
        assert_eq!(run_command(["eigenbounds", "constants", "--domain", "K9"]), 1);
        assert_eq!(run_command(["eigenbounds", "bogus-subcommand"]), 1);
        assert_eq!(run_command(["eigenbounds", "--help"]), 0);
    }

    #[test]
    fn markdown_table1_shape() {
        let mut rows = Vec::new();
        for (d, k) in [
            (DomainId::K1, 0usize),
            (DomainId::K2, 1),
            (DomainId::K3, 2),
        ] {
            let mut r = sample_row();
            r.domain = d;
            r.quantity = Quantity::Ck(k);
            rows.push(r);
        }
        let table = ReportTable {
            rows,
            layout: TableLayout::Table1,
            format: OutputFormat::Md,
            compact: true,
        };
        let mut buf = Vec::new();
        emit_report(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5); // header, separator, C_0..C_2
        assert!(lines[0].contains("K1") && lines[0].contains("K3"));
        assert!(lines[2].starts_with("| C_0 |"));
    }
}
