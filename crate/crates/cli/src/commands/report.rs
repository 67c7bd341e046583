use std::path::PathBuf;

use clap::{Args, ValueEnum};

use cloudward::harness::artifacts::{comparison_csv, comparison_markdown};
use cloudward::harness::metrics::MetricsReport;
use cloudward::harness::report::{render_measured, render_reference};

use super::{data, emit, usage, write_text, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Markdown,
    Csv,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Metric report JSON files, one table row each.
    pub files: Vec<PathBuf>,

    /// Print the expected full-scale comparison table.
    #[arg(long)]
    pub reference: bool,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Also write comparison.md and comparison.csv into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ReportArgs) -> Result<(), CliError> {
    if args.files.is_empty() && !args.reference {
        return Err(usage("give at least one report file, or --reference"));
    }

    let mut reports: Vec<MetricsReport> = Vec::new();
    for path in &args.files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| data(format!("cannot read {}: {e}", path.display())))?;
        let report = serde_json::from_str(&text)
            .map_err(|e| data(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }

    if !reports.is_empty() {
        match args.format {
            Format::Text => emit(&render_measured(&reports))?,
            Format::Markdown => emit(&comparison_markdown(&reports))?,
            Format::Csv => emit(&comparison_csv(&reports))?,
        }
        if let Some(dir) = &args.out {
            std::fs::create_dir_all(dir)
                .map_err(|e| data(format!("cannot create {}: {e}", dir.display())))?;
            write_text(&dir.join("comparison.md"), &comparison_markdown(&reports))?;
            write_text(&dir.join("comparison.csv"), &comparison_csv(&reports))?;
        }
    }

    if args.reference {
        if !reports.is_empty() {
            emit("\n")?;
        }
        emit(&render_reference())?;
    }
    Ok(())
}
