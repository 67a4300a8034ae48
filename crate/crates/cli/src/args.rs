//! Command-line grammar and `--config` merging.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "stm",
    version,
    about = "Zero-range three-boson solver: Efimov spectra, wave functions, atom-dimer scattering",
    args_override_self = true
)]
pub struct Cli {
    /// Plain-text key=value file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Worker threads (default: logical core count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Presentation factor: momenta are multiplied by it, energies by its square.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub unit_scale: f64,

    /// Increase log verbosity on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Gauss–Legendre points on the momentum half-line.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Scale of the tangent map t ↦ s·tan(π(1+t)/4).
    #[arg(long)]
    pub map_scale: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Efimov levels and ratios at one dimer binding energy.
    #[command(args_override_self = true)]
    Spectrum {
        #[arg(long, default_value_t = 0.0)]
        eps2: f64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// Relative bisection tolerance on level energies.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Shallowest binding searched at eps2 = 0.
        #[arg(long)]
        min_binding: Option<f64>,
    },
    /// Spectator function of one level on the grid nodes.
    #[command(args_override_self = true)]
    Spectator {
        #[arg(long, default_value_t = 0.0)]
        eps2: f64,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Normalized wave function: spectator and momentum density tables.
    #[command(args_override_self = true)]
    Wavefunction {
        #[arg(long, default_value_t = 0.0)]
        eps2: f64,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// Points of the q and p integration grids.
        #[arg(long, default_value_t = 48)]
        q_n: usize,
        #[arg(long)]
        q_map_scale: Option<f64>,
    },
    /// Elastic atom–dimer amplitude below breakup.
    #[command(args_override_self = true)]
    Scatter {
        #[arg(long, default_value_t = 1.0)]
        eps2: f64,
        /// On-shell momenta, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Consecutive-level scaling points (x, y) for a list of eps2 values.
    #[command(name = "scaling-curve", args_override_self = true)]
    ScalingCurve {
        /// Dimer binding energies, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        eps2: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        min_binding: Option<f64>,
    },
    /// eps2/ε₃ at which level N+1 meets the atom–dimer cut.
    #[command(args_override_self = true)]
    Threshold {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// eps2 at which level N+1 is still bound.
        #[arg(long, requires = "bracket_hi")]
        bracket_lo: Option<f64>,
        /// eps2 at which level N+1 is gone.
        #[arg(long, requires = "bracket_lo")]
        bracket_hi: Option<f64>,
    },
    /// Scattering length a(B) near a Feshbach resonance.
    #[command(args_override_self = true)]
    Feshbach {
        #[arg(long)]
        abg: f64,
        #[arg(long)]
        b0: f64,
        #[arg(long)]
        delta_b: f64,
        /// Magnetic fields, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<f64>,
    },
    /// Runs the closed-form consistency checks.
    #[command(args_override_self = true)]
    Selftest,
}

const GLOBAL_VALUE_FLAGS: [&str; 5] = [
    "--config",
    "--format",
    "--output",
    "--threads",
    "--unit-scale",
];
const GLOBAL_KEYS: [&str; 4] = ["format", "output", "threads", "unit-scale"];

/// `key = value` lines; `#` starts a comment. Keys may use `_` or `-`.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key == "config" {
            return Err(CliError::Usage(
                "config files cannot include other config files".into(),
            ));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

fn subcommand_index(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let token = argv[i].to_string_lossy();
        if token == "--" {
            return None;
        }
        if token.starts_with('-') {
            if GLOBAL_VALUE_FLAGS.contains(&token.as_ref()) {
                i += 1;
            }
        } else {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut path = None;
    let mut iter = argv.iter().skip(1);
    while let Some(token) = iter.next() {
        let t = token.to_string_lossy();
        if t == "--config" {
            path = iter.next().map(PathBuf::from);
        } else if let Some(p) = t.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    path
}

/// Splices config entries in front of the user's flags so that later
/// (command-line) occurrences win.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let entries = read_config(&path)?;
    let Some(sub) = subcommand_index(&argv) else {
        return Ok(argv);
    };
    let flag = |(k, v): &(String, String)| [OsString::from(format!("--{k}")), OsString::from(v)];
    let globals = entries
        .iter()
        .filter(|e| GLOBAL_KEYS.contains(&e.0.as_str()))
        .flat_map(flag);
    let locals = entries
        .iter()
        .filter(|e| !GLOBAL_KEYS.contains(&e.0.as_str()))
        .flat_map(flag);
    let mut merged = vec![argv[0].clone()];
    merged.extend(globals);
    merged.extend_from_slice(&argv[1..=sub]);
    merged.extend(locals);
    merged.extend_from_slice(&argv[sub + 1..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn finds_subcommand_after_global_values() {
        assert_eq!(
            subcommand_index(&os(&["stm", "--format", "csv", "spectrum"])),
            Some(3)
        );
        assert_eq!(
            subcommand_index(&os(&["stm", "-v", "scatter", "--k", "1"])),
            Some(2)
        );
        assert_eq!(subcommand_index(&os(&["stm", "--format=csv"])), None);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\neps2 = 0.5\nlevels=2\nformat = csv\n").unwrap();
        let argv = os(&[
            "stm",
            "spectrum",
            "--config",
            path.to_str().unwrap(),
            "--eps2",
            "0.25",
        ]);
        let cli = Cli::try_parse_from(merge_config(argv).unwrap()).unwrap();
        assert_eq!(cli.format, Format::Csv);
        match cli.command {
            Command::Spectrum { eps2, levels, .. } => {
                assert_eq!(eps2, 0.25);
                assert_eq!(levels, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn global_flag_beats_config_global() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "format = csv\n").unwrap();
        let argv = os(&[
            "stm",
            "--format",
            "json",
            "--config",
            path.to_str().unwrap(),
            "selftest",
        ]);
        let cli = Cli::try_parse_from(merge_config(argv).unwrap()).unwrap();
        assert_eq!(cli.format, Format::Json);
    }

    #[test]
    fn malformed_config_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "eps2 0.5\n").unwrap();
        assert!(matches!(read_config(&path), Err(CliError::Usage(_))));
    }
}
