//! Experiment configuration: defaults per subcommand, a JSON file layer and
//! command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use lambert_core::Dimension;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ExitCdf,
    Tail,
    Lambda,
    Renewal,
    DiscIdentity,
    Constants,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::ExitCdf => "exit-cdf",
            Command::Tail => "tail",
            Command::Lambda => "lambda",
            Command::Renewal => "renewal",
            Command::DiscIdentity => "disc-identity",
            Command::Constants => "constants",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything that determines the numbers an experiment produces.
///
/// `workers` and `out` only decide how and where the run happens; they are
/// kept out of the serialized echo so that outputs do not depend on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dim: usize,
    /// Exit level.
    pub s: f64,
    /// Conditioning depth: exits with `s - S_{N_s - 1} >= beta` are "conditioned".
    pub beta: f64,
    /// Conditioning fraction for the ratio law: `S_{N_s - 1} <= s (1 - epsilon)`.
    pub epsilon: f64,
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// Bin edges in units of `s`, all at or below 0.
    pub bins: Vec<f64>,
    pub r1: f64,
    pub r2: f64,
    /// Main sample count; its meaning depends on the command.
    pub samples: u64,
    pub ladders: u64,
    pub max_steps: u64,
    pub max_attempts: u64,
    pub rel_tol: f64,
    pub seed: u64,
    pub format: Format,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Values supplied on the command line; `None` means "not given".
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Ambient dimension d (at least 3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Exit level s.
    #[arg(long)]
    pub s: Option<f64>,
    /// Conditioning depth beta.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Conditioning fraction epsilon in (0, 1).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Main sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Number of ladder walks.
    #[arg(long)]
    pub ladders: Option<u64>,
    /// Step budget per trajectory.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Upper bound on trajectories tried when sampling until a target.
    #[arg(long)]
    pub max_attempts: Option<u64>,
    /// Relative tolerance of the quadratures.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Random seed (required unless given by --config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Inner radius of the brightness annulus.
    #[arg(long)]
    pub r1: Option<f64>,
    /// Outer radius of the brightness annulus.
    #[arg(long)]
    pub r2: Option<f64>,
    /// Comma-separated t values in [0, 1].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t_grid: Option<Vec<f64>>,
    /// Comma-separated x values for the tail table.
    #[arg(long, value_delimiter = ',')]
    pub x_grid: Option<Vec<f64>>,
    /// Comma-separated bin edges in units of s, e.g. -0.5,-0.4,-0.3,-0.2.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub bins: Option<Vec<f64>>,
    /// JSON config to start from, such as the echo stored with a previous output.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn grid(n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

impl ExperimentConfig {
    /// Defaults for `command`; the seed is left at 0 and must be set.
    pub fn defaults(command: Command) -> Self {
        let mut c = ExperimentConfig {
            command,
            dim: 3,
            s: 50.0,
            beta: 3.0,
            epsilon: 0.06,
            t_grid: grid(20),
            x_grid: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            bins: vec![-0.5, -0.4, -0.3, -0.2],
            r1: 0.25,
            r2: 0.75,
            samples: 10_000,
            ladders: 100_000,
            max_steps: 100_000_000,
            max_attempts: 10_000_000,
            rel_tol: 1e-8,
            seed: 0,
            format: Format::Csv,
            workers: 1,
            out: None,
        };
        match command {
            Command::Tail => c.samples = 1_000_000,
            Command::Renewal => {
                c.s = 200.0;
                c.samples = 1_000;
            }
            Command::DiscIdentity => {
                c.s = 10.0;
                c.samples = 100_000;
                c.t_grid = (1..100).map(|k| k as f64 / 100.0).collect();
            }
            Command::Constants => c.format = Format::Json,
            Command::ExitCdf | Command::Lambda => {}
        }
        c
    }

    /// Defaults, then the `--config` file, then explicit flags.
    pub fn resolve(command: Command, o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(path) => Self::load(path)?,
            None => Self::defaults(command),
        };
        if c.command != command {
            return Err(CliError::Config(format!(
                "config file is for `{}`, not `{command}`",
                c.command
            )));
        }
        let seed_given = o.seed.is_some() || o.config.is_some();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { c.$f = v.clone(); } )* };
        }
        set!(dim, s, beta, epsilon, samples, ladders, max_steps, max_attempts, rel_tol, seed, format, r1, r2, t_grid, x_grid, bins);
        c.workers = o.workers.unwrap_or(1);
        c.out = o.out.clone();
        if !seed_given && command != Command::Constants {
            return Err(CliError::Config("--seed is required".into()));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // Accept either a bare config or a full JSON output carrying one.
        let cfg = value.pointer("/metadata/config").cloned().unwrap_or(value);
        let mut c: ExperimentConfig =
            serde_json::from_value(cfg).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        c.workers = 1;
        Ok(c)
    }

    pub fn dimension(&self) -> Result<Dimension, CliError> {
        Dimension::new(self.dim).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.dimension()?;
        if !(self.s > 0.0 && self.s.is_finite()) {
            return bad(format!("--s must be positive, got {}", self.s));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("--beta must be nonnegative, got {}", self.beta));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("--epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return bad("--t-grid values must lie in [0, 1]".into());
        }
        if self.x_grid.is_empty() || self.x_grid.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return bad("--x-grid values must be positive".into());
        }
        if self.bins.len() < 2
            || self.bins.windows(2).any(|w| !(w[0] < w[1]))
            || !(self.bins[0] >= -1.0)
            || !(self.bins[self.bins.len() - 1] <= 0.0)
        {
            return bad("--bins must increase within [-1, 0]".into());
        }
        if !(0.0 < self.r1 && self.r1 <= self.r2 && self.r2 < 1.0) {
            return bad(format!("need 0 < r1 <= r2 < 1, got {} and {}", self.r1, self.r2));
        }
        if self.samples == 0 || self.max_steps == 0 || self.max_attempts == 0 {
            return bad("--samples, --max-steps and --max-attempts must be positive".into());
        }
        if self.command == Command::Lambda && self.ladders < 1_000 {
            return bad("--ladders must be at least 1000".into());
        }
        if self.command == Command::Renewal && self.samples < 2 {
            return bad("--samples must be at least 2".into());
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad(format!("--rel-tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if self.workers == 0 {
            return bad("--workers must be at least 1".into());
        }
        Ok(())
    }
}
