//! The `equisum` command line.

mod args;
mod commands;
mod render;
mod simulate;

pub use args::{parse_int, Cli, Format};

use clap::Parser;
use equisum_core::entropy::EntropyError;
use equisum_core::flags::FlagError;
use equisum_core::optmeas::OptError;
use equisum_core::qlinalg::LinalgError;
use equisum_core::rho::RhoError;
use equisum_simlab::SimError;
use render::Output;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;

pub const WORKERS_ENV: &str = "EQUISUM_WORKERS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Guard, capacity or numerical failure.
    Guard(String),
    Io(String),
    /// check found a failing condition; the report is still printed.
    Certificate(Output),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Guard(_) => 2,
            CliError::Certificate(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FlagError> for CliError {
    fn from(e: FlagError) -> Self {
        match e {
            FlagError::Spec { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

macro_rules! guard_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Guard(e.to_string())
            }
        }
    )*};
}
guard_from!(LinalgError, RhoError, OptError, EntropyError);

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Param(_) | SimError::Range { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

/// key = value pairs; '#' starts a comment.
#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

pub const CONFIG_KEYS: &[&str] = &[
    "format", "workers", "seed", "trials", "draws", "tol", "max_j", "theta_r", "r", "order", "perturb", "d", "c", "k",
    "d1", "d2", "alpha", "x", "n", "q", "model", "dmin", "dmax",
];

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
            let k = k.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key {k}", no + 1)));
            }
            values.insert(k, v.trim().trim_matches('"').to_string());
        }
        Ok(Config { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v}"))),
        }
    }

    pub fn get_int(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => parse_int(v).map(Some).map_err(|e| CliError::Usage(format!("config key {key}: {e}"))),
        }
    }

    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("config key {key}: bad list {v}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

/// Flag value, else config value, else default.
pub(crate) fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &Config, key: &str, default: T) -> Result<T, CliError> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get(key)?.unwrap_or(default)),
    }
}

pub(crate) fn pick_int(flag: Option<u64>, cfg: &Config, key: &str, default: u64) -> Result<u64, CliError> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get_int(key)?.unwrap_or(default)),
    }
}

pub struct Context {
    pub config: Config,
    pub workers: usize,
}

fn resolve_workers(flag: Option<usize>, cfg: &Config) -> Result<usize, CliError> {
    if let Some(w) = flag {
        return Ok(w.max(1));
    }
    if let Some(w) = cfg.get::<usize>("workers")? {
        return Ok(w.max(1));
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v.trim().parse::<usize>().map(|w| w.max(1)).map_err(|_| CliError::Usage(format!("{WORKERS_ENV}={v}")));
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn resolve_format(cli: &Cli, cfg: &Config) -> Result<Option<Format>, CliError> {
    if cli.json {
        return Ok(Some(Format::Json));
    }
    if cli.format.is_some() {
        return Ok(cli.format);
    }
    match cfg.raw("format") {
        None => Ok(None),
        Some("table") => Ok(Some(Format::Table)),
        Some("json") => Ok(Some(Format::Json)),
        Some("csv") => Ok(Some(Format::Csv)),
        Some(v) => Err(CliError::Usage(format!("config key format: unknown value {v}"))),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => {
            Config::parse(&std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)?
        }
        None => Config::default(),
    };
    let workers = resolve_workers(cli.workers, &config)?;
    let format = resolve_format(cli, &config)?;
    let ctx = Context { config, workers };
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Guard(e.to_string()))?;
    let result = pool.install(|| commands::dispatch(&cli.cmd, &ctx));
    let (output, failure) = match result {
        Ok(o) => (o, None),
        Err(CliError::Certificate(o)) => (o.clone(), Some(CliError::Certificate(o))),
        Err(e) => return Err(e),
    };
    let fmt = format.unwrap_or(output.default_format);
    out.write_all(output.render(fmt).as_bytes())?;
    if let Some(p) = &cli.out {
        std::fs::write(p, output.csv_text()).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

/// Parses argv (program name first), runs, and returns the exit status.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) => format!("error: {m}\n"),
                CliError::Guard(m) => format!("error: {m}\n"),
                CliError::Io(m) => format!("error: {m}\n"),
                CliError::Certificate(_) => "certificate failed\n".to_string(),
            };
            let _ = err.write_all(msg.as_bytes());
            e.code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run_with(argv, &mut out, &mut err);
    let _ = out.flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).code(), 1);
        assert_eq!(CliError::Io(String::new()).code(), 1);
        assert_eq!(CliError::Guard(String::new()).code(), 2);
        let o = Output::new("x/1", serde_json::json!({}), String::new());
        assert_eq!(CliError::Certificate(o).code(), 3);
        assert_eq!(CliError::from(SimError::Capacity { n: 30, max: 26 }).code(), 2);
        assert_eq!(CliError::from(SimError::Param("c".into())).code(), 1);
    }

    #[test]
    fn config_lines() {
        let c = Config::parse("seed = 4 # fixed\n\nmax-j=7\nc = 0.1, 0.2\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(4));
        assert_eq!(c.get::<usize>("max_j").unwrap(), Some(7));
        assert_eq!(c.get_list("c").unwrap(), Some(vec![0.1, 0.2]));
        assert!(Config::parse("seed 4").is_err());
        assert!(Config::parse("bogus = 1").is_err());
    }
}
