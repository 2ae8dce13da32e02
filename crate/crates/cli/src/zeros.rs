use std::io::Write;
use std::path::{Path, PathBuf};

use bessel_exit::special::bessel_zeros;
use bessel_exit::ZeroTable;
use clap::Args;

use crate::error::{CliError, CliResult};
use crate::Settings;

#[derive(Debug, Args)]
pub struct ZerosArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    /// Number of zeros.
    #[arg(long)]
    pub n: usize,
    /// Directory holding persisted zero tables.
    #[arg(long, env = "BESSEL_EXIT_CACHE")]
    pub cache_dir: Option<PathBuf>,
}

/// Where the table for `mu` lives inside `dir`.
pub fn table_path(dir: &Path, mu: f64) -> PathBuf {
    dir.join(format!("jzeros_mu{mu:?}.txt"))
}

fn read_cached(path: &Path, mu: f64) -> Option<ZeroTable> {
    let text = std::fs::read_to_string(path).ok()?;
    match ZeroTable::from_text(&text) {
        Ok(t) if t.mu() == mu => Some(t),
        Ok(_) => {
            log::warn!("{} holds another index; recomputing", path.display());
            None
        }
        Err(e) => {
            log::warn!("ignoring unreadable {}: {e}", path.display());
            None
        }
    }
}

fn write_atomic(path: &Path, text: &str) -> CliResult<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// A table with at least `n` zeros, from the cache when possible.
pub fn obtain(mu: f64, n: usize, cache_dir: Option<&Path>) -> CliResult<ZeroTable> {
    let Some(dir) = cache_dir else {
        return Ok(bessel_zeros(mu, n)?);
    };
    let path = table_path(dir, mu);
    let table = match read_cached(&path, mu) {
        Some(t) if t.len() >= n => {
            log::info!("cache hit: {} ({} zeros)", path.display(), t.len());
            return Ok(t);
        }
        Some(t) => {
            log::info!("extending {} from {} to {n} zeros", path.display(), t.len());
            t.extend(n)?
        }
        None => {
            log::info!("cache miss: computing {n} zeros into {}", path.display());
            bessel_zeros(mu, n)?
        }
    };
    write_atomic(&path, &table.to_text())?;
    Ok(table)
}

pub fn run(args: &ZerosArgs, settings: &Settings) -> CliResult<()> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let dir = settings.cache_dir(args.cache_dir.as_deref());
    let table = obtain(args.mu, args.n, dir.as_deref())?;
    let mut out = String::from("k,zero\n");
    for (k, z) in table.zeros().iter().take(args.n).enumerate() {
        out.push_str(&format!("{},{z:?}\n", k + 1));
    }
    std::io::stdout()
        .write_all(out.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip_and_extension() {
        let dir = tempfile::tempdir().unwrap();
        let a = obtain(0.0, 5, Some(dir.path())).unwrap();
        let path = table_path(dir.path(), 0.0);
        let stamp = std::fs::metadata(&path).unwrap().modified().unwrap();
        let b = obtain(0.0, 3, Some(dir.path())).unwrap();
        assert_eq!(a.zeros(), b.zeros());
        assert_eq!(std::fs::metadata(&path).unwrap().modified().unwrap(), stamp);
        let c = obtain(0.0, 12, Some(dir.path())).unwrap();
        assert_eq!(&c.zeros()[..5], a.zeros());
        assert_eq!(read_cached(&path, 0.0).unwrap().len(), c.len());
    }

    #[test]
    fn corrupt_cache_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let path = table_path(dir.path(), 0.5);
        std::fs::write(&path, "garbage").unwrap();
        let t = obtain(0.5, 3, Some(dir.path())).unwrap();
        assert!((t.zeros()[0] - std::f64::consts::PI).abs() < 1e-13);
        assert!(read_cached(&path, 0.5).is_some());
    }
}
