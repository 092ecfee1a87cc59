//! On-disk rate table cache.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use mimonet::link::Impairments;
use mimonet::rate_table::{build_rate_table, table_file_name, BuildKey, RateTable, TableConfig};
use mimonet::SystemParams;

pub struct TableStore<'a> {
    pub dir: PathBuf,
    pub params: &'a SystemParams,
    pub config: &'a TableConfig,
    /// Build missing or stale tables instead of failing.
    pub build: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheState {
    Fresh,
    Stale,
    Missing,
}

impl<'a> TableStore<'a> {
    pub fn path(&self, n_rx: usize, flags: Impairments) -> PathBuf {
        self.dir.join(table_file_name(n_rx, flags))
    }

    fn expected_key(&self) -> BuildKey {
        BuildKey {
            config: self.config.clone(),
            f_ici: self.params.f_ici,
            n_sub: self.params.n_sub,
            gamma_ber: self.params.gamma_ber,
            r_base: self.params.r_base,
        }
    }

    pub fn state(&self, n_rx: usize, flags: Impairments) -> CacheState {
        match RateTable::load(self.path(n_rx, flags)) {
            Ok(t) if t.build.as_ref() == Some(&self.expected_key()) && t.n_rx == n_rx && t.impairments == flags => {
                CacheState::Fresh
            }
            Ok(_) => CacheState::Stale,
            Err(_) if self.path(n_rx, flags).exists() => CacheState::Stale,
            Err(_) => CacheState::Missing,
        }
    }

    /// Loads a fresh cached table, building it when allowed.
    pub fn get(&self, n_rx: usize, flags: Impairments) -> Result<RateTable> {
        let path = self.path(n_rx, flags);
        match self.state(n_rx, flags) {
            CacheState::Fresh => RateTable::load(&path).with_context(|| format!("reading {}", path.display())),
            state if self.build => {
                let what = if state == CacheState::Stale {
                    "rebuilding stale"
                } else {
                    "building"
                };
                eprintln!("{what} {}", path.display());
                let t = build_rate_table(n_rx, flags, self.params, self.config)?;
                std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
                t.save(&path).with_context(|| format!("writing {}", path.display()))?;
                Ok(t)
            }
            CacheState::Stale => bail!(
                "rate table {} was built with different settings; rerun with --build-tables to refresh it",
                path.display()
            ),
            CacheState::Missing => bail!(
                "rate table {} not found; rerun with --build-tables to generate it",
                path.display()
            ),
        }
    }

    pub fn get_all(&self, n_rx: &[usize], flags: &[Impairments]) -> Result<Vec<(usize, Impairments, RateTable)>> {
        let mut out = Vec::new();
        for &n in n_rx {
            for &f in flags {
                out.push((n, f, self.get(n, f)?));
            }
        }
        Ok(out)
    }
}

pub fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).display().to_string()
}
