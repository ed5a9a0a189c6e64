//! Project configuration: a UTF-8 `key=value` file naming the fixture
//! inputs and analysis options.
//!
//! Recognized keys: `kernel` (mini-C source), `facts` (pre-extracted facts
//! file, alternative to `kernel`), `oil`, `bindings`, `coverage_paths`,
//! `mode` (`modify_only` | `modify_or_use`), `counter_bits` (overrides the
//! OIL value when non-zero). Relative paths resolve against the config
//! file's directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::slicer::ElfMode;

#[derive(Debug, Clone, Default)]
pub struct ProjectConfig {
    pub kernel: Option<PathBuf>,
    pub facts: Option<PathBuf>,
    pub oil: Option<PathBuf>,
    pub bindings: Option<PathBuf>,
    pub coverage_paths: Option<PathBuf>,
    pub mode: ElfMode,
    pub counter_bits: Option<u32>,
}

impl ProjectConfig {
    pub fn parse(text: &str, file: &str, base: &Path) -> Result<ProjectConfig> {
        let mut cfg = ProjectConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx as u32 + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::syntax(file, lineno, "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let path = |v: &str| -> PathBuf { base.join(v) };
            match key {
                "kernel" => cfg.kernel = Some(path(value)),
                "facts" => cfg.facts = Some(path(value)),
                "oil" => cfg.oil = Some(path(value)),
                "bindings" => cfg.bindings = Some(path(value)),
                "coverage_paths" => cfg.coverage_paths = Some(path(value)),
                "mode" => cfg.mode = ElfMode::parse(value)?,
                "counter_bits" => {
                    let n: u32 = value.parse().map_err(|_| {
                        Error::syntax(file, lineno, format!("bad counter_bits {value:?}"))
                    })?;
                    cfg.counter_bits = if n == 0 { None } else { Some(n) };
                }
                other => {
                    return Err(Error::syntax(
                        file,
                        lineno,
                        format!("unknown config key {other:?}"),
                    ))
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ProjectConfig> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        ProjectConfig::parse(&text, &path.display().to_string(), base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_paths_relative_to_config_dir() {
        let cfg = ProjectConfig::parse(
            "# demo\nkernel=src/k.c\noil=sys.oil\nmode=modify_only\ncounter_bits=16\n",
            "p.cfg",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.kernel.unwrap(), PathBuf::from("/base/src/k.c"));
        assert_eq!(cfg.mode, ElfMode::ModifyOnly);
        assert_eq!(cfg.counter_bits, Some(16));
    }

    #[test]
    fn zero_counter_bits_means_use_oil_value() {
        let cfg = ProjectConfig::parse("counter_bits=0\n", "p.cfg", Path::new(".")).unwrap();
        assert_eq!(cfg.counter_bits, None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ProjectConfig::parse("bogus=1\n", "p.cfg", Path::new(".")).is_err());
    }
}
