//! Run configuration files.
//!
//! A config is plain text with one `key = value` per line and `#` comments.
//! Sweep configs add `[case]` headers; keys before the first header are
//! defaults inherited by every case block.
//!
//! ```text
//! # case 2a
//! sigma = 1
//! xi = 1
//! alpha = 1
//! a0 = 1
//! a1 = 0
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::emden::{EmdenParams, DEFAULT_TOL};
use crate::error::{invalid, Result};
use crate::selfsim::SolutionCase;
use crate::suite::{Settings, Tolerances};
use crate::verify::SpaceTimeGrid;

const CASE_KEYS: &[&str] = &["sigma", "xi", "alpha", "a0", "a1"];
const RUN_KEYS: &[&str] = &[
    "tol",
    "t_end",
    "t0",
    "t1",
    "nt",
    "x0",
    "x1",
    "nx",
    "levels",
    "x_half",
    "alpha_d",
    "mass_times",
    "decay_t_end",
    "order_min",
    "order_max",
    "residual_floor",
    "dispersion_tol",
    "mass_tol",
    "drift_tol",
    "rate_tol",
    "rate_floor",
    "decay_tol",
];

/// One block of `key = value` entries, with source line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Block {
    entries: BTreeMap<String, (String, usize)>,
}

impl Block {
    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        if !CASE_KEYS.contains(&key) && !RUN_KEYS.contains(&key) {
            return Err(invalid(format!("line {line}: unknown key `{key}`")));
        }
        if let Some((_, first)) = self.entries.get(key) {
            return Err(invalid(format!(
                "line {line}: key `{key}` already set on line {first}"
            )));
        }
        self.entries
            .insert(key.to_owned(), (value.to_owned(), line));
        Ok(())
    }

    /// Sets or replaces `key`; used for command-line overrides.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_owned(), (value.to_string(), 0));
    }

    /// Entries of `self` on top of `defaults`.
    pub fn over(&self, defaults: &Block) -> Block {
        let mut merged = defaults.clone();
        merged.entries.extend(self.entries.clone());
        merged
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn located(key: &str, line: usize) -> String {
        if line == 0 {
            format!("`{key}` (command line)")
        } else {
            format!("`{key}` on line {line}")
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|(v, line)| {
                v.parse().map_err(|_| {
                    invalid(format!("{}: cannot parse `{v}`", Self::located(key, line)))
                })
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| invalid(format!("missing required key `{key}`")))
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|(v, line)| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse().map_err(|_| {
                            invalid(format!(
                                "{}: cannot parse list item `{}`",
                                Self::located(key, line),
                                item.trim()
                            ))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn emden_params(&self) -> Result<EmdenParams> {
        EmdenParams::new(
            self.require("xi")?,
            self.require("a0")?,
            self.get_or("a1", 0.0)?,
        )
    }

    /// Solution case; sign-table violations cite the admissible patterns.
    pub fn solution_case(&self) -> Result<SolutionCase> {
        let sigma: i32 = self.require("sigma")?;
        SolutionCase::new(sigma, self.require("alpha")?, self.emden_params()?)
    }

    pub fn tol(&self) -> Result<f64> {
        let tol = self.get_or("tol", DEFAULT_TOL)?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid(format!("tol must be positive, got {tol}")));
        }
        Ok(tol)
    }

    /// Sampling grid for field output; times in physical units `t`.
    pub fn field_grid(&self) -> Result<SpaceTimeGrid> {
        SpaceTimeGrid::new(
            self.get_or("t0", 0.0)?,
            self.get_or("t1", 0.5)?,
            self.get_or("nt", 11)?,
            self.get_or("x0", -1.0)?,
            self.get_or("x1", 1.0)?,
            self.get_or("nx", 21)?,
        )
    }

    pub fn verify_settings(&self) -> Result<Settings> {
        let d = Settings::default();
        let td = Tolerances::default();
        let t_window = match (self.get::<f64>("t0")?, self.get::<f64>("t1")?) {
            (None, None) => None,
            (t0, Some(t1)) => Some((t0.unwrap_or(0.0), t1)),
            (Some(_), None) => return Err(invalid("`t0` given without `t1`")),
        };
        Ok(Settings {
            tol: self.tol()?,
            nx: self.get_or("nx", d.nx)?,
            nt: self.get_or("nt", d.nt)?,
            levels: self.get_or("levels", d.levels)?,
            t_window,
            x_half: self.get("x_half")?,
            alpha_d: self.list("alpha_d")?.unwrap_or(d.alpha_d),
            mass_times: self.list("mass_times")?,
            decay_t_end: self.get_or("decay_t_end", d.decay_t_end)?,
            velocity_scale: d.velocity_scale,
            tolerances: Tolerances {
                order_min: self.get_or("order_min", td.order_min)?,
                order_max: self.get_or("order_max", td.order_max)?,
                residual_floor: self.get_or("residual_floor", td.residual_floor)?,
                dispersion_abs: self.get_or("dispersion_tol", td.dispersion_abs)?,
                mass_rel: self.get_or("mass_tol", td.mass_rel)?,
                drift_rel: self.get_or("drift_tol", td.drift_rel)?,
                rate_rel: self.get_or("rate_tol", td.rate_rel)?,
                rate_floor: self.get_or("rate_floor", td.rate_floor)?,
                decay_rel: self.get_or("decay_tol", td.decay_rel)?,
            },
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// Entries before the first `[case]` header.
    pub defaults: Block,
    /// One block per `[case]` header, in file order.
    pub cases: Vec<Block>,
}

impl ConfigFile {
    /// Case blocks merged over the defaults.
    pub fn merged_cases(&self) -> Vec<Block> {
        self.cases.iter().map(|c| c.over(&self.defaults)).collect()
    }
}

pub fn parse(text: &str) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[case]" {
                return Err(invalid(format!("line {line}: unknown section `{content}`")));
            }
            cfg.cases.push(Block::default());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| invalid(format!("line {line}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(invalid(format!("line {line}: expected `key = value`")));
        }
        let block = cfg.cases.last_mut().unwrap_or(&mut cfg.defaults);
        block.insert(key, value, line)?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfsim::{CaseId, CASE_TABLE};

    #[test]
    fn flat_file() {
        let cfg = parse("# comment\nsigma = 1\nxi=1 # trailing\n\nalpha = 1\na0 = 1\n").unwrap();
        assert!(cfg.cases.is_empty());
        let c = cfg.defaults.solution_case().unwrap();
        assert_eq!(c.case_id(), CaseId::C2a);
        assert_eq!(c.emden().a1, 0.0);
    }

    #[test]
    fn case_blocks_inherit_defaults() {
        let text = "alpha = 2\na1 = 0\n[case]\nsigma=1\nxi=1\na0=1\n[case]\nsigma=-1\nxi=-1\na0=1\nalpha=3\n";
        let cfg = parse(text).unwrap();
        let cases = cfg.merged_cases();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].solution_case().unwrap().alpha(), 2.0);
        assert_eq!(cases[1].solution_case().unwrap().alpha(), 3.0);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["sigma 1", "bogus = 1", "xi = 1\nxi = 2", "[cases]", "xi = "] {
            assert!(parse(bad).is_err(), "{bad}");
        }
        let cfg = parse("xi = one\na0 = 1").unwrap();
        let e = cfg.defaults.emden_params().unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
    }

    #[test]
    fn sign_table_enforced() {
        let valid = [
            (-1, -1.0, 1.0),
            (-1, 1.0, -1.0),
            (1, 1.0, 1.0),
            (1, -1.0, -1.0),
        ];
        let invalid = [
            (-1, -1.0, -1.0),
            (-1, 1.0, 1.0),
            (1, 1.0, -1.0),
            (1, -1.0, 1.0),
        ];
        let block = |(s, xi, a0): (i32, f64, f64)| {
            parse(&format!("sigma={s}\nxi={xi}\na0={a0}\nalpha=1\n"))
                .unwrap()
                .defaults
        };
        for v in valid {
            assert!(block(v).solution_case().is_ok());
        }
        for v in invalid {
            let e = block(v).solution_case().unwrap_err();
            assert_eq!(e.exit_code(), 1);
            assert!(e.to_string().contains(CASE_TABLE));
        }
    }

    #[test]
    fn verify_settings_and_lists() {
        let cfg = parse("alpha_d = 0, 2.5\nmass_times = 0,0.1\nt1 = 0.3\nnx = 9").unwrap();
        let s = cfg.defaults.verify_settings().unwrap();
        assert_eq!(s.alpha_d, vec![0.0, 2.5]);
        assert_eq!(s.mass_times, Some(vec![0.0, 0.1]));
        assert_eq!(s.t_window, Some((0.0, 0.3)));
        assert_eq!(s.nx, 9);
        assert!(parse("t0 = 0.1")
            .unwrap()
            .defaults
            .verify_settings()
            .is_err());
        assert!(parse("tol = -1").unwrap().defaults.tol().is_err());
    }
}
