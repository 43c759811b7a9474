//! Versioned tabular policy files.
//!
//! ```text
//! # seejam-policy v1
//! kind,nonstationary
//! stages,10
//! states,576
//! levels,4
//! stage,state,ps_idx,pd_idx,value
//! 0,0,0,0,0
//! ...
//! ```
//!
//! Stationary policies use `kind,stationary`, `stages,1` and stage 0 on every
//! row. Values are written with round-trip precision. States missing from the
//! file are left undecided in the loaded policy.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::mdp::Action;
use crate::planners::{NonstationaryPolicy, Policy, PolicyEntry, StationaryPolicy};

pub const MAGIC: &str = "# seejam-policy v1";
const COLUMNS: &str = "stage,state,ps_idx,pd_idx,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyHeader {
    pub stationary: bool,
    pub stages: usize,
    pub states: usize,
    /// Number of power levels M the action indices refer to.
    pub levels: usize,
}

pub fn write_policy<W: Write>(policy: &Policy, levels: usize, mut out: W) -> Result<()> {
    let (kind, stages) = match policy {
        Policy::Nonstationary(p) => ("nonstationary", p.stages()),
        Policy::Stationary(_) => ("stationary", 1),
    };
    let states = policy.num_states();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "kind,{kind}")?;
    writeln!(out, "stages,{stages}")?;
    writeln!(out, "states,{states}")?;
    writeln!(out, "levels,{levels}")?;
    writeln!(out, "{COLUMNS}")?;
    for stage in 0..stages {
        for s in 0..states {
            let entry = match policy {
                Policy::Nonstationary(p) => p.entry(stage, s),
                Policy::Stationary(p) => p.entry(s),
            };
            if let Some(e) = entry {
                writeln!(
                    out,
                    "{stage},{s},{},{},{}",
                    e.action.ps_idx, e.action.pd_idx, e.value
                )?;
            }
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(l) => {
                self.line += 1;
                Ok(Some(l?))
            }
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::PolicyFormat {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn expect_line(&mut self) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| self.err("unexpected end of file"))
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let l = self.expect_line()?;
        match l.split_once(',') {
            Some((k, v)) if k.trim() == key => Ok(v.trim().to_string()),
            _ => Err(self.err(format!("expected `{key},<value>`, got `{l}`"))),
        }
    }

    fn number(&mut self, key: &str) -> Result<usize> {
        let v = self.field(key)?;
        v.parse()
            .map_err(|_| self.err(format!("`{key}` must be a nonnegative integer, got `{v}`")))
    }
}

pub fn read_policy<R: BufRead>(input: R) -> Result<(PolicyHeader, Policy)> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    let magic = lines.expect_line()?;
    if magic.trim() != MAGIC {
        return Err(lines.err(format!("unsupported header `{magic}`")));
    }
    let stationary = match lines.field("kind")?.as_str() {
        "stationary" => true,
        "nonstationary" => false,
        other => return Err(lines.err(format!("unknown policy kind `{other}`"))),
    };
    let header = PolicyHeader {
        stationary,
        stages: lines.number("stages")?,
        states: lines.number("states")?,
        levels: lines.number("levels")?,
    };
    if stationary && header.stages != 1 {
        return Err(lines.err("stationary policies have exactly one stage"));
    }
    if header.levels == 0 {
        return Err(lines.err("`levels` must be positive"));
    }
    if lines.expect_line()?.trim() != COLUMNS {
        return Err(lines.err(format!("expected column header `{COLUMNS}`")));
    }

    let mut ns = NonstationaryPolicy::empty(header.stages, header.states);
    let mut st = StationaryPolicy::empty(header.states);
    while let Some(l) = lines.next_line()? {
        if l.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = l.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(lines.err(format!("expected 5 columns, got {}", cols.len())));
        }
        let int = |i: usize, name: &str| -> Result<usize> {
            cols[i]
                .parse()
                .map_err(|_| lines.err(format!("bad {name} `{}`", cols[i])))
        };
        let (stage, state, ps, pd) = (int(0, "stage")?, int(1, "state")?, int(2, "ps_idx")?, int(3, "pd_idx")?);
        let value: f64 = cols[4]
            .parse()
            .map_err(|_| lines.err(format!("bad value `{}`", cols[4])))?;
        if stage >= header.stages || state >= header.states {
            return Err(lines.err(format!("stage {stage} / state {state} out of range")));
        }
        if ps >= header.levels || pd >= header.levels {
            return Err(lines.err(format!("action ({ps}, {pd}) outside {} levels", header.levels)));
        }
        let entry = PolicyEntry {
            action: Action::new(ps, pd),
            value,
        };
        if stationary {
            st.set(state, entry);
        } else {
            ns.set(stage, state, entry);
        }
    }
    let policy = if stationary { st.into() } else { ns.into() };
    Ok((header, policy))
}
