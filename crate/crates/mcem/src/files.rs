//! Configuration-state files and path files.
//!
//! A state file lists one site per line as `x_1 … x_d state`, where `state`
//! is `*` or a bit string; unlisted sites are neutral. A path file starts
//! with `# key value` header lines followed by one `site_index h_bits dir`
//! line per step, `dir` being `+` (create) or `-` (remove).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use mcem_core::dynamics::FlipDirection;
use mcem_core::reachability::{LegalPath, Step};
use mcem_core::{Configuration, Domain};

use crate::config::{parse_state, parse_type, point};
use crate::error::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_state_file(domain: &Arc<Domain>, text: &str) -> Result<Configuration, CliError> {
    let d = domain.spec().dim();
    let mut cfg = Configuration::neutral(domain.clone());
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d + 1 {
            return Err(CliError::Config(format!("state file line {}: expected {} fields", no + 1, d + 1)));
        }
        let coords = fields[..d]
            .iter()
            .map(|f| {
                f.parse::<i64>().map_err(|_| CliError::Config(format!("state file line {}: bad coordinate", no + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let p = point(d, &coords)?;
        let s = parse_state(d, fields[d])?;
        cfg.set_at(&p, s).map_err(|e| CliError::Config(format!("state file line {}: {e}", no + 1)))?;
    }
    Ok(cfg)
}

pub fn load_state_file(domain: &Arc<Domain>, path: &Path) -> Result<Configuration, CliError> {
    parse_state_file(domain, &read(path)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathFile {
    pub header: BTreeMap<String, String>,
    pub steps: Vec<(usize, String, FlipDirection)>,
}

pub fn render_path_file(header: &[(&str, String)], path: &LegalPath) -> String {
    let mut s = format!("# mcem-path {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in header {
        writeln!(s, "# {k} {v}").expect("string write");
    }
    for st in &path.steps {
        writeln!(s, "{} {} {}", st.site, st.h, st.direction.symbol()).expect("string write");
    }
    s
}

pub fn parse_path_file(text: &str) -> Result<PathFile, CliError> {
    let mut header = BTreeMap::new();
    let mut steps = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.trim().splitn(2, char::is_whitespace);
            if let (Some(k), Some(v)) = (it.next(), it.next()) {
                header.insert(k.to_string(), v.trim().to_string());
            }
            continue;
        }
        let bad = || CliError::Config(format!("path file line {}: expected `site_index h_bits dir`", no + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad());
        }
        let site = fields[0].parse::<usize>().map_err(|_| bad())?;
        let dir = match fields[2] {
            "+" => FlipDirection::Create,
            "-" => FlipDirection::Remove,
            _ => return Err(bad()),
        };
        steps.push((site, fields[1].to_string(), dir));
    }
    Ok(PathFile { header, steps })
}

pub fn load_path_file(path: &Path) -> Result<PathFile, CliError> {
    parse_path_file(&read(path)?)
}

impl PathFile {
    pub fn get(&self, key: &str) -> Result<&str, CliError> {
        self.header
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Config(format!("path file header lacks `{key}`")))
    }

    /// Rebuilds the path from its start configuration; steps that do not
    /// apply (bad site or state) are reported as config errors.
    pub fn to_legal_path(&self, start: &Configuration) -> Result<LegalPath, CliError> {
        let d = start.spec().dim();
        let steps = self
            .steps
            .iter()
            .map(|(site, h, dir)| Ok(Step { site: *site, h: parse_type(d, h)?, direction: *dir }))
            .collect::<Result<Vec<_>, CliError>>()?;
        LegalPath::from_steps(start, steps).map_err(CliError::from)
    }
}

pub fn parse_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| CliError::Config(format!("bad integer list {s:?}"))))
        .collect()
}
