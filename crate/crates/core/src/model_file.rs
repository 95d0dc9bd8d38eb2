//! JSON model files.
//!
//! ```json
//! {
//!   "variables": [{"name": "S", "domain": ["0", "1"]}, {"name": "T", "domain": ["0", "1"]}],
//!   "edges": [["S", "T"]],
//!   "cpts": {
//!     "S": [{"parents": {}, "probs": [0.5, 0.5]}],
//!     "T": [{"parents": {"S": "0"}, "probs": [0.8, 0.2]}, {"parents": {"S": "1"}, "probs": [0.2, 0.8]}]
//!   },
//!   "interventions": [{}, {"S": "0"}],
//!   "omega": [{"base": 0, "abs": 0}, {"base": 1, "abs": 1}],
//!   "alignment": {"map": {"S'": ["S"]}, "rule": "designated"}
//! }
//! ```
//!
//! `omega` and `alignment` only appear in a base model and refer to the
//! abstracted model loaded next to it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::HammingAlignment;
use crate::datasets::Scenario;
use crate::error::CotaError;
use crate::poset::{InterventionPoset, OmegaMap};
use crate::scm::{CausalDag, Cpt, DiscreteScm, Intervention, VariableSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptRow {
    #[serde(default)]
    pub parents: BTreeMap<String, String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaEntry {
    pub base: usize,
    pub abs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub cpts: BTreeMap<String, Vec<CptRow>>,
    #[serde(default)]
    pub interventions: Vec<Intervention>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega: Vec<OmegaEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<HammingAlignment>,
}

/// A load failure with the file and, where it can be located, the line.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFileError {
    pub path: String,
    pub line: Option<usize>,
    pub error: CotaError,
}

impl fmt::Display for ModelFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.path, l, self.error),
            None => write!(f, "{}: {}", self.path, self.error),
        }
    }
}

impl std::error::Error for ModelFileError {}

/// Finds approximate source lines for semantic errors by walking quoted
/// tokens in order.
struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn offset(&self, needles: &[&str]) -> Option<usize> {
        let mut pos = 0;
        for n in needles {
            pos += self.text[pos..].find(n)?;
        }
        Some(pos)
    }

    fn find(&self, needles: &[&str]) -> Option<usize> {
        self.offset(needles).map(|p| self.line_of(p))
    }

    /// Line of the `i`-th object in the array under `key`.
    fn nth_object(&self, key: &str, i: usize) -> Option<usize> {
        let start = self.offset(&[&format!("\"{key}\"")])?;
        let open = start + self.text[start..].find('[')?;
        let mut depth = 0usize;
        let mut seen = 0usize;
        for (k, ch) in self.text[open..].char_indices() {
            match ch {
                '{' => {
                    if depth == 1 {
                        if seen == i {
                            return Some(self.line_of(open + k));
                        }
                        seen += 1;
                    }
                    depth += 1;
                }
                '[' => depth += 1,
                '}' | ']' => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        return None;
                    }
                }
                _ => {}
            }
        }
        None
    }

    fn quoted(s: &str) -> String {
        format!("\"{s}\"")
    }

    /// Best guess at where `err` comes from.
    fn locate(&self, err: &CotaError) -> Option<usize> {
        use CotaError::*;
        match err {
            CycleDetected(_) => self.find(&["\"edges\""]),
            UnknownParent { parent, .. } => self.find(&["\"edges\"", &Self::quoted(parent)]),
            UnknownVariable(v) => self
                .find(&["\"edges\"", &Self::quoted(v)])
                .or_else(|| self.find(&["\"interventions\"", &Self::quoted(v)]))
                .or_else(|| self.find(&[&Self::quoted(v)])),
            ValueOutOfDomain { value, .. } => self.find(&["\"interventions\"", &Self::quoted(value)]),
            NotTotal(i) => self.find(&["\"omega\""]).or_else(|| self.nth_object("interventions", *i)),
            NotSurjective(_) => self.find(&["\"omega\""]),
            NotOrderPreserving(i, _) => self.find(&["\"omega\"", &format!("\"base\": {i}")]).or_else(|| self.find(&["\"omega\""])),
            NotComparable(i, _) => self.nth_object("interventions", *i),
            InvalidAlignment(_) => self.find(&["\"alignment\""]),
            InvalidModel(msg) => {
                let name = msg.split('`').nth(1)?;
                if msg.contains("CPT") {
                    self.find(&["\"cpts\"", &Self::quoted(name)]).or_else(|| self.find(&["\"cpts\""]))
                } else {
                    self.find(&["\"variables\"", &Self::quoted(name)])
                }
            }
            _ => None,
        }
    }
}

impl ModelFile {
    /// Parses and validates a model document held in memory.
    pub fn parse(text: &str, path: &str) -> std::result::Result<(Self, DiscreteScm, InterventionPoset), ModelFileError> {
        let fail = |line, error| ModelFileError {
            path: path.to_string(),
            line,
            error,
        };
        if text.trim().is_empty() {
            return Err(fail(None, CotaError::EmptyFile(path.to_string())));
        }
        let mf: ModelFile = serde_json::from_str(text).map_err(|e| fail(Some(e.line()), CotaError::InvalidModel(e.to_string())))?;
        let loc = Locator { text };
        let locate = |e: CotaError| {
            let line = loc.locate(&e);
            fail(line, e)
        };
        let scm = mf.to_scm().map_err(locate)?;
        let poset = InterventionPoset::new(mf.interventions.clone()).map_err(locate)?;
        for (i, iota) in poset.interventions().iter().enumerate() {
            iota.resolve(scm.dag()).map_err(|e| {
                let line = loc.nth_object("interventions", i).or_else(|| loc.locate(&e));
                fail(line, e)
            })?;
        }
        Ok((mf, scm, poset))
    }

    pub fn read(path: &Path) -> std::result::Result<(Self, DiscreteScm, InterventionPoset), ModelFileError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelFileError {
            path: path.display().to_string(),
            line: None,
            error: e.into(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn to_scm(&self) -> crate::Result<DiscreteScm> {
        let mut parents: Vec<Vec<String>> = vec![Vec::new(); self.variables.len()];
        for (p, c) in &self.edges {
            let ci = self
                .variables
                .iter()
                .position(|v| &v.name == c)
                .ok_or_else(|| CotaError::UnknownVariable(c.clone()))?;
            parents[ci].push(p.clone());
        }
        let dag = CausalDag::new(self.variables.clone(), parents)?;
        for name in self.cpts.keys() {
            if dag.var_index(name).is_none() {
                return Err(CotaError::UnknownVariable(name.clone()));
            }
        }
        let mut cpts = Vec::with_capacity(dag.num_vars());
        for (v, spec) in dag.variables().iter().enumerate() {
            let rows = self
                .cpts
                .get(&spec.name)
                .ok_or_else(|| CotaError::InvalidModel(format!("missing CPT for `{}`", spec.name)))?;
            let pa = dag.parents(v);
            let n_rows: usize = pa.iter().map(|&p| dag.cardinality(p)).product();
            let mut table: Vec<Option<Vec<f64>>> = vec![None; n_rows];
            for row in rows {
                if row.parents.len() != pa.len() {
                    return Err(CotaError::InvalidModel(format!(
                        "CPT row of `{}` sets {} parents, expected {}",
                        spec.name,
                        row.parents.len(),
                        pa.len()
                    )));
                }
                let mut r = 0;
                for &p in pa {
                    let pname = &dag.variables()[p].name;
                    let label = row.parents.get(pname).ok_or_else(|| {
                        CotaError::InvalidModel(format!("CPT row of `{}` does not set parent {pname}", spec.name))
                    })?;
                    let k = dag.variables()[p].domain.iter().position(|l| l == label).ok_or_else(|| {
                        CotaError::ValueOutOfDomain {
                            variable: pname.clone(),
                            value: label.clone(),
                        }
                    })?;
                    r = r * dag.cardinality(p) + k;
                }
                if table[r].replace(row.probs.clone()).is_some() {
                    return Err(CotaError::InvalidModel(format!("CPT of `{}` repeats a parent configuration", spec.name)));
                }
            }
            let table: Option<Vec<Vec<f64>>> = table.into_iter().collect();
            let table =
                table.ok_or_else(|| CotaError::InvalidModel(format!("CPT of `{}` misses a parent configuration", spec.name)))?;
            cpts.push(Cpt::new(table));
        }
        DiscreteScm::new(dag, cpts)
    }

    /// Serialisable form of a model, optionally carrying ω and the alignment.
    pub fn from_scm(
        scm: &DiscreteScm,
        poset: &InterventionPoset,
        omega: Option<&OmegaMap>,
        alignment: Option<&HammingAlignment>,
    ) -> Self {
        let dag = scm.dag();
        let mut cpts = BTreeMap::new();
        for (v, spec) in dag.variables().iter().enumerate() {
            let pa = dag.parents(v);
            let rows = scm
                .cpt(v)
                .rows()
                .iter()
                .enumerate()
                .map(|(r, probs)| {
                    let mut rem = r;
                    let mut parents = BTreeMap::new();
                    for &p in pa.iter().rev() {
                        let card = dag.cardinality(p);
                        parents.insert(dag.variables()[p].name.clone(), dag.variables()[p].domain[rem % card].clone());
                        rem /= card;
                    }
                    CptRow {
                        parents,
                        probs: probs.clone(),
                    }
                })
                .collect();
            cpts.insert(spec.name.clone(), rows);
        }
        Self {
            variables: dag.variables().to_vec(),
            edges: dag.edges(),
            cpts,
            interventions: poset.interventions().to_vec(),
            omega: omega
                .map(|o| (0..o.len()).filter_map(|b| o.try_image(b).map(|a| OmegaEntry { base: b, abs: a })).collect())
                .unwrap_or_default(),
            alignment: alignment.cloned(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    /// ω as a possibly partial map over `n_base` interventions.
    pub fn omega_map(&self, n_base: usize) -> OmegaMap {
        let mut m = vec![None; n_base];
        for e in &self.omega {
            if e.base < n_base {
                m[e.base] = Some(e.abs);
            }
        }
        OmegaMap::partial(m)
    }
}

/// Loads a scenario from a base model (carrying ω) and an abstracted model.
/// Without an explicit alignment, abstracted variables align to base
/// variables of the same name, ignoring a trailing `'`.
pub fn load_scenario(base_path: &Path, abs_path: &Path) -> std::result::Result<Scenario, ModelFileError> {
    let (bf, base, poset) = ModelFile::read(base_path)?;
    let (_, abs, abs_poset) = ModelFile::read(abs_path)?;
    let base_text = std::fs::read_to_string(base_path).unwrap_or_default();
    let loc = Locator { text: &base_text };
    let fail = |e: CotaError| ModelFileError {
        path: base_path.display().to_string(),
        line: loc.locate(&e),
        error: e,
    };
    if let Some(e) = bf.omega.iter().find(|e| e.base >= poset.len() || e.abs >= abs_poset.len()) {
        return Err(fail(CotaError::InvalidModel(format!(
            "omega entry `{} -> {}` is out of range",
            e.base, e.abs
        ))));
    }
    let omega = bf.omega_map(poset.len());
    let alignment = match &bf.alignment {
        Some(a) => a.clone(),
        None => {
            let mut map = BTreeMap::new();
            for v in abs.dag().variables() {
                let stem = v.name.trim_end_matches('\'');
                if base.dag().var_index(stem).is_some() {
                    map.insert(v.name.clone(), vec![stem.to_string()]);
                } else {
                    return Err(fail(CotaError::InvalidAlignment(format!(
                        "no alignment given and no base variable named `{stem}`"
                    ))));
                }
            }
            HammingAlignment { map, rule: Default::default() }
        }
    };
    let name = base_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Scenario::new(name, base, abs, poset, abs_poset, omega, alignment).map_err(fail)
}

/// Writes `base.json` and `abs.json` for a scenario.
pub fn export_scenario(s: &Scenario, dir: &Path) -> crate::Result<()> {
    std::fs::create_dir_all(dir)?;
    let base = ModelFile::from_scm(&s.base, &s.poset, Some(&s.omega), Some(&s.alignment));
    let abs = ModelFile::from_scm(&s.abs, &s.abs_poset, None, None);
    std::fs::write(dir.join("base.json"), base.to_json())?;
    std::fs::write(dir.join("abs.json"), abs.to_json())?;
    Ok(())
}
