//! Scenario files: JSON schema, parsing and reference checks.

use std::collections::BTreeSet;
use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: System,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baths: Vec<Bath>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protocol: Vec<Step>,
    pub generators: GeneratorGrid,
    pub analysis: Analysis,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct System {
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Populations(Vec<f64>),
    /// Gibbs state of the system levels at a bath's temperature.
    Gibbs { bath: usize },
    /// Populations drawn uniformly from the simplex with the run's seed.
    Random,
    DensityMatrix {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        im: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Bath {
    pub id: usize,
    pub temperature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Isochore {
        bath: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        manifold: Option<Vec<usize>>,
        #[serde(default)]
        map: MapSpec,
    },
    Adiabat {
        levels: Vec<f64>,
    },
    Isotherm {
        bath: usize,
        levels: Vec<f64>,
        steps: usize,
        /// Temperature at the end of the isotherm; defaults to the bath's.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end_temperature: Option<f64>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    #[default]
    Full,
    Uniform {
        y: f64,
    },
    /// Column-stochastic; `matrix[i][j]` is the probability of j → i.
    Stochastic {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Alpha,
    Tsallis,
    Renyi,
    Shannon,
}

impl Family {
    pub fn column(self) -> &'static str {
        match self {
            Family::Alpha => "alpha",
            Family::Tsallis => "alpha_tilde",
            Family::Renyi => "alpha_bar",
            Family::Shannon => "generator",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GeneratorGrid {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub log: bool,
}

impl GeneratorGrid {
    /// Explicit values followed by the range points.
    pub fn points(&self) -> Vec<f64> {
        let mut out = self.values.clone();
        if let Some(r) = &self.range {
            out.extend(match (r.log, r.n) {
                (_, 0) => Vec::new(),
                (_, 1) => vec![r.lo],
                (true, n) => gci_core::protocols::log_grid(r.lo, r.hi, n),
                (false, n) => (0..n).map(|k| r.lo + (r.hi - r.lo) * k as f64 / (n - 1) as f64).collect(),
            });
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// Runs the protocol and tabulates heat, work and the Clausius sum per generator.
    Ledger,
    /// Two-level Otto machine; the system levels are the cold-stroke levels.
    Otto { hot_levels: Vec<f64>, cold_bath: usize, hot_bath: usize },
    /// Tsallis high-temperature bound on Q₁ for a single isochore.
    HighTBound {
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// Coherence and maximal coherence heat of the initial density matrix.
    Coherence { bath: usize },
}

fn default_margin() -> f64 {
    gci_core::accounting::DEFAULT_HIGH_T_MARGIN
}

impl Analysis {
    /// Every column the analysis can emit, in default order.
    pub fn columns(&self, family: Family) -> Vec<String> {
        let p = family.column().to_string();
        let rest: &[&str] = match self {
            Analysis::Ledger if family == Family::Alpha => {
                &["heat", "work", "delta_h", "delta_s", "weighted_heat", "clausius_lhs"]
            }
            Analysis::Ledger => &["delta_s", "weighted_heat", "clausius_lhs"],
            Analysis::Otto { .. } => &["eta_bound", "eta_actual", "carnot"],
            Analysis::HighTBound { .. } => &["q_bound", "q_actual", "condition_ok"],
            Analysis::Coherence { .. } if family == Family::Alpha => &["entropy", "coherence", "max_heat"],
            Analysis::Coherence { .. } => &["entropy", "coherence"],
        };
        std::iter::once(p).chain(rest.iter().map(|s| s.to_string())).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

pub fn schema() -> schemars::schema::RootSchema {
    schemars::schema_for!(Scenario)
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        match path.as_str() {
            "?" | "." => CliError::Schema(e.inner().to_string()),
            _ => CliError::Schema(format!("{path}: {}", e.inner())),
        }
    })?;
    scenario.check()?;
    Ok(scenario)
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn bad(path: impl Into<String>, msg: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("{}: {msg}", path.into()))
}

impl Scenario {
    fn bath(&self, id: usize, at: &str) -> Result<&Bath, CliError> {
        self.baths.iter().find(|b| b.id == id).ok_or_else(|| bad(at, format!("unknown bath {id}")))
    }

    fn check_levels(&self, levels: &[f64], at: &str) -> Result<(), CliError> {
        let n = self.system.levels.len();
        if levels.len() != n {
            return Err(bad(at, format!("expected {n} levels, found {}", levels.len())));
        }
        if levels.iter().any(|e| !e.is_finite()) {
            return Err(bad(at, "levels must be finite"));
        }
        Ok(())
    }

    /// Reference and shape checks beyond what the JSON types enforce.
    pub fn check(&self) -> Result<(), CliError> {
        let n = self.system.levels.len();
        if n == 0 {
            return Err(bad("system.levels", "at least one level is required"));
        }
        self.check_levels(&self.system.levels, "system.levels")?;
        let mut ids = BTreeSet::new();
        for (k, b) in self.baths.iter().enumerate() {
            if !ids.insert(b.id) {
                return Err(bad(format!("baths[{k}].id"), format!("duplicate bath {}", b.id)));
            }
            if !(b.temperature > 0.0 && b.temperature.is_finite()) {
                return Err(bad(format!("baths[{k}].temperature"), "must be positive and finite"));
            }
        }
        match &self.initial {
            Some(Initial::Populations(p)) if p.len() != n => {
                return Err(bad("initial.populations", format!("expected {n} entries, found {}", p.len())));
            }
            Some(Initial::Gibbs { bath }) => {
                self.bath(*bath, "initial.gibbs.bath")?;
            }
            Some(Initial::Populations(p)) => {
                gci_core::thermal::validate_distribution(p.clone()).map_err(|e| bad("initial.populations", e))?;
            }
            Some(Initial::DensityMatrix { re, im }) => {
                if re.len() != n || re.iter().any(|r| r.len() != n) {
                    return Err(bad("initial.density_matrix.re", format!("must be {n}×{n}")));
                }
                if !im.is_empty() && (im.len() != n || im.iter().any(|r| r.len() != n)) {
                    return Err(bad("initial.density_matrix.im", format!("must be empty or {n}×{n}")));
                }
                crate::analysis::density_matrix(re, im).map_err(|e| bad("initial.density_matrix", e))?;
            }
            _ => {}
        }
        for (k, step) in self.protocol.iter().enumerate() {
            let at = format!("protocol[{k}]");
            match step {
                Step::Isochore { bath, manifold, map } => {
                    self.bath(*bath, &format!("{at}.isochore.bath"))?;
                    if let Some(m) = manifold {
                        if let Some(j) = m.iter().find(|j| **j >= n) {
                            return Err(bad(format!("{at}.isochore.manifold"), format!("level {j} out of range")));
                        }
                    }
                    if let MapSpec::Stochastic { matrix } = map {
                        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                            return Err(bad(format!("{at}.isochore.map.stochastic.matrix"), format!("must be {n}×{n}")));
                        }
                    }
                }
                Step::Adiabat { levels } => self.check_levels(levels, &format!("{at}.adiabat.levels"))?,
                Step::Isotherm { bath, levels, end_temperature, .. } => {
                    self.bath(*bath, &format!("{at}.isotherm.bath"))?;
                    self.check_levels(levels, &format!("{at}.isotherm.levels"))?;
                    if let Some(t) = end_temperature {
                        if !(*t > 0.0 && t.is_finite()) {
                            return Err(bad(format!("{at}.isotherm.end_temperature"), "must be positive and finite"));
                        }
                    }
                }
            }
        }
        let family = self.generators.family;
        if family != Family::Shannon && self.generators.points().is_empty() {
            return Err(bad("generators", "empty generator grid"));
        }
        if family == Family::Shannon && !self.generators.points().is_empty() {
            return Err(bad("generators", "shannon takes no parameter values"));
        }
        match &self.analysis {
            Analysis::Ledger => {
                if self.initial.is_none() {
                    return Err(bad("initial", "required by the ledger analysis"));
                }
                if self.protocol.is_empty() {
                    return Err(bad("protocol", "required by the ledger analysis"));
                }
            }
            Analysis::Otto { hot_levels, cold_bath, hot_bath } => {
                if family != Family::Alpha {
                    return Err(bad("generators.family", "otto needs the alpha family"));
                }
                if !self.protocol.is_empty() {
                    return Err(bad("protocol", "the otto analysis builds its own strokes"));
                }
                self.check_levels(hot_levels, "analysis.hot_levels")?;
                self.bath(*cold_bath, "analysis.cold_bath")?;
                self.bath(*hot_bath, "analysis.hot_bath")?;
            }
            Analysis::HighTBound { margin } => {
                if family != Family::Tsallis {
                    return Err(bad("generators.family", "high_t_bound needs the tsallis family"));
                }
                if !matches!(self.protocol.as_slice(), [Step::Isochore { .. }]) {
                    return Err(bad("protocol", "high_t_bound needs exactly one isochore"));
                }
                if !matches!(self.initial, Some(Initial::Populations(_) | Initial::Gibbs { .. } | Initial::Random)) {
                    return Err(bad("initial", "high_t_bound needs initial populations"));
                }
                if !(*margin >= 0.0) {
                    return Err(bad("analysis.margin", "must be non-negative"));
                }
            }
            Analysis::Coherence { bath } => {
                self.bath(*bath, "analysis.bath")?;
                if self.initial.is_none() {
                    return Err(bad("initial", "required by the coherence analysis"));
                }
            }
        }
        let known = self.analysis.columns(family);
        for (k, c) in self.output.columns.iter().enumerate() {
            if !known.contains(c) {
                return Err(bad(format!("output.columns[{k}]"), format!("unknown column {c:?}; available: {}", known.join(", "))));
            }
        }
        Ok(())
    }

    /// Selected output columns.
    pub fn columns(&self) -> Vec<String> {
        if self.output.columns.is_empty() {
            self.analysis.columns(self.generators.family)
        } else {
            self.output.columns.clone()
        }
    }

    pub fn temperature(&self, bath: usize) -> f64 {
        self.baths.iter().find(|b| b.id == bath).map(|b| b.temperature).expect("checked bath reference")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn examples() -> Vec<std::path::PathBuf> {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
        let mut out: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "schema.json")
            .collect();
        out.sort();
        out
    }

    #[test]
    fn example_scenarios_round_trip() {
        let paths = examples();
        assert!(paths.len() >= 2);
        for p in paths {
            let sc = load(&p).unwrap();
            let again = parse(&serde_json::to_string_pretty(&sc).unwrap()).unwrap();
            assert_eq!(sc, again, "{}", p.display());
        }
    }

    #[test]
    fn grids_join_values_and_ranges() {
        let g = GeneratorGrid { family: Family::Alpha, values: vec![0.3], range: Some(Range { lo: 1.0, hi: 2.0, n: 3, log: false }) };
        assert_eq!(g.points(), [0.3, 1.0, 1.5, 2.0]);
        let g = GeneratorGrid { family: Family::Alpha, values: vec![], range: Some(Range { lo: 0.01, hi: 1.0, n: 3, log: true }) };
        let p = g.points();
        assert!((p[1] - 0.1).abs() < 1e-15 && p[0] == 0.01 && p[2] == 1.0);
    }

    #[test]
    fn shannon_takes_no_values() {
        let text = r#"{"name": "s", "system": {"levels": [0, 1]}, "initial": {"populations": [0.5, 0.5]},
            "baths": [{"id": 0, "temperature": 1}], "protocol": [{"isochore": {"bath": 0}}],
            "generators": {"family": "shannon"}, "analysis": {"type": "ledger"}}"#;
        let sc = parse(text).unwrap();
        assert_eq!(sc.columns(), ["generator", "delta_s", "weighted_heat", "clausius_lhs"]);
        let bad = text.replace(r#""family": "shannon""#, r#""family": "shannon", "values": [1]"#);
        assert!(matches!(parse(&bad), Err(CliError::Schema(_))));
    }
}
