//! Run configuration: TOML text to a typed, unvalidated [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::inequalities::Tolerances;

/// A verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Ps,
    Lemmas,
    Hardy,
    Hpw,
    Hs,
    Ckn,
    Ibp,
    Bg,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Ps,
        Suite::Lemmas,
        Suite::Hardy,
        Suite::Hpw,
        Suite::Hs,
        Suite::Ckn,
        Suite::Ibp,
        Suite::Bg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Ps => "ps",
            Suite::Lemmas => "lemmas",
            Suite::Hardy => "hardy",
            Suite::Hpw => "hpw",
            Suite::Hs => "hs",
            Suite::Ckn => "ckn",
            Suite::Ibp => "ibp",
            Suite::Bg => "bg",
        }
    }

    /// Whether the suite runs once per corpus member.
    pub fn uses_corpus(self) -> bool {
        self != Suite::Bg
    }

    /// Parses a list of names; `all` selects every suite. The result is
    /// sorted and free of duplicates.
    pub fn parse_list<S: AsRef<str>>(names: &[S]) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for name in names {
            let name = name.as_ref().trim();
            if name == "all" {
                out.extend(Suite::ALL);
                continue;
            }
            match Suite::ALL.iter().find(|s| s.name() == name) {
                Some(s) => out.push(*s),
                None => {
                    return Err(Error::Config(format!(
                        "unknown suite '{name}'; expected one of ps, lemmas, hardy, hpw, hs, ckn, ibp, bg, all"
                    )))
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar or a list of them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// A catalog manifold expanded over dimensions.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldEntry {
    /// `euclidean`, `cone(c,delta)` or `exact_cone(c)`.
    pub catalog: String,
    pub n: OneOrMany<usize>,
    pub r_max: Option<f64>,
}

/// A profile family with a grid of values per parameter; the corpus is
/// the Cartesian product of the grids.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FamilyEntry {
    pub family: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, OneOrMany<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsGrid {
    pub p: Vec<f64>,
}

impl Default for PsGrid {
    fn default() -> Self {
        PsGrid { p: vec![1.5, 2.0, 3.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaGrid {
    pub p: Vec<f64>,
    /// Weights `r^e`; `0` is the constant weight.
    pub weight_exponents: Vec<f64>,
}

impl Default for LemmaGrid {
    fn default() -> Self {
        LemmaGrid {
            p: vec![1.5, 2.0, 3.0],
            weight_exponents: vec![-1.0, -2.0, 2.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardyGrid {
    pub p: Vec<f64>,
}

impl Default for HardyGrid {
    fn default() -> Self {
        HardyGrid { p: vec![1.5, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HsGrid {
    pub p: Vec<f64>,
    /// `s = fraction · p`.
    pub s_fractions: Vec<f64>,
}

impl Default for HsGrid {
    fn default() -> Self {
        HsGrid {
            p: vec![2.0],
            s_fractions: vec![0.0, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CknGrid {
    /// `a = fraction · a_max(n, θ)`, so the grid adapts to each manifold.
    pub a_fractions: Vec<f64>,
    /// Absolute values of `a`; replaces `a_fractions` when given.
    pub a: Option<Vec<f64>>,
    /// `b = a + offset`.
    pub b_offsets: Vec<f64>,
}

impl Default for CknGrid {
    fn default() -> Self {
        CknGrid {
            a_fractions: vec![0.0, 0.3, 0.6],
            a: None,
            b_offsets: vec![0.0, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IbpGrid {
    pub a: Vec<f64>,
}

impl Default for IbpGrid {
    fn default() -> Self {
        IbpGrid { a: vec![0.0, 0.2, 0.4] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BgGrid {
    /// Geometric sample radii from `r_min` to the manifold's `r_max`.
    pub points: usize,
    pub r_min: f64,
}

impl Default for BgGrid {
    fn default() -> Self {
        BgGrid { points: 64, r_min: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    pub ps: PsGrid,
    pub lemmas: LemmaGrid,
    pub hardy: HardyGrid,
    pub hs: HsGrid,
    pub ckn: CknGrid,
    pub ibp: IbpGrid,
    pub bg: BgGrid,
}

/// Overrides for the constant search.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_evals: usize,
    pub free_profile: bool,
    pub free_nodes: usize,
    pub free_evals: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let s = crate::constants::SearchSettings::default();
        SearchConfig {
            restarts: s.restarts,
            max_evals: s.max_evals,
            free_profile: s.free_profile,
            free_nodes: s.free_nodes,
            free_evals: s.free_evals,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving `reports.jsonl`, `summary.csv` and
    /// `summary.json`; relative paths resolve against the working directory.
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            formats: vec![Format::Jsonl, Format::Csv],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    suites: Vec<String>,
    #[serde(default, rename = "manifold")]
    manifolds: Vec<ManifoldEntry>,
    #[serde(default)]
    corpus: Vec<FamilyEntry>,
    #[serde(default)]
    params: SuiteParams,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    search: SearchConfig,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub manifolds: Vec<ManifoldEntry>,
    pub corpus: Vec<FamilyEntry>,
    pub params: SuiteParams,
    pub tolerances: Tolerances,
    pub search: SearchConfig,
    pub output: OutputConfig,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl RunConfig {
    /// Parses the TOML text. Structural problems are reported with their
    /// position; semantic checks happen when the run is planned.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        Ok(RunConfig {
            seed: raw.seed,
            suites: Suite::parse_list(&raw.suites)?,
            manifolds: raw.manifolds,
            corpus: raw.corpus,
            params: raw.params,
            tolerances: raw.tolerances,
            search: raw.search,
            output: raw.output,
        })
    }

    pub fn search_settings(&self) -> crate::constants::SearchSettings {
        crate::constants::SearchSettings {
            restarts: self.search.restarts,
            max_evals: self.search.max_evals,
            seed: self.seed,
            free_profile: self.search.free_profile,
            free_nodes: self.search.free_nodes,
            free_evals: self.search.free_evals,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::parse(
            r#"
suites = ["hardy"]
[[manifold]]
catalog = "euclidean"
n = 3
[[corpus]]
family = "gaussian"
alpha = 1.0
[params.hardy]
p = [2.0]
"#,
        )
        .unwrap();
        assert_eq!(cfg.suites, vec![Suite::Hardy]);
        assert_eq!(cfg.manifolds[0].n.to_vec(), vec![3]);
        assert_eq!(cfg.corpus[0].params["alpha"].to_vec(), vec![1.0]);
        assert_eq!(cfg.params.hardy.p, vec![2.0]);
        assert_eq!(cfg.params.ps, PsGrid::default());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = RunConfig::parse("suites = [\"ps\"]\n[[manifold]]\ncatalog = \n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let err = RunConfig::parse("suites = [\"ps\"]\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn suite_lists() {
        assert_eq!(Suite::parse_list(&["all"]).unwrap().len(), 8);
        assert_eq!(Suite::parse_list(&["hs", "ps", "hs"]).unwrap(), vec![Suite::Ps, Suite::Hs]);
        assert!(Suite::parse_list(&["pz"]).is_err());
    }
}
