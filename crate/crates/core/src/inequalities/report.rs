use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::manifold::{ManifoldSpec, ModelManifold};

/// How `lhs` and `rhs` are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `rhs ≥ constant · lhs`.
    AtLeast,
    /// `rhs = constant · lhs`.
    Equal,
}

/// One verified instance of an inequality or identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub manifold: ManifoldSpec,
    pub profile: String,
    pub n: usize,
    pub theta: f64,
    pub relation: Relation,
    pub constant: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - constant · lhs`.
    pub deficit: f64,
    /// `deficit / max(|rhs|, |constant · lhs|)`.
    pub relative_deficit: f64,
    /// Absolute tolerance on `deficit`.
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

/// Tolerance policy for checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Multiplier on the propagated relative quadrature error.
    pub quad_factor: f64,
    /// Relative tolerance never goes below this.
    pub rel_floor: f64,
    /// Relative tolerance for identities and equality cases.
    pub identity_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quad_factor: 10.0,
            rel_floor: 1e-12,
            identity_rel: 1e-6,
        }
    }
}

pub(crate) struct Draft {
    pub name: &'static str,
    pub params: Vec<(&'static str, f64)>,
    pub relation: Relation,
    pub constant: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Propagated relative error of `constant · lhs` and `rhs`.
    pub rel_error: f64,
    /// Extra relative slack, e.g. from an estimated constant.
    pub extra_rel: f64,
    pub details: Vec<(&'static str, f64)>,
}

impl Draft {
    pub fn finish(self, m: &ModelManifold, theta: f64, profile: &str, tol: &Tolerances) -> InequalityReport {
        let deficit = self.rhs - self.constant * self.lhs;
        let scale = self.rhs.abs().max(self.constant.abs() * self.lhs.abs());
        let relative_deficit = if scale > 0.0 { deficit / scale } else { 0.0 };
        let mut rel = (tol.quad_factor * self.rel_error + self.extra_rel).max(tol.rel_floor);
        if self.relation == Relation::Equal {
            rel = rel.max(tol.identity_rel);
        }
        let tolerance = rel * scale;
        let pass = match self.relation {
            Relation::AtLeast => deficit >= -tolerance,
            Relation::Equal => deficit.abs() <= tolerance,
        };
        InequalityReport {
            name: self.name.to_string(),
            params: self.params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            manifold: m.spec(),
            profile: profile.to_string(),
            n: m.n(),
            theta,
            relation: self.relation,
            constant: self.constant,
            lhs: self.lhs,
            rhs: self.rhs,
            deficit,
            relative_deficit,
            tolerance,
            pass,
            details: self.details.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}
