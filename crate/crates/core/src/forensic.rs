//! Ordinal plausibility assignments, implication-graph consistency, and
//! prior-odds x likelihood-ratio updating.
//!
//! Plausibility levels are a seven-point total order and are deliberately
//! never mapped to numbers; consistency checking is purely
//! order-theoretic. Odds, by contrast, are ordinary positive reals.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Seven ordered belief levels, from certainly false to verified true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plausibility {
    False,
    VeryImplausible,
    Implausible,
    FiftyFifty,
    Plausible,
    VeryPlausible,
    True,
}

impl Plausibility {
    pub const ALL: [Plausibility; 7] = [
        Plausibility::False,
        Plausibility::VeryImplausible,
        Plausibility::Implausible,
        Plausibility::FiftyFifty,
        Plausibility::Plausible,
        Plausibility::VeryPlausible,
        Plausibility::True,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposition {
    pub id: String,
    pub statement: String,
    pub level: Plausibility,
}

/// Directed implication edges over proposition ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImplicationGraph {
    pub edges: Vec<(String, String)>,
}

impl ImplicationGraph {
    /// Error if the strict implication edges contain a cycle.
    pub fn check_acyclic(&self) -> Result<()> {
        let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
        for (from, to) in &self.edges {
            adjacency.entry(from).or_default().push(to);
        }
        // iterative DFS with colors: 0 unseen, 1 on stack, 2 done
        let mut color: HashMap<&str, u8> = HashMap::new();
        for start in adjacency.keys().copied().collect::<Vec<_>>() {
            if color.get(start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color.insert(start, 1);
            while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
                let next = adjacency.get(node).and_then(|ns| ns.get(*idx)).copied();
                *idx += 1;
                match next {
                    Some(child) => match color.get(child).copied().unwrap_or(0) {
                        0 => {
                            color.insert(child, 1);
                            stack.push((child, 0));
                        }
                        1 => {
                            return Err(Error::invalid(format!(
                                "implication cycle through '{child}'"
                            )))
                        }
                        _ => {}
                    },
                    None => {
                        color.insert(node, 2);
                        stack.pop();
                    }
                }
            }
        }
        Ok(())
    }
}

/// A violated implication edge: the antecedent is held more plausible
/// than its consequent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub from: String,
    pub to: String,
    pub from_level: Plausibility,
    pub to_level: Plausibility,
}

/// Check each edge A -> B for ordinal consistency: level(A) <= level(B).
///
/// The endpoint rules (A true forces B true; B false forces A false) are
/// instances of the same order check, since True and False are the
/// extremes of the scale.
pub fn check_consistency(
    graph: &ImplicationGraph,
    propositions: &[Proposition],
) -> Result<Vec<Violation>> {
    let mut levels: HashMap<&str, Plausibility> = HashMap::new();
    for p in propositions {
        if levels.insert(&p.id, p.level).is_some() {
            return Err(Error::invalid(format!("duplicate proposition id '{}'", p.id)));
        }
    }
    let mut violations = Vec::new();
    for (from, to) in &graph.edges {
        let from_level = *levels
            .get(from.as_str())
            .ok_or_else(|| Error::invalid(format!("edge references unknown id '{from}'")))?;
        let to_level = *levels
            .get(to.as_str())
            .ok_or_else(|| Error::invalid(format!("edge references unknown id '{to}'")))?;
        if from_level > to_level {
            violations.push(Violation {
                from: from.clone(),
                to: to.clone(),
                from_level,
                to_level,
            });
        }
    }
    Ok(violations)
}

/// Prior odds with an accumulated chain of likelihood ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsState {
    pub prior_odds: f64,
    pub likelihood_ratios: Vec<(f64, String)>,
    pub posterior_odds: f64,
    pub threshold: f64,
}

impl OddsState {
    pub fn new(prior_odds: f64, threshold: f64) -> Result<Self> {
        if !(prior_odds > 0.0) {
            return Err(Error::invalid("prior odds must be positive"));
        }
        if !(threshold > 0.0) {
            return Err(Error::invalid("threshold must be positive"));
        }
        Ok(OddsState {
            prior_odds,
            likelihood_ratios: Vec::new(),
            posterior_odds: prior_odds,
            threshold,
        })
    }

    /// posterior = prior * product of ratios, within relative 1e-12.
    pub fn invariant_holds(&self) -> bool {
        let product: f64 = self.likelihood_ratios.iter().map(|(lr, _)| lr).product();
        let expected = self.prior_odds * product;
        (self.posterior_odds - expected).abs()
            <= 1e-12 * expected.abs().max(self.posterior_odds.abs())
    }
}

/// Append one likelihood ratio and multiply it into the posterior.
pub fn update_odds(state: &OddsState, lr: f64, label: &str) -> Result<OddsState> {
    if !(lr > 0.0) {
        return Err(Error::invalid(format!(
            "likelihood ratio must be positive, got {lr}"
        )));
    }
    let mut next = state.clone();
    next.likelihood_ratios.push((lr, label.to_string()));
    next.posterior_odds *= lr;
    Ok(next)
}

/// Threshold decision on the posterior odds; the boundary is inclusive.
pub fn decide_threshold(state: &OddsState) -> bool {
    state.posterior_odds >= state.threshold
}

/// Inert record of a promise and its plausibility assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromiseRecord {
    pub promiser: String,
    pub promisee: String,
    pub body: String,
    pub assessment: Plausibility,
}

impl PromiseRecord {
    pub fn validate(&self) -> Result<()> {
        if self.promiser.is_empty() || self.promisee.is_empty() {
            return Err(Error::invalid("promiser and promisee must be non-empty"));
        }
        Ok(())
    }
}

/// Odds chain as serialized in a case file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddsSpec {
    pub prior: f64,
    pub threshold: f64,
    pub factors: Vec<OddsFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddsFactor {
    pub lr: f64,
    pub label: String,
}

/// One self-contained case: propositions, their implication edges,
/// promise records, and an optional odds chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub propositions: Vec<Proposition>,
    #[serde(default)]
    pub implications: Vec<(String, String)>,
    #[serde(default)]
    pub promises: Vec<PromiseRecord>,
    #[serde(default)]
    pub odds: Option<OddsSpec>,
}

impl CaseFile {
    pub fn from_json(json: &str) -> Result<Self> {
        let case: CaseFile =
            serde_json::from_str(json).map_err(|e| Error::invalid(e.to_string()))?;
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.propositions {
            if !seen.insert(&p.id) {
                return Err(Error::invalid(format!("duplicate proposition id '{}'", p.id)));
            }
        }
        for pr in &self.promises {
            pr.validate()?;
        }
        self.graph().check_acyclic()?;
        if let Some(odds) = &self.odds {
            OddsState::new(odds.prior, odds.threshold)?;
            for f in &odds.factors {
                if !(f.lr > 0.0) {
                    return Err(Error::invalid("likelihood ratios must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> ImplicationGraph {
        ImplicationGraph {
            edges: self.implications.clone(),
        }
    }

    /// Fold the odds chain into a final state, if the case carries one.
    pub fn resolve_odds(&self) -> Result<Option<OddsState>> {
        let Some(spec) = &self.odds else {
            return Ok(None);
        };
        let mut state = OddsState::new(spec.prior, spec.threshold)?;
        for f in &spec.factors {
            state = update_odds(&state, f.lr, &f.label)?;
        }
        Ok(Some(state))
    }
}
