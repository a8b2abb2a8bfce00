//! Reaction networks: the text format, stoichiometry, mass-action
//! propensities and the (inverse) network structure.
//!
//! One reaction per line:
//!
//! ```text
//! # comment
//! species: A B C
//! 2*A + B -> C ; 0.5
//! C -> 0 ; 1/3
//! ```
//!
//! `0` denotes the empty complex. Without a `species:` header species are
//! indexed in order of first appearance.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::IntMatrix;
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: species `{name}` listed twice")]
    DuplicateSpecies { line: usize, name: String },
    #[error("line {line}: rate constant {rate} is not positive")]
    NonPositiveRate { line: usize, rate: String },
    #[error("index {index} out of range (size {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid network: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    /// Molecules consumed per species.
    pub reactants: Vec<u32>,
    /// Molecules produced per species.
    pub products: Vec<u32>,
    pub rate: Rational,
}

impl Reaction {
    pub fn order(&self) -> u32 {
        self.reactants.iter().sum()
    }

    /// `products - reactants`
    pub fn change(&self) -> Vec<i64> {
        self.products.iter().zip(&self.reactants).map(|(&p, &r)| i64::from(p) - i64::from(r)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.reactants == self.products
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>) -> Result<Self, NetworkError> {
        if species.is_empty() {
            return Err(NetworkError::Invalid("no species".into()));
        }
        if reactions.is_empty() {
            return Err(NetworkError::Invalid("no reactions".into()));
        }
        let mut seen = HashMap::new();
        for name in &species {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(NetworkError::DuplicateSpecies { line: 0, name: name.clone() });
            }
        }
        for (k, r) in reactions.iter().enumerate() {
            if r.reactants.len() != species.len() || r.products.len() != species.len() {
                return Err(NetworkError::Invalid(format!("reaction {} has wrong arity", k + 1)));
            }
            if !r.rate.is_positive() {
                return Err(NetworkError::NonPositiveRate { line: 0, rate: format_rational(&r.rate) });
            }
        }
        Ok(Self { species, reactions })
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Number of species `d`.
    pub fn dim(&self) -> usize {
        self.species.len()
    }

    /// Number of reactions `K`.
    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    /// Zero-based indices of reactions that never change the state.
    pub fn identity_reactions(&self) -> Vec<usize> {
        (0..self.reactions.len()).filter(|&k| self.reactions[k].is_identity()).collect()
    }

    /// `d x K`, column k is `products_k - reactants_k`.
    pub fn stoichiometry_matrix(&self) -> IntMatrix {
        let cols: Vec<Vec<i64>> = self.reactions.iter().map(Reaction::change).collect();
        IntMatrix::from_columns(self.dim(), &cols)
    }

    /// Mass-action propensity of reaction `k` (zero-based) at state `x`.
    pub fn propensity(&self, k: usize, x: &[u64]) -> Result<Rational, NetworkError> {
        let r = self.reaction(k)?;
        self.check_state(x)?;
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&xi, &nu) in x.iter().zip(&r.reactants) {
            let nu = u64::from(nu);
            if xi < nu {
                return Ok(Rational::zero());
            }
            for j in 0..nu {
                num *= xi - j;
                den *= j + 1;
            }
        }
        Ok(&r.rate * Rational::new(num, den))
    }

    /// Floating-point propensity for simulation. Same formula as
    /// [`propensity`](Self::propensity), no bounds checks.
    pub fn propensity_f64(&self, k: usize, x: &[u64], rate: f64) -> f64 {
        let r = &self.reactions[k];
        let mut a = rate;
        for (&xi, &nu) in x.iter().zip(&r.reactants) {
            let nu = u64::from(nu);
            if xi < nu {
                return 0.0;
            }
            for j in 0..nu {
                a *= (xi - j) as f64 / (j + 1) as f64;
            }
        }
        a
    }

    fn reaction(&self, k: usize) -> Result<&Reaction, NetworkError> {
        self.reactions.get(k).ok_or(NetworkError::IndexOutOfRange { index: k, len: self.reactions.len() })
    }

    fn check_state(&self, x: &[u64]) -> Result<(), NetworkError> {
        if x.len() != self.dim() {
            return Err(NetworkError::IndexOutOfRange { index: x.len(), len: self.dim() });
        }
        Ok(())
    }

    pub fn structure(&self) -> NetworkStructure {
        NetworkStructure {
            pairs: self.reactions.iter().map(|r| (r.reactants.clone(), r.products.clone())).collect(),
        }
    }

    /// Reindexes species so that new species `i` is old species `order[i]`.
    pub fn permute_species(&self, order: &[usize]) -> ReactionNetwork {
        assert_eq!(order.len(), self.dim(), "permutation length");
        let pick = |v: &[u32]| order.iter().map(|&o| v[o]).collect::<Vec<_>>();
        ReactionNetwork {
            species: order.iter().map(|&o| self.species[o].clone()).collect(),
            reactions: self
                .reactions
                .iter()
                .map(|r| Reaction { reactants: pick(&r.reactants), products: pick(&r.products), rate: r.rate.clone() })
                .collect(),
        }
    }

    /// Renders one side of reaction `k` in the text grammar.
    fn side(&self, counts: &[u32]) -> String {
        let terms: Vec<String> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| if c == 1 { self.species[i].clone() } else { format!("{c}*{}", self.species[i]) })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }

    pub fn describe_reaction(&self, k: usize) -> String {
        let r = &self.reactions[k];
        format!("{} -> {}", self.side(&r.reactants), self.side(&r.products))
    }
}

impl fmt::Display for ReactionNetwork {
    /// The canonical text form; parsing it yields an identical network.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "species: {}", self.species.join(" "))?;
        for (k, r) in self.reactions.iter().enumerate() {
            writeln!(f, "{} ; {}", self.describe_reaction(k), format_rational(&r.rate))?;
        }
        Ok(())
    }
}

/// The rate-free structure: reactant and product vectors per reaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkStructure {
    pub pairs: Vec<(Vec<u32>, Vec<u32>)>,
}

impl NetworkStructure {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn reactants(&self, k: usize) -> &[u32] {
        &self.pairs[k].0
    }

    pub fn products(&self, k: usize) -> &[u32] {
        &self.pairs[k].1
    }
}

/// Flips every arrow: pair k becomes (products_k, reactants_k).
pub fn inverse_structure(s: &NetworkStructure) -> NetworkStructure {
    NetworkStructure { pairs: s.pairs.iter().map(|(r, p)| (p.clone(), r.clone())).collect() }
}

pub fn stoichiometry_matrix(net: &ReactionNetwork) -> IntMatrix {
    net.stoichiometry_matrix()
}

pub fn propensity(net: &ReactionNetwork, k: usize, x: &[u64]) -> Result<Rational, NetworkError> {
    net.propensity(k, x)
}

// ---------------------------------------------------------------------------
// Parsing

struct RawReaction {
    line: usize,
    reactants: Vec<(String, u32)>,
    products: Vec<(String, u32)>,
    rate: Rational,
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Parse { line, column, message: message.into() }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a reaction side starting at byte `offset` of the line.
fn parse_side(text: &str, line: usize, offset: usize) -> Result<Vec<(String, u32)>, NetworkError> {
    let trimmed = text.trim();
    let lead = offset + text.len() - text.trim_start().len();
    if trimmed.is_empty() {
        return Err(perr(line, lead + 1, "empty reaction side (use `0` for nothing)"));
    }
    if trimmed == "0" {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    let mut pos = offset;
    for part in text.split('+') {
        let col = pos + part.len() - part.trim_start().len() + 1;
        pos += part.len() + 1;
        let term = part.trim();
        if term.is_empty() {
            return Err(perr(line, col, "missing term around `+`"));
        }
        let (count, name) = match term.split_once('*') {
            Some((c, n)) => {
                let count: u32 = c
                    .trim()
                    .parse()
                    .map_err(|_| perr(line, col, format!("bad stoichiometric coefficient `{}`", c.trim())))?;
                (count, n.trim())
            }
            None => (1, term),
        };
        if !is_name(name) {
            return Err(perr(line, col, format!("bad species name `{name}`")));
        }
        if count == 0 {
            return Err(perr(line, col, "zero coefficient"));
        }
        terms.push((name.to_string(), count));
    }
    Ok(terms)
}

fn parse_line(body: &str, line: usize) -> Result<RawReaction, NetworkError> {
    let arrow = body.find("->").ok_or_else(|| perr(line, 1, "expected `->`"))?;
    if body[arrow + 2..].contains("->") {
        return Err(perr(line, arrow + 3 + body[arrow + 2..].find("->").unwrap_or(0), "second `->`"));
    }
    let rest = &body[arrow + 2..];
    let semi = rest.find(';').ok_or_else(|| perr(line, body.len() + 1, "expected `; <rate>`"))?;
    let reactants = parse_side(&body[..arrow], line, 0)?;
    let products = parse_side(&rest[..semi], line, arrow + 2)?;
    let rate_text = rest[semi + 1..].trim();
    let rate_col = arrow + 2 + semi + 2 + (rest[semi + 1..].len() - rest[semi + 1..].trim_start().len());
    if rate_text.is_empty() {
        return Err(perr(line, rate_col, "missing rate constant"));
    }
    let rate = parse_rational(rate_text).map_err(|e| perr(line, rate_col, e.to_string()))?;
    if !rate.is_positive() {
        return Err(NetworkError::NonPositiveRate { line, rate: rate_text.to_string() });
    }
    Ok(RawReaction { line, reactants, products, rate })
}

/// Parses the line-based network format.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, NetworkError> {
    let mut header: Option<Vec<String>> = None;
    let mut raw = Vec::new();
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let body = full.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        if let Some(list) = body.trim_start().strip_prefix("species:") {
            if header.is_some() || !raw.is_empty() {
                return Err(perr(line, 1, "`species:` header must come once, before any reaction"));
            }
            let mut names: Vec<String> = Vec::new();
            for name in list.split_whitespace() {
                if !is_name(name) {
                    return Err(perr(line, body.find(name).unwrap_or(0) + 1, format!("bad species name `{name}`")));
                }
                if names.iter().any(|n| n == name) {
                    return Err(NetworkError::DuplicateSpecies { line, name: name.to_string() });
                }
                names.push(name.to_string());
            }
            if names.is_empty() {
                return Err(perr(line, 1, "empty species list"));
            }
            header = Some(names);
            continue;
        }
        raw.push(parse_line(body, line)?);
    }
    if raw.is_empty() {
        return Err(perr(text.lines().count().max(1), 1, "no reactions"));
    }
    let fixed = header.is_some();
    let mut species = header.unwrap_or_default();
    let mut index: HashMap<String, usize> = species.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    for r in &raw {
        for (name, _) in r.reactants.iter().chain(&r.products) {
            if !index.contains_key(name) {
                if fixed {
                    return Err(perr(r.line, 1, format!("species `{name}` missing from the header")));
                }
                index.insert(name.clone(), species.len());
                species.push(name.clone());
            }
        }
    }
    let d = species.len();
    let reactions = raw
        .into_iter()
        .map(|r| {
            let mut reactants = vec![0u32; d];
            let mut products = vec![0u32; d];
            for (name, c) in &r.reactants {
                reactants[index[name]] += c;
            }
            for (name, c) in &r.products {
                products[index[name]] += c;
            }
            Reaction { reactants, products, rate: r.rate }
        })
        .collect();
    ReactionNetwork::new(species, reactions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn birth_death() {
        let net = parse_network("0 -> S ; 1\nS -> 0 ; 1").unwrap();
        assert_eq!(net.dim(), 1);
        assert_eq!(net.num_reactions(), 2);
        assert_eq!(net.reactions()[0].reactants, vec![0]);
        assert_eq!(net.reactions()[0].products, vec![1]);
        assert_eq!(net.reactions()[1].reactants, vec![1]);
        assert_eq!(net.reactions()[1].products, vec![0]);
        assert_eq!(net.stoichiometry_matrix(), IntMatrix::from_rows(vec![vec![1, -1]]));
    }

    #[test]
    fn pure_birth_matrix() {
        let net = parse_network("0 -> S ; 1").unwrap();
        assert_eq!(net.stoichiometry_matrix(), IntMatrix::from_rows(vec![vec![1]]));
    }

    #[test]
    fn grammar_violations() {
        let err = parse_network("S ->").unwrap_err();
        assert!(matches!(err, NetworkError::Parse { line: 1, .. }), "{err}");
        assert!(matches!(parse_network("A -> B"), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse_network("A + -> B ; 1"), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse_network("A -> B -> C ; 1"), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse_network("x*A -> B ; 1"), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse_network("1A -> B ; 1"), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse_network("# only a comment\n"), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse_network("A -> B ; fast"), Err(NetworkError::Parse { .. })));
    }

    #[test]
    fn parse_error_points_at_the_rate() {
        match parse_network("0 -> S ; 1\nA -> B ; zz") {
            Err(NetworkError::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rates_and_duplicates() {
        assert!(matches!(parse_network("A -> B ; 0"), Err(NetworkError::NonPositiveRate { line: 1, .. })));
        assert!(matches!(parse_network("A -> B ; -2"), Err(NetworkError::NonPositiveRate { .. })));
        assert!(matches!(
            parse_network("species: A B A\nA -> B ; 1"),
            Err(NetworkError::DuplicateSpecies { line: 1, .. })
        ));
        assert!(matches!(parse_network("species: A\nA -> B ; 1"), Err(NetworkError::Parse { .. })));
        let net = parse_network("2*A + B -> C ; 0.5").unwrap();
        assert_eq!(net.reactions()[0].rate, frac(1, 2));
        assert_eq!(net.reactions()[0].reactants, vec![2, 1, 0]);
    }

    #[test]
    fn header_fixes_order_and_comments_are_skipped() {
        let net = parse_network("# demo\nspecies: B A\n\nA -> B ; 3 # trailing\n").unwrap();
        assert_eq!(net.species(), &["B".to_string(), "A".to_string()]);
        assert_eq!(net.stoichiometry_matrix(), IntMatrix::from_rows(vec![vec![1], vec![-1]]));
        assert_eq!(net.reactions()[0].rate, int(3));
    }

    #[test]
    fn repeated_terms_accumulate_and_identities_are_flagged() {
        let net = parse_network("A + A -> 0 ; 1\nA -> A ; 1").unwrap();
        assert_eq!(net.reactions()[0].reactants, vec![2]);
        assert_eq!(net.identity_reactions(), vec![1]);
    }

    #[test]
    fn propensities() {
        let bd = parse_network("0 -> S ; 1\nS -> 0 ; 1").unwrap();
        assert_eq!(bd.propensity(1, &[5]).unwrap(), int(5));
        assert_eq!(bd.propensity(0, &[0]).unwrap(), int(1));
        let dimer = parse_network("2*S -> 0 ; 3").unwrap();
        assert_eq!(dimer.propensity(0, &[4]).unwrap(), int(18));
        assert_eq!(dimer.propensity(0, &[1]).unwrap(), int(0));
        assert!(matches!(bd.propensity(2, &[1]), Err(NetworkError::IndexOutOfRange { .. })));
        assert!(matches!(bd.propensity(0, &[1, 2]), Err(NetworkError::IndexOutOfRange { .. })));
    }

    #[test]
    fn inverse_is_an_involution() {
        let net = parse_network("0 -> S ; 1\nS -> 0 ; 2\n2*S -> S ; 1").unwrap();
        let s = net.structure();
        let inv = inverse_structure(&s);
        assert_eq!(inv.pairs[0], (vec![1], vec![0]));
        assert_eq!(inverse_structure(&inv), s);
    }

    #[test]
    fn permutation() {
        let net = parse_network("A -> B ; 1\nC -> 0 ; 2").unwrap();
        let p = net.permute_species(&[1, 2, 0]);
        assert_eq!(p.species(), &["B", "C", "A"]);
        assert_eq!(p.reactions()[0].reactants, vec![0, 0, 1]);
        assert_eq!(p.reactions()[1].reactants, vec![0, 1, 0]);
    }
}
