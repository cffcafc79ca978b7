//! Quorum specification files.
//!
//! A node is a party name (`"p1"`), `{"threshold": k, "of": [...]}`,
//! `{"and": [...]}` or `{"or": [...]}`. A document is either a bare node or
//! `{"v": 1, "parties": [...], "quorum": node}` with `parties` optional.
//!
//! With `"attributes": [{"name": .., "holders": [..], "min": l}]` the quorum
//! node ranges over attribute names, `parties` is required, and an attribute
//! literal stands for any `l` of its holders.

use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::checker::{Counting, Encoding, QuorumChecker};
use crate::constructions::{attribute_msp, AttributeSystem, ConstructionError};
use crate::formula::{Formula, FormulaError, Mbf};
use crate::msp::{build_msp, LupMsp, Msp, MspError};
use crate::party::{Party, Universe};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: unknown key `{key}`")]
    UnknownKey { path: String, key: String },
    #[error("{path}: threshold {k} out of range for {arity} operands")]
    ThresholdRange { path: String, k: i128, arity: usize },
    #[error("{path}: party `{party}` is not declared in `parties`")]
    UndeclaredParty { path: String, party: String },
    #[error("$.parties: party `{0}` is declared but never used")]
    UnusedParty(String),
    #[error("$.parties: party `{0}` is declared twice")]
    DuplicateParty(String),
    #[error("$.v: unsupported format version {0}")]
    Version(String),
    #[error("{0}")]
    Construction(String),
    #[error("encoding `counting` needs a single threshold over all parties")]
    NotCounting,
}

impl ConfigError {
    fn schema(path: &str, message: impl Into<String>) -> Self {
        ConfigError::Schema {
            path: path.to_owned(),
            message: message.into(),
        }
    }
}

/// An attribute declaration: any `min` of `holders` satisfy `name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub holders: Vec<Party>,
    pub min: usize,
}

/// A parsed specification document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecDocument {
    pub version: u64,
    /// The declared universe, if any.
    pub parties: Option<Vec<Party>>,
    /// Attribute declarations; empty for party-level documents.
    pub attributes: Vec<AttributeDecl>,
    pub formula: Formula,
}

impl SpecDocument {
    pub fn from_formula(formula: Formula) -> Self {
        SpecDocument {
            version: FORMAT_VERSION,
            parties: None,
            attributes: Vec::new(),
            formula,
        }
    }

    /// A document declaring the parties and attributes of `sys`.
    pub fn from_attributes(sys: &AttributeSystem, formula: Formula) -> Self {
        let u = sys.universe();
        SpecDocument {
            version: FORMAT_VERSION,
            parties: Some(u.parties().to_vec()),
            attributes: sys
                .attributes()
                .iter()
                .map(|a| AttributeDecl {
                    name: a.name.clone(),
                    holders: a.holders.iter().map(|i| u.party(i).clone()).collect(),
                    min: a.multiplicity,
                })
                .collect(),
            formula,
        }
    }

    /// The attribute system, if the document declares attributes.
    pub fn attribute_system(&self) -> Option<AttributeSystem> {
        if self.attributes.is_empty() {
            return None;
        }
        let mut sys = AttributeSystem::new(self.universe());
        for a in &self.attributes {
            sys.add(&a.name, a.holders.iter().map(Party::as_str), a.min)
                .expect("validated on parse");
        }
        Some(sys)
    }

    /// The formula over parties, expanding attribute literals.
    pub fn party_formula(&self) -> Formula {
        match self.attribute_system() {
            Some(sys) => sys.party_formula(&self.formula).expect("validated on parse"),
            None => self.formula.clone(),
        }
    }

    /// The MSP over [`Self::universe`]; attribute documents use the
    /// attribute construction.
    pub fn msp(&self) -> Result<Msp, ConfigError> {
        let msp = match self.attribute_system() {
            Some(sys) => attribute_msp(&sys, &self.formula).map_err(construction)?,
            None => build_msp(&self.formula).map_err(msp_error)?,
        };
        msp.reindexed(self.universe()).map_err(msp_error)
    }

    /// A quorum checker in the requested encoding.
    pub fn checker(&self, encoding: Encoding) -> Result<Box<dyn QuorumChecker>, ConfigError> {
        Ok(match encoding {
            Encoding::Mbf => Box::new(self.mbf()),
            Encoding::Msp => Box::new(self.msp()?),
            Encoding::MspLup => Box::new(LupMsp::new(self.msp()?).map_err(msp_error)?),
            Encoding::Counting => {
                let u = self.universe();
                match self.party_formula() {
                    Formula::Threshold { k, of }
                        if of.len() == u.len() && of.iter().all(|c| matches!(c, Formula::Literal(_))) =>
                    {
                        Box::new(Counting::new(u.clone(), u.len() - k))
                    }
                    Formula::Literal(_) if u.len() == 1 => Box::new(Counting::new(u, 0)),
                    _ => return Err(ConfigError::NotCounting),
                }
            }
        })
    }

    /// The declared universe, or the literals in order of first appearance.
    pub fn universe(&self) -> Universe {
        match &self.parties {
            Some(ps) => Universe::new(ps.clone()).expect("validated on parse"),
            None => self.formula.universe().expect("validated on parse"),
        }
    }

    pub fn mbf(&self) -> Mbf {
        Mbf::with_universe(&self.party_formula(), self.universe()).expect("validated on parse")
    }
}

fn construction(e: ConstructionError) -> ConfigError {
    ConfigError::Construction(e.to_string())
}

fn msp_error(e: MspError) -> ConfigError {
    ConfigError::Construction(e.to_string())
}

/// Parses a document and returns its formula.
pub fn parse_spec(text: &[u8]) -> Result<Formula, ConfigError> {
    parse_document(text).map(|d| d.formula)
}

pub fn parse_document(text: &[u8]) -> Result<SpecDocument, ConfigError> {
    let value = parse_json(text)?;
    document_from_value(&value, &[])
}

/// Parses JSON text, reporting syntax errors with line and column.
pub fn parse_json(text: &[u8]) -> Result<Value, ConfigError> {
    serde_json::from_slice(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Interprets a JSON value as a document. Top-level keys listed in `extra`
/// are tolerated and left to the caller.
pub fn document_from_value(value: &Value, extra: &[&str]) -> Result<SpecDocument, ConfigError> {
    let obj = match value {
        Value::Object(o) if o.contains_key("quorum") => o,
        _ => {
            let formula = node_from_value(value, "$")?;
            check_formula(&formula)?;
            return Ok(SpecDocument::from_formula(formula));
        }
    };
    for key in obj.keys() {
        if !["v", "parties", "attributes", "quorum"].contains(&key.as_str()) && !extra.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                path: "$".into(),
                key: key.clone(),
            });
        }
    }
    let version = match obj.get("v") {
        None => FORMAT_VERSION,
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => FORMAT_VERSION,
        Some(v) => return Err(ConfigError::Version(v.to_string())),
    };
    let formula = node_from_value(&obj["quorum"], "$.quorum")?;
    check_formula(&formula)?;
    let parties = match obj.get("parties") {
        None => None,
        Some(Value::Array(items)) => {
            let mut ps: Vec<Party> = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let Value::String(name) = item else {
                    return Err(ConfigError::schema(
                        &format!("$.parties[{i}]"),
                        "party names must be strings",
                    ));
                };
                let p = Party::new(name.as_str());
                if ps.contains(&p) {
                    return Err(ConfigError::DuplicateParty(name.clone()));
                }
                ps.push(p);
            }
            Some(ps)
        }
        Some(_) => return Err(ConfigError::schema("$.parties", "expected an array")),
    };
    let attributes = match obj.get("attributes") {
        None => Vec::new(),
        Some(v) => {
            let Some(ps) = &parties else {
                return Err(ConfigError::schema("$.attributes", "attributes require `parties`"));
            };
            attributes_from_value(v, ps)?
        }
    };
    if let Some(ps) = &parties {
        if attributes.is_empty() {
            check_declared(&formula, "$.quorum", ps)?;
            let used = formula.parties();
            if let Some(p) = ps.iter().find(|p| !used.contains(p)) {
                return Err(ConfigError::UnusedParty(p.to_string()));
            }
        } else {
            let names: Vec<Party> = attributes.iter().map(|a| Party::new(a.name.as_str())).collect();
            check_declared(&formula, "$.quorum", &names)?;
            let used = formula.parties();
            let held = |p: &Party| {
                attributes
                    .iter()
                    .any(|a| used.contains(&Party::new(a.name.as_str())) && a.holders.contains(p))
            };
            if let Some(p) = ps.iter().find(|p| !held(p)) {
                return Err(ConfigError::UnusedParty(p.to_string()));
            }
        }
    }
    Ok(SpecDocument {
        version,
        parties,
        attributes,
        formula,
    })
}

fn attributes_from_value(value: &Value, parties: &[Party]) -> Result<Vec<AttributeDecl>, ConfigError> {
    let Value::Array(items) = value else {
        return Err(ConfigError::schema("$.attributes", "expected an array"));
    };
    let mut out: Vec<AttributeDecl> = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let path = format!("$.attributes[{i}]");
        let Value::Object(obj) = item else {
            return Err(ConfigError::schema(&path, "expected an object"));
        };
        for key in obj.keys() {
            if !["name", "holders", "min"].contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    path: path.clone(),
                    key: key.clone(),
                });
            }
        }
        let name = match obj.get("name") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            _ => return Err(ConfigError::schema(&format!("{path}.name"), "expected a non-empty string")),
        };
        if out.iter().any(|a| a.name == name) {
            return Err(ConfigError::schema(&format!("{path}.name"), format!("attribute `{name}` declared twice")));
        }
        let Some(Value::Array(hs)) = obj.get("holders") else {
            return Err(ConfigError::schema(&format!("{path}.holders"), "expected an array"));
        };
        let mut holders: Vec<Party> = Vec::with_capacity(hs.len());
        for (j, h) in hs.iter().enumerate() {
            let hp = format!("{path}.holders[{j}]");
            let Value::String(h) = h else {
                return Err(ConfigError::schema(&hp, "party names must be strings"));
            };
            let p = Party::new(h.as_str());
            if !parties.contains(&p) {
                return Err(ConfigError::UndeclaredParty { path: hp, party: h.clone() });
            }
            if holders.contains(&p) {
                return Err(ConfigError::schema(&hp, format!("holder `{h}` listed twice")));
            }
            holders.push(p);
        }
        let min = match obj.get("min").map(Value::as_i64) {
            Some(Some(m)) => m as i128,
            _ => return Err(ConfigError::schema(&format!("{path}.min"), "expected an integer")),
        };
        if min < 1 || min > holders.len() as i128 {
            return Err(ConfigError::ThresholdRange {
                path: format!("{path}.min"),
                k: min,
                arity: holders.len(),
            });
        }
        out.push(AttributeDecl {
            name,
            holders,
            min: min as usize,
        });
    }
    Ok(out)
}

fn check_formula(f: &Formula) -> Result<(), ConfigError> {
    f.universe().map_err(|e| ConfigError::schema("$", e.to_string()))?;
    Ok(())
}

fn check_declared(f: &Formula, path: &str, declared: &[Party]) -> Result<(), ConfigError> {
    match f {
        Formula::Literal(p) if !declared.contains(p) => Err(ConfigError::UndeclaredParty {
            path: path.to_owned(),
            party: p.to_string(),
        }),
        Formula::Literal(_) => Ok(()),
        _ => {
            for (i, c) in f.children().iter().enumerate() {
                check_declared(c, &format!("{path}{}[{i}]", operand_key(f)), declared)?;
            }
            Ok(())
        }
    }
}

fn operand_key(f: &Formula) -> &'static str {
    match f {
        Formula::And(_) => ".and",
        Formula::Or(_) => ".or",
        _ => ".of",
    }
}

/// Interprets a JSON value as a formula node.
pub fn node_from_value(value: &Value, path: &str) -> Result<Formula, ConfigError> {
    match value {
        Value::String(s) if s.is_empty() => Err(ConfigError::schema(path, "empty party name")),
        Value::String(s) => Ok(Formula::literal(s.as_str())),
        Value::Object(obj) => object_node(obj, path),
        _ => Err(ConfigError::schema(
            path,
            "expected a party name or an operator object",
        )),
    }
}

fn object_node(obj: &Map<String, Value>, path: &str) -> Result<Formula, ConfigError> {
    let allowed: &[&str] = if obj.contains_key("threshold") {
        &["threshold", "of"]
    } else if obj.contains_key("and") {
        &["and"]
    } else if obj.contains_key("or") {
        &["or"]
    } else {
        return Err(ConfigError::schema(
            path,
            "operator object needs `threshold`, `and` or `or`",
        ));
    };
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                path: path.to_owned(),
                key: key.clone(),
            });
        }
    }
    let operands = |key: &str| -> Result<Vec<Formula>, ConfigError> {
        let p = format!("{path}.{key}");
        let Some(Value::Array(items)) = obj.get(key) else {
            return Err(ConfigError::schema(&p, "expected an array of operands"));
        };
        if items.is_empty() {
            return Err(ConfigError::schema(&p, "operator without operands"));
        }
        items
            .iter()
            .enumerate()
            .map(|(i, v)| node_from_value(v, &format!("{p}[{i}]")))
            .collect()
    };
    if let Some(k) = obj.get("threshold") {
        let of = operands("of")?;
        let kp = format!("{path}.threshold");
        let k = match k.as_i64() {
            Some(k) => k as i128,
            None if k.is_u64() => k.as_u64().unwrap_or(u64::MAX) as i128,
            None => return Err(ConfigError::schema(&kp, "threshold must be an integer")),
        };
        if k < 1 || k > of.len() as i128 {
            return Err(ConfigError::ThresholdRange {
                path: kp,
                k,
                arity: of.len(),
            });
        }
        return Formula::threshold(k as usize, of).map_err(|e| match e {
            FormulaError::ThresholdRange { k, arity } => ConfigError::ThresholdRange {
                path: path.to_owned(),
                k: k as i128,
                arity,
            },
            e => ConfigError::schema(path, e.to_string()),
        });
    }
    if obj.contains_key("and") {
        Ok(Formula::And(operands("and")?))
    } else {
        Ok(Formula::Or(operands("or")?))
    }
}

/// Canonical document for `f`: two-space indentation, operands in their
/// original order, and operand lists made only of party names kept on one
/// line. Single-operand operators collapse to their operand.
pub fn emit_spec(f: &Formula) -> String {
    emit_document(&SpecDocument::from_formula(f.clone()))
}

pub fn emit_document(doc: &SpecDocument) -> String {
    let mut out = String::new();
    let _ = write!(out, "{{\n  \"v\": {},\n", doc.version);
    if let Some(ps) = &doc.parties {
        let names: Vec<String> = ps.iter().map(|p| quote(p.as_str())).collect();
        let _ = writeln!(out, "  \"parties\": [{}],", names.join(", "));
    }
    if !doc.attributes.is_empty() {
        out.push_str("  \"attributes\": [\n");
        for (i, a) in doc.attributes.iter().enumerate() {
            let holders: Vec<String> = a.holders.iter().map(|p| quote(p.as_str())).collect();
            let sep = if i + 1 == doc.attributes.len() { "" } else { "," };
            let _ = writeln!(
                out,
                "    {{\"name\": {}, \"holders\": [{}], \"min\": {}}}{sep}",
                quote(&a.name),
                holders.join(", "),
                a.min
            );
        }
        out.push_str("  ],\n");
    }
    out.push_str("  \"quorum\": ");
    emit_node(&collapse(&doc.formula), 1, &mut out);
    out.push_str("\n}\n");
    out
}

/// Renders a formula node at the given indentation depth, without a trailing
/// newline.
pub fn emit_node_string(f: &Formula, depth: usize) -> String {
    let mut out = String::new();
    emit_node(&collapse(f), depth, &mut out);
    out
}

fn collapse(f: &Formula) -> Formula {
    match f {
        Formula::Literal(_) => f.clone(),
        _ if f.children().len() == 1 => collapse(&f.children()[0]),
        Formula::Threshold { k, of } => Formula::Threshold {
            k: *k,
            of: of.iter().map(collapse).collect(),
        },
        Formula::And(of) => Formula::And(of.iter().map(collapse).collect()),
        Formula::Or(of) => Formula::Or(of.iter().map(collapse).collect()),
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn emit_node(f: &Formula, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth + 1);
    let close = "  ".repeat(depth);
    let of = match f {
        Formula::Literal(p) => {
            out.push_str(&quote(p.as_str()));
            return;
        }
        Formula::Threshold { k, of } => {
            let _ = write!(out, "{{\n{pad}\"threshold\": {k},\n{pad}\"of\": ");
            of
        }
        Formula::And(of) => {
            let _ = write!(out, "{{\n{pad}\"and\": ");
            of
        }
        Formula::Or(of) => {
            let _ = write!(out, "{{\n{pad}\"or\": ");
            of
        }
    };
    if of.iter().all(|c| matches!(c, Formula::Literal(_))) {
        let names: Vec<String> = of
            .iter()
            .map(|c| match c {
                Formula::Literal(p) => quote(p.as_str()),
                _ => unreachable!(),
            })
            .collect();
        let _ = write!(out, "[{}]", names.join(", "));
    } else {
        let inner = "  ".repeat(depth + 2);
        out.push_str("[\n");
        for (i, c) in of.iter().enumerate() {
            out.push_str(&inner);
            emit_node(c, depth + 2, out);
            out.push_str(if i + 1 < of.len() { ",\n" } else { "\n" });
        }
        out.push_str(&pad);
        out.push(']');
    }
    let _ = write!(out, "\n{close}}}");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_threshold_node() {
        let f = parse_spec(br#"{"threshold":3,"of":["p1","p2","p3","p4"]}"#).unwrap();
        assert_eq!(f, Formula::threshold_of(3, ["p1", "p2", "p3", "p4"]).unwrap());
    }

    #[test]
    fn sugar_keys() {
        let f = parse_spec(br#"{"and":["a",{"or":["b","c"]}]}"#).unwrap();
        assert_eq!(f.to_string(), "and(a, or(b, c))");
    }

    #[test]
    fn threshold_out_of_range_is_rejected() {
        for doc in [
            r#"{"threshold":0,"of":["a"]}"#,
            r#"{"threshold":3,"of":["a","b"]}"#,
            r#"{"threshold":-1,"of":["a"]}"#,
        ] {
            assert!(
                matches!(parse_spec(doc.as_bytes()), Err(ConfigError::ThresholdRange { .. })),
                "{doc}"
            );
        }
        assert!(matches!(
            parse_spec(br#"{"threshold":1.5,"of":["a"]}"#),
            Err(ConfigError::Schema { .. })
        ));
    }

    #[test]
    fn diagnostics_carry_locations() {
        let err = parse_spec(br#"{"v":1,"quorum":{"threshold":1,"of":["a",{"or":[]}]}}"#)
            .unwrap_err();
        assert_eq!(err.to_string(), "$.quorum.of[1].or: operator without operands");
        let err = parse_spec(br#"{"threshold":1,"of":["a"],"extra":2}"#).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { ref key, .. } if key == "extra"));
        let err = parse_spec(b"{\n  \"threshold\": 1,\n  \"of\": [\"a\"\n}").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 4, .. }), "{err:?}");
        let err = parse_spec(br#"{"v":1,"parties":["a"],"quorum":{"or":["a","b"]}}"#)
            .unwrap_err();
        assert_eq!(
            err,
            ConfigError::UndeclaredParty {
                path: "$.quorum.or[1]".into(),
                party: "b".into()
            }
        );
        let err = parse_spec(br#"{"v":1,"parties":["a","b"],"quorum":"a"}"#).unwrap_err();
        assert_eq!(err, ConfigError::UnusedParty("b".into()));
        let err = parse_spec(br#"{"v":2,"quorum":"a"}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Version(_)));
    }

    #[test]
    fn declared_universe_order() {
        let doc = parse_document(br#"{"v":1,"parties":["b","a"],"quorum":{"and":["a","b"]}}"#)
            .unwrap();
        assert_eq!(doc.universe().party(0).as_str(), "b");
        assert_eq!(doc.mbf().universe().len(), 2);
    }

    #[test]
    fn single_literal_document() {
        let f = Formula::threshold_of(1, ["p1"]).unwrap();
        assert_eq!(emit_spec(&f), "{\n  \"v\": 1,\n  \"quorum\": \"p1\"\n}\n");
    }

    #[test]
    fn canonical_layout() {
        let f = Formula::threshold(
            2,
            vec![
                Formula::literal("a"),
                Formula::And(vec![Formula::literal("b"), Formula::literal("c")]),
            ],
        )
        .unwrap();
        let text = emit_spec(&f);
        assert_eq!(
            text,
            "{\n  \"v\": 1,\n  \"quorum\": {\n    \"threshold\": 2,\n    \"of\": [\n      \"a\",\n      {\n        \"and\": [\"b\", \"c\"]\n      }\n    ]\n  }\n}\n"
        );
        assert_eq!(parse_spec(text.as_bytes()).unwrap(), f);
        assert_eq!(emit_spec(&f), text);
    }

    #[test]
    fn attribute_documents() {
        let text = br#"{"v":1,"parties":["a","b","c","d"],
            "attributes":[{"name":"X","holders":["a","b","c"],"min":2},{"name":"Y","holders":["d"],"min":1}],
            "quorum":{"and":["X","Y"]}}"#;
        let doc = parse_document(text).unwrap();
        assert_eq!(doc.party_formula().to_string(), "and(T2/3(a, b, c), T1/1(d))");
        let msp = doc.msp().unwrap();
        assert_eq!(msp.universe(), &doc.universe());
        let mbf = doc.mbf();
        for bits in 0..16u128 {
            let s = crate::party::PartySet::from_bits(bits);
            assert_eq!(msp.accepts(s).accepted, mbf.eval(s));
        }
        let again = parse_document(emit_document(&doc).as_bytes()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn attribute_document_errors() {
        let cases: [(&str, &str); 5] = [
            (
                r#"{"attributes":[{"name":"X","holders":["a"],"min":1}],"quorum":"X"}"#,
                "$.attributes: attributes require `parties`",
            ),
            (
                r#"{"parties":["a"],"attributes":[{"name":"X","holders":["b"],"min":1}],"quorum":"X"}"#,
                "$.attributes[0].holders[0]: party `b` is not declared in `parties`",
            ),
            (
                r#"{"parties":["a"],"attributes":[{"name":"X","holders":["a"],"min":2}],"quorum":"X"}"#,
                "$.attributes[0].min: threshold 2 out of range for 1 operands",
            ),
            (
                r#"{"parties":["a"],"attributes":[{"name":"X","holders":["a"],"min":1}],"quorum":"a"}"#,
                "$.quorum: party `a` is not declared in `parties`",
            ),
            (
                r#"{"parties":["a","b"],"attributes":[{"name":"X","holders":["a"],"min":1}],"quorum":"X"}"#,
                "$.parties: party `b` is declared but never used",
            ),
        ];
        for (doc, msg) in cases {
            assert_eq!(parse_document(doc.as_bytes()).unwrap_err().to_string(), msg, "{doc}");
        }
    }

    #[test]
    fn counting_encoding_needs_a_flat_threshold() {
        let doc = parse_document(br#"{"threshold":3,"of":["a","b","c","d"]}"#).unwrap();
        let c = doc.checker(Encoding::Counting).unwrap();
        assert!(c.is_quorum(crate::party::PartySet::from_bits(0b1011)));
        assert!(!c.is_quorum(crate::party::PartySet::from_bits(0b0011)));
        let nested = parse_document(br#"{"and":["a",{"or":["b","c"]}]}"#).unwrap();
        assert!(matches!(nested.checker(Encoding::Counting), Err(ConfigError::NotCounting)));
        for e in [Encoding::Mbf, Encoding::Msp, Encoding::MspLup] {
            assert!(nested.checker(e).unwrap().is_quorum(crate::party::PartySet::from_bits(0b101)));
        }
    }
}
