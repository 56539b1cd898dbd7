//! TOML document formats for lattices and instances.
//!
//! A lattice document names a family plus its parameters and may carry an
//! explicit `[[delta]]` table that replaces the family metric:
//!
//! ```toml
//! family = "chain"
//! max = 2
//!
//! [[delta]]
//! from = "0"
//! to = "1"
//! value = 5.0
//! ```
//!
//! Families: `chain` (`max`), `weighted-powerset` (`[weights]` map),
//! `vector-clock` (`dim`, `cap`), `explicit` (`elements`, `leq` pair list by
//! label — reflexive pairs implied, nothing else closed over — plus optional
//! `[[join]]` overrides). An instance document lists element labels:
//!
//! ```toml
//! inputs = ["1", "4", "6"]
//! outputs = ["4", "4", "6"]
//! reconciled = ["6", "6", "6"]   # optional
//! crashed = [2]                  # 1-based process ids
//! ```
//!
//! Dumping is canonical (sorted tables), so load -> dump -> load is identity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::AgreementInstance;
use crate::space::{Elt, FamilyParams, LatticeSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDoc {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leq: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub join: Option<Vec<JoinEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<DeltaEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinEntry {
    pub a: String,
    pub b: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaEntry {
    pub from: String,
    pub to: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconciled: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crashed: Vec<usize>,
}

fn require<T>(field: Option<T>, family: &str, name: &str) -> Result<T> {
    field.ok_or_else(|| Error::Parse(format!("family {:?} requires field {:?}", family, name)))
}

impl LatticeDoc {
    pub fn parse(text: &str) -> Result<LatticeDoc> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn dump(&self) -> String {
        toml::to_string(self).expect("lattice doc serializes")
    }

    pub fn to_space(&self) -> Result<LatticeSpace> {
        let base = match self.family.as_str() {
            "chain" => LatticeSpace::chain(require(self.max, "chain", "max")?)?,
            "weighted-powerset" => {
                let weights = require(self.weights.as_ref(), "weighted-powerset", "weights")?;
                let pairs: Vec<(String, f64)> =
                    weights.iter().map(|(k, v)| (k.clone(), *v)).collect();
                LatticeSpace::weighted_powerset(&pairs)?
            }
            "vector-clock" => LatticeSpace::vector_clock(
                require(self.dim, "vector-clock", "dim")?,
                require(self.cap, "vector-clock", "cap")?,
            )?,
            "explicit" => {
                let labels = require(self.elements.clone(), "explicit", "elements")?;
                let index = |label: &str| -> Result<u32> {
                    labels
                        .iter()
                        .position(|l| l == label)
                        .map(|i| i as u32)
                        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
                };
                let mut pairs = Vec::new();
                for (a, b) in self.leq.as_deref().unwrap_or(&[]) {
                    pairs.push((index(a)?, index(b)?));
                }
                let mut joins = Vec::new();
                for entry in self.join.as_deref().unwrap_or(&[]) {
                    joins.push((index(&entry.a)?, index(&entry.b)?, index(&entry.value)?));
                }
                LatticeSpace::explicit(
                    labels,
                    &pairs,
                    (!joins.is_empty()).then_some(joins.as_slice()),
                    None,
                )?
            }
            other => {
                return Err(Error::Parse(format!("unknown lattice family {:?}", other)));
            }
        };
        match &self.delta {
            None => Ok(base),
            Some(entries) => {
                let table: Vec<(String, String, f64)> = entries
                    .iter()
                    .map(|e| (e.from.clone(), e.to.clone(), e.value))
                    .collect();
                base.with_delta_table(&table)
            }
        }
    }

    pub fn from_space(space: &LatticeSpace) -> LatticeDoc {
        let mut doc = LatticeDoc {
            family: space.family_name().to_string(),
            max: None,
            weights: None,
            dim: None,
            cap: None,
            elements: None,
            leq: None,
            join: None,
            delta: None,
        };
        match space.describe() {
            FamilyParams::Chain { max } => doc.max = Some(max),
            FamilyParams::Powerset { weights } => {
                doc.weights = Some(weights.into_iter().collect());
            }
            FamilyParams::VectorClock { dim, cap } => {
                doc.dim = Some(dim);
                doc.cap = Some(cap);
            }
            FamilyParams::Explicit { labels, leq, join } => {
                doc.leq = Some(
                    leq.iter()
                        .map(|&(a, b)| {
                            (labels[a as usize].clone(), labels[b as usize].clone())
                        })
                        .collect(),
                );
                doc.join = Some(
                    join.iter()
                        .map(|&(a, b, j)| JoinEntry {
                            a: labels[a as usize].clone(),
                            b: labels[b as usize].clone(),
                            value: labels[j as usize].clone(),
                        })
                        .collect(),
                );
                doc.elements = Some(labels);
            }
        }
        doc.delta = space.delta_table().map(|entries| {
            let mut list: Vec<DeltaEntry> = entries
                .into_iter()
                .map(|(a, b, v)| DeltaEntry {
                    from: space.label(a),
                    to: space.label(b),
                    value: v,
                })
                .collect();
            list.sort_by(|x, y| (&x.from, &x.to).cmp(&(&y.from, &y.to)));
            list
        });
        doc
    }
}

impl InstanceDoc {
    pub fn parse(text: &str) -> Result<InstanceDoc> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn dump(&self) -> String {
        toml::to_string(self).expect("instance doc serializes")
    }

    pub fn to_instance(&self, space: &LatticeSpace) -> Result<AgreementInstance> {
        let parse_all = |labels: &[String]| -> Result<Vec<Elt>> {
            labels.iter().map(|l| space.parse_label(l)).collect()
        };
        let mut inst =
            AgreementInstance::new(parse_all(&self.inputs)?, parse_all(&self.outputs)?)?;
        if let Some(rec) = &self.reconciled {
            let rec = parse_all(rec)?;
            if rec.len() != inst.n() {
                return Err(Error::MalformedInstance(format!(
                    "{} reconciled outputs for {} processes",
                    rec.len(),
                    inst.n()
                )));
            }
            inst.reconciled = Some(rec);
        }
        for &p in &self.crashed {
            if p == 0 || p > inst.n() {
                return Err(Error::MalformedInstance(format!(
                    "crashed process {} outside 1..={}",
                    p,
                    inst.n()
                )));
            }
            inst.crashed.insert(p - 1);
        }
        Ok(inst)
    }

    pub fn from_instance(space: &LatticeSpace, inst: &AgreementInstance) -> InstanceDoc {
        let labels = |elts: &[Elt]| elts.iter().map(|&e| space.label(e)).collect();
        InstanceDoc {
            inputs: labels(&inst.inputs),
            outputs: labels(&inst.outputs),
            reconciled: inst.reconciled.as_deref().map(labels),
            crashed: inst.crashed.iter().map(|&i| i + 1).collect(),
        }
    }
}

/// Convenience: parse a lattice document straight to a space.
pub fn load_lattice(text: &str) -> Result<LatticeSpace> {
    LatticeDoc::parse(text)?.to_space()
}

pub fn dump_lattice(space: &LatticeSpace) -> String {
    LatticeDoc::from_space(space).dump()
}

pub fn load_instance(text: &str, space: &LatticeSpace) -> Result<AgreementInstance> {
    InstanceDoc::parse(text)?.to_instance(space)
}

pub fn dump_instance(space: &LatticeSpace, inst: &AgreementInstance) -> String {
    InstanceDoc::from_instance(space, inst).dump()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_doc_roundtrip() {
        let text = "family = \"chain\"\nmax = 64\n";
        let space = load_lattice(text).unwrap();
        assert_eq!(space.card(), 65);
        let dumped = dump_lattice(&space);
        assert_eq!(load_lattice(&dumped).unwrap(), space);
    }

    #[test]
    fn powerset_doc_roundtrip() {
        let text = "family = \"weighted-powerset\"\n[weights]\na = 1.0\nb = 5.0\n";
        let space = load_lattice(text).unwrap();
        assert_eq!(space.card(), 4);
        let dumped = dump_lattice(&space);
        assert_eq!(load_lattice(&dumped).unwrap(), space);
    }

    #[test]
    fn nonnormal_table_roundtrip() {
        let text = concat!(
            "family = \"chain\"\nmax = 2\n\n",
            "[[delta]]\nfrom = \"0\"\nto = \"1\"\nvalue = 5.0\n\n",
            "[[delta]]\nfrom = \"1\"\nto = \"2\"\nvalue = 5.0\n\n",
            "[[delta]]\nfrom = \"0\"\nto = \"2\"\nvalue = 4.0\n",
        );
        let space = load_lattice(text).unwrap();
        assert!(!space.is_normal());
        let dumped = dump_lattice(&space);
        assert_eq!(load_lattice(&dumped).unwrap(), space);
    }

    #[test]
    fn explicit_doc_roundtrip() {
        let text = concat!(
            "family = \"explicit\"\n",
            "elements = [\"bot\", \"l\", \"r\", \"top\"]\n",
            "leq = [[\"bot\",\"l\"],[\"bot\",\"r\"],[\"bot\",\"top\"],[\"l\",\"top\"],[\"r\",\"top\"]]\n",
        );
        let space = load_lattice(text).unwrap();
        assert_eq!(space.join(Elt(1), Elt(2)), Elt(3));
        let dumped = dump_lattice(&space);
        assert_eq!(load_lattice(&dumped).unwrap(), space);
    }

    #[test]
    fn instance_doc_roundtrip() {
        let space = LatticeSpace::chain(9).unwrap();
        let text = concat!(
            "inputs = [\"1\", \"4\", \"6\"]\n",
            "outputs = [\"4\", \"4\", \"6\"]\n",
            "reconciled = [\"6\", \"6\", \"6\"]\n",
            "crashed = [2]\n",
        );
        let inst = load_instance(text, &space).unwrap();
        assert_eq!(inst.crashed.iter().copied().collect::<Vec<_>>(), vec![1]);
        let dumped = dump_instance(&space, &inst);
        assert_eq!(load_instance(&dumped, &space).unwrap(), inst);
    }

    #[test]
    fn malformed_docs_are_parse_errors() {
        assert!(matches!(
            load_lattice("family = \"chain\"\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            load_lattice("family = \"moebius\"\nmax = 3\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            load_lattice("family = \"chain\"\nmax = 3\nbogus = 1\n"),
            Err(Error::Parse(_))
        ));
        let space = LatticeSpace::chain(3).unwrap();
        assert!(matches!(
            load_instance("inputs = [\"9\"]\noutputs = [\"9\"]\n", &space),
            Err(Error::UnknownLabel(_))
        ));
    }
}
