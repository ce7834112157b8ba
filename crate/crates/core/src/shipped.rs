//! Rulepacks bundled with the engine.

use std::collections::BTreeMap;
use std::path::Path;

use crate::rulepack::{parse_rulebook, validate_rulebook, Rulebook, RulebookRef};

pub const MDR_ID: &str = "mdr-2017-745";
pub const MEDDEV_ID: &str = "meddev-2-1-6";

pub const MDR_SOURCE: &str = include_str!("../../../rulepacks/mdr-2017-745.rp");
pub const MEDDEV_SOURCE: &str = include_str!("../../../rulepacks/meddev-2-1-6.rp");

pub fn mdr() -> Rulebook {
    parse_rulebook(MDR_SOURCE).expect("shipped MDR rulepack parses")
}

pub fn meddev() -> Rulebook {
    parse_rulebook(MEDDEV_SOURCE).expect("shipped Meddev rulepack parses")
}

pub fn all() -> Vec<Rulebook> {
    vec![mdr(), meddev()]
}

/// Rulebooks available to sessions, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    books: BTreeMap<String, Rulebook>,
}

impl Catalog {
    pub fn shipped() -> Self {
        let mut c = Catalog::default();
        for rb in all() {
            c.books.insert(rb.id.clone(), rb);
        }
        c
    }

    /// Add a rulebook if it validates without errors. Replaces any rulebook
    /// with the same id.
    pub fn insert(&mut self, rb: Rulebook) -> Result<(), String> {
        if let Some(e) = validate_rulebook(&rb).into_iter().find(|i| i.is_error()) {
            return Err(format!("rulebook `{}` is invalid: {e}", rb.id));
        }
        self.books.insert(rb.id.clone(), rb);
        Ok(())
    }

    /// Shipped rulebooks plus every valid `*.rp` file in `dir`. Files that
    /// fail to read, parse or validate are returned as errors alongside.
    pub fn shipped_with_dir(dir: &Path) -> (Self, Vec<String>) {
        let mut c = Catalog::shipped();
        let mut errors = Vec::new();
        let Ok(entries) = std::fs::read_dir(dir) else {
            return (c, errors);
        };
        let mut paths: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "rp"))
            .collect();
        paths.sort();
        for path in paths {
            let loaded = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|src| parse_rulebook(&src).map_err(|e| e.to_string()))
                .and_then(|rb| c.insert(rb));
            if let Err(e) = loaded {
                errors.push(format!("{}: {e}", path.display()));
            }
        }
        (c, errors)
    }

    pub fn get(&self, id: &str) -> Option<&Rulebook> {
        self.books.get(id)
    }

    pub fn list(&self) -> Vec<RulebookRef> {
        self.books.values().map(Rulebook::reference).collect()
    }
}
