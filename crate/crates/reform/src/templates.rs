//! Versioned prompt templates.
//!
//! Templates are files, not code constants, so the exact prompt wording is an
//! inspectable, diffable artifact. The crate embeds `templates/v1/` as the
//! built-in set; [`TemplateSet::from_dir`] loads a replacement directory for
//! prompt studies.

use std::collections::BTreeMap;
use std::path::Path;

use crate::ReformError;

/// Number of instruction paraphrases the ensemble method requires.
pub const ENSEMBLE_INSTRUCTIONS: usize = 10;

const BUILTIN_VERSION: &str = "v1";
const BUILTIN: &[(&str, &str)] = &[
    ("genqr", include_str!("../templates/v1/genqr.txt")),
    (
        "genqr_ensemble",
        include_str!("../templates/v1/genqr_ensemble.txt"),
    ),
    ("q2k", include_str!("../templates/v1/q2k.txt")),
    ("q2d_zs", include_str!("../templates/v1/q2d_zs.txt")),
    ("q2d_fs", include_str!("../templates/v1/q2d_fs.txt")),
    ("q2d_cot", include_str!("../templates/v1/q2d_cot.txt")),
    (
        "qa_subquestions",
        include_str!("../templates/v1/qa_subquestions.txt"),
    ),
    ("qa_answer", include_str!("../templates/v1/qa_answer.txt")),
    ("qa_filter", include_str!("../templates/v1/qa_filter.txt")),
    ("mugi", include_str!("../templates/v1/mugi.txt")),
    ("lamer", include_str!("../templates/v1/lamer.txt")),
    (
        "csqe_passage",
        include_str!("../templates/v1/csqe_passage.txt"),
    ),
    ("csqe_judge", include_str!("../templates/v1/csqe_judge.txt")),
];

#[derive(Debug, Clone)]
pub struct TemplateSet {
    version: String,
    templates: BTreeMap<String, String>,
}

impl TemplateSet {
    /// The template set compiled into the crate.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, text)| (name.to_string(), text.to_string()))
            .collect();
        let set = TemplateSet {
            version: BUILTIN_VERSION.to_string(),
            templates,
        };
        set.validate().expect("builtin templates are valid");
        set
    }

    /// Load `*.txt` files from a directory; the directory name is the version.
    pub fn from_dir(dir: &Path) -> Result<Self, ReformError> {
        let version = dir
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "custom".to_string());
        let mut templates = BTreeMap::new();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| ReformError::Template(format!("{}: {e}", dir.display())))?;
        for entry in entries {
            let entry = entry.map_err(|e| ReformError::Template(e.to_string()))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                let name = path
                    .file_stem()
                    .expect("txt file has a stem")
                    .to_string_lossy()
                    .to_string();
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ReformError::Template(format!("{}: {e}", path.display())))?;
                templates.insert(name, text);
            }
        }
        let set = TemplateSet { version, templates };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), ReformError> {
        for (name, _) in BUILTIN {
            if !self.templates.contains_key(*name) {
                return Err(ReformError::Template(format!(
                    "template set {} is missing `{name}`",
                    self.version
                )));
            }
        }
        let n = self.ensemble_instructions().len();
        if n != ENSEMBLE_INSTRUCTIONS {
            return Err(ReformError::Template(format!(
                "genqr_ensemble must carry exactly {ENSEMBLE_INSTRUCTIONS} instructions, found {n}"
            )));
        }
        Ok(())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn get(&self, name: &str) -> Result<&str, ReformError> {
        self.templates
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| ReformError::Template(format!("no template named `{name}`")))
    }

    /// Fill `{placeholder}` slots. Unreplaced placeholders are a template bug
    /// and surface as an error.
    pub fn render(&self, name: &str, slots: &[(&str, &str)]) -> Result<String, ReformError> {
        let mut text = self.get(name)?.to_string();
        for (slot, value) in slots {
            text = text.replace(&format!("{{{slot}}}"), value);
        }
        if let Some(start) = text.find('{') {
            if text[start..].contains('}') {
                return Err(ReformError::Template(format!(
                    "template `{name}` has unfilled placeholders: {}",
                    &text[start..text.len().min(start + 40)]
                )));
            }
        }
        Ok(text)
    }

    /// The instruction paraphrases for the ensemble method, one per line.
    pub fn ensemble_instructions(&self) -> Vec<String> {
        self.templates
            .get("genqr_ensemble")
            .map(|text| {
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default()
    }
}
