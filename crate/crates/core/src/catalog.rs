//! The GoF pattern catalog: 23 headings, shipped as `.pat` sources and
//! loadable from any directory of pattern files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{parse_pattern_file, DslError, PatternFile};
use crate::matcher::feasible_within;
use crate::pattern::{Pattern, SynchronizedPatternSet};

/// Environment variable naming a catalog directory to use instead of the
/// built-in one.
pub const CATALOG_ENV: &str = "PATTERNFORGE_CATALOG";

/// Every loaded pattern must have an expansion with at most this many
/// replicas per part.
pub const FEASIBILITY_BOUND: u64 = 2;

const BUILTIN: [(&str, &str); 24] = [
    ("abstract_factory.pat", include_str!("../../../catalog/abstract_factory.pat")),
    ("adapter_class.pat", include_str!("../../../catalog/adapter_class.pat")),
    ("adapter_object.pat", include_str!("../../../catalog/adapter_object.pat")),
    ("bridge.pat", include_str!("../../../catalog/bridge.pat")),
    ("builder.pat", include_str!("../../../catalog/builder.pat")),
    ("chain_of_responsibility.pat", include_str!("../../../catalog/chain_of_responsibility.pat")),
    ("command.pat", include_str!("../../../catalog/command.pat")),
    ("composite.pat", include_str!("../../../catalog/composite.pat")),
    ("decorator.pat", include_str!("../../../catalog/decorator.pat")),
    ("facade.pat", include_str!("../../../catalog/facade.pat")),
    ("factory_method.pat", include_str!("../../../catalog/factory_method.pat")),
    ("flyweight.pat", include_str!("../../../catalog/flyweight.pat")),
    ("interpreter.pat", include_str!("../../../catalog/interpreter.pat")),
    ("iterator.pat", include_str!("../../../catalog/iterator.pat")),
    ("mediator.pat", include_str!("../../../catalog/mediator.pat")),
    ("memento.pat", include_str!("../../../catalog/memento.pat")),
    ("observer.pat", include_str!("../../../catalog/observer.pat")),
    ("prototype.pat", include_str!("../../../catalog/prototype.pat")),
    ("proxy.pat", include_str!("../../../catalog/proxy.pat")),
    ("singleton.pat", include_str!("../../../catalog/singleton.pat")),
    ("state.pat", include_str!("../../../catalog/state.pat")),
    ("strategy.pat", include_str!("../../../catalog/strategy.pat")),
    ("template_method.pat", include_str!("../../../catalog/template_method.pat")),
    ("visitor.pat", include_str!("../../../catalog/visitor.pat")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub path: PathBuf,
    /// Pattern identifier, e.g. `AbstractFactory`.
    pub name: String,
    /// Heading, e.g. "Abstract Factory". Variants of one pattern share it.
    pub title: String,
    pub intent: String,
    pub equations: String,
    pub has_collaboration: bool,
    /// The equations are reconstructed rather than taken from a caption.
    pub derived: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogItem {
    pub entry: CatalogEntry,
    pub file: PatternFile,
}

impl CatalogItem {
    pub fn pattern(&self) -> &Pattern {
        &self.file.primary
    }

    pub fn sync_set(&self) -> SynchronizedPatternSet {
        self.file.sync_set()
    }

    /// Lower-case file stem, e.g. `adapter_class`.
    pub fn slug(&self) -> String {
        self.entry.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] DslError),
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("{}: no pattern files found", path.display())]
    Empty { path: PathBuf },
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub items: Vec<CatalogItem>,
}

impl Catalog {
    /// The catalog compiled into the library.
    pub fn builtin() -> Catalog {
        let items = BUILTIN
            .iter()
            .map(|(name, text)| load_source(Path::new("catalog").join(name), text).expect("built-in catalog is valid"))
            .collect();
        Catalog { items }
    }

    /// `dir` if given, else the directory named by `PATTERNFORGE_CATALOG`,
    /// else the built-in catalog.
    pub fn locate(dir: Option<&Path>) -> Result<Catalog, CatalogError> {
        if let Some(d) = dir {
            return load_catalog(d);
        }
        match std::env::var_os(CATALOG_ENV) {
            Some(d) if !d.is_empty() => load_catalog(Path::new(&d)),
            _ => Ok(Catalog::builtin()),
        }
    }

    pub fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.items.iter().map(CatalogItem::pattern)
    }

    /// Distinct headings, sorted.
    pub fn titles(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.items.iter().map(|i| i.entry.title.as_str()).collect();
        set.into_iter().collect()
    }

    /// Items whose name, title or file stem matches `key`, ignoring case,
    /// spaces, dashes and underscores.
    pub fn lookup(&self, key: &str) -> Vec<&CatalogItem> {
        let k = normalize(key);
        self.items
            .iter()
            .filter(|i| normalize(&i.entry.name) == k || normalize(&i.entry.title) == k || normalize(&i.slug()) == k)
            .collect()
    }

    /// Pairs of pattern and entry, in file-name order.
    pub fn entries(&self) -> Vec<(Pattern, CatalogEntry)> {
        self.items.iter().map(|i| (i.file.primary.clone(), i.entry.clone())).collect()
    }
}

fn normalize(s: &str) -> String {
    s.chars().filter(|c| !matches!(c, ' ' | '_' | '-')).flat_map(char::to_lowercase).collect()
}

/// Parse one pattern file and check that it is valid and feasible.
pub fn load_source(path: PathBuf, text: &str) -> Result<CatalogItem, CatalogError> {
    let file = parse_pattern_file(text, &path.display().to_string())?;
    let report = file.sync_set().validate();
    if !report.is_valid() {
        let message = report.errors().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(CatalogError::Invalid { path, message });
    }
    for p in std::iter::once(&file.primary).chain(&file.collaborations) {
        if !feasible_within(p, FEASIBILITY_BOUND) {
            return Err(CatalogError::Invalid {
                path,
                message: format!("equations of `{}` have no solution with at most {FEASIBILITY_BOUND} replicas per part", p.name),
            });
        }
    }
    let p = &file.primary;
    let entry = CatalogEntry {
        path,
        name: p.name.clone(),
        title: p.title.clone(),
        intent: p.intent.clone(),
        equations: p.equations.to_string(),
        has_collaboration: !file.collaborations.is_empty(),
        derived: file.derived_equations,
    };
    Ok(CatalogItem { entry, file })
}

/// Load every `*.pat` file in `dir`, sorted by file name.
pub fn load_catalog(dir: &Path) -> Result<Catalog, CatalogError> {
    let io = |source| CatalogError::Io { path: dir.to_path_buf(), source };
    let mut paths = Vec::new();
    for e in std::fs::read_dir(dir).map_err(io)? {
        let path = e.map_err(io)?.path();
        if path.extension().is_some_and(|x| x == "pat") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(CatalogError::Empty { path: dir.to_path_buf() });
    }
    paths.sort();
    let mut items = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|source| CatalogError::Io { path: path.clone(), source })?;
        items.push(load_source(path, &text)?);
    }
    Ok(Catalog { items })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_source_loads() {
        let errors: Vec<String> = BUILTIN
            .iter()
            .filter_map(|(name, text)| load_source(PathBuf::from(name), text).err().map(|e| e.to_string()))
            .collect();
        assert!(errors.is_empty(), "{}", errors.join("\n"));
    }

    #[test]
    fn builtin_has_23_headings() {
        let c = Catalog::builtin();
        assert_eq!(c.items.len(), 24);
        assert_eq!(c.titles().len(), 23);
        assert_eq!(c.lookup("adapter").len(), 2);
        assert_eq!(c.lookup("template-method")[0].entry.name, "TemplateMethod");
        assert_eq!(c.lookup("ObjectAdapter").len(), 1);
    }

    #[test]
    fn derived_marker_only_on_uncaptioned_patterns() {
        let c = Catalog::builtin();
        let derived: BTreeSet<&str> = c.items.iter().filter(|i| i.entry.derived).map(|i| i.entry.title.as_str()).collect();
        let expected: BTreeSet<&str> = ["Adapter", "Bridge", "Iterator", "Mediator", "Memento", "Observer", "Visitor"].into();
        assert_eq!(derived, expected);
    }

    #[test]
    fn collaborations_ship_for_three_patterns() {
        let c = Catalog::builtin();
        let with: Vec<&str> = c.items.iter().filter(|i| i.entry.has_collaboration).map(|i| i.entry.name.as_str()).collect();
        assert_eq!(with, ["Command", "Observer", "Proxy"]);
    }

    #[test]
    fn load_from_directory_names_the_file() {
        let dir = std::env::temp_dir().join(format!("pf-cat-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("bad.pat"), "pattern X {\n  root { class A }\n  part p in nowhere { class B }\n}\n").unwrap();
        let err = load_catalog(&dir).unwrap_err().to_string();
        assert!(err.contains("bad.pat:3:"), "{err}");
        std::fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(load_catalog(&dir), Err(CatalogError::Io { .. })));
    }
}
