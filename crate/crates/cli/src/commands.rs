use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use patternforge::catalog::{Catalog, CatalogError};
use patternforge::dsl::{
    parse_model_file, parse_pattern_file, print_model, serialize_annotation, DslError, ModelDocument, OutputFormat, PatternFile,
};
use patternforge::expansion::{expand, ExpansionError};
use patternforge::graph::{ElementId, TypedGraph};
use patternforge::matcher::{
    annotate, check_constraints, check_sync, feasible_within, find_occurrences, find_structural_occurrences, satisfies,
    AnnotatedOccurrence, Annotation, MatchConfig, MatchError, MatchMode, Matches, Occurrence, RoleBinding, SyncRejection,
    SyncTuple, Verdict, ViolationKind,
};
use patternforge::pattern::{Pattern, PatternIssue, Severity};
use patternforge::solver::{enumerate_solutions, minimal_solutions, ReplicaAssignment};
use rayon::prelude::*;
use serde::Serialize;

use crate::{CatalogCommand, Command, Format, Global};

const OK: u8 = 0;
const FAILED: u8 = 1;
const INPUT_ERROR: u8 = 2;

pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Input or usage error; the text goes to stderr as is.
struct Failure(String);

fn fail(msg: impl fmt::Display) -> Failure {
    Failure(format!("patternforge: error: {msg}"))
}

impl From<DslError> for Failure {
    fn from(e: DslError) -> Self {
        Failure(e.to_string())
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::Parse(d) => d.into(),
            other => fail(other),
        }
    }
}

impl From<MatchError> for Failure {
    fn from(e: MatchError) -> Self {
        fail(e)
    }
}

impl From<ExpansionError> for Failure {
    fn from(e: ExpansionError) -> Self {
        fail(e)
    }
}

type Run = Result<(u8, String), Failure>;

pub fn run(g: &Global, cmd: Command) -> Outcome {
    let mut ctx = Ctx { g, catalog: None, warnings: String::new() };
    let result = match cmd {
        Command::Check { model, pattern, with_collab } => ctx.check(&model, &pattern, &with_collab),
        Command::Find { model, pattern, maximal, limit } => ctx.find(&model, &pattern, maximal, limit),
        Command::Annotate { model, patterns, output } => ctx.annotate(&model, &patterns, output.as_deref()),
        Command::Expand { pattern, counts, output } => ctx.expand(&pattern, counts.as_deref(), output.as_deref()),
        Command::Solve { pattern, minimal } => ctx.solve(&pattern, minimal),
        Command::Lint { file } => ctx.lint(&file),
        Command::Catalog { command: CatalogCommand::List } => ctx.catalog_list(),
    };
    match result {
        Ok((code, stdout)) => Outcome { code, stdout, stderr: ctx.warnings },
        Err(Failure(msg)) => Outcome { code: INPUT_ERROR, stdout: String::new(), stderr: format!("{}{msg}\n", ctx.warnings) },
    }
}

struct Ctx<'a> {
    g: &'a Global,
    catalog: Option<Catalog>,
    warnings: String,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let line = valid.iter().filter(|b| **b == b'\n').count() + 1;
        let column = valid.iter().rev().take_while(|b| **b != b'\n').count() + 1;
        Failure(format!("{}:{line}:{column}: error: invalid UTF-8", path.display()))
    })
}

fn load_model(path: &Path) -> Result<ModelDocument, Failure> {
    let text = read_text(path)?;
    Ok(parse_model_file(&text, &path.display().to_string())?)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("output serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn annotated(o: &Occurrence) -> AnnotatedOccurrence {
    AnnotatedOccurrence { pattern: o.pattern.clone(), assignment: o.assignment.clone(), bindings: o.bindings.clone() }
}

fn binding_lines(out: &mut String, bindings: &[RoleBinding]) {
    let role_w = bindings.iter().map(|b| b.role.len()).max().unwrap_or(0);
    let elem_w = bindings.iter().map(|b| b.element.len()).max().unwrap_or(0);
    for b in bindings {
        let _ = writeln!(out, "  {:role_w$}  {:elem_w$}  {}#{}", b.role, b.element, b.part, b.replica);
    }
}

#[derive(Serialize)]
struct ViolationOut {
    constraint: String,
    part: String,
    replica: String,
    kind: ViolationKind,
}

#[derive(Serialize)]
struct SyncOut {
    primary: Vec<AnnotatedOccurrence>,
    secondaries: Vec<Vec<AnnotatedOccurrence>>,
    accepted: Vec<SyncTuple>,
    rejected: Vec<SyncRejection>,
}

#[derive(Serialize)]
struct CheckResult {
    pattern: String,
    verdict: Verdict,
    inconclusive_beyond_bound: bool,
    root_matches: usize,
    witness: Option<AnnotatedOccurrence>,
    /// Constraint violations of the first structural occurrence, when the
    /// pattern is not satisfied.
    violations: Vec<ViolationOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sync: Option<SyncOut>,
}

impl CheckResult {
    fn ok(&self) -> bool {
        self.verdict == Verdict::Satisfied && self.sync.as_ref().is_none_or(|s| !s.accepted.is_empty())
    }
}

#[derive(Serialize)]
struct CheckOut<'a> {
    model: String,
    bound: u64,
    results: &'a [CheckResult],
}

fn check_one(model: &TypedGraph, f: &PatternFile, collabs: &[TypedGraph], cfg: &MatchConfig) -> Result<CheckResult, MatchError> {
    let p = &f.primary;
    let s = satisfies(model, p, cfg)?;
    let mut violations = Vec::new();
    if s.verdict != Verdict::Satisfied && !p.constraints.is_empty() {
        let first = find_structural_occurrences(model, p, &cfg.with_max_occurrences(Some(1)))?;
        if let Some(occ) = first.occurrences.first() {
            for v in check_constraints(model, occ, p)?.violations {
                violations.push(ViolationOut { constraint: v.constraint, part: v.part, replica: v.replica, kind: v.kind });
            }
        }
    }
    let sync = if collabs.is_empty() {
        None
    } else {
        let r = check_sync(model, collabs, &f.sync_set(), cfg)?;
        Some(SyncOut {
            primary: r.primary.iter().map(annotated).collect(),
            secondaries: r.secondaries.iter().map(|v| v.iter().map(annotated).collect()).collect(),
            accepted: r.accepted,
            rejected: r.rejected,
        })
    };
    Ok(CheckResult {
        pattern: p.name.clone(),
        verdict: s.verdict,
        inconclusive_beyond_bound: s.verdict == Verdict::Inconclusive,
        root_matches: s.root_matches,
        witness: s.witness.as_ref().map(annotated),
        violations,
        sync,
    })
}

fn check_table(results: &[CheckResult], bound: u64) -> String {
    let mut out = String::new();
    for r in results {
        match (&r.verdict, &r.witness) {
            (Verdict::Satisfied, Some(w)) => {
                let _ = writeln!(out, "{}: satisfied {}", r.pattern, w.assignment);
                binding_lines(&mut out, &w.bindings);
            }
            (Verdict::Inconclusive, _) => {
                let _ = writeln!(out, "{}: inconclusive beyond bound {bound} ({} root matches)", r.pattern, r.root_matches);
            }
            _ => {
                let _ = writeln!(out, "{}: not satisfied ({} root matches)", r.pattern, r.root_matches);
            }
        }
        for v in &r.violations {
            let kind = match v.kind {
                ViolationKind::Forbidden => "forbidden",
                ViolationKind::Unfulfilled => "unfulfilled",
            };
            let _ = writeln!(out, "  violated: \"{}\" at {} ({kind})", v.constraint, v.replica);
        }
        if let Some(s) = &r.sync {
            let _ = writeln!(out, "  sync: {} accepted, {} rejected", s.accepted.len(), s.rejected.len());
            for rej in &s.rejected {
                let others: Vec<String> = rej.tuple.secondaries.iter().map(|i| format!("#{}", i + 1)).collect();
                let _ = writeln!(out, "  rejected #{} with {}: {}", rej.tuple.primary + 1, others.join(", "), rej.reason);
            }
        }
    }
    out
}

#[derive(Serialize)]
struct FindOut {
    occurrences: Vec<AnnotatedOccurrence>,
    beyond_bound: bool,
    truncated: bool,
}

#[derive(Serialize)]
struct PatternSummary {
    pattern: String,
    occurrences: usize,
    beyond_bound: bool,
}

#[derive(Serialize)]
struct AnnotateSummary<'a> {
    output: String,
    patterns: &'a [PatternSummary],
}

#[derive(Serialize)]
struct ProvOut {
    element: String,
    kind: &'static str,
    part: String,
    replica: u64,
    path: Vec<u64>,
    local: String,
}

#[derive(Serialize)]
struct ExpandOut {
    pattern: String,
    assignment: ReplicaAssignment,
    nodes: usize,
    edges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Vec<ProvOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance_file: Option<String>,
}

#[derive(Serialize)]
struct SolveOut {
    pattern: String,
    equations: String,
    system: String,
    bound: u64,
    minimal: bool,
    solutions: Vec<ReplicaAssignment>,
}

#[derive(Serialize)]
struct LintOut<'a> {
    file: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    metamodel: Option<&'static str>,
    patterns: Vec<String>,
    nodes: usize,
    edges: usize,
    feasible: bool,
    warnings: &'a [PatternIssue],
}

fn parse_counts(text: &str, p: &Pattern) -> Result<ReplicaAssignment, Failure> {
    let names: Vec<&str> = p.parts[1..].iter().map(|part| part.name.as_str()).collect();
    let mut a = ReplicaAssignment::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| fail(format!("--counts: expected `part=n`, got `{item}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if !names.contains(&k) {
            return Err(fail(format!("--counts: `{}` has no variable part `{k}` (parts: {})", p.name, names.join(", "))));
        }
        let n = v.parse::<u64>().map_err(|_| fail(format!("--counts: `{v}` is not a replica count")))?;
        a.set(k, n);
    }
    let missing: Vec<&str> = names.iter().copied().filter(|n| a.get(n).is_none()).collect();
    if !missing.is_empty() {
        return Err(fail(format!("--counts: no count for {}", missing.join(", "))));
    }
    Ok(a)
}

impl Ctx<'_> {
    fn cfg(&self) -> MatchConfig {
        MatchConfig::default().with_bound(self.g.bound)
    }

    fn format(&self) -> OutputFormat {
        self.g.format.into()
    }

    fn catalog(&mut self) -> Result<&Catalog, Failure> {
        if self.catalog.is_none() {
            self.catalog = Some(Catalog::locate(self.g.catalog.as_deref())?);
        }
        Ok(self.catalog.as_ref().expect("just loaded"))
    }

    /// A `.pat` file, or the catalog entries whose name, heading or file
    /// stem matches `spec`.
    fn resolve(&mut self, spec: &str) -> Result<Vec<PatternFile>, Failure> {
        let path = Path::new(spec);
        if spec.ends_with(".pat") || path.is_file() {
            let text = read_text(path)?;
            return Ok(vec![parse_pattern_file(&text, spec)?]);
        }
        let found: Vec<PatternFile> = self.catalog()?.lookup(spec).into_iter().map(|i| i.file.clone()).collect();
        if found.is_empty() {
            return Err(fail(format!("unknown pattern `{spec}`; `patternforge catalog list` shows the catalog")));
        }
        Ok(found)
    }

    fn resolve_one(&mut self, spec: &str) -> Result<PatternFile, Failure> {
        let mut found = self.resolve(spec)?;
        if found.len() > 1 {
            let names: Vec<&str> = found.iter().map(|f| f.primary.name.as_str()).collect();
            return Err(fail(format!("`{spec}` names several patterns ({}); pick one", names.join(", "))));
        }
        Ok(found.remove(0))
    }

    fn check(&mut self, model: &Path, spec: &str, collabs: &[PathBuf]) -> Run {
        let doc = load_model(model)?;
        let files = self.resolve(spec)?;
        let collab_graphs = collabs.iter().map(|c| load_model(c).map(|d| d.graph)).collect::<Result<Vec<_>, _>>()?;
        if !collab_graphs.is_empty() {
            if let Some(f) = files.iter().find(|f| f.collaborations.len() != collab_graphs.len()) {
                return Err(fail(format!(
                    "`{}` has {} collaboration pattern(s) but {} collaboration model(s) were given",
                    f.primary.name,
                    f.collaborations.len(),
                    collab_graphs.len()
                )));
            }
        }
        let cfg = self.cfg();
        let results = files
            .par_iter()
            .map(|f| check_one(&doc.graph, f, &collab_graphs, &cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let code = if results.iter().any(CheckResult::ok) { OK } else { FAILED };
        let out = match self.g.format {
            Format::Json => json(&CheckOut { model: model.display().to_string(), bound: self.g.bound, results: &results }),
            Format::Table => check_table(&results, self.g.bound),
        };
        Ok((code, out))
    }

    fn find(&mut self, model: &Path, spec: &str, maximal: bool, limit: Option<usize>) -> Run {
        let doc = load_model(model)?;
        let files = self.resolve(spec)?;
        let mode = if maximal { MatchMode::FindMaximal } else { MatchMode::FindAll };
        let cfg = self.cfg().with_mode(mode).with_max_occurrences(limit);
        let found =
            files.par_iter().map(|f| find_occurrences(&doc.graph, &f.primary, &cfg)).collect::<Result<Vec<Matches>, _>>()?;
        let out = FindOut {
            occurrences: found.iter().flat_map(|m| m.occurrences.iter().map(annotated)).collect(),
            beyond_bound: found.iter().any(|m| m.beyond_bound),
            truncated: found.iter().any(|m| m.truncated),
        };
        let code = if out.occurrences.is_empty() || out.beyond_bound { FAILED } else { OK };
        let text = match self.g.format {
            Format::Json => json(&out),
            Format::Table => {
                let mut s = serialize_annotation(&Annotation { occurrences: out.occurrences.clone() }, OutputFormat::Table);
                if out.beyond_bound {
                    let _ = writeln!(s, "inconclusive beyond bound {}: a part has more candidate replicas", self.g.bound);
                }
                if out.truncated {
                    let _ = writeln!(s, "stopped after {} occurrences", out.occurrences.len());
                }
                s
            }
        };
        Ok((code, text))
    }

    fn annotate(&mut self, model: &Path, patterns: &str, output: Option<&Path>) -> Run {
        let doc = load_model(model)?;
        let metamodel = doc.graph.metamodel().name().to_string();
        let selected: Vec<Pattern> = if patterns.trim() == "all" {
            self.catalog()?
                .items
                .iter()
                .flat_map(|i| std::iter::once(&i.file.primary).chain(&i.file.collaborations))
                .filter(|p| p.metamodel.name() == metamodel)
                .cloned()
                .collect()
        } else {
            let mut v: Vec<Pattern> = Vec::new();
            for spec in patterns.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                for f in self.resolve(spec)? {
                    if !v.iter().any(|p| p.name == f.primary.name) {
                        v.push(f.primary);
                    }
                }
            }
            v
        };
        let cfg = self.cfg().with_mode(MatchMode::FindMaximal);
        let found =
            selected.par_iter().map(|p| find_occurrences(&doc.graph, p, &cfg)).collect::<Result<Vec<Matches>, _>>()?;
        let occurrences: Vec<Occurrence> = found.iter().flat_map(|m| m.occurrences.iter().cloned()).collect();
        let ann = annotate(&doc.graph, &occurrences)?;
        let summary: Vec<PatternSummary> = selected
            .iter()
            .zip(&found)
            .map(|(p, m)| PatternSummary { pattern: p.name.clone(), occurrences: m.occurrences.len(), beyond_bound: m.beyond_bound })
            .collect();
        let code = if summary.iter().any(|s| s.beyond_bound) { FAILED } else { OK };
        let Some(path) = output else {
            let mut text = serialize_annotation(&ann, self.format());
            if self.g.format == Format::Json {
                text.push('\n');
            }
            return Ok((code, text));
        };
        write_file(path, &json(&ann))?;
        let text = match self.g.format {
            Format::Json => json(&AnnotateSummary { output: path.display().to_string(), patterns: &summary }),
            Format::Table => {
                let mut s = format!("wrote {}: {} occurrences\n", path.display(), ann.occurrences.len());
                let w = summary.iter().map(|p| p.pattern.len()).max().unwrap_or(0);
                for p in summary.iter().filter(|p| p.occurrences > 0 || p.beyond_bound) {
                    let flag = if p.beyond_bound { "  inconclusive beyond bound" } else { "" };
                    let _ = writeln!(s, "  {:w$}  {}{flag}", p.pattern, p.occurrences);
                }
                s
            }
        };
        Ok((code, text))
    }

    fn expand(&mut self, spec: &str, counts: Option<&str>, output: Option<&Path>) -> Run {
        let f = self.resolve_one(spec)?;
        let p = &f.primary;
        let a = match counts {
            Some(text) => parse_counts(text, p)?,
            None => match minimal_solutions(&p.expansion_system(), self.g.bound).into_iter().next() {
                Some(a) => a,
                None => {
                    let _ = writeln!(self.warnings, "{}: no replica assignment within bound {}", p.name, self.g.bound);
                    return Ok((FAILED, String::new()));
                }
            },
        };
        let e = expand(p, &a)?;
        let model = print_model(&e.graph);
        let provenance: Vec<ProvOut> = e
            .provenance
            .iter()
            .map(|(el, prov)| ProvOut {
                element: el.to_string(),
                kind: if matches!(el, ElementId::Node(_)) { "node" } else { "edge" },
                part: prov.part.clone(),
                replica: prov.replica,
                path: prov.path.clone(),
                local: prov.local.clone(),
            })
            .collect();
        let mut out = ExpandOut {
            pattern: p.name.clone(),
            assignment: e.assignment.clone(),
            nodes: e.graph.node_count(),
            edges: e.graph.edge_count(),
            model: None,
            provenance: None,
            model_file: None,
            provenance_file: None,
        };
        let Some(path) = output else {
            return Ok(match self.g.format {
                Format::Table => (OK, model),
                Format::Json => {
                    out.model = Some(model);
                    out.provenance = Some(provenance);
                    (OK, json(&out))
                }
            });
        };
        let prov_path = path.with_extension("prov.json");
        write_file(path, &model)?;
        write_file(&prov_path, &json(&provenance))?;
        out.model_file = Some(path.display().to_string());
        out.provenance_file = Some(prov_path.display().to_string());
        let text = match self.g.format {
            Format::Json => json(&out),
            Format::Table => format!(
                "wrote {} ({} nodes, {} edges) and {}\n",
                path.display(),
                out.nodes,
                out.edges,
                prov_path.display()
            ),
        };
        Ok((OK, text))
    }

    fn solve(&mut self, spec: &str, minimal: bool) -> Run {
        let f = self.resolve_one(spec)?;
        let p = &f.primary;
        let sys = p.expansion_system();
        let solutions =
            if minimal { minimal_solutions(&sys, self.g.bound) } else { enumerate_solutions(&sys, self.g.bound) };
        let code = if solutions.is_empty() { FAILED } else { OK };
        let text = match self.g.format {
            Format::Json => json(&SolveOut {
                pattern: p.name.clone(),
                equations: p.equations.to_string(),
                system: sys.to_string(),
                bound: self.g.bound,
                minimal,
                solutions,
            }),
            Format::Table => {
                let kind = if minimal { "minimal solutions" } else { "solutions" };
                let mut s = format!("{}: {}\n{} {kind} within bound {}\n", p.name, p.equations, solutions.len(), self.g.bound);
                for a in &solutions {
                    let _ = writeln!(s, "  {}", a.display_in(sys.variables()));
                }
                s
            }
        };
        Ok((code, text))
    }

    fn lint(&mut self, file: &Path) -> Run {
        let text = read_text(file)?;
        let name = file.display().to_string();
        if file.extension().is_some_and(|x| x == "model") {
            let doc = parse_model_file(&text, &name)?;
            let out = LintOut {
                file: name.clone(),
                kind: "model",
                metamodel: Some(doc.tag.as_str()),
                patterns: Vec::new(),
                nodes: doc.graph.node_count(),
                edges: doc.graph.edge_count(),
                feasible: true,
                warnings: &[],
            };
            return Ok((
                OK,
                match self.g.format {
                    Format::Json => json(&out),
                    Format::Table => format!(
                        "{name}: valid {} model, {} nodes, {} edges\n",
                        doc.tag.as_str(),
                        out.nodes,
                        out.edges
                    ),
                },
            ));
        }
        let f = parse_pattern_file(&text, &name)?;
        // feasibility is reported below against --bound
        let warnings: Vec<PatternIssue> = f
            .sync_set()
            .validate()
            .issues
            .into_iter()
            .filter(|i| i.severity == Severity::Warning && i.kind != patternforge::pattern::IssueKind::Infeasible)
            .collect();
        for w in &warnings {
            let _ = writeln!(self.warnings, "{name}: {w}");
        }
        let members: Vec<&Pattern> = std::iter::once(&f.primary).chain(&f.collaborations).collect();
        let infeasible: Vec<&str> =
            members.iter().filter(|p| !feasible_within(p, self.g.bound)).map(|p| p.name.as_str()).collect();
        let out = LintOut {
            file: name.clone(),
            kind: "pattern",
            metamodel: None,
            patterns: members.iter().map(|p| p.name.clone()).collect(),
            nodes: members.iter().map(|p| p.parts.iter().map(|part| part.graph.node_count()).sum::<usize>()).sum(),
            edges: members.iter().map(|p| p.parts.iter().map(|part| part.graph.edge_count()).sum::<usize>()).sum(),
            feasible: infeasible.is_empty(),
            warnings: &warnings,
        };
        let text = match self.g.format {
            Format::Json => json(&out),
            Format::Table if infeasible.is_empty() => format!("{name}: valid, equations feasible\n"),
            Format::Table => format!(
                "{name}: valid, equations infeasible within bound {} ({})\n",
                self.g.bound,
                infeasible.join(", ")
            ),
        };
        Ok((if infeasible.is_empty() { OK } else { FAILED }, text))
    }

    fn catalog_list(&mut self) -> Run {
        let format = self.g.format;
        let c = self.catalog()?;
        let entries: Vec<_> = c.items.iter().map(|i| &i.entry).collect();
        let text = match format {
            Format::Json => json(&entries),
            Format::Table => {
                let name_w = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
                let title_w = entries.iter().map(|e| e.title.len()).max().unwrap_or(0);
                let mut s = String::new();
                for e in &entries {
                    let mut notes = Vec::new();
                    if e.has_collaboration {
                        notes.push("collaboration");
                    }
                    if e.derived {
                        notes.push("derived equations");
                    }
                    let notes = if notes.is_empty() { String::new() } else { format!("  [{}]", notes.join(", ")) };
                    let _ = writeln!(s, "{:name_w$}  {:title_w$}  {}{notes}", e.name, e.title, e.equations);
                }
                s
            }
        };
        Ok((OK, text))
    }
}
