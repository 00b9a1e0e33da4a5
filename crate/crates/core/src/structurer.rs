//! Dependency graph construction and graph-to-forest resolution.
//!
//! The dependency graph of a model is generally a DAG. To lay it out as
//! indented blocks it has to become a forest of trees:
//!
//! * a shared element without precedents (an input) is simply duplicated at
//!   every usage site;
//! * a shared function is moved into its own module, and every usage site
//!   holds a [`NodeKind::ModuleRef`] to it.
//!
//! [`ResolutionMode::Strict`] extracts every shared function.
//! [`ResolutionMode::Figure7Compat`] extracts a shared function only when it
//! would otherwise appear twice inside the same module, and expands it inline
//! when its usages fall in different modules.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::model::{Decl, Ident, InputDecl, ModelSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("model contains dependency cycles: {}", format_cycles(.0))]
    Cycle(Vec<Vec<Ident>>),
    #[error("no root element: every function is referenced by another function")]
    NoRoot,
}

fn format_cycles(cycles: &[Vec<Ident>]) -> String {
    cycles
        .iter()
        .map(|c| {
            let mut ids: Vec<&str> = c.iter().map(Ident::as_str).collect();
            ids.push(c[0].as_str());
            ids.join(" -> ")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphNodeKind {
    Function,
    Input,
    Range,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: Ident,
    pub kind: GraphNodeKind,
}

/// An edge `(precedent, dependent)`: `dependent`'s formula references
/// `precedent`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub precedent: Ident,
    pub dependent: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    pub nodes: Vec<GraphNode>,
    /// Grouped by dependent in declaration order; within a dependent, in
    /// first-occurrence order of the references in its formula.
    pub edges: Vec<Edge>,
}

impl DepGraph {
    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.id.as_str() == id)
    }

    pub fn precedents(&self, id: &str) -> Vec<&Ident> {
        self.edges
            .iter()
            .filter(|e| e.dependent.as_str() == id)
            .map(|e| &e.precedent)
            .collect()
    }

    pub fn dependents(&self, id: &str) -> Vec<&Ident> {
        self.edges
            .iter()
            .filter(|e| e.precedent.as_str() == id)
            .map(|e| &e.dependent)
            .collect()
    }

    pub fn has_edge(&self, precedent: &str, dependent: &str) -> bool {
        self.edges
            .iter()
            .any(|e| e.precedent.as_str() == precedent && e.dependent.as_str() == dependent)
    }
}

pub fn build_graph(spec: &ModelSpec) -> DepGraph {
    let mut nodes = Vec::new();
    for decl in &spec.input_section {
        let kind = match decl {
            InputDecl::Scalar(_) => GraphNodeKind::Input,
            InputDecl::Range(_) => GraphNodeKind::Range,
        };
        nodes.push(GraphNode {
            id: decl.id().clone(),
            kind,
        });
    }
    let mut edges = Vec::new();
    for f in &spec.functions {
        nodes.push(GraphNode {
            id: f.id.clone(),
            kind: GraphNodeKind::Function,
        });
        for precedent in f.body.distinct_refs() {
            edges.push(Edge {
                precedent: precedent.clone(),
                dependent: f.id.clone(),
            });
        }
    }
    DepGraph { nodes, edges }
}

/// Functions that no other element references, in declaration order.
pub fn find_roots(g: &DepGraph) -> Result<Vec<Ident>, StructureError> {
    let referenced: HashSet<&str> = g.edges.iter().map(|e| e.precedent.as_str()).collect();
    let functions: Vec<&GraphNode> = g
        .nodes
        .iter()
        .filter(|n| n.kind == GraphNodeKind::Function)
        .collect();
    let roots: Vec<Ident> = functions
        .iter()
        .filter(|n| !referenced.contains(n.id.as_str()))
        .map(|n| n.id.clone())
        .collect();
    if roots.is_empty() && !functions.is_empty() {
        return Err(StructureError::NoRoot);
    }
    Ok(roots)
}

/// Kahn's algorithm over "dependent depends on precedent"; returns node ids
/// in evaluation order (ties broken by node order), or `None` when cyclic.
pub fn topo_order(g: &DepGraph) -> Option<Vec<Ident>> {
    let index: HashMap<&str, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut indegree = vec![0usize; g.nodes.len()];
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); g.nodes.len()];
    for e in &g.edges {
        let (Some(&p), Some(&d)) = (
            index.get(e.precedent.as_str()),
            index.get(e.dependent.as_str()),
        ) else {
            continue;
        };
        indegree[d] += 1;
        out_edges[p].push(d);
    }
    let mut ready: BTreeSet<usize> = (0..g.nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(g.nodes.len());
    while let Some(i) = ready.pop_first() {
        order.push(g.nodes[i].id.clone());
        for &d in &out_edges[i] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert(d);
            }
        }
    }
    (order.len() == g.nodes.len()).then_some(order)
}

/// Every elementary cycle, each listed once starting at its smallest
/// identifier and following "depends on" edges. Sorted.
pub fn detect_cycles(g: &DepGraph) -> Vec<Vec<Ident>> {
    if topo_order(g).is_some() {
        return Vec::new();
    }
    // adjacency: node -> the nodes it depends on
    let mut ids: Vec<&Ident> = g.nodes.iter().map(|n| &n.id).collect();
    ids.sort();
    let rank: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for e in &g.edges {
        if let (Some(&d), Some(&p)) = (
            rank.get(e.dependent.as_str()),
            rank.get(e.precedent.as_str()),
        ) {
            if !adj[d].contains(&p) {
                adj[d].push(p);
            }
        }
    }
    let mut cycles = Vec::new();
    for start in 0..ids.len() {
        let mut path = vec![start];
        let mut on_path = vec![false; ids.len()];
        on_path[start] = true;
        cycles_from(start, start, &adj, &mut path, &mut on_path, &mut |cycle| {
            cycles.push(cycle.iter().map(|&i| ids[i].clone()).collect::<Vec<_>>())
        });
    }
    cycles.sort();
    cycles
}

fn cycles_from(
    start: usize,
    at: usize,
    adj: &[Vec<usize>],
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    emit: &mut impl FnMut(&[usize]),
) {
    for &next in &adj[at] {
        if next == start {
            emit(path);
        } else if next > start && !on_path[next] {
            on_path[next] = true;
            path.push(next);
            cycles_from(start, next, adj, path, on_path, emit);
            path.pop();
            on_path[next] = false;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Function,
    Leaf,
    Constant,
    Iteration,
    Selection,
    ModuleRef,
    IndexedRef,
}

impl NodeKind {
    /// Kinds that are leaves of the structure by definition.
    pub fn is_terminal(self) -> bool {
        !matches!(self, NodeKind::Function | NodeKind::Selection)
    }
}

pub fn classify_node(id: &str, spec: &ModelSpec) -> Option<NodeKind> {
    Some(match spec.lookup(id)? {
        Decl::Input(item) if item.constant => NodeKind::Constant,
        Decl::Input(_) => NodeKind::Leaf,
        Decl::Range(_) => NodeKind::Iteration,
        Decl::Function(f) if f.body.is_select() => NodeKind::Selection,
        Decl::Function(_) => NodeKind::Function,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureNode {
    pub kind: NodeKind,
    /// The model element this node stands for. For a `ModuleRef`, the
    /// function at the root of the referenced module.
    pub id: Ident,
    pub label: String,
    pub children: Vec<StructureNode>,
    pub depth: usize,
    /// Name of the referenced module (`ModuleRef` only).
    pub module: Option<String>,
    /// Position of this node in a pre-order walk of the whole forest.
    pub key: usize,
}

impl StructureNode {
    /// Pre-order walk of this subtree.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a StructureNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    /// The main module may have several roots; extracted modules have one.
    pub roots: Vec<StructureNode>,
}

impl Module {
    pub fn nodes(&self) -> Vec<&StructureNode> {
        let mut out = Vec::new();
        for r in &self.roots {
            r.walk(&mut |n| out.push(n));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureForest {
    /// Main module first.
    pub modules: Vec<Module>,
}

impl StructureForest {
    pub fn nodes(&self) -> Vec<&StructureNode> {
        self.modules.iter().flat_map(|m| m.nodes()).collect()
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolutionMode {
    #[default]
    Strict,
    Figure7Compat,
}

pub const MAIN_MODULE: &str = "Main";

pub fn resolve_to_forest(
    g: &DepGraph,
    spec: &ModelSpec,
    mode: ResolutionMode,
) -> Result<StructureForest, StructureError> {
    let cycles = detect_cycles(g);
    if !cycles.is_empty() {
        return Err(StructureError::Cycle(cycles));
    }
    let roots = find_roots(g)?;
    match mode {
        ResolutionMode::Strict => {
            let extracted: HashSet<Ident> = g
                .nodes
                .iter()
                .filter(|n| n.kind == GraphNodeKind::Function)
                .filter(|n| {
                    let deps: HashSet<&Ident> = g.dependents(n.id.as_str()).into_iter().collect();
                    deps.len() >= 2 && !g.precedents(n.id.as_str()).is_empty()
                })
                .map(|n| n.id.clone())
                .collect();
            Ok(Builder::new(spec, g, &extracted).build(&roots))
        }
        ResolutionMode::Figure7Compat => {
            let mut extracted = HashSet::new();
            loop {
                let forest = Builder::new(spec, g, &extracted).build(&roots);
                match first_duplicated_function(&forest) {
                    Some(id) => {
                        extracted.insert(id);
                    }
                    None => return Ok(forest),
                }
            }
        }
    }
}

/// First function (in pre-order) that occurs more than once inside a single
/// module. Its first occurrence has no duplicated ancestor, so extracting it
/// never removes a duplication that only exists because of another one.
fn first_duplicated_function(forest: &StructureForest) -> Option<Ident> {
    for module in &forest.modules {
        let nodes = module.nodes();
        let mut counts: HashMap<&Ident, usize> = HashMap::new();
        for n in &nodes {
            if matches!(n.kind, NodeKind::Function | NodeKind::Selection) {
                *counts.entry(&n.id).or_default() += 1;
            }
        }
        if let Some(n) = nodes.iter().find(|n| {
            matches!(n.kind, NodeKind::Function | NodeKind::Selection) && counts[&n.id] >= 2
        }) {
            return Some(n.id.clone());
        }
    }
    None
}

struct Builder<'a> {
    spec: &'a ModelSpec,
    graph: &'a DepGraph,
    extracted: &'a HashSet<Ident>,
    module_names: HashMap<Ident, String>,
    used_names: HashSet<String>,
    queue: VecDeque<Ident>,
}

impl<'a> Builder<'a> {
    fn new(spec: &'a ModelSpec, graph: &'a DepGraph, extracted: &'a HashSet<Ident>) -> Self {
        Builder {
            spec,
            graph,
            extracted,
            module_names: HashMap::new(),
            used_names: HashSet::from([MAIN_MODULE.to_string()]),
            queue: VecDeque::new(),
        }
    }

    fn build(mut self, roots: &[Ident]) -> StructureForest {
        let main_roots = roots.iter().map(|r| self.expand(r, 0, true)).collect();
        let mut modules = vec![Module {
            name: MAIN_MODULE.to_string(),
            roots: main_roots,
        }];
        while let Some(id) = self.queue.pop_front() {
            let root = self.expand(&id, 0, true);
            modules.push(Module {
                name: self.module_names[&id].clone(),
                roots: vec![root],
            });
        }
        let mut forest = StructureForest { modules };
        let mut key = 0;
        for m in &mut forest.modules {
            for r in &mut m.roots {
                assign_keys(r, &mut key);
            }
        }
        forest
    }

    fn module_name(&mut self, id: &Ident) -> String {
        if let Some(name) = self.module_names.get(id) {
            return name.clone();
        }
        let mut name = id.to_string();
        let mut n = 2;
        while self.used_names.contains(&name) {
            name = format!("{id}{n}");
            n += 1;
        }
        self.used_names.insert(name.clone());
        self.module_names.insert(id.clone(), name.clone());
        self.queue.push_back(id.clone());
        name
    }

    fn expand(&mut self, id: &Ident, depth: usize, is_root: bool) -> StructureNode {
        let kind = classify_node(id.as_str(), self.spec).expect("graph ids are declared");
        let label = match self.spec.lookup(id.as_str()) {
            Some(Decl::Input(i)) => i.workings_label().to_string(),
            Some(Decl::Range(r)) => r.label.clone(),
            Some(Decl::Function(f)) => f.workings_label().to_string(),
            None => id.to_string(),
        };
        let mut node = StructureNode {
            kind,
            id: id.clone(),
            label,
            children: Vec::new(),
            depth,
            module: None,
            key: 0,
        };
        if kind.is_terminal() {
            return node;
        }
        if !is_root && self.extracted.contains(id) {
            node.kind = NodeKind::ModuleRef;
            node.module = Some(self.module_name(id));
            return node;
        }
        let precedents: Vec<Ident> = self
            .graph
            .precedents(id.as_str())
            .into_iter()
            .cloned()
            .collect();
        node.children = precedents
            .iter()
            .map(|p| self.expand(p, depth + 1, false))
            .collect();
        node
    }
}

fn assign_keys(node: &mut StructureNode, next: &mut usize) {
    node.key = *next;
    *next += 1;
    for c in &mut node.children {
        assign_keys(c, next);
    }
}

/// ASCII rendering used by the `tree` command: two spaces per level,
/// `*` after iterations, `C` after constants, `o` after selections and
/// `→M` after module references.
pub fn render_tree(forest: &StructureForest) -> String {
    let mut out = String::new();
    for m in &forest.modules {
        let _ = writeln!(out, "[{}]", m.name);
        for n in m.nodes() {
            let marker = match n.kind {
                NodeKind::Iteration => "*".to_string(),
                NodeKind::Constant => " C".to_string(),
                NodeKind::Selection => " o".to_string(),
                NodeKind::ModuleRef => format!(" →M {}", n.module.as_deref().unwrap_or("")),
                NodeKind::IndexedRef => "[i]".to_string(),
                NodeKind::Function | NodeKind::Leaf => String::new(),
            };
            let _ = writeln!(out, "{}{}{}", "  ".repeat(n.depth + 1), n.label, marker);
        }
    }
    out
}
