use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use ssc_core::{
    build_graph, load, resolve_to_forest, NodeKind, ResolutionMode, StructureForest, StructureNode,
};
use ssc_testkit::generate_model;

const SHARED: &str = include_str!("../../../fixtures/shared_precedents.ssm");

fn forest(src: &str, mode: ResolutionMode) -> StructureForest {
    let spec = load(src).unwrap();
    resolve_to_forest(&build_graph(&spec), &spec, mode).unwrap()
}

fn shape(n: &StructureNode) -> String {
    let mut s = n.id.to_string();
    match n.kind {
        NodeKind::ModuleRef => s = format!("@{}", n.module.as_deref().unwrap()),
        NodeKind::Iteration => s.push('*'),
        _ => {}
    }
    if !n.children.is_empty() {
        let kids: Vec<String> = n.children.iter().map(shape).collect();
        s = format!("{s}({})", kids.join(","));
    }
    s
}

fn shapes(f: &StructureForest) -> Vec<(String, Vec<String>)> {
    f.modules
        .iter()
        .map(|m| (m.name.clone(), m.roots.iter().map(shape).collect()))
        .collect()
}

/// Every node is reached once from a single parent, depths increase by
/// one per level, and pre-order keys are unique and consecutive.
fn assert_tree(f: &StructureForest) {
    fn walk(n: &StructureNode, depth: usize, keys: &mut Vec<usize>) {
        assert_eq!(n.depth, depth, "{}", n.id);
        keys.push(n.key);
        if n.kind.is_terminal() {
            assert!(n.children.is_empty(), "terminal {} has children", n.id);
        }
        for c in &n.children {
            walk(c, depth + 1, keys);
        }
    }
    let mut keys = Vec::new();
    for m in &f.modules {
        for r in &m.roots {
            walk(r, 0, &mut keys);
        }
    }
    let expected: Vec<usize> = (0..keys.len()).collect();
    assert_eq!(keys, expected);
}

fn module_edges(f: &StructureForest) -> BTreeMap<String, BTreeSet<String>> {
    let mut edges = BTreeMap::new();
    for m in &f.modules {
        let targets: BTreeSet<String> = m
            .nodes()
            .into_iter()
            .filter_map(|n| n.module.clone())
            .collect();
        edges.insert(m.name.clone(), targets);
    }
    edges
}

fn assert_module_dag(f: &StructureForest) {
    let edges = module_edges(f);
    let mut done = BTreeSet::new();
    let mut remaining: BTreeSet<&String> = edges.keys().collect();
    while !remaining.is_empty() {
        let ready: Vec<&String> = remaining
            .iter()
            .copied()
            .filter(|m| {
                edges[*m]
                    .iter()
                    .all(|t| done.contains(t) || !edges.contains_key(t))
            })
            .collect();
        assert!(
            !ready.is_empty(),
            "module references form a cycle: {edges:?}"
        );
        for m in ready {
            remaining.remove(m);
            done.insert(m.clone());
        }
    }
}

#[test]
fn strict_extracts_every_shared_function() {
    let f = forest(SHARED, ResolutionMode::Strict);
    assert_eq!(
        shapes(&f),
        vec![
            ("Main".to_string(), vec!["A(B(@D),C(@D,@G))".to_string()]),
            ("D".to_string(), vec!["D(E,F(@G))".to_string()]),
            ("G".to_string(), vec!["G(H*)".to_string()]),
        ]
    );
    assert_tree(&f);
    assert_module_dag(&f);
}

#[test]
fn compat_mode_keeps_g_inline() {
    let f = forest(SHARED, ResolutionMode::Figure7Compat);
    assert_eq!(
        shapes(&f),
        vec![
            ("Main".to_string(), vec!["A(B(@D),C(@D,G(H*)))".to_string()]),
            ("D".to_string(), vec!["D(E,F(G(H*)))".to_string()]),
        ]
    );
    assert_tree(&f);
    assert_module_dag(&f);
}

#[test]
fn shared_precedent_free_elements_are_duplicated() {
    let f = forest(SHARED, ResolutionMode::Strict);
    let h: Vec<_> = f
        .nodes()
        .into_iter()
        .filter(|n| n.id.as_str() == "H")
        .collect();
    assert_eq!(h.len(), 1);
    let f = forest(SHARED, ResolutionMode::Figure7Compat);
    let h: Vec<_> = f
        .nodes()
        .into_iter()
        .filter(|n| n.id.as_str() == "H")
        .collect();
    assert_eq!(h.len(), 2);
    assert!(h.iter().all(|n| n.kind == NodeKind::Iteration));
}

#[test]
fn trading_account_is_a_single_tree() {
    let f = forest(ssc_testkit::TRADING_PL, ResolutionMode::Strict);
    assert_eq!(f.modules.len(), 1);
    assert_eq!(f.modules[0].roots.len(), 1);
    assert_eq!(
        shape(&f.modules[0].roots[0]),
        "UnappropriatedProfitsCarriedToNextYear(NetProfit(GrossProfit(Sales,\
         CostOfGoodsSold(OpeningStock,Purchases,CarriageInwards),ClosingStock),\
         TotalExpenses(Expenses*)),UnappropriatedProfitsFromLastYear,\
         TotalAppropriations(Appropriations*))"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn forests_are_trees(seed in any::<u64>()) {
        let spec = generate_model(seed);
        let g = build_graph(&spec);
        for mode in [ResolutionMode::Strict, ResolutionMode::Figure7Compat] {
            let f = resolve_to_forest(&g, &spec, mode).unwrap();
            assert_tree(&f);
            assert_module_dag(&f);
            prop_assert_eq!(&f, &resolve_to_forest(&g, &spec, mode).unwrap());
        }
    }

    #[test]
    fn strict_places_each_function_once(seed in any::<u64>()) {
        let spec = generate_model(seed);
        let f = resolve_to_forest(&build_graph(&spec), &spec, ResolutionMode::Strict).unwrap();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for n in f.nodes() {
            if matches!(n.kind, NodeKind::Function | NodeKind::Selection) {
                *seen.entry(n.id.to_string()).or_default() += 1;
            }
        }
        for func in &spec.functions {
            prop_assert_eq!(seen.get(func.id.as_str()).copied(), Some(1), "{}", func.id);
        }
    }
}
