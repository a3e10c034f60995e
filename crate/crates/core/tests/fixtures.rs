use wikibridge_core::markup::{parse_page, serialize_page, PageSource};
use wikibridge_core::ontology::load_ontology;
use wikibridge_core::semantics::{check_page, lower_page, recompute_inferred, ValidationReport};
use wikibridge_core::store::QuadStore;
use wikibridge_testkit::fixtures::{clean_pages, corpus, FAULTS, ONTOLOGY};

fn check_in(store: &QuadStore, title: &str, text: &str) -> ValidationReport {
    let ont = load_ontology(ONTOLOGY).unwrap();
    let parsed = parse_page(&PageSource::main(title, text).unwrap()).unwrap();
    let lowered = lower_page(&parsed, 1, "tester", "2024-01-01T00:00:00Z");
    check_page(&parsed, &lowered, &ont, store)
}

fn clean_store() -> QuadStore {
    let ont = load_ontology(ONTOLOGY).unwrap();
    let mut store = QuadStore::new();
    for (title, text) in clean_pages() {
        let parsed = parse_page(&PageSource::main(title, text).unwrap()).unwrap();
        store.extend(&lower_page(&parsed, 1, "tester", "2024-01-01T00:00:00Z").store_quads());
    }
    recompute_inferred(&mut store, &ont);
    store
}

#[test]
fn ontology_has_no_warnings() {
    assert!(load_ontology(ONTOLOGY).unwrap().validate().is_empty());
}

#[test]
fn clean_pages_conform() {
    let store = clean_store();
    let pages = clean_pages();
    assert_eq!(pages.len(), 20);
    for (title, text) in pages {
        let report = check_in(&store, &title, &text);
        assert!(report.conforms(), "{title}:\n{}", report.to_text());
    }
}

#[test]
fn each_fault_yields_one_violation_of_its_kind() {
    let store = clean_store();
    for (title, text) in clean_pages() {
        for (kind, block) in FAULTS {
            let report = check_in(&store, &title, &format!("{text}{block}\n"));
            assert_eq!(report.violations.len(), 1, "{title} + {block}:\n{}", report.to_text());
            assert_eq!(report.violations[0].kind, kind, "{title} + {block}");
        }
    }
}

#[test]
fn corpus_round_trips() {
    let pages = corpus();
    assert!(pages.len() >= 50);
    for (name, text) in pages {
        let parsed = parse_page(&PageSource::main(name.clone(), text.clone()).unwrap())
            .unwrap_or_else(|d| panic!("{name}: {d:?}"));
        assert_eq!(serialize_page(&parsed).text, text, "{name}");
    }
}
