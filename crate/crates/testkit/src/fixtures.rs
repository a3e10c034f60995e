//! A small archaeology wiki: ontology, twenty conforming pages, one
//! fault per violation kind, and a bulk page generator.

use std::path::PathBuf;

use wikibridge_core::semantics::ViolationKind;

pub const ONTOLOGY: &str = r#"# Archaeology
class Entity
class Place subclassof Entity
class Site subclassof Place
class Structure subclassof Entity
class Building subclassof Structure
class Church subclassof Building
class Artifact subclassof Entity
class Period subclassof Entity
class Trench subclassof Place

datatype property name domain Entity range string max 1
datatype property note domain Entity range string
datatype property height domain Building range decimal max 1
datatype property depth domain Trench range decimal
datatype property material domain Artifact range string
datatype property discovered domain Artifact range date
datatype property start domain Period range integer
datatype property end domain Period range integer
datatype property listed domain Structure range boolean
object property locatedIn domain Structure range Place min 1
object property foundAt domain Artifact range Site
object property period domain Entity range Period

relation Dating
  role method : string required
  role year : integer
  role period : Period
relation Excavation
  role site : Site required
  role year : integer required
  role director : string

rule "dating-needs-year"
  when { (?d, rdf:type, wb:onto/Dating) }
  expect { (?d, wb:onto/year, ?y) }
"#;

const SITES: [(&str, &str); 4] = [
    ("Tell Abu", "A settlement mound on the river terrace."),
    ("Kastro", "Hilltop fortification with two building phases."),
    ("Old Harbour", "Submerged quay walls, surveyed by divers."),
    ("Saint Gall Field", "Ploughed field with scattered surface finds."),
];

const BUILDINGS: [(&str, &str, &str, &str); 6] = [
    ("St Martin", "Church", "Kastro", "12.5"),
    ("St Ursula", "Church", "Saint Gall Field", "18"),
    ("Granary", "Building", "Tell Abu", "6.25"),
    ("Harbour Tower", "Building", "Old Harbour", "21.0"),
    ("Chapel of Kastro", "Church", "Kastro", "7.5"),
    ("Mill House", "Building", "Saint Gall Field", "9"),
];

const ARTIFACTS: [(&str, &str, &str, &str); 6] = [
    ("Bronze Fibula", "bronze", "Kastro", "1998-07-14"),
    ("Amphora 12", "ceramic", "Old Harbour", "2003-05-02"),
    ("Seal Stone", "steatite", "Tell Abu", "1987-09-30"),
    ("Iron Key", "iron", "Saint Gall Field", "2011-04-18"),
    ("Glass Bead", "glass", "Tell Abu", "1991-08-09"),
    ("Coin Hoard", "silver", "Kastro", "2015-10-21"),
];

const TRENCHES: [(&str, &str); 4] = [
    ("Trench A", "1.8"),
    ("Trench B", "2.25"),
    ("Trench C", "0.9"),
    ("Trench D", "3"),
];

/// Twenty pages that together satisfy [`ONTOLOGY`] without violations.
pub fn clean_pages() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (i, (name, desc)) in SITES.iter().enumerate() {
        out.push((
            name.to_string(),
            format!(
                "{desc}\n{{{{#ann: type=Site|name=\"{name}\"|note=\"survey {i}\"}}}}\n\
                 {{{{#rel: Excavation|site=[[{name}]]|year={}|director=\"Team {i}\"}}}}\n",
                1960 + 7 * i
            ),
        ));
    }
    for (i, (name, class, site, height)) in BUILDINGS.iter().enumerate() {
        out.push((
            name.to_string(),
            format!(
                "The {name} stands at [[{site}]].\n\
                 {{{{#ann: type={class}|name=\"{name}\"|height={height}|locatedIn=[[{site}]]|listed={}}}}}\n\
                 {{{{#ann: period={{{{#ann: type=Period|start={}|end={}}}}}}}}}\n",
                i % 2 == 0,
                1100 + 50 * i,
                1180 + 50 * i
            ),
        ));
    }
    for (i, (name, material, site, date)) in ARTIFACTS.iter().enumerate() {
        out.push((
            name.to_string(),
            format!(
                "Find record.\n\
                 {{{{#ann: type=Artifact|name=\"{name}\"|material=\"{material}\"|foundAt=[[{site}]]|discovered={date}}}}}\n\
                 {{{{#rel: Dating|method=\"typology\"|year={}|period={{{{#ann: type=Period|start={}}}}}}}}}\n",
                300 + 90 * i,
                250 + 90 * i
            ),
        ));
    }
    for (name, depth) in TRENCHES {
        out.push((name.to_string(), format!("{{{{#ann: type=Trench|name=\"{name}\"|depth={depth}}}}}\nSections drawn.\n")));
    }
    out
}

/// One injectable block per violation kind. Appended to any clean page,
/// each produces exactly one violation of its kind.
pub const FAULTS: [(ViolationKind, &str); 6] = [
    (ViolationKind::UndefinedTerm, "{{#ann: colour=\"red\"}}"),
    (ViolationKind::DomainViolation, "{{#ann: start=1200}}"),
    (ViolationKind::DatatypeViolation, "{{#ann: note=42}}"),
    (ViolationKind::CardinalityViolation, "{{#ann: name=\"Second name\"}}"),
    (ViolationKind::NAryArity, "{{#rel: Dating|year=850}}"),
    (ViolationKind::RuleViolation, "{{#rel: Dating|method=\"C14\"|period={{#ann: type=Period|start=900}}}}"),
];

/// A deterministic page with roughly twenty annotation quads.
pub fn bulk_page(i: usize) -> (String, String) {
    let title = format!("Record {i:04}");
    let site = SITES[i % SITES.len()].0;
    let text = format!(
        "Bulk record {i}.\n\
         {{{{#ann: type=Artifact|name=\"{title}\"|material=\"m{}\"|foundAt=[[{site}]]|discovered=20{:02}-0{}-1{}}}}}\n\
         {{{{#ann: note=\"catalogue {}\"|note=\"box {}\"|period={{{{#ann: type=Period|start={}|end={}}}}}}}}}\n\
         {{{{#rel: Dating|method=\"stratigraphy\"|year={}|period={{{{#ann: type=Period|start={}}}}}}}}}\n\
         Notes follow.\n",
        i % 17,
        i % 24,
        1 + i % 9,
        i % 9,
        i * 3,
        i % 50,
        100 + i % 700,
        900 + i % 700,
        i % 2000,
        i % 1500
    );
    (title, text)
}

/// Directory of the hand-written round-trip corpus.
pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// The corpus pages as `(file stem, text)`, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "wiki"))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, std::fs::read_to_string(&p).expect("corpus page"))
        })
        .collect();
    out.sort();
    out
}
