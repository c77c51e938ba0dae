use std::path::PathBuf;
use std::sync::Arc;

use malcat_core::corpus;
use malcat_core::extensions::GroupView;
use malcat_core::io;

fn path(stem: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{stem}.json"))
}

#[test]
fn algebra_files_match_constructors() {
    for (stem, alg) in corpus::algebras() {
        let from_file = io::parse_algebra(path(stem)).unwrap();
        assert_eq!(from_file, alg, "{stem}");
    }
}

#[test]
fn algebra_files_are_in_stable_form() {
    for (stem, alg) in corpus::algebras() {
        let text = std::fs::read_to_string(path(stem)).unwrap();
        assert_eq!(text, io::to_stable_string(&io::algebra_to_json(&alg)), "{stem}");
    }
}

#[test]
fn extension_files_match_constructors() {
    for (stem, e) in corpus::extensions() {
        let from_file = io::parse_extension(path(stem)).unwrap();
        assert_eq!(from_file.iota(), e.iota(), "{stem}");
        assert_eq!(from_file.pi(), e.pi(), "{stem}");
        assert!(from_file.x().same_group(e.x()), "{stem}");
        assert!(from_file.a().same_group(e.a()) && from_file.q().same_group(e.q()), "{stem}");
    }
}

#[test]
fn inversion_action_file() {
    let z2 = GroupView::new(Arc::new(corpus::cyclic(2))).unwrap();
    let z3 = GroupView::new(Arc::new(corpus::cyclic(3))).unwrap();
    let act = io::parse_action(&z2, &z3, path("action_q2_a3_inversion")).unwrap();
    assert!(!act.is_trivial());
    assert_eq!(act.table, vec![0, 1, 2, 0, 2, 1]);
}
