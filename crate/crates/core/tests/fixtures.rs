mod common;

use briefbench::dataset::split_check;
use briefbench::validate_record;
use briefbench::workbench::Brief;
use common::Fixtures;

#[test]
fn dataset_fixture_validates_clean() {
    let fx = Fixtures::load();
    assert_eq!(fx.dataset.records.len(), 20);
    for r in &fx.dataset.records {
        let report = validate_record(r, &fx.blocklist, &|u: &str| fx.index.text_by_url(u));
        assert!(report.is_clean(), "{}: {:?}", r.claim_id, report.violations);
    }
    assert!(split_check(&fx.dataset).is_clean());
}

#[test]
fn claims_fixture_matches_test_split() {
    let fx = Fixtures::load();
    assert_eq!(fx.claims.len(), 10);
    for c in &fx.claims {
        let rec = fx.dataset.get(&c.claim_id).expect("claim in dataset");
        assert_eq!(rec.claim, c.text);
    }
}

#[test]
fn no_fixture_brief_cites_a_blocked_url() {
    let fx = Fixtures::load();
    let briefer = fx.briefer();
    for c in &fx.claims {
        let brief = Brief::Qa(briefer.generate_qabrief(c));
        for u in brief.urls() {
            assert!(!fx.blocklist.is_blocked(u), "{}: {u}", c.claim_id);
        }
    }
}
