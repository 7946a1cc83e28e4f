mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use briefbench::claim::{Difficulty, Label};
use briefbench::workbench::events::{outcomes_from_log, read_events, EventKind};
use briefbench::workbench::http::router;
use briefbench::workbench::{
    report_from_state, study_dir, Brief, Condition, PlanError, StudyPlan, Verdict, Workbench, WorkbenchError,
};
use common::Fixtures;

fn plan(conditions: Vec<Condition>, repetitions: usize) -> StudyPlan {
    StudyPlan {
        study_id: Some("s".into()),
        claims: vec!["c01".into(), "c02".into(), "c03".into()],
        split: None,
        conditions,
        repetitions,
        seed: 3,
    }
}

fn verdict(label: Label) -> Verdict {
    Verdict {
        label,
        justification: "The brief links to an encyclopedia article whose account of the history directly supports the rating I chose for this claim here."
            .into(),
        difficulty: Difficulty::Easy,
    }
}

#[test]
fn every_condition_gets_the_matching_brief() {
    let fx = Fixtures::load();
    let wb = Workbench::new(fx.resources());
    wb.create_study(&plan(Condition::ALL.to_vec(), 1)).unwrap();
    for i in 0..15 {
        let p = wb.start_session("s", &format!("e{i}")).unwrap();
        match (p.condition, &p.brief) {
            (Condition::SearchOnly, None) => {}
            (Condition::PassageBrief, Some(Brief::Passage(_))) => {}
            (Condition::EntityBrief, Some(Brief::Entity(_))) => {}
            (Condition::QabriefGenerated, Some(Brief::Qa(b))) => assert_ne!(b.generator_id, "gold"),
            (Condition::QabriefGold, Some(Brief::Qa(b))) => assert_eq!(b.generator_id, "gold"),
            other => panic!("unexpected brief {other:?}"),
        }
    }
    assert!(matches!(wb.start_session("s", "late"), Err(WorkbenchError::NoTasksRemaining(_))));
}

#[test]
fn evaluator_never_sees_a_claim_twice() {
    let fx = Fixtures::load();
    let wb = Workbench::new(fx.resources());
    wb.create_study(&plan(vec![Condition::SearchOnly, Condition::PassageBrief], 2)).unwrap();
    let mut seen = std::collections::HashSet::new();
    while let Ok(p) = wb.start_session("s", "solo") {
        assert!(seen.insert(p.claim.claim_id.clone()));
        wb.submit_verdict(&p.session_id, verdict(Label::True)).unwrap();
    }
    assert_eq!(seen.len(), 3);
    assert_eq!(wb.pending_tasks("s").unwrap(), 9);
}

#[test]
fn task_order_is_seeded() {
    let fx = Fixtures::load();
    let order = |seed| {
        let wb = Workbench::new(fx.resources());
        wb.create_study(&StudyPlan { seed, ..plan(vec![Condition::SearchOnly, Condition::PassageBrief], 1) }).unwrap();
        (0..6)
            .map(|i| {
                let p = wb.start_session("s", &format!("e{i}")).unwrap();
                (p.claim.claim_id, p.condition)
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(order(5), order(5));
    assert_ne!(order(5), order(6));
}

#[test]
fn abandoned_task_returns_to_the_queue() {
    let fx = Fixtures::load();
    let wb = Workbench::new(fx.resources());
    wb.create_study(&plan(vec![Condition::SearchOnly], 1)).unwrap();
    let first = wb.start_session("s", "a").unwrap();
    wb.abandon(&first.session_id).unwrap();
    assert!(matches!(wb.abandon(&first.session_id), Err(WorkbenchError::SessionClosed(_))));
    let next = wb.start_session("s", "b").unwrap();
    assert_eq!(next.claim.claim_id, first.claim.claim_id);
    assert_ne!(next.session_id, first.session_id);
    assert_eq!(wb.pending_tasks("s").unwrap(), 2);
}

#[test]
fn short_justification_is_rejected_and_session_stays_open() {
    let fx = Fixtures::load();
    let wb = Workbench::new(fx.resources());
    wb.create_study(&plan(vec![Condition::SearchOnly], 1)).unwrap();
    let p = wb.start_session("s", "a").unwrap();
    let short = Verdict { justification: "Seems right to me.".into(), ..verdict(Label::True) };
    assert!(matches!(wb.submit_verdict(&p.session_id, short), Err(WorkbenchError::JustificationTooShort(4))));
    assert!(wb.session(&p.session_id).unwrap().is_open());
    wb.submit_verdict(&p.session_id, verdict(Label::False)).unwrap();
    assert!(matches!(wb.submit_verdict(&p.session_id, verdict(Label::True)), Err(WorkbenchError::SessionClosed(_))));
}

#[test]
fn invalid_plans_are_rejected() {
    let fx = Fixtures::load();
    let wb = Workbench::new(fx.resources());
    let err = |p: StudyPlan| match wb.create_study(&p) {
        Err(WorkbenchError::Plan(e)) => e,
        other => panic!("expected plan error, got {other:?}"),
    };
    assert!(matches!(err(plan(vec![], 1)), PlanError::NoConditions));
    assert!(matches!(err(plan(vec![Condition::SearchOnly], 0)), PlanError::NoRepetitions));
    assert!(matches!(
        err(plan(vec![Condition::SearchOnly, Condition::SearchOnly], 1)),
        PlanError::DuplicateCondition(_)
    ));
    assert!(matches!(
        err(StudyPlan { claims: vec!["nope".into()], ..plan(vec![Condition::SearchOnly], 1) }),
        PlanError::UnknownClaim(_)
    ));
    wb.create_study(&plan(vec![Condition::SearchOnly], 1)).unwrap();
    assert!(matches!(err(plan(vec![Condition::SearchOnly], 1)), PlanError::StudyExists(_)));
}

#[test]
fn event_log_survives_restart() {
    let fx = Fixtures::load();
    let dir = tempfile::tempdir().unwrap();
    let (done, open_id) = {
        let wb = Workbench::open(fx.resources(), dir.path()).unwrap();
        wb.create_study(&plan(vec![Condition::SearchOnly, Condition::QabriefGold], 1)).unwrap();
        let a = wb.start_session("s", "a").unwrap();
        wb.record_search(&a.session_id, "university of wisconsin").unwrap();
        wb.submit_verdict(&a.session_id, verdict(Label::True)).unwrap();
        let b = wb.start_session("s", "b").unwrap();
        (wb.session(&a.session_id).unwrap(), b.session_id)
    };
    let log = study_dir(dir.path(), "s").join("events.jsonl");
    let kinds: Vec<EventKind> = read_events(&log).unwrap().into_iter().map(|e| e.kind).collect();
    assert_eq!(kinds, vec![EventKind::Created, EventKind::Search, EventKind::Submit, EventKind::Created]);

    let wb = Workbench::open(fx.resources(), dir.path()).unwrap();
    assert_eq!(wb.study_ids(), vec!["s".to_string()]);
    assert_eq!(wb.session(&done.session_id).unwrap(), done);
    assert!(wb.session(&open_id).unwrap().is_open());
    assert_eq!(wb.pending_tasks("s").unwrap(), 4);
    let next = wb.start_session("s", "c").unwrap();
    assert_eq!(next.session_id, "s-0003");

    let outcomes = outcomes_from_log(&log).unwrap();
    assert_eq!(outcomes.len(), 1);
    assert_eq!(outcomes[0].searches_used, 1);
    let offline = report_from_state(dir.path(), "s", &fx.dataset).unwrap();
    assert_eq!(offline.sessions_closed, 1);
    assert_eq!(offline.tasks, 6);
    assert_eq!(offline.sessions_open, 2);
}

async fn send(app: &axum::Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, serde_json::Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_default()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}

#[tokio::test]
async fn http_errors_map_to_statuses() {
    let fx = Fixtures::load();
    let wb = Arc::new(Workbench::new(fx.resources()));
    wb.create_study(&plan(vec![Condition::SearchOnly], 1)).unwrap();
    let app = router(Arc::clone(&wb));

    let (status, body) = send(&app, "GET", "/api/session/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["kind"], "not_found");

    let (status, _) = send(&app, "POST", "/api/session", Some("{\"study_id\": \"s\"}")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, p) = send(&app, "POST", "/api/session", Some("{\"evaluator_id\": \"e1\"}")).await;
    assert_eq!(status, StatusCode::OK);
    let sid = p["session_id"].as_str().unwrap();

    let uri = format!("/api/session/{sid}/verdict");
    let (status, body) = send(&app, "POST", &uri, Some("{\"label\": \"true\", \"difficulty\": \"easy\"}")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("justification"));

    let short = "{\"label\": \"true\", \"justification\": \"too short\", \"difficulty\": \"easy\"}";
    let (status, _) = send(&app, "POST", &uri, Some(short)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, _) =
        send(&app, "POST", &uri, Some("{\"label\": \"maybe\", \"justification\": \"x\", \"difficulty\": \"easy\"}"))
            .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = send(&app, "POST", &format!("/api/session/{sid}/abandon"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = send(&app, "GET", &format!("/api/search?q=wisconsin&session={sid}"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["kind"], "session_closed");

    let (status, _) = send(&app, "GET", "/api/study/none/report", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, report) = send(&app, "GET", "/api/study/s/report", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["sessions_abandoned"], 1);
    assert!(report.get("outcomes").is_none());
}
