use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mdsw_core::session::SessionService;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api {
    _dir: tempfile::TempDir,
    app: Router,
}

impl Api {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let svc = SessionService::open(dir.path()).unwrap();
        Api {
            app: mdsw_server::router(Arc::new(svc)),
            _dir: dir,
        }
    }

    async fn raw(&self, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, String) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(
                body.map(|b| Body::from(b.to_owned()))
                    .unwrap_or_else(Body::empty),
            )
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        let (s, b) = self.raw(Method::GET, uri, None).await;
        (s, serde_json::from_str(&b).unwrap())
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        let (s, b) = self.raw(Method::POST, uri, Some(&body.to_string())).await;
        (s, serde_json::from_str(&b).unwrap())
    }

    async fn create(&self, body: Value) -> String {
        let (s, v) = self.post("/sessions", body).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        v["session"]["id"].as_str().unwrap().to_owned()
    }

    async fn answer(&self, id: &str, node: &str, answer: bool) -> Value {
        let (s, v) = self
            .post(
                &format!("/sessions/{id}/answers"),
                json!({"node": node, "answer": answer}),
            )
            .await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v
    }
}

fn marketing() -> Value {
    json!({
        "id": "mkt-1",
        "channel": "direct",
        "source": "marketing",
        "polarity": "affirms",
        "purposes": ["disease.treatment"],
        "note": "helps determine a drug prescription"
    })
}

const MD_PATH: [(&str, bool); 7] = [
    ("q_is_software", true),
    ("q_intention", true),
    ("q_generic_unmodified", false),
    ("q_storage_only", false),
    ("q_accessory_intent", false),
    ("q_human_use", true),
    ("q_purpose_fulfilled", true),
];

#[tokio::test]
async fn lists_shipped_rulebooks() {
    let api = Api::new();
    let (s, v) = api.get("/rulebooks").await;
    assert_eq!(s, StatusCode::OK);
    let ids: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"mdr-2017-745"));
    assert!(ids.contains(&"meddev-2-1-6"));
    assert!(v[0]["version"].is_string());
}

#[tokio::test]
async fn fresh_session_asks_software_question() {
    let api = Api::new();
    let (s, v) = api
        .post("/sessions", json!({"rulebook": "mdr-2017-745"}))
        .await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["next"]["type"], "question");
    assert_eq!(v["next"]["node"], "q_is_software");
    assert!(!v["next"]["citation"].as_str().unwrap().is_empty());
    let id = v["session"]["id"].as_str().unwrap();
    assert_eq!(id.len(), 32);
    let (s, again) = api.get(&format!("/sessions/{id}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(again["session"]["status"], "open");
}

#[tokio::test]
async fn c329_path_to_md_with_report() {
    let api = Api::new();
    let id = api
        .create(json!({
            "rulebook": "mdr-2017-745",
            "name": "Prescription support",
            "classification_profile": {
                "informs_diagnosis_or_therapy": true,
                "can_cause_death_or_irreversible": false,
                "can_cause_serious_deterioration": false,
                "monitors_physiological_processes": false,
                "can_cause_immediate_harm": false,
                "drives_or_influences_device": false
            }
        }))
        .await;
    let (s, v) = api.get(&format!("/sessions/{id}/verdict")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "session-not-finalized");

    let (s, upd) = api
        .post(&format!("/sessions/{id}/evidence"), marketing())
        .await;
    assert_eq!(s, StatusCode::OK, "{upd}");
    assert_eq!(upd["intention"]["established"], true);
    assert_eq!(upd["intention"]["prevailing_channel"], "direct");

    let mut last = Value::Null;
    for (node, answer) in MD_PATH {
        last = api.answer(&id, node, answer).await;
    }
    assert_eq!(last["next"]["type"], "verdict");
    assert_eq!(last["session"]["status"], "finalized");

    let (s, verdict) = api.get(&format!("/sessions/{id}/verdict")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(verdict["qualification"], "MD");
    assert_eq!(verdict["risk_class"], "IIa");
    assert_eq!(verdict["exit_node"], "q_purpose_fulfilled");
    let steps = verdict["trace"].as_array().unwrap();
    assert_eq!(steps.len(), 8);
    assert!(steps
        .iter()
        .all(|s| !s["citation"].as_str().unwrap().is_empty()));

    let (s, md) = api
        .raw(
            Method::GET,
            &format!("/sessions/{id}/report?format=md"),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert!(md.starts_with("# Assessment report: Prescription support"));
    assert!(md.contains("- Qualification: **MD**"));
    let (s, json_report) = api.get(&format!("/sessions/{id}/report?format=json")).await;
    assert_eq!(s, StatusCode::OK);
    let report: mdsw_core::Report = serde_json::from_value(json_report).unwrap();
    assert_eq!(report.to_markdown(), md);

    let (s, v) = api
        .raw(
            Method::GET,
            &format!("/sessions/{id}/report?format=pdf"),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");

    let (s, v) = api
        .post(
            &format!("/sessions/{id}/answers"),
            json!({"node": "q_human_use", "answer": false}),
        )
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "session-finalized");
}

#[tokio::test]
async fn reanswer_resets_downstream_and_flips_verdict() {
    let api = Api::new();
    let id = api.create(json!({"rulebook": "mdr-2017-745"})).await;
    api.post(&format!("/sessions/{id}/evidence"), marketing())
        .await;
    for (node, answer) in &MD_PATH[..5] {
        api.answer(&id, node, *answer).await;
    }
    let v = api.answer(&id, "q_generic_unmodified", false).await;
    assert_eq!(v["next"]["node"], "q_storage_only");
    let answers = v["session"]["case"]["answers"].as_object().unwrap();
    assert!(!answers.contains_key("q_storage_only"));
    assert!(!answers.contains_key("q_accessory_intent"));

    let v = api.answer(&id, "q_generic_unmodified", true).await;
    assert_eq!(v["next"]["type"], "verdict");
    assert_eq!(v["next"]["qualification"], "NOT_MD");
    assert_eq!(v["next"]["exit_node"], "q_generic_unmodified");
}

#[tokio::test]
async fn errors_have_code_and_message() {
    let api = Api::new();
    let (s, v) = api.post("/sessions", json!({"rulebook": "nope"})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown-rulebook");
    assert!(v["message"].as_str().unwrap().contains("nope"));

    let (s, v) = api.get("/sessions/0123456789abcdef0123456789abcdef").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown-session");

    let (s, v) = api.get("/sessions/..%2F..%2Fetc%2Fpasswd").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown-session");

    let (s, body) = api.raw(Method::POST, "/sessions", Some("{not json")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["code"], "invalid-request");

    let id = api.create(json!({"rulebook": "mdr-2017-745"})).await;
    let (s, v) = api
        .post(
            &format!("/sessions/{id}/answers"),
            json!({"node": "q_human_use", "answer": true}),
        )
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "node-not-on-path");

    let (s, v) = api
        .post(
            &format!("/sessions/{id}/answers"),
            json!({"node": "q_bogus", "answer": true}),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "unknown-node");

    let mut bad = marketing();
    bad["channel"] = json!("indirect");
    let (s, v) = api.post(&format!("/sessions/{id}/evidence"), bad).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "invalid-evidence");

    let (s, v) = api.get("/nowhere").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not-found");
}

#[tokio::test]
async fn drives_without_linked_class_is_rejected() {
    let api = Api::new();
    let (s, v) = api
        .post(
            "/sessions",
            json!({
                "rulebook": "mdr-2017-745",
                "classification_profile": {
                    "informs_diagnosis_or_therapy": false,
                    "can_cause_death_or_irreversible": false,
                    "can_cause_serious_deterioration": false,
                    "monitors_physiological_processes": false,
                    "can_cause_immediate_harm": false,
                    "drives_or_influences_device": true
                }
            }),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "invalid-request");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = mdsw_server::router(Arc::new(SessionService::open(dir.path()).unwrap()));
    let api = Api {
        _dir: tempfile::tempdir().unwrap(),
        app,
    };
    let api = Arc::new(api);
    let mut ids = Vec::new();
    for _ in 0..6 {
        ids.push(api.create(json!({"rulebook": "mdr-2017-745"})).await);
    }
    let mut tasks = Vec::new();
    for id in ids.clone() {
        let api = Arc::clone(&api);
        tasks.push(tokio::spawn(async move {
            api.post(&format!("/sessions/{id}/evidence"), marketing())
                .await;
            for (node, answer) in MD_PATH {
                api.answer(&id, node, answer).await;
            }
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    // A new service over the same directory serves every session.
    let restarted = Api {
        app: mdsw_server::router(Arc::new(SessionService::open(dir.path()).unwrap())),
        _dir: dir,
    };
    for id in ids {
        let (s, v) = restarted.get(&format!("/sessions/{id}/verdict")).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["qualification"], "MD");
    }
}
