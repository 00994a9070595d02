mod common;

use common::{run_job, Server};
use serde_json::{json, Value};

const SEQUENCES: &str = "a b c a b c\nb c a b c a\nc a b c a b\nd e d e d e\ne d e d e d\nd e e d d e\na b c d e\nc b a e d\n";

async fn project_with_topics(server: &Server, ks: &[usize]) -> (String, Value) {
    let (status, project) = server
        .post("/projects", &json!({ "name": "t", "sequences": SEQUENCES, "seed": 5 }))
        .await;
    assert_eq!(status, 201, "{project}");
    let pid = project["id"].as_str().unwrap().to_string();
    let job = run_job(
        server,
        &format!("/projects/{pid}/lda"),
        &json!({ "spec": { "fixed": ks }, "iterations": 50, "burn_in": 10 }),
    )
    .await;
    (pid, job)
}

fn entries(pairs: &[(usize, usize)]) -> Value {
    json!(pairs
        .iter()
        .map(|(t, c)| json!({ "topic_id": t, "cluster": c }))
        .collect::<Vec<_>>())
}

#[tokio::test(flavor = "multi_thread")]
async fn project_creation_is_idempotent() {
    let server = Server::start().await;
    let body = json!({ "sequences": SEQUENCES, "seed": 1 });
    let (s1, a) = server.post("/projects", &body).await;
    let (s2, b) = server.post("/projects", &body).await;
    assert_eq!((s1, s2), (201, 200));
    assert_eq!(a["id"], b["id"]);
    let (s3, c) = server.post("/projects", &json!({ "sequences": SEQUENCES, "seed": 2 })).await;
    assert_eq!(s3, 201);
    assert_ne!(a["id"], c["id"]);
    assert_eq!(server.get("/projects/nope").await.0, 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn partial_definition_is_rejected_with_missing_ids() {
    let server = Server::start().await;
    let (pid, job) = project_with_topics(&server, &[2, 3]).await;
    assert_eq!(job["result"]["topics"], 5);
    let (status, body) = server
        .post(
            &format!("/projects/{pid}/clusters"),
            &json!({ "name": "partial", "k": 2, "assignment": entries(&[(0, 0), (1, 1), (3, 0), (7, 1)]) }),
        )
        .await;
    assert_eq!(status, 409, "{body}");
    assert_eq!(body["missing"], json!([2, 4]));
    assert_eq!(body["unknown"], json!([7]));

    let (status, body) = server
        .post(&format!("/projects/{pid}/clusters"), &json!({ "name": "bad" }))
        .await;
    assert_eq!(status, 422, "{body}");
}

#[tokio::test(flavor = "multi_thread")]
async fn topics_definitions_and_evaluation() {
    let server = Server::start().await;
    let (pid, _) = project_with_topics(&server, &[2, 2]).await;

    let (status, projection) = server
        .get(&format!("/projects/{pid}/topics?iterations=200&top_words=3"))
        .await;
    assert_eq!(status, 200, "{projection}");
    assert_eq!(projection["coords"].as_array().unwrap().len(), 4);
    assert_eq!(projection["chord"].as_array().unwrap().len(), 4);
    assert_eq!(projection["glyphs"][0]["words"].as_array().unwrap().len(), 3);

    // pair each topic of the second run with the closer topic of the first
    let (status, set) = server.get(&format!("/projects/{pid}/topicset")).await;
    assert_eq!(status, 200);
    let rows: Vec<Vec<f64>> = serde_json::from_value(set["topic_word_matrix"].clone()).unwrap();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let c2 = usize::from(dot(&rows[2], &rows[1]) > dot(&rows[2], &rows[0]));
    let def = json!({ "name": "g", "k": 2, "assignment": entries(&[(0, 0), (1, 1), (2, c2), (3, 1 - c2)]) });
    let (status, rec) = server.post(&format!("/projects/{pid}/clusters"), &def).await;
    assert_eq!(status, 201, "{rec}");
    let def_id = rec["id"].as_str().unwrap();
    let (status, back) = server.get(&format!("/projects/{pid}/clusters/{def_id}")).await;
    assert_eq!(status, 200);
    assert_eq!(back, def);

    let train = json!({
        "definition_id": def_id,
        "config": { "dims": { "embed_dim": 4, "hidden_dim": 4 }, "train": { "epochs": 2 } }
    });
    let (status, started) = server.post(&format!("/projects/{pid}/train"), &train).await;
    assert_eq!(status, 202);
    let job = server.wait(started["job_id"].as_str().unwrap()).await;
    assert_eq!(job["state"], "done", "{job}");
    let did = job["result"]["detector_id"].as_str().unwrap();
    assert_eq!(started["detector_id"], did);

    let (status, manifest) = server.get(&format!("/detectors/{did}")).await;
    assert_eq!(status, 200);
    assert_eq!(manifest["router"], "informed");
    assert_eq!(manifest["k"], 2);

    let (status, report) = server
        .post(
            &format!("/detectors/{did}/evaluate"),
            &json!({
                "sequences": [["a","b","c","a"], ["d","e","d"], ["a","a","e"], ["e","c","b"]],
                "labels": ["normal", "normal", "novel", "novel"],
                "validation": {
                    "sequences": "a b c\nd e\nb b d\nc e a\n",
                    "labels": "normal\nnormal\nnovel\nnovel\n"
                }
            }),
        )
        .await;
    assert_eq!(status, 200, "{report}");
    assert_eq!(report["normal"], 2);
    assert_eq!(report["novel"], 2);
    let auc = report["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));

    let (status, _) = server
        .post(&format!("/detectors/{did}/score"), &json!({ "ids": [[99]] }))
        .await;
    assert_eq!(status, 422);
    assert!(server.state.store().verify(&pid).is_ok());
}

#[tokio::test(flavor = "multi_thread")]
async fn failed_jobs_report_errors() {
    let server = Server::start().await;
    let (status, project) = server.post("/projects", &json!({ "sequences": "a b\n" })).await;
    assert_eq!(status, 201);
    let pid = project["id"].as_str().unwrap();
    let (status, resp) = server
        .post(&format!("/projects/{pid}/lda"), &json!({ "spec": { "fixed": [9] } }))
        .await;
    assert_eq!(status, 202);
    let job = server.wait(resp["job_id"].as_str().unwrap()).await;
    assert_eq!(job["state"], "failed");
    assert!(job["error"].as_str().unwrap().contains("topic"));
    assert_eq!(server.get("/jobs/not-a-uuid").await.0, 404);
}
