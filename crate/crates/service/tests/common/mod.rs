#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use reqwest::{Client, Method, StatusCode};
use serde_json::{json, Value};
use wikibridge_service::{fixed_clock, router, Actor, AppState, Wiki, WikiConfig};

pub const CLOCK: &str = "2024-05-01T12:00:00Z";

pub const ACL: &str = "\
# test wiki
allow group:readers read *
allow group:contributors read *
allow group:contributors edit *
allow group:contributors annotate *
allow group:admins read *
allow group:admins edit *
allow group:admins annotate *
allow group:admins query *
allow group:admins admin *
deny user:carol annotate namespace:Archive
allow user:dave query *
user alice groups admins
user bob groups readers
user carol groups contributors
user dave groups readers
";

pub const USERS: [&str; 4] = ["alice", "bob", "carol", "dave"];

pub struct TestServer {
    pub base: String,
    pub client: Client,
    pub data: PathBuf,
}

/// Serves a wiki on an ephemeral port. Every user's password is `<user>-pw`.
pub async fn start(data: &Path, ontology: &str, static_dir: Option<PathBuf>) -> TestServer {
    std::fs::create_dir_all(data).unwrap();
    std::fs::write(data.join("acl.conf"), ACL).unwrap();
    let config = WikiConfig { strict_default: false, clock: fixed_clock(CLOCK) };
    let mut wiki = Wiki::open(data, config).unwrap();
    wiki.put_ontology(Actor::System, ontology).unwrap();
    for u in USERS {
        wiki.set_password(u, &format!("{u}-pw")).unwrap();
    }
    let app = router(AppState::new(wiki, Duration::from_secs(3600)), static_dir);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    TestServer { base: format!("http://{addr}"), client: Client::new(), data: data.to_owned() }
}

impl TestServer {
    pub async fn login(&self, user: &str) -> String {
        let (status, body) = self.call(Method::POST, "/api/login", None, Some(json!({"user": user, "password": format!("{user}-pw")}))).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        body["token"].as_str().unwrap().to_owned()
    }

    pub async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status();
        let text = resp.text().await.unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    pub async fn raw(&self, method: Method, path: &str, token: &str, content_type: &str, body: &str) -> (StatusCode, String) {
        let resp = self
            .client
            .request(method, format!("{}{path}", self.base))
            .bearer_auth(token)
            .header("content-type", content_type)
            .body(body.to_owned())
            .send()
            .await
            .unwrap();
        (resp.status(), resp.text().await.unwrap())
    }

    pub async fn put_page(&self, token: &str, ns: &str, title: &str, text: &str) -> (StatusCode, Value) {
        self.call(Method::PUT, &page_path(ns, title), Some(token), Some(json!({ "text": text }))).await
    }
}

pub fn page_path(ns: &str, title: &str) -> String {
    format!("/api/pages/{}/{}", enc(ns), enc(title))
}

pub fn enc(s: &str) -> String {
    wikibridge_core::rdf::encode_segment(s)
}
