//! Where off-chain state is fetched from.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::document::StateDocument;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaptureError {
    #[error("fetch from {source_id} failed: {reason}")]
    Fetch { source_id: String, reason: String },
    #[error("{source_id} returned unparseable state: {reason}")]
    Parse { source_id: String, reason: String },
    #[error("{source_id} answered with content type `{got}`, expected JSON")]
    ContentType { source_id: String, got: String },
    #[error("snapshots were filtered under different rule sets ({0} vs {1})")]
    Incomparable(String, String),
}

/// Anything that can produce the current off-chain state.
pub trait StateSource: Send {
    fn id(&self) -> &str;
    fn fetch(&mut self) -> Result<StateDocument, CaptureError>;
}

/// A callback inside the harness process.
pub struct InProcessSource<F> {
    id: String,
    callback: F,
}

impl<F> InProcessSource<F>
where
    F: FnMut() -> StateDocument + Send,
{
    pub fn new(id: impl Into<String>, callback: F) -> Self {
        InProcessSource { id: id.into(), callback }
    }
}

impl<F> StateSource for InProcessSource<F>
where
    F: FnMut() -> StateDocument + Send,
{
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&mut self) -> Result<StateDocument, CaptureError> {
        Ok((self.callback)())
    }
}

/// `GET {url}` answering with a JSON document.
pub struct HttpSource {
    id: String,
    url: String,
    agent: ureq::Agent,
}

impl HttpSource {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let url = url.into();
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(true).build().into();
        HttpSource { id: format!("http:{url}"), url, agent }
    }

    /// Fails fast when the endpoint is unreachable or not serving JSON.
    pub fn probe(&mut self) -> Result<(), CaptureError> {
        self.fetch().map(|_| ())
    }
}

impl StateSource for HttpSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&mut self) -> Result<StateDocument, CaptureError> {
        let fetch_err = |reason: String| CaptureError::Fetch { source_id: self.id.clone(), reason };
        let mut resp = self.agent.get(&self.url).call().map_err(|e| fetch_err(e.to_string()))?;
        let content_type =
            resp.headers().get("content-type").and_then(|v| v.to_str().ok()).unwrap_or("").to_ascii_lowercase();
        let mime = content_type.split(';').next().unwrap_or("").trim();
        if mime != "application/json" && !mime.ends_with("+json") {
            return Err(CaptureError::ContentType { source_id: self.id.clone(), got: content_type });
        }
        let body = resp.body_mut().read_to_string().map_err(|e| fetch_err(e.to_string()))?;
        StateDocument::parse(&body).map_err(|reason| CaptureError::Parse { source_id: self.id.clone(), reason })
    }
}

/// A JSON file rewritten by the DApp adapter.
pub struct FileSource {
    id: String,
    path: PathBuf,
}

impl FileSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        FileSource { id: format!("file:{}", path.display()), path }
    }
}

impl StateSource for FileSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&mut self) -> Result<StateDocument, CaptureError> {
        let text = std::fs::read_to_string(&self.path)
            .map_err(|e| CaptureError::Fetch { source_id: self.id.clone(), reason: e.to_string() })?;
        StateDocument::parse(&text).map_err(|reason| CaptureError::Parse { source_id: self.id.clone(), reason })
    }
}

/// Source description as written in a session config.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    /// The in-process mock DApp configured for the session.
    Mock,
    Http {
        url: String,
        #[serde(default = "default_http_timeout_ms")]
        timeout_ms: u64,
    },
    File {
        path: PathBuf,
    },
}

fn default_http_timeout_ms() -> u64 {
    5_000
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn serve_once(content_type: &'static str, body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let (mut s, _) = listener.accept().unwrap();
            let mut buf = [0u8; 1024];
            let _ = s.read(&mut buf);
            let resp = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: {content_type}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            s.write_all(resp.as_bytes()).unwrap();
        });
        format!("http://{addr}/state")
    }

    #[test]
    fn http_source_parses_json() {
        let mut src = HttpSource::new(serve_once("application/json", r#"{"a":1}"#), Duration::from_secs(5));
        assert_eq!(src.fetch().unwrap(), StateDocument::parse(r#"{"a":1}"#).unwrap());
    }

    #[test]
    fn http_source_malformed_body_is_parse_error() {
        let mut src = HttpSource::new(serve_once("application/json", "{oops"), Duration::from_secs(5));
        assert!(matches!(src.fetch(), Err(CaptureError::Parse { .. })));
    }

    #[test]
    fn http_source_enforces_content_type() {
        let mut src = HttpSource::new(serve_once("text/html", "{}"), Duration::from_secs(5));
        assert!(matches!(src.fetch(), Err(CaptureError::ContentType { .. })));
    }

    #[test]
    fn http_source_unreachable_is_fetch_error() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let mut src = HttpSource::new(format!("http://127.0.0.1:{port}/"), Duration::from_millis(500));
        assert!(matches!(src.probe(), Err(CaptureError::Fetch { .. })));
    }

    #[test]
    fn file_source_reads_and_reports_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        std::fs::write(&path, r#"{"x":[true]}"#).unwrap();
        assert_eq!(FileSource::new(&path).fetch().unwrap().canonical_text(), r#"{"x":[true]}"#);
        assert!(matches!(FileSource::new(dir.path().join("nope")).fetch(), Err(CaptureError::Fetch { .. })));
    }

    #[test]
    fn spec_from_toml() {
        let s: SourceSpec = toml::from_str("kind = \"http\"\nurl = \"http://x/state\"").unwrap();
        assert_eq!(s, SourceSpec::Http { url: "http://x/state".into(), timeout_ms: 5000 });
    }
}
