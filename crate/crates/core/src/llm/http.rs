use std::time::Duration;

use serde::Deserialize;

use super::{GenerationProvider, LlmError, LlmResult, LlmStatus, ProviderConfig};

/// Live backend speaking a small JSON protocol.
///
/// Request: `POST <endpoint>` with `{model, prompt, temperature, max_output_tokens}`.
/// Response: `{status?, output?, input_tokens?, output_tokens?}`. HTTP 413 is a
/// token-limit refusal, 451 a safety refusal; 429 and 5xx are retried.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    endpoint: reqwest::Url,
    api_key: Option<String>,
    model: String,
    temperature: f64,
    max_output_tokens: u64,
    max_retries: u32,
    backoff: Duration,
}

#[derive(Deserialize)]
struct Reply {
    #[serde(default)]
    status: Option<LlmStatus>,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    input_tokens: u64,
    #[serde(default)]
    output_tokens: u64,
}

enum Attempt {
    Done(LlmResult),
    Retry,
}

impl HttpProvider {
    pub fn new(config: &ProviderConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        config.validate()?;
        let raw = config
            .endpoint
            .as_deref()
            .ok_or_else(|| LlmError::Config("http provider needs an endpoint".into()))?;
        let endpoint = reqwest::Url::parse(raw).map_err(|e| LlmError::Config(format!("bad endpoint {raw:?}: {e}")))?;
        if !matches!(endpoint.scheme(), "http" | "https") {
            return Err(LlmError::Config(format!("unsupported scheme {}", endpoint.scheme())));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            client,
            endpoint,
            api_key,
            model: config.model_name.clone(),
            temperature: config.temperature,
            max_output_tokens: config.max_output_tokens,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(200),
        })
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, prompt: &str) -> Attempt {
        let body = serde_json::json!({
            "model": self.model,
            "prompt": prompt,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
        });
        let mut req = self.client.post(self.endpoint.clone()).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let Ok(resp) = req.send() else {
            return Attempt::Retry;
        };
        match resp.status().as_u16() {
            413 => return Attempt::Done(LlmResult::refused(LlmStatus::TokenLimitExceeded, 0)),
            451 => return Attempt::Done(LlmResult::refused(LlmStatus::SafetyFlagged, 0)),
            429 | 500..=599 => return Attempt::Retry,
            s if !(200..300).contains(&s) => {
                return Attempt::Done(LlmResult::refused(LlmStatus::TransportError, 0))
            }
            _ => {}
        }
        let Ok(reply) = resp.json::<Reply>() else {
            return Attempt::Retry;
        };
        Attempt::Done(match (reply.status.unwrap_or(LlmStatus::Ok), reply.output) {
            (LlmStatus::Ok, Some(out)) => LlmResult::ok(out, reply.input_tokens, reply.output_tokens),
            (LlmStatus::Ok, None) => LlmResult::refused(LlmStatus::TransportError, reply.input_tokens),
            (status, _) => LlmResult::refused(status, reply.input_tokens),
        })
    }
}

impl GenerationProvider for HttpProvider {
    fn generate(&self, prompt: &str) -> LlmResult {
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            if let Attempt::Done(r) = self.attempt(prompt) {
                return r;
            }
        }
        LlmResult::refused(LlmStatus::TransportError, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serve one canned response per connection, forwarding request bodies.
    fn serve(responses: Vec<(u16, &'static str)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/generate", listener.local_addr().unwrap());
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (code, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = line.trim().to_string();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                tx.send(format!("{auth}\n{}", String::from_utf8(buf).unwrap())).unwrap();
                let mut s = stream;
                write!(
                    s,
                    "HTTP/1.1 {code} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, rx)
    }

    fn provider(url: &str, retries: u32) -> HttpProvider {
        let config = ProviderConfig {
            endpoint: Some(url.to_string()),
            max_retries: retries,
            timeout_ms: 5_000,
            ..ProviderConfig::default()
        };
        HttpProvider::new(&config, Some("secret".into())).unwrap().with_backoff(Duration::ZERO)
    }

    #[test]
    fn ok_reply_and_request_shape() {
        let (url, rx) = serve(vec![(
            200,
            r#"{"status":"ok","output":"{\"fact_sentence\":\"x\"}","input_tokens":12,"output_tokens":4}"#,
        )]);
        let r = provider(&url, 0).generate("the prompt");
        assert_eq!(r, LlmResult::ok("{\"fact_sentence\":\"x\"}", 12, 4));
        let seen = rx.recv().unwrap();
        let (auth, body) = seen.split_once('\n').unwrap();
        assert_eq!(auth, "authorization: Bearer secret");
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(v["prompt"], "the prompt");
        assert_eq!(v["temperature"], 0.0);
    }

    #[test]
    fn refusals_map_to_statuses() {
        let (url, _rx) = serve(vec![(413, "{}"), (200, r#"{"status":"safety_flagged","input_tokens":9}"#)]);
        let p = provider(&url, 0);
        assert_eq!(p.generate("a").status, LlmStatus::TokenLimitExceeded);
        let r = p.generate("b");
        assert_eq!((r.status, r.raw_output, r.input_tokens), (LlmStatus::SafetyFlagged, None, 9));
    }

    #[test]
    fn retries_then_gives_up() {
        let (url, _rx) = serve(vec![(503, "{}"), (200, r#"{"output":"y"}"#)]);
        assert_eq!(provider(&url, 1).generate("a").raw_output.as_deref(), Some("y"));
        let (url, _rx) = serve(vec![(500, "{}"), (500, "{}")]);
        assert_eq!(provider(&url, 1).generate("a").status, LlmStatus::TransportError);
    }

    #[test]
    fn needs_endpoint() {
        assert!(matches!(
            HttpProvider::new(&ProviderConfig::default(), None),
            Err(LlmError::Config(_))
        ));
    }
}
