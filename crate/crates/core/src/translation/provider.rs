use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::TranslationError;

/// Anything that maps a list of lines to the same number of translated lines.
pub trait TranslationProvider: Send + Sync {
    fn name(&self) -> &str;
    fn translate_lines(&self, lines: &[String], src: &str, tgt: &str) -> Result<Vec<String>, TranslationError>;
}

pub struct IdentityProvider;

impl TranslationProvider for IdentityProvider {
    fn name(&self) -> &str {
        "identity"
    }

    fn translate_lines(&self, lines: &[String], _src: &str, _tgt: &str) -> Result<Vec<String>, TranslationError> {
        Ok(lines.to_vec())
    }
}

/// Deterministic stand-in for a real translator.
///
/// Word order is reversed per line. The tagged form wraps each line as
/// `[ar:…]`; the script form instead maps Latin letters onto Arabic ones so
/// that downstream layout sees genuine right-to-left text. Sentinels pass
/// through untouched in both forms.
#[derive(Debug, Clone, Copy, Default)]
pub struct PseudoProvider {
    pub arabic_script: bool,
}

fn sentinel_split() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"⟦T\d+⟧").unwrap())
}

fn latin_to_arabic(c: char) -> Option<&'static str> {
    Some(match c.to_ascii_lowercase() {
        'a' => "ا",
        'b' => "ب",
        'c' => "ك",
        'd' => "د",
        'e' => "ي",
        'f' => "ف",
        'g' => "غ",
        'h' => "ه",
        'i' => "ي",
        'j' => "ج",
        'k' => "ك",
        'l' => "ل",
        'm' => "م",
        'n' => "ن",
        'o' => "و",
        'p' => "ب",
        'q' => "ق",
        'r' => "ر",
        's' => "س",
        't' => "ت",
        'u' => "و",
        'v' => "ف",
        'w' => "و",
        'x' => "كس",
        'y' => "ي",
        'z' => "ز",
        _ => return None,
    })
}

impl PseudoProvider {
    pub fn tagged() -> Self {
        Self { arabic_script: false }
    }

    pub fn script() -> Self {
        Self { arabic_script: true }
    }

    fn transliterate(word: &str) -> String {
        let mut out = String::with_capacity(word.len() * 2);
        let mut last = 0;
        for m in sentinel_split().find_iter(word) {
            for c in word[last..m.start()].chars() {
                match latin_to_arabic(c) {
                    Some(s) => out.push_str(s),
                    None => out.push(c),
                }
            }
            out.push_str(m.as_str());
            last = m.end();
        }
        for c in word[last..].chars() {
            match latin_to_arabic(c) {
                Some(s) => out.push_str(s),
                None => out.push(c),
            }
        }
        out
    }

    pub fn translate_line(&self, line: &str) -> String {
        let reversed: Vec<&str> = line.split_whitespace().rev().collect();
        if self.arabic_script {
            reversed.iter().map(|w| Self::transliterate(w)).collect::<Vec<_>>().join(" ")
        } else {
            format!("[ar:{}]", reversed.join(" "))
        }
    }
}

impl TranslationProvider for PseudoProvider {
    fn name(&self) -> &str {
        if self.arabic_script {
            "pseudo-script"
        } else {
            "pseudo"
        }
    }

    fn translate_lines(&self, lines: &[String], _src: &str, _tgt: &str) -> Result<Vec<String>, TranslationError> {
        Ok(lines.iter().map(|l| self.translate_line(l)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Environment variable holding a bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    2
}

#[derive(Serialize)]
struct HttpRequestBody<'a> {
    lines: &'a [String],
    src: &'a str,
    tgt: &'a str,
}

#[derive(Deserialize)]
struct HttpResponseBody {
    lines: Vec<String>,
}

/// JSON-over-HTTP provider: POST `{lines, src, tgt}`, expect `{lines}`.
pub struct HttpProvider {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Result<Self, TranslationError> {
        if !(config.timeout_secs > 0.0) {
            return Err(TranslationError::InvalidConfig(format!("timeout_secs = {}", config.timeout_secs)));
        }
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| TranslationError::InvalidConfig(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| TranslationError::ProviderUnavailable(e.to_string()))?;
        Ok(Self { config, api_key, client })
    }

    fn attempt(&self, lines: &[String], src: &str, tgt: &str) -> Result<Vec<String>, String> {
        let mut req = self.client.post(&self.config.endpoint).json(&HttpRequestBody { lines, src, tgt });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let resp = resp.error_for_status().map_err(|e| e.to_string())?;
        resp.json::<HttpResponseBody>().map(|b| b.lines).map_err(|e| e.to_string())
    }
}

impl TranslationProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn translate_lines(&self, lines: &[String], src: &str, tgt: &str) -> Result<Vec<String>, TranslationError> {
        let mut last_err = String::new();
        for attempt in 0..=self.config.retries {
            match self.attempt(lines, src, tgt) {
                Ok(out) => return Ok(out),
                Err(e) => {
                    log::warn!("translation request attempt {} failed: {e}", attempt + 1);
                    last_err = e;
                }
            }
        }
        Err(TranslationError::ProviderUnavailable(last_err))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    Identity,
    Pseudo {
        #[serde(default)]
        arabic_script: bool,
    },
    Http(HttpConfig),
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Pseudo { arabic_script: true }
    }
}

pub fn build_provider(config: &ProviderConfig) -> Result<Box<dyn TranslationProvider>, TranslationError> {
    Ok(match config {
        ProviderConfig::Identity => Box::new(IdentityProvider),
        ProviderConfig::Pseudo { arabic_script } => Box::new(PseudoProvider {
            arabic_script: *arabic_script,
        }),
        ProviderConfig::Http(c) => Box::new(HttpProvider::new(c.clone())?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    #[test]
    fn pseudo_reverses_and_tags() {
        let p = PseudoProvider::tagged();
        assert_eq!(p.translate_line("hello big ⟦T0⟧ world"), "[ar:world ⟦T0⟧ big hello]");
    }

    #[test]
    fn pseudo_script_is_arabic_and_keeps_sentinels() {
        let p = PseudoProvider::script();
        let out = p.translate_line("Total ⟦T0⟧ rose");
        assert_eq!(out, "روسي ⟦T0⟧ توتال");
        assert!(crate::script::majority_direction(&out).is_rtl());
    }

    /// Serves `n` requests, answering each with the request lines uppercased.
    fn serve(n: usize, fail_first: bool) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = format!("http://{}/translate", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut auths = Vec::new();
            for i in 0..n {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auths.push(line.trim().to_string());
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let (status, payload) = if fail_first && i == 0 {
                    ("500 Internal Server Error", "{}".to_string())
                } else {
                    let lines: Vec<String> = v["lines"]
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|l| format!("{}>{}", v["tgt"].as_str().unwrap(), l.as_str().unwrap().to_uppercase()))
                        .collect();
                    ("200 OK", serde_json::json!({ "lines": lines }).to_string())
                };
                let mut s = stream;
                write!(
                    s,
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                )
                .unwrap();
            }
            auths
        });
        (addr, handle)
    }

    #[test]
    fn http_round_trip_with_retry() {
        let (endpoint, handle) = serve(2, true);
        // Unique variable name keeps parallel tests independent.
        let var = "DOCFORGE_TEST_HTTP_KEY_RT";
        unsafe { std::env::set_var(var, "sekrit") };
        let p = HttpProvider::new(HttpConfig {
            endpoint,
            api_key_env: Some(var.into()),
            timeout_secs: 5.0,
            retries: 1,
        })
        .unwrap();
        let out = p.translate_lines(&["ab".into(), "c ⟦T0⟧".into()], "en", "ar").unwrap();
        assert_eq!(out, vec!["ar>AB", "ar>C ⟦T0⟧"]);
        let auths = handle.join().unwrap();
        assert!(auths.iter().all(|a| a.ends_with("Bearer sekrit")), "{auths:?}");
    }

    #[test]
    fn http_unreachable_is_reported() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let p = HttpProvider::new(HttpConfig {
            endpoint: format!("http://127.0.0.1:{port}/x"),
            api_key_env: None,
            timeout_secs: 1.0,
            retries: 0,
        })
        .unwrap();
        assert!(matches!(
            p.translate_lines(&["a".into()], "en", "ar"),
            Err(TranslationError::ProviderUnavailable(_))
        ));
    }

    #[test]
    fn missing_key_variable_is_config_error() {
        let r = HttpProvider::new(HttpConfig {
            endpoint: "http://127.0.0.1:1/".into(),
            api_key_env: Some("DOCFORGE_TEST_DEFINITELY_UNSET".into()),
            timeout_secs: 1.0,
            retries: 0,
        });
        assert!(matches!(r, Err(TranslationError::InvalidConfig(_))));
    }

    #[test]
    fn provider_config_from_toml() {
        let c: ProviderConfig = toml::from_str("kind = \"http\"\nendpoint = \"http://x\"\nretries = 4").unwrap();
        match c {
            ProviderConfig::Http(h) => {
                assert_eq!(h.retries, 4);
                assert_eq!(h.timeout_secs, 30.0);
            }
            other => panic!("{other:?}"),
        }
        let c: ProviderConfig = toml::from_str("kind = \"identity\"").unwrap();
        assert_eq!(c, ProviderConfig::Identity);
    }
}
