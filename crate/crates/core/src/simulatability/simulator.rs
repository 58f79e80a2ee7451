//! Simulators: an HTTP chat-completions client and an offline mock.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PromptBundle;
use crate::attribution::Bucket;
use crate::corpus::sha256_hex;
use crate::error::{Error, Result};

/// Anything that answers a prompt with free text.
pub trait Simulator: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, prompt: &PromptBundle) -> Result<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MockMode {
    /// Replays the answer key.
    Oracle,
    /// Scores classes by overlap between sample words and the words of the
    /// concepts the global explanation marks as important.
    Lexical { seed: u64 },
    /// Uniform random classes.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockSimulator {
    pub mode: MockMode,
}

impl MockSimulator {
    pub fn new(mode: MockMode) -> Self {
        Self { mode }
    }
}

fn prompt_rng(seed: u64, prompt: &PromptBundle) -> ChaCha8Rng {
    let digest = sha256_hex(format!("{}\u{0}{}", prompt.system_text, prompt.user_text).as_bytes());
    let mix = u64::from_str_radix(&digest[..16], 16).expect("hex digest");
    ChaCha8Rng::seed_from_u64(seed ^ mix)
}

fn answer_lines(answers: &[(String, String)]) -> String {
    answers
        .iter()
        .map(|(tag, class)| format!("{tag}: {class}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

fn regexes() -> &'static [Regex; 5] {
    static RE: OnceLock<[Regex; 5]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            Regex::new(r"^concept_(\d+): aligned: \[(.*?)\](?:, opposed: \[(.*)\])?$").unwrap(),
            Regex::new(r"^concept_(\d+): label: '(.*)'$").unwrap(),
            Regex::new(r"^(.+?): \{(.*)\}$").unwrap(),
            Regex::new(r"'((?:[^'\\]|\\.)*)'").unwrap(),
            Regex::new(r"^(Sample_\d+): (.*)$").unwrap(),
        ]
    })
}

fn quoted_items(list: &str) -> Vec<String> {
    regexes()[3]
        .captures_iter(list)
        .map(|c| c[1].replace("\\'", "'").replace("\\\\", "\\"))
        .collect()
}

/// What the lexical mock reads back out of a prompt's text.
#[derive(Debug, Default)]
struct GlobalView {
    classes: Vec<String>,
    /// concept → (aligned tokens, opposed tokens)
    concepts: HashMap<usize, (Vec<String>, Vec<String>)>,
    /// class → concept → bucket
    importance: BTreeMap<String, Vec<(usize, Bucket)>>,
}

fn read_global(system_text: &str) -> Option<GlobalView> {
    let re = regexes();
    let mut view = GlobalView::default();
    let mut in_classes = false;
    for line in system_text.lines() {
        if let Some(rest) = line.strip_prefix("The classes are: [") {
            let rest = rest.trim_end_matches(']');
            view.classes = rest.split(", ").map(str::to_string).collect();
            continue;
        }
        if line.starts_with("The most important concepts and their importance") {
            in_classes = true;
            continue;
        }
        if line.is_empty() {
            in_classes = false;
            continue;
        }
        if let Some(c) = re[0].captures(line) {
            let j: usize = c[1].parse().ok()?;
            let aligned = quoted_items(&c[2]).iter().flat_map(|w| tokens(w)).collect();
            let opposed = c
                .get(3)
                .map(|m| quoted_items(m.as_str()).iter().flat_map(|w| tokens(w)).collect())
                .unwrap_or_default();
            view.concepts.insert(j, (aligned, opposed));
        } else if let Some(c) = re[1].captures(line) {
            let j: usize = c[1].parse().ok()?;
            view.concepts.insert(j, (tokens(&c[2]), Vec::new()));
        } else if in_classes {
            if let Some(c) = re[2].captures(line) {
                let items = quoted_items(&c[2]);
                let mut entries = Vec::new();
                for pair in items.chunks(2) {
                    if let [concept, symbol] = pair {
                        let j = concept.strip_prefix("concept_")?.parse().ok()?;
                        entries.push((j, Bucket::from_symbol(symbol)?));
                    }
                }
                view.importance.insert(c[1].to_string(), entries);
            }
        }
    }
    (!view.importance.is_empty() && !view.classes.is_empty()).then_some(view)
}

fn bucket_weight(b: Bucket) -> f64 {
    match b {
        Bucket::StrongNegative => -2.0,
        Bucket::Negative => -1.0,
        Bucket::Positive => 1.0,
        Bucket::StrongPositive => 2.0,
    }
}

fn ep_samples(user_text: &str) -> Vec<(String, String)> {
    user_text
        .lines()
        .filter_map(|l| regexes()[4].captures(l))
        .map(|c| (c[1].to_string(), c[2].to_string()))
        .collect()
}

fn pick_best(scores: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..scores.len()).filter(|&c| scores[c] == best).collect();
    tied[rng.random_range(0..tied.len())]
}

fn lexical_answers(view: &GlobalView, samples: &[(String, String)], rng: &mut ChaCha8Rng) -> Vec<(String, String)> {
    samples
        .iter()
        .map(|(tag, text)| {
            let toks = tokens(text);
            let scores: Vec<f64> = view
                .classes
                .iter()
                .map(|class| {
                    let Some(entries) = view.importance.get(class) else { return 0.0 };
                    entries
                        .iter()
                        .map(|&(j, b)| {
                            let Some((aligned, opposed)) = view.concepts.get(&j) else { return 0.0 };
                            let hits = toks.iter().filter(|t| aligned.contains(t)).count() as f64
                                - toks.iter().filter(|t| opposed.contains(t)).count() as f64;
                            bucket_weight(b) * hits
                        })
                        .sum()
                })
                .collect();
            let c = pick_best(&scores, rng);
            (tag.clone(), view.classes[c].clone())
        })
        .collect()
}

impl Simulator for MockSimulator {
    fn id(&self) -> String {
        match self.mode {
            MockMode::Oracle => "mock-oracle".into(),
            MockMode::Lexical { seed } => format!("mock-lexical-{seed}"),
            MockMode::Random { seed } => format!("mock-random-{seed}"),
        }
    }

    fn complete(&self, prompt: &PromptBundle) -> Result<String> {
        let samples = ep_samples(&prompt.user_text);
        let random = |seed: u64| {
            let mut rng = prompt_rng(seed, prompt);
            let answers: Vec<(String, String)> = samples
                .iter()
                .map(|(tag, _)| {
                    let c = rng.random_range(0..prompt.class_display.len());
                    (tag.clone(), prompt.class_display[c].clone())
                })
                .collect();
            answer_lines(&answers)
        };
        Ok(match self.mode {
            MockMode::Oracle => {
                let answers: Vec<(String, String)> = prompt
                    .ep_tags
                    .iter()
                    .map(|t| (t.clone(), prompt.class_display[prompt.answer_key[t]].clone()))
                    .collect();
                answer_lines(&answers)
            }
            MockMode::Random { seed } => random(seed),
            MockMode::Lexical { seed } => match read_global(&prompt.system_text) {
                Some(view) => {
                    let mut rng = prompt_rng(seed, prompt);
                    answer_lines(&lexical_answers(&view, &samples, &mut rng))
                }
                None => {
                    log::warn!(
                        "lexical mock: prompt {} has no global explanation, answering at random",
                        prompt.setting.prompt
                    );
                    random(seed)
                }
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSimulatorConfig {
    pub id: String,
    /// chat-completions URL
    pub endpoint: String,
    pub model: String,
    /// environment variable holding the bearer token
    pub api_key_env: Option<String>,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
    pub temperature: f64,
}

impl Default for HttpSimulatorConfig {
    fn default() -> Self {
        Self {
            id: "llm".into(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            max_retries: 4,
            backoff_base_ms: 500,
            timeout_secs: 120,
            temperature: 0.0,
        }
    }
}

#[derive(Debug)]
pub struct HttpSimulator {
    config: HttpSimulatorConfig,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Done(String),
    Transient(String),
    Fatal(String),
}

impl HttpSimulator {
    pub fn new(config: HttpSimulatorConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Parameter(format!("cannot build HTTP client: {e}")))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &HttpSimulatorConfig {
        &self.config
    }

    fn attempt(&self, body: &serde_json::Value, key: Option<&str>) -> Attempt {
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_connect() || e.is_timeout() => return Attempt::Transient(e.to_string()),
            Err(e) => return Attempt::Fatal(e.to_string()),
        };
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Transient(format!("HTTP {status}"));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Attempt::Fatal(format!("HTTP {status}: {text}"));
        }
        let json: serde_json::Value = match resp.json() {
            Ok(v) => v,
            Err(e) if e.is_timeout() => return Attempt::Transient(e.to_string()),
            Err(e) => return Attempt::Fatal(format!("invalid response body: {e}")),
        };
        match json["choices"][0]["message"]["content"].as_str() {
            Some(text) => Attempt::Done(text.to_string()),
            None => Attempt::Fatal("response has no choices[0].message.content".into()),
        }
    }
}

impl Simulator for HttpSimulator {
    fn id(&self) -> String {
        self.config.id.clone()
    }

    fn complete(&self, prompt: &PromptBundle) -> Result<String> {
        let transport = |message: String| Error::Transport {
            setting: prompt.setting.slug(),
            message,
        };
        let key = match &self.config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| transport(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        });
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let wait = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::warn!("{}: retry {attempt} after {wait} ms ({last})", prompt.setting);
                thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(&body, key.as_deref()) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Transient(msg) => last = msg,
                Attempt::Fatal(msg) => return Err(transport(msg)),
            }
        }
        Err(transport(format!(
            "gave up after {} attempts: {last}",
            self.config.max_retries + 1
        )))
    }
}
