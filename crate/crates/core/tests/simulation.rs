use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use conceptsim::attribution::{global_importance, ImportanceReport};
use conceptsim::concepts::{fit_concept_space_with_codes, ExtractionMethod, FitOptions};
use conceptsim::corpus::{generate_synthetic_bundle, ActivationBundle, SettingKey, SyntheticParams};
use conceptsim::interpretation::{interpret, InterpretationMethod};
use conceptsim::simulatability::*;
use conceptsim::Error;

fn setting(variant: PromptVariant, seed: u64) -> SettingKey {
    SettingKey {
        dataset_id: "planted".into(),
        model_id: "relu".into(),
        seed,
        extraction: variant.kind.is_explained().then_some(ExtractionMethod::Nmf),
        interpretation: variant.kind.is_explained().then_some(InterpretationMethod::Cmaw),
        prompt: variant,
        simulator_id: "mock".into(),
        k: if variant.kind.is_explained() { 4 } else { 0 },
    }
}

fn planted(seed: u64) -> ActivationBundle {
    generate_synthetic_bundle(&SyntheticParams::new(200, 16, 3, 4, seed, true))
        .unwrap()
        .bundle
}

fn explained_prompt(b: &ActivationBundle, variant: PromptVariant, seed: u64) -> PromptBundle {
    let fitted = fit_concept_space_with_codes(b, ExtractionMethod::Nmf, 4, seed, &FitOptions::default()).unwrap();
    let global = global_importance(&fitted.space, b, fitted.codes.view()).unwrap();
    let report = ImportanceReport::build(global, &b.class_names).unwrap();
    let descriptions = interpret(InterpretationMethod::Cmaw, &fitted.space, b, None).unwrap();
    let split = select_samples(b, seed).unwrap();
    let inputs = ExplanationInputs {
        global: Some(&report),
        descriptions: Some(&descriptions),
        local: None,
    };
    build_prompt(&setting(variant, seed), b, &split, inputs).unwrap()
}

fn plain_prompt(b: &ActivationBundle, seed: u64) -> PromptBundle {
    let split = select_samples(b, seed).unwrap();
    let variant = PromptVariant::new(PromptType::Ne2, false);
    build_prompt(&setting(variant, seed), b, &split, ExplanationInputs::default()).unwrap()
}

#[test]
fn accuracy_is_exactly_k_over_20() {
    let b = planted(0);
    let p = plain_prompt(&b, 0);
    assert_eq!(p.ep_tags.len(), 20);
    for k in 0..=20 {
        let lines: Vec<String> = p
            .ep_tags
            .iter()
            .enumerate()
            .map(|(i, tag)| {
                let truth = p.answer_key[tag];
                let answer = if i < k { truth } else { (truth + 1) % 3 };
                format!("{tag}: {}", p.class_display[answer])
            })
            .collect();
        let r = score_response(&p, &lines.join("\n"));
        let brute = r.outcomes.iter().filter(|o| o.predicted == Some(o.expected)).count();
        assert_eq!(brute, k);
        assert_eq!(r.accuracy, k as f64 / 20.0);
        assert!(!r.malformed);
    }
}

#[test]
fn oracle_is_perfect_and_unknown_classes_score_zero() {
    let b = planted(1);
    let p = plain_prompt(&b, 1);
    let oracle = MockSimulator::new(MockMode::Oracle);
    assert_eq!(run_simulator(&p, &oracle).unwrap().accuracy, 1.0);
    let wrong: Vec<String> = p.ep_tags.iter().map(|t| format!("{t}: zebra")).collect();
    let r = score_response(&p, &wrong.join("\n"));
    assert_eq!(r.accuracy, 0.0);
    assert_eq!(r.parse_failures(), 20);
    assert!(r.malformed);
}

#[test]
fn random_mock_is_at_chance() {
    let b = planted(2);
    let p = plain_prompt(&b, 2);
    let runs = 1000;
    let total: f64 = (0..runs)
        .map(|seed| {
            run_simulator(&p, &MockSimulator::new(MockMode::Random { seed }))
                .unwrap()
                .accuracy
        })
        .sum();
    let mean = total / runs as f64;
    let chance = 1.0 / 3.0;
    let sigma = (chance * (1.0 - chance) / (20.0 * runs as f64)).sqrt();
    assert!((mean - chance).abs() <= 3.0 * sigma, "mean {mean}, 3σ {}", 3.0 * sigma);
}

#[test]
fn mocks_are_deterministic() {
    let b = planted(3);
    let p = explained_prompt(&b, PromptVariant::new(PromptType::E2, false), 3);
    for mode in [MockMode::Lexical { seed: 5 }, MockMode::Random { seed: 5 }] {
        let m = MockSimulator::new(mode);
        assert_eq!(m.complete(&p).unwrap(), m.complete(&p).unwrap());
    }
}

#[test]
fn lexical_mock_falls_back_to_random_without_global_block() {
    let b = planted(4);
    let p = plain_prompt(&b, 4);
    let text = MockSimulator::new(MockMode::Lexical { seed: 1 }).complete(&p).unwrap();
    let r = score_response(&p, &text);
    assert_eq!(r.parse_failures(), 0);
}

#[test]
fn lexical_mock_beats_random_on_explained_prompts() {
    let (mut lexical, mut random) = (0.0, 0.0);
    for seed in 0..20 {
        let b = planted(seed);
        let p = explained_prompt(&b, PromptVariant::new(PromptType::E2, false), seed);
        lexical += run_simulator(&p, &MockSimulator::new(MockMode::Lexical { seed })).unwrap().accuracy;
        random += run_simulator(&p, &MockSimulator::new(MockMode::Random { seed })).unwrap().accuracy;
    }
    assert!(lexical > random, "lexical {} vs random {}", lexical / 20.0, random / 20.0);
}

/// Serves canned HTTP responses in order, one per connection.
fn serve(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for (status, body) in responses {
            let Ok((mut stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut request = vec![0; length];
            reader.read_exact(&mut request).unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, hits)
}

fn http(endpoint: String, retries: u32) -> HttpSimulator {
    HttpSimulator::new(HttpSimulatorConfig {
        id: "local".into(),
        endpoint,
        model: "test".into(),
        api_key_env: None,
        max_retries: retries,
        backoff_base_ms: 1,
        timeout_secs: 5,
        temperature: 0.0,
    })
    .unwrap()
}

#[test]
fn http_simulator_retries_transient_failures() {
    let b = planted(5);
    let p = plain_prompt(&b, 5);
    let answer: Vec<String> = p
        .ep_tags
        .iter()
        .map(|t| format!("{t}: {}", p.class_display[p.answer_key[t]]))
        .collect();
    let ok = serde_json::json!({"choices": [{"message": {"content": answer.join("\n")}}]}).to_string();
    let (url, hits) = serve(vec![(503, "{}".into()), (429, "{}".into()), (200, ok)]);
    let r = run_simulator(&p, &http(url, 3)).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn exhausted_retries_name_the_setting() {
    let b = planted(6);
    let p = plain_prompt(&b, 6);
    let (url, hits) = serve(vec![(500, "{}".into()), (500, "{}".into())]);
    let err = http(url, 1).complete(&p).unwrap_err();
    assert_eq!(hits.load(Ordering::SeqCst), 2);
    match err {
        Error::Transport { setting, .. } => assert_eq!(setting, p.setting.slug()),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn client_errors_are_not_retried() {
    let b = planted(7);
    let p = plain_prompt(&b, 7);
    let (url, hits) = serve(vec![(400, "{\"error\": \"bad\"}".into()), (200, "{}".into())]);
    assert!(http(url, 3).complete(&p).is_err());
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}
