//! The external prior over HTTP against a scripted in-process provider, and
//! over standard streams against a child process.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use approx::assert_abs_diff_eq;

use cdl::corpus::{ContextWindow, Speaker, Utterance, MASK_TOKEN};
use cdl::pipeline::{read_scores, run_pipeline, PipelineError, PriorSpec, RunConfig, Stage};
use cdl::priors::{ExternalPrior, PriorError, PriorRequest, PriorResponse, PriorSource, StdioTransport};
use cdl::vocabulary::CandidateVocab;

#[allow(dead_code)]
mod mock {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/external_prior.rs"));
}

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn window(gloss: &[&str], mask_index: usize) -> ContextWindow {
    let utt = |i: u64, g: &[&str]| {
        Arc::new(Utterance {
            transcript_id: "t".into(),
            utterance_index: i,
            speaker: if i == 1 { Speaker::Child } else { Speaker::Caregiver },
            gloss_tokens: g.iter().map(|s| s.to_string()).collect(),
            phon_tokens: None,
            age_months: Some(20.0),
        })
    };
    ContextWindow {
        before: vec![utt(0, &["do", "you", "want", "to", "read"])],
        after: vec![utt(2, &["okay"])],
        masked_utterance: utt(1, gloss),
        mask_index,
    }
}

/// The best prior guesses for /wid/ in "I want to ___", with the remaining
/// mass spread evenly over the other candidates.
fn best_guesses_for_wid(vocab: &CandidateVocab) -> Vec<f64> {
    let named = [("see", 0.86), ("look", 0.03), ("go", 0.02), ("play", 0.01)];
    let rest = vocab.len() - named.len();
    let leftover = (1.0 - named.iter().map(|(_, p)| p).sum::<f64>()) / rest as f64;
    vocab
        .words()
        .map(|w| named.iter().find(|(n, _)| *n == w).map_or(leftover, |(_, p)| *p))
        .collect()
}

#[test]
fn scripted_vector_passes_through_unchanged() {
    let vocab = CandidateVocab::from_pairs(&[
        ("ball", "bɔl"),
        ("go", "ɡoʊ"),
        ("look", "lʊk"),
        ("play", "pleɪ"),
        ("read", "ɹid"),
        ("see", "si"),
        ("to", "tu"),
        ("want", "wɑnt"),
    ])
    .unwrap();
    let scripted = best_guesses_for_wid(&vocab);
    let reply = scripted.clone();
    let seen: Arc<Mutex<Vec<PriorRequest>>> = Arc::default();
    let log = Arc::clone(&seen);
    let endpoint = mock::serve(move |req| {
        log.lock().unwrap().push(req.clone());
        PriorResponse {
            id: req.id.clone(),
            probabilities: reply.clone(),
        }
    })
    .unwrap();

    let prior = ExternalPrior::http(&endpoint, Duration::from_secs(5));
    let ctx = window(&["i", "want", "to", "read"], 3);
    let got = prior.prior(&ctx, &vocab).unwrap();
    for (g, s) in got.probs().iter().zip(&scripted) {
        assert_abs_diff_eq!(*g, *s, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(got.probs()[vocab.index_of("see").unwrap()], 0.86, epsilon = 1e-9);

    let reqs = seen.lock().unwrap();
    assert_eq!(reqs.len(), 1);
    let req = &reqs[0];
    assert_eq!(req.candidates, vocab.words().collect::<Vec<_>>());
    assert_eq!(req.masked_utterance, ["i", "want", "to", MASK_TOKEN]);
    assert_eq!(req.mask_index, 3);
    assert_eq!(req.context_before, [["do", "you", "want", "to", "read"]]);
    assert_eq!(req.context_after, [["okay"]]);
}

#[test]
fn bad_responses_are_protocol_violations() {
    let vocab = CandidateVocab::from_pairs(&[("a", "a"), ("b", "b")]).unwrap();
    let ctx = window(&["a"], 0);
    type Responder = Box<dyn Fn(&PriorRequest) -> PriorResponse + Send + Sync>;
    let cases: Vec<(&str, Responder)> = vec![
        (
            "wrong id",
            Box::new(|_| PriorResponse {
                id: "other".into(),
                probabilities: vec![0.5, 0.5],
            }),
        ),
        (
            "wrong length",
            Box::new(|r| PriorResponse {
                id: r.id.clone(),
                probabilities: vec![1.0],
            }),
        ),
        (
            "bad sum",
            Box::new(|r| PriorResponse {
                id: r.id.clone(),
                probabilities: vec![0.5, 0.6],
            }),
        ),
        (
            "negative",
            Box::new(|r| PriorResponse {
                id: r.id.clone(),
                probabilities: vec![1.5, -0.5],
            }),
        ),
    ];
    for (name, respond) in cases {
        let endpoint = mock::serve(respond).unwrap();
        let prior = ExternalPrior::http(&endpoint, Duration::from_secs(5));
        let err = prior.prior(&ctx, &vocab).unwrap_err();
        assert!(matches!(err, PriorError::ProtocolViolation(_)), "{name}: {err}");
    }
}

fn external_config(out: &std::path::Path, endpoint: &str) -> RunConfig {
    let mut cfg = RunConfig::new(fixture("toy_corpus.jsonl"), fixture("toy_lexicon.tsv"), out);
    cfg.prior_vocab = Some(fixture("toy_whitelist.txt"));
    cfg.prior = PriorSpec::External {
        endpoint: endpoint.to_string(),
        timeout_ms: 5000,
    };
    cfg
}

#[test]
fn uniform_provider_matches_builtin_uniform() {
    let endpoint = mock::serve(|r| PriorResponse {
        id: r.id.clone(),
        probabilities: vec![1.0 / r.candidates.len() as f64; r.candidates.len()],
    })
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let m = run_pipeline(&external_config(out.path(), &endpoint)).unwrap();
    assert_eq!(m.tokens.scored_successes + m.tokens.scored_failures, 15);
    let read = |f: &str| read_scores(std::fs::File::open(out.path().join(f)).unwrap()).unwrap();
    let external = read("scores.csv");
    let uniform = read("scores_uniform.csv");
    assert_eq!(external.len(), uniform.len());
    for (e, u) in external.iter().zip(&uniform) {
        assert_eq!(e.token_id, u.token_id);
        assert_abs_diff_eq!(e.posterior_entropy, u.posterior_entropy, epsilon = 1e-6);
        if let (Some(a), Some(b)) = (e.posterior_surprisal, u.posterior_surprisal) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }
}

#[test]
fn violations_exclude_tokens_without_aborting() {
    // Every other request gets a mismatched id.
    let calls = Arc::new(Mutex::new(0usize));
    let endpoint = mock::serve(move |r| {
        let mut n = calls.lock().unwrap();
        *n += 1;
        PriorResponse {
            id: if n.is_multiple_of(2) {
                "bogus".into()
            } else {
                r.id.clone()
            },
            probabilities: vec![1.0 / r.candidates.len() as f64; r.candidates.len()],
        }
    })
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = external_config(out.path(), &endpoint);
    cfg.threads = Some(1);
    let m = run_pipeline(&cfg).unwrap();
    let scored = m.tokens.scored_successes + m.tokens.scored_failures;
    assert_eq!(scored, 8);
    assert_eq!(m.tokens.scoring_excluded.get("prior_rejected"), Some(&7));
}

#[test]
fn unreachable_provider_aborts_with_exit_code_4() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/prior", listener.local_addr().unwrap());
    drop(listener);
    let out = tempfile::tempdir().unwrap();
    let err = run_pipeline(&external_config(out.path(), &endpoint)).unwrap_err();
    assert!(matches!(err, PipelineError::Provider { .. }), "{err}");
    assert_eq!(err.stage(), Stage::Score);
    assert_eq!(err.exit_code(), 4);
    assert!(!out.path().join("manifest.json").exists());
}

#[cfg(unix)]
#[test]
fn stdio_provider_in_a_child_process() {
    let script = r#"read -r line; echo '{"id":"req-0","probabilities":[0.25,0.75]}'; read -r line"#;
    let transport = StdioTransport::spawn("sh", &["-c".to_string(), script.to_string()]).unwrap();
    let prior = ExternalPrior::new("sh", Box::new(transport));
    let vocab = CandidateVocab::from_pairs(&[("a", "a"), ("b", "b")]).unwrap();
    let p = prior.prior(&window(&["a"], 0), &vocab).unwrap();
    assert_eq!(p.probs(), [0.25, 0.75]);
    // The script exits after one answer.
    let err = prior.prior(&window(&["a"], 0), &vocab).unwrap_err();
    assert!(matches!(err, PriorError::ProviderUnreachable(_)), "{err}");
}
