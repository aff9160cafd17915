//! Client side of the prior-provider wire protocol.
//!
//! A request names the candidates and carries the masked context; the response
//! carries one probability per candidate. The same JSON bodies travel either as
//! HTTP `POST /prior` or one object per line over a child process's stdio.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{PriorDistribution, PriorError, PriorSource, PriorSourceKind};
use crate::corpus::ContextWindow;
use crate::vocabulary::CandidateVocab;

/// Provider sums within `1 ± RENORMALIZE_BAND` are renormalized; others rejected.
pub const RENORMALIZE_BAND: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorRequest {
    pub id: String,
    pub candidates: Vec<String>,
    pub context_before: Vec<Vec<String>>,
    pub context_after: Vec<Vec<String>>,
    pub masked_utterance: Vec<String>,
    pub mask_index: usize,
}

impl PriorRequest {
    pub fn new(id: String, ctx: &ContextWindow, vocab: &CandidateVocab) -> Self {
        PriorRequest {
            id,
            candidates: vocab.words().map(str::to_string).collect(),
            context_before: ctx.before.iter().map(|u| u.gloss_tokens.clone()).collect(),
            context_after: ctx.after.iter().map(|u| u.gloss_tokens.clone()).collect(),
            masked_utterance: ctx.masked_gloss(),
            mask_index: ctx.mask_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorResponse {
    pub id: String,
    pub probabilities: Vec<f64>,
}

/// Checks a response against its request and returns the probability vector.
///
/// A vector whose sum is off by at most [`RENORMALIZE_BAND`] is rescaled; an
/// exact sum of one is passed through untouched.
pub fn validate_response(req: &PriorRequest, resp: &PriorResponse) -> Result<Vec<f64>, PriorError> {
    if resp.id != req.id {
        return Err(PriorError::ProtocolViolation(format!(
            "response id {:?} does not match request id {:?}",
            resp.id, req.id
        )));
    }
    if resp.probabilities.len() != req.candidates.len() {
        return Err(PriorError::ProtocolViolation(format!(
            "{} probabilities for {} candidates",
            resp.probabilities.len(),
            req.candidates.len()
        )));
    }
    if let Some((i, p)) = resp
        .probabilities
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(PriorError::ProtocolViolation(format!(
            "probability {p} for candidate {:?}",
            req.candidates[i]
        )));
    }
    let sum: f64 = resp.probabilities.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZE_BAND {
        return Err(PriorError::ProtocolViolation(format!("probabilities sum to {sum}")));
    }
    if sum == 1.0 {
        Ok(resp.probabilities.clone())
    } else {
        Ok(resp.probabilities.iter().map(|p| p / sum).collect())
    }
}

/// One request in flight at a time.
pub trait PriorTransport: Send {
    fn exchange(&mut self, req: &PriorRequest) -> Result<PriorResponse, PriorError>;
}

/// `POST {endpoint}` with a JSON body. The endpoint should include the `/prior` path.
pub struct HttpTransport {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .new_agent();
        HttpTransport {
            endpoint: endpoint.into(),
            agent,
        }
    }
}

impl PriorTransport for HttpTransport {
    fn exchange(&mut self, req: &PriorRequest) -> Result<PriorResponse, PriorError> {
        let mut resp = self.agent.post(&self.endpoint).send_json(req).map_err(|e| match e {
            ureq::Error::StatusCode(code) => PriorError::ProtocolViolation(format!("HTTP status {code}")),
            other => PriorError::ProviderUnreachable(format!("{}: {other}", self.endpoint)),
        })?;
        resp.body_mut()
            .read_json::<PriorResponse>()
            .map_err(|e| PriorError::ProtocolViolation(format!("bad response body: {e}")))
    }
}

/// Line-delimited JSON over a reader/writer pair, usually a child's stdio.
pub struct StdioTransport<R, W> {
    reader: R,
    writer: W,
    child: Option<Child>,
}

impl<R: BufRead + Send, W: Write + Send> StdioTransport<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        StdioTransport {
            reader,
            writer,
            child: None,
        }
    }
}

impl StdioTransport<BufReader<ChildStdout>, ChildStdin> {
    /// Starts `program` and talks to it over stdin/stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, PriorError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| PriorError::ProviderUnreachable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(StdioTransport {
            reader: BufReader::new(stdout),
            writer: stdin,
            child: Some(child),
        })
    }
}

impl<R, W> Drop for StdioTransport<R, W> {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl<R: BufRead + Send, W: Write + Send> PriorTransport for StdioTransport<R, W> {
    fn exchange(&mut self, req: &PriorRequest) -> Result<PriorResponse, PriorError> {
        let unreachable = |e: std::io::Error| PriorError::ProviderUnreachable(e.to_string());
        let body = serde_json::to_string(req).expect("request serializes");
        self.writer.write_all(body.as_bytes()).map_err(unreachable)?;
        self.writer.write_all(b"\n").map_err(unreachable)?;
        self.writer.flush().map_err(unreachable)?;

        let mut line = String::new();
        let n = self.reader.read_line(&mut line).map_err(unreachable)?;
        if n == 0 {
            return Err(PriorError::ProviderUnreachable("provider closed its output".into()));
        }
        serde_json::from_str(line.trim_end())
            .map_err(|e| PriorError::ProtocolViolation(format!("bad response line: {e}")))
    }
}

/// A [`PriorSource`] backed by an external provider.
pub struct ExternalPrior {
    provider_id: String,
    transport: Mutex<Box<dyn PriorTransport>>,
    next_id: AtomicU64,
}

impl ExternalPrior {
    pub fn new(provider_id: impl Into<String>, transport: Box<dyn PriorTransport>) -> Self {
        ExternalPrior {
            provider_id: provider_id.into(),
            transport: Mutex::new(transport),
            next_id: AtomicU64::new(0),
        }
    }

    pub fn http(endpoint: &str, timeout: Duration) -> Self {
        Self::new(endpoint, Box::new(HttpTransport::new(endpoint, timeout)))
    }
}

impl PriorSource for ExternalPrior {
    fn kind(&self) -> PriorSourceKind {
        PriorSourceKind::External(self.provider_id.clone())
    }

    fn is_context_invariant(&self) -> bool {
        false
    }

    fn prior(&self, ctx: &ContextWindow, vocab: &CandidateVocab) -> Result<PriorDistribution, PriorError> {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let req = PriorRequest::new(format!("req-{n}"), ctx, vocab);
        let resp = {
            let mut transport = self.transport.lock().unwrap_or_else(|p| p.into_inner());
            transport.exchange(&req)?
        };
        let probs = validate_response(&req, &resp).inspect_err(|e| {
            warn!(provider = %self.provider_id, request = %req.id, error = %e, "prior rejected");
        })?;
        PriorDistribution::new(probs, self.kind(), vocab.len())
            .map_err(|e| PriorError::ProtocolViolation(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;
    use std::sync::Arc;

    use super::*;
    use crate::corpus::{Speaker, Utterance};

    fn req(n: usize) -> PriorRequest {
        PriorRequest {
            id: "r1".into(),
            candidates: (0..n).map(|i| format!("w{i}")).collect(),
            context_before: vec![],
            context_after: vec![],
            masked_utterance: vec!["<mask>".into()],
            mask_index: 0,
        }
    }

    fn resp(p: &[f64]) -> PriorResponse {
        PriorResponse {
            id: "r1".into(),
            probabilities: p.to_vec(),
        }
    }

    #[test]
    fn accepts_exact_vector_verbatim() {
        assert_eq!(validate_response(&req(2), &resp(&[0.5, 0.5])).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_sum() {
        assert!(matches!(
            validate_response(&req(2), &resp(&[0.6, 0.5])),
            Err(PriorError::ProtocolViolation(_))
        ));
    }

    #[test]
    fn renormalizes_inside_band() {
        let p = validate_response(&req(2), &resp(&[0.5, 0.5005])).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[1] > p[0]);
    }

    #[test]
    fn rejects_length_sign_nan_and_id() {
        for bad in [resp(&[1.0]), resp(&[1.5, -0.5]), resp(&[f64::NAN, 1.0])] {
            assert!(matches!(
                validate_response(&req(2), &bad),
                Err(PriorError::ProtocolViolation(_))
            ));
        }
        let mut wrong_id = resp(&[0.5, 0.5]);
        wrong_id.id = "other".into();
        assert!(validate_response(&req(2), &wrong_id).is_err());
    }

    #[test]
    fn request_masks_target() {
        let utt = Arc::new(Utterance {
            transcript_id: "t".into(),
            utterance_index: 2,
            speaker: Speaker::Child,
            gloss_tokens: vec!["i".into(), "want".into(), "to".into(), "read".into()],
            phon_tokens: None,
            age_months: None,
        });
        let ctx = ContextWindow::single(utt, 3);
        let vocab = CandidateVocab::from_pairs(&[("read", "ɹ i d"), ("see", "s i")]).unwrap();
        let r = PriorRequest::new("x".into(), &ctx, &vocab);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "id": "x",
                "candidates": ["read", "see"],
                "context_before": [],
                "context_after": [],
                "masked_utterance": ["i", "want", "to", "<mask>"],
                "mask_index": 3
            })
        );
    }

    #[test]
    fn stdio_round_trip() {
        let reply = "{\"id\":\"req-0\",\"probabilities\":[0.25,0.75]}\n";
        let transport = StdioTransport::new(Cursor::new(reply.as_bytes().to_vec()), Vec::new());
        let prior = ExternalPrior::new("scripted", Box::new(transport));
        let vocab = CandidateVocab::from_pairs(&[("a", "a"), ("b", "b")]).unwrap();
        let utt = Arc::new(Utterance {
            transcript_id: "t".into(),
            utterance_index: 0,
            speaker: Speaker::Child,
            gloss_tokens: vec!["a".into()],
            phon_tokens: None,
            age_months: None,
        });
        let p = prior.prior(&ContextWindow::single(utt.clone(), 0), &vocab).unwrap();
        assert_eq!(p.probs(), [0.25, 0.75]);
        assert_eq!(p.source(), &PriorSourceKind::External("scripted".into()));
        // Script exhausted: the provider has gone away.
        assert!(matches!(
            prior.prior(&ContextWindow::single(utt, 0), &vocab),
            Err(PriorError::ProviderUnreachable(_))
        ));
    }

    #[test]
    fn http_unreachable() {
        let prior = ExternalPrior::http("http://127.0.0.1:1/prior", Duration::from_millis(500));
        let vocab = CandidateVocab::from_pairs(&[("a", "a")]).unwrap();
        let utt = Arc::new(Utterance {
            transcript_id: "t".into(),
            utterance_index: 0,
            speaker: Speaker::Child,
            gloss_tokens: vec!["a".into()],
            phon_tokens: None,
            age_months: None,
        });
        assert!(matches!(
            prior.prior(&ContextWindow::single(utt, 0), &vocab),
            Err(PriorError::ProviderUnreachable(_))
        ));
    }
}
