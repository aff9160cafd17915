// Priors from an out-of-process provider over the `/prior` JSON protocol.
//
// A small in-process HTTP server stands in for a masked language model: it
// strongly expects "ball" after "the" and is uniform elsewhere.

use std::error::Error;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use cdl::corpus::{ContextWindow, ProductionToken, Speaker, TokenKind, Utterance};
use cdl::phonology::tokenize_ipa;
use cdl::posterior::{score_token, ScoreConfig};
use cdl::priors::{ExternalPrior, PriorRequest, PriorResponse};
use cdl::vocabulary::CandidateVocab;

/// Serves `POST /prior` on an ephemeral localhost port and returns the URL.
/// `respond` maps each decoded request to the reply body.
pub fn serve<F>(respond: F) -> io::Result<String>
where
    F: Fn(&PriorRequest) -> PriorResponse + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}/prior", listener.local_addr()?);
    let respond = Arc::new(respond);
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let respond = Arc::clone(&respond);
            std::thread::spawn(move || {
                let _ = handle(stream, respond.as_ref());
            });
        }
    });
    Ok(url)
}

fn handle(stream: TcpStream, respond: &dyn Fn(&PriorRequest) -> PriorResponse) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    loop {
        let mut content_length = 0;
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        loop {
            line.clear();
            reader.read_line(&mut line)?;
            let header = line.trim_end();
            if header.is_empty() {
                break;
            }
            if let Some((name, value)) = header.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    content_length = value.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; content_length];
        reader.read_exact(&mut body)?;
        let (status, reply) = match serde_json::from_slice::<PriorRequest>(&body) {
            Ok(req) => ("200 OK", serde_json::to_string(&respond(&req))?),
            Err(e) => ("400 Bad Request", format!("{{\"error\":{:?}}}", e.to_string())),
        };
        write!(
            writer,
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{reply}",
            reply.len()
        )?;
        writer.flush()?;
    }
}

fn toy_model(req: &PriorRequest) -> PriorResponse {
    let n = req.candidates.len();
    let after_the = req.mask_index > 0 && req.masked_utterance[req.mask_index - 1] == "the";
    let probabilities = match req.candidates.iter().position(|w| w == "ball") {
        Some(ball) if after_the && n > 1 => (0..n)
            .map(|i| if i == ball { 0.9 } else { 0.1 / (n - 1) as f64 })
            .collect(),
        _ => vec![1.0 / n as f64; n],
    };
    PriorResponse {
        id: req.id.clone(),
        probabilities,
    }
}

fn token(gloss: &[&str], mask_index: usize, heard: &str) -> Result<ProductionToken, Box<dyn Error>> {
    let utt = Arc::new(Utterance {
        transcript_id: "demo".into(),
        utterance_index: 0,
        speaker: Speaker::Child,
        gloss_tokens: gloss.iter().map(|g| g.to_string()).collect(),
        phon_tokens: None,
        age_months: Some(24.0),
    });
    Ok(ProductionToken {
        id: ProductionToken::make_id("demo", 0, mask_index),
        observed: tokenize_ipa(heard)?,
        kind: TokenKind::Success {
            gloss: gloss[mask_index].to_string(),
        },
        context: ContextWindow::single(utt, mask_index),
        age_months: Some(24.0),
        transcript_id: "demo".into(),
        utterance_index: 0,
        token_index: mask_index,
    })
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let endpoint = serve(toy_model)?;
    let prior = ExternalPrior::http(&endpoint, Duration::from_secs(5));
    let vocab = CandidateVocab::from_pairs(&[("ball", "bɔl"), ("bowl", "bol"), ("doll", "dɑl"), ("see", "si")])?;
    let ball = vocab.index_of("ball").ok_or("ball missing")?;
    let cfg = ScoreConfig::default();

    // The same ambiguous production, with and without a helpful context.
    for gloss in [&["see", "the", "ball"][..], &["ball"][..]] {
        let t = token(gloss, gloss.len() - 1, "bɑl")?;
        let r = score_token(&t, &prior, &vocab, &cfg, None)?;
        println!(
            "{:16} P(ball) prior {:.3} posterior {:.3}",
            t.context.masked_gloss().join(" "),
            r.prior[ball],
            r.posterior[ball]
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
