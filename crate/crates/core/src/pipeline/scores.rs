//! Reading and writing per-token score files.

use std::io::{Read, Write};

use crate::posterior::TokenScore;

const LEADING: [&str; 7] = [
    "token_id",
    "kind",
    "age_months",
    "edit_distance",
    "prior_surprisal",
    "posterior_surprisal",
    "posterior_entropy",
];
const TRAILING: [&str; 2] = ["prior_entropy", "vocab_size"];

#[derive(Debug, thiserror::Error)]
pub enum ScoreFileError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `token_id,kind,age_months,edit_distance,prior_surprisal,
/// posterior_surprisal,posterior_entropy,top1,top1_prob,…,prior_entropy,vocab_size`.
/// Absent values are empty cells; `top_k` fixes the number of top columns.
pub fn write_scores<W: Write>(out: W, scores: &[TokenScore], top_k: usize) -> Result<(), ScoreFileError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = LEADING.iter().map(|s| s.to_string()).collect();
    for k in 1..=top_k {
        header.push(format!("top{k}"));
        header.push(format!("top{k}_prob"));
    }
    header.extend(TRAILING.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for s in scores {
        let mut row = vec![
            s.token_id.clone(),
            s.kind.clone(),
            opt(s.age_months),
            opt(s.edit_distance),
            opt(s.prior_surprisal),
            opt(s.posterior_surprisal),
            s.posterior_entropy.to_string(),
        ];
        for k in 0..top_k {
            match s.top_k.get(k) {
                Some((word, p)) => {
                    row.push(word.clone());
                    row.push(p.to_string());
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        row.push(s.prior_entropy.to_string());
        row.push(s.vocab_size.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a file written by [`write_scores`]. Floats round-trip exactly.
pub fn read_scores<R: Read>(input: R) -> Result<Vec<TokenScore>, ScoreFileError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let n = cols.len();
    if n < LEADING.len() + TRAILING.len()
        || cols[..LEADING.len()] != LEADING
        || cols[n - TRAILING.len()..] != TRAILING
        || !(n - LEADING.len() - TRAILING.len()).is_multiple_of(2)
    {
        return Err(ScoreFileError::Header(cols.join(",")));
    }
    let top_k = (n - LEADING.len() - TRAILING.len()) / 2;

    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |field: &str, v: &str| ScoreFileError::Row {
            line,
            message: format!("{field}: cannot parse {v:?}"),
        };
        let float = |i: usize| -> Result<Option<f64>, ScoreFileError> {
            let v = &rec[i];
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad(cols[i], v))
            }
        };
        let required = |i: usize| float(i)?.ok_or_else(|| bad(cols[i], ""));
        let edit_distance = match &rec[3] {
            "" => None,
            v => Some(v.parse().map_err(|_| bad("edit_distance", v))?),
        };
        let mut top = Vec::new();
        for k in 0..top_k {
            let i = LEADING.len() + 2 * k;
            if !rec[i].is_empty() {
                top.push((rec[i].to_string(), required(i + 1)?));
            }
        }
        out.push(TokenScore {
            token_id: rec[0].to_string(),
            kind: rec[1].to_string(),
            age_months: float(2)?,
            edit_distance,
            prior_surprisal: float(4)?,
            posterior_surprisal: float(5)?,
            posterior_entropy: required(6)?,
            prior_entropy: required(n - 2)?,
            vocab_size: rec[n - 1].parse().map_err(|_| bad("vocab_size", &rec[n - 1]))?,
            top_k: top,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TokenScore> {
        vec![
            TokenScore {
                token_id: "t1:0:3".into(),
                kind: "success".into(),
                age_months: Some(20.5),
                edit_distance: Some(1),
                prior_surprisal: Some(1.0 / 3.0),
                posterior_surprisal: Some(0.1),
                posterior_entropy: 0.7,
                prior_entropy: 2.0,
                vocab_size: 3,
                top_k: vec![("weed".into(), 0.6), ("read, again".into(), 0.3), ("see".into(), 0.1)],
            },
            TokenScore {
                token_id: "t1:1:0".into(),
                kind: "failure".into(),
                age_months: None,
                edit_distance: None,
                prior_surprisal: None,
                posterior_surprisal: None,
                posterior_entropy: 1.2,
                prior_entropy: 2.0,
                vocab_size: 3,
                top_k: vec![("see".into(), 1.0)],
            },
        ]
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        write_scores(&mut buf, &sample(), 3).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "token_id,kind,age_months,edit_distance,prior_surprisal,posterior_surprisal,posterior_entropy,top1,top1_prob,top2,top2_prob,top3,top3_prob,prior_entropy,vocab_size\n"
        ));
        assert_eq!(read_scores(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(matches!(
            read_scores("a,b\n1,2\n".as_bytes()),
            Err(ScoreFileError::Header(_))
        ));
    }
}
