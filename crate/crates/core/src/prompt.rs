//! Text prompts for a series: raw values (SDP), a templated narration of
//! each sub-series (DDP), and a templated feature summary (FP).
//!
//! Every prompt must fit the encoder's token budget. Series are cut into
//! equal-length chunks with a shorter tail; the chunk length is the largest
//! one for which every rendered chunk passes the backend's own counter.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::features::FeatureVector;

pub const MAX_PRECISION: u8 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("token counter failed: {0}")]
pub struct CountError(pub String);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("cannot render a non-finite value ({0})")]
    NonFinite(f64),
    #[error("series is empty")]
    EmptySeries,
    #[error("feature vector is empty")]
    EmptyFeatures,
    #[error("chunk length must be at least 1")]
    ZeroChunkLen,
    #[error("precision {0} outside [0, {MAX_PRECISION}]")]
    Precision(u8),
    #[error("no chunk length fits a budget of {budget} tokens for {kind}")]
    NothingFits { kind: PromptKind, budget: usize },
    #[error("feature clause for {feature} alone exceeds the budget of {budget} tokens")]
    ClauseTooLong { feature: String, budget: usize },
    #[error("{0} prompts are not built from series chunks")]
    NotChunked(PromptKind),
    #[error(transparent)]
    Counter(#[from] CountError),
}

/// Prompt kinds, declared in canonical fusion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PromptKind {
    Sdp,
    Ddp,
    Fp,
}

impl PromptKind {
    pub const ALL: [PromptKind; 3] = [PromptKind::Sdp, PromptKind::Ddp, PromptKind::Fp];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Sdp => "SDP",
            PromptKind::Ddp => "DDP",
            PromptKind::Fp => "FP",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sdp" => Ok(PromptKind::Sdp),
            "ddp" => Ok(PromptKind::Ddp),
            "fp" => Ok(PromptKind::Fp),
            other => Err(format!("unknown prompt kind {other:?} (expected sdp, ddp or fp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RenderConfig {
    /// Digits after the decimal point.
    pub precision: u8,
    pub value_separator: String,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { precision: 4, value_separator: ", ".to_string() }
    }
}

impl RenderConfig {
    pub fn with_precision(precision: u8) -> Self {
        RenderConfig { precision, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.precision > MAX_PRECISION {
            return Err(PromptError::Precision(self.precision));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubPrompt {
    pub kind: PromptKind,
    pub index: usize,
    pub total: usize,
    pub text: String,
}

/// Anything that can report how many tokens a text costs, special tokens
/// included. Counting may block on a remote tokenizer.
pub trait TokenCounter {
    fn count_tokens(&self, text: &str) -> Result<usize, CountError>;

    fn count_tokens_batch(&self, texts: &[String]) -> Result<Vec<usize>, CountError> {
        texts.iter().map(|t| self.count_tokens(t)).collect()
    }
}

impl<F> TokenCounter for F
where
    F: Fn(&str) -> usize,
{
    fn count_tokens(&self, text: &str) -> Result<usize, CountError> {
        Ok(self(text))
    }
}

/// Fixed-point rendering with exactly `precision` fractional digits.
///
/// The value is rounded half-to-even as the decimal it prints as (its
/// shortest round-trip form), so `-0.00005` at four places is a tie and
/// becomes `0.0000`. Negative zero results lose their sign.
pub fn format_value(x: f64, cfg: &RenderConfig) -> Result<String, PromptError> {
    if !x.is_finite() {
        return Err(PromptError::NonFinite(x));
    }
    cfg.validate()?;
    Ok(round_decimal(x, cfg.precision as usize))
}

fn round_decimal(x: f64, precision: usize) -> String {
    let sci = format!("{:e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i64 = exp.parse().expect("integer exponent");
    let digits: Vec<u8> = mantissa.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();

    // |x| = 0.d1d2..dL * 10^(exp + 1); scaled = |x| * 10^precision.
    let shift = exp + 1 + precision as i64 - digits.len() as i64;
    let mut scaled: Vec<u8> = if shift >= 0 {
        let mut v = digits.clone();
        v.extend(std::iter::repeat_n(0, shift as usize));
        v
    } else {
        let keep = digits.len() as i64 + shift;
        let (kept, dropped): (Vec<u8>, &[u8]) = if keep >= 0 {
            (digits[..keep as usize].to_vec(), &digits[keep as usize..])
        } else {
            (Vec::new(), &[])
        };
        let round_up = match dropped.split_first() {
            None => false,
            Some((&first, rest)) if keep >= 0 => {
                if first != 5 {
                    first > 5
                } else if rest.iter().any(|&d| d != 0) {
                    true
                } else {
                    kept.last().is_some_and(|d| d % 2 == 1)
                }
            }
            Some(_) => false,
        };
        let mut kept = kept;
        if round_up {
            increment(&mut kept);
        }
        kept
    };

    while scaled.len() > 1 && scaled[0] == 0 {
        scaled.remove(0);
    }
    if scaled.is_empty() {
        scaled.push(0);
    }
    let is_zero = scaled.iter().all(|&d| d == 0);
    if scaled.len() <= precision {
        let mut padded = vec![0; precision + 1 - scaled.len()];
        padded.extend(scaled);
        scaled = padded;
    }
    let split = scaled.len() - precision;
    let mut out = String::with_capacity(scaled.len() + 2);
    if x < 0.0 && !is_zero {
        out.push('-');
    }
    out.extend(scaled[..split].iter().map(|d| (b'0' + d) as char));
    if precision > 0 {
        out.push('.');
        out.extend(scaled[split..].iter().map(|d| (b'0' + d) as char));
    }
    out
}

fn increment(digits: &mut Vec<u8>) {
    for d in digits.iter_mut().rev() {
        if *d == 9 {
            *d = 0;
        } else {
            *d += 1;
            return;
        }
    }
    digits.insert(0, 1);
}

/// Contiguous chunks of `chunk_len` values, the last possibly shorter.
pub fn slice_series(values: &[f64], chunk_len: usize) -> Result<Vec<&[f64]>, PromptError> {
    if chunk_len == 0 {
        return Err(PromptError::ZeroChunkLen);
    }
    if values.is_empty() {
        return Err(PromptError::EmptySeries);
    }
    Ok(values.chunks(chunk_len).collect())
}

/// English ordinal numeral: 1st, 2nd, 3rd, 4th, 11th, 21st, ...
pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn render_values(values: &[f64], cfg: &RenderConfig) -> Result<String, PromptError> {
    let mut out = String::new();
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(&cfg.value_separator);
        }
        out.push_str(&format_value(v, cfg)?);
    }
    Ok(out)
}

fn render_ddp(
    series_len: usize,
    chunk_count: usize,
    chunk_len: usize,
    index: usize,
    chunk: &str,
) -> String {
    format!(
        "The length of time series is {series_len}. The original time series is splited into \
         {chunk_count} sub-series, whose length is {chunk_len}. The specific value of the {} \
         sub-series are {chunk} in order.",
        ordinal(index + 1)
    )
}

/// Renders every chunk of `values` at a fixed chunk length.
pub fn render_chunked(
    values: &[f64],
    kind: PromptKind,
    cfg: &RenderConfig,
    chunk_len: usize,
) -> Result<Vec<SubPrompt>, PromptError> {
    if kind == PromptKind::Fp {
        return Err(PromptError::NotChunked(kind));
    }
    cfg.validate()?;
    let chunks = slice_series(values, chunk_len)?;
    let total = chunks.len();
    chunks
        .iter()
        .enumerate()
        .map(|(index, chunk)| {
            let body = render_values(chunk, cfg)?;
            let text = match kind {
                PromptKind::Sdp => body,
                PromptKind::Ddp => render_ddp(values.len(), total, chunk_len, index, &body),
                PromptKind::Fp => unreachable!(),
            };
            Ok(SubPrompt { kind, index, total, text })
        })
        .collect()
}

fn all_fit<C: TokenCounter + ?Sized>(
    prompts: &[SubPrompt],
    budget: usize,
    counter: &C,
) -> Result<bool, PromptError> {
    let texts: Vec<String> = prompts.iter().map(|p| p.text.clone()).collect();
    Ok(counter.count_tokens_batch(&texts)?.into_iter().all(|c| c <= budget))
}

/// Largest chunk length whose rendered chunks all fit `budget`.
///
/// Binary search over `[1, len]`; each probe renders and counts every
/// chunk, so the returned length is verified rather than estimated. The
/// result is exact whenever the fit predicate is monotone in the chunk
/// length, which holds for counters that charge per value.
pub fn compute_chunk_len<C: TokenCounter + ?Sized>(
    values: &[f64],
    kind: PromptKind,
    cfg: &RenderConfig,
    budget: usize,
    counter: &C,
) -> Result<usize, PromptError> {
    if values.is_empty() {
        return Err(PromptError::EmptySeries);
    }
    let fits = |len: usize| -> Result<bool, PromptError> {
        all_fit(&render_chunked(values, kind, cfg, len)?, budget, counter)
    };
    if !fits(1)? {
        return Err(PromptError::NothingFits { kind, budget });
    }
    let (mut lo, mut hi) = (1usize, values.len());
    if fits(hi)? {
        return Ok(hi);
    }
    // Invariant: fits(lo) && !fits(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn build_sdp<C: TokenCounter + ?Sized>(
    values: &[f64],
    cfg: &RenderConfig,
    budget: usize,
    counter: &C,
) -> Result<Vec<SubPrompt>, PromptError> {
    let len = compute_chunk_len(values, PromptKind::Sdp, cfg, budget, counter)?;
    render_chunked(values, PromptKind::Sdp, cfg, len)
}

pub fn build_ddp<C: TokenCounter + ?Sized>(
    values: &[f64],
    cfg: &RenderConfig,
    budget: usize,
    counter: &C,
) -> Result<Vec<SubPrompt>, PromptError> {
    let len = compute_chunk_len(values, PromptKind::Ddp, cfg, budget, counter)?;
    render_chunked(values, PromptKind::Ddp, cfg, len)
}

fn render_fp(clauses: &[String]) -> String {
    format!(
        "{} features of the time series are extracted via tsfresh, {}.",
        clauses.len(),
        clauses.join(", ")
    )
}

/// Feature prompts, packed greedily: clauses are appended in order while
/// the filled template still fits, then a new prompt is started.
pub fn build_fp<C: TokenCounter + ?Sized>(
    features: &FeatureVector,
    cfg: &RenderConfig,
    budget: usize,
    counter: &C,
) -> Result<Vec<SubPrompt>, PromptError> {
    if features.is_empty() {
        return Err(PromptError::EmptyFeatures);
    }
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for (name, value) in features.entries() {
        let clause = format!("the feature of {name} is {}", format_value(value, cfg)?);
        current.push(clause);
        if counter.count_tokens(&render_fp(&current))? <= budget {
            continue;
        }
        let clause = current.pop().expect("just pushed");
        if current.is_empty() {
            return Err(PromptError::ClauseTooLong { feature: name.to_string(), budget });
        }
        groups.push(std::mem::take(&mut current));
        current.push(clause);
        if counter.count_tokens(&render_fp(&current))? > budget {
            return Err(PromptError::ClauseTooLong { feature: name.to_string(), budget });
        }
    }
    groups.push(current);
    let total = groups.len();
    Ok(groups
        .iter()
        .enumerate()
        .map(|(index, g)| SubPrompt { kind: PromptKind::Fp, index, total, text: render_fp(g) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;

    fn pieces(text: &str) -> usize {
        2 + text.split_whitespace().count()
    }

    #[test]
    fn format_examples() {
        let p4 = RenderConfig::default();
        assert_eq!(format_value(1.0, &p4).unwrap(), "1.0000");
        assert_eq!(format_value(-0.00005, &p4).unwrap(), "0.0000");
        assert_eq!(format_value(2.34567, &p4).unwrap(), "2.3457");
        assert_eq!(format_value(-0.0, &p4).unwrap(), "0.0000");
        assert_eq!(format_value(-1.23456, &p4).unwrap(), "-1.2346");
        assert_eq!(format_value(9.99996, &p4).unwrap(), "10.0000");
        assert_eq!(format_value(0.125, &RenderConfig::with_precision(2)).unwrap(), "0.12");
        assert_eq!(format_value(2.5, &RenderConfig::with_precision(0)).unwrap(), "2");
        assert_eq!(format_value(3.5, &RenderConfig::with_precision(0)).unwrap(), "4");
        assert_eq!(format_value(1e-20, &p4).unwrap(), "0.0000");
        assert_eq!(format_value(123456789.0, &RenderConfig::with_precision(1)).unwrap(), "123456789.0");
        assert!(matches!(format_value(f64::NAN, &p4), Err(PromptError::NonFinite(_))));
        assert!(matches!(format_value(1.0, &RenderConfig::with_precision(13)), Err(PromptError::Precision(13))));
    }

    #[test]
    fn slicing() {
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        let sizes: Vec<usize> = slice_series(&v, 4).unwrap().iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        assert_eq!(slice_series(&v, 10).unwrap(), vec![&v[..]]);
        assert_eq!(slice_series(&v, 99).unwrap(), vec![&v[..]]);
        let six = &v[..6];
        let chunks = slice_series(six, 2).unwrap();
        assert_eq!(chunks.len(), 3);
        assert_eq!(chunks.concat(), six);
        assert_eq!(slice_series(&v, 0), Err(PromptError::ZeroChunkLen));
        assert_eq!(slice_series(&[], 1), Err(PromptError::EmptySeries));
    }

    #[test]
    fn ordinals() {
        let got: Vec<String> = [1, 2, 3, 4, 11, 12, 13, 21, 22, 23, 101, 111, 112].map(ordinal).to_vec();
        assert_eq!(got, ["1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "23rd", "101st", "111th", "112th"]);
    }

    #[test]
    fn chunk_len_per_value_counter() {
        // 3 tokens per value plus 20 for the template: 20 + 3L <= 512.
        let counter = |t: &str| 20 + 3 * t.split(", ").count();
        let v = vec![0.5; 1000];
        let cfg = RenderConfig::default();
        assert_eq!(compute_chunk_len(&v, PromptKind::Sdp, &cfg, 512, &counter).unwrap(), 164);
        assert_eq!(compute_chunk_len(&v, PromptKind::Sdp, &cfg, 1_000_000_000, &counter).unwrap(), 1000);
        assert_eq!(
            compute_chunk_len(&v, PromptKind::Sdp, &cfg, 10, &counter),
            Err(PromptError::NothingFits { kind: PromptKind::Sdp, budget: 10 })
        );
        assert!(matches!(compute_chunk_len(&v, PromptKind::Fp, &cfg, 512, &counter), Err(PromptError::NotChunked(_))));
    }

    #[test]
    fn sdp_prompts() {
        let cfg = RenderConfig::with_precision(1);
        let p = build_sdp(&[1.0, 2.0], &cfg, usize::MAX, &pieces).unwrap();
        assert_eq!(p, vec![SubPrompt { kind: PromptKind::Sdp, index: 0, total: 1, text: "1.0, 2.0".into() }]);

        // 2 specials + 4 values per chunk.
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        let p = build_sdp(&v, &cfg, 6, &pieces).unwrap();
        let idx: Vec<(usize, usize)> = p.iter().map(|s| (s.index, s.total)).collect();
        assert_eq!(idx, vec![(0, 3), (1, 3), (2, 3)]);
        assert_eq!(build_sdp(&[], &cfg, 100, &pieces), Err(PromptError::EmptySeries));
    }

    #[test]
    fn ddp_template() {
        let cfg = RenderConfig::with_precision(1);
        let p = render_chunked(&[1.0, 2.0, 3.0, 4.0], PromptKind::Ddp, &cfg, 2).unwrap();
        assert_eq!(
            p[0].text,
            "The length of time series is 4. The original time series is splited into 2 sub-series, \
             whose length is 2. The specific value of the 1st sub-series are 1.0, 2.0 in order."
        );
        assert!(p[1].text.contains("the 2nd sub-series are 3.0, 4.0 in order."));

        let p = build_ddp(&[1.0, 2.0, 3.0], &cfg, usize::MAX, &pieces).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].text.contains("splited into 1 sub-series, whose length is 3. The specific value of the 1st sub-series are 1.0, 2.0, 3.0 in order."));
    }

    #[test]
    fn ddp_fits_budget() {
        let v: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let cfg = RenderConfig::default();
        let p = build_ddp(&v, &cfg, 64, &pieces).unwrap();
        assert!(p.len() > 1);
        assert!(p.iter().all(|s| pieces(&s.text) <= 64));
    }

    #[test]
    fn fp_prompts() {
        let f = extract_features(&[1.0, 2.0, 3.0]).unwrap();
        let cfg = RenderConfig::default();
        let one = build_fp(&f, &cfg, usize::MAX, &pieces).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].text.starts_with("10 features of the time series are extracted via tsfresh, the feature of sum is 6.0000, the feature of median is 2.0000"));
        assert!(one[0].text.ends_with("the feature of minimum is 1.0000."));

        // Head costs 10 pieces, each clause 6, plus 2 specials: five clauses = 42.
        let two = build_fp(&f, &cfg, 45, &pieces).unwrap();
        assert_eq!(two.len(), 2);
        for (i, p) in two.iter().enumerate() {
            assert!(p.text.starts_with("5 features of the time series"));
            assert_eq!((p.index, p.total), (i, 2));
            assert!(pieces(&p.text) <= 45);
        }
        assert!(matches!(build_fp(&f, &cfg, 15, &pieces), Err(PromptError::ClauseTooLong { .. })));
        let empty = FeatureVector::from_entries(Vec::new());
        assert_eq!(build_fp(&empty, &cfg, 100, &pieces), Err(PromptError::EmptyFeatures));
    }
}
