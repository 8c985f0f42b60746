use serde::{Deserialize, Serialize};

use crate::model::CharSpan;

/// A word token with its char range in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub span: CharSpan,
}

impl Token {
    #[inline]
    pub fn start(&self) -> usize {
        self.span.start()
    }

    #[inline]
    pub fn end(&self) -> usize {
        self.span.end()
    }
}

/// Splits `text` into maximal alphanumeric runs; every other
/// non-whitespace character becomes a token of its own. Whitespace only
/// separates.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run = String::new();
    let mut run_start = 0;
    let flush = |run: &mut String, start: usize, end: usize, tokens: &mut Vec<Token>| {
        if !run.is_empty() {
            tokens.push(Token {
                text: std::mem::take(run),
                span: CharSpan::new(start, end).expect("non-empty run"),
            });
        }
    };
    let mut pos = 0;
    for c in text.chars() {
        if c.is_alphanumeric() {
            if run.is_empty() {
                run_start = pos;
            }
            run.push(c);
        } else {
            flush(&mut run, run_start, pos, &mut tokens);
            if !c.is_whitespace() {
                tokens.push(Token {
                    text: c.to_string(),
                    span: CharSpan::new(pos, pos + 1).expect("single char"),
                });
            }
        }
        pos += 1;
    }
    flush(&mut run, run_start, pos, &mut tokens);
    tokens
}

/// Token texts only.
pub fn words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

/// Synthesizes offsets for pre-split words, as if joined by single spaces.
/// Empty words are not representable and are rejected.
pub fn tokens_from_words<S: AsRef<str>>(words: &[S]) -> Option<Vec<Token>> {
    let mut pos = 0;
    let mut out = Vec::with_capacity(words.len());
    for w in words {
        let w = w.as_ref();
        let len = w.chars().count();
        out.push(Token {
            text: w.to_string(),
            span: CharSpan::new(pos, pos + len).ok()?,
        });
        pos += len + 1;
    }
    Some(out)
}

/// Rebuilds the covered text of `tokens[first..=last]`, filling gaps with
/// spaces. Gaps produced by [`tokenize`] are whitespace only.
pub fn surface_text(tokens: &[Token], first: usize, last: usize) -> String {
    let mut out = String::new();
    let mut prev_end = None;
    for tok in &tokens[first..=last] {
        if let Some(end) = prev_end {
            for _ in end..tok.start() {
                out.push(' ');
            }
        }
        out.push_str(&tok.text);
        prev_end = Some(tok.end());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::char_slice;
    use proptest::prelude::*;

    #[test]
    fn splits_on_special_characters() {
        assert_eq!(words("IL-2 binds."), ["IL", "-", "2", "binds", "."]);
        assert!(tokenize("").is_empty());
        assert_eq!(words("p53"), ["p53"]);
        assert_eq!(words("  \t\n"), Vec::<String>::new());
        assert_eq!(words("TNF-α(β)"), ["TNF", "-", "α", "(", "β", ")"]);
    }

    #[test]
    fn offsets_are_chars() {
        let toks = tokenize("β-catenin x");
        let spans: Vec<_> = toks.iter().map(|t| (t.start(), t.end())).collect();
        assert_eq!(spans, [(0, 1), (1, 2), (2, 9), (10, 11)]);
    }

    #[test]
    fn synthesized_offsets() {
        let toks = tokens_from_words(&["EGFR", "is", "x"]).unwrap();
        assert_eq!(toks[2].span, CharSpan::new(8, 9).unwrap());
        assert_eq!(surface_text(&toks, 0, 1), "EGFR is");
        assert!(tokens_from_words(&["a", ""]).is_none());
    }

    proptest! {
        #[test]
        fn tokens_plus_gaps_reconstruct_input(s in "[a-zA-Z0-9 αβ\\-\\.,()\t\n/%]{0,40}") {
            let toks = tokenize(&s);
            let mut rebuilt = String::new();
            let mut pos = 0;
            let total = s.chars().count();
            for t in &toks {
                prop_assert!(t.start() >= pos);
                let gap = char_slice(&s, pos, t.start());
                prop_assert!(gap.chars().all(char::is_whitespace));
                rebuilt.push_str(gap);
                prop_assert_eq!(char_slice(&s, t.start(), t.end()), t.text.as_str());
                rebuilt.push_str(&t.text);
                pos = t.end();
            }
            let tail = char_slice(&s, pos, total);
            prop_assert!(tail.chars().all(char::is_whitespace));
            rebuilt.push_str(tail);
            prop_assert_eq!(rebuilt, s);
        }
    }
}
