/// Tokens that survive tokenization uppercase.
pub const PLACEHOLDERS: [&str; 4] = ["MATH", "CITE", "REF", "NUM"];

/// Splits on runs of blank lines; trims and drops empty paragraphs.
pub fn split_paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n").trim().to_string());
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n").trim().to_string());
    }
    out.retain(|p| !p.is_empty());
    out
}

const ABBREVIATIONS: [&str; 22] = [
    "et al.", "al.", "fig.", "figs.", "eq.", "eqs.", "i.e.", "e.g.", "cf.", "vs.", "etc.", "sec.", "secs.", "ref.",
    "refs.", "tab.", "resp.", "approx.", "no.", "dr.", "prof.", "ch.",
];

fn ends_with_abbreviation(prefix: &str) -> bool {
    let lower = prefix.to_lowercase();
    ABBREVIATIONS.iter().any(|abbr| {
        lower.ends_with(abbr) && {
            let start = lower.len() - abbr.len();
            lower[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric())
        }
    })
}

/// Splits after `.`, `!` or `?` when followed by whitespace and then an
/// uppercase letter or the end of the text. A period closing a known
/// abbreviation ("et al.", "Fig.", "e.g.", …) never splits.
pub fn split_sentences(paragraph: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = paragraph.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for (k, &(i, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = i + c.len_utf8();
        let rest = &chars[k + 1..];
        let ws = rest.iter().take_while(|(_, ch)| ch.is_whitespace()).count();
        let boundary = match rest.get(ws) {
            None => true,
            Some(&(_, next)) => ws > 0 && next.is_uppercase(),
        };
        if !boundary || (c == '.' && ends_with_abbreviation(&paragraph[start..end])) {
            continue;
        }
        let s = paragraph[start..end].trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
        start = end;
    }
    let tail = paragraph[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

fn is_numeric(core: &str) -> bool {
    core.chars().any(|c| c.is_ascii_digit())
        && core.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '-' | '/' | ':' | '%' | '+'))
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace())
}

/// Lowercases, splits on whitespace and peels leading/trailing punctuation
/// into single-character tokens. Numeric words become `NUM`; the
/// placeholders `MATH`, `CITE`, `REF` and `NUM` keep their case.
/// Idempotent on its own output joined by spaces.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let lead = chars.iter().take_while(|&&c| is_punct(c)).count();
        let trail = if lead == chars.len() {
            0
        } else {
            chars.iter().rev().take_while(|&&c| is_punct(c)).count()
        };
        out.extend(chars[..lead].iter().map(|c| c.to_string()));
        let core: String = chars[lead..chars.len() - trail].iter().collect();
        if !core.is_empty() {
            if PLACEHOLDERS.contains(&core.as_str()) {
                out.push(core);
            } else if is_numeric(&core) {
                out.push("NUM".to_string());
            } else {
                out.push(core.to_lowercase());
            }
        }
        out.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    out
}

pub fn is_placeholder(token: &str) -> bool {
    PLACEHOLDERS.contains(&token)
}

/// True when the token has no letter or digit.
pub fn is_punctuation_token(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert_eq, proptest};

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn paragraphs() {
        assert_eq!(split_paragraphs("A.\n\nB."), vec!["A.", "B."]);
        assert_eq!(split_paragraphs("A.\nstill A."), vec!["A.\nstill A."]);
        assert_eq!(split_paragraphs("A.\n\n\n\nB."), vec!["A.", "B."]);
        assert_eq!(split_paragraphs("  \n\nA.\n   \nB.  \n\n"), vec!["A.", "B."]);
        assert!(split_paragraphs("").is_empty());
    }

    #[test]
    fn sentences() {
        assert_eq!(split_sentences("We do X. We do Y."), vec!["We do X.", "We do Y."]);
        assert_eq!(split_sentences("See Fig. 3 for details."), vec!["See Fig. 3 for details."]);
        assert_eq!(split_sentences("Is it? Yes!"), vec!["Is it?", "Yes!"]);
        assert_eq!(
            split_sentences("Smith et al. Showed it. Then e.g. This."),
            vec!["Smith et al. Showed it.", "Then e.g. This."]
        );
        assert_eq!(split_sentences("Value is 3.5 here. next"), vec!["Value is 3.5 here. next"]);
        assert_eq!(split_sentences("No terminal"), vec!["No terminal"]);
    }

    #[test]
    fn tokens() {
        assert_eq!(toks("The cat sat."), vec!["the", "cat", "sat", "."]);
        assert_eq!(toks("in 2016."), vec!["in", "NUM", "."]);
        assert_eq!(toks("(see MATH, CITE)"), vec!["(", "see", "MATH", ",", "CITE", ")"]);
        assert_eq!(toks("3.14 1,000 l2-norm"), vec!["NUM", "NUM", "l2-norm"]);
        assert_eq!(toks("--"), vec!["-", "-"]);
        assert_eq!(toks("word word"), vec!["word", "word"]);
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(words in prop::collection::vec("[A-Za-z0-9.,;()?!'\\-]{1,8}", 0..12)) {
            let once = tokenize(&words.join(" "));
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn paragraph_join_round_trips(paras in prop::collection::vec("[a-z]{1,6}( [a-z]{1,6}){0,3}", 1..6)) {
            prop_assert_eq!(split_paragraphs(&paras.join("\n\n")), paras);
        }
    }
}
