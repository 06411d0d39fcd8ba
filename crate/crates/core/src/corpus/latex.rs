//! Abstract and introduction extraction from LaTeX sources.
//!
//! This is a text-level scrubber, not a TeX engine: macros are not
//! expanded, only their visible arguments are kept.

use std::sync::LazyLock;

use regex::Regex;

use super::text::split_paragraphs;
use crate::error::{Error, Result};

/// One article: its abstract and introduction paragraphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub abstract_text: String,
    pub intro_paragraphs: Vec<String>,
}

static SECTIONING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\\(part|chapter|section|subsection|subsubsection|paragraph|subparagraph)\*?\s*(?:\[[^\]]*\]\s*)?\{")
        .expect("valid regex")
});

static INTRO_END: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\\end\{document\}|\\appendix\b|\\bibliography\{|\\begin\{thebibliography\}|\\printbibliography")
        .expect("valid regex")
});

fn level(name: &str) -> u8 {
    match name {
        "part" => 0,
        "chapter" => 1,
        "section" => 2,
        "subsection" => 3,
        "subsubsection" => 4,
        "paragraph" => 5,
        _ => 6,
    }
}

const SECTION_CMDS: [&str; 7] = [
    "part", "chapter", "section", "subsection", "subsubsection", "paragraph", "subparagraph",
];
const DROP_ENVS: [&str; 6] = ["figure", "figure*", "table", "table*", "thebibliography", "comment"];
const MATH_ENVS: [&str; 14] = [
    "equation", "equation*", "align", "align*", "eqnarray", "eqnarray*", "gather", "gather*", "multline", "multline*",
    "displaymath", "math", "flalign", "flalign*",
];
const CITE_CMDS: [&str; 9] = [
    "cite", "citep", "citet", "citealp", "citealt", "citeauthor", "citeyear", "parencite", "textcite",
];
const REF_CMDS: [&str; 7] = ["ref", "eqref", "autoref", "cref", "Cref", "pageref", "nameref"];
/// Commands whose arguments are not visible text.
const SILENT_CMDS: [&str; 15] = [
    "label", "footnote", "thanks", "vspace", "hspace", "includegraphics", "bibliographystyle", "bibliography",
    "nocite", "url", "href", "input", "include", "keywords", "maketitle",
];

/// Removes `%` comments. A line that held only a comment disappears
/// entirely so it cannot break a paragraph.
pub fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for line in src.lines() {
        let mut cut = None;
        let mut escaped = false;
        for (i, c) in line.char_indices() {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '%' {
                cut = Some(i);
                break;
            }
        }
        match cut {
            Some(i) if line[..i].trim().is_empty() => continue,
            Some(i) => out.push_str(&line[..i]),
            None => out.push_str(line),
        }
        out.push('\n');
    }
    out
}

/// Index just past the brace group opening at `open` (which must be `{`).
fn skip_group(s: &[char], open: usize) -> usize {
    let mut depth = 0usize;
    let mut i = open;
    while i < s.len() {
        match s[i] {
            '\\' => i += 1,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return i + 1;
                }
            }
            _ => {}
        }
        i += 1;
    }
    s.len()
}

fn skip_ws(s: &[char], mut i: usize) -> usize {
    while i < s.len() && s[i].is_whitespace() && s[i] != '\n' {
        i += 1;
    }
    i
}

/// Skips a `*` and any `[…]` groups after a command name.
fn skip_star_and_options(s: &[char], mut i: usize) -> usize {
    if s.get(i) == Some(&'*') {
        i += 1;
    }
    loop {
        let j = skip_ws(s, i);
        if s.get(j) != Some(&'[') {
            return i;
        }
        match s[j..].iter().position(|&c| c == ']') {
            Some(k) => i = j + k + 1,
            None => return i,
        }
    }
}

/// Skips one required `{…}` argument if present.
fn skip_arg(s: &[char], i: usize) -> usize {
    let j = skip_ws(s, i);
    if s.get(j) == Some(&'{') {
        skip_group(s, j)
    } else {
        i
    }
}

fn read_arg(s: &[char], i: usize) -> (String, usize) {
    let j = skip_ws(s, i);
    if s.get(j) == Some(&'{') {
        let end = skip_group(s, j);
        (s[j + 1..end.saturating_sub(1).max(j + 1)].iter().collect(), end)
    } else {
        (String::new(), i)
    }
}

fn find_seq(s: &[char], from: usize, pat: &str) -> Option<usize> {
    let p: Vec<char> = pat.chars().collect();
    (from..s.len().saturating_sub(p.len() - 1)).find(|&i| s[i..i + p.len()] == p[..])
}

/// Position just past the `\end{env}` matching a `\begin{env}` whose body
/// starts at `from`, allowing nesting of the same environment.
fn skip_env(s: &[char], from: usize, env: &str) -> usize {
    let open = format!("\\begin{{{env}}}");
    let close = format!("\\end{{{env}}}");
    let mut depth = 1;
    let mut i = from;
    loop {
        let next_close = match find_seq(s, i, &close) {
            Some(c) => c,
            None => return s.len(),
        };
        match find_seq(s, i, &open) {
            Some(o) if o < next_close => {
                depth += 1;
                i = o + open.chars().count();
            }
            _ => {
                depth -= 1;
                i = next_close + close.chars().count();
                if depth == 0 {
                    return i;
                }
            }
        }
    }
}

/// Converts LaTeX body text to plain prose. Math becomes ` MATH `,
/// citations ` CITE `, references ` REF `; figure and table environments
/// vanish; sectioning commands become paragraph breaks; other commands keep
/// the visible text of their arguments.
pub fn latex_to_text(src: &str) -> String {
    let s: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    while i < s.len() {
        let c = s[i];
        match c {
            '\\' => {
                let Some(&next) = s.get(i + 1) else { break };
                if !next.is_ascii_alphabetic() {
                    i += 2;
                    match next {
                        '[' => {
                            i = find_seq(&s, i, "\\]").map_or(s.len(), |e| e + 2);
                            out.push_str(" MATH ");
                        }
                        '(' => {
                            i = find_seq(&s, i, "\\)").map_or(s.len(), |e| e + 2);
                            out.push_str(" MATH ");
                        }
                        '%' | '&' | '_' | '#' | '$' | '{' | '}' => out.push(next),
                        '\\' => {
                            i = skip_star_and_options(&s, i);
                            out.push(' ');
                        }
                        ' ' | '\n' | ',' | ';' | ':' | '!' | '/' => out.push(' '),
                        _ => {} // accents and similar: keep the following letter
                    }
                    continue;
                }
                let start = i + 1;
                let mut j = start;
                while j < s.len() && s[j].is_ascii_alphabetic() {
                    j += 1;
                }
                let name: String = s[start..j].iter().collect();
                i = j;
                match name.as_str() {
                    "begin" => {
                        let (env, after) = read_arg(&s, i);
                        i = after;
                        if DROP_ENVS.contains(&env.as_str()) {
                            i = skip_env(&s, i, &env);
                            out.push(' ');
                        } else if MATH_ENVS.contains(&env.as_str()) {
                            i = skip_env(&s, i, &env);
                            out.push_str(" MATH ");
                        } else {
                            i = skip_star_and_options(&s, i);
                            out.push(' ');
                        }
                    }
                    "end" => {
                        i = skip_arg(&s, i);
                        out.push(' ');
                    }
                    "item" => {
                        i = skip_star_and_options(&s, i);
                        out.push(' ');
                    }
                    "par" => out.push_str("\n\n"),
                    n if CITE_CMDS.contains(&n) => {
                        i = skip_arg(&s, skip_star_and_options(&s, i));
                        out.push_str(" CITE ");
                    }
                    n if REF_CMDS.contains(&n) => {
                        i = skip_arg(&s, skip_star_and_options(&s, i));
                        out.push_str(" REF ");
                    }
                    n if SILENT_CMDS.contains(&n) => {
                        i = skip_star_and_options(&s, i);
                        if n == "href" {
                            i = skip_arg(&s, i);
                            let (text, after) = read_arg(&s, i);
                            out.push_str(&latex_to_text(&text));
                            i = after;
                        } else if n != "maketitle" {
                            i = skip_arg(&s, i);
                        }
                    }
                    n if SECTION_CMDS.contains(&n) => {
                        i = skip_arg(&s, skip_star_and_options(&s, i));
                        out.push_str("\n\n");
                    }
                    _ => {
                        // generic command: drop the name, keep argument text
                        if s.get(i) == Some(&'*') {
                            i += 1;
                        }
                    }
                }
            }
            '$' => {
                if s.get(i + 1) == Some(&'$') {
                    i = find_seq(&s, i + 2, "$$").map_or(s.len(), |e| e + 2);
                } else {
                    let mut j = i + 1;
                    while j < s.len() && s[j] != '$' {
                        if s[j] == '\\' {
                            j += 1;
                        }
                        j += 1;
                    }
                    i = (j + 1).min(s.len());
                }
                out.push_str(" MATH ");
            }
            '{' | '}' => i += 1,
            '~' => {
                out.push(' ');
                i += 1;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out.replace("``", "\"").replace("''", "\"")
}

/// Collapses whitespace inside each paragraph, keeping blank-line breaks.
fn normalize(text: &str) -> Vec<String> {
    split_paragraphs(text)
        .into_iter()
        .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|p| !p.is_empty())
        .collect()
}

fn find_abstract(src: &str) -> Option<&str> {
    let start = src.find("\\begin{abstract}")? + "\\begin{abstract}".len();
    let end = src[start..].find("\\end{abstract}")? + start;
    Some(&src[start..end])
}

fn find_introduction(src: &str) -> Option<&str> {
    let chars_of = |s: &str| s.chars().collect::<Vec<_>>();
    for m in SECTIONING.captures_iter(src) {
        let whole = m.get(0).expect("match");
        let lvl = level(&m[1]);
        let rest = chars_of(&src[whole.end() - 1..]);
        let close = skip_group(&rest, 0);
        let title: String = rest[1..close.saturating_sub(1).max(1)].iter().collect();
        if !title.to_lowercase().contains("introduction") {
            continue;
        }
        let body_start = whole.end() - 1 + rest[..close].iter().map(|c| c.len_utf8()).sum::<usize>();
        let tail = &src[body_start..];
        let mut body_end = tail.len();
        for next in SECTIONING.captures_iter(tail) {
            if level(&next[1]) <= lvl {
                body_end = next.get(0).expect("match").start();
                break;
            }
        }
        if let Some(e) = INTRO_END.find(&tail[..body_end]) {
            body_end = e.start();
        }
        return Some(&tail[..body_end]);
    }
    None
}

/// Introduction paragraphs alone; the abstract is not required.
pub fn extract_introduction(latex_source: &str) -> Result<Vec<String>> {
    let src = strip_comments(latex_source);
    let intro_raw = find_introduction(&src).ok_or(Error::MissingSection("introduction"))?;
    let paragraphs = normalize(&latex_to_text(intro_raw));
    if paragraphs.is_empty() {
        return Err(Error::MissingSection("introduction"));
    }
    Ok(paragraphs)
}

/// Pulls the abstract and the introduction out of a LaTeX source.
pub fn extract_sections(doc_id: &str, latex_source: &str) -> Result<DocumentRecord> {
    let src = strip_comments(latex_source);
    let abstract_raw = find_abstract(&src).ok_or(Error::MissingSection("abstract"))?;
    let abstract_text = normalize(&latex_to_text(abstract_raw)).join(" ");
    if abstract_text.is_empty() {
        return Err(Error::MissingSection("abstract"));
    }
    let intro_paragraphs = extract_introduction(latex_source)?;
    Ok(DocumentRecord {
        doc_id: doc_id.to_string(),
        abstract_text,
        intro_paragraphs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r"\documentclass{article}
\usepackage{amsmath}
% preamble comment
\begin{document}
\title{A Test}
\maketitle
\begin{abstract}
We study \emph{things} in $d$ dimensions~\cite{foo}.
% hidden remark
It works.
\end{abstract}
\section{Introduction}\label{sec:intro}
Recurrent networks \citep[see][]{a,b} are popular. They model sequences
of length $T$ as in Eq.~\eqref{eq:one}.
% This comment must vanish.

\begin{figure}[t]
\centering \includegraphics{x.pdf}
\caption{Should not appear.}
\end{figure}
A second paragraph with display math
\begin{equation}
  h_t = f(h_{t-1})
\end{equation}
and 50\% of cases.

\subsection{Motivation}
Third paragraph \textbf{bold} text.
\section{Method}
Not in the introduction.
\end{document}
";

    #[test]
    fn extracts_both_sections() {
        let r = extract_sections("d1", DOC).unwrap();
        assert_eq!(r.abstract_text, "We study things in MATH dimensions CITE . It works.");
        assert_eq!(r.intro_paragraphs.len(), 3);
        assert_eq!(
            r.intro_paragraphs[0],
            "Recurrent networks CITE are popular. They model sequences of length MATH as in Eq. REF ."
        );
        assert_eq!(r.intro_paragraphs[1], "A second paragraph with display math MATH and 50% of cases.");
        assert_eq!(r.intro_paragraphs[2], "Third paragraph bold text.");
    }

    #[test]
    fn comments_never_leak() {
        let r = extract_sections("d1", DOC).unwrap();
        let all = format!("{} {}", r.abstract_text, r.intro_paragraphs.join(" "));
        for bad in ["comment", "hidden", "vanish", "Should not appear", "Method"] {
            assert!(!all.contains(bad), "{bad} leaked into {all}");
        }
    }

    #[test]
    fn missing_sections_are_named() {
        let no_intro = DOC.replace("\\section{Introduction}", "\\section{Background}");
        match extract_sections("x", &no_intro) {
            Err(Error::MissingSection(s)) => assert_eq!(s, "introduction"),
            other => panic!("{other:?}"),
        }
        let no_abs = DOC.replace("\\begin{abstract}", "").replace("\\end{abstract}", "");
        match extract_sections("x", &no_abs) {
            Err(Error::MissingSection(s)) => assert_eq!(s, "abstract"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn starred_and_case_insensitive_titles() {
        let d = "\\begin{abstract}A.\\end{abstract}\n\\section*{1. INTRODUCTION and scope}\nBody here.\n\\end{document}";
        let r = extract_sections("x", d).unwrap();
        assert_eq!(r.intro_paragraphs, vec!["Body here."]);
    }

    #[test]
    fn escaped_percent_is_not_a_comment() {
        assert_eq!(strip_comments("10\\% more % gone\n% all gone\nnext"), "10\\% more \nnext\n");
    }

    #[test]
    fn inline_math_forms() {
        let t = latex_to_text(r"a $x^2$ b \(y\) c \[z\] d $$w$$ e");
        assert_eq!(t.split_whitespace().collect::<Vec<_>>(), ["a", "MATH", "b", "MATH", "c", "MATH", "d", "MATH", "e"]);
    }
}
