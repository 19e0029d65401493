//! Reading subgroups, words and extension elements from arguments and files.

use std::fs;
use std::path::{Path, PathBuf};

use howson::extension::{ExtensionData, ExtensionElement};
use howson::stallings::{dot_alphabet, fold, parse_dot};
use howson::words::WordError;
use howson::{Alphabet, StallingsAutomaton, Word};

/// An input error, reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for InputError {
    fn from(s: String) -> Self {
        InputError(s)
    }
}

pub type Result<T> = std::result::Result<T, InputError>;

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// A subgroup argument: a file of generators, a DOT file, or an inline
/// comma-separated list.
pub enum Source {
    Inline(String),
    Generators { path: PathBuf, text: String },
    Dot { path: PathBuf, text: String },
}

impl Source {
    pub fn load(arg: &str) -> Result<Self> {
        let path = Path::new(arg);
        if !path.is_file() {
            return Ok(Source::Inline(arg.to_string()));
        }
        let text = read_file(path)?;
        let path = path.to_path_buf();
        if strip_comments(&text).trim_start().starts_with("digraph") {
            Ok(Source::Dot { path, text })
        } else {
            Ok(Source::Generators { path, text })
        }
    }

    /// Text whose letters count towards the inferred alphabet.
    fn letters_text(&self) -> &str {
        match self {
            Source::Inline(s) => s,
            Source::Generators { text, .. } => text,
            Source::Dot { .. } => "",
        }
    }
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("//") && !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

/// `--alphabet` accepts a size (`3`) or names (`a,b,c` or `"x y z"`).
pub fn parse_alphabet_flag(flag: &str) -> Result<Alphabet> {
    if let Ok(size) = flag.trim().parse::<usize>() {
        if size == 0 {
            return Err(InputError("--alphabet: size must be positive".into()));
        }
        return Ok(Alphabet::standard(size));
    }
    let names: Vec<&str> = flag.split([',', ' ']).filter(|s| !s.is_empty()).collect();
    Alphabet::new(&names).map_err(|e| InputError(format!("--alphabet: {e}")))
}

/// The alphabet from the flag, a DOT comment, or else `a..z` up to the
/// largest letter mentioned (uppercase counts as the inverse).
pub fn resolve_alphabet(flag: Option<&str>, sources: &[&Source], extra: &[&str]) -> Result<Alphabet> {
    if let Some(flag) = flag {
        return parse_alphabet_flag(flag);
    }
    for s in sources {
        if let Source::Dot { text, path } = s {
            return dot_alphabet(text).ok_or_else(|| {
                InputError(format!(
                    "{}: no `// alphabet` comment; pass --alphabet",
                    path.display()
                ))
            });
        }
    }
    let mut top = 0;
    for text in sources.iter().map(|s| s.letters_text()).chain(extra.iter().copied()) {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for c in line.chars().filter(char::is_ascii_alphabetic) {
                top = top.max((c.to_ascii_lowercase() as u8 - b'a') as usize + 1);
            }
        }
    }
    Ok(Alphabet::standard(top.max(1)))
}

fn word_error(context: &str, line: Option<usize>, offset: usize, e: WordError) -> InputError {
    match (e, line) {
        (WordError::Parse { column, message }, Some(line)) => {
            InputError(format!("{context}:{line}:{}: {message}", column + offset))
        }
        (WordError::Parse { column, message }, None) => {
            InputError(format!("{context}: column {}: {message}", column + offset))
        }
        (other, Some(line)) => InputError(format!("{context}:{line}: {other}")),
        (other, None) => InputError(format!("{context}: {other}")),
    }
}

pub fn parse_word(alphabet: &Alphabet, text: &str, context: &str) -> Result<Word> {
    alphabet.parse(text).map_err(|e| word_error(context, None, 0, e))
}

/// Splits a line on commas, keeping the byte offset of each piece.
fn pieces(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut start = 0;
    line.split(',').map(move |piece| {
        let offset = start;
        start += piece.len() + 1;
        (offset, piece)
    })
}

pub fn generators(alphabet: &Alphabet, source: &Source) -> Result<Vec<Word>> {
    let (context, text, line_numbers) = match source {
        Source::Inline(s) => ("argument".to_string(), s.as_str(), false),
        Source::Generators { path, text } => (path.display().to_string(), text.as_str(), true),
        Source::Dot { .. } => unreachable!("DOT sources are folded directly"),
    };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for (offset, piece) in pieces(line) {
            if piece.trim().is_empty() {
                continue;
            }
            let lead = piece.len() - piece.trim_start().len();
            let w = alphabet
                .parse(piece.trim())
                .map_err(|e| word_error(&context, line_numbers.then_some(i + 1), offset + lead, e))?;
            out.push(w);
        }
    }
    Ok(out)
}

pub fn subgroup(alphabet: &Alphabet, source: &Source) -> Result<StallingsAutomaton> {
    match source {
        Source::Dot { path, text } => {
            let raw = parse_dot(alphabet, text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            Ok(fold(&raw))
        }
        _ => {
            let gens = generators(alphabet, source)?;
            StallingsAutomaton::from_generators(alphabet, &gens).map_err(|e| InputError(e.to_string()))
        }
    }
}

/// A subgroup of an extension: an inline `;`-separated list of `(word, q)`,
/// or a file with an optional `extension PATH` line and one element per line.
pub struct VfSource {
    pub extension: Option<PathBuf>,
    pub lines: Vec<(Option<usize>, String)>,
    pub context: String,
}

impl VfSource {
    pub fn load(arg: &str) -> Result<Self> {
        let path = Path::new(arg);
        if !path.is_file() {
            let lines = arg
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| (None, s.to_string()))
                .collect();
            return Ok(VfSource {
                extension: None,
                lines,
                context: "argument".into(),
            });
        }
        let text = read_file(path)?;
        let mut extension = None;
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("extension") {
                let dir = path.parent().unwrap_or(Path::new("."));
                extension = Some(dir.join(rest.trim()));
            } else {
                lines.push((Some(i + 1), line.to_string()));
            }
        }
        Ok(VfSource {
            extension,
            lines,
            context: path.display().to_string(),
        })
    }

    pub fn elements(&self, data: &ExtensionData) -> Result<Vec<ExtensionElement>> {
        self.lines
            .iter()
            .map(|(line, text)| {
                data.parse_element(text).map_err(|e| match line {
                    Some(l) => InputError(format!("{}:{l}: {e}", self.context)),
                    None => InputError(format!("{}: {text:?}: {e}", self.context)),
                })
            })
            .collect()
    }
}

pub fn load_extension(path: &Path) -> Result<ExtensionData> {
    let text = read_file(path)?;
    ExtensionData::parse(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// `3` or `2..6` (inclusive).
pub fn parse_range(flag: &str, text: &str) -> Result<Vec<u64>> {
    let bad = || InputError(format!("--{flag}: expected N or A..B, got {text:?}"));
    match text.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![text.trim().parse().map_err(|_| bad())?]),
    }
}
