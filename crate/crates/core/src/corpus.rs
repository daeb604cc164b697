//! Annotated noun-phrase records and the line-oriented corpus file format.
//!
//! A corpus file is UTF-8 text. `#doc <id>` opens a document; every other
//! line starting with `#` is a comment; each remaining nonblank line is one
//! noun-phrase record made of tab-separated `key=value` tokens.
//!
//! ```text
//! #doc kudamono
//! sent=0	surface=wareware	head=pronoun	particle=ga	gold=def
//! sent=0	surface=kudamono	head=common	particle=wa	pred_tense=nonpast	pred_pos=adjective	pron_in_mod=1	embedded=past	embedded_np=wareware:ga	gold=def
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::category::GoldLabel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $code:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($code => Ok($name::$variant),)+
                    other => Err(format!(
                        "invalid {} `{}`",
                        stringify!($name),
                        other
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }
    };
}

keyword_enum!(
    /// Lexical class of the head noun.
    HeadClass { Common => "common", Proper => "proper", Pronoun => "pronoun" }
);

keyword_enum!(
    /// Tense of a predicate or of an embedded (modifying) clause.
    Tense { Past => "past", Nonpast => "nonpast" }
);

keyword_enum!(
    PredPos { Verb => "verb", Adjective => "adjective", Copula => "copula" }
);

keyword_enum!(
    /// Adverb classes that act as clue words (e.g. `itsumo`, "always").
    AdverbClass { Generic => "generic" }
);

keyword_enum!(
    /// Boolean attributes of a noun phrase, addressable by name in rules.
    Flag {
        Demonstrative => "demonstrative",
        Aru => "aru",
        Numeral => "numeral",
        Modifier => "modifier",
        PronounInModifier => "pron_in_mod",
    }
);

/// A noun phrase occurring inside the clause that modifies another one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmbeddedNp {
    pub surface: String,
    pub particle: String,
}

/// One noun-phrase occurrence: the unit of classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpContext {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Position within the document, in document order.
    pub np_index: usize,
    pub surface: String,
    pub head_class: HeadClass,
    pub particle: Option<String>,
    pub predicate_tense: Option<Tense>,
    pub predicate_pos: Option<PredPos>,
    pub demonstrative: bool,
    pub aru_modifier: bool,
    pub numeral_modifier: bool,
    pub has_modifier: bool,
    pub pronoun_in_modifier: bool,
    pub adverb_class: Option<AdverbClass>,
    pub embedded_clause: Option<Tense>,
    pub embedded_nps: Vec<EmbeddedNp>,
    pub gold: Option<GoldLabel>,
}

impl NpContext {
    /// A bare record with every optional attribute absent.
    pub fn new(
        doc_id: impl Into<String>,
        sentence_index: usize,
        np_index: usize,
        surface: impl Into<String>,
        head_class: HeadClass,
    ) -> Self {
        NpContext {
            doc_id: doc_id.into(),
            sentence_index,
            np_index,
            surface: surface.into(),
            head_class,
            particle: None,
            predicate_tense: None,
            predicate_pos: None,
            demonstrative: false,
            aru_modifier: false,
            numeral_modifier: false,
            has_modifier: false,
            pronoun_in_modifier: false,
            adverb_class: None,
            embedded_clause: None,
            embedded_nps: Vec::new(),
            gold: None,
        }
    }

    pub fn flag(&self, flag: Flag) -> bool {
        match flag {
            Flag::Demonstrative => self.demonstrative,
            Flag::Aru => self.aru_modifier,
            Flag::Numeral => self.numeral_modifier,
            Flag::Modifier => self.has_modifier,
            Flag::PronounInModifier => self.pronoun_in_modifier,
        }
    }

    pub fn set_flag(&mut self, flag: Flag, on: bool) {
        match flag {
            Flag::Demonstrative => self.demonstrative = on,
            Flag::Aru => self.aru_modifier = on,
            Flag::Numeral => self.numeral_modifier = on,
            Flag::Modifier => self.has_modifier = on,
            Flag::PronounInModifier => self.pronoun_in_modifier = on,
        }
    }

    /// True when any modifier at all is recorded: the generic `modifier` flag,
    /// a demonstrative, `aru`, a numeral, a pronoun inside the modifier, or an
    /// embedded clause.
    pub fn is_modified(&self) -> bool {
        self.has_modifier
            || self.demonstrative
            || self.aru_modifier
            || self.numeral_modifier
            || self.pronoun_in_modifier
            || self.embedded_clause.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub nps: Vec<NpContext>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn np_count(&self) -> usize {
        self.documents.iter().map(|d| d.nps.len()).sum()
    }

    pub fn nps(&self) -> impl Iterator<Item = &NpContext> {
        self.documents.iter().flat_map(|d| d.nps.iter())
    }
}

/// Keys beyond the corpus vocabulary that a caller agrees to accept, keyed by
/// (document position, record position).
pub(crate) type ExtraFields = Vec<Vec<BTreeMap<String, String>>>;

/// Parses a corpus file, rejecting any key outside the corpus vocabulary.
pub fn parse_corpus(text: &str) -> Result<Corpus, ParseError> {
    parse_with_extras(text, &[]).map(|(corpus, _)| corpus)
}

pub(crate) fn parse_with_extras(
    text: &str,
    extra_keys: &[&str],
) -> Result<(Corpus, ExtraFields), ParseError> {
    let mut corpus = Corpus::default();
    let mut extras: ExtraFields = Vec::new();
    let mut seen_ids = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if raw.starts_with('#') {
            let mut parts = raw.split_whitespace();
            if parts.next() != Some("#doc") {
                continue;
            }
            let id = raw["#doc".len()..].trim();
            if id.is_empty() {
                return Err(ParseError::new(line_no, "document header without id"));
            }
            if id.chars().any(char::is_control) {
                return Err(ParseError::new(line_no, "control character in document id"));
            }
            if !seen_ids.insert(id.to_string()) {
                return Err(ParseError::new(line_no, format!("duplicate document `{id}`")));
            }
            corpus.documents.push(Document {
                id: id.to_string(),
                nps: Vec::new(),
            });
            extras.push(Vec::new());
            continue;
        }
        let Some(doc) = corpus.documents.last_mut() else {
            return Err(ParseError::new(line_no, "record before any #doc header"));
        };
        let (np, extra) = parse_record(raw, &doc.id, doc.nps.len(), extra_keys)
            .map_err(|m| ParseError::new(line_no, m))?;
        if let Some(prev) = doc.nps.last() {
            if np.sentence_index < prev.sentence_index {
                return Err(ParseError::new(
                    line_no,
                    format!(
                        "sentence index {} decreases from {}",
                        np.sentence_index, prev.sentence_index
                    ),
                ));
            }
        }
        doc.nps.push(np);
        extras.last_mut().expect("pushed with document").push(extra);
    }
    Ok((corpus, extras))
}

fn parse_flag(value: &str) -> Result<bool, String> {
    match value {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("flag value must be 0 or 1, got `{other}`")),
    }
}

fn parse_optional<T: FromStr<Err = String>>(value: &str) -> Result<Option<T>, String> {
    if value == "none" {
        Ok(None)
    } else {
        value.parse().map(Some)
    }
}

fn parse_record(
    line: &str,
    doc_id: &str,
    np_index: usize,
    extra_keys: &[&str],
) -> Result<(NpContext, BTreeMap<String, String>), String> {
    let mut np = NpContext::new(doc_id, 0, np_index, "", HeadClass::Common);
    let mut seen: HashSet<&str> = HashSet::new();
    let mut extra = BTreeMap::new();

    for token in line.split('\t') {
        if token.is_empty() {
            continue;
        }
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| format!("token `{token}` is not key=value"))?;
        let key = key.trim();
        if value.chars().any(char::is_control) {
            return Err(format!("control character in value of `{key}`"));
        }
        if key != "embedded_np" && !seen.insert(key) {
            return Err(format!("duplicate key `{key}`"));
        }
        match key {
            "sent" => {
                np.sentence_index = value
                    .parse()
                    .map_err(|_| format!("invalid sentence index `{value}`"))?
            }
            "surface" => {
                if value.is_empty() {
                    return Err("empty surface".into());
                }
                np.surface = value.to_string();
            }
            "head" => np.head_class = value.parse()?,
            "particle" => {
                if value.is_empty() {
                    return Err("empty particle".into());
                }
                np.particle = Some(value.to_string());
            }
            "pred_tense" => np.predicate_tense = parse_optional(value)?,
            "pred_pos" => np.predicate_pos = parse_optional(value)?,
            "demonstrative" => np.demonstrative = parse_flag(value)?,
            "aru" => np.aru_modifier = parse_flag(value)?,
            "numeral" => np.numeral_modifier = parse_flag(value)?,
            "modifier" => np.has_modifier = parse_flag(value)?,
            "pron_in_mod" => np.pronoun_in_modifier = parse_flag(value)?,
            "adverb" => np.adverb_class = parse_optional(value)?,
            "embedded" => np.embedded_clause = parse_optional(value)?,
            "embedded_np" => {
                let (surface, particle) = value
                    .rsplit_once(':')
                    .ok_or_else(|| format!("embedded_np `{value}` is not surface:particle"))?;
                if surface.is_empty() || particle.is_empty() {
                    return Err(format!("embedded_np `{value}` has an empty part"));
                }
                np.embedded_nps.push(EmbeddedNp {
                    surface: surface.to_string(),
                    particle: particle.to_string(),
                });
            }
            "gold" => {
                np.gold = Some(value.parse().map_err(|e| format!("{e}"))?);
            }
            k if extra_keys.contains(&k) => {
                extra.insert(k.to_string(), value.to_string());
            }
            k => return Err(format!("unknown key `{k}`")),
        }
    }
    for required in ["sent", "surface", "head"] {
        if !seen.contains(required) {
            return Err(format!("missing required key `{required}`"));
        }
    }
    if np.embedded_clause.is_none() && !np.embedded_nps.is_empty() {
        return Err("embedded_np requires an embedded clause".into());
    }
    Ok((np, extra))
}

/// Renders one record in canonical key order, omitting defaulted attributes.
pub(crate) fn write_record(out: &mut String, np: &NpContext) {
    let _ = write!(
        out,
        "sent={}\tsurface={}\thead={}",
        np.sentence_index, np.surface, np.head_class
    );
    if let Some(p) = &np.particle {
        let _ = write!(out, "\tparticle={p}");
    }
    if let Some(t) = np.predicate_tense {
        let _ = write!(out, "\tpred_tense={t}");
    }
    if let Some(p) = np.predicate_pos {
        let _ = write!(out, "\tpred_pos={p}");
    }
    for &flag in Flag::ALL {
        if np.flag(flag) {
            let _ = write!(out, "\t{}=1", flag.code());
        }
    }
    if let Some(a) = np.adverb_class {
        let _ = write!(out, "\tadverb={a}");
    }
    if let Some(e) = np.embedded_clause {
        let _ = write!(out, "\tembedded={e}");
    }
    for e in &np.embedded_nps {
        let _ = write!(out, "\tembedded_np={}:{}", e.surface, e.particle);
    }
    if let Some(g) = np.gold {
        let _ = write!(out, "\tgold={}", g.code());
    }
}

/// Serializes a corpus back to the file format.
pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in &corpus.documents {
        let _ = writeln!(out, "#doc {}", doc.id);
        for np in &doc.nps {
            write_record(&mut out, np);
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    DuplicateDocument,
    DocumentMismatch,
    Ordering,
    EmbeddedWithoutClause,
    MissingGold,
    SkippedOtherGold,
    NoRulesFired,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub doc_id: String,
    pub np_index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.np_index {
            Some(i) => write!(f, "{} np {}: {}", self.doc_id, i, self.message),
            None => write!(f, "{}: {}", self.doc_id, self.message),
        }
    }
}

/// Checks the structural invariants of a corpus. Diagnostics are returned as
/// data; an empty list means the corpus is well formed.
pub fn validate(corpus: &Corpus, require_gold: bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    let diag = |kind, doc_id: &str, np_index, message: String| Diagnostic {
        kind,
        doc_id: doc_id.to_string(),
        np_index,
        message,
    };

    for doc in &corpus.documents {
        if !ids.insert(doc.id.as_str()) {
            out.push(diag(
                DiagnosticKind::DuplicateDocument,
                &doc.id,
                None,
                "duplicate document id".into(),
            ));
        }
        let mut prev: Option<&NpContext> = None;
        for np in &doc.nps {
            if np.doc_id != doc.id {
                out.push(diag(
                    DiagnosticKind::DocumentMismatch,
                    &doc.id,
                    Some(np.np_index),
                    format!("record belongs to document `{}`", np.doc_id),
                ));
            }
            if let Some(p) = prev {
                if np.np_index <= p.np_index {
                    out.push(diag(
                        DiagnosticKind::Ordering,
                        &doc.id,
                        Some(np.np_index),
                        format!("np_index {} does not follow {}", np.np_index, p.np_index),
                    ));
                }
                if np.sentence_index < p.sentence_index {
                    out.push(diag(
                        DiagnosticKind::Ordering,
                        &doc.id,
                        Some(np.np_index),
                        format!(
                            "sentence index {} decreases from {}",
                            np.sentence_index, p.sentence_index
                        ),
                    ));
                }
            }
            if np.embedded_clause.is_none() && !np.embedded_nps.is_empty() {
                out.push(diag(
                    DiagnosticKind::EmbeddedWithoutClause,
                    &doc.id,
                    Some(np.np_index),
                    "embedded noun phrases without an embedded clause".into(),
                ));
            }
            if require_gold && np.gold.is_none() {
                out.push(diag(
                    DiagnosticKind::MissingGold,
                    &doc.id,
                    Some(np.np_index),
                    "gold label required".into(),
                ));
            }
            prev = Some(np);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;

    const KUDAMONO: &str = "#doc ex4\n\
        sent=0\tsurface=wareware\thead=pronoun\tparticle=ga\tgold=def\n\
        sent=0\tsurface=kudamono\thead=common\tparticle=wa\tpred_tense=nonpast\tpred_pos=adjective\tpron_in_mod=1\tembedded=past\tembedded_np=wareware:ga\tgold=def\n";

    #[test]
    fn empty_input_has_no_documents() {
        assert_eq!(parse_corpus("").unwrap().documents.len(), 0);
        assert_eq!(parse_corpus("\n# just a comment\n\n").unwrap().documents.len(), 0);
    }

    #[test]
    fn parses_the_fruit_example() {
        let corpus = parse_corpus(KUDAMONO).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        let doc = &corpus.documents[0];
        assert_eq!(doc.id, "ex4");
        let np = &doc.nps[1];
        assert_eq!(np.surface, "kudamono");
        assert_eq!(np.np_index, 1);
        assert_eq!(np.doc_id, "ex4");
        assert_eq!(np.particle.as_deref(), Some("wa"));
        assert_eq!(np.predicate_tense, Some(Tense::Nonpast));
        assert_eq!(np.predicate_pos, Some(PredPos::Adjective));
        assert_eq!(np.head_class, HeadClass::Common);
        assert_eq!(np.embedded_clause, Some(Tense::Past));
        assert_eq!(
            np.embedded_nps,
            vec![EmbeddedNp {
                surface: "wareware".into(),
                particle: "ga".into()
            }]
        );
        assert!(np.pronoun_in_modifier);
        assert!(!np.demonstrative && !np.aru_modifier && !np.numeral_modifier);
        assert!(!np.has_modifier);
        assert!(np.is_modified());
        assert_eq!(np.gold, Some(GoldLabel::Category(Category::Definite)));
    }

    #[test]
    fn missing_gold_is_a_validation_diagnostic() {
        let corpus = parse_corpus("#doc a\nsent=0\tsurface=inu\thead=common\n").unwrap();
        assert!(validate(&corpus, false).is_empty());
        let diags = validate(&corpus, true);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::MissingGold);
        assert_eq!(diags[0].message, "gold label required");
    }

    #[test]
    fn decreasing_sentence_index_is_reported() {
        let mut corpus = parse_corpus(KUDAMONO).unwrap();
        assert!(validate(&corpus, true).is_empty());
        corpus.documents[0].nps[0].sentence_index = 3;
        let diags = validate(&corpus, false);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::Ordering);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("sent=0\tsurface=a\thead=common\n", 1, "before any #doc"),
            ("#doc a\nsent=0\tsurface=a\thead=common\tcolor=red\n", 2, "unknown key"),
            ("#doc a\n\n#doc a\n", 3, "duplicate document"),
            ("#doc a\nsent=x\tsurface=a\thead=common\n", 2, "sentence index"),
            ("#doc a\nsent=0\tsurface=a\thead=noun\n", 2, "HeadClass"),
            ("#doc a\nsent=0\tsurface=a\thead=common\taru=2\n", 2, "0 or 1"),
            ("#doc a\nsent=0\tsurface=a\n", 2, "missing required key `head`"),
            ("#doc a\nsent=0\tsurface=a\thead=common\tgold=maybe\n", 2, "unknown category"),
            ("#doc a\nsent=0\tsurface=a\thead=common\tembedded_np=x\n", 2, "surface:particle"),
            ("#doc a\nsent=0\tsurface=a\thead=common\tembedded_np=x:ga\n", 2, "requires an embedded"),
            ("#doc a\nsent=1\tsurface=a\thead=common\nsent=0\tsurface=b\thead=common\n", 3, "decreases"),
            ("#doc a\nsent=0\tsent=1\tsurface=a\thead=common\n", 2, "duplicate key"),
            ("#doc\n", 1, "without id"),
        ];
        for (text, line, needle) in cases {
            let err = parse_corpus(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}");
            assert!(err.message.contains(needle), "{err} lacks {needle}");
        }
    }

    #[test]
    fn other_hash_lines_are_comments() {
        let corpus =
            parse_corpus("# header\n#doc a\n#document-note\nsent=0\tsurface=x\thead=proper\n")
                .unwrap();
        assert_eq!(corpus.np_count(), 1);
    }

    #[test]
    fn writer_output_reparses() {
        let corpus = parse_corpus(KUDAMONO).unwrap();
        let text = write_corpus(&corpus);
        assert_eq!(parse_corpus(&text).unwrap(), corpus);
    }
}
