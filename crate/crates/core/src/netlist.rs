//! Line-oriented description of the optical chain.
//!
//! ```text
//! # comment
//! opa      sq   pump_x=0.31 bandwidth=20MHz escape=0.90
//! loss     iso  eta=0.93
//! cavity   fc   length=1.21m r_in=0.90 r_end=0.9992 detuning=-10MHz
//! homodyne bhd  angle=0deg qe=0.93
//! chain sq -> iso -> fc -> bhd
//! signal node=fc amplitude=1
//! ```
//!
//! Accepted units are `Hz kHz MHz GHz` for frequencies, `m mm` for lengths
//! and `deg` for angles. Bare numbers are in Hz, m, rad, or a plain fraction.
//! A positive cavity detuning places the resonance on the upper sideband.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;

use crate::optics::{CavitySpec, OpaSpec};
use crate::pipeline::{Pipeline, SignalInjection, Stage};
use crate::twophoton::HomodyneSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Opa,
    Cavity,
    Loss,
    Homodyne,
}

impl ComponentKind {
    pub fn keyword(self) -> &'static str {
        match self {
            Self::Opa => "opa",
            Self::Cavity => "cavity",
            Self::Loss => "loss",
            Self::Homodyne => "homodyne",
        }
    }

    fn from_keyword(word: &str) -> Option<Self> {
        [Self::Opa, Self::Cavity, Self::Loss, Self::Homodyne]
            .into_iter()
            .find(|k| k.keyword() == word)
    }

    fn attributes(self) -> &'static [AttributeSpec] {
        match self {
            Self::Opa => OPA_ATTRIBUTES,
            Self::Cavity => CAVITY_ATTRIBUTES,
            Self::Loss => LOSS_ATTRIBUTES,
            Self::Homodyne => HOMODYNE_ATTRIBUTES,
        }
    }

    fn attribute(self, key: &str) -> Option<&'static AttributeSpec> {
        self.attributes().iter().find(|a| a.key == key)
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Frequency,
    Length,
    Angle,
    Fraction,
}

impl Dimension {
    fn si_suffix(self) -> &'static str {
        match self {
            Self::Frequency => "Hz",
            Self::Length => "m",
            Self::Angle | Self::Fraction => "",
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Self::Frequency => "a frequency (Hz, kHz, MHz, GHz)",
            Self::Length => "a length (m, mm)",
            Self::Angle => "an angle (deg, or bare radians)",
            Self::Fraction => "a plain fraction without unit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Range {
    Finite,
    Positive,
    UnitInterval,
    BelowOne,
}

impl Range {
    fn admits(self, v: f64) -> bool {
        match self {
            Self::Finite => v.is_finite(),
            Self::Positive => v.is_finite() && v > 0.0,
            Self::UnitInterval => (0.0..=1.0).contains(&v),
            Self::BelowOne => (0.0..1.0).contains(&v),
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Self::Finite => "finite",
            Self::Positive => "> 0",
            Self::UnitInterval => "in [0, 1]",
            Self::BelowOne => "in [0, 1)",
        }
    }
}

const fn attr(key: &'static str, dimension: Dimension, range: Range, required: bool) -> AttributeSpec {
    AttributeSpec {
        key,
        dimension,
        range,
        required,
    }
}

const OPA_ATTRIBUTES: &[AttributeSpec] = &[
    attr("pump_x", Dimension::Fraction, Range::BelowOne, true),
    attr("bandwidth", Dimension::Frequency, Range::Positive, true),
    attr("escape", Dimension::Fraction, Range::UnitInterval, true),
];
const CAVITY_ATTRIBUTES: &[AttributeSpec] = &[
    attr("length", Dimension::Length, Range::Positive, true),
    attr("r_in", Dimension::Fraction, Range::UnitInterval, true),
    attr("r_end", Dimension::Fraction, Range::UnitInterval, true),
    attr("detuning", Dimension::Frequency, Range::Finite, true),
    attr("loss_rt", Dimension::Fraction, Range::UnitInterval, false),
];
const LOSS_ATTRIBUTES: &[AttributeSpec] = &[attr("eta", Dimension::Fraction, Range::UnitInterval, true)];
const HOMODYNE_ATTRIBUTES: &[AttributeSpec] = &[
    attr("angle", Dimension::Angle, Range::Finite, true),
    attr("qe", Dimension::Fraction, Range::UnitInterval, true),
];

#[derive(Debug)]
struct AttributeSpec {
    key: &'static str,
    dimension: Dimension,
    range: Range,
    required: bool,
}

/// Where something was written. Positions never take part in equality, so
/// a reparsed document compares equal to its source.
#[derive(Debug, Clone, Default)]
pub struct Origin {
    pub line: usize,
    pub column: usize,
    /// Column of each attribute or chain entry, keyed by name.
    pub columns: BTreeMap<String, usize>,
}

impl PartialEq for Origin {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Origin {
    fn at(line: usize, column: usize) -> Self {
        Self {
            line,
            column,
            columns: BTreeMap::new(),
        }
    }

    fn column_of(&self, key: &str) -> usize {
        self.columns.get(key).copied().unwrap_or(self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub kind: ComponentKind,
    pub name: String,
    /// SI values keyed by attribute name.
    pub attributes: BTreeMap<String, f64>,
    pub origin: Origin,
}

impl Declaration {
    pub fn new(kind: ComponentKind, name: impl Into<String>) -> Self {
        Self {
            kind,
            name: name.into(),
            attributes: BTreeMap::new(),
            origin: Origin::default(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.attributes.insert(key.to_owned(), value);
        self
    }

    fn get(&self, key: &str) -> f64 {
        self.attributes.get(key).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalDeclaration {
    pub node: String,
    pub amplitude: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetlistDocument {
    pub components: Vec<Declaration>,
    /// Component names from source to detector; empty when no chain was given.
    pub chain: Vec<String>,
    pub chain_origin: Origin,
    pub signal: Option<SignalDeclaration>,
    /// Line reported for document-level problems such as a missing chain.
    pub end_origin: Origin,
}

impl NetlistDocument {
    pub fn component(&self, name: &str) -> Option<&Declaration> {
        self.components.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub severity: Severity,
    pub message: String,
}

impl ParseDiagnostic {
    fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(line, column, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, level, self.message)
    }
}

/// A non-empty list of diagnostics containing at least one error.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics(pub Vec<ParseDiagnostic>);

impl Diagnostics {
    pub fn errors(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.0.iter().filter(|d| d.is_error())
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    tokens
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `12.5MHz` into its number and unit suffix.
fn split_number(text: &str) -> (&str, &str) {
    let bytes = text.as_bytes();
    let mut end = 0;
    let mut seen_exponent = false;
    while end < bytes.len() {
        let b = bytes[end];
        let ok = match b {
            b'0'..=b'9' | b'.' => true,
            b'+' | b'-' => end == 0 || matches!(bytes[end - 1], b'e' | b'E'),
            b'e' | b'E' if !seen_exponent && end > 0 => {
                let next = bytes.get(end + 1).copied();
                let after = bytes.get(end + 2).copied();
                let exp = matches!(next, Some(b'0'..=b'9'))
                    || (matches!(next, Some(b'+' | b'-')) && matches!(after, Some(b'0'..=b'9')));
                seen_exponent |= exp;
                exp
            }
            _ => false,
        };
        if !ok {
            break;
        }
        end += 1;
    }
    text.split_at(end)
}

type Conversion = fn(f64) -> f64;

fn unit_conversion(unit: &str) -> Option<(Dimension, Conversion)> {
    Some(match unit {
        "Hz" => (Dimension::Frequency, |v| v),
        "kHz" => (Dimension::Frequency, |v| v * 1e3),
        "MHz" => (Dimension::Frequency, |v| v * 1e6),
        "GHz" => (Dimension::Frequency, |v| v * 1e9),
        "m" => (Dimension::Length, |v| v),
        "mm" => (Dimension::Length, |v| v / 1e3),
        "deg" => (Dimension::Angle, |v| v * PI / 180.0),
        _ => return None,
    })
}

/// Parses a number with an optional unit into SI, given the expected dimension.
fn parse_value(text: &str, dimension: Option<Dimension>) -> Result<f64, String> {
    let (number, unit) = split_number(text);
    let value: f64 = number
        .parse()
        .map_err(|_| format!("malformed number `{text}`"))?;
    if !value.is_finite() {
        return Err(format!("number `{text}` is not finite"));
    }
    if unit.is_empty() {
        return Ok(value);
    }
    let Some((unit_dim, convert)) = unit_conversion(unit) else {
        let hint = if unit.eq_ignore_ascii_case("db") {
            "; losses are given as plain fractions"
        } else {
            ""
        };
        return Err(format!("unknown unit `{unit}` in `{text}`{hint}"));
    };
    match dimension {
        Some(d) if d != unit_dim => Err(format!("unit `{unit}` given where {} is expected", d.describe())),
        _ => Ok(convert(value)),
    }
}

/// Parses a frequency such as `5MHz`, `2.5e6` or `800kHz` into Hz.
pub fn parse_frequency(text: &str) -> Result<f64, String> {
    parse_value(text, Some(Dimension::Frequency))
}

/// Parses netlist text. Every problem found is reported, each with the line
/// and column it refers to; no document is produced if any is an error.
pub fn parse(text: &str) -> Result<NetlistDocument, Diagnostics> {
    let mut doc = NetlistDocument::default();
    let mut diags = Vec::new();
    let mut line_count = 0;
    let mut chain_seen = false;

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        line_count = line_no;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some(head) = tokens.first() else { continue };

        match head.text {
            "chain" => {
                if chain_seen {
                    diags.push(ParseDiagnostic::error(line_no, head.column, "second `chain` line"));
                    continue;
                }
                chain_seen = true;
                parse_chain(content, line_no, head, &mut doc, &mut diags);
            }
            "signal" => {
                if doc.signal.is_some() {
                    diags.push(ParseDiagnostic::error(line_no, head.column, "second `signal` line"));
                    continue;
                }
                doc.signal = parse_signal(&tokens, line_no, &mut diags);
            }
            word => match ComponentKind::from_keyword(word) {
                Some(kind) => {
                    if let Some(decl) = parse_declaration(kind, &tokens, line_no, &mut diags) {
                        doc.components.push(decl);
                    }
                }
                None => diags.push(ParseDiagnostic::error(
                    line_no,
                    head.column,
                    format!("unknown component kind `{word}` (expected opa, cavity, loss, homodyne, chain or signal)"),
                )),
            },
        }
    }
    doc.end_origin = Origin::at(line_count.max(1), 1);

    diags.extend(check(&doc));
    if diags.iter().any(ParseDiagnostic::is_error) {
        diags.sort_by_key(|d| (d.line, d.column));
        Err(Diagnostics(diags))
    } else {
        Ok(doc)
    }
}

fn parse_chain(content: &str, line_no: usize, head: &Token<'_>, doc: &mut NetlistDocument, diags: &mut Vec<ParseDiagnostic>) {
    let start = content.find("chain").unwrap_or(0) + "chain".len();
    let mut origin = Origin::at(line_no, head.column);
    let mut offset = start;
    for part in content[start..].split("->") {
        let name = part.trim();
        let lead = part.len() - part.trim_start().len();
        let column = content[..offset + lead].chars().count() + 1;
        offset += part.len() + 2;
        if !is_identifier(name) {
            let msg = if name.is_empty() {
                "empty chain entry".to_owned()
            } else {
                format!("invalid component name `{name}` in chain")
            };
            diags.push(ParseDiagnostic::error(line_no, column, msg));
            continue;
        }
        origin.columns.entry(name.to_owned()).or_insert(column);
        doc.chain.push(name.to_owned());
    }
    doc.chain_origin = origin;
}

fn parse_signal(tokens: &[Token<'_>], line_no: usize, diags: &mut Vec<ParseDiagnostic>) -> Option<SignalDeclaration> {
    let mut node = None;
    let mut amplitude = None;
    let mut origin = Origin::at(line_no, tokens[0].column);
    let before = diags.len();
    for tok in &tokens[1..] {
        match tok.text.split_once('=') {
            Some(("node", v)) if is_identifier(v) => node = Some(v.to_owned()),
            Some(("node", v)) => diags.push(ParseDiagnostic::error(line_no, tok.column, format!("invalid node name `{v}`"))),
            Some(("amplitude", v)) => match parse_value(v, Some(Dimension::Fraction)) {
                Ok(a) => amplitude = Some(a),
                Err(e) => diags.push(ParseDiagnostic::error(line_no, tok.column, e)),
            },
            _ => {
                diags.push(ParseDiagnostic::error(
                    line_no,
                    tok.column,
                    format!("unexpected `{}` in signal line (expected node=NAME amplitude=NUMBER)", tok.text),
                ));
                continue;
            }
        }
        let key = tok.text.split('=').next().unwrap_or_default();
        origin.columns.insert(key.to_owned(), tok.column);
    }
    if node.is_none() {
        diags.push(ParseDiagnostic::error(line_no, origin.column, "signal line needs node=NAME"));
    }
    if amplitude.is_none() && diags.len() == before {
        diags.push(ParseDiagnostic::error(line_no, origin.column, "signal line needs amplitude=NUMBER"));
    }
    Some(SignalDeclaration {
        node: node?,
        amplitude: amplitude?,
        origin,
    })
}

fn parse_declaration(
    kind: ComponentKind,
    tokens: &[Token<'_>],
    line_no: usize,
    diags: &mut Vec<ParseDiagnostic>,
) -> Option<Declaration> {
    let Some(name_tok) = tokens.get(1) else {
        diags.push(ParseDiagnostic::error(line_no, tokens[0].column, format!("{kind} declaration needs a name")));
        return None;
    };
    if name_tok.text.contains('=') || !is_identifier(name_tok.text) {
        diags.push(ParseDiagnostic::error(
            line_no,
            name_tok.column,
            format!("invalid component name `{}`", name_tok.text),
        ));
        return None;
    }
    let mut decl = Declaration::new(kind, name_tok.text);
    decl.origin = Origin::at(line_no, tokens[0].column);
    for tok in &tokens[2..] {
        let Some((key, value)) = tok.text.split_once('=') else {
            diags.push(ParseDiagnostic::error(
                line_no,
                tok.column,
                format!("expected key=value, found `{}`", tok.text),
            ));
            continue;
        };
        if decl.origin.columns.contains_key(key) {
            diags.push(ParseDiagnostic::error(line_no, tok.column, format!("attribute `{key}` given twice")));
            continue;
        }
        decl.origin.columns.insert(key.to_owned(), tok.column);
        match parse_value(value, kind.attribute(key).map(|a| a.dimension)) {
            Ok(v) => {
                decl.attributes.insert(key.to_owned(), v);
            }
            Err(e) => diags.push(ParseDiagnostic::error(line_no, tok.column + key.len() + 1, e)),
        }
    }
    Some(decl)
}

/// Semantic checks shared by [`parse`] and [`validate`]: attribute sets and
/// ranges, name uniqueness, chain resolution and topology, signal placement.
/// Also emits warnings for declared but unused components.
pub fn check(doc: &NetlistDocument) -> Vec<ParseDiagnostic> {
    let mut diags = Vec::new();
    let mut first_seen: HashMap<&str, usize> = HashMap::new();

    for decl in &doc.components {
        let (line, col) = (decl.origin.line.max(1), decl.origin.column.max(1));
        if let Some(prev) = first_seen.insert(&decl.name, line) {
            diags.push(ParseDiagnostic::error(
                line,
                col,
                format!("duplicate component name `{}` (first declared on line {prev})", decl.name),
            ));
        }
        for (key, &value) in &decl.attributes {
            let key_col = decl.origin.column_of(key);
            match decl.kind.attribute(key) {
                None => {
                    let known: Vec<_> = decl.kind.attributes().iter().map(|a| a.key).collect();
                    diags.push(ParseDiagnostic::error(
                        line,
                        key_col,
                        format!("unknown attribute `{key}` for {} (known: {})", decl.kind, known.join(", ")),
                    ));
                }
                Some(spec) if !spec.range.admits(value) => diags.push(ParseDiagnostic::error(
                    line,
                    key_col,
                    format!("attribute `{key}` = {value} out of range (must be {})", spec.range.describe()),
                )),
                Some(_) => {}
            }
        }
        let missing: Vec<_> = decl
            .kind
            .attributes()
            .iter()
            .filter(|a| a.required && !decl.attributes.contains_key(a.key))
            .map(|a| a.key)
            .collect();
        if !missing.is_empty() {
            diags.push(ParseDiagnostic::error(
                line,
                col,
                format!("{} `{}` is missing required attributes: {}", decl.kind, decl.name, missing.join(", ")),
            ));
        }
    }

    let end = (doc.end_origin.line.max(1), 1);
    if doc.chain.is_empty() {
        diags.push(ParseDiagnostic::error(end.0, end.1, "missing `chain` line"));
    }
    let chain_line = doc.chain_origin.line.max(1);
    let kinds: Vec<Option<ComponentKind>> = doc
        .chain
        .iter()
        .map(|name| {
            let kind = doc.component(name).map(|d| d.kind);
            if kind.is_none() {
                diags.push(ParseDiagnostic::error(
                    chain_line,
                    doc.chain_origin.column_of(name),
                    format!("chain refers to undeclared component `{name}`"),
                ));
            }
            kind
        })
        .collect();

    let homodynes: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i] == Some(ComponentKind::Homodyne)).collect();
    if !doc.chain.is_empty() {
        match homodynes.as_slice() {
            [] => diags.push(ParseDiagnostic::error(chain_line, doc.chain_origin.column, "chain has no homodyne detector")),
            [i] if *i + 1 == kinds.len() => {}
            [i] => diags.push(ParseDiagnostic::error(
                chain_line,
                doc.chain_origin.column_of(&doc.chain[*i]),
                "homodyne detector must be the last chain entry",
            )),
            _ => diags.push(ParseDiagnostic::error(chain_line, doc.chain_origin.column, "chain has more than one homodyne detector")),
        }
    }
    for (i, kind) in kinds.iter().enumerate() {
        if *kind == Some(ComponentKind::Opa) && i != 0 {
            diags.push(ParseDiagnostic::error(
                chain_line,
                doc.chain_origin.column_of(&doc.chain[i]),
                "an opa can only be the first chain entry",
            ));
        }
    }

    if let Some(signal) = &doc.signal {
        let line = signal.origin.line.max(1);
        let col = signal.origin.column_of("node").max(1);
        if !doc.chain.contains(&signal.node) {
            diags.push(ParseDiagnostic::error(line, col, format!("signal node `{}` is not in the chain", signal.node)));
        } else if doc.component(&signal.node).map(|d| d.kind) != Some(ComponentKind::Cavity) {
            diags.push(ParseDiagnostic::error(line, col, format!("signal node `{}` must be a cavity", signal.node)));
        }
        if !(signal.amplitude.is_finite() && signal.amplitude >= 0.0) {
            diags.push(ParseDiagnostic::error(
                line,
                signal.origin.column_of("amplitude").max(1),
                "signal amplitude must be finite and >= 0",
            ));
        }
    }

    let used: HashSet<&str> = doc.chain.iter().map(String::as_str).collect();
    for decl in &doc.components {
        if !used.contains(decl.name.as_str()) {
            diags.push(ParseDiagnostic::warning(
                decl.origin.line.max(1),
                decl.origin.column.max(1),
                format!("component `{}` is declared but not in the chain", decl.name),
            ));
        }
    }
    diags
}

/// Warnings that do not prevent a document from being used.
pub fn lint(doc: &NetlistDocument) -> Vec<ParseDiagnostic> {
    check(doc).into_iter().filter(|d| !d.is_error()).collect()
}

/// Checks `doc` and turns it into an ordered pipeline.
pub fn validate(doc: &NetlistDocument) -> Result<Pipeline, Diagnostics> {
    let diags = check(doc);
    if diags.iter().any(ParseDiagnostic::is_error) {
        return Err(Diagnostics(diags.into_iter().filter(ParseDiagnostic::is_error).collect()));
    }

    let mut source = None;
    let mut stages = Vec::new();
    let mut homodyne = HomodyneSpec::amplitude();
    let mut signal = None;
    // check() guarantees every entry resolves with in-range attributes
    for name in &doc.chain {
        let decl = doc.component(name).expect("chain entry resolved by check");
        match decl.kind {
            ComponentKind::Opa => {
                source = Some((
                    name.clone(),
                    OpaSpec {
                        pump_x: decl.get("pump_x"),
                        bandwidth: decl.get("bandwidth"),
                        escape_efficiency: decl.get("escape"),
                    },
                ))
            }
            ComponentKind::Cavity => {
                if doc.signal.as_ref().is_some_and(|s| &s.node == name) {
                    signal = Some(SignalInjection {
                        stage: stages.len(),
                        amplitude: doc.signal.as_ref().map_or(0.0, |s| s.amplitude),
                    });
                }
                stages.push(Stage::cavity(
                    name.clone(),
                    CavitySpec {
                        length: decl.get("length"),
                        r_in: decl.get("r_in"),
                        r_end: decl.get("r_end"),
                        round_trip_loss: decl.get("loss_rt"),
                        detuning: decl.get("detuning"),
                    },
                ));
            }
            ComponentKind::Loss => stages.push(Stage::loss(name.clone(), decl.get("eta")).expect("eta checked")),
            ComponentKind::Homodyne => {
                homodyne = HomodyneSpec {
                    angle: decl.get("angle"),
                    quantum_efficiency: decl.get("qe"),
                }
            }
        }
    }
    Ok(Pipeline {
        source,
        stages,
        homodyne,
        signal,
    })
}

/// `parse` followed by `validate`.
pub fn load(text: &str) -> Result<Pipeline, Diagnostics> {
    validate(&parse(text)?)
}

/// Canonical text form: one declaration per line in document order, keys
/// sorted, values in SI with the shortest round-tripping decimal.
pub fn serialize(doc: &NetlistDocument) -> String {
    let mut out = String::new();
    for decl in &doc.components {
        out.push_str(decl.kind.keyword());
        out.push(' ');
        out.push_str(&decl.name);
        for (key, value) in &decl.attributes {
            let suffix = decl.kind.attribute(key).map_or("", |a| a.dimension.si_suffix());
            out.push_str(&format!(" {key}={value}{suffix}"));
        }
        out.push('\n');
    }
    if !doc.chain.is_empty() {
        out.push_str("chain ");
        out.push_str(&doc.chain.join(" -> "));
        out.push('\n');
    }
    if let Some(signal) = &doc.signal {
        out.push_str(&format!("signal node={} amplitude={}\n", signal.node, signal.amplitude));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REFERENCE: &str = include_str!("../data/reference.net");

    fn errors(text: &str) -> Vec<ParseDiagnostic> {
        parse(text).expect_err("expected diagnostics").errors().cloned().collect()
    }

    #[test]
    fn cavity_declaration_is_normalized_to_si() {
        let doc = parse(
            "cavity fc length=1.21m r_in=0.90 r_end=0.9992 detuning=-10MHz\n\
             homodyne h angle=0 qe=1\nchain fc -> h\n",
        )
        .unwrap();
        let fc = doc.component("fc").unwrap();
        assert_eq!(fc.kind, ComponentKind::Cavity);
        assert_eq!(fc.attributes["detuning"], -1.0e7);
        assert_eq!(fc.attributes["length"], 1.21);
        assert_eq!(fc.attributes["r_in"], 0.90);
    }

    #[test]
    fn unit_suffixes() {
        assert_eq!(parse_value("2.5kHz", Some(Dimension::Frequency)), Ok(2500.0));
        assert_eq!(parse_value("1GHz", Some(Dimension::Frequency)), Ok(1e9));
        assert_eq!(parse_value("1210mm", Some(Dimension::Length)), Ok(1.21));
        assert_eq!(parse_value("0.00000121e6m", Some(Dimension::Length)), Ok(1.21));
        assert_eq!(parse_value("1e-3", None), Ok(1e-3));
        assert_eq!(parse_value("90deg", Some(Dimension::Angle)), Ok(PI / 2.0));
        assert!(parse_value("3dB", Some(Dimension::Fraction)).unwrap_err().contains("plain fractions"));
        assert!(parse_value("10MHz", Some(Dimension::Length)).is_err());
        assert!(parse_value("0.5m", Some(Dimension::Fraction)).is_err());
        assert!(parse_value("1.2.3", None).is_err());
        assert!(parse_value("e5", None).is_err());
        assert!(parse_value("", None).is_err());
        assert!(parse_value("1e999", None).is_err());
    }

    #[test]
    fn empty_input_lacks_a_chain() {
        let errs = errors("");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("missing `chain`"));
        assert_eq!(errs[0].line, 1);
        assert!(errors("# just a comment\n\n").iter().any(|d| d.message.contains("missing `chain`")));
    }

    #[test]
    fn bad_cavity_reports_range_and_missing_attributes() {
        let errs = errors("cavity fc r_in=1.2");
        let on_line: Vec<_> = errs.iter().filter(|d| d.line == 1).collect();
        assert!(on_line.iter().any(|d| d.message.contains("out of range") && d.column == 11));
        assert!(on_line
            .iter()
            .any(|d| d.message.contains("missing required attributes: length, r_end, detuning")));
    }

    #[test]
    fn unknown_kind_and_attribute() {
        let errs = errors("mirror m r=0.5\nloss l eta=0.5 gain=2\nhomodyne h angle=0 qe=1\nchain l -> h\n");
        assert!(errs.iter().any(|d| d.line == 1 && d.column == 1 && d.message.contains("unknown component kind")));
        assert!(errs.iter().any(|d| d.line == 2 && d.column == 16 && d.message.contains("unknown attribute `gain`")));
    }

    #[test]
    fn chain_topology_errors() {
        let base = "loss a eta=1\nloss b eta=1\nhomodyne h angle=0 qe=1\nopa o pump_x=0.1 bandwidth=1MHz escape=1\n";
        let dangling = errors(&format!("{base}chain a -> nowhere -> h\n"));
        assert!(dangling.iter().any(|d| d.line == 5 && d.column == 12 && d.message.contains("undeclared")));

        let dup = errors(&format!("{base}loss a eta=0.5\nchain a -> h\n"));
        assert!(dup.iter().any(|d| d.line == 5 && d.message.contains("duplicate component name `a`")));

        assert!(errors(&format!("{base}chain a -> b\n"))
            .iter()
            .any(|d| d.message.contains("no homodyne")));
        assert!(errors(&format!("{base}chain a -> h -> b\n"))
            .iter()
            .any(|d| d.message.contains("must be the last")));
        assert!(errors(&format!("{base}chain a -> o -> h\n"))
            .iter()
            .any(|d| d.message.contains("first chain entry")));
        assert!(errors(&format!("{base}chain a -> h\nchain b -> h\n"))
            .iter()
            .any(|d| d.line == 6 && d.message.contains("second `chain`")));
        assert!(errors(&format!("{base}chain a -> -> h\n")).iter().any(|d| d.message.contains("empty chain entry")));
    }

    #[test]
    fn signal_must_target_a_chained_cavity() {
        let base = "loss a eta=1\nhomodyne h angle=0 qe=1\nchain a -> h\n";
        assert!(errors(&format!("{base}signal node=a amplitude=1\n"))
            .iter()
            .any(|d| d.line == 4 && d.message.contains("must be a cavity")));
        assert!(errors(&format!("{base}signal node=zz amplitude=1\n"))
            .iter()
            .any(|d| d.message.contains("not in the chain")));
        assert!(errors(&format!("{base}signal amplitude=1\n")).iter().any(|d| d.message.contains("node=NAME")));
        assert!(errors(&format!("{base}signal node=a amplitude=-1\n")).iter().any(|d| d.message.contains(">= 0")));
    }

    #[test]
    fn unused_components_only_warn() {
        let doc = parse("loss a eta=1\nloss spare eta=0.5\nhomodyne h angle=0 qe=1\nchain a -> h\n").unwrap();
        let warnings = lint(&doc);
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].line, 2);
        assert!(validate(&doc).is_ok());
    }

    #[test]
    fn reference_netlist_validates() {
        let doc = parse(REFERENCE).unwrap();
        assert!(lint(&doc).is_empty());
        let pipeline = validate(&doc).unwrap();
        assert_eq!(pipeline.stage_count(), 8);
        let names: Vec<_> = pipeline.stages.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["isolator", "fc_modematch", "fc", "src_modematch", "src", "bhd_modematch"]);
        assert_eq!(pipeline.signal.unwrap().stage, 4);
        assert!(pipeline.opa().is_some());
        assert_eq!(pipeline.homodyne.quantum_efficiency, 0.93);
    }

    #[test]
    fn programmatic_documents_are_validated_too() {
        let doc = NetlistDocument {
            components: vec![
                Declaration::new(ComponentKind::Loss, "fc").with("eta", 0.9),
                Declaration::new(ComponentKind::Loss, "fc").with("eta", 1.5),
                Declaration::new(ComponentKind::Homodyne, "h").with("angle", 0.0).with("qe", 1.0),
            ],
            chain: vec!["fc".into(), "h".into()],
            ..Default::default()
        };
        let errs = validate(&doc).unwrap_err();
        assert!(errs.errors().any(|d| d.message.contains("duplicate")));
        assert!(errs.errors().any(|d| d.message.contains("out of range")));
    }

    #[test]
    fn serializer_is_canonical() {
        let doc = parse(
            "cavity fc r_in=0.9 detuning=-10MHz length=0.00000121e6m r_end=0.9992  # comment\n\
             homodyne h qe=1 angle=0\nchain fc->h\n",
        )
        .unwrap();
        let text = serialize(&doc);
        assert_eq!(
            text,
            "cavity fc detuning=-10000000Hz length=1.21m r_end=0.9992 r_in=0.9\n\
             homodyne h angle=0 qe=1\nchain fc -> h\n"
        );
        assert_eq!(parse(&text).unwrap(), doc);
        assert_eq!(serialize(&parse(&text).unwrap()), text);
    }

    #[test]
    fn reference_round_trips() {
        let doc = parse(REFERENCE).unwrap();
        assert_eq!(parse(&serialize(&doc)).unwrap(), doc);
    }

    #[test]
    fn parse_is_total_on_garbage() {
        for text in ["\u{0}\u{1}==", "chain", "chain ->", "opa", "signal", "cavity = =", "loss l eta=", "é è ->", "loss l eta=1e"] {
            let _ = parse(text);
        }
    }

    pub(crate) fn arb_document() -> impl Strategy<Value = NetlistDocument> {
        let frac = 0.0..=1.0f64;
        let cavity = (0.01..10.0f64, frac.clone(), frac.clone(), proptest::option::of(frac.clone()), -1e9..1e9f64)
            .prop_map(|(l, a, b, loss, d)| {
                let decl = Declaration::new(ComponentKind::Cavity, "")
                    .with("length", l)
                    .with("r_in", a)
                    .with("r_end", b)
                    .with("detuning", d);
                match loss {
                    Some(x) => decl.with("loss_rt", x),
                    None => decl,
                }
            });
        let loss = frac.clone().prop_map(|e| Declaration::new(ComponentKind::Loss, "").with("eta", e));
        let middle = proptest::collection::vec(prop_oneof![cavity, loss], 0..6);
        let opa = proptest::option::of((0.0..0.999f64, 1e3..1e9f64, frac.clone()));
        (opa, middle, -7.0..7.0f64, frac, proptest::option::of(0.0..100.0f64)).prop_map(
            |(opa, middle, angle, qe, amp)| {
                let mut components = Vec::new();
                if let Some((x, bw, esc)) = opa {
                    components.push(
                        Declaration::new(ComponentKind::Opa, "src0")
                            .with("pump_x", x)
                            .with("bandwidth", bw)
                            .with("escape", esc),
                    );
                }
                for (i, mut d) in middle.into_iter().enumerate() {
                    d.name = format!("{}_{i}", d.kind);
                    components.push(d);
                }
                components.push(
                    Declaration::new(ComponentKind::Homodyne, "det")
                        .with("angle", angle)
                        .with("qe", qe),
                );
                let chain = components.iter().map(|c| c.name.clone()).collect();
                let signal = components
                    .iter()
                    .find(|c| c.kind == ComponentKind::Cavity)
                    .zip(amp)
                    .map(|(c, a)| SignalDeclaration {
                        node: c.name.clone(),
                        amplitude: a,
                        origin: Origin::default(),
                    });
                NetlistDocument {
                    components,
                    chain,
                    signal,
                    ..Default::default()
                }
            },
        )
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(doc in arb_document()) {
            prop_assert!(validate(&doc).is_ok());
            let text = serialize(&doc);
            let reparsed = parse(&text).map_err(|d| TestCaseError::fail(d.to_string()))?;
            prop_assert_eq!(&reparsed, &doc);
            prop_assert_eq!(serialize(&reparsed), text);
        }

        #[test]
        fn parse_never_panics(text in "(?s).{0,200}") {
            if let Err(d) = parse(&text) {
                prop_assert!(d.errors().count() > 0);
                prop_assert!(d.0.iter().all(|x| x.line >= 1));
            }
        }

        #[test]
        fn parse_never_panics_on_near_miss_lines(
            lines in proptest::collection::vec("(opa|cavity|loss|homodyne|chain|signal|#)? ?[a-z_]{0,4}( [a-z_]{1,8}=[-0-9.eE]{0,6}(MHz|m|mm|deg|dB|x)?| ->){0,4}", 0..8)
        ) {
            let _ = parse(&lines.join("\n"));
        }
    }
}
