//! Reading networks from GML (a practical subset) and plain edge lists, with
//! a canonical GML writer and a JSON dump.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Digraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: unbalanced bracket")]
    MalformedNesting { line: usize },
    #[error("line {line}: unterminated string")]
    UnterminatedString { line: usize },
    #[error("line {line}: expected {expected}, found {found}")]
    Unexpected {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: no `graph [ ... ]` block")]
    MissingGraph { line: usize },
    #[error("line {line}: node without an integer id")]
    MissingId { line: usize },
    #[error("line {line}: duplicate node id {id}")]
    DuplicateId { line: usize, id: i64 },
    #[error("line {line}: edge references unknown node {id}")]
    UnknownNode { line: usize, id: String },
    #[error("line {line}: edge without source or target")]
    IncompleteEdge { line: usize },
    #[error("line {line}: invalid token '{token}'")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: graph has no nodes")]
    EmptyGraph { line: usize },
}

/// A digraph plus the external names of its nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    pub graph: Digraph,
    pub labels: Vec<String>,
    /// `false` when read from an undirected file; the digraph then holds both
    /// directions of every edge.
    pub directed: bool,
    pub source: SourceMeta,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMeta {
    pub file: Option<String>,
    pub declared_nodes: usize,
    pub declared_edges: usize,
    /// Declared edges that collapsed onto an existing arc.
    pub duplicate_edges: usize,
}

impl LabeledGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Edges as written to files: every arc for directed graphs, one
    /// `s <= t` pair per symmetric edge otherwise.
    pub fn file_edges(&self) -> Vec<(usize, usize)> {
        self.graph
            .edges()
            .filter(|&(s, t)| self.directed || s <= t)
            .collect()
    }

    /// Keep only the listed nodes, in the given order.
    pub fn restrict(&self, keep: &[usize]) -> LabeledGraph {
        let mut new_id = vec![usize::MAX; self.node_count()];
        for (k, &v) in keep.iter().enumerate() {
            new_id[v] = k;
        }
        let edges: Vec<(usize, usize)> = self
            .graph
            .edges()
            .filter(|&(s, t)| new_id[s] != usize::MAX && new_id[t] != usize::MAX)
            .map(|(s, t)| (new_id[s], new_id[t]))
            .collect();
        LabeledGraph {
            graph: Digraph::from_edges(keep.len(), edges).expect("remapped ids are in range"),
            labels: keep.iter().map(|&v| self.labels[v].clone()).collect(),
            directed: self.directed,
            source: self.source.clone(),
        }
    }

    /// Remove nodes with no incident edge (a self-loop counts as incident).
    pub fn drop_isolates(&self) -> LabeledGraph {
        let mut touched = vec![false; self.node_count()];
        for (s, t) in self.graph.edges() {
            touched[s] = true;
            touched[t] = true;
        }
        let keep: Vec<usize> = (0..self.node_count()).filter(|&v| touched[v]).collect();
        self.restrict(&keep)
    }

    /// Largest weakly connected component; ties go to the one with the
    /// smallest node id.
    pub fn largest_component(&self) -> LabeledGraph {
        let comps = weak_components(&self.graph);
        let best = comps
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
            .cloned()
            .unwrap_or_default();
        self.restrict(&best)
    }

    /// Undirected view: every arc gets its reverse.
    pub fn symmetrized(&self) -> LabeledGraph {
        let arcs: Vec<(usize, usize)> = self.graph.edges().flat_map(|(s, t)| [(s, t), (t, s)]).collect();
        LabeledGraph {
            graph: Digraph::from_edges(self.node_count(), arcs).expect("same node set"),
            labels: self.labels.clone(),
            directed: false,
            source: self.source.clone(),
        }
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.node_count(),
            directed: self.directed,
            edges: self.file_edges().into_iter().map(|(s, t)| [s, t]).collect(),
            labels: self.labels.iter().cloned().enumerate().collect(),
        }
    }
}

/// Canonical JSON form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub directed: bool,
    pub edges: Vec<[usize; 2]>,
    pub labels: BTreeMap<usize, String>,
}

/// Weakly connected components, each sorted, ordered by smallest member.
pub fn weak_components(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut undirected = vec![Vec::new(); n];
    for (s, t) in g.edges() {
        undirected[s].push(t);
        undirected[t].push(s);
    }
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &undirected[v] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Key(String),
    Num(String),
    Str(String),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '[' => {
                chars.next();
                out.push((Token::Open, line));
            }
            ']' => {
                chars.next();
                out.push((Token::Close, line));
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            s.push(c);
                        }
                        None => return Err(ParseError::UnterminatedString { line: start }),
                    }
                }
                out.push((Token::Str(decode_entities(&s)), start));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '[' || c == ']' || c == '"' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                let first = word.chars().next().unwrap_or(' ');
                if first.is_ascii_alphabetic() || first == '_' {
                    out.push((Token::Key(word), line));
                } else if word.parse::<f64>().is_ok() {
                    out.push((Token::Num(word), line));
                } else {
                    return Err(ParseError::InvalidToken { line, token: word });
                }
            }
        }
    }
    Ok(out)
}

fn decode_entities(s: &str) -> String {
    s.replace("&quot;", "\"").replace("&amp;", "&")
}

fn encode_entities(s: &str) -> String {
    s.replace('&', "&amp;").replace('"', "&quot;")
}

#[derive(Debug, Clone)]
enum Value {
    Num(String),
    Str(String),
    List(Vec<Entry>),
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: Value,
    line: usize,
}

fn parse_list(tokens: &[(Token, usize)], pos: &mut usize, nested: bool) -> Result<Vec<Entry>, ParseError> {
    let mut entries = Vec::new();
    loop {
        let Some((tok, line)) = tokens.get(*pos) else {
            if nested {
                let line = tokens.last().map_or(1, |t| t.1);
                return Err(ParseError::MalformedNesting { line });
            }
            return Ok(entries);
        };
        let line = *line;
        *pos += 1;
        let key = match tok {
            Token::Close if nested => return Ok(entries),
            Token::Close | Token::Open => return Err(ParseError::MalformedNesting { line }),
            Token::Key(k) => k.clone(),
            other => {
                return Err(ParseError::Unexpected {
                    line,
                    expected: "key",
                    found: format!("{other:?}"),
                })
            }
        };
        let Some((tok, _)) = tokens.get(*pos) else {
            return Err(ParseError::Unexpected {
                line,
                expected: "value",
                found: "end of input".into(),
            });
        };
        *pos += 1;
        let value = match tok {
            Token::Num(n) => Value::Num(n.clone()),
            Token::Str(s) => Value::Str(s.clone()),
            Token::Open => Value::List(parse_list(tokens, pos, true)?),
            Token::Close => return Err(ParseError::MalformedNesting { line }),
            Token::Key(k) => {
                return Err(ParseError::Unexpected {
                    line,
                    expected: "value",
                    found: k.clone(),
                })
            }
        };
        entries.push(Entry { key, value, line });
    }
}

fn int_field(list: &[Entry], key: &str) -> Option<i64> {
    list.iter().find(|e| e.key == key).and_then(|e| match &e.value {
        Value::Num(n) => n.parse::<i64>().ok(),
        Value::Str(s) => s.trim().parse::<i64>().ok(),
        Value::List(_) => None,
    })
}

fn label_field(list: &[Entry]) -> Option<String> {
    list.iter().find(|e| e.key == "label").map(|e| match &e.value {
        Value::Num(n) => n.clone(),
        Value::Str(s) => s.clone(),
        Value::List(_) => String::new(),
    })
}

/// Make labels unique by appending `#2`, `#3`, ... to repeats.
fn dedup_labels(labels: &mut [String]) {
    let mut taken: HashSet<String> = labels.iter().cloned().collect();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for label in labels.iter_mut() {
        let c = counts.entry(label.clone()).or_default();
        *c += 1;
        if *c > 1 {
            let mut k = *c;
            let mut candidate = format!("{label}#{k}");
            while taken.contains(&candidate) {
                k += 1;
                candidate = format!("{label}#{k}");
            }
            log::warn!("duplicate label '{label}' renamed to '{candidate}'");
            taken.insert(candidate.clone());
            *label = candidate;
        }
    }
}

fn build(
    n: usize,
    edges: Vec<(usize, usize)>,
    directed: bool,
    mut labels: Vec<String>,
    file: Option<String>,
) -> LabeledGraph {
    let declared_edges = edges.len();
    let arcs: Vec<(usize, usize)> = if directed {
        edges
    } else {
        edges.iter().flat_map(|&(s, t)| [(s, t), (t, s)]).collect()
    };
    let graph = Digraph::from_edges(n, arcs).expect("edge ids were resolved");
    let distinct = if directed {
        graph.edge_count()
    } else {
        graph.edges().filter(|(s, t)| s <= t).count()
    };
    dedup_labels(&mut labels);
    LabeledGraph {
        graph,
        labels,
        directed,
        source: SourceMeta {
            file,
            declared_nodes: n,
            declared_edges,
            duplicate_edges: declared_edges - distinct,
        },
    }
}

/// Parse the GML subset `graph [ directed 0|1 node [ id N label "..." ] ...
/// edge [ source N target N ] ... ]`. Unknown keys at any depth are skipped.
pub fn parse_gml(bytes: &[u8]) -> Result<LabeledGraph, ParseError> {
    let text = String::from_utf8_lossy(bytes);
    let tokens = tokenize(&text)?;
    let mut pos = 0;
    let top = parse_list(&tokens, &mut pos, false)?;
    let last_line = tokens.last().map_or(1, |t| t.1);
    let (graph_line, body) = top
        .iter()
        .find_map(|e| match (&e.key[..], &e.value) {
            ("graph", Value::List(body)) => Some((e.line, body)),
            _ => None,
        })
        .ok_or(ParseError::MissingGraph { line: last_line })?;
    let directed = int_field(body, "directed").unwrap_or(0) != 0;

    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut labels = Vec::new();
    for e in body.iter().filter(|e| e.key == "node") {
        let Value::List(fields) = &e.value else {
            return Err(ParseError::MissingId { line: e.line });
        };
        let id = int_field(fields, "id").ok_or(ParseError::MissingId { line: e.line })?;
        if index.insert(id, labels.len()).is_some() {
            return Err(ParseError::DuplicateId { line: e.line, id });
        }
        labels.push(label_field(fields).unwrap_or_else(|| id.to_string()));
    }
    if labels.is_empty() {
        return Err(ParseError::EmptyGraph { line: graph_line });
    }

    let mut edges = Vec::new();
    for e in body.iter().filter(|e| e.key == "edge") {
        let Value::List(fields) = &e.value else {
            return Err(ParseError::IncompleteEdge { line: e.line });
        };
        let line = fields.first().map_or(e.line, |f| f.line);
        let endpoint = |key: &str| -> Result<usize, ParseError> {
            let raw = int_field(fields, key).ok_or(ParseError::IncompleteEdge { line })?;
            index.get(&raw).copied().ok_or(ParseError::UnknownNode {
                line,
                id: raw.to_string(),
            })
        };
        edges.push((endpoint("source")?, endpoint("target")?));
    }
    Ok(build(labels.len(), edges, directed, labels, None))
}

/// Parse `src dst` / `src,dst` lines with integer node tokens. `#` and `%`
/// start comments; a trailing numeric weight column is ignored. Nodes are
/// numbered in order of first appearance and labelled by their token.
pub fn parse_edge_list(bytes: &[u8], directed: bool) -> Result<LabeledGraph, ParseError> {
    let text = String::from_utf8_lossy(bytes);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut last_line = 1;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let content = raw.split(['#', '%']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(ParseError::InvalidToken {
                line,
                token: content.to_string(),
            });
        }
        if let Some(w) = tokens.get(2) {
            if w.parse::<f64>().is_err() {
                return Err(ParseError::InvalidToken {
                    line,
                    token: w.to_string(),
                });
            }
        }
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&tokens[..2]) {
            if tok.parse::<i64>().is_err() {
                return Err(ParseError::InvalidToken {
                    line,
                    token: tok.to_string(),
                });
            }
            let next = labels.len();
            *slot = *index.entry(tok.to_string()).or_insert_with(|| {
                labels.push(tok.to_string());
                next
            });
        }
        edges.push((ids[0], ids[1]));
    }
    if labels.is_empty() {
        return Err(ParseError::EmptyGraph { line: last_line });
    }
    Ok(build(labels.len(), edges, directed, labels, None))
}

/// Canonical GML: `directed` first, nodes in id order with their labels,
/// edges in sorted order (one per symmetric pair when undirected).
pub fn to_gml(g: &LabeledGraph) -> String {
    let mut out = String::from("graph [\n");
    let _ = writeln!(out, "  directed {}", u8::from(g.directed));
    for (id, label) in g.labels.iter().enumerate() {
        let _ = writeln!(out, "  node [\n    id {id}\n    label \"{}\"\n  ]", encode_entities(label));
    }
    for (s, t) in g.file_edges() {
        let _ = writeln!(out, "  edge [\n    source {s}\n    target {t}\n  ]");
    }
    out.push_str("]\n");
    out
}
