use std::collections::BTreeMap;
use std::fmt::Write;

use crate::io::sig9_str;

use super::{domains, Edge, Level, LevelDiagram, LevelError};

/// Species carrying the most edges (earliest in sort order on ties).
fn cluster_species(diagram: &LevelDiagram) -> Option<crate::spin::Species> {
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &diagram.edges {
        *count.entry(e.species.as_str()).or_default() += 1;
    }
    let max = *count.values().max()?;
    count
        .into_iter()
        .find(|&(_, c)| c == max)
        .map(|(s, _)| s.into())
}

fn quote(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graph-description text of the diagram. Levels are grouped into
/// clusters linked by the most frequent edge species (the two manifolds of
/// a heteronuclear system) and listed by descending energy. `labels`, keyed
/// by diagram level id, adds qubit labels to the nodes.
pub fn export_dot(diagram: &LevelDiagram, labels: Option<&BTreeMap<usize, String>>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph levels {{");
    let _ = writeln!(out, "  rankdir=BT;");
    let _ = writeln!(out, "  node [shape=box];");
    if let Some(n) = diagram.n_levels_expected {
        let _ = writeln!(out, "  // expected_levels: {n}");
    }
    if !diagram.unassigned.is_empty() {
        let ids: Vec<String> = diagram.unassigned.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "  // unassigned: {}", ids.join(" "));
    }
    let groups = match cluster_species(diagram) {
        Some(s) => domains(diagram, &s),
        None => diagram.levels.iter().map(|l| vec![l.id]).collect(),
    };
    for (k, group) in groups.iter().enumerate() {
        let mut members = group.clone();
        members.sort_by(|&a, &b| {
            diagram
                .energy(b)
                .total_cmp(&diagram.energy(a))
                .then(a.cmp(&b))
        });
        let _ = writeln!(out, "  subgraph cluster_{k} {{");
        for l in members {
            let level = &diagram.levels[l];
            let _ = write!(
                out,
                "    L{} [energy=\"{}\", component={}",
                level.id,
                sig9_str(level.energy_hz),
                level.component
            );
            if let Some(text) = labels.and_then(|m| m.get(&l)) {
                let _ = write!(out, ", label=\"{}\"", quote(text));
            }
            let _ = writeln!(out, "];");
        }
        let _ = writeln!(out, "  }}");
    }
    for e in &diagram.edges {
        let _ = writeln!(
            out,
            "  L{} -> L{} [transition={}, freq=\"{}\", species=\"{}\"];",
            e.lower,
            e.upper,
            e.transition_id,
            sig9_str(e.freq_hz),
            quote(e.species.as_str())
        );
    }
    let _ = writeln!(out, "}}");
    out
}

fn attrs(text: &str) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    let mut rest = text;
    while let Some(eq) = rest.find('=') {
        let key = rest[..eq].trim().trim_start_matches(',').trim().to_string();
        let after = &rest[eq + 1..];
        let (value, tail) = if let Some(stripped) = after.strip_prefix('"') {
            let mut end = None;
            let mut escaped = false;
            for (k, c) in stripped.char_indices() {
                match c {
                    '\\' if !escaped => escaped = true,
                    '"' if !escaped => {
                        end = Some(k);
                        break;
                    }
                    _ => escaped = false,
                }
            }
            let end = end.unwrap_or(stripped.len());
            let v = stripped[..end].replace("\\\"", "\"").replace("\\\\", "\\");
            (v, &stripped[(end + 1).min(stripped.len())..])
        } else {
            let end = after.find(',').unwrap_or(after.len());
            (after[..end].trim().to_string(), &after[end..])
        };
        map.insert(key, value);
        rest = tail;
    }
    map
}

fn bad(line: usize, what: &str) -> LevelError {
    LevelError::Parse(format!("line {line}: {what}"))
}

fn level_id(token: &str, line: usize) -> Result<usize, LevelError> {
    token
        .trim()
        .strip_prefix('L')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(line, &format!("bad node name `{}`", token.trim())))
}

/// Reads back text produced by [`export_dot`].
pub fn parse_dot(text: &str) -> Result<LevelDiagram, LevelError> {
    let mut levels: BTreeMap<usize, Level> = BTreeMap::new();
    let mut edges = Vec::new();
    let mut unassigned = Vec::new();
    let mut expected = None;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("// unassigned:") {
            for t in rest.split_whitespace() {
                unassigned.push(t.parse().map_err(|_| bad(line_no, "bad transition id"))?);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("// expected_levels:") {
            expected = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| bad(line_no, "bad level count"))?,
            );
            continue;
        }
        if !line.starts_with('L') {
            continue;
        }
        let open = line
            .find('[')
            .ok_or_else(|| bad(line_no, "missing attributes"))?;
        let close = line
            .rfind(']')
            .ok_or_else(|| bad(line_no, "unterminated attributes"))?;
        let a = attrs(&line[open + 1..close]);
        let head = &line[..open];
        let num = |key: &str| -> Result<f64, LevelError> {
            a.get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(line_no, &format!("missing or bad `{key}`")))
        };
        if let Some((from, to)) = head.split_once("->") {
            edges.push(Edge {
                lower: level_id(from, line_no)?,
                upper: level_id(to, line_no)?,
                transition_id: num("transition")? as usize,
                freq_hz: num("freq")?,
                species: a
                    .get("species")
                    .ok_or_else(|| bad(line_no, "missing `species`"))?
                    .as_str()
                    .into(),
            });
        } else {
            let id = level_id(head, line_no)?;
            levels.insert(
                id,
                Level {
                    id,
                    energy_hz: num("energy")?,
                    component: num("component")? as usize,
                },
            );
        }
    }
    let levels: Vec<Level> = levels.into_values().collect();
    if levels.iter().enumerate().any(|(k, l)| l.id != k) {
        return Err(LevelError::Parse("level ids are not contiguous".into()));
    }
    if edges
        .iter()
        .any(|e| e.upper >= levels.len() || e.lower >= levels.len())
    {
        return Err(LevelError::Parse(
            "edge refers to an undeclared level".into(),
        ));
    }
    edges.sort_by_key(|e| e.transition_id);
    let n_components = levels.iter().map(|l| l.component + 1).max().unwrap_or(0);
    Ok(LevelDiagram {
        levels,
        edges,
        unassigned,
        n_components,
        n_levels_expected: expected,
    })
}
