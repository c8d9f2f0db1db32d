//! CPLEX LP-format text for [`LpModel`]s.
//!
//! The writer emits every variable bound explicitly and lists integer and
//! binary columns in `General`/`Binary` sections. The reader accepts the same
//! subset: a `Minimize` objective (with an optional constant term), named or
//! unnamed rows, `Bounds`, `General`, `Binary` and `End`.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{LpModel, Row, Sense, VarKind};

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("only minimization objectives are supported")]
    Maximize,
}

const TERMS_PER_LINE: usize = 8;

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if v.abs() >= 1e-4 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    let mut count = 0;
    for (a, name) in terms {
        if count > 0 && count % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        if first && a >= 0.0 {
            let _ = write!(out, " {} {}", num(a), name);
        } else {
            let _ = write!(out, " {} {} {}", sign, num(a.abs()), name);
        }
        first = false;
        count += 1;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Renders `model` as LP-format text. Header lines become `\` comments.
pub fn write_lp(model: &LpModel, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "\\ {h}");
    }
    out.push_str("Minimize\n obj:");
    let terms = model
        .cost
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (c, model.names[j].clone()));
    let mut obj = String::new();
    write_terms(&mut obj, terms);
    if model.offset != 0.0 {
        if obj == " 0" {
            obj.clear();
            let _ = write!(obj, " {}", num(model.offset));
        } else {
            let sign = if model.offset < 0.0 { "-" } else { "+" };
            let _ = write!(obj, " {} {}", sign, num(model.offset.abs()));
        }
    }
    out.push_str(&obj);
    out.push_str("\nSubject To\n");
    for (i, row) in model.rows.iter().enumerate() {
        let name = model
            .row_names
            .get(i)
            .filter(|n| !n.is_empty())
            .cloned()
            .unwrap_or_else(|| format!("r{i}"));
        let _ = write!(out, " {name}:");
        write_terms(&mut out, row.coefs.iter().map(|&(j, a)| (a, model.names[j].clone())));
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for j in 0..model.num_vars() {
        let (lo, hi) = (model.lower[j], model.upper[j]);
        let name = &model.names[j];
        if model.kinds[j] == VarKind::Binary && lo == 0.0 && hi == 1.0 {
            let _ = writeln!(out, " 0 <= {name} <= 1");
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if lo == hi {
            let _ = writeln!(out, " {name} = {}", num(lo));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(lo), num(hi));
        }
    }
    for (kind, title) in [(VarKind::Integer, "General"), (VarKind::Binary, "Binary")] {
        let names: Vec<&str> = (0..model.num_vars())
            .filter(|&j| model.kinds[j] == kind)
            .map(|j| model.names[j].as_str())
            .collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    General,
    Binary,
    Done,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "maximize" | "maximise" | "max" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "general" | "generals" | "gen" | "integer" | "integers" => Some(Section::General),
        "binary" | "binaries" | "bin" => Some(Section::Binary),
        "end" => Some(Section::Done),
        _ => None,
    }
}

struct Reader {
    model: LpModel,
    index: HashMap<String, usize>,
}

impl Reader {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.model.add_var(name, 0.0, f64::INFINITY, 0.0);
        self.index.insert(name.to_string(), j);
        j
    }
}

fn parse_value(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

fn tokenize(s: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    let flush = |cur: &mut String, toks: &mut Vec<String>| {
        if !cur.is_empty() {
            toks.push(std::mem::take(cur));
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            flush(&mut cur, &mut toks);
        } else if c == '<' || c == '>' || c == '=' {
            flush(&mut cur, &mut toks);
            let mut op = c.to_string();
            if i + 1 < chars.len() && matches!(chars[i + 1], '<' | '>' | '=') {
                op.push(chars[i + 1]);
                i += 1;
            }
            toks.push(op);
        } else if c == '+' || c == '-' {
            let exponent = (cur.ends_with('e') || cur.ends_with('E'))
                && cur[..cur.len() - 1].parse::<f64>().is_ok();
            if exponent {
                cur.push(c);
            } else {
                flush(&mut cur, &mut toks);
                toks.push(c.to_string());
            }
        } else {
            cur.push(c);
        }
        i += 1;
    }
    flush(&mut cur, &mut toks);
    toks
}

/// Parses `sign? number? name` terms until a comparison operator or the end.
/// Returns the terms, a constant, and the index of the first unread token.
fn parse_expr(
    reader: &mut Reader,
    toks: &[String],
    line: usize,
) -> Result<(Vec<(usize, f64)>, f64, usize), FormatError> {
    let mut terms: Vec<(usize, f64)> = Vec::new();
    let mut constant = 0.0;
    let mut k = 0;
    while k < toks.len() {
        let t = toks[k].as_str();
        if matches!(t, "<=" | ">=" | "=" | "=<" | "=>" | "<" | ">") {
            break;
        }
        let mut sign = 1.0;
        let mut seen_sign = false;
        while k < toks.len() && (toks[k] == "+" || toks[k] == "-") {
            if toks[k] == "-" {
                sign = -sign;
            }
            seen_sign = true;
            k += 1;
        }
        if k >= toks.len() {
            return Err(FormatError::Syntax { line, msg: "dangling sign".into() });
        }
        let _ = seen_sign;
        let mut coef = 1.0;
        if let Some(v) = parse_value(&toks[k]) {
            coef = v;
            k += 1;
            let next_is_name = k < toks.len()
                && !matches!(toks[k].as_str(), "+" | "-" | "<=" | ">=" | "=" | "=<" | "=>" | "<" | ">")
                && parse_value(&toks[k]).is_none();
            if !next_is_name {
                constant += sign * coef;
                continue;
            }
        }
        let name = &toks[k];
        if parse_value(name).is_some() {
            return Err(FormatError::Syntax { line, msg: format!("expected variable, got `{name}`") });
        }
        let j = reader.var(name);
        match terms.iter_mut().find(|(jj, _)| *jj == j) {
            Some(entry) => entry.1 += sign * coef,
            None => terms.push((j, sign * coef)),
        }
        k += 1;
    }
    Ok((terms, constant, k))
}

/// Parses LP-format text produced by [`write_lp`] (or a compatible writer).
pub fn read_lp(text: &str) -> Result<LpModel, FormatError> {
    let mut reader = Reader {
        model: LpModel::new(),
        index: HashMap::new(),
    };
    let mut section = Section::Preamble;
    // (start line, text) of logical statements in the current section
    let mut stmt: Option<(usize, String)> = None;
    let mut statements: Vec<(Section, usize, String)> = Vec::new();

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(next) = section_of(trimmed) {
            if let Some((l, s)) = stmt.take() {
                statements.push((section, l, s));
            }
            let lower = trimmed.to_ascii_lowercase();
            if lower.starts_with("max") {
                return Err(FormatError::Maximize);
            }
            section = next;
            continue;
        }
        match section {
            Section::Objective | Section::Constraints => {
                let starts_new = trimmed.contains(':') || stmt.is_none();
                if starts_new && section == Section::Constraints {
                    if let Some((l, s)) = stmt.take() {
                        statements.push((section, l, s));
                    }
                    stmt = Some((line_no, trimmed.to_string()));
                } else if let Some((_, s)) = stmt.as_mut() {
                    s.push(' ');
                    s.push_str(trimmed);
                } else {
                    stmt = Some((line_no, trimmed.to_string()));
                }
            }
            Section::Preamble => {
                return Err(FormatError::Syntax { line: line_no, msg: "content before objective".into() })
            }
            Section::Done => {}
            _ => statements.push((section, line_no, trimmed.to_string())),
        }
    }
    if let Some((l, s)) = stmt.take() {
        statements.push((section, l, s));
    }

    // the writer lists every column under Bounds in model order
    let rank = |s: &Section| match s {
        Section::Bounds => 0,
        Section::Objective => 1,
        Section::Constraints => 2,
        _ => 3,
    };
    statements.sort_by_key(|(s, _, _)| rank(s));
    for (sec, line, text) in statements {
        match sec {
            Section::Objective => {
                let body = match text.find(':') {
                    Some(p) => &text[p + 1..],
                    None => text.as_str(),
                };
                let toks = tokenize(body);
                let (terms, constant, k) = parse_expr(&mut reader, &toks, line)?;
                if k != toks.len() {
                    return Err(FormatError::Syntax { line, msg: "comparison in objective".into() });
                }
                for (j, c) in terms {
                    reader.model.cost[j] += c;
                }
                reader.model.offset += constant;
            }
            Section::Constraints => {
                let (name, body) = match text.find(':') {
                    Some(p) => (text[..p].trim().to_string(), &text[p + 1..]),
                    None => (format!("r{}", reader.model.rows.len()), text.as_str()),
                };
                let toks = tokenize(body);
                let (terms, constant, k) = parse_expr(&mut reader, &toks, line)?;
                let rhs_text = toks[k + 1..].concat();
                if k >= toks.len() || toks.len() - k > 3 || toks.len() - k < 2 {
                    return Err(FormatError::Syntax { line, msg: "expected `<op> <rhs>`".into() });
                }
                let sense = match toks[k].as_str() {
                    "<=" | "=<" | "<" => Sense::Le,
                    ">=" | "=>" | ">" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rhs = parse_value(&rhs_text).ok_or_else(|| FormatError::Syntax {
                    line,
                    msg: format!("bad right-hand side `{rhs_text}`"),
                })?;
                reader.model.add_row(name, Row::new(terms, sense, rhs - constant));
            }
            Section::Bounds => parse_bound(&mut reader, &text, line)?,
            Section::General | Section::Binary => {
                for name in text.split_whitespace() {
                    let j = reader.var(name);
                    if sec == Section::Binary {
                        reader.model.kinds[j] = VarKind::Binary;
                        reader.model.lower[j] = reader.model.lower[j].max(0.0);
                        reader.model.upper[j] = reader.model.upper[j].min(1.0);
                    } else {
                        reader.model.kinds[j] = VarKind::Integer;
                    }
                }
            }
            Section::Preamble | Section::Done => {}
        }
    }
    Ok(reader.model)
}

fn parse_bound(reader: &mut Reader, text: &str, line: usize) -> Result<(), FormatError> {
    let toks = tokenize(text);
    let err = |msg: &str| FormatError::Syntax { line, msg: format!("{msg}: `{text}`") };
    // merge sign tokens into the following value
    let mut merged: Vec<String> = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        if (toks[k] == "-" || toks[k] == "+") && k + 1 < toks.len() {
            merged.push(format!("{}{}", toks[k], toks[k + 1]));
            k += 2;
        } else {
            merged.push(toks[k].clone());
            k += 1;
        }
    }
    let m = &merged;
    match m.len() {
        2 if m[1].eq_ignore_ascii_case("free") => {
            let j = reader.var(&m[0]);
            reader.model.lower[j] = f64::NEG_INFINITY;
            reader.model.upper[j] = f64::INFINITY;
        }
        3 => {
            let (name, op, v) = if parse_value(&m[0]).is_none() {
                (&m[0], m[1].as_str(), parse_value(&m[2]).ok_or_else(|| err("bad value"))?)
            } else {
                let flipped = match m[1].as_str() {
                    "<=" | "=<" | "<" => ">=",
                    ">=" | "=>" | ">" => "<=",
                    _ => "=",
                };
                (&m[2], flipped, parse_value(&m[0]).ok_or_else(|| err("bad value"))?)
            };
            let j = reader.var(name);
            match op {
                "<=" | "=<" | "<" => reader.model.upper[j] = v,
                ">=" | "=>" | ">" => reader.model.lower[j] = v,
                _ => {
                    reader.model.lower[j] = v;
                    reader.model.upper[j] = v;
                }
            }
        }
        5 => {
            let lo = parse_value(&m[0]).ok_or_else(|| err("bad lower bound"))?;
            let hi = parse_value(&m[4]).ok_or_else(|| err("bad upper bound"))?;
            let j = reader.var(&m[2]);
            reader.model.lower[j] = lo;
            reader.model.upper[j] = hi;
        }
        _ => return Err(err("unrecognized bound")),
    }
    Ok(())
}
