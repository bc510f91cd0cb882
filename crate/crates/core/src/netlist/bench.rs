// SPDX-License-Identifier: Apache-2.0
//! ISCAS89 `.bench` reader and writer.

use super::delays::Instance;
use super::{DelayLibrary, GateKind, Netlist, Signal};
use crate::error::NetlistError;
use std::collections::{BTreeMap, HashMap};

enum Def {
    Input,
    Dff(String),
    Gate(GateKind, Vec<String>),
}

/// Parses `.bench` text. `delays` is the optional delay sidecar document;
/// the bundled library is used when absent.
pub fn parse_bench(text: &str, delays: Option<&str>) -> Result<Netlist, NetlistError> {
    let (library, instances) = match delays {
        Some(d) => DelayLibrary::parse(d)?,
        None => (DelayLibrary::default(), BTreeMap::new()),
    };
    let mut name = String::from("bench");
    let mut order: Vec<(String, Def, usize)> = Vec::new();
    let mut outputs: Vec<(String, usize)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            if ln == 0 && !c.trim().is_empty() {
                name = c.trim().to_string();
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: &str| NetlistError::Syntax {
            line: line_no,
            msg: msg.to_string(),
        };
        if let Some((lhs, rhs)) = line.split_once('=') {
            let lhs = lhs.trim();
            let (func, args) = call(rhs.trim()).ok_or_else(|| syntax("expected FUNC(args)"))?;
            if lhs.is_empty() || !valid_name(lhs) {
                return Err(syntax("bad signal name"));
            }
            let def = if func.eq_ignore_ascii_case("DFF") {
                if args.len() != 1 {
                    return Err(syntax("DFF takes one input"));
                }
                Def::Dff(args[0].clone())
            } else {
                let kind =
                    GateKind::parse(&func).ok_or_else(|| NetlistError::UnknownKind(func.clone()))?;
                if args.is_empty() || (kind.is_unary() && args.len() != 1) {
                    return Err(syntax("wrong number of inputs"));
                }
                Def::Gate(kind, args)
            };
            order.push((lhs.to_string(), def, line_no));
        } else {
            let (func, args) = call(line).ok_or_else(|| syntax("expected declaration"))?;
            if args.len() != 1 {
                return Err(syntax("port takes one name"));
            }
            match func.to_ascii_uppercase().as_str() {
                "INPUT" => order.push((args[0].clone(), Def::Input, line_no)),
                "OUTPUT" => outputs.push((args[0].clone(), line_no)),
                _ => return Err(syntax("unknown declaration")),
            }
        }
    }

    let mut n = Netlist::new(&name, library);
    let mut sig: HashMap<String, Signal> = HashMap::new();
    for (id, def, line) in &order {
        let s = match def {
            Def::Input => Signal::Input(n.inputs.len()),
            Def::Dff(_) => Signal::Ff(n.flipflops.len()),
            Def::Gate(..) => Signal::Gate(n.gates.len()),
        };
        if sig.insert(id.clone(), s).is_some() {
            return Err(NetlistError::Syntax {
                line: *line,
                msg: format!("`{id}` defined twice"),
            });
        }
        match def {
            Def::Input => {
                n.add_input(id);
            }
            Def::Dff(_) => {
                n.add_ff(id, Signal::Input(usize::MAX));
            }
            Def::Gate(kind, args) => {
                n.add_gate(id, *kind, vec![Signal::Input(usize::MAX); args.len()]);
            }
        }
    }
    let lookup = |s: &str| sig.get(s).copied().ok_or_else(|| NetlistError::Undriven(s.into()));
    for (id, def, _) in &order {
        match (def, sig[id]) {
            (Def::Dff(a), Signal::Ff(f)) => n.flipflops[f].d = lookup(a)?,
            (Def::Gate(_, args), Signal::Gate(g)) => {
                for (p, a) in args.iter().enumerate() {
                    n.gates[g].inputs[p] = lookup(a)?;
                }
            }
            _ => {}
        }
    }
    for (o, _) in &outputs {
        n.outputs.push(lookup(o)?);
    }
    apply_instances(&mut n, &instances)?;
    n.validate()?;
    Ok(n)
}

fn apply_instances(n: &mut Netlist, inst: &BTreeMap<String, Instance>) -> Result<(), NetlistError> {
    for (id, a) in inst {
        let g = n
            .gate_index(id)
            .ok_or_else(|| NetlistError::Delays(format!("instance `{id}` is not a gate")))?;
        if let Some(rows) = &a.rows {
            n.library
                .overrides
                .insert(id.clone(), super::KindDelays { rows: rows.clone() });
        }
        let level = a.size.unwrap_or(n.gates[g].size_level);
        n.resize(g, level);
        if let Some(xi) = a.xi {
            if xi < 0.0 {
                return Err(NetlistError::BadDelay(id.clone()));
            }
            n.gates[g].xi = xi;
        }
    }
    Ok(())
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']' | '$'))
}

fn call(s: &str) -> Option<(String, Vec<String>)> {
    let open = s.find('(')?;
    let inner = s[open + 1..].strip_suffix(')')?;
    let func = s[..open].trim().to_string();
    let args: Vec<String> = inner
        .split(',')
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();
    if func.is_empty() || args.iter().any(|a| !valid_name(a)) {
        return None;
    }
    Some((func, args))
}

/// Emits `.bench` text. Sizes and inserted delays are not part of the
/// format; see [`write_annotations`].
pub fn write_bench(n: &Netlist) -> String {
    let mut out = format!("# {}\n", n.name);
    for i in &n.inputs {
        out += &format!("INPUT({i})\n");
    }
    for &o in &n.outputs {
        out += &format!("OUTPUT({})\n", n.signal_name(o));
    }
    for f in &n.flipflops {
        out += &format!("{} = DFF({})\n", f.id, n.signal_name(f.d));
    }
    for g in &n.gates {
        let args: Vec<&str> = g.inputs.iter().map(|&s| n.signal_name(s)).collect();
        out += &format!("{} = {}({})\n", g.id, g.kind.name(), args.join(", "));
    }
    out
}

/// Emits the delay sidecar with per-instance size and inserted delay for
/// every gate that differs from the library default.
pub fn write_annotations(n: &Netlist) -> String {
    let mut inst = BTreeMap::new();
    for g in &n.gates {
        if g.size_level != n.library.default_size || g.xi != 0.0 {
            inst.insert(
                g.id.clone(),
                Instance {
                    size: Some(g.size_level),
                    xi: Some(g.xi),
                    rows: None,
                },
            );
        }
    }
    n.library.to_document(&inst)
}
