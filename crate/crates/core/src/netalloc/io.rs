//! Line-oriented text formats for scenarios and networks.
//!
//! Scenario:
//! ```text
//! J 2
//! K 1
//! seed 7
//! case case1
//! t,p_1,b_1,b_2
//! 1,1.5,80,120.25
//! ```
//!
//! Network:
//! ```text
//! J 2
//! K 1
//! link_caps
//! 50
//! 20.5
//! link_costs
//! 0.8
//! 1.951219512195122
//! dc_caps
//! 150
//! ```
//! Link tables have one row per mapping node and one column per data center.
//! Numbers use the shortest decimal that reads back to the same value.

use std::fmt::Write as _;

use crate::error::{argument, MospError, Result};
use crate::scalar::Scalar;

use super::network::{CloudNetwork, SlotParams};
use super::scenario::{CaseTag, ScenarioStream};

fn parse_error(line: usize, msg: impl Into<String>) -> MospError {
    argument(format!("line {line}: {}", msg.into()))
}

fn parse_num<T: Scalar>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse::<T>()
        .map_err(|_| parse_error(line, format!("not a number: {s:?}")))
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| argument(format!("missing {key} header")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(parse_error(no, format!("expected {key}")));
    }
    let value = parts.next().ok_or_else(|| parse_error(no, format!("{key} has no value")))?;
    Ok((no, value))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn write_scenario<T: Scalar>(s: &ScenarioStream<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "J {}", s.mapping_nodes);
    let _ = writeln!(out, "K {}", s.data_centers);
    let _ = writeln!(out, "seed {}", s.seed);
    let _ = writeln!(out, "case {}", s.case);
    out.push('t');
    for k in 1..=s.data_centers {
        let _ = write!(out, ",p_{k}");
    }
    for j in 1..=s.mapping_nodes {
        let _ = write!(out, ",b_{j}");
    }
    out.push('\n');
    for (i, slot) in s.slots.iter().enumerate() {
        let _ = write!(out, "{}", i + 1);
        for v in slot.prices.iter().chain(&slot.loads) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn read_scenario<T: Scalar>(text: &str) -> Result<ScenarioStream<T>> {
    let mut lines = content_lines(text);
    let (no, j) = header(&mut lines, "J")?;
    let j: usize = j.parse().map_err(|_| parse_error(no, "J is not an integer"))?;
    let (no, k) = header(&mut lines, "K")?;
    let k: usize = k.parse().map_err(|_| parse_error(no, "K is not an integer"))?;
    let (no, seed) = header(&mut lines, "seed")?;
    let seed: u64 = seed.parse().map_err(|_| parse_error(no, "seed is not an integer"))?;
    let (_, case) = header(&mut lines, "case")?;
    let case: CaseTag = case.parse()?;
    let mut slots = Vec::new();
    for (no, line) in lines {
        if line.starts_with('t') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + k + j {
            return Err(parse_error(no, format!("expected {} fields, found {}", 1 + k + j, fields.len())));
        }
        let t: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_error(no, "slot index is not an integer"))?;
        if t != slots.len() + 1 {
            return Err(parse_error(no, format!("expected slot {}, found {t}", slots.len() + 1)));
        }
        let prices = fields[1..=k].iter().map(|f| parse_num(f, no)).collect::<Result<_>>()?;
        let loads = fields[1 + k..].iter().map(|f| parse_num(f, no)).collect::<Result<_>>()?;
        slots.push(SlotParams { prices, loads });
    }
    let s = ScenarioStream {
        mapping_nodes: j,
        data_centers: k,
        seed,
        case,
        slots,
    };
    if s.slots.is_empty() {
        return Err(argument("scenario has no slots"));
    }
    s.validate()?;
    Ok(s)
}

pub fn write_network<T: Scalar>(net: &CloudNetwork<T>) -> String {
    let (j, k) = (net.mapping_nodes(), net.data_centers());
    let mut out = String::new();
    let _ = writeln!(out, "J {j}");
    let _ = writeln!(out, "K {k}");
    for (name, table) in [("link_caps", net.link_caps()), ("link_costs", net.link_costs())] {
        let _ = writeln!(out, "{name}");
        for row in table.chunks(k) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
    }
    let _ = writeln!(out, "dc_caps");
    let cells: Vec<String> = net.dc_caps().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "{}", cells.join(","));
    out
}

pub fn read_network<T: Scalar>(text: &str) -> Result<CloudNetwork<T>> {
    let mut lines = content_lines(text);
    let (no, j) = header(&mut lines, "J")?;
    let j: usize = j.parse().map_err(|_| parse_error(no, "J is not an integer"))?;
    let (no, k) = header(&mut lines, "K")?;
    let k: usize = k.parse().map_err(|_| parse_error(no, "K is not an integer"))?;
    let mut table = |name: &str, rows: usize, cols: usize| -> Result<Vec<T>> {
        let (no, line) = lines.next().ok_or_else(|| argument(format!("missing {name} section")))?;
        if line != name {
            return Err(parse_error(no, format!("expected section {name}")));
        }
        let mut v = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (no, line) = lines.next().ok_or_else(|| argument(format!("{name} is truncated")))?;
            let row: Vec<T> = line.split(',').map(|f| parse_num(f, no)).collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(parse_error(no, format!("expected {cols} values")));
            }
            v.extend(row);
        }
        Ok(v)
    };
    let caps = table("link_caps", j, k)?;
    let costs = table("link_costs", j, k)?;
    let dc = table("dc_caps", 1, k)?;
    CloudNetwork::new(j, k, caps, costs, dc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netalloc::scenario::{gen_case2, gen_network};

    #[test]
    fn scenario_round_trip_is_exact() {
        let s = gen_case2::<f64>(3, 2, 30, 9).unwrap();
        let text = write_scenario(&s);
        assert_eq!(read_scenario::<f64>(&text).unwrap(), s);
        let s32 = gen_case2::<f32>(3, 2, 30, 9).unwrap();
        assert_eq!(read_scenario::<f32>(&write_scenario(&s32)).unwrap(), s32);
    }

    #[test]
    fn network_round_trip_is_exact() {
        let n = gen_network::<f64>(3, 4, 2).unwrap();
        assert_eq!(read_network::<f64>(&write_network(&n)).unwrap(), n);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = "J 1\nK 1\nseed 0\ncase custom\nt,p_1,b_1\n1,2.0\n";
        let err = read_scenario::<f64>(text).unwrap_err();
        assert!(err.to_string().contains("line 6"), "{err}");
        let text = "J 1\nK 1\nseed 0\ncase custom\n1,2.0,x\n";
        assert!(read_scenario::<f64>(text).unwrap_err().to_string().contains("line 5"));
    }
}
