//! Line-oriented text format for substrates, requests and arrival streams.
//!
//! ```text
//! # comment
//! psn <nodes> <links>
//! node <id> <cap_cpu> <cap_ram> <max_cpu> <max_ram>
//! link <id> <a> <b> <cap_bw> <max_bw>
//! nspr <vnfs>
//! vnf <index> <req_cpu> <req_ram>
//! vlink <tail> <head> <req_bw>
//! request <id> <arrival_time> <lifetime>
//! ```
//!
//! A `psn` header is followed by exactly its node and link lines. An `nspr`
//! header is followed by its VNF lines and then its virtual link lines. A
//! `request` line attaches timing to the `nspr` block right after it. Floats
//! are written in shortest round-trip form.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{NsprGraph, PhysicalLink, PhysicalNode, PsnGraph, VirtualLink, Vnf};
use crate::workload::NsprRequest;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fixture {
    pub psn: Option<PsnGraph>,
    /// Request graphs not attached to a `request` line.
    pub nsprs: Vec<NsprGraph>,
    pub requests: Vec<NsprRequest>,
}

pub fn write_psn(out: &mut String, psn: &PsnGraph) {
    writeln!(out, "psn {} {}", psn.node_count(), psn.link_count()).unwrap();
    for n in psn.nodes() {
        writeln!(out, "node {} {} {} {} {}", n.id, n.cap_cpu, n.cap_ram, n.max_cpu, n.max_ram).unwrap();
    }
    for l in psn.links() {
        writeln!(out, "link {} {} {} {} {}", l.id, l.a, l.b, l.cap_bw, l.max_bw).unwrap();
    }
}

pub fn write_nspr(out: &mut String, nspr: &NsprGraph) {
    writeln!(out, "nspr {}", nspr.len()).unwrap();
    for v in &nspr.vnfs {
        writeln!(out, "vnf {} {} {}", v.index, v.req_cpu, v.req_ram).unwrap();
    }
    for vl in &nspr.vlinks {
        writeln!(out, "vlink {} {} {}", vl.tail, vl.head, vl.req_bw).unwrap();
    }
}

pub fn write_requests(out: &mut String, requests: &[NsprRequest]) {
    for r in requests {
        writeln!(out, "request {} {} {}", r.id, r.arrival_time, r.lifetime).unwrap();
        write_nspr(out, &r.nspr);
    }
}

pub fn psn_to_string(psn: &PsnGraph) -> String {
    let mut s = String::new();
    write_psn(&mut s, psn);
    s
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap().split_whitespace().collect::<Vec<_>>()))
                .filter(|(_, toks)| !toks.is_empty()),
        );
        Lines { inner: it.peekable() }
    }

    fn expect(&mut self, keyword: &str, arity: usize) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            None => Err(Error::parse(0, format!("unexpected end of input, expected `{keyword}`"))),
            Some((line, toks)) => {
                if toks[0] != keyword {
                    return Err(Error::parse(line, format!("expected `{keyword}`, found `{}`", toks[0])));
                }
                if toks.len() != arity + 1 {
                    return Err(Error::parse(line, format!("`{keyword}` takes {arity} fields, got {}", toks.len() - 1)));
                }
                Ok((line, toks[1..].to_vec()))
            }
        }
    }
}

fn field<T: FromStr>(line: usize, tok: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    tok.parse::<T>().map_err(|e| Error::parse(line, format!("bad field `{tok}`: {e}")))
}

fn parse_psn(lines: &mut Lines<'_>, header_line: usize, f: &[&str]) -> Result<PsnGraph> {
    let n: usize = field(header_line, f[0])?;
    let m: usize = field(header_line, f[1])?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, f) = lines.expect("node", 5)?;
        nodes.push(PhysicalNode {
            id: field(line, f[0])?,
            cap_cpu: field(line, f[1])?,
            cap_ram: field(line, f[2])?,
            max_cpu: field(line, f[3])?,
            max_ram: field(line, f[4])?,
        });
    }
    let mut links = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, f) = lines.expect("link", 5)?;
        links.push(PhysicalLink {
            id: field(line, f[0])?,
            a: field(line, f[1])?,
            b: field(line, f[2])?,
            cap_bw: field(line, f[3])?,
            max_bw: field(line, f[4])?,
        });
    }
    PsnGraph::from_parts(nodes, links).map_err(|e| Error::parse(header_line, e.to_string()))
}

fn parse_nspr(lines: &mut Lines<'_>) -> Result<NsprGraph> {
    let (header_line, f) = lines.expect("nspr", 1)?;
    let n: usize = field(header_line, f[0])?;
    let mut vnfs = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, f) = lines.expect("vnf", 3)?;
        vnfs.push(Vnf { index: field(line, f[0])?, req_cpu: field(line, f[1])?, req_ram: field(line, f[2])? });
    }
    let mut vlinks = Vec::new();
    for _ in 0..n.saturating_sub(1) {
        let (line, f) = lines.expect("vlink", 3)?;
        vlinks.push(VirtualLink { tail: field(line, f[0])?, head: field(line, f[1])?, req_bw: field(line, f[2])? });
    }
    let nspr = NsprGraph { vnfs, vlinks };
    nspr.validate().map_err(|e| Error::parse(header_line, e.to_string()))?;
    Ok(nspr)
}

pub fn parse_fixture(text: &str) -> Result<Fixture> {
    let mut lines = Lines::new(text);
    let mut fx = Fixture::default();
    while let Some((line, toks)) = lines.inner.peek().cloned() {
        match toks[0] {
            "psn" => {
                lines.inner.next();
                if toks.len() != 3 {
                    return Err(Error::parse(line, "`psn` takes 2 fields"));
                }
                if fx.psn.is_some() {
                    return Err(Error::parse(line, "second `psn` block"));
                }
                fx.psn = Some(parse_psn(&mut lines, line, &toks[1..])?);
            }
            "nspr" => fx.nsprs.push(parse_nspr(&mut lines)?),
            "request" => {
                let (line, f) = lines.expect("request", 3)?;
                let id = field(line, f[0])?;
                let arrival_time: f64 = field(line, f[1])?;
                let lifetime: f64 = field(line, f[2])?;
                if !(arrival_time >= 0.0 && lifetime > 0.0) {
                    return Err(Error::parse(line, "request needs arrival >= 0 and lifetime > 0"));
                }
                let nspr = parse_nspr(&mut lines)?;
                fx.requests.push(NsprRequest { id, nspr, arrival_time, lifetime });
            }
            other => return Err(Error::parse(line, format!("unknown record `{other}`"))),
        }
    }
    Ok(fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_psn, TopologyConfig};
    use crate::workload::{arrival_sequence, WorkloadConfig};

    #[test]
    fn psn_and_requests_round_trip() {
        let psn = build_psn(&TopologyConfig::default()).unwrap();
        let reqs = arrival_sequence(&WorkloadConfig { horizon: 5, ..Default::default() }, &psn).unwrap();
        let mut text = String::new();
        write_psn(&mut text, &psn);
        write_requests(&mut text, &reqs);
        let fx = parse_fixture(&text).unwrap();
        assert_eq!(fx.psn.unwrap(), psn);
        assert_eq!(fx.requests, reqs);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "psn 2 1\nnode 0 1 1 1 1\nnode 1 1 1 1 1\nlink 0 0 1 1 x\n";
        assert!(matches!(parse_fixture(text), Err(Error::Parse { line: 4, .. })));
        let text = "# hi\nnspr 2\nvnf 0 1 1\nvnf 1 1 1\n";
        assert!(matches!(parse_fixture(text), Err(Error::Parse { .. })));
        assert!(matches!(parse_fixture("\n\nbogus 1\n"), Err(Error::Parse { line: 3, .. })));
    }
}
