//! Text checkpoints of agent parameters.
//!
//! ```text
//! hadrl-checkpoint v1
//! hyper <alpha> <alpha_critic> <beta> <gamma> <entropy_w> <eta> <hidden>
//! net actor <layer count>
//! layer <inputs> <outputs> <relu|identity>
//! w <inputs values>          # one line per output row
//! b <outputs values>
//! net critic <layer count>
//! ...
//! ```
//!
//! Values are written in shortest round-trip form, so a save/load cycle is
//! exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::a2c::{AgentParams, Hyper};
use super::net::{Activation, Dense, DenseNet};

const MAGIC: &str = "hadrl-checkpoint v1";

fn write_values(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        write!(out, " {v:?}").unwrap();
    }
    out.push('\n');
}

fn write_net(out: &mut String, name: &str, net: &DenseNet) {
    writeln!(out, "net {name} {}", net.layers.len()).unwrap();
    for l in &net.layers {
        writeln!(out, "layer {} {} {}", l.inputs, l.outputs, l.activation.tag()).unwrap();
        for row in l.weights.chunks(l.inputs.max(1)) {
            write_values(out, "w", row);
        }
        write_values(out, "b", &l.bias);
    }
}

pub fn to_string(params: &AgentParams) -> String {
    let h = &params.hyper;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(
        out,
        "hyper {:?} {:?} {:?} {:?} {:?} {:?} {}",
        h.alpha, h.alpha_critic, h.beta, h.gamma, h.entropy_w, h.eta, h.hidden
    )
    .unwrap();
    write_net(&mut out, "actor", &params.actor);
    write_net(&mut out, "critic", &params.critic);
    out
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn next(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.lines.by_ref() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks[0] != tag {
                return Err(Error::parse(i + 1, format!("expected `{tag}`, found `{}`", toks[0])));
            }
            return Ok((i + 1, toks[1..].to_vec()));
        }
        Err(Error::parse(0, format!("unexpected end of checkpoint, expected `{tag}`")))
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    tok.parse().map_err(|e| Error::parse(line, format!("bad number `{tok}`: {e}")))
}

fn read_net(r: &mut Reader<'_>, name: &str) -> Result<DenseNet> {
    let (line, f) = r.next("net")?;
    if f.len() != 2 || f[0] != name {
        return Err(Error::parse(line, format!("expected `net {name} <layers>`")));
    }
    let count: usize = num(line, f[1])?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, f) = r.next("layer")?;
        if f.len() != 3 {
            return Err(Error::parse(line, "`layer` takes 3 fields"));
        }
        let inputs: usize = num(line, f[0])?;
        let outputs: usize = num(line, f[1])?;
        let activation =
            Activation::from_tag(f[2]).ok_or_else(|| Error::parse(line, format!("unknown activation `{}`", f[2])))?;
        let mut weights = Vec::with_capacity(inputs * outputs);
        for _ in 0..outputs {
            let (line, f) = r.next("w")?;
            if f.len() != inputs {
                return Err(Error::parse(line, format!("expected {inputs} weights, got {}", f.len())));
            }
            for t in f {
                weights.push(num(line, t)?);
            }
        }
        let (line, f) = r.next("b")?;
        if f.len() != outputs {
            return Err(Error::parse(line, format!("expected {outputs} biases, got {}", f.len())));
        }
        let bias = f.iter().map(|t| num(line, t)).collect::<Result<Vec<f64>>>()?;
        layers.push(Dense { inputs, outputs, weights, bias, activation });
    }
    let net = DenseNet { layers };
    net.validate().map_err(|e| Error::parse(line, e))?;
    Ok(net)
}

pub fn from_str(text: &str) -> Result<AgentParams> {
    let mut r = Reader { lines: text.lines().enumerate() };
    match r.lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(Error::parse(1, format!("missing `{MAGIC}` header"))),
    }
    let (line, f) = r.next("hyper")?;
    if f.len() != 7 {
        return Err(Error::parse(line, "`hyper` takes 7 fields"));
    }
    let hyper = Hyper {
        alpha: num(line, f[0])?,
        alpha_critic: num(line, f[1])?,
        beta: num(line, f[2])?,
        gamma: num(line, f[3])?,
        entropy_w: num(line, f[4])?,
        eta: num(line, f[5])?,
        hidden: num(line, f[6])?,
    };
    let actor = read_net(&mut r, "actor")?;
    let critic = read_net(&mut r, "critic")?;
    if actor.input_len() != critic.input_len() || critic.output_len() != 1 {
        return Err(Error::parse(0, "actor and critic shapes disagree"));
    }
    Ok(AgentParams { actor, critic, hyper })
}

pub fn save(params: &AgentParams, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<AgentParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}
