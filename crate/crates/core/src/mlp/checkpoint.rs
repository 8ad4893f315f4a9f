//! Versioned plain-text model dump.
//!
//! ```text
//! adaptcast-mlp 1
//! arch 7 64 1
//! step 42
//! layer leaky_relu:3f847ae147ae147b
//! w <hex> <hex> ...
//! b ...
//! mw ...
//! mb ...
//! vw ...
//! vb ...
//! layer relu
//! ...
//! ```
//!
//! Every float is the 16-digit hex of its IEEE-754 bit pattern, so a
//! write/read cycle is bit-exact.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{Activation, AdamState, Layer, LayerParams, MlpModel};

pub const CHECKPOINT_MAGIC: &str = "adaptcast-mlp";
const VERSION: u32 = 1;

fn hex(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{:016x}", v.to_bits()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn activation_tag(a: Activation) -> String {
    match a {
        Activation::LeakyRelu(s) => format!("leaky_relu:{:016x}", s.to_bits()),
        Activation::Relu => "relu".into(),
        Activation::Identity => "identity".into(),
    }
}

pub fn write_checkpoint<W: Write>(model: &MlpModel, mut out: W) -> Result<()> {
    let io = |e| Error::io("<checkpoint>", e);
    let arch: Vec<String> = model.arch().iter().map(usize::to_string).collect();
    writeln!(out, "{CHECKPOINT_MAGIC} {VERSION}").map_err(io)?;
    writeln!(out, "arch {}", arch.join(" ")).map_err(io)?;
    writeln!(out, "step {}", model.adam.step).map_err(io)?;
    for (k, layer) in model.layers.iter().enumerate() {
        let (m, v) = (&model.adam.first[k], &model.adam.second[k]);
        writeln!(out, "layer {}", activation_tag(layer.activation)).map_err(io)?;
        writeln!(out, "w {}", hex(&layer.params.weights)).map_err(io)?;
        writeln!(out, "b {}", hex(&layer.params.biases)).map_err(io)?;
        writeln!(out, "mw {}", hex(&m.weights)).map_err(io)?;
        writeln!(out, "mb {}", hex(&m.biases)).map_err(io)?;
        writeln!(out, "vw {}", hex(&v.weights)).map_err(io)?;
        writeln!(out, "vb {}", hex(&v.biases)).map_err(io)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    row: usize,
}

impl<R: BufRead> Lines<R> {
    fn expect(&mut self, key: &str) -> Result<String> {
        self.row += 1;
        let line = self
            .inner
            .next()
            .ok_or_else(|| self.err(format!("unexpected end of file, wanted `{key}`")))?
            .map_err(|e| Error::io("<checkpoint>", e))?;
        let (head, rest) = line.split_once(' ').unwrap_or((line.as_str(), ""));
        if head != key {
            return Err(self.err(format!("expected `{key}`, found `{head}`")));
        }
        Ok(rest.to_string())
    }

    fn floats(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let rest = self.expect(key)?;
        let values = rest
            .split_whitespace()
            .map(|t| u64::from_str_radix(t, 16).map(f64::from_bits))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| self.err(format!("bad float in `{key}`: {e}")))?;
        if values.len() != len {
            return Err(self.err(format!("`{key}` holds {} values, expected {len}", values.len())));
        }
        Ok(values)
    }

    fn err(&self, message: String) -> Error {
        Error::Parse {
            row: self.row,
            message,
        }
    }
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<MlpModel> {
    let mut lines = Lines {
        inner: input.lines(),
        row: 0,
    };
    let version = lines.expect(CHECKPOINT_MAGIC)?;
    if version.trim() != VERSION.to_string() {
        return Err(lines.err(format!("unsupported checkpoint version `{version}`")));
    }
    let arch = lines
        .expect("arch")?
        .split_whitespace()
        .map(str::parse::<usize>)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| lines.err(format!("bad arch: {e}")))?;
    if arch.len() < 2 || arch.contains(&0) {
        return Err(lines.err("arch needs at least two positive sizes".into()));
    }
    let step = lines
        .expect("step")?
        .trim()
        .parse::<u64>()
        .map_err(|e| lines.err(format!("bad step: {e}")))?;

    let mut layers = Vec::new();
    let mut first = Vec::new();
    let mut second = Vec::new();
    for pair in arch.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let tag = lines.expect("layer")?;
        let activation = match tag.trim() {
            "relu" => Activation::Relu,
            "identity" => Activation::Identity,
            t => match t.strip_prefix("leaky_relu:").map(|h| u64::from_str_radix(h, 16)) {
                Some(Ok(bits)) => Activation::LeakyRelu(f64::from_bits(bits)),
                _ => return Err(lines.err(format!("unknown activation `{t}`"))),
            },
        };
        let nw = fan_in * fan_out;
        let mut block = |wk: &str, bk: &str| -> Result<LayerParams> {
            Ok(LayerParams {
                weights: lines.floats(wk, nw)?,
                biases: lines.floats(bk, fan_out)?,
            })
        };
        let params = block("w", "b")?;
        first.push(block("mw", "mb")?);
        second.push(block("vw", "vb")?);
        layers.push(Layer {
            fan_in,
            fan_out,
            params,
            activation,
        });
    }
    Ok(MlpModel::from_parts(layers, AdamState { step, first, second }))
}
