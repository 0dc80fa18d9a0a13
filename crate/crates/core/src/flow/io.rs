//! Versioned text serialization of flow models. One self-describing document
//! holds the dimension, every layer's mask and subnet parameters in row-major
//! order, and the per-attribute priors. Floats are printed with Rust's
//! shortest round-trip formatting, so save/load is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Activation, MlpParams};
use crate::priors::DiagonalGaussian;

use super::{CouplingLayer, FlowModel};

const HEADER: &str = "priorflow-model v1";

fn write_floats(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

fn write_net(out: &mut String, label: &str, net: &MlpParams) {
    writeln!(out, "net {label}").unwrap();
    writeln!(out, "activation {}", net.activation.name()).unwrap();
    write!(out, "widths").unwrap();
    for w in &net.layer_widths {
        write!(out, " {w}").unwrap();
    }
    out.push('\n');
    for (l, (w, b)) in net.weights.iter().zip(&net.biases).enumerate() {
        write!(out, "weights {l} ").unwrap();
        write_floats(out, w);
        write!(out, "bias {l} ").unwrap();
        write_floats(out, b);
    }
}

pub fn model_to_string(model: &FlowModel) -> String {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "dim {}", model.dim).unwrap();
    writeln!(out, "layers {}", model.layers.len()).unwrap();
    for (i, layer) in model.layers.iter().enumerate() {
        writeln!(out, "layer {i}").unwrap();
        writeln!(out, "clamp {}", layer.scale_clamp).unwrap();
        write!(out, "mask").unwrap();
        for &m in &layer.mask {
            write!(out, " {}", u8::from(m)).unwrap();
        }
        out.push('\n');
        write_net(&mut out, "scale", &layer.scale_net);
        write_net(&mut out, "translate", &layer.translate_net);
    }
    writeln!(out, "priors {}", model.priors.len()).unwrap();
    for (attr, prior) in &model.priors {
        writeln!(out, "prior {attr}").unwrap();
        out.push_str("mean ");
        write_floats(&mut out, prior.mean());
        out.push_str("std ");
        write_floats(&mut out, prior.std());
    }
    out.push_str("end\n");
    out
}

pub fn save_model(model: &FlowModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

struct Cursor<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            let line = self.lines.next().ok_or_else(|| {
                Error::ModelFormat(format!(
                    "unexpected end of document after line {}",
                    self.line_no
                ))
            })?;
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Ok(line.trim_end());
            }
        }
    }

    fn expect_tagged(&mut self, tag: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        line.strip_prefix(tag)
            .map(|rest| rest.trim_start())
            .ok_or_else(|| {
                Error::ModelFormat(format!(
                    "line {}: expected `{tag}`, found `{line}`",
                    self.line_no
                ))
            })
    }

    fn bad(&self, msg: impl Into<String>) -> Error {
        Error::ModelFormat(format!("line {}: {}", self.line_no, msg.into()))
    }
}

fn parse_floats(cursor: &Cursor<'_>, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| cursor.bad(format!("invalid number `{tok}`")))
        })
        .collect()
}

fn parse_usize(cursor: &Cursor<'_>, text: &str) -> Result<usize> {
    text.trim()
        .parse::<usize>()
        .map_err(|_| cursor.bad(format!("invalid count `{text}`")))
}

fn parse_net(cursor: &mut Cursor<'_>, label: &str) -> Result<MlpParams> {
    let found = cursor.expect_tagged("net")?;
    if found != label {
        return Err(cursor.bad(format!("expected net `{label}`, found `{found}`")));
    }
    let activation = Activation::parse(cursor.expect_tagged("activation")?)
        .map_err(|e| cursor.bad(e.to_string()))?;
    let widths_text = cursor.expect_tagged("widths")?;
    let widths: Vec<usize> = widths_text
        .split_whitespace()
        .map(|t| parse_usize(cursor, t))
        .collect::<Result<_>>()?;
    let mut net = MlpParams::zeros(&widths, activation).map_err(|e| cursor.bad(e.to_string()))?;
    for l in 0..widths.len() - 1 {
        let w_text = cursor.expect_tagged(&format!("weights {l} "))?;
        let w = parse_floats(cursor, w_text)?;
        if w.len() != net.weights[l].len() {
            return Err(cursor.bad(format!(
                "weights {l}: expected {} values, got {}",
                net.weights[l].len(),
                w.len()
            )));
        }
        net.weights[l] = w;
        let b_text = cursor.expect_tagged(&format!("bias {l} "))?;
        let b = parse_floats(cursor, b_text)?;
        if b.len() != net.biases[l].len() {
            return Err(cursor.bad(format!(
                "bias {l}: expected {} values, got {}",
                net.biases[l].len(),
                b.len()
            )));
        }
        net.biases[l] = b;
    }
    Ok(net)
}

pub fn model_from_str(text: &str) -> Result<FlowModel> {
    let mut cursor = Cursor {
        lines: text.lines(),
        line_no: 0,
    };
    let header = cursor.next_line()?;
    if header != HEADER {
        return Err(Error::ModelFormat(format!(
            "unrecognized header `{header}` (expected `{HEADER}`)"
        )));
    }
    let dim_text = cursor.expect_tagged("dim")?;
    let dim = parse_usize(&cursor, dim_text)?;
    let layers_text = cursor.expect_tagged("layers")?;
    let n_layers = parse_usize(&cursor, layers_text)?;
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let idx_text = cursor.expect_tagged("layer")?;
        let idx = parse_usize(&cursor, idx_text)?;
        if idx != i {
            return Err(cursor.bad(format!("expected layer {i}, found {idx}")));
        }
        let clamp_text = cursor.expect_tagged("clamp")?;
        let clamp: f64 = clamp_text
            .trim()
            .parse()
            .map_err(|_| cursor.bad(format!("invalid clamp `{clamp_text}`")))?;
        let mask_text = cursor.expect_tagged("mask")?;
        let mask: Vec<bool> = mask_text
            .split_whitespace()
            .map(|t| match t {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(cursor.bad(format!("invalid mask entry `{other}`"))),
            })
            .collect::<Result<_>>()?;
        if mask.len() != dim {
            return Err(cursor.bad(format!("mask has {} entries, expected {dim}", mask.len())));
        }
        let scale_net = parse_net(&mut cursor, "scale")?;
        let translate_net = parse_net(&mut cursor, "translate")?;
        let layer = CouplingLayer::new(mask, scale_net, translate_net, clamp)
            .map_err(|e| cursor.bad(e.to_string()))?;
        layers.push(layer);
    }
    let mut model = FlowModel::new(dim, layers).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let priors_text = cursor.expect_tagged("priors")?;
    let n_priors = parse_usize(&cursor, priors_text)?;
    for _ in 0..n_priors {
        let attr = cursor.expect_tagged("prior")?.to_string();
        if attr.is_empty() {
            return Err(cursor.bad("empty attribute name"));
        }
        let mean_text = cursor.expect_tagged("mean")?;
        let mean = parse_floats(&cursor, mean_text)?;
        let std_text = cursor.expect_tagged("std")?;
        let std = parse_floats(&cursor, std_text)?;
        let prior = DiagonalGaussian::new(mean, std).map_err(|e| cursor.bad(e.to_string()))?;
        model
            .register_attribute(attr, prior)
            .map_err(|e| cursor.bad(e.to_string()))?;
    }
    let end = cursor.next_line()?;
    if end != "end" {
        return Err(cursor.bad(format!("expected `end`, found `{end}`")));
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<FlowModel> {
    let text = std::fs::read_to_string(path)?;
    model_from_str(&text)
}
