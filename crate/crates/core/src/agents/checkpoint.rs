//! Checkpoint files: a text header listing every tensor, the line `end`, then
//! the weights as little-endian `f32` in header order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::fc::{Fc, FcDims};
use super::layout::Layout;
use super::transformer::{Encoder, EncoderDims};
use super::{Model, Variant, N_DIM, QUBIT_DIM};
use crate::error::{Error, Result};

const MAGIC: &str = "entsched-checkpoint";
const VERSION: u32 = 1;

struct Header {
    variant: Variant,
    n_dim: usize,
    blocks: usize,
    embed_dim: usize,
    heads: usize,
    ff_dim: usize,
    fc_hidden: usize,
    n_qubits: usize,
}

fn header_of(model: &Model) -> (Header, &Layout, Vec<f32>) {
    match model {
        Model::Transformer(e) | Model::Qubit(e) => (
            Header {
                variant: model.variant(),
                n_dim: e.dims.input_dim,
                blocks: e.dims.blocks,
                embed_dim: e.dims.embed_dim,
                heads: e.dims.heads,
                ff_dim: e.dims.ff_dim,
                fc_hidden: 0,
                n_qubits: 0,
            },
            &e.layout,
            e.params.clone(),
        ),
        Model::Fc(f) => (
            Header {
                variant: Variant::Fc,
                n_dim: f.dims.token_dim,
                blocks: 0,
                embed_dim: 0,
                heads: 0,
                ff_dim: 0,
                fc_hidden: f.dims.hidden,
                n_qubits: f.dims.n_qubits,
            },
            &f.layout,
            f.params.clone(),
        ),
    }
}

pub fn write_checkpoint<W: Write>(model: &Model, mut w: W) -> Result<()> {
    let (h, layout, params) = header_of(model);
    let mut text = format!("{MAGIC}\nversion {VERSION}\nvariant {}\n", h.variant.name());
    for (k, v) in [
        ("n_dim", h.n_dim),
        ("blocks", h.blocks),
        ("embed_dim", h.embed_dim),
        ("heads", h.heads),
        ("ff_dim", h.ff_dim),
        ("fc_hidden", h.fc_hidden),
        ("n_qubits", h.n_qubits),
        ("tensors", layout.tensors.len()),
    ] {
        text.push_str(&format!("{k} {v}\n"));
    }
    for t in &layout.tensors {
        let shape: Vec<String> = t.shape.iter().map(|s| s.to_string()).collect();
        text.push_str(&format!("tensor {} {}\n", t.name, shape.join(" ")));
    }
    text.push_str("end\n");
    w.write_all(text.as_bytes())?;
    let mut bytes = Vec::with_capacity(params.len() * 4);
    for p in params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_checkpoint(model, std::io::BufWriter::new(f))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Load(msg.into())
}

fn read_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut s = String::new();
    if r.read_line(&mut s)? == 0 {
        return Err(bad("checkpoint header ends early"));
    }
    Ok(s.trim_end().to_string())
}

fn field<R: BufRead>(r: &mut R, key: &str) -> Result<String> {
    let line = read_line(r)?;
    match line.split_once(' ') {
        Some((k, v)) if k == key => Ok(v.to_string()),
        _ => Err(bad(format!("expected header field `{key}`, found `{line}`"))),
    }
}

fn number<R: BufRead>(r: &mut R, key: &str) -> Result<usize> {
    let v = field(r, key)?;
    v.parse().map_err(|_| bad(format!("header field `{key}` is not an integer: `{v}`")))
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<Model> {
    let mut r = BufReader::new(r);
    if read_line(&mut r)? != MAGIC {
        return Err(bad("not a checkpoint file (bad magic line)"));
    }
    let version = number(&mut r, "version")?;
    if version != VERSION as usize {
        return Err(bad(format!("field `version`: unsupported checkpoint version {version}")));
    }
    let vname = field(&mut r, "variant")?;
    let variant = Variant::parse(&vname).ok_or_else(|| bad(format!("field `variant`: unknown variant `{vname}`")))?;
    let h = Header {
        variant,
        n_dim: number(&mut r, "n_dim")?,
        blocks: number(&mut r, "blocks")?,
        embed_dim: number(&mut r, "embed_dim")?,
        heads: number(&mut r, "heads")?,
        ff_dim: number(&mut r, "ff_dim")?,
        fc_hidden: number(&mut r, "fc_hidden")?,
        n_qubits: number(&mut r, "n_qubits")?,
    };
    let want_dim = if variant == Variant::Qubit { QUBIT_DIM } else { N_DIM };
    if h.n_dim != want_dim {
        return Err(bad(format!("field `n_dim`: {} does not match the {} token width {want_dim}", h.n_dim, vname)));
    }
    let enc = EncoderDims { input_dim: h.n_dim, blocks: h.blocks, embed_dim: h.embed_dim, heads: h.heads, ff_dim: h.ff_dim };
    let fc = FcDims { n_qubits: h.n_qubits, token_dim: h.n_dim, hidden: h.fc_hidden };
    let layout = match variant {
        Variant::Fc => Fc::<f32>::layout_of(&fc),
        _ => {
            enc.validate().map_err(|e| bad(format!("encoder dimensions: {e}")))?;
            Encoder::<f32>::layout_of(&enc)
        }
    };
    let count = number(&mut r, "tensors")?;
    if count != layout.tensors.len() {
        return Err(bad(format!("field `tensors`: expected {}, found {count}", layout.tensors.len())));
    }
    for t in &layout.tensors {
        let line = field(&mut r, "tensor")?;
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap_or("");
        if name != t.name {
            return Err(bad(format!("tensor `{}` expected, found `{name}`", t.name)));
        }
        let shape: Vec<usize> = parts.map(|p| p.parse().map_err(|_| bad(format!("tensor `{name}`: bad shape")))).collect::<Result<_>>()?;
        if shape != t.shape {
            return Err(bad(format!("tensor `{name}`: shape {shape:?} does not match {:?}", t.shape)));
        }
    }
    if read_line(&mut r)? != "end" {
        return Err(bad("missing `end` after tensor list"));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let need = layout.total * 4;
    if bytes.len() < need {
        return Err(bad(format!("truncated weights: {} of {need} bytes present", bytes.len())));
    }
    if bytes.len() > need {
        return Err(bad(format!("{} unexpected bytes after the weights", bytes.len() - need)));
    }
    let params: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(match variant {
        Variant::QuPairs => Model::Transformer(Encoder::from_params(enc, params)?),
        Variant::Qubit => Model::Qubit(Encoder::from_params(enc, params)?),
        Variant::Fc => Model::Fc(Fc::from_params(fc, params)?),
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    read_checkpoint(f)
}
