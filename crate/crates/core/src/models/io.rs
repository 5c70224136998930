//! Model files: a UTF-8 manifest of `key: value` lines, the line `end`, then the raw
//! little-endian f64 parameter block. Each `param:` line names a tensor, its byte offset in
//! the block, its element count and its shape; tensors are stored in manifest order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::freqcnn::{FreqCnnArchitecture, FreqCnnModel};
use super::psd::PsdDetector;
use super::tcn::{TcnArchitecture, TcnLevel, TcnModel};
use super::{Model, TrainingMeta};
use crate::error::{Error, Result};
use crate::neural::{AdamConfig, Param, Parameterized};

pub const MODEL_MAGIC: &str = "baroslip-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;
const END: &str = "end";

fn field_err(field: &str, msg: impl Into<String>) -> Error {
    Error::ModelField {
        field: field.to_string(),
        msg: msg.into(),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let mut head = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(head, "{k}: {v}");
    };
    kv("format_version", MODEL_FORMAT_VERSION.to_string());
    kv("kind", model.kind().to_string());
    match model {
        Model::Tcn(m) => {
            let a = &m.arch;
            kv("arch.window_len", a.window_len.to_string());
            kv("arch.input_channels", a.input_channels.to_string());
            let levels: Vec<String> = a
                .levels
                .iter()
                .map(|l| format!("{}:{}:{}", l.channels, l.kernel, l.dilation))
                .collect();
            kv("arch.levels", levels.join(","));
            kv("arch.fc_sizes", join(&a.fc_sizes));
            kv("arch.num_classes", a.num_classes.to_string());
            kv("arch.dropout_rate", a.dropout_rate.to_string());
            kv("arch.input_scale", a.input_scale.to_string());
        }
        Model::FreqCnn(m) => {
            let a = &m.arch;
            kv("arch.window_len", a.window_len.to_string());
            kv("arch.filters", join(&a.filters));
            kv("arch.kernel", a.kernel.to_string());
            kv("arch.hidden", a.hidden.to_string());
            kv("arch.input_scale", a.input_scale.to_string());
        }
        Model::Psd(d) => {
            kv("psd.window_len", d.window_len.to_string());
            kv("psd.cutoff_hz", d.cutoff_hz.to_string());
            kv("psd.sample_rate", d.sample_rate.to_string());
            kv("psd.threshold", d.threshold.to_string());
            kv("psd.train_f1", d.train_f1.to_string());
        }
    }
    let meta = model.meta();
    kv("meta.seed", meta.seed.to_string());
    kv("meta.epochs", meta.epochs.to_string());
    kv("meta.lr", meta.lr.to_string());
    kv("meta.stride", meta.stride.to_string());
    kv("meta.data_fingerprint", format!("{:016x}", meta.data_fingerprint));
    kv("meta.best_epoch", meta.best_epoch.to_string());
    kv("meta.val_f1", meta.val_f1.to_string());
    let adam = AdamConfig::default();
    kv("optimizer", "adam".into());
    kv("optimizer.beta1", adam.beta1.to_string());
    kv("optimizer.beta2", adam.beta2.to_string());
    kv("optimizer.eps", adam.eps.to_string());

    let params = params_of(model);
    let mut offset = 0usize;
    for p in &params {
        let shape: Vec<String> = p.value.shape().iter().map(ToString::to_string).collect();
        let _ = writeln!(head, "param: {} {} {} {}", p.name, offset, p.value.len(), shape.join("x"));
        offset += 8 * p.value.len();
    }
    let mut bytes = format!("{MODEL_MAGIC}\n{head}{END}\n").into_bytes();
    bytes.reserve(offset);
    for p in &params {
        for v in p.value.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    bytes
}

fn params_of(model: &Model) -> Vec<&Param> {
    match model {
        Model::Tcn(m) => m.params(),
        Model::FreqCnn(m) => m.params(),
        Model::Psd(_) => Vec::new(),
    }
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, path)
}

struct ParamLine {
    name: String,
    offset: usize,
    len: usize,
    shape: Vec<usize>,
}

struct Manifest {
    fields: BTreeMap<String, String>,
    params: Vec<ParamLine>,
}

impl Manifest {
    fn take(&mut self, key: &str) -> Result<String> {
        self.fields.remove(key).ok_or_else(|| field_err(key, "missing"))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.take(key)?;
        raw.parse().map_err(|_| field_err(key, format!("cannot parse `{raw}`")))
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let raw = self.take(key)?;
        raw.split(',')
            .map(|s| s.trim().parse().map_err(|_| field_err(key, format!("cannot parse `{raw}`"))))
            .collect()
    }

    fn pair(&mut self, key: &str) -> Result<[usize; 2]> {
        let v: Vec<usize> = self.list(key)?;
        v.try_into().map_err(|_| field_err(key, "expected two values"))
    }
}

pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Model> {
    let (mut manifest, block) = split_manifest(bytes, path)?;
    let kind: super::ModelKind = manifest
        .take("kind")?
        .parse()
        .map_err(|e: Error| field_err("kind", e.to_string()))?;
    let meta = TrainingMeta {
        seed: manifest.parse("meta.seed")?,
        epochs: manifest.parse("meta.epochs")?,
        lr: manifest.parse("meta.lr")?,
        stride: manifest.parse("meta.stride")?,
        data_fingerprint: {
            let raw = manifest.take("meta.data_fingerprint")?;
            u64::from_str_radix(&raw, 16).map_err(|_| field_err("meta.data_fingerprint", format!("bad hex `{raw}`")))?
        },
        best_epoch: manifest.parse("meta.best_epoch")?,
        val_f1: manifest.parse("meta.val_f1")?,
    };
    for key in ["optimizer.beta1", "optimizer.beta2", "optimizer.eps"] {
        manifest.parse::<f64>(key)?;
    }
    let optimizer = manifest.take("optimizer")?;
    if optimizer != "adam" {
        return Err(field_err("optimizer", format!("unknown optimizer `{optimizer}`")));
    }

    let mut model = match kind {
        super::ModelKind::Tcn => {
            let levels = manifest
                .list::<String>("arch.levels")?
                .iter()
                .map(|s| {
                    let v: Vec<usize> = s.split(':').filter_map(|x| x.parse().ok()).collect();
                    match v[..] {
                        [channels, kernel, dilation] => Ok(TcnLevel {
                            channels,
                            kernel,
                            dilation,
                        }),
                        _ => Err(field_err("arch.levels", format!("bad level `{s}`"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let arch = TcnArchitecture {
                window_len: manifest.parse("arch.window_len")?,
                input_channels: manifest.parse("arch.input_channels")?,
                levels,
                fc_sizes: manifest.pair("arch.fc_sizes")?,
                num_classes: manifest.parse("arch.num_classes")?,
                dropout_rate: manifest.parse("arch.dropout_rate")?,
                input_scale: manifest.parse("arch.input_scale")?,
            };
            Model::Tcn(TcnModel::new(arch, 0).map_err(|e| field_err("arch", e.to_string()))?)
        }
        super::ModelKind::FreqCnn => {
            let arch = FreqCnnArchitecture {
                window_len: manifest.parse("arch.window_len")?,
                filters: manifest.pair("arch.filters")?,
                kernel: manifest.parse("arch.kernel")?,
                hidden: manifest.parse("arch.hidden")?,
                input_scale: manifest.parse("arch.input_scale")?,
            };
            Model::FreqCnn(FreqCnnModel::new(arch, 0).map_err(|e| field_err("arch", e.to_string()))?)
        }
        super::ModelKind::Psd => {
            let window_len: usize = manifest.parse("psd.window_len")?;
            if window_len == 0 {
                return Err(field_err("psd.window_len", "must be at least 1"));
            }
            let mut d = PsdDetector::new(window_len, manifest.parse("psd.cutoff_hz")?, manifest.parse("psd.threshold")?);
            d.sample_rate = manifest.parse("psd.sample_rate")?;
            d.train_f1 = manifest.parse("psd.train_f1")?;
            Model::Psd(d)
        }
    };
    if let Some(key) = manifest.fields.keys().next() {
        return Err(field_err(key, format!("unexpected field for a {kind} model")));
    }
    match &mut model {
        Model::Tcn(m) => {
            m.meta = meta;
            fill_params(m.params_mut(), &manifest.params, block)?;
        }
        Model::FreqCnn(m) => {
            m.meta = meta;
            fill_params(m.params_mut(), &manifest.params, block)?;
        }
        Model::Psd(d) => {
            d.meta = meta;
            fill_params(Vec::new(), &manifest.params, block)?;
        }
    }
    Ok(model)
}

fn split_manifest<'a>(bytes: &'a [u8], path: &Path) -> Result<(Manifest, &'a [u8])> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut fields = BTreeMap::new();
    let mut params = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(Error::parse(path, line_no + 1, "manifest ends without an `end` line"));
        };
        line_no += 1;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::parse(path, line_no, "manifest is not UTF-8"))?;
        pos += nl + 1;
        if line_no == 1 {
            if line != MODEL_MAGIC {
                return Err(Error::parse(path, 1, format!("expected `{MODEL_MAGIC}`, found `{line}`")));
            }
            continue;
        }
        if line == END {
            break;
        }
        let Some((key, value)) = line.split_once(": ") else {
            return Err(Error::parse(path, line_no, format!("expected `key: value`, found `{line}`")));
        };
        if line_no == 2 {
            if key != "format_version" {
                return Err(Error::parse(path, 2, "first field must be format_version"));
            }
            if value.parse::<u32>().ok() != Some(MODEL_FORMAT_VERSION) {
                return Err(Error::Version {
                    found: value.to_string(),
                    expected: MODEL_FORMAT_VERSION,
                });
            }
            continue;
        }
        if key == "param" {
            params.push(parse_param_line(value).map_err(|m| Error::parse(path, line_no, m))?);
        } else if fields.insert(key.to_string(), value.to_string()).is_some() {
            return Err(field_err(key, "appears twice"));
        }
    }
    if line_no < 2 {
        return Err(Error::parse(path, 1, "missing format_version"));
    }
    Ok((Manifest { fields, params }, &bytes[pos..]))
}

fn parse_param_line(value: &str) -> std::result::Result<ParamLine, String> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let [name, offset, len, shape] = parts[..] else {
        return Err(format!("param line needs `name offset len shape`, found `{value}`"));
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad number `{s}` in param line"));
    Ok(ParamLine {
        name: name.to_string(),
        offset: num(offset)?,
        len: num(len)?,
        shape: shape.split('x').map(num).collect::<std::result::Result<_, _>>()?,
    })
}

fn fill_params(params: Vec<&mut Param>, lines: &[ParamLine], block: &[u8]) -> Result<()> {
    if lines.len() != params.len() {
        return Err(field_err(
            "param",
            format!("architecture has {} tensors, manifest lists {}", params.len(), lines.len()),
        ));
    }
    let mut expected_offset = 0;
    for (p, line) in params.into_iter().zip(lines) {
        if line.name != p.name {
            return Err(field_err(&p.name, format!("manifest lists `{}` in this position", line.name)));
        }
        if line.shape != p.value.shape() || line.len != p.value.len() {
            return Err(field_err(
                &p.name,
                format!("shape {:?} does not match architecture {:?}", line.shape, p.value.shape()),
            ));
        }
        if line.offset != expected_offset {
            return Err(field_err(&p.name, format!("offset {} but expected {expected_offset}", line.offset)));
        }
        let end = expected_offset + 8 * line.len;
        if end > block.len() {
            return Err(field_err(
                &p.name,
                format!("parameter block truncated: need {end} bytes, have {}", block.len()),
            ));
        }
        for (dst, chunk) in p.value.data_mut().iter_mut().zip(block[expected_offset..end].chunks_exact(8)) {
            *dst = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        if !p.value.is_finite() {
            return Err(field_err(&p.name, "non-finite parameter value"));
        }
        expected_offset = end;
    }
    if block.len() != expected_offset {
        return Err(field_err(
            "param",
            format!("{} trailing bytes after the parameter block", block.len() - expected_offset),
        ));
    }
    Ok(())
}
