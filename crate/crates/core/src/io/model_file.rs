//! `LUQM` model files bundling an optional PCA, the latent density and the
//! output prior.
//!
//! Layout: magic, u16 version, u16 section count, then per section a u8 tag,
//! u64 payload length, u32 CRC-32 of the payload and the payload itself.
//! All numbers are little-endian.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::bytes::{ByteReader, ByteWriter};
use crate::density::{ClassConditionalGmm, ConditionalFlow, CouplingLayer, GaussianComponent, Gmm};
use crate::error::{Error, Result};
use crate::linalg::{CholeskyFactor, PcaModel};
use crate::nn::Mlp;
use crate::priors::OutputPrior;

pub const MODEL_MAGIC: &[u8; 4] = b"LUQM";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum SectionTag {
    Pca = 1,
    ClassGmms = 2,
    Flow = 3,
    Prior = 4,
}

impl SectionTag {
    fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(Self::Pca),
            2 => Some(Self::ClassGmms),
            3 => Some(Self::Flow),
            4 => Some(Self::Prior),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Pca => "pca",
            Self::ClassGmms => "class_gmms",
            Self::Flow => "flow",
            Self::Prior => "prior",
        }
    }
}

/// The latent density stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentDensity {
    ClassGmms(ClassConditionalGmm),
    Flow(ConditionalFlow),
}

impl LatentDensity {
    pub fn dim(&self) -> usize {
        match self {
            Self::ClassGmms(g) => g.dim(),
            Self::Flow(f) => f.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub pca: Option<PcaModel>,
    pub density: LatentDensity,
    pub prior: OutputPrior,
}

impl ModelFile {
    pub fn new(pca: Option<PcaModel>, density: LatentDensity, prior: OutputPrior) -> Result<Self> {
        if let Some(p) = &pca {
            if p.out_dim() != density.dim() {
                return Err(Error::DimMismatch {
                    expected: density.dim(),
                    got: p.out_dim(),
                });
            }
        }
        let categorical = matches!(density, LatentDensity::ClassGmms(_));
        if categorical != prior.is_categorical() {
            return Err(Error::InvalidArgument(
                "class mixtures need a categorical prior and flows a continuous one".into(),
            ));
        }
        Ok(Self { pca, density, prior })
    }

    /// Width of the feature rows the model accepts.
    pub fn input_dim(&self) -> usize {
        self.pca.as_ref().map_or(self.density.dim(), |p| p.input_dim())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut sections: Vec<(SectionTag, Vec<u8>)> = Vec::new();
        if let Some(p) = &self.pca {
            sections.push((SectionTag::Pca, encode_pca(p)));
        }
        match &self.density {
            LatentDensity::ClassGmms(g) => sections.push((SectionTag::ClassGmms, encode_gmms(g))),
            LatentDensity::Flow(f) => sections.push((SectionTag::Flow, encode_flow(f))),
        }
        sections.push((SectionTag::Prior, encode_prior(&self.prior)));

        let mut w = ByteWriter::new();
        w.bytes(MODEL_MAGIC);
        w.u16(MODEL_VERSION);
        w.u16(sections.len() as u16);
        for (tag, payload) in sections {
            w.u8(tag as u8);
            w.u64(payload.len() as u64);
            w.u32(crc32fast::hash(&payload));
            w.bytes(&payload);
        }
        w.into_inner()
    }

    /// Decodes a model file image; `path` only labels errors.
    pub fn decode(bytes: &[u8], path: &str) -> Result<Self> {
        let mut r = ByteReader::new(bytes, path, 0);
        if r.take(4, "magic")? != MODEL_MAGIC {
            return Err(Error::Format {
                path: path.to_string(),
                offset: 0,
                message: "not a model file (bad magic)".into(),
            });
        }
        let version = r.u16("version")?;
        if version != MODEL_VERSION {
            return Err(Error::Format {
                path: path.to_string(),
                offset: 4,
                message: format!("unsupported model file version {version}"),
            });
        }
        let count = r.u16("section count")?;
        let mut payloads: BTreeMap<SectionTag, (u64, &[u8])> = BTreeMap::new();
        for _ in 0..count {
            let at = r.offset();
            let raw_tag = r.u8("section tag")?;
            let tag = SectionTag::from_u8(raw_tag).ok_or_else(|| Error::Format {
                path: path.to_string(),
                offset: at,
                message: format!("unknown section tag {raw_tag}"),
            })?;
            let len = r.len("section", 1)?;
            let crc = r.u32("section checksum")?;
            let start = r.offset();
            let payload = r.take(len, tag.name())?;
            if crc32fast::hash(payload) != crc {
                return Err(Error::Format {
                    path: path.to_string(),
                    offset: start,
                    message: format!("checksum mismatch in {} section", tag.name()),
                });
            }
            if payloads.insert(tag, (start, payload)).is_some() {
                return Err(Error::Format {
                    path: path.to_string(),
                    offset: at,
                    message: format!("duplicate {} section", tag.name()),
                });
            }
        }
        r.finish("the last section")?;

        let section = |tag: SectionTag| payloads.get(&tag).map(|&(start, p)| ByteReader::new(p, path, start));
        let pca = section(SectionTag::Pca).map(|mut s| decode_pca(&mut s)).transpose()?;
        let gmms = section(SectionTag::ClassGmms).map(|mut s| decode_gmms(&mut s)).transpose()?;
        let flow = section(SectionTag::Flow).map(|mut s| decode_flow(&mut s)).transpose()?;
        let prior = section(SectionTag::Prior)
            .map(|mut s| decode_prior(&mut s))
            .transpose()?
            .ok_or_else(|| r.error("model file has no prior section"))?;
        let density = match (gmms, flow) {
            (Some(g), None) => LatentDensity::ClassGmms(g),
            (None, Some(f)) => LatentDensity::Flow(f),
            (None, None) => return Err(r.error("model file has no density section")),
            (Some(_), Some(_)) => return Err(r.error("model file holds both a mixture and a flow section")),
        };
        Self::new(pca, density, prior).map_err(|e| r.error(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        Self::decode(&bytes, &path.display().to_string())
    }
}

/// Wraps a constructor error with the position of the value it came from.
fn at<T>(r: &ByteReader, res: Result<T>) -> Result<T> {
    res.map_err(|e| r.error(e.to_string()))
}

fn encode_pca(p: &PcaModel) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.f64s(&p.mean);
    w.matrix(&p.basis);
    w.f64s(&p.eigenvalues);
    w.u8(p.whiten as u8);
    w.into_inner()
}

fn decode_pca(r: &mut ByteReader) -> Result<PcaModel> {
    let mean = r.f64s("pca mean")?;
    let basis = r.matrix("pca basis")?;
    let eigenvalues = r.f64s("pca eigenvalues")?;
    let whiten = r.u8("pca whitening flag")? != 0;
    r.finish("pca section")?;
    if basis.rows() != mean.len() || basis.cols() != eigenvalues.len() || basis.cols() == 0 {
        return Err(r.error("pca section shapes disagree"));
    }
    Ok(PcaModel {
        mean,
        basis,
        eigenvalues,
        whiten,
    })
}

fn encode_gmms(g: &ClassConditionalGmm) -> Vec<u8> {
    let mut w = ByteWriter::new();
    let classes: Vec<_> = g.iter().collect();
    w.len(classes.len());
    for (class, gmm) in classes {
        w.u32(class);
        w.len(gmm.components().len());
        for c in gmm.components() {
            w.f64(c.log_weight);
            w.f64s(&c.mean);
            w.matrix(c.cov_chol.lower());
        }
    }
    w.into_inner()
}

fn decode_gmms(r: &mut ByteReader) -> Result<ClassConditionalGmm> {
    let n_classes = r.len("class count", 4)?;
    let mut per_class = BTreeMap::new();
    for _ in 0..n_classes {
        let class = r.u32("class id")?;
        let n_comp = r.len("component count", 8)?;
        let mut comps = Vec::with_capacity(n_comp);
        for _ in 0..n_comp {
            let log_weight = r.f64("component weight")?;
            let mean = r.f64s("component mean")?;
            let lower = r.matrix("covariance factor")?;
            let cov_chol = at(r, CholeskyFactor::from_lower(lower))?;
            comps.push(GaussianComponent {
                log_weight,
                mean,
                cov_chol,
            });
        }
        let gmm = at(r, Gmm::new(comps))?;
        if per_class.insert(class, gmm).is_some() {
            return Err(r.error(format!("class {class} stored twice")));
        }
    }
    r.finish("class_gmms section")?;
    at(r, ClassConditionalGmm::new(per_class))
}

fn encode_mlp(w: &mut ByteWriter, m: &Mlp) {
    w.len(m.weights().len());
    for (wt, b) in m.weights().iter().zip(m.biases()) {
        w.matrix(wt);
        w.f64s(b);
    }
}

fn decode_mlp(r: &mut ByteReader) -> Result<Mlp> {
    let n = r.len("layer count", 16)?;
    let mut weights = Vec::with_capacity(n);
    let mut biases = Vec::with_capacity(n);
    for _ in 0..n {
        weights.push(r.matrix("weights")?);
        biases.push(r.f64s("biases")?);
    }
    at(r, Mlp::from_parts(weights, biases))
}

fn encode_flow(f: &ConditionalFlow) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.len(f.layers().len());
    for layer in f.layers() {
        w.len(layer.dim());
        w.f64(layer.scale_clamp());
        encode_mlp(&mut w, &layer.scale_net);
        encode_mlp(&mut w, &layer.translate_net);
        encode_mlp(&mut w, &layer.cond_net);
    }
    w.into_inner()
}

fn decode_flow(r: &mut ByteReader) -> Result<ConditionalFlow> {
    let n = r.len("coupling layer count", 16)?;
    let mut layers = Vec::with_capacity(n);
    for index in 0..n {
        let dim = r.len("flow dimension", 0)?;
        let clamp = r.f64("scale clamp")?;
        let scale = decode_mlp(r)?;
        let translate = decode_mlp(r)?;
        let cond = decode_mlp(r)?;
        layers.push(at(r, CouplingLayer::from_parts(dim, index, scale, translate, cond, clamp))?);
    }
    r.finish("flow section")?;
    at(r, ConditionalFlow::from_layers(layers))
}

fn encode_prior(p: &OutputPrior) -> Vec<u8> {
    let mut w = ByteWriter::new();
    match p {
        OutputPrior::Categorical { classes, log_probs } => {
            w.u8(0);
            w.len(classes.len());
            for (&c, &lp) in classes.iter().zip(log_probs) {
                w.u32(c);
                w.f64(lp);
            }
        }
        OutputPrior::Uniform { lo, hi } => {
            w.u8(1);
            w.f64(*lo);
            w.f64(*hi);
        }
        OutputPrior::BetaPrime { alpha, beta } => {
            w.u8(2);
            w.f64(*alpha);
            w.f64(*beta);
        }
        OutputPrior::Histogram { edges, log_densities } => {
            w.u8(3);
            w.f64s(edges);
            w.f64s(log_densities);
        }
    }
    w.into_inner()
}

fn decode_prior(r: &mut ByteReader) -> Result<OutputPrior> {
    let at_kind = r.offset();
    let prior = match r.u8("prior kind")? {
        0 => {
            let n = r.len("prior class count", 12)?;
            let mut classes = Vec::with_capacity(n);
            let mut log_probs = Vec::with_capacity(n);
            for _ in 0..n {
                classes.push(r.u32("prior class")?);
                log_probs.push(r.f64("prior log-probability")?);
            }
            if n == 0 || classes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(r.error("categorical prior classes must be non-empty and increasing"));
            }
            OutputPrior::Categorical { classes, log_probs }
        }
        1 => {
            let (lo, hi) = (r.f64("uniform lower bound")?, r.f64("uniform upper bound")?);
            at(r, OutputPrior::uniform(lo, hi))?
        }
        2 => {
            let (a, b) = (r.f64("beta-prime alpha")?, r.f64("beta-prime beta")?);
            at(r, OutputPrior::beta_prime(a, b))?
        }
        3 => {
            let edges = r.f64s("histogram edges")?;
            let log_densities = r.f64s("histogram densities")?;
            if edges.len() != log_densities.len() + 1 || log_densities.is_empty() {
                return Err(r.error("histogram edges and bins disagree"));
            }
            OutputPrior::Histogram { edges, log_densities }
        }
        k => {
            return Err(r.error_at(at_kind, format!("unknown prior kind {k}")))
        }
    };
    r.finish("prior section")?;
    Ok(prior)
}
