use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{Provenance, Signal};
use crate::synchrosqueeze::{TfDistribution, TfMeta, VAxis};
use crate::wavepacket::BLattice;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    /// Complex, real part then imaginary part, two f64 each.
    C128,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::C128 => 16,
            Dtype::F64 => 8,
        }
    }
}

/// One axis of the payload. Uniform axes give `start` and `step`; irregular
/// ones list their coordinates in `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisDesc {
    pub name: String,
    pub unit: String,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl AxisDesc {
    pub fn uniform(name: &str, unit: &str, count: usize, start: f64, step: f64) -> Self {
        AxisDesc {
            name: name.into(),
            unit: unit.into(),
            count,
            start: Some(start),
            step: Some(step),
            values: None,
        }
    }

    pub fn listed(name: &str, unit: &str, values: Vec<f64>) -> Self {
        AxisDesc {
            name: name.into(),
            unit: unit.into(),
            count: values.len(),
            start: None,
            step: None,
            values: Some(values),
        }
    }
}

/// Sidecar header. `content` says how to interpret the payload
/// (`"signal"` or `"tf-distribution"`); `attrs` holds content-specific
/// fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub format_version: u32,
    pub crate_version: String,
    pub content: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub axes: Vec<AxisDesc>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    #[serde(default)]
    pub attrs: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    C128(Vec<Complex64>),
    F64(Vec<f64>),
}

impl GridData {
    pub fn len(&self) -> usize {
        match self {
            GridData::C128(v) => v.len(),
            GridData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            GridData::C128(_) => Dtype::C128,
            GridData::F64(_) => Dtype::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub header: GridHeader,
    pub data: GridData,
}

/// `(sidecar, payload)` paths for a grid. A `.json` or `.bin` extension is
/// replaced; anything else is kept and extended.
pub fn grid_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("bin") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let mut json = stem.clone().into_os_string();
    json.push(".json");
    let mut bin = stem.into_os_string();
    bin.push(".bin");
    (json.into(), bin.into())
}

fn last_seed(p: &Provenance) -> Option<u64> {
    p.noise.last().map(|r| r.spec.seed)
}

impl GridFile {
    pub fn new(header: GridHeader, data: GridData) -> Result<Self> {
        let g = GridFile { header, data };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        let h = &self.header;
        if h.format_version != FORMAT_VERSION {
            return Err(Error::input(format!(
                "unsupported grid format version {} (expected {FORMAT_VERSION})",
                h.format_version
            )));
        }
        if h.dtype != self.data.dtype() {
            return Err(Error::input("header dtype does not match payload"));
        }
        let count: usize = h.shape.iter().product();
        if count != self.data.len() {
            return Err(Error::input(format!(
                "shape {:?} needs {count} values, payload has {}",
                h.shape,
                self.data.len()
            )));
        }
        if h.axes.len() != h.shape.len() || h.axes.iter().zip(&h.shape).any(|(a, &n)| a.count != n) {
            return Err(Error::input("axis descriptors do not match the shape"));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(PathBuf, PathBuf)> {
        self.check()?;
        let (json, bin) = grid_paths(path);
        let mut bytes = Vec::with_capacity(self.data.len() * self.header.dtype.size());
        match &self.data {
            GridData::C128(v) => {
                for z in v {
                    bytes.extend_from_slice(&z.re.to_le_bytes());
                    bytes.extend_from_slice(&z.im.to_le_bytes());
                }
            }
            GridData::F64(v) => {
                for x in v {
                    bytes.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        let mut text = serde_json::to_string_pretty(&self.header)?;
        text.push('\n');
        fs::write(&json, text)?;
        fs::write(&bin, bytes)?;
        Ok((json, bin))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (json, bin) = grid_paths(path);
        let header: GridHeader = serde_json::from_str(&fs::read_to_string(&json)?)?;
        let bytes = fs::read(&bin)?;
        let count: usize = header.shape.iter().product();
        if bytes.len() != count * header.dtype.size() {
            return Err(Error::input(format!(
                "{}: expected {} payload bytes, found {}",
                bin.display(),
                count * header.dtype.size(),
                bytes.len()
            )));
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        let data = match header.dtype {
            Dtype::C128 => GridData::C128(
                bytes
                    .chunks_exact(16)
                    .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
                    .collect(),
            ),
            Dtype::F64 => GridData::F64(bytes.chunks_exact(8).map(f).collect()),
        };
        GridFile::new(header, data)
    }

    pub fn from_signal(sig: &Signal) -> Result<Self> {
        let names = ["x1", "x2"];
        let axes = (0..sig.dim)
            .map(|d| AxisDesc::uniform(names[d], "1", sig.len, 0.0, 1.0 / sig.sample_rate))
            .collect();
        let mut attrs = serde_json::Map::new();
        attrs.insert("real".into(), sig.real.into());
        GridFile::new(
            GridHeader {
                format_version: FORMAT_VERSION,
                crate_version: crate::VERSION.into(),
                content: "signal".into(),
                dtype: Dtype::C128,
                shape: sig.shape(),
                axes,
                provenance: sig.provenance.clone(),
                seed: last_seed(&sig.provenance),
                attrs,
            },
            GridData::C128(sig.samples.clone()),
        )
    }

    pub fn to_signal(&self) -> Result<Signal> {
        self.expect_content("signal")?;
        let GridData::C128(samples) = &self.data else {
            return Err(Error::input("signal grid must be c128"));
        };
        let real = self.attr::<bool>("real")?;
        let prov = self.header.provenance.clone();
        match self.header.shape.as_slice() {
            [_] => Signal::new_1d(samples.clone(), real, prov),
            [n, m] if n == m => Signal::new_2d(*n, samples.clone(), real, prov),
            s => Err(Error::input(format!("signal grid must be n or n x n, got {s:?}"))),
        }
    }

    /// Stores a distribution. `source` is the provenance of the analysed
    /// signal, so the header is enough to regenerate the result.
    pub fn from_distribution(dist: &TfDistribution, source: &Provenance) -> Result<Self> {
        let mut axes: Vec<AxisDesc> = dist
            .v_axes
            .iter()
            .enumerate()
            .map(|(i, a)| AxisDesc::uniform(&format!("v{}", i + 1), "Hz", a.count(), a.min, a.width))
            .collect();
        let len = dist.lattice.len;
        axes.push(AxisDesc::uniform("x1", "1", len, 0.0, 1.0 / len as f64));
        if dist.t.ndim() == dist.v_axes.len() + 2 {
            let rows = dist.lattice.rows.iter().map(|&r| r as f64 / len as f64).collect();
            axes.push(AxisDesc::listed("x2", "1", rows));
        }
        let mut attrs = serde_json::Map::new();
        attrs.insert("meta".into(), serde_json::to_value(&dist.meta)?);
        attrs.insert("v_axes".into(), serde_json::to_value(&dist.v_axes)?);
        attrs.insert("lattice".into(), serde_json::to_value(&dist.lattice)?);
        attrs.insert("dropped".into(), dist.dropped.into());
        attrs.insert("energy".into(), dist.energy.into());
        GridFile::new(
            GridHeader {
                format_version: FORMAT_VERSION,
                crate_version: crate::VERSION.into(),
                content: "tf-distribution".into(),
                dtype: Dtype::F64,
                shape: dist.t.shape().to_vec(),
                axes,
                provenance: source.clone(),
                seed: dist.meta.seed.or_else(|| last_seed(source)),
                attrs,
            },
            GridData::F64(dist.t.iter().copied().collect()),
        )
    }

    pub fn to_distribution(&self) -> Result<TfDistribution> {
        self.expect_content("tf-distribution")?;
        let GridData::F64(values) = &self.data else {
            return Err(Error::input("distribution grid must be f64"));
        };
        let t = ArrayD::from_shape_vec(IxDyn(&self.header.shape), values.clone())
            .map_err(|e| Error::input(e.to_string()))?;
        Ok(TfDistribution {
            t,
            v_axes: self.attr::<Vec<VAxis>>("v_axes")?,
            lattice: self.attr::<BLattice>("lattice")?,
            meta: self.attr::<TfMeta>("meta")?,
            dropped: self.attr::<f64>("dropped")?,
            energy: self.attr::<f64>("energy")?,
        })
    }

    fn expect_content(&self, what: &str) -> Result<()> {
        if self.header.content != what {
            return Err(Error::input(format!(
                "expected a {what} grid, found {}",
                self.header.content
            )));
        }
        Ok(())
    }

    fn attr<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .header
            .attrs
            .get(key)
            .ok_or_else(|| Error::input(format!("grid header lacks attribute `{key}`")))?;
        Ok(serde_json::from_value(v.clone())?)
    }
}
