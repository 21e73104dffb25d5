use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c64_to, Real};

use super::{Mpo, SubspaceMps, Tensor3};

pub const FORMAT_NAME: &str = "groundspace-tensor-network";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorFile {
    /// `[left, physical, right]`.
    pub shape: [usize; 3],
    /// Row-major entries as `[re, im]`.
    pub data: Vec<[f64; 2]>,
}

/// Lattice metadata carried alongside a serialized network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeInfo {
    /// Columns of the stored orientation.
    pub width: usize,
    pub height: usize,
    pub q: usize,
    /// The stored lattice is the transpose of the one given as input.
    #[serde(default)]
    pub transposed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpsFile {
    pub format: String,
    pub version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeInfo>,
    pub phys_dims: Vec<usize>,
    pub degeneracy: usize,
    pub isometric: bool,
    pub tensors: Vec<TensorFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpoFile {
    pub format: String,
    pub version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeInfo>,
    pub out_dims: Vec<usize>,
    pub in_dims: Vec<usize>,
    pub tensors: Vec<TensorFile>,
}

fn encode<R: Real>(t: &Tensor3<R>) -> TensorFile {
    TensorFile {
        shape: [t.l, t.p, t.r],
        data: t.data.iter().map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()]).collect(),
    }
}

fn decode<R: Real>(t: &TensorFile) -> Result<Tensor3<R>> {
    let [l, p, r] = t.shape;
    if t.data.len() != l * p * r {
        return Err(Error::Parse(format!(
            "tensor of shape {:?} has {} entries",
            t.shape,
            t.data.len()
        )));
    }
    Ok(Tensor3::from_data(l, p, r, t.data.iter().map(|z| c64_to(z[0], z[1])).collect()))
}

fn check_header(format: &str, version: u32, kind: &str, want: &str) -> Result<()> {
    if format != FORMAT_NAME {
        return Err(Error::Parse(format!("unknown format {format:?}")));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported version {version}")));
    }
    if kind != want {
        return Err(Error::Parse(format!("expected kind {want:?}, found {kind:?}")));
    }
    Ok(())
}

impl<R: Real> SubspaceMps<R> {
    pub fn to_file(&self, lattice: Option<LatticeInfo>) -> MpsFile {
        MpsFile {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            kind: "subspace-mps".into(),
            lattice,
            phys_dims: self.phys_dims().to_vec(),
            degeneracy: self.degeneracy(),
            isometric: self.is_isometric(),
            tensors: self.tensors().iter().map(encode).collect(),
        }
    }

    pub fn from_file(file: &MpsFile) -> Result<Self> {
        check_header(&file.format, file.version, &file.kind, "subspace-mps")?;
        let tensors = file.tensors.iter().map(decode).collect::<Result<Vec<_>>>()?;
        let mps = SubspaceMps::new(tensors, file.isometric)?;
        if mps.phys_dims() != file.phys_dims.as_slice() || mps.degeneracy() != file.degeneracy {
            return Err(Error::Parse("header disagrees with tensor shapes".into()));
        }
        Ok(mps)
    }

    pub fn write_json(&self, path: impl AsRef<Path>, lattice: Option<LatticeInfo>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_file(lattice))?)?;
        Ok(())
    }

    /// Reads a subspace file, returning the lattice metadata if present.
    pub fn read_json(path: impl AsRef<Path>) -> Result<(Self, Option<LatticeInfo>)> {
        let file: MpsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok((Self::from_file(&file)?, file.lattice))
    }
}

impl<R: Real> Mpo<R> {
    pub fn to_file(&self, lattice: Option<LatticeInfo>) -> MpoFile {
        MpoFile {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            kind: "mpo".into(),
            lattice,
            out_dims: self.out_dims().to_vec(),
            in_dims: self.in_dims().to_vec(),
            tensors: self.tensors().iter().map(encode).collect(),
        }
    }

    pub fn from_file(file: &MpoFile) -> Result<Self> {
        check_header(&file.format, file.version, &file.kind, "mpo")?;
        let tensors = file.tensors.iter().map(decode).collect::<Result<Vec<_>>>()?;
        Mpo::new(tensors, file.out_dims.clone(), file.in_dims.clone())
    }

    pub fn write_json(&self, path: impl AsRef<Path>, lattice: Option<LatticeInfo>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_file(lattice))?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let file: MpoFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(&file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{CMat, C};

    #[test]
    fn mps_file_round_trip() {
        let y = SubspaceMps::<f64>::basis_state(&[1, 2], &[2, 3]).extend(2);
        let f = y.to_file(Some(LatticeInfo { width: 3, height: 1, q: 2, transposed: false }));
        let text = serde_json::to_string(&f).unwrap();
        let back = SubspaceMps::<f64>::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, y);
    }

    #[test]
    fn mpo_file_round_trip_and_bad_header() {
        let m = CMat::<f64>::from_fn(4, 4, |i, j| C::new((i + 2 * j) as f64, i as f64 - j as f64));
        let mpo = Mpo::from_dense(&m, &[2, 2], 0.0).unwrap();
        let mut f = mpo.to_file(None);
        let back = Mpo::<f64>::from_file(&f).unwrap();
        assert_eq!(back, mpo);
        f.version = 99;
        assert!(matches!(Mpo::<f64>::from_file(&f), Err(Error::Parse(_))));
    }
}
