//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "LSVM1"
//! u64 class count k | u64 dimension d | f64 gamma
//! k x i64 class ids (ascending)
//! per pair (i < j, lexicographic):
//!     u64 support-vector count m | f64 bias
//!     m x f64 dual coefficients
//!     m x d x f64 support vectors, row-major
//! ```

use std::io::{Read, Write};

use super::multiclass::SvmModel;
use super::smo::BinarySvm;
use super::SvmError;

pub const MODEL_MAGIC: &[u8; 5] = b"LSVM1";

pub fn write_model<W: Write>(model: &SvmModel, mut out: W) -> Result<(), SvmError> {
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&(model.classes.len() as u64).to_le_bytes())?;
    out.write_all(&(model.dim as u64).to_le_bytes())?;
    out.write_all(&model.gamma.to_le_bytes())?;
    for c in &model.classes {
        out.write_all(&c.to_le_bytes())?;
    }
    for m in &model.pairs {
        out.write_all(&(m.dual_coefs.len() as u64).to_le_bytes())?;
        out.write_all(&m.bias.to_le_bytes())?;
        for c in &m.dual_coefs {
            out.write_all(&c.to_le_bytes())?;
        }
        for sv in &m.support_vectors {
            for v in sv {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], SvmError> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => SvmError::Format("truncated file".into()),
            _ => SvmError::Io(e),
        })?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64, SvmError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64, SvmError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn count(&mut self, what: &str, limit: u64) -> Result<usize, SvmError> {
        let v = self.u64()?;
        if v > limit {
            return Err(SvmError::Format(format!("{what} {v} exceeds {limit}")));
        }
        Ok(v as usize)
    }
}

pub fn read_model<R: Read>(input: R) -> Result<SvmModel, SvmError> {
    let mut r = Reader { inner: input };
    if &r.bytes::<5>()? != MODEL_MAGIC {
        return Err(SvmError::Format("bad magic".into()));
    }
    let k = r.count("class count", 1 << 16)?;
    if k < 2 {
        return Err(SvmError::Format(format!("class count {k} below 2")));
    }
    let dim = r.count("dimension", 1 << 32)?;
    let gamma = r.f64()?;
    let classes = (0..k).map(|_| Ok(i64::from_le_bytes(r.bytes()?))).collect::<Result<Vec<_>, SvmError>>()?;
    if classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SvmError::Format("class ids not strictly ascending".into()));
    }
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for _ in 0..k * (k - 1) / 2 {
        let m = r.count("support-vector count", 1 << 32)?;
        let bias = r.f64()?;
        let dual_coefs = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let support_vectors = (0..m)
            .map(|_| (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        pairs.push(BinarySvm { support_vectors, dual_coefs, bias, gamma, converged: true });
    }
    Ok(SvmModel { classes, dim, gamma, pairs })
}
