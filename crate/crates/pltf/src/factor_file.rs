//! Binary dump of fitted factors and posterior sample sets.
//!
//! All integers are little-endian `u64`, all reals little-endian IEEE-754
//! `f64`:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PLTF"
//! 4       1     version (1)
//! 5       1     kind: 0 = point estimate, 1 = sample set
//! 6       1     link: 0 = identity, 1 = logistic
//! 7       1     reserved, zero
//! 8       8     N (objects)
//! 16      8     T (relations)
//! 24      8     D (rank)
//! 32      8     K (draws; 1 for a point estimate)
//! 40      ...   K draws, each: alpha, U (N*D), V (N*D), R (T*D), row-major
//! ...     8     L (trace length)
//! ...     8*L   trace: optimizer objective or per-sweep log-likelihood
//! ```
//!
//! The file must end exactly after the trace.

use std::path::Path;

use pltf_core::bayes::SampleSet;
use pltf_core::{FactorMatrix, LatentFactors};

use crate::fsutil::{read_bytes, write_atomic};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PLTF";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpKind {
    PointEstimate,
    SampleSet,
}

/// Decoded contents of a factor file.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorDump {
    pub kind: DumpKind,
    pub logistic: bool,
    pub draws: Vec<LatentFactors>,
    pub trace: Vec<f64>,
}

impl FactorDump {
    pub fn point(factors: LatentFactors, logistic: bool, trace: Vec<f64>) -> Self {
        Self {
            kind: DumpKind::PointEstimate,
            logistic,
            draws: vec![factors],
            trace,
        }
    }

    pub fn samples(samples: &SampleSet, logistic: bool) -> Self {
        Self {
            kind: DumpKind::SampleSet,
            logistic,
            draws: samples.draws().to_vec(),
            trace: samples.log_likelihoods().to_vec(),
        }
    }

    /// The single draw of a point estimate.
    pub fn into_factors(self) -> Result<LatentFactors> {
        match self.kind {
            DumpKind::PointEstimate => Ok(self
                .draws
                .into_iter()
                .next()
                .expect("decoded with one draw")),
            DumpKind::SampleSet => Err(Error::Config(
                "expected a point-estimate factor file, found a sample set".into(),
            )),
        }
    }

    pub fn into_sample_set(self) -> Result<SampleSet> {
        Ok(SampleSet::new(self.draws, self.trace)?)
    }

    pub fn encode(&self) -> Vec<u8> {
        let first = &self.draws[0];
        let (n, t, d) = (first.n_objects(), first.n_relations(), first.rank());
        let per_draw = 1 + (2 * n + t) * d;
        let mut out = Vec::with_capacity(
            HEADER_LEN + 8 * (self.draws.len() * per_draw + 1 + self.trace.len()),
        );
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(match self.kind {
            DumpKind::PointEstimate => 0,
            DumpKind::SampleSet => 1,
        });
        out.push(u8::from(self.logistic));
        out.push(0);
        for v in [n, t, d, self.draws.len()] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for draw in &self.draws {
            out.extend_from_slice(&draw.alpha().to_le_bytes());
            for m in [draw.u(), draw.v(), draw.r()] {
                for x in m.as_slice() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out.extend_from_slice(&(self.trace.len() as u64).to_le_bytes());
        for x in &self.trace {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    /// Decodes a dump; `origin` names the source in error messages.
    pub fn decode(bytes: &[u8], origin: &Path) -> Result<Self> {
        let fail = |m: String| Error::format(origin, m);
        if bytes.len() < 6 {
            return Err(fail(format!(
                "file is {} bytes, too short for a header",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(fail("bad magic, not a factor file".into()));
        }
        if bytes[4] != VERSION {
            return Err(fail(format!("unsupported version {}", bytes[4])));
        }
        if bytes.len() < HEADER_LEN {
            return Err(fail(format!(
                "truncated header ({} of {HEADER_LEN} bytes)",
                bytes.len()
            )));
        }
        let kind = match bytes[5] {
            0 => DumpKind::PointEstimate,
            1 => DumpKind::SampleSet,
            k => return Err(fail(format!("unknown kind byte {k}"))),
        };
        let logistic = match bytes[6] {
            0 => false,
            1 => true,
            l => return Err(fail(format!("unknown link byte {l}"))),
        };
        let mut r = Reader { bytes, pos: 8 };
        let n = r.len()?;
        let t = r.len()?;
        let d = r.len()?;
        let k = r.len()?;
        if n == 0 || t == 0 || d == 0 || k == 0 {
            return Err(fail(format!(
                "zero dimension in header: N={n} T={t} D={d} K={k}"
            )));
        }
        if kind == DumpKind::PointEstimate && k != 1 {
            return Err(fail(format!("point estimate with {k} draws")));
        }
        let per_draw = (2 * n + t)
            .checked_mul(d)
            .and_then(|x| x.checked_add(1))
            .and_then(|x| x.checked_mul(k))
            .and_then(|x| x.checked_mul(8))
            .ok_or_else(|| fail("header dimensions overflow".into()))?;
        if bytes.len() < HEADER_LEN + per_draw + 8 {
            return Err(fail(format!(
                "truncated: {} bytes, header announces at least {}",
                bytes.len(),
                HEADER_LEN + per_draw + 8
            )));
        }
        let mut draws = Vec::with_capacity(k);
        for _ in 0..k {
            let alpha = r.f64();
            let u = r.matrix(n, d);
            let v = r.matrix(n, d);
            let rr = r.matrix(t, d);
            draws.push(LatentFactors::new(u, v, rr, alpha).map_err(|e| fail(e.to_string()))?);
        }
        let l = r.len()?;
        let expected = HEADER_LEN
            + per_draw
            + 8
            + l.checked_mul(8)
                .ok_or_else(|| fail("trace length overflows".into()))?;
        if bytes.len() != expected {
            return Err(fail(format!(
                "length {} does not match the {expected} bytes the header announces",
                bytes.len()
            )));
        }
        let trace = (0..l).map(|_| r.f64()).collect();
        Ok(Self {
            kind,
            logistic,
            draws,
            trace,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u64(&mut self) -> u64 {
        let v = u64::from_le_bytes(
            self.bytes[self.pos..self.pos + 8]
                .try_into()
                .expect("8 bytes"),
        );
        self.pos += 8;
        v
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64();
        usize::try_from(v).map_err(|_| Error::Config(format!("length {v} does not fit in memory")))
    }

    fn f64(&mut self) -> f64 {
        f64::from_bits(self.u64())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> FactorMatrix {
        let data = (0..rows * cols).map(|_| self.f64()).collect();
        FactorMatrix::from_vec(rows, cols, data).expect("sized from header")
    }
}

pub fn save_factor_file(dump: &FactorDump, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &dump.encode())
}

pub fn load_factor_file(path: impl AsRef<Path>) -> Result<FactorDump> {
    let path = path.as_ref();
    FactorDump::decode(&read_bytes(path)?, path)
}
