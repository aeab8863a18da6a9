//! Binary checkpoints of `(alpha, phi, C)`.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size        field
//! 0       8           magic "HOPFCKPT"
//! 8       4           version (u32)
//! 12      4           charge intent (i32)
//! 16      8           points per axis N (u64)
//! 24      8           spacing h (f64)
//! 32      24          origin (3 x f64)
//! 56      24          vacuum (3 x f64)
//! 80      8           alpha (f64)
//! 88      24 N^3      phi, site-major, x fastest (3 x f64 per site)
//! ...     24 N^3      C, same order
//! ...     32          SHA-256 of every preceding byte
//! ```
//!
//! Field values are stored verbatim so a round trip is bit-exact.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{DirectorField, LatticeSpec, OneFormField};
use crate::vec3::Vec3;

pub const MAGIC: [u8; 8] = *b"HOPFCKPT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 88;
const DIGEST_LEN: usize = 32;

/// A saved state of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub alpha: f64,
    /// Hopf charge the run was seeded with; informational only.
    pub charge_intent: i32,
    pub phi: DirectorField,
    pub c: OneFormField,
}

impl Checkpoint {
    pub fn new(alpha: f64, charge_intent: i32, phi: DirectorField, c: OneFormField) -> Result<Self> {
        if phi.spec() != c.spec() {
            return Err(Error::ShapeMismatch { expected: phi.spec().n_points, found: c.spec().n_points });
        }
        Ok(Checkpoint { alpha, charge_intent, phi, c })
    }

    pub fn spec(&self) -> &LatticeSpec {
        self.phi.spec()
    }

    /// Size in bytes of the file for an `n`-point lattice.
    pub fn file_len(n: usize) -> u64 {
        HEADER_LEN + 2 * 24 * (n as u64).pow(3) + DIGEST_LEN as u64
    }

    pub fn write_to<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = HashingWriter { inner: w, hasher: Sha256::new() };
        let spec = self.spec();
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.charge_intent.to_le_bytes())?;
        w.write_all(&(spec.n_points as u64).to_le_bytes())?;
        w.write_all(&spec.spacing.to_le_bytes())?;
        write_vec(&mut w, spec.origin)?;
        write_vec(&mut w, self.phi.vacuum())?;
        w.write_all(&self.alpha.to_le_bytes())?;
        for block in [self.phi.values(), self.c.values()] {
            for &v in block {
                write_vec(&mut w, v)?;
            }
        }
        let digest = w.hasher.finalize();
        w.inner.write_all(&digest)?;
        w.inner.flush()
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = CheckedReader { inner: r, hasher: Sha256::new(), offset: 0 };
        let magic: [u8; 8] = r.bytes()?;
        if magic != MAGIC {
            return Err(Error::Integrity { offset: 0, reason: "bad magic".into() });
        }
        let version = u32::from_le_bytes(r.bytes()?);
        if version != VERSION {
            return Err(Error::Integrity { offset: 8, reason: format!("unsupported version {version}") });
        }
        let charge_intent = i32::from_le_bytes(r.bytes()?);
        let n = u64::from_le_bytes(r.bytes()?);
        let spacing = r.f64()?;
        let origin = r.vec()?;
        let vacuum = r.vec()?;
        let alpha = r.f64()?;
        let spec = usize::try_from(n)
            .ok()
            .and_then(|n| LatticeSpec::new(n, spacing, origin).ok())
            .ok_or_else(|| Error::Integrity { offset: 16, reason: format!("invalid lattice header n={n} h={spacing}") })?;

        let sites = spec.num_sites();
        let mut blocks = [Vec::with_capacity(sites), Vec::with_capacity(sites)];
        for block in blocks.iter_mut() {
            for _ in 0..sites {
                block.push(r.vec()?);
            }
        }
        let digest_offset = r.offset;
        let expected = r.hasher.clone().finalize();
        let mut stored = [0u8; DIGEST_LEN];
        r.inner.read_exact(&mut stored).map_err(|e| truncated(e, digest_offset))?;
        if stored[..] != expected[..] {
            return Err(Error::Integrity { offset: digest_offset, reason: "checksum mismatch".into() });
        }
        let mut extra = [0u8; 1];
        if r.inner.read(&mut extra)? != 0 {
            return Err(Error::Integrity { offset: digest_offset + DIGEST_LEN as u64, reason: "trailing bytes".into() });
        }

        let [phi_values, c_values] = blocks;
        let phi = DirectorField::from_raw(spec, phi_values, vacuum)?;
        let c = OneFormField::from_raw(spec, c_values)?;
        Ok(Checkpoint { alpha, charge_intent, phi, c })
    }

    /// Writes to a temporary sibling and renames, so an interrupted save
    /// never clobbers the previous checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let file = File::create(&tmp)?;
            self.write_to(BufWriter::new(file))?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Loads and insists on the given lattice.
    pub fn load_for(path: &Path, spec: &LatticeSpec) -> Result<Self> {
        let ck = Self::load(path)?;
        if ck.spec().n_points != spec.n_points {
            return Err(Error::ShapeMismatch { expected: spec.n_points, found: ck.spec().n_points });
        }
        if ck.spec() != spec {
            return Err(Error::Precondition(format!(
                "checkpoint lattice (h={}, origin={:?}) differs from the configured one (h={}, origin={:?})",
                ck.spec().spacing,
                ck.spec().origin,
                spec.spacing,
                spec.origin
            )));
        }
        Ok(ck)
    }
}

fn write_vec<W: Write>(w: &mut W, v: Vec3) -> io::Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn truncated(e: io::Error, offset: u64) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Integrity { offset, reason: "unexpected end of file".into() }
    } else {
        Error::Io(e)
    }
}

struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Reader that hashes what it reads and knows where it is.
struct CheckedReader<R> {
    inner: R,
    hasher: Sha256,
    offset: u64,
}

impl<R: Read> CheckedReader<R> {
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut buf = [0u8; K];
        self.inner.read_exact(&mut buf).map_err(|e| truncated(e, self.offset))?;
        self.hasher.update(buf);
        self.offset += K as u64;
        Ok(buf)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn vec(&mut self) -> Result<Vec3> {
        Ok([self.f64()?, self.f64()?, self.f64()?])
    }
}
