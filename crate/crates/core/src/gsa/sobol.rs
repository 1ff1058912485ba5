//! Sobol' low-discrepancy sequence (gray-code order, 32-bit) from bundled
//! Joe–Kuo direction numbers, with optional linear matrix scrambling plus a
//! digital shift.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const BITS: usize = 32;
const SCALE: f64 = 1.0 / 4_294_967_296.0; // 2^-32

static TABLE: &str = include_str!("../../assets/joe_kuo_d64.txt");

struct Primitive {
    s: usize,
    a: u32,
    m: Vec<u32>,
}

fn primitives() -> &'static [Primitive] {
    static PARSED: OnceLock<Vec<Primitive>> = OnceLock::new();
    PARSED.get_or_init(|| {
        TABLE
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let f: Vec<u32> = l
                    .split_whitespace()
                    .map(|t| t.parse().expect("direction-number table is numeric"))
                    .collect();
                let s = f[1] as usize;
                assert_eq!(f.len(), 3 + s, "malformed direction-number row for dimension {}", f[0]);
                Primitive {
                    s,
                    a: f[2],
                    m: f[3..].to_vec(),
                }
            })
            .collect()
    })
}

/// Largest supported dimension.
pub fn max_dimension() -> usize {
    primitives().len() + 1
}

/// Direction numbers `v_k`, `k < 32`, of dimension `dim` (0-based), scaled
/// so bit 31 is the first binary digit.
fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let p = &primitives()[dim - 1];
    let s = p.s;
    for k in 0..s.min(BITS) {
        v[k] = p.m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (p.a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// Applies a random lower-triangular binary matrix (unit diagonal) to the
/// digits of every direction number.
fn linear_matrix_scramble(v: &mut [u32; BITS], rng: &mut ChaCha8Rng) {
    // Row r of the matrix acts on digit r (bit 31 - r); only digits j <= r mix in.
    let rows: Vec<u32> = (0..BITS)
        .map(|r| {
            let below: u32 = if r == 0 { 0 } else { rng.random::<u32>() >> (32 - r) };
            // bits for digits 0..r, with digit j at position (31 - j)
            let mut row = 1u32 << (31 - r);
            for j in 0..r {
                if (below >> j) & 1 == 1 {
                    row |= 1 << (31 - j);
                }
            }
            row
        })
        .collect();
    for vk in v.iter_mut() {
        let mut out = 0u32;
        for (r, row) in rows.iter().enumerate() {
            if (row & *vk).count_ones() & 1 == 1 {
                out |= 1 << (31 - r);
            }
        }
        *vk = out;
    }
}

/// Incremental Sobol' generator over `dims` dimensions.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    v: Vec<[u32; BITS]>,
    x: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    /// Unscrambled sequence starting at the origin.
    pub fn new(dims: usize) -> Result<Self> {
        Self::build(dims, None)
    }

    /// Scrambled sequence; the same seed gives the same scramble.
    pub fn scrambled(dims: usize, seed: u64) -> Result<Self> {
        Self::build(dims, Some(seed))
    }

    fn build(dims: usize, seed: Option<u64>) -> Result<Self> {
        let max = max_dimension();
        if dims < 1 || dims > max {
            return Err(Error::Dimension { requested: dims, max });
        }
        let mut v: Vec<[u32; BITS]> = (0..dims).map(direction_numbers).collect();
        let mut x = vec![0u32; dims];
        if let Some(seed) = seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for vd in v.iter_mut() {
                linear_matrix_scramble(vd, &mut rng);
            }
            for xd in x.iter_mut() {
                *xd = rng.random();
            }
        }
        Ok(Self { v, x, index: 0 })
    }

    pub fn dims(&self) -> usize {
        self.v.len()
    }

    /// Writes the next point into `out` and advances.
    pub fn next_into(&mut self, out: &mut [f64]) -> Result<()> {
        if self.index >= 1u64 << BITS {
            return Err(Error::Config("Sobol' sequence exhausted (2^32 points)".into()));
        }
        for (o, &xd) in out.iter_mut().zip(&self.x) {
            *o = xd as f64 * SCALE;
        }
        let c = self.index.trailing_ones() as usize;
        if c < BITS {
            for (xd, vd) in self.x.iter_mut().zip(&self.v) {
                *xd ^= vd[c];
            }
        }
        self.index += 1;
        Ok(())
    }

    /// Skips `n` points.
    pub fn skip(&mut self, n: u64) -> Result<()> {
        let mut buf = vec![0.0; self.dims()];
        for _ in 0..n {
            self.next_into(&mut buf)?;
        }
        Ok(())
    }
}

/// First `n` points of the `k`-dimensional sequence, starting at the
/// origin, row-major. `scramble_seed` enables scrambling.
pub fn sobol_points(n: usize, k: usize, scramble_seed: Option<u64>) -> Result<Vec<Vec<f64>>> {
    if n < 1 {
        return Err(Error::Config("need at least one Sobol' point".into()));
    }
    let mut seq = SobolSequence::build(k, scramble_seed)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![0.0; k];
        seq.next_into(&mut row)?;
        rows.push(row);
    }
    Ok(rows)
}
