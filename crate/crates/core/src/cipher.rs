//! Logistic-map stream cipher, for teaching only.
//!
//! The keystream is the orbit of `x <- mu x (1 - x)` after a warmup, one
//! byte per iterate taken from the low byte of `floor(x * 2^32)`. Encryption
//! and decryption are the same XOR.
//!
//! This is not a secure cipher. Real-valued chaos is hard to reproduce
//! faithfully on finite-precision hardware, and the construction has had no
//! cryptographic security analysis. Keystreams are reproducible only where
//! doubles round to nearest-even without extended precision.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CipherError {
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("degenerate orbit at iterate {iterate}: x = {value}")]
    DegenerateOrbit { iterate: u64, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed container: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CipherError>;

pub const DEFAULT_WARMUP: u32 = 1000;
pub const MIN_WARMUP: u32 = 256;
/// Lower edge of the accepted parameter range (exclusive).
pub const MU_CHAOS_ONSET: f64 = 3.57;

/// Map parameter, initial condition and warmup length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosKey {
    mu: f64,
    x0: f64,
    warmup: u32,
}

impl ChaosKey {
    pub fn new(mu: f64, x0: f64, warmup: u32) -> Result<Self> {
        if !(mu > MU_CHAOS_ONSET && mu <= 4.0) {
            return Err(CipherError::InvalidKey(format!("mu must lie in (3.57, 4], got {mu}")));
        }
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(CipherError::InvalidKey(format!("x0 must lie in (0, 1), got {x0}")));
        }
        if x0 == 0.5 || x0 == 1.0 - 1.0 / mu {
            return Err(CipherError::InvalidKey(format!("x0 = {x0} lies on a short periodic orbit")));
        }
        if warmup < MIN_WARMUP {
            return Err(CipherError::InvalidKey(format!("warmup must be at least {MIN_WARMUP}, got {warmup}")));
        }
        Ok(Self { mu, x0, warmup })
    }

    /// Parses `"mu,x0"`, the form used by the `CHAOSCOPE_KEY` variable.
    pub fn parse(text: &str, warmup: u32) -> Result<Self> {
        let (mu, x0) =
            text.split_once(',').ok_or_else(|| CipherError::InvalidKey(format!("expected \"mu,x0\", got {text:?}")))?;
        let num =
            |s: &str| s.trim().parse::<f64>().map_err(|_| CipherError::InvalidKey(format!("not a number: {s:?}")));
        Self::new(num(mu)?, num(x0)?, warmup)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn warmup(&self) -> u32 {
        self.warmup
    }

    /// Same key with `x0` moved by `steps` units in the last place.
    pub fn nudge_x0(&self, steps: i64) -> Self {
        let mut x = self.x0;
        for _ in 0..steps.unsigned_abs() {
            x = if steps > 0 { x.next_up() } else { x.next_down() };
        }
        Self { x0: x, ..*self }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }
}

/// Low byte of the 32-bit fixed-point expansion of `x`.
pub fn extract_byte(x: f64) -> u8 {
    ((x * 4_294_967_296.0) as u64 & 0xff) as u8
}

/// Lazy keystream generator.
#[derive(Debug, Clone)]
pub struct Keystream {
    mu: f64,
    x: f64,
    iterate: u64,
}

impl Keystream {
    pub fn new(key: &ChaosKey) -> Result<Self> {
        let mut ks = Self { mu: key.mu, x: key.x0, iterate: 0 };
        for _ in 0..key.warmup {
            ks.advance()?;
        }
        Ok(ks)
    }

    fn advance(&mut self) -> Result<f64> {
        let next = self.mu * self.x * (1.0 - self.x);
        self.iterate += 1;
        if next <= 0.0 || next == self.x || !next.is_finite() {
            return Err(CipherError::DegenerateOrbit { iterate: self.iterate, value: next });
        }
        self.x = next;
        Ok(next)
    }

    pub fn next_byte(&mut self) -> Result<u8> {
        self.advance().map(extract_byte)
    }

    pub fn fill(&mut self, out: &mut [u8]) -> Result<()> {
        for b in out {
            *b = self.next_byte()?;
        }
        Ok(())
    }
}

pub fn keystream(key: &ChaosKey, n: usize) -> Result<Vec<u8>> {
    let mut out = vec![0u8; n];
    Keystream::new(key)?.fill(&mut out)?;
    Ok(out)
}

pub fn encrypt(key: &ChaosKey, plaintext: &[u8]) -> Result<Vec<u8>> {
    let mut ks = Keystream::new(key)?;
    plaintext.iter().map(|p| ks.next_byte().map(|k| p ^ k)).collect()
}

pub fn decrypt(key: &ChaosKey, ciphertext: &[u8]) -> Result<Vec<u8>> {
    encrypt(key, ciphertext)
}

/// Fraction of differing bits between two equal-length byte strings.
pub fn bit_difference(a: &[u8], b: &[u8]) -> f64 {
    assert_eq!(a.len(), b.len(), "bit_difference needs equal lengths");
    if a.is_empty() {
        return 0.0;
    }
    let diff: u64 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as u64).sum();
    diff as f64 / (8 * a.len()) as f64
}

/// Fraction of set bits.
pub fn ones_fraction(bytes: &[u8]) -> f64 {
    bit_difference(bytes, &vec![0u8; bytes.len()])
}

pub const MIN_AVALANCHE_BYTES: usize = 1024;
pub const MIN_AVALANCHE_TRIALS: usize = 8;

/// The `count` nearest keys above (`up`) or below `key` in `x0` whose first
/// iterate differs from each other's and from that of `key`.
///
/// Rounding can absorb a one-ulp change of `x0` in the first multiply, which
/// leaves the orbit unchanged; such neighbours are skipped.
pub fn distinct_neighbours(key: &ChaosKey, up: bool, count: usize) -> Result<Vec<ChaosKey>> {
    const SEARCH_LIMIT: usize = 1 << 20;
    let first = |x: f64| key.mu * x * (1.0 - x);
    let mut last = first(key.x0);
    let mut x = key.x0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..SEARCH_LIMIT {
        if out.len() == count {
            break;
        }
        x = if up { x.next_up() } else { x.next_down() };
        let image = first(x);
        if image != last {
            last = image;
            out.push(ChaosKey::new(key.mu, x, key.warmup)?);
        }
    }
    if out.len() < count {
        return Err(CipherError::InvalidParameter(format!("x0 = {} has too few distinguishable neighbours", key.x0)));
    }
    Ok(out)
}

/// Mean bit-difference between the keystream of `key` and keystreams whose
/// `x0` is perturbed in the last place, upward on even trials and downward
/// on odd ones. Each trial uses the next [`distinct_neighbours`] key on its
/// side.
pub fn avalanche_test(key: &ChaosKey, n_bytes: usize, trials: usize) -> Result<f64> {
    if n_bytes < MIN_AVALANCHE_BYTES {
        return Err(CipherError::InvalidParameter(format!("n_bytes must be at least {MIN_AVALANCHE_BYTES}")));
    }
    if trials < MIN_AVALANCHE_TRIALS {
        return Err(CipherError::InvalidParameter(format!("trials must be at least {MIN_AVALANCHE_TRIALS}")));
    }
    let base = keystream(key, n_bytes)?;
    let above = distinct_neighbours(key, true, trials.div_ceil(2))?;
    let below = distinct_neighbours(key, false, trials / 2)?;
    let mut total = 0.0;
    for trial in 0..trials {
        let other = if trial % 2 == 0 { &above[trial / 2] } else { &below[trial / 2] };
        total += bit_difference(&base, &keystream(other, n_bytes)?);
    }
    Ok(total / trials as f64)
}

const MAGIC: &[u8; 4] = b"CHX1";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 17;

/// Encrypts into the `CHX1` container: magic, u8 version, u32 warmup,
/// u64 payload length (little-endian), payload. The key itself is not stored.
pub fn seal(key: &ChaosKey, plaintext: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + plaintext.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&key.warmup.to_le_bytes());
    out.extend_from_slice(&(plaintext.len() as u64).to_le_bytes());
    out.extend(encrypt(key, plaintext)?);
    Ok(out)
}

/// Reads the warmup stored in a `CHX1` container.
pub fn container_warmup(bytes: &[u8]) -> Result<u32> {
    parse_container(bytes).map(|(w, _)| w)
}

fn parse_container(bytes: &[u8]) -> Result<(u32, &[u8])> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(CipherError::Format("missing CHX1 header".into()));
    }
    if bytes[4] != VERSION {
        return Err(CipherError::Format(format!("unsupported version {}", bytes[4])));
    }
    let warmup = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes"));
    let len = u64::from_le_bytes(bytes[9..17].try_into().expect("8 bytes"));
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != len {
        return Err(CipherError::Format(format!("payload is {} bytes, header says {len}", payload.len())));
    }
    Ok((warmup, payload))
}

/// Decrypts a `CHX1` container. The warmup comes from the container; `mu`
/// and `x0` come from `key`.
pub fn open(key: &ChaosKey, bytes: &[u8]) -> Result<Vec<u8>> {
    let (warmup, payload) = parse_container(bytes)?;
    let key = ChaosKey::new(key.mu, key.x0, warmup)?;
    decrypt(&key, payload)
}
