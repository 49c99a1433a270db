//! Reference login mechanism with a hidden, randomized iteration count.
//!
//! Each account hashes its password under a runtime level `t` drawn from the
//! defense distribution at registration. Only the salt, the per-level
//! iteration count, and the final digest are stored — `t` itself is dropped,
//! so a verifier (and an attacker with a stolen record) must probe runtime
//! levels in increasing order until one matches or all `m` are exhausted.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adversary::CashDistribution;

/// Salt length in bits.
pub const SALT_BITS: usize = 128;
/// Salt length in bytes.
pub const SALT_BYTES: usize = SALT_BITS / 8;
/// Digest length in bytes.
pub const DIGEST_BYTES: usize = 32;

#[derive(Debug, Error)]
pub enum MechanismError {
    #[error("username {0:?} already has an account")]
    DuplicateUsername(String),
    #[error("username {0:?} is empty or contains a comma or control character")]
    InvalidUsername(String),
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("runtime distribution has {got} levels but the store probes {want}")]
    RuntimeMismatch { got: u32, want: u32 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Iterated, salted digest of a password at runtime level `t`.
///
/// The message is `password ‖ 0x00 ‖ salt ‖ 0x00 ‖ t` (big-endian, 4 bytes);
/// the chain starts at `h₁ = H(message)` and feeds `h_j ‖ message` back into
/// the hash `k_iter − 1` more times. Baking `t` into the message means
/// digests at different levels share no common prefix work, so checking a
/// level always costs a full `k_iter`-long chain.
pub fn hash_eval(password: &str, salt: &[u8], t: u32, k_iter: u32) -> [u8; DIGEST_BYTES] {
    assert!(k_iter >= 1, "iteration count must be at least 1");
    let mut message = Vec::with_capacity(password.len() + salt.len() + 6);
    message.extend_from_slice(password.as_bytes());
    message.push(0);
    message.extend_from_slice(salt);
    message.push(0);
    message.extend_from_slice(&t.to_be_bytes());
    let mut state: [u8; DIGEST_BYTES] = Sha256::digest(&message).into();
    for _ in 1..k_iter {
        let mut hasher = Sha256::new();
        hasher.update(state);
        hasher.update(&message);
        state = hasher.finalize().into();
    }
    state
}

/// Stored credential: everything the verifier keeps. The sampled runtime
/// level is deliberately absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountRecord {
    pub username: String,
    pub salt: Vec<u8>,
    pub k_iter: u32,
    pub digest: [u8; DIGEST_BYTES],
}

/// Result of an authentication attempt. `evaluations` counts full hash
/// chains computed, i.e. `evaluations · k_iter` compression calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthOutcome {
    Success { runtime: u32, evaluations: u32 },
    Failure { evaluations: u32 },
    UnknownUser,
}

/// In-memory credential store probing up to `m` runtime levels.
#[derive(Debug, Clone)]
pub struct RecordStore {
    m: u32,
    records: BTreeMap<String, AccountRecord>,
}

fn valid_username(username: &str) -> bool {
    !username.is_empty() && !username.chars().any(|c| c == ',' || c.is_control())
}

fn constant_time_eq(a: &[u8; DIGEST_BYTES], b: &[u8; DIGEST_BYTES]) -> bool {
    let mut diff = 0u8;
    for (x, y) in a.iter().zip(b) {
        diff |= x ^ y;
    }
    diff == 0
}

/// Inverse-CDF sample from the runtime weights; returns a level in `1..=m`.
fn sample_runtime(cash: &CashDistribution, rng: &mut impl Rng) -> u32 {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (j, w) in cash.weights().iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return j as u32 + 1;
        }
    }
    cash.m()
}

fn encode_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn decode_hex(text: &str) -> Option<Vec<u8>> {
    if !text.len().is_multiple_of(2) {
        return None;
    }
    (0..text.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&text[i..i + 2], 16).ok())
        .collect()
}

impl RecordStore {
    /// An empty store whose verifier probes runtime levels `1..=m`.
    pub fn new(m: u32) -> Self {
        assert!(m >= 1, "need at least one runtime level");
        Self {
            m,
            records: BTreeMap::new(),
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, username: &str) -> Option<&AccountRecord> {
        self.records.get(username)
    }

    pub fn records(&self) -> impl Iterator<Item = &AccountRecord> {
        self.records.values()
    }

    /// Registers an account: draws a runtime level from `cash`, draws a
    /// fresh salt, stores the digest, and forgets the level.
    pub fn create_account(
        &mut self,
        username: &str,
        password: &str,
        cash: &CashDistribution,
        k_iter: u32,
        rng: &mut impl Rng,
    ) -> Result<(), MechanismError> {
        if !valid_username(username) {
            return Err(MechanismError::InvalidUsername(username.to_string()));
        }
        if self.records.contains_key(username) {
            return Err(MechanismError::DuplicateUsername(username.to_string()));
        }
        if k_iter == 0 {
            return Err(MechanismError::ZeroIterations);
        }
        if cash.m() != self.m {
            return Err(MechanismError::RuntimeMismatch {
                got: cash.m(),
                want: self.m,
            });
        }
        let t = sample_runtime(cash, rng);
        let mut salt = vec![0u8; SALT_BYTES];
        rng.fill_bytes(&mut salt);
        let digest = hash_eval(password, &salt, t, k_iter);
        self.records.insert(
            username.to_string(),
            AccountRecord {
                username: username.to_string(),
                salt,
                k_iter,
                digest,
            },
        );
        Ok(())
    }

    /// Verifies a password by recomputing the digest at levels `1..=m` until
    /// one matches (in constant-time comparison) or all levels fail.
    pub fn authenticate(&self, username: &str, password: &str) -> AuthOutcome {
        let Some(record) = self.records.get(username) else {
            return AuthOutcome::UnknownUser;
        };
        for t in 1..=self.m {
            let digest = hash_eval(password, &record.salt, t, record.k_iter);
            if constant_time_eq(&digest, &record.digest) {
                return AuthOutcome::Success {
                    runtime: t,
                    evaluations: t,
                };
            }
        }
        AuthOutcome::Failure {
            evaluations: self.m,
        }
    }

    /// Writes one `username,salt,k_iter,digest` line per account (salt and
    /// digest hex-encoded), sorted by username.
    pub fn save(&self, mut writer: impl Write) -> std::io::Result<()> {
        for record in self.records.values() {
            writeln!(
                writer,
                "{},{},{},{}",
                record.username,
                encode_hex(&record.salt),
                record.k_iter,
                encode_hex(&record.digest)
            )?;
        }
        Ok(())
    }

    /// Reads a store written by [`RecordStore::save`].
    pub fn load(reader: impl BufRead, m: u32) -> Result<Self, MechanismError> {
        let mut store = RecordStore::new(m);
        for (line_index, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = line_index + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let parse_err = |message: String| MechanismError::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 4 {
                return Err(parse_err(format!(
                    "expected 4 comma-separated fields, found {}",
                    fields.len()
                )));
            }
            let username = fields[0].to_string();
            if !valid_username(&username) {
                return Err(parse_err(format!("invalid username {username:?}")));
            }
            if store.records.contains_key(&username) {
                return Err(parse_err(format!("duplicate username {username:?}")));
            }
            let salt = decode_hex(fields[1])
                .ok_or_else(|| parse_err("salt is not valid hex".to_string()))?;
            let k_iter: u32 = fields[2]
                .parse()
                .map_err(|_| parse_err("iteration count is not an integer".to_string()))?;
            if k_iter == 0 {
                return Err(parse_err("iteration count must be at least 1".to_string()));
            }
            let digest_bytes = decode_hex(fields[3])
                .ok_or_else(|| parse_err("digest is not valid hex".to_string()))?;
            let digest: [u8; DIGEST_BYTES] = digest_bytes
                .try_into()
                .map_err(|_| parse_err(format!("digest must be {DIGEST_BYTES} bytes")))?;
            store.records.insert(
                username.clone(),
                AccountRecord {
                    username,
                    salt,
                    k_iter,
                    digest,
                },
            );
        }
        Ok(store)
    }
}
