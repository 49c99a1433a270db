//! Password popularity distributions.
//!
//! Real-world password datasets are summarized as *equivalence classes*: all
//! passwords chosen by the same number of users share one class. A
//! [`PasswordDistribution`] stores, per class, the probability that a single
//! user picked any one particular password of that class, together with how
//! many distinct passwords the class contains. Classes are kept sorted from
//! most to least popular, which is the order a rational guesser enumerates
//! them in.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use thiserror::Error;

/// Absolute tolerance on the total probability mass (`sum of count*p`).
pub const MASS_TOLERANCE: f64 = 1e-9;

/// One popularity equivalence class: `count` distinct passwords, each chosen
/// by a single user with probability `probability`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassEntry {
    pub probability: f64,
    pub count: u64,
}

/// A validated password popularity model.
///
/// Invariants enforced on construction:
/// - at least one class, probabilities strictly decreasing and positive,
///   counts nonzero;
/// - total mass `sum(count_i * probability_i)` equals 1 within
///   [`MASS_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct PasswordDistribution {
    classes: Vec<ClassEntry>,
    total_users: u64,
    total_passwords: u64,
}

/// Why a set of classes is not a valid distribution, or why an input file
/// could not be parsed.
#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("distribution has no classes")]
    Empty,
    #[error("class {index}: probability {probability} is not positive")]
    NonPositiveProbability { index: usize, probability: f64 },
    #[error("class {index}: password count is zero")]
    ZeroCount { index: usize },
    #[error("classes are not sorted by strictly decreasing probability at index {index}")]
    NotSorted { index: usize },
    #[error("total probability mass {mass} differs from 1 by more than {MASS_TOLERANCE:e}")]
    MassMismatch { mass: f64 },
    #[error("no users (all frequencies zero)")]
    NoUsers,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Checks the class-list invariants and reports the first violation.
pub fn validate_classes(classes: &[ClassEntry]) -> Result<(), DistributionError> {
    if classes.is_empty() {
        return Err(DistributionError::Empty);
    }
    for (index, class) in classes.iter().enumerate() {
        if !class.probability.is_finite() || class.probability <= 0.0 {
            return Err(DistributionError::NonPositiveProbability {
                index,
                probability: class.probability,
            });
        }
        if class.count == 0 {
            return Err(DistributionError::ZeroCount { index });
        }
    }
    for index in 1..classes.len() {
        if classes[index].probability >= classes[index - 1].probability {
            return Err(DistributionError::NotSorted { index });
        }
    }
    let mass: f64 = classes
        .iter()
        .map(|c| c.count as f64 * c.probability)
        .sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(DistributionError::MassMismatch { mass });
    }
    Ok(())
}

impl PasswordDistribution {
    /// Builds a distribution from already-normalized classes.
    pub fn from_classes(
        classes: Vec<ClassEntry>,
        total_users: u64,
    ) -> Result<Self, DistributionError> {
        validate_classes(&classes)?;
        if total_users == 0 {
            return Err(DistributionError::NoUsers);
        }
        let total_passwords = classes.iter().map(|c| c.count).sum();
        Ok(Self {
            classes,
            total_users,
            total_passwords,
        })
    }

    /// Builds a distribution from `(frequency, distinct_password_count)`
    /// pairs. Duplicate frequencies are merged; classes come out sorted by
    /// decreasing frequency and probabilities are `frequency / total_users`.
    pub fn from_frequencies(
        pairs: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<Self, DistributionError> {
        let mut by_frequency: BTreeMap<u64, u64> = BTreeMap::new();
        for (frequency, count) in pairs {
            *by_frequency.entry(frequency).or_insert(0) += count;
        }
        let total_users: u64 = by_frequency.iter().map(|(f, c)| f * c).sum();
        if total_users == 0 {
            return Err(if by_frequency.is_empty() {
                DistributionError::Empty
            } else {
                DistributionError::NoUsers
            });
        }
        let classes: Vec<ClassEntry> = by_frequency
            .iter()
            .rev()
            .map(|(&frequency, &count)| ClassEntry {
                probability: frequency as f64 / total_users as f64,
                count,
            })
            .collect();
        Self::from_classes(classes, total_users)
    }

    /// Parses a frequency corpus: one `frequency count` pair per line.
    /// `#` starts a comment; blank lines are ignored; both fields must be
    /// positive integers.
    pub fn ingest_frequency_corpus(reader: impl BufRead) -> Result<Self, DistributionError> {
        let mut pairs = Vec::new();
        for (line_index, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = line_index + 1;
            let data = strip_comment(&line);
            if data.is_empty() {
                continue;
            }
            let mut fields = data.split_whitespace();
            let frequency = parse_positive(fields.next(), line_no, "frequency")?;
            let count = parse_positive(fields.next(), line_no, "count")?;
            if let Some(extra) = fields.next() {
                return Err(DistributionError::Parse {
                    line: line_no,
                    message: format!("unexpected trailing field {extra:?}"),
                });
            }
            pairs.push((frequency, count));
        }
        Self::from_frequencies(pairs)
    }

    /// Builds the frequency histogram of a plaintext leak (one password per
    /// line) and ingests it. Empty lines are skipped so a trailing newline
    /// does not introduce a phantom password; line-oriented input cannot
    /// represent empty passwords.
    pub fn ingest_plaintext(reader: impl BufRead) -> Result<Self, DistributionError> {
        let mut occurrences: BTreeMap<String, u64> = BTreeMap::new();
        for line in reader.lines() {
            let password = line?;
            if password.is_empty() {
                continue;
            }
            *occurrences.entry(password).or_insert(0) += 1;
        }
        let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
        for frequency in occurrences.into_values() {
            *histogram.entry(frequency).or_insert(0) += 1;
        }
        Self::from_frequencies(histogram)
    }

    /// Reads the normalized cache format written by [`write_cache`]: data
    /// lines are `probability count`; `# users N` and `# passwords n` header
    /// comments carry the corpus totals. If the `users` header is absent the
    /// user total is reconstructed as `round(1 / min probability)`, which is
    /// exact whenever the rarest class consists of unique passwords (true
    /// for leak-derived corpora).
    ///
    /// [`write_cache`]: PasswordDistribution::write_cache
    pub fn read_cache(reader: impl BufRead) -> Result<Self, DistributionError> {
        let mut classes = Vec::new();
        let mut users: Option<u64> = None;
        for (line_index, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = line_index + 1;
            if let Some(comment) = line.trim_start().strip_prefix('#') {
                let mut fields = comment.split_whitespace();
                if fields.next() == Some("users") {
                    users = fields.next().and_then(|v| v.parse().ok());
                }
                continue;
            }
            let data = strip_comment(&line);
            if data.is_empty() {
                continue;
            }
            let mut fields = data.split_whitespace();
            let probability: f64 = fields
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| DistributionError::Parse {
                    line: line_no,
                    message: "expected a real probability".into(),
                })?;
            let count = parse_positive(fields.next(), line_no, "count")?;
            classes.push(ClassEntry { probability, count });
        }
        let total_users = match users {
            Some(n) => n,
            None => {
                let min = classes.iter().map(|c| c.probability).fold(f64::INFINITY, f64::min);
                (1.0 / min).round() as u64
            }
        };
        Self::from_classes(classes, total_users)
    }

    /// Writes the normalized cache: header comments with the totals, then
    /// one `probability count` line per class. Probabilities are rendered
    /// at 17 significant digits so they round-trip bit-exactly.
    pub fn write_cache(&self, mut writer: impl Write) -> std::io::Result<()> {
        writeln!(writer, "# password distribution cache")?;
        writeln!(writer, "# users {}", self.total_users)?;
        writeln!(writer, "# passwords {}", self.total_passwords)?;
        for class in &self.classes {
            writeln!(writer, "{:.16e} {}", class.probability, class.count)?;
        }
        Ok(())
    }

    /// Recovers the `(frequency, count)` pairs the classes were built from.
    pub fn to_frequency_pairs(&self) -> Vec<(u64, u64)> {
        self.classes
            .iter()
            .map(|c| {
                (
                    (c.probability * self.total_users as f64).round() as u64,
                    c.count,
                )
            })
            .collect()
    }

    /// Re-checks the construction invariants (useful after deserialization
    /// in tests; constructors already guarantee them).
    pub fn validate(&self) -> Result<(), DistributionError> {
        validate_classes(&self.classes)
    }

    /// Classes sorted by strictly decreasing probability.
    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    /// Number of equivalence classes.
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Number of users the corpus was built from.
    pub fn total_users(&self) -> u64 {
        self.total_users
    }

    /// Number of distinct passwords across all classes.
    pub fn total_passwords(&self) -> u64 {
        self.total_passwords
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

fn parse_positive(
    field: Option<&str>,
    line: usize,
    name: &str,
) -> Result<u64, DistributionError> {
    let raw = field.ok_or_else(|| DistributionError::Parse {
        line,
        message: format!("missing {name} field"),
    })?;
    let value: u64 = raw.parse().map_err(|_| DistributionError::Parse {
        line,
        message: format!("{name} {raw:?} is not a positive integer"),
    })?;
    if value == 0 {
        return Err(DistributionError::Parse {
            line,
            message: format!("{name} must be positive"),
        });
    }
    Ok(value)
}
