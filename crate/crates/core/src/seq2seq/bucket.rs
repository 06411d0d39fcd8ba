use crate::error::{Error, Result};

/// Length ceilings for one group of (source, target) pairs. Target length
/// counts content tokens only; GO and EOS are added by the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bucket {
    pub max_source_len: usize,
    pub max_target_len: usize,
}

impl Bucket {
    pub const fn new(max_source_len: usize, max_target_len: usize) -> Self {
        Self {
            max_source_len,
            max_target_len,
        }
    }

    pub fn fits(&self, source_len: usize, target_len: usize) -> bool {
        source_len <= self.max_source_len && target_len <= self.max_target_len
    }
}

pub const DEFAULT_BUCKETS: [Bucket; 3] = [Bucket::new(15, 10), Bucket::new(30, 15), Bucket::new(60, 25)];

pub fn validate_buckets(buckets: &[Bucket]) -> Result<()> {
    if buckets.is_empty() {
        return Err(Error::arg("bucket list is empty"));
    }
    if buckets.iter().any(|b| b.max_source_len == 0 || b.max_target_len == 0) {
        return Err(Error::arg("bucket lengths must be >= 1"));
    }
    if buckets.windows(2).any(|w| w[0].max_source_len > w[1].max_source_len) {
        return Err(Error::arg("buckets must be sorted ascending by source length"));
    }
    Ok(())
}

/// Smallest bucket that holds the pair, or `None` when it overflows every
/// bucket.
pub fn assign_bucket(source_len: usize, target_len: usize, buckets: &[Bucket]) -> Option<usize> {
    buckets.iter().position(|b| b.fits(source_len, target_len))
}

/// `"15:10,30:15"` → buckets.
pub fn parse_buckets(spec: &str) -> Result<Vec<Bucket>> {
    let buckets = spec
        .split(',')
        .map(|part| {
            let (s, t) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::arg(format!("bucket `{part}` is not source:target")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::arg(format!("bad bucket length `{v}`")))
            };
            Ok(Bucket::new(parse(s)?, parse(t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    validate_buckets(&buckets)?;
    Ok(buckets)
}

pub fn format_buckets(buckets: &[Bucket]) -> String {
    buckets
        .iter()
        .map(|b| format!("{}:{}", b.max_source_len, b.max_target_len))
        .collect::<Vec<_>>()
        .join(",")
}
