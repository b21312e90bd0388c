//! One-dimensional profiles: loading, potential slicing and amplitude
//! quantization into equal-width histograms.
//!
//! Profile files are UTF-8 CSV with two columns, `potential,amplitude`, one
//! sample per row. Blank lines and lines starting with `#` are ignored, and a
//! first data line starting with `potential` is treated as a header.
//! A dataset manifest lists one `path,label` pair per row; relative paths are
//! resolved against the manifest's directory.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Potential separating the cathodic-dominated low range from the high range (volts).
pub const DEFAULT_SPLIT_POTENTIAL: f64 = -0.2;

/// Default number of quantization levels.
pub const DEFAULT_BIN_COUNT: usize = 100;

/// Offset used by [`signed_log10`].
pub const LOG_EPSILON: f64 = 1e-12;

/// Class label. Labels are kept free of separators so they can be written
/// verbatim into every text format the crate emits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c == ',' || c == '=' || c.is_whitespace()) {
            return Err(Error::InvalidLabel(name));
        }
        Ok(Label(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered run of `(potential, amplitude)` samples.
///
/// Always non-empty, with strictly increasing potentials and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    id: String,
    label: Option<Label>,
    potentials: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl Profile {
    pub fn new(
        id: impl Into<String>,
        label: Option<Label>,
        potentials: Vec<f64>,
        amplitudes: Vec<f64>,
    ) -> Result<Self> {
        if potentials.len() != amplitudes.len() {
            return Err(Error::LengthMismatch {
                expected: potentials.len(),
                actual: amplitudes.len(),
            });
        }
        validate_samples(&potentials, &amplitudes, "", |i| i + 1)?;
        Ok(Profile {
            id: id.into(),
            label,
            potentials,
            amplitudes,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&Label> {
        self.label.as_ref()
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }

    pub fn min_potential(&self) -> f64 {
        self.potentials[0]
    }

    pub fn max_potential(&self) -> f64 {
        self.potentials[self.potentials.len() - 1]
    }

    /// Applies [`signed_log10`] to every amplitude.
    pub fn log_transformed(&self) -> Profile {
        Profile {
            id: self.id.clone(),
            label: self.label.clone(),
            potentials: self.potentials.clone(),
            amplitudes: self.amplitudes.iter().map(|&x| signed_log10(x)).collect(),
        }
    }

    /// Parses the two-column CSV format. `source` is only used in error messages.
    pub fn parse(id: impl Into<String>, label: Option<Label>, text: &str, source: &Path) -> Result<Self> {
        let mut potentials = Vec::new();
        let mut amplitudes = Vec::new();
        let mut rows = Vec::new();
        let mut seen_data = false;
        for (n, line) in text.lines().enumerate() {
            let row = n + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_data && line.to_ascii_lowercase().starts_with("potential") {
                seen_data = true;
                continue;
            }
            seen_data = true;
            let parse_err = |message: String| Error::Parse {
                path: source.to_path_buf(),
                row,
                message,
            };
            let mut fields = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected 2 columns in `{line}`")));
            };
            let e: f64 = a
                .parse()
                .map_err(|_| parse_err(format!("invalid potential `{a}`")))?;
            let i: f64 = b
                .parse()
                .map_err(|_| parse_err(format!("invalid amplitude `{b}`")))?;
            potentials.push(e);
            amplitudes.push(i);
            rows.push(row);
        }
        let context = format!("{}: ", source.display());
        validate_samples(&potentials, &amplitudes, &context, |i| rows[i])?;
        Ok(Profile {
            id: id.into(),
            label,
            potentials,
            amplitudes,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 32);
        out.push_str("potential,amplitude\n");
        for (e, i) in self.potentials.iter().zip(&self.amplitudes) {
            out.push_str(&format!("{e},{i}\n"));
        }
        out
    }
}

fn validate_samples(
    potentials: &[f64],
    amplitudes: &[f64],
    context: &str,
    row_of: impl Fn(usize) -> usize,
) -> Result<()> {
    if potentials.is_empty() {
        return Err(Error::EmptyProfile);
    }
    for (i, (&e, &a)) in potentials.iter().zip(amplitudes).enumerate() {
        for value in [e, a] {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: context.to_string(),
                    row: row_of(i),
                    value,
                });
            }
        }
        if i > 0 && e <= potentials[i - 1] {
            return Err(Error::NonMonotonicPotential {
                context: context.to_string(),
                row: row_of(i),
                previous: potentials[i - 1],
                potential: e,
            });
        }
    }
    Ok(())
}

/// `sign(x) * log10(1 + |x| / LOG_EPSILON)`.
pub fn signed_log10(x: f64) -> f64 {
    x.signum() * (x.abs() / LOG_EPSILON).ln_1p() / std::f64::consts::LN_10
}

/// Loads a profile file. The profile id is the file stem.
pub fn load_profile(path: &Path, label: Option<Label>) -> Result<Profile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Profile::parse(id, label, &text, path)
}

/// A potential window. `lo` is inclusive; `hi` is exclusive unless it equals
/// the last potential of the profile being sliced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialRange {
    lo: f64,
    hi: f64,
}

impl PotentialRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidRange { lo, hi });
        }
        Ok(PotentialRange { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    fn contains(&self, e: f64, global_max: f64) -> bool {
        e >= self.lo && (e < self.hi || (e == self.hi && e == global_max))
    }
}

/// Keeps the samples whose potential lies in `range`. Identity and label are preserved.
pub fn slice_by_potential(profile: &Profile, range: PotentialRange) -> Result<Profile> {
    let global_max = profile.max_potential();
    let start = profile
        .potentials
        .iter()
        .position(|&e| range.contains(e, global_max));
    let Some(start) = start else {
        return Err(Error::EmptySlice {
            id: profile.id.clone(),
            lo: range.lo,
            hi: range.hi,
        });
    };
    // potentials are sorted, so members form one run
    let end = start
        + profile.potentials[start..]
            .iter()
            .take_while(|&&e| range.contains(e, global_max))
            .count();
    Ok(Profile {
        id: profile.id.clone(),
        label: profile.label.clone(),
        potentials: profile.potentials[start..end].to_vec(),
        amplitudes: profile.amplitudes[start..end].to_vec(),
    })
}

/// Probability mass over `bin_count` equal-width amplitude levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    probs: Vec<f64>,
}

impl Histogram {
    /// Quantizes `values` over their own `[min, max]` span.
    ///
    /// Bin `k` is `[lo + k*w, lo + (k+1)*w)`; the maximum goes to the last bin.
    /// A constant input yields the one-hot histogram `(1, 0, ..., 0)`.
    pub fn from_values(values: &[f64], bin_count: usize) -> Result<Self> {
        if bin_count < 2 {
            return Err(Error::InvalidBinCount(bin_count));
        }
        if values.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite {
                context: String::new(),
                row: 0,
                value: if lo.is_finite() { hi } else { lo },
            });
        }
        let mut probs = vec![0.0; bin_count];
        if lo == hi {
            log::warn!("constant amplitude {lo}: using one-hot histogram");
            probs[0] = 1.0;
            return Ok(Histogram { lo, hi, probs });
        }
        let width = (hi - lo) / bin_count as f64;
        let mut counts = vec![0usize; bin_count];
        for &x in values {
            counts[bin_index(x, lo, hi, width, bin_count)] += 1;
        }
        let total = values.len() as f64;
        for (p, &c) in probs.iter_mut().zip(&counts) {
            *p = c as f64 / total;
        }
        Ok(Histogram { lo, hi, probs })
    }

    /// Builds a histogram from an explicit distribution; used for tests and
    /// for callers that estimate probabilities some other way.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidBinCount(probs.len()));
        }
        if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::NonFinite {
                context: "probability ".into(),
                row: 0,
                value: bad,
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Histogram {
            lo: 0.0,
            hi: 1.0,
            probs,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.probs.len()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

// Index from the floor estimate, then nudged so the result agrees with the
// edge comparisons `lo + k*w <= x < lo + (k+1)*w`.
fn bin_index(x: f64, lo: f64, hi: f64, width: f64, bin_count: usize) -> usize {
    let last = bin_count - 1;
    if x >= hi {
        return last;
    }
    let mut k = (((x - lo) / width).floor().max(0.0) as usize).min(last);
    while k > 0 && x < lo + k as f64 * width {
        k -= 1;
    }
    while k < last && x >= lo + (k + 1) as f64 * width {
        k += 1;
    }
    k
}

/// Quantizes a profile's amplitudes into `bin_count` levels.
pub fn quantize_histogram(profile: &Profile, bin_count: usize) -> Result<Histogram> {
    Histogram::from_values(&profile.amplitudes, bin_count)
}

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<Label>,
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let file = fields.next().unwrap_or_default();
        if n == 0 && file == "path" {
            continue;
        }
        let label = match fields.next() {
            Some("") | None => None,
            Some(l) => Some(Label::new(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: n + 1,
                message: e.to_string(),
            })?),
        };
        if fields.next().is_some() || file.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: n + 1,
                message: format!("expected `path,label`, got `{line}`"),
            });
        }
        let file = Path::new(file);
        let resolved = if file.is_absolute() {
            file.to_path_buf()
        } else {
            base.join(file)
        };
        entries.push(ManifestEntry {
            path: resolved,
            label,
        });
    }
    Ok(entries)
}

/// Loads every profile listed in a manifest, in manifest order.
pub fn load_dataset(manifest: &Path) -> Result<Vec<Profile>> {
    load_manifest(manifest)?
        .into_iter()
        .map(|entry| load_profile(&entry.path, entry.label))
        .collect()
}

/// Writes each profile to `<dir>/<id>.csv` and a `manifest.csv` referencing them.
/// Returns the manifest path.
pub fn write_dataset(dir: &Path, profiles: &[Profile]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("# path,label\n");
    for profile in profiles {
        let name = format!("{}.csv", profile.id());
        write_atomic(&dir.join(&name), profile.to_csv().as_bytes())?;
        let label = profile.label().map(Label::as_str).unwrap_or("");
        manifest.push_str(&format!("{name},{label}\n"));
    }
    let path = dir.join("manifest.csv");
    write_atomic(&path, manifest.as_bytes())?;
    Ok(path)
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
