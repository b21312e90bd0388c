//! End-to-end pipeline: slicing, feature extraction, cross-validated scoring,
//! PCA scatter data and the five-method comparison table.

use std::fmt::{self, Write as _};

use crate::classify::{train_nb, NbModel};
use crate::entropy::{multiq_vector, FeatureVector, QGrid};
use crate::error::{Error, Result};
use crate::eval::{cross_validate_with, CvOptions, CvReport, DEFAULT_FOLDS};
use crate::exec::Execution;
use crate::pca::{fit_pca, project};
use crate::profile::{
    quantize_histogram, slice_by_potential, PotentialRange, Profile, DEFAULT_BIN_COUNT,
    DEFAULT_SPLIT_POTENTIAL,
};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    /// Tsallis entropies over a q grid.
    MultiQ(QGrid),
    /// The (sliced) amplitudes themselves.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeSpec {
    Full,
    /// Below the split potential.
    Low,
    /// From the split potential to the end of the sweep.
    High,
    Custom(PotentialRange),
}

impl RangeSpec {
    pub fn name(&self) -> String {
        match self {
            RangeSpec::Full => "full".into(),
            RangeSpec::Low => "low".into(),
            RangeSpec::High => "high".into(),
            RangeSpec::Custom(r) => format!("[{}, {}]", r.lo(), r.hi()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub features: FeatureKind,
    pub bin_count: usize,
    pub range: RangeSpec,
    pub split_at: f64,
    pub pca: Option<usize>,
    pub folds: usize,
    pub seed: u64,
    pub log_transform: bool,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            features: FeatureKind::MultiQ(QGrid::default_grid()),
            bin_count: DEFAULT_BIN_COUNT,
            range: RangeSpec::Full,
            split_at: DEFAULT_SPLIT_POTENTIAL,
            pca: None,
            folds: DEFAULT_FOLDS,
            seed: 0,
            log_transform: false,
            execution: Execution::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_count < 2 {
            return Err(Error::InvalidBinCount(self.bin_count));
        }
        if self.folds < 2 {
            return Err(Error::InvalidFolds {
                k: self.folds,
                samples: 0,
            });
        }
        if self.pca == Some(0) {
            return Err(Error::ComponentsOutOfRange { k: 0, max: 0 });
        }
        if !self.split_at.is_finite() {
            return Err(Error::Config(format!("split potential {} is not finite", self.split_at)));
        }
        Ok(())
    }

    fn cv_options(&self) -> CvOptions {
        CvOptions {
            folds: self.folds,
            seed: self.seed,
            pca: self.pca,
            execution: self.execution,
        }
    }
}

fn resolve_range(profile: &Profile, range: RangeSpec, split_at: f64) -> Result<Option<PotentialRange>> {
    let empty = || Error::EmptySlice {
        id: profile.id().to_string(),
        lo: profile.min_potential(),
        hi: split_at,
    };
    Ok(match range {
        RangeSpec::Full => None,
        RangeSpec::Low => Some(PotentialRange::new(profile.min_potential(), split_at).map_err(|_| empty())?),
        RangeSpec::High => Some(PotentialRange::new(split_at, profile.max_potential()).map_err(|_| empty())?),
        RangeSpec::Custom(r) => Some(r),
    })
}

/// The profile as the feature extractor sees it: optionally log-transformed,
/// then restricted to the configured range.
pub fn prepare_profile(profile: &Profile, config: &PipelineConfig) -> Result<Profile> {
    let base = if config.log_transform {
        profile.log_transformed()
    } else {
        profile.clone()
    };
    match resolve_range(&base, config.range, config.split_at)? {
        None => Ok(base),
        Some(r) => slice_by_potential(&base, r),
    }
}

pub fn extract_features(profile: &Profile, config: &PipelineConfig) -> Result<FeatureVector> {
    let prepared = prepare_profile(profile, config)?;
    let values = match &config.features {
        FeatureKind::MultiQ(grid) => {
            let histogram = quantize_histogram(&prepared, config.bin_count)?;
            multiq_vector(&histogram, grid)?.values
        }
        FeatureKind::Raw => prepared.amplitudes().to_vec(),
    };
    FeatureVector::new(profile.id(), profile.label().cloned(), values)
}

pub fn extract_all(profiles: &[Profile], config: &PipelineConfig) -> Result<Vec<FeatureVector>> {
    config.validate()?;
    config.execution.try_map(profiles, |p| extract_features(p, config))
}

/// Header names for the value columns.
pub fn feature_names(config: &PipelineConfig, width: usize) -> Vec<String> {
    match &config.features {
        FeatureKind::MultiQ(grid) => grid.values().iter().map(|q| format!("q={q}")).collect(),
        FeatureKind::Raw => (1..=width).map(|i| format!("v{i}")).collect(),
    }
}

/// `profile_id,label,v_1,...,v_n` rows under a header naming each column.
pub fn features_csv(features: &[FeatureVector], config: &PipelineConfig) -> String {
    let width = features.first().map(FeatureVector::len).unwrap_or(0);
    let mut out = String::new();
    out.push_str("profile_id,label");
    for name in feature_names(config, width) {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for f in features {
        out.push_str(&f.profile_id);
        out.push(',');
        if let Some(label) = &f.label {
            out.push_str(label.as_str());
        }
        for v in &f.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// First two principal coordinates of every feature vector, PCA fitted on the whole set.
pub fn scatter_csv(features: &[FeatureVector]) -> Result<String> {
    let rows: Vec<&[f64]> = features.iter().map(|f| f.values.as_slice()).collect();
    let model = fit_pca(&rows)?;
    let mut out = String::from("profile_id,label,pc1,pc2\n");
    for f in features {
        let p = project(&model, &f.values, 2)?;
        let label = f.label.as_ref().map(|l| l.as_str()).unwrap_or("");
        let _ = writeln!(out, "{},{},{},{}", f.profile_id, label, p[0], p[1]);
    }
    Ok(out)
}

/// Outcome of scoring one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub features: Vec<FeatureVector>,
    pub cv: CvReport,
}

impl ScoreReport {
    pub fn rate(&self) -> f64 {
        self.cv.pooled_rate()
    }
}

pub fn run_pipeline(config: &PipelineConfig, profiles: &[Profile]) -> Result<ScoreReport> {
    let features = extract_all(profiles, config)?;
    let cv = cross_validate_with(&features, &config.cv_options())?;
    Ok(ScoreReport { features, cv })
}

/// Naive Bayes model trained on every vector, for persistence.
pub fn train_full(features: &[FeatureVector]) -> Result<NbModel> {
    train_nb(features)
}

pub fn describe_features(kind: &FeatureKind) -> String {
    match kind {
        FeatureKind::MultiQ(grid) => format!("tsallis {grid}"),
        FeatureKind::Raw => "raw amplitudes".into(),
    }
}

/// Text report for a single configuration.
pub fn score_text(config: &PipelineConfig, dataset: &str, report: &ScoreReport) -> String {
    let mut out = String::new();
    let width = report.features.first().map(FeatureVector::len).unwrap_or(0);
    let _ = writeln!(out, "dataset: {dataset}");
    let _ = writeln!(out, "features: {} (width {width})", describe_features(&config.features));
    let _ = writeln!(out, "bins: {}", config.bin_count);
    let _ = writeln!(out, "range: {} (split at {} V)", config.range.name(), config.split_at);
    let _ = writeln!(out, "log transform: {}", config.log_transform);
    match config.pca {
        Some(k) => {
            let _ = writeln!(out, "pca components: {k}");
        }
        None => out.push_str("pca components: none\n"),
    }
    let _ = writeln!(out, "folds: {}", config.folds);
    let _ = writeln!(out, "seed: {}", config.seed);
    let cv = &report.cv;
    let _ = writeln!(out, "pooled rate: {:.4} ({}/{})", cv.pooled_rate(), cv.correct(), cv.total());
    let _ = writeln!(out, "fold-mean rate: {:.4}", cv.fold_mean_rate());
    out.push_str("fold,correct,total\n");
    for (i, f) in cv.folds.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", f.correct, f.total);
    }
    out
}

/// One row of the method comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub features: FeatureKind,
}

/// The five compared methods: single q = 1, single q = 0.1, q grids up to 1.0
/// and 2.0, and naive Bayes directly on the amplitudes.
pub fn standard_methods() -> Vec<Method> {
    let grid = |to| QGrid::stepped(0.1, to, 0.1).expect("valid grid");
    vec![
        Method {
            name: "Tsallis q = 1".into(),
            features: FeatureKind::MultiQ(QGrid::single(1.0).expect("valid grid")),
        },
        Method {
            name: "Tsallis q = 0.1".into(),
            features: FeatureKind::MultiQ(QGrid::single(0.1).expect("valid grid")),
        },
        Method {
            name: "Multi-q, q = 0.1..1.0".into(),
            features: FeatureKind::MultiQ(grid(1.0)),
        },
        Method {
            name: "Multi-q, q = 0.1..2.0".into(),
            features: FeatureKind::MultiQ(grid(2.0)),
        },
        Method {
            name: "Naive Bayes on raw points".into(),
            features: FeatureKind::Raw,
        },
    ]
}

pub const TABLE_RANGES: [RangeSpec; 3] = [RangeSpec::Full, RangeSpec::Low, RangeSpec::High];

#[derive(Debug, Clone, PartialEq)]
pub struct MethodTable {
    pub methods: Vec<Method>,
    /// `cells[method][range]`, ranges in [`TABLE_RANGES`] order.
    pub cells: Vec<Vec<CvReport>>,
}

/// Scores every standard method on the full, low and high ranges. `base`
/// supplies everything except the feature kind and range.
pub fn run_table(base: &PipelineConfig, profiles: &[Profile]) -> Result<MethodTable> {
    let methods = standard_methods();
    let jobs: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..TABLE_RANGES.len()).map(move |r| (m, r)))
        .collect();
    // inner stages run sequentially; the grid of jobs is the parallel axis
    let reports = base.execution.try_map(&jobs, |&(m, r)| {
        let config = PipelineConfig {
            features: methods[m].features.clone(),
            range: TABLE_RANGES[r],
            execution: Execution::Sequential,
            ..base.clone()
        };
        Ok(run_pipeline(&config, profiles)?.cv)
    })?;
    let mut reports = reports.into_iter();
    let cells = methods
        .iter()
        .map(|_| reports.by_ref().take(TABLE_RANGES.len()).collect())
        .collect();
    Ok(MethodTable { methods, cells })
}

impl MethodTable {
    pub fn rate(&self, method: usize, range: usize) -> f64 {
        self.cells[method][range].pooled_rate()
    }

    fn write_block(&self, out: &mut String, title: &str, rate: impl Fn(&CvReport) -> f64) {
        let width = self.methods.iter().map(|m| m.name.len()).max().unwrap_or(6).max(6);
        let _ = writeln!(out, "{title}");
        let _ = writeln!(
            out,
            "{:<width$}  {:>14}  {:>13}  {:>14}",
            "Method", "Full Potential", "Low Potential", "High Potential"
        );
        for (method, row) in self.methods.iter().zip(&self.cells) {
            let _ = write!(out, "{:<width$}", method.name);
            for (cell, w) in row.iter().zip([14, 13, 14]) {
                let _ = write!(out, "  {:>w$.1}", 100.0 * rate(cell));
            }
            out.push('\n');
        }
    }
}

impl fmt::Display for MethodTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.write_block(&mut out, "Classification rate (%), pooled over folds", CvReport::pooled_rate);
        out.push('\n');
        self.write_block(&mut out, "Classification rate (%), mean of per-fold rates", CvReport::fold_mean_rate);
        f.write_str(&out)
    }
}

pub fn table_text(base: &PipelineConfig, dataset: &str, table: &MethodTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dataset: {dataset}");
    let _ = writeln!(
        out,
        "bins: {}  folds: {}  seed: {}  split: {} V  log transform: {}  pca: {}",
        base.bin_count,
        base.folds,
        base.seed,
        base.split_at,
        base.log_transform,
        base.pca.map(|k| k.to_string()).unwrap_or_else(|| "none".into())
    );
    out.push('\n');
    out.push_str(&table.to_string());
    out
}
