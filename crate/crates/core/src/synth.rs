//! Synthetic two-class polarization curves.
//!
//! Each curve is a V-shaped Tafel template in log-current with its minimum at
//! a per-curve corrosion potential, white noise on top, and above the pitting
//! onset a Poisson number of upward bursts that decay exponentially with
//! potential. The emitted amplitude is log10 of the current.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::profile::{Label, Profile};

/// Sweep start (volts).
pub const POTENTIAL_START: f64 = -0.6;
/// Sweep end (volts).
pub const POTENTIAL_END: f64 = 0.2;
pub const SAMPLES_PER_CURVE: usize = 800;
/// Potential scale of the exponential burst decay (volts).
pub const BURST_DECAY: f64 = 0.02;
pub const DEFAULT_CURVES_PER_CLASS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    /// Mean corrosion potential (volts).
    pub e_corr_mean: f64,
    pub e_corr_sd: f64,
    /// Decades per volt below the corrosion potential.
    pub cathodic_slope: f64,
    /// Decades per volt above the corrosion potential.
    pub anodic_slope: f64,
    /// log10 current at the corrosion potential.
    pub floor_log_current: f64,
    /// Potential above which bursts may start (volts).
    pub pit_onset: f64,
    /// Expected bursts per volt above the onset.
    pub pit_burst_rate: f64,
    /// Mean burst height (decades).
    pub pit_burst_scale: f64,
    /// Per-sample white noise (decades).
    pub noise_sd: f64,
}

// Default class parameters. 304 has the lower corrosion potential and the
// earlier, denser and larger pitting bursts.
impl CurveParams {
    pub const AISI_304: CurveParams = CurveParams {
        e_corr_mean: -0.28,
        e_corr_sd: 0.015,
        cathodic_slope: 5.0,
        anodic_slope: 8.0,
        floor_log_current: -7.5,
        pit_onset: 0.0,
        pit_burst_rate: 40.0,
        pit_burst_scale: 0.8,
        noise_sd: 0.05,
    };

    pub const AISI_316: CurveParams = CurveParams {
        e_corr_mean: -0.25,
        e_corr_sd: 0.015,
        cathodic_slope: 5.0,
        anodic_slope: 8.0,
        floor_log_current: -7.5,
        pit_onset: 0.1,
        pit_burst_rate: 10.0,
        pit_burst_scale: 0.3,
        noise_sd: 0.05,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.e_corr_mean,
            self.e_corr_sd,
            self.cathodic_slope,
            self.anodic_slope,
            self.floor_log_current,
            self.pit_onset,
            self.pit_burst_rate,
            self.pit_burst_scale,
            self.noise_sd,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if !(self.cathodic_slope > 0.0 && self.anodic_slope > 0.0) {
            return Err(Error::InvalidParams("slopes must be positive".into()));
        }
        if self.e_corr_sd < 0.0 || self.noise_sd < 0.0 {
            return Err(Error::InvalidParams("standard deviations must be non-negative".into()));
        }
        if self.pit_burst_rate < 0.0 || self.pit_burst_scale < 0.0 {
            return Err(Error::InvalidParams("burst rate and scale must be non-negative".into()));
        }
        if !(POTENTIAL_START..=POTENTIAL_END).contains(&self.pit_onset) {
            return Err(Error::InvalidParams(format!(
                "pit onset {} outside [{POTENTIAL_START}, {POTENTIAL_END}]",
                self.pit_onset
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burst {
    pub potential: f64,
    pub height: f64,
}

/// A generated curve together with the latent draws behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCurve {
    pub profile: Profile,
    pub e_corr: f64,
    pub bursts: Vec<Burst>,
}

/// Uniform sweep grid over `[POTENTIAL_START, POTENTIAL_END]`.
pub fn potential_grid() -> Vec<f64> {
    let span = POTENTIAL_END - POTENTIAL_START;
    let last = (SAMPLES_PER_CURVE - 1) as f64;
    (0..SAMPLES_PER_CURVE)
        .map(|i| POTENTIAL_START + span * i as f64 / last)
        .collect()
}

pub fn draw_curve(class_id: &Label, seed: u64, params: &CurveParams) -> Result<GeneratedCurve> {
    params.validate()?;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let normal = |rng: &mut Xoshiro256StarStar| -> f64 { StandardNormal.sample(rng) };

    let e_corr = params.e_corr_mean + params.e_corr_sd * normal(&mut rng);

    let expected = params.pit_burst_rate * (POTENTIAL_END - params.pit_onset);
    let count = if expected > 0.0 {
        Poisson::new(expected)
            .map_err(|e| Error::InvalidParams(e.to_string()))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let bursts: Vec<Burst> = (0..count)
        .map(|_| {
            let potential = rng.random_range(params.pit_onset..=POTENTIAL_END);
            let unit: f64 = Exp1.sample(&mut rng);
            Burst {
                potential,
                height: params.pit_burst_scale * unit,
            }
        })
        .collect();

    let potentials = potential_grid();
    let amplitudes = potentials
        .iter()
        .map(|&e| {
            let template = if e < e_corr {
                params.cathodic_slope * (e_corr - e)
            } else {
                params.anodic_slope * (e - e_corr)
            };
            let pitting: f64 = bursts
                .iter()
                .filter(|b| e >= b.potential)
                .map(|b| b.height * (-(e - b.potential) / BURST_DECAY).exp())
                .sum();
            params.floor_log_current + template + pitting + params.noise_sd * normal(&mut rng)
        })
        .collect();

    let profile = Profile::new(format!("{class_id}-{seed:016x}"), Some(class_id.clone()), potentials, amplitudes)?;
    Ok(GeneratedCurve {
        profile,
        e_corr,
        bursts,
    })
}

pub fn generate_curve(class_id: &Label, seed: u64, params: &CurveParams) -> Result<Profile> {
    Ok(draw_curve(class_id, seed, params)?.profile)
}

/// SplitMix64 finalizer over `seed + stream * golden`; gives every curve an
/// independent generator.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Class labels and their curve parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: Vec<(Label, CurveParams)>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: vec![
                (Label::new("304").expect("label"), CurveParams::AISI_304),
                (Label::new("316").expect("label"), CurveParams::AISI_316),
            ],
        }
    }
}

impl SynthConfig {
    /// Both default labels with identical (304) parameters; an ablation with
    /// no class signal.
    pub fn identical_classes() -> Self {
        let mut config = SynthConfig::default();
        for (_, params) in &mut config.classes {
            *params = CurveParams::AISI_304;
        }
        config
    }
}

pub fn generate_dataset(n_per_class: usize, seed: u64) -> Result<Vec<Profile>> {
    generate_dataset_with(&SynthConfig::default(), n_per_class, seed, Execution::default())
}

/// `n_per_class` curves per class, class-major. Curve `i` of class `c` uses
/// seed `derive_seed(seed, (c << 32) | i)` and id `<label>_<i>`.
pub fn generate_dataset_with(
    config: &SynthConfig,
    n_per_class: usize,
    seed: u64,
    execution: Execution,
) -> Result<Vec<Profile>> {
    if n_per_class == 0 {
        return Err(Error::InvalidParams("n_per_class must be at least 1".into()));
    }
    for (_, params) in &config.classes {
        params.validate()?;
    }
    let total = config.classes.len() * n_per_class;
    execution.try_map_range(total, |index| {
        let (class, i) = (index / n_per_class, index % n_per_class);
        let (label, params) = &config.classes[class];
        let curve_seed = derive_seed(seed, ((class as u64) << 32) | i as u64);
        let profile = generate_curve(label, curve_seed, params)?;
        let id = format!("{label}_{i:02}");
        Profile::new(id, Some(label.clone()), profile.potentials().to_vec(), profile.amplitudes().to_vec())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn argmin(values: &[f64]) -> usize {
        values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best })
            .0
    }

    #[test]
    fn noiseless_curve_is_a_v_at_e_corr() {
        let params = CurveParams {
            noise_sd: 0.0,
            pit_burst_rate: 0.0,
            ..CurveParams::AISI_304
        };
        let curve = draw_curve(&label("304"), 17, &params).unwrap();
        assert!(curve.bursts.is_empty());
        let p = &curve.profile;
        assert_eq!(p.len(), SAMPLES_PER_CURVE);
        let m = argmin(p.amplitudes());
        let grid = p.potentials();
        let nearest = argmin(&grid.iter().map(|e| (e - curve.e_corr).abs()).collect::<Vec<_>>());
        assert!(m.abs_diff(nearest) <= 1, "argmin {m} vs nearest {nearest}");
        // strictly decreasing then increasing around the minimum
        assert!(p.amplitudes()[..m].windows(2).all(|w| w[0] > w[1]));
        assert!(p.amplitudes()[m..].windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grid[0], POTENTIAL_START);
        assert!((grid[SAMPLES_PER_CURVE - 1] - POTENTIAL_END).abs() < 1e-15);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_curve(&label("316"), 5, &CurveParams::AISI_316).unwrap();
        let b = generate_curve(&label("316"), 5, &CurveParams::AISI_316).unwrap();
        assert_eq!(a, b);
        let c = generate_curve(&label("316"), 6, &CurveParams::AISI_316).unwrap();
        assert_ne!(a.amplitudes(), c.amplitudes());
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = [
            CurveParams { cathodic_slope: 0.0, ..CurveParams::AISI_304 },
            CurveParams { noise_sd: -1.0, ..CurveParams::AISI_304 },
            CurveParams { pit_onset: 0.5, ..CurveParams::AISI_304 },
            CurveParams { pit_burst_rate: f64::NAN, ..CurveParams::AISI_304 },
        ];
        for params in bad {
            assert!(matches!(generate_curve(&label("x"), 0, &params), Err(Error::InvalidParams(_))));
        }
    }

    #[test]
    fn dataset_shape_and_determinism() {
        let d = generate_dataset(24, 0).unwrap();
        assert_eq!(d.len(), 48);
        assert_eq!(d.iter().filter(|p| p.label().unwrap().as_str() == "304").count(), 24);
        assert_eq!(d.iter().filter(|p| p.label().unwrap().as_str() == "316").count(), 24);
        assert_eq!(d[0].id(), "304_00");
        assert_eq!(d[47].id(), "316_23");

        let one = generate_dataset(1, 9).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one, generate_dataset(1, 9).unwrap());
        assert_ne!(one, generate_dataset(1, 10).unwrap());
        assert!(generate_dataset(0, 0).is_err());
    }

    #[test]
    fn parallel_generation_matches_sequential() {
        let config = SynthConfig::default();
        let seq = generate_dataset_with(&config, 10, 3, Execution::Sequential).unwrap();
        let par = generate_dataset_with(&config, 10, 3, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for class in 0..2u64 {
            for i in 0..500u64 {
                assert!(seen.insert(derive_seed(0, (class << 32) | i)));
            }
        }
    }

    // Monte-Carlo: spread of log-current above 0 V is wider for 304.
    #[test]
    fn pitting_scatter_is_larger_for_304() {
        let mean_sd = |class: &str, params: &CurveParams| {
            let total: f64 = (0..1000u64)
                .map(|i| {
                    let p = generate_curve(&label(class), derive_seed(42, i), params).unwrap();
                    let high: Vec<f64> = p
                        .potentials()
                        .iter()
                        .zip(p.amplitudes())
                        .filter(|(e, _)| **e > 0.0)
                        .map(|(_, a)| *a)
                        .collect();
                    let m = high.iter().sum::<f64>() / high.len() as f64;
                    (high.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (high.len() - 1) as f64).sqrt()
                })
                .sum();
            total / 1000.0
        };
        let s304 = mean_sd("304", &CurveParams::AISI_304);
        let s316 = mean_sd("316", &CurveParams::AISI_316);
        assert!(s304 > s316, "304 {s304} vs 316 {s316}");
    }

    #[test]
    fn corrosion_potential_gap_matches_anchors() {
        let d = generate_dataset(500, 1).unwrap();
        let mean_argmin = |class: &str| {
            let rows: Vec<_> = d.iter().filter(|p| p.label().unwrap().as_str() == class).collect();
            rows.iter().map(|p| p.potentials()[argmin(p.amplitudes())]).sum::<f64>() / rows.len() as f64
        };
        let gap = mean_argmin("316") - mean_argmin("304");
        assert!((gap - 0.03).abs() <= 0.01, "gap {gap}");
    }
}
