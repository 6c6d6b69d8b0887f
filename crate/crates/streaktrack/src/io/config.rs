//! TOML tool configuration: one human-readable file with optional
//! sections mirroring the runtime configs. Every field is optional and
//! overlays the built-in defaults; angles are given in degrees and
//! converted to radians on load.

use std::path::Path;

use serde::Deserialize;

use crate::decode::{HeatmapSpec, OracleNoise};
use crate::error::{Error, Result};
use crate::losses::LossConfig;
use crate::metrics::{MatchConfig, SimilarityKind};
use crate::sim::{BackgroundParams, PsfParams, SimConfig};
use crate::tracker::TrackerConfig;

/// Fully resolved tool configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    pub sim: SimConfig,
    pub tracker: TrackerConfig,
    pub matching: MatchConfig,
    pub loss: LossConfig,
    pub heatmap: HeatmapSpec,
    pub oracle: OracleNoise,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            sim: SimConfig::default(),
            tracker: TrackerConfig::default(),
            matching: MatchConfig::default(),
            loss: LossConfig::default(),
            heatmap: HeatmapSpec::default(),
            oracle: OracleNoise::default(),
        }
    }
}

impl ToolConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.tracker.validate()?;
        self.matching.validate()?;
        self.loss.validate()?;
        self.heatmap.validate()?;
        self.oracle.validate()?;
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    sim: Option<SimSection>,
    tracker: Option<TrackerSection>,
    #[serde(rename = "match")]
    matching: Option<MatchSection>,
    loss: Option<LossSection>,
    heatmap: Option<HeatmapSection>,
    oracle: Option<OracleSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    image_size: Option<(usize, usize)>,
    frames_range: Option<(u32, u32)>,
    debris_count_range: Option<(u32, u32)>,
    length_range: Option<(f64, f64)>,
    width_range: Option<(f64, f64)>,
    speed_range: Option<(f64, f64)>,
    angle_range_deg: Option<(f64, f64)>,
    brightness_mean: Option<f64>,
    brightness_jitter: Option<f64>,
    fracture_prob: Option<f64>,
    fracture_gap_range: Option<(f64, f64)>,
    min_visible_per_frame: Option<u32>,
    emit_masks: Option<bool>,
    rng_seed: Option<u64>,
    psf: Option<PsfSection>,
    background: Option<BackgroundSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PsfSection {
    enabled: Option<bool>,
    scale: Option<f64>,
    sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackgroundSection {
    base_level: Option<f64>,
    noise_std: Option<f64>,
    star_count_range: Option<(u32, u32)>,
    star_sigma_range: Option<(f64, f64)>,
    star_brightness_range: Option<(f64, f64)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackerSection {
    association_radius: Option<f64>,
    max_missed_frames: Option<u32>,
    min_track_length: Option<usize>,
    optimal_assignment: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchSection {
    similarity: Option<SimilarityKind>,
    match_threshold: Option<f64>,
    hota_alphas: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossSection {
    lambda_seg: Option<f64>,
    lambda_hm: Option<f64>,
    lambda_emb: Option<f64>,
    lambda_off: Option<f64>,
    focal_alpha: Option<f64>,
    focal_beta: Option<f64>,
    push_margin: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeatmapSection {
    sigma: Option<f64>,
    peak_threshold: Option<f64>,
    nms_window: Option<usize>,
    max_peaks: Option<usize>,
    embedding_gate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    endpoint_jitter_std: Option<f64>,
    drop_prob: Option<f64>,
    false_positive_rate: Option<f64>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })+
    };
}

/// Parse a TOML document and overlay it onto `base`.
pub fn parse_config(text: &str, base: ToolConfig, origin: &Path) -> Result<ToolConfig> {
    let file: FileConfig =
        toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
    let mut cfg = base;

    if let Some(sim) = file.sim {
        let s = &mut cfg.sim;
        overlay!(
            s,
            sim,
            image_size,
            frames_range,
            debris_count_range,
            length_range,
            width_range,
            speed_range,
            brightness_mean,
            brightness_jitter,
            fracture_prob,
            fracture_gap_range,
            min_visible_per_frame,
            emit_masks,
            rng_seed,
        );
        if let Some((lo, hi)) = sim.angle_range_deg {
            s.angle_range = (lo.to_radians(), hi.to_radians());
        }
        if let Some(psf) = sim.psf {
            if psf.enabled == Some(false) {
                s.psf = None;
            } else {
                let mut params = s.psf.unwrap_or(PsfParams {
                    scale: 1.0,
                    sigma: 1.5,
                });
                overlay!(&mut params, psf, scale, sigma);
                s.psf = Some(params);
            }
        }
        if let Some(bg) = sim.background {
            let b: &mut BackgroundParams = &mut s.background;
            overlay!(
                b,
                bg,
                base_level,
                noise_std,
                star_count_range,
                star_sigma_range,
                star_brightness_range,
            );
        }
    }
    if let Some(tracker) = file.tracker {
        let t = &mut cfg.tracker;
        overlay!(
            t,
            tracker,
            association_radius,
            max_missed_frames,
            min_track_length,
            optimal_assignment,
        );
    }
    if let Some(matching) = file.matching {
        let m = &mut cfg.matching;
        overlay!(m, matching, similarity, match_threshold, hota_alphas);
    }
    if let Some(loss) = file.loss {
        let l = &mut cfg.loss;
        overlay!(
            l,
            loss,
            lambda_seg,
            lambda_hm,
            lambda_emb,
            lambda_off,
            focal_alpha,
            focal_beta,
            push_margin,
        );
    }
    if let Some(heatmap) = file.heatmap {
        let h = &mut cfg.heatmap;
        overlay!(
            h,
            heatmap,
            sigma,
            peak_threshold,
            nms_window,
            max_peaks,
            embedding_gate,
        );
    }
    if let Some(oracle) = file.oracle {
        let o = &mut cfg.oracle;
        overlay!(o, oracle, endpoint_jitter_std, drop_prob, false_positive_rate);
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Load a TOML config file over the defaults.
pub fn load_config(path: &Path) -> Result<ToolConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, ToolConfig::default(), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ToolConfig> {
        parse_config(text, ToolConfig::default(), Path::new("test.toml"))
    }

    #[test]
    fn empty_config_is_the_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, ToolConfig::default());
    }

    #[test]
    fn overlays_fields_and_converts_degrees() {
        let cfg = parse(
            r#"
            [sim]
            image_size = [128, 96]
            angle_range_deg = [0.0, 180.0]
            rng_seed = 42

            [sim.psf]
            sigma = 2.5

            [tracker]
            association_radius = 50.0

            [match]
            similarity = "bbox_iou"
            match_threshold = 0.5

            [heatmap]
            nms_window = 7
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sim.image_size, (128, 96));
        assert!((cfg.sim.angle_range.1 - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(cfg.sim.rng_seed, 42);
        assert_eq!(cfg.sim.psf.unwrap().sigma, 2.5);
        assert_eq!(cfg.tracker.association_radius, 50.0);
        assert_eq!(cfg.matching.similarity, SimilarityKind::BboxIou);
        assert_eq!(cfg.heatmap.nms_window, 7);
    }

    #[test]
    fn psf_can_be_disabled() {
        let cfg = parse("[sim.psf]\nenabled = false\n").unwrap();
        assert!(cfg.sim.psf.is_none());
    }

    #[test]
    fn unknown_fields_are_field_level_errors() {
        let err = parse("[sim]\nnot_a_field = 1\n").unwrap_err();
        assert!(err.to_string().contains("not_a_field"), "{err}");
    }

    #[test]
    fn invalid_values_fail_validation() {
        assert!(parse("[tracker]\nassociation_radius = -5.0\n").is_err());
        assert!(parse("[sim]\nfracture_prob = 1.5\n").is_err());
        assert!(parse("[heatmap]\nnms_window = 4\n").is_err());
    }
}
