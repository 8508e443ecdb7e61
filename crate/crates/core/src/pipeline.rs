//! Batch preprocessing: a manifest of DICOM series in, LVOL crops and a
//! run report out.
//!
//! Each case runs the same five steps: assemble the series, resample to
//! isotropic spacing, locate the lungs, window to bytes, crop about the
//! lung center. A worker pool processes cases independently and the
//! report keeps manifest order, so output bytes and statuses never
//! depend on the thread count. A case that fails is recorded and the
//! batch moves on; nothing short of a broken manifest aborts the run.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dicom::read_series_dir;
use crate::lvol::{Lvol, LvolPayload};
use crate::resample::trilinear_resample;
use crate::segment::{
    binarize_air, bounding_box, connected_components, extract_lung_mask, morphological_close,
    Connectivity,
};
use crate::volume::{Dims, HuVolume, Spacing};
use crate::window::{crop_centered_u8, window_hu};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest not found: {0}")]
    ManifestNotFound(PathBuf),
    #[error("manifest has no data rows: {0}")]
    EmptyManifest(PathBuf),
    #[error("manifest line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Everything a batch run needs, echoed verbatim into the report.
///
/// The text form is flat `key = value` lines with `#` comments. Every
/// key is optional and falls back to the default; unknown or repeated
/// keys are errors so a typo cannot silently change a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub target_spacing_mm: f32,
    pub window_lo_hu: i16,
    pub window_hi_hu: i16,
    /// Cubic crop edge in voxels.
    pub crop_size: usize,
    /// Air/tissue threshold for lung segmentation.
    pub seg_threshold_hu: i16,
    /// Structuring-element radius for closing the lung mask; 0 skips it.
    pub close_radius: usize,
    /// Worker count; 0 means one worker per core.
    pub threads: usize,
    /// Reserved for stochastic steps layered on top of the batch;
    /// preprocessing itself is deterministic and never reads it.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target_spacing_mm: 1.5,
            window_lo_hu: -1000,
            window_hi_hu: 400,
            crop_size: 160,
            seg_threshold_hu: -320,
            close_radius: 2,
            threads: 0,
            seed: 0,
        }
    }
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| PipelineError::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PipelineError::InvalidConfig(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    idx + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(PipelineError::InvalidConfig(format!(
                    "line {}: `{key}` set twice",
                    idx + 1
                )));
            }
            match key {
                "target_spacing_mm" => cfg.target_spacing_mm = parse_field(key, value)?,
                "window_lo_hu" => cfg.window_lo_hu = parse_field(key, value)?,
                "window_hi_hu" => cfg.window_hi_hu = parse_field(key, value)?,
                "crop_size" => cfg.crop_size = parse_field(key, value)?,
                "seg_threshold_hu" => cfg.seg_threshold_hu = parse_field(key, value)?,
                "close_radius" => cfg.close_radius = parse_field(key, value)?,
                "threads" => cfg.threads = parse_field(key, value)?,
                "seed" => cfg.seed = parse_field(key, value)?,
                _ => {
                    return Err(PipelineError::InvalidConfig(format!(
                        "line {}: unknown key `{key}`",
                        idx + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        if !path.is_file() {
            return Err(PipelineError::InvalidConfig(format!(
                "config file not found: {}",
                path.display()
            )));
        }
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        format!(
            "target_spacing_mm = {}\n\
             window_lo_hu = {}\n\
             window_hi_hu = {}\n\
             crop_size = {}\n\
             seg_threshold_hu = {}\n\
             close_radius = {}\n\
             threads = {}\n\
             seed = {}\n",
            self.target_spacing_mm,
            self.window_lo_hu,
            self.window_hi_hu,
            self.crop_size,
            self.seg_threshold_hu,
            self.close_radius,
            self.threads,
            self.seed,
        )
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.target_spacing_mm.is_finite() && self.target_spacing_mm > 0.0) {
            return Err(PipelineError::InvalidConfig(format!(
                "target_spacing_mm must be positive, got {}",
                self.target_spacing_mm
            )));
        }
        if self.window_lo_hu >= self.window_hi_hu {
            return Err(PipelineError::InvalidConfig(format!(
                "window must satisfy lo < hi, got [{}, {}]",
                self.window_lo_hu, self.window_hi_hu
            )));
        }
        if self.crop_size == 0 {
            return Err(PipelineError::InvalidConfig(
                "crop_size must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseStatus {
    Ok,
    /// Segmentation found nothing; the crop was taken about the volume
    /// center instead and the output still has the configured shape.
    SegmentationFallback,
    Error,
}

impl fmt::Display for CaseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CaseStatus::Ok => "ok",
            CaseStatus::SegmentationFallback => "segmentation-fallback",
            CaseStatus::Error => "error",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug)]
pub struct CaseResult {
    pub case_id: String,
    pub status: CaseStatus,
    /// Present for fallback and error cases; always a single line.
    pub message: Option<String>,
    pub wall_ms: u64,
}

/// Outcome of one batch: per-case rows in manifest order plus totals.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: RunConfig,
    pub cases: Vec<CaseResult>,
    pub total_wall_ms: u64,
}

impl RunReport {
    pub fn count(&self, status: CaseStatus) -> usize {
        self.cases.iter().filter(|c| c.status == status).count()
    }

    /// True when no case failed hard; fallbacks still count as success.
    pub fn all_succeeded(&self) -> bool {
        self.count(CaseStatus::Error) == 0
    }

    /// Line-oriented `key=value` text: the config echo, one block per
    /// case in manifest order, then totals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in self.config.to_text().lines() {
            let (key, value) = line.split_once('=').expect("config lines are key = value");
            out.push_str(&format!("config.{}={}\n", key.trim(), value.trim()));
        }
        for case in &self.cases {
            out.push_str(&format!("case.{}.status={}\n", case.case_id, case.status));
            if let Some(msg) = &case.message {
                out.push_str(&format!("case.{}.message={}\n", case.case_id, msg));
            }
            out.push_str(&format!("case.{}.wall_ms={}\n", case.case_id, case.wall_ms));
        }
        out.push_str(&format!("total.cases={}\n", self.cases.len()));
        out.push_str(&format!("total.ok={}\n", self.count(CaseStatus::Ok)));
        out.push_str(&format!(
            "total.fallback={}\n",
            self.count(CaseStatus::SegmentationFallback)
        ));
        out.push_str(&format!("total.error={}\n", self.count(CaseStatus::Error)));
        out.push_str(&format!("total.wall_ms={}\n", self.total_wall_ms));
        out
    }
}

/// One manifest row: a case id, a series directory and a 0/1 label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestRow {
    pub case_id: String,
    /// Series directory, taken relative to the manifest's directory
    /// unless absolute.
    pub path: PathBuf,
    pub label: u8,
}

/// Reads a `case_id,path,label` CSV. The header row is optional.
///
/// Case ids become output file names, so they must be plain names:
/// nonempty, no path separators, not a dot directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::ManifestNotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || (idx == 0 && line == "case_id,path,label") {
            continue;
        }
        let err = |reason: String| PipelineError::MalformedManifest {
            line: idx + 1,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(format!(
                "expected 3 comma-separated fields, got {}",
                fields.len()
            )));
        }
        let case_id = fields[0];
        if case_id.is_empty()
            || case_id.contains(['/', '\\'])
            || case_id == "."
            || case_id == ".."
        {
            return Err(err(format!("case id `{case_id}` is not a plain name")));
        }
        if fields[1].is_empty() {
            return Err(err("path is empty".to_string()));
        }
        let label: u8 = fields[2]
            .parse()
            .ok()
            .filter(|l| *l <= 1)
            .ok_or_else(|| err(format!("label must be 0 or 1, got `{}`", fields[2])))?;
        if !seen.insert(case_id.to_string()) {
            return Err(err(format!("case id `{case_id}` appears twice")));
        }
        rows.push(ManifestRow {
            case_id: case_id.to_string(),
            path: PathBuf::from(fields[1]),
            label,
        });
    }
    if rows.is_empty() {
        return Err(PipelineError::EmptyManifest(path.to_path_buf()));
    }
    Ok(rows)
}

/// Runs the full preprocess over every manifest row and writes one
/// `<case_id>.lvol` per case into `out_dir`.
///
/// Cases are independent, so they run on a pool of `config.threads`
/// workers; results are collected back into manifest order and the
/// written bytes are identical at any thread count. Per-case failures
/// land in the report as `error` rows and never abort the batch.
pub fn preprocess_batch(
    manifest_path: &Path,
    out_dir: &Path,
    config: &RunConfig,
) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let rows = read_manifest(manifest_path)?;
    let base = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;

    let started = Instant::now();
    let cases: Vec<CaseResult> = pool.install(|| {
        rows.par_iter()
            .map(|row| process_case(row, &base, out_dir, config))
            .collect()
    });
    Ok(RunReport {
        config: config.clone(),
        cases,
        total_wall_ms: started.elapsed().as_millis() as u64,
    })
}

fn process_case(row: &ManifestRow, base: &Path, out_dir: &Path, config: &RunConfig) -> CaseResult {
    let started = Instant::now();
    let series_dir = if row.path.is_absolute() {
        row.path.clone()
    } else {
        base.join(&row.path)
    };
    let out_path = out_dir.join(format!("{}.lvol", row.case_id));
    let (status, message) = match run_case(&series_dir, &out_path, config) {
        Ok(false) => (CaseStatus::Ok, None),
        Ok(true) => (
            CaseStatus::SegmentationFallback,
            Some("segmentation found no lung candidate; cropped about the volume center".to_string()),
        ),
        Err(msg) => (CaseStatus::Error, Some(single_line(&msg))),
    };
    CaseResult {
        case_id: row.case_id.clone(),
        status,
        message,
        wall_ms: started.elapsed().as_millis() as u64,
    }
}

/// Returns whether the center fallback was taken.
fn run_case(series_dir: &Path, out_path: &Path, config: &RunConfig) -> Result<bool, String> {
    let (vol, _meta) = read_series_dir(series_dir).map_err(|e| e.to_string())?;
    let iso = trilinear_resample(&vol, Spacing::iso(config.target_spacing_mm))
        .map_err(|e| e.to_string())?;
    let (center, fallback) = match locate_lungs(&iso, config) {
        Some(center) => (center, false),
        None => (volume_center(iso.dims()), true),
    };
    let windowed =
        window_hu(&iso, config.window_lo_hu, config.window_hi_hu).map_err(|e| e.to_string())?;
    let size = Dims::new(config.crop_size, config.crop_size, config.crop_size);
    let crop = crop_centered_u8(&windowed, center, size, 0);
    let lvol = Lvol {
        dims: crop.dims(),
        spacing_mm: crop.spacing_mm(),
        payload: LvolPayload::U8(crop.into_voxels()),
    };
    lvol.write(out_path).map_err(|e| e.to_string())?;
    Ok(fallback)
}

fn locate_lungs(vol: &HuVolume, config: &RunConfig) -> Option<(usize, usize, usize)> {
    let air = binarize_air(vol, config.seg_threshold_hu);
    let labels = connected_components(&air, Connectivity::Six);
    let lungs = extract_lung_mask(&labels).ok()?;
    let closed = morphological_close(&lungs, config.close_radius);
    bounding_box(&closed).ok().map(|bbox| bbox.center)
}

// Floor midpoint of the full extent, matching the bbox convention.
fn volume_center(dims: Dims) -> (usize, usize, usize) {
    (
        (dims.depth - 1) / 2,
        (dims.height - 1) / 2,
        (dims.width - 1) / 2,
    )
}

fn single_line(msg: &str) -> String {
    msg.split(['\n', '\r'])
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .collect::<Vec<_>>()
        .join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::write::{encode_ct_slice, SliceParams};
    use crate::lvol::read_lvol;
    use crate::phantom::{generate_cohort_from, PhantomSpec};

    fn small_cohort(dir: &Path, n: usize) {
        // Coarse grid keeps generation and preprocessing cheap.
        let template = PhantomSpec::baseline(Dims::new(24, 24, 24), Spacing::iso(4.0), 0);
        generate_cohort_from(&template, dir, n, 0.4, 7).unwrap();
    }

    fn small_config(threads: usize) -> RunConfig {
        RunConfig {
            target_spacing_mm: 3.0,
            crop_size: 48,
            threads,
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_round_trips_through_text() {
        let default = RunConfig::default();
        assert_eq!(RunConfig::from_text(&default.to_text()).unwrap(), default);

        let custom = RunConfig {
            target_spacing_mm: 0.75,
            window_lo_hu: -1200,
            window_hi_hu: -100,
            crop_size: 96,
            seg_threshold_hu: -500,
            close_radius: 0,
            threads: 4,
            seed: 123_456_789,
        };
        assert_eq!(RunConfig::from_text(&custom.to_text()).unwrap(), custom);
    }

    #[test]
    fn config_text_allows_comments_and_partial_keys() {
        let text = "# batch settings\n\n  crop_size = 32\nthreads=2\n";
        let cfg = RunConfig::from_text(text).unwrap();
        assert_eq!(cfg.crop_size, 32);
        assert_eq!(cfg.threads, 2);
        assert_eq!(cfg.target_spacing_mm, 1.5);
        assert_eq!(cfg.window_hi_hu, 400);

        let empty = RunConfig::from_text("").unwrap();
        assert_eq!(empty, RunConfig::default());
    }

    #[test]
    fn config_rejects_bad_text() {
        let bad = [
            "verbosity = 3",                            // unknown key
            "crop_size = 32\ncrop_size = 64",           // duplicate
            "crop_size = many",                         // unparseable
            "crop_size",                                // no separator
            "crop_size = 0",                            // degenerate crop
            "target_spacing_mm = 0",                    // degenerate spacing
            "target_spacing_mm = nan",                  // non-finite
            "window_lo_hu = 400\nwindow_hi_hu = -1000", // inverted window
        ];
        for text in bad {
            assert!(
                matches!(
                    RunConfig::from_text(text),
                    Err(PipelineError::InvalidConfig(_))
                ),
                "accepted: {text}"
            );
        }
    }

    #[test]
    fn batch_preprocesses_a_phantom_cohort() {
        let cohort = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        small_cohort(cohort.path(), 5);

        let config = small_config(1);
        let report = preprocess_batch(&cohort.path().join("manifest.csv"), out.path(), &config)
            .unwrap();

        assert_eq!(report.cases.len(), 5);
        assert!(report.all_succeeded());
        assert_eq!(report.count(CaseStatus::Ok), 5);
        for (i, case) in report.cases.iter().enumerate() {
            // Rows stay in manifest order no matter which worker finished first.
            assert_eq!(case.case_id, format!("case_{i:04}"));
            assert_eq!(case.status, CaseStatus::Ok);
            assert!(case.message.is_none());

            let lvol = read_lvol(&out.path().join(format!("{}.lvol", case.case_id))).unwrap();
            assert_eq!(lvol.dims, Dims::new(48, 48, 48));
            assert_eq!(lvol.spacing_mm, Spacing::iso(3.0));
            assert!(matches!(lvol.payload, LvolPayload::U8(_)));
        }
    }

    #[test]
    fn batch_output_is_thread_count_invariant() {
        let cohort = tempfile::tempdir().unwrap();
        small_cohort(cohort.path(), 5);
        let manifest = cohort.path().join("manifest.csv");

        let mut baseline: Option<Vec<(CaseStatus, Vec<u8>)>> = None;
        for threads in [1, 2, 4] {
            let out = tempfile::tempdir().unwrap();
            let report =
                preprocess_batch(&manifest, out.path(), &small_config(threads)).unwrap();
            let outputs: Vec<(CaseStatus, Vec<u8>)> = report
                .cases
                .iter()
                .map(|case| {
                    let path = out.path().join(format!("{}.lvol", case.case_id));
                    (case.status, fs::read(path).unwrap())
                })
                .collect();
            match &baseline {
                None => baseline = Some(outputs),
                Some(expected) => assert_eq!(&outputs, expected, "threads={threads}"),
            }
        }
    }

    #[test]
    fn failed_case_is_reported_and_isolated() {
        let cohort = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        small_cohort(cohort.path(), 3);
        let manifest = cohort.path().join("manifest.csv");
        let mut text = fs::read_to_string(&manifest).unwrap();
        text.push_str("ghost,no_such_dir,0\n");
        fs::write(&manifest, text).unwrap();

        let report = preprocess_batch(&manifest, out.path(), &small_config(1)).unwrap();
        assert_eq!(report.cases.len(), 4);
        assert_eq!(report.count(CaseStatus::Ok), 3);
        assert_eq!(report.count(CaseStatus::Error), 1);
        assert!(!report.all_succeeded());

        let ghost = &report.cases[3];
        assert_eq!(ghost.case_id, "ghost");
        assert_eq!(ghost.status, CaseStatus::Error);
        let msg = ghost.message.as_deref().unwrap();
        assert!(!msg.is_empty() && !msg.contains('\n'));
        assert!(!out.path().join("ghost.lvol").exists());
    }

    #[test]
    fn all_air_volume_takes_the_center_fallback() {
        let cohort = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let series = cohort.path().join("flat");
        fs::create_dir(&series).unwrap();
        // Uniform air: binarization marks everything, the single component
        // touches the border and gets dropped, so segmentation comes up empty.
        let raw = vec![0u16; 16 * 16];
        for z in 0..8 {
            let bytes = encode_ct_slice(&SliceParams {
                rows: 16,
                cols: 16,
                pixel_spacing_mm: (1.0, 1.0),
                slice_thickness_mm: 1.0,
                image_position_mm: (0.0, 0.0, f64::from(z)),
                rescale_slope: 1.0,
                rescale_intercept: -1024.0,
                sop_instance_uid: &format!("1.2.840.99999.7.{z}"),
                raw_pixels: &raw,
            });
            fs::write(series.join(format!("slice_{z:03}.dcm")), bytes).unwrap();
        }
        let manifest = cohort.path().join("manifest.csv");
        fs::write(&manifest, "case_id,path,label\nflat,flat,0\n").unwrap();

        let config = RunConfig {
            target_spacing_mm: 1.0,
            crop_size: 24,
            threads: 1,
            ..RunConfig::default()
        };
        let report = preprocess_batch(&manifest, out.path(), &config).unwrap();
        assert_eq!(report.cases.len(), 1);
        assert_eq!(report.cases[0].status, CaseStatus::SegmentationFallback);
        assert!(report.cases[0].message.is_some());
        assert!(report.all_succeeded());

        // The fallback still writes a full-size crop.
        let lvol = read_lvol(&out.path().join("flat.lvol")).unwrap();
        assert_eq!(lvol.dims, Dims::new(24, 24, 24));
    }

    #[test]
    fn report_text_echoes_the_config_and_totals() {
        let cohort = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        small_cohort(cohort.path(), 3);
        let config = small_config(2);
        let report = preprocess_batch(&cohort.path().join("manifest.csv"), out.path(), &config)
            .unwrap();
        let text = report.to_text();

        // The config echo parses back to exactly the config that ran.
        let echoed: String = text
            .lines()
            .filter_map(|l| l.strip_prefix("config."))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(RunConfig::from_text(&echoed).unwrap(), config);

        for i in 0..3 {
            assert!(text.contains(&format!("case.case_{i:04}.status=ok")));
            assert!(text.contains(&format!("case.case_{i:04}.wall_ms=")));
        }
        assert!(text.contains("total.cases=3\n"));
        assert!(text.contains("total.ok=3\n"));
        assert!(text.contains("total.fallback=0\n"));
        assert!(text.contains("total.error=0\n"));

        // Case rows follow manifest order.
        let pos: Vec<usize> = (0..3)
            .map(|i| text.find(&format!("case.case_{i:04}.status")).unwrap())
            .collect();
        assert!(pos[0] < pos[1] && pos[1] < pos[2]);
    }

    #[test]
    fn manifest_parsing_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.csv");

        assert!(matches!(
            read_manifest(&dir.path().join("missing.csv")),
            Err(PipelineError::ManifestNotFound(_))
        ));

        fs::write(&manifest, "case_id,path,label\n").unwrap();
        assert!(matches!(
            read_manifest(&manifest),
            Err(PipelineError::EmptyManifest(_))
        ));

        let bad_rows = [
            "a,series_a\n",          // two fields
            "a,series_a,2\n",        // label out of range
            "a,series_a,yes\n",      // unparseable label
            ",series_a,0\n",         // empty id
            "a/b,series_a,0\n",      // separator in id
            "..,series_a,0\n",       // dot directory
            "a,,0\n",                // empty path
            "a,series_a,0\na,s,1\n", // duplicate id
        ];
        for rows in bad_rows {
            fs::write(&manifest, format!("case_id,path,label\n{rows}")).unwrap();
            let got = read_manifest(&manifest);
            assert!(
                matches!(got, Err(PipelineError::MalformedManifest { .. })),
                "accepted: {rows:?}"
            );
        }

        // Headerless manifests and absolute paths are fine.
        fs::write(&manifest, "c1,/abs/series,1\n").unwrap();
        let rows = read_manifest(&manifest).unwrap();
        assert_eq!(
            rows,
            vec![ManifestRow {
                case_id: "c1".to_string(),
                path: PathBuf::from("/abs/series"),
                label: 1,
            }]
        );
    }
}
