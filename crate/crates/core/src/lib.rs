//! Deterministic CT preprocessing and evaluation toolkit.
//!
//! The central path turns a directory of DICOM slices into a fixed-size
//! training crop: assemble the series into a signed HU volume, resample
//! it to isotropic spacing, segment the lungs to find a crop center,
//! window the intensities to `[0, 255]`, and cut a cube around the
//! center. [`pipeline`] runs that chain over a whole manifest in
//! parallel with bit-identical output for any worker count.
//!
//! Around the core sit the pieces needed to exercise and evaluate it:
//! 2D-to-3D kernel inflation with a verification convolution engine
//! ([`inflate`]), loss functions and a small Adam trainer
//! ([`objectives`]), ROC analysis and deterministic splits
//! ([`evaluate`]), and a synthetic thorax generator ([`phantom`]) that
//! provides ground truth for all of it.

pub mod dicom;
pub mod evaluate;
pub mod inflate;
pub mod lvol;
pub mod objectives;
pub mod phantom;
pub mod pipeline;
pub mod resample;
pub mod segment;
mod shuffle;
pub mod volume;
pub mod window;

pub use dicom::{
    assemble_series, parse_dicom_file, read_series_dir, DicomError, DicomSlice, SeriesMeta,
};
pub use evaluate::{
    accuracy, assign_bucket, auc_mann_whitney, read_scores_csv, roc_curve, split, write_roc_csv,
    write_scores_csv, EvalError, RocCurve, RocPoint, ScoredCase,
};
pub use inflate::{
    boring_volume, conv2d, conv3d, inflate_kernel, maxpool3d, read_lvw, write_lvw, ConvError,
    FeatureMap2d, FeatureMap3d, Kernel2d, Kernel3d, LvwError, LvwKernel, Padding,
};
pub use lvol::{load_tensor_trichannel, read_lvol, Lvol, LvolError, LvolPayload};
pub use objectives::{
    adam_step, cross_entropy, dropout, focal_loss, train_logistic, AdamState, EpochStats,
    LossKind, LossValue, ObjectiveError, TrainConfig, TrainedModel, DEFAULT_FOCAL_ALPHA,
    DEFAULT_FOCAL_GAMMA, DEFAULT_LEARNING_RATE,
};
pub use phantom::{
    generate_cohort, generate_cohort_from, generate_phantom, read_features_csv, truth_mask_at,
    CohortCase, Ellipsoid, Nodule, PhantomError, PhantomSpec, PhantomTruth,
};
pub use pipeline::{
    preprocess_batch, read_manifest, CaseResult, CaseStatus, ManifestRow, PipelineError,
    RunConfig, RunReport,
};
pub use resample::trilinear_resample;
pub use segment::{
    binarize_air, bounding_box, connected_components, extract_lung_mask, morphological_close,
    BBox, Connectivity, LabelMap, Mask, SegmentError,
};
pub use volume::{Dims, HuVolume, Spacing, TriChannelTensor, U8Volume, HU_MAX, HU_MIN};
pub use window::{crop_centered, crop_centered_raw, crop_centered_u8, window_hu, WindowError};
