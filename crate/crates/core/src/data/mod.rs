//! Volumes, synthetic datasets, labeled/unlabeled splits, two-stream batches,
//! flip/rotation augmentation and the portable volume file format.

mod augment;
mod batch;
mod dataset;
mod io;
mod synth;
mod volume;

pub use augment::{augment, Transform};
pub use batch::{reflect_index, crop, sample_batch, Batch, BatchComposition};
pub use dataset::{split_labeled, Case, Dataset};
pub use io::{
    load_image, load_mask, load_volume, read_dataset, save_volume, write_dataset, ManifestEntry,
    Split, VolumeFile, DATASET_MANIFEST,
};
pub use synth::{generate_synthetic, ShapeFamily, SynthConfig};
pub use volume::Volume;
