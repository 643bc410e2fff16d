//! Vector and matrix storage with length-square sampling, plus dataset
//! file I/O.

mod dataset;
mod io;
mod matrix;
mod tree;

pub use dataset::LabeledDataset;
pub use io::{
    load_dataset, load_labels, load_matrix, load_split, save_dataset, save_labels, save_matrix,
    save_split, DatasetPaths,
};
pub use matrix::SampledMatrix;
pub use tree::SampleTree;
