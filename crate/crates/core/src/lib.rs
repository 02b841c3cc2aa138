pub mod cli;
pub mod dicom;
pub mod jpeg;
pub mod metadata;
pub mod search;
pub mod service;
pub mod tagging;
pub mod uid;
