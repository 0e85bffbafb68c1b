use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("step called after the episode finished")]
    SteppedAfterDone,
    #[error("{mode} action mode is not supported for {task}")]
    UnsupportedMode { task: String, mode: String },
    #[error("no image with label {0} in the digit set")]
    LabelNotFound(u8),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Image(_) => 3,
            Error::ReplayMismatch(_) => 4,
            _ => 2,
        }
    }
}
