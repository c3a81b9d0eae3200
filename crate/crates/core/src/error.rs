use crate::geodata::GeoPoint;
use crate::regulatory::Channel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point {0} lies outside the raster")]
    OutOfBounds(GeoPoint),

    #[error("raster has no data near {0}")]
    NoData(GeoPoint),

    #[error("parse error at row {row}: {reason}")]
    Parse { row: usize, reason: String },

    #[error("invariant violated for `{field}`{}: {detail}", row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    InvariantViolation {
        field: &'static str,
        row: Option<usize>,
        detail: String,
    },

    #[error("outside model domain: {0}")]
    Domain(String),

    #[error("loss is not monotone in distance between {lo_m} m and {hi_m} m")]
    NonMonotone { lo_m: f64, hi_m: f64 },

    #[error("channel {0} is not available at the requested location")]
    ChannelUnavailable(Channel),

    #[error("unknown transmitter `{0}`")]
    UnknownTransmitter(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invariant(field: &'static str, detail: impl Into<String>) -> Self {
        Error::InvariantViolation {
            field,
            row: None,
            detail: detail.into(),
        }
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        match self {
            Error::InvariantViolation { field, detail, .. } => Error::InvariantViolation {
                field,
                row: Some(row),
                detail,
            },
            other => other,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            row,
            reason: e.to_string(),
        }
    }
}
