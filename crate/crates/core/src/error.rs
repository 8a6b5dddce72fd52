use core::fmt;

/// Errors produced by the segmentation core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Width or height is zero, or the pixel buffer does not match them.
    InvalidDimensions { width: usize, height: usize, len: usize },
    /// Frames of a sequence (or a frame and a mask) disagree in size.
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    EmptySequence,
    /// A tunable is outside its documented range.
    InvalidParameter(&'static str),
    /// The artifact mask covers every pixel of the frame.
    DegenerateMask,
    /// Nothing on the seed chain survived the area band.
    NoCandidateRegions,
    /// Outlier removal rejected every region.
    SelectionDegenerate,
    EmptySeries,
    /// Second moments do not describe a proper ellipse.
    DegenerateRegion,
    EmptyContour,
    EmptyMasks,
    ZeroManualArea,
    SeedOutOfBounds { x: usize, y: usize },
    InvalidPhantom(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimensions { width, height, len } => {
                write!(f, "invalid dimensions {width}x{height} for {len} pixels")
            }
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::EmptySequence => f.write_str("empty sequence"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::DegenerateMask => f.write_str("degenerate mask"),
            Error::NoCandidateRegions => f.write_str("no candidate regions"),
            Error::SelectionDegenerate => f.write_str("selection degenerate"),
            Error::EmptySeries => f.write_str("empty region series"),
            Error::DegenerateRegion => f.write_str("degenerate region"),
            Error::EmptyContour => f.write_str("empty contour"),
            Error::EmptyMasks => f.write_str("both masks empty"),
            Error::ZeroManualArea => f.write_str("zero manual area"),
            Error::SeedOutOfBounds { x, y } => write!(f, "seed ({x}, {y}) outside frame"),
            Error::InvalidPhantom(what) => write!(f, "invalid phantom spec: {what}"),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    /// Stable machine-readable identifier used in error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDimensions { .. } => "invalid_dimensions",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::EmptySequence => "empty_sequence",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DegenerateMask => "degenerate_mask",
            Error::NoCandidateRegions => "no_candidate_regions",
            Error::SelectionDegenerate => "selection_degenerate",
            Error::EmptySeries => "empty_series",
            Error::DegenerateRegion => "degenerate_region",
            Error::EmptyContour => "empty_contour",
            Error::EmptyMasks => "empty_masks",
            Error::ZeroManualArea => "zero_manual_area",
            Error::SeedOutOfBounds { .. } => "seed_out_of_bounds",
            Error::InvalidPhantom(_) => "invalid_phantom",
        }
    }
}
