"""Exception types shared across the package."""


class GroundTrackError(Exception):
    """Base class for package-specific errors."""


class CalibrationError(GroundTrackError):
    """Camera model construction failed or calibration inputs are inconsistent."""


class DegenerateGeometryError(GroundTrackError):
    """Geometric input carries no usable information (collinear, zero area, ...)."""


class HorizonError(GroundTrackError):
    """Image point back-projects to a ray parallel to the ground plane."""


class BehindCameraError(GroundTrackError):
    """The ray-plane intersection lies behind the camera center."""


class TrackParseError(GroundTrackError):
    """Track input rejected.  ``problems`` holds one message per offending line."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
