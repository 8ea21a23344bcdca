"""Motion estimation for equisolid fisheye video.

Combines full-search translational block matching with a matcher that applies
each candidate translation in the perspective domain and re-projects onto the
fisheye image, choosing per block whichever predicts better.
"""
from .metrics import FrameScore, block_sad, block_ssd, luma_psnr
from .motion import (
    Block,
    BlockResult,
    CompensationResult,
    Mode,
    MotionVector,
    SearchConfig,
    eme_search,
    hybrid_compensate,
    render_decision_map,
    tme_search,
)
from .projection import (
    CameraModel,
    DomainExceeded,
    PixelPos,
    SensorPoint,
    backproject_point,
    equisolid_radius,
    equisolid_to_perspective,
    perspective_radius,
    perspective_to_equisolid,
    pixel_to_sensor,
    reproject_point,
    sensor_to_pixel,
)
from .sampling import UpsampledReference, sample_at, upsample

__version__ = "0.1.0"
