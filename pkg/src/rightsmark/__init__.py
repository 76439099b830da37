"""Image rights registration: perceptual hashing, a hash-chained ledger,
blind QR watermarking and layered tamper detection."""

from .detection import TamperDetector, TamperReport, detect_report
from .identity import DHasher, Hash64, dhash, hamming64, image_digest
from .pipeline import OwnerInfo, PipelineConfig, VerificationReport, bench, register, verify
from .registry import ContentStore, Ledger, RegistrationArgs, validate_chain
from .watermark import Codec, DCTSVDWatermark, DCTWatermark, DWTDCTWatermark, embed, extract

__version__ = "0.1.0"
