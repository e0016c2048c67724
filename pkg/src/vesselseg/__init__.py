"""Unsupervised retinal vessel segmentation with top-hat preprocessing,
CLAHE and a 2D Gabor wavelet bank, plus DRIVE-style evaluation."""
from .clahe import ClaheConfig
from .config import PipelineConfig, load_config, parse_config
from .dataset import Case, load_case, read_manifest, scan_drive
from .evaluation import ConfusionCounts, MetricsRecord, basic_metrics, confusion, kappa, roc_auc
from .gabor import BankConfig, GaborParams, build_bank, gabor_kernel, max_response, normalize01
from .morphology import disk_se, white_top_hat
from .pipeline import SegmentationResult, run_batch, run_single, segment
from .thresholding import binarize, otsu_threshold

__version__ = "0.1.0"
