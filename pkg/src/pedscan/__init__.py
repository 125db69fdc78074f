"""pedscan: CPU pedestrian detection with batch-LBP + AdaBoost and
LUT-accelerated HOG + linear SVM pipelines."""

from .classify import (TrainConfig, WeakLearner, adaboost_score, adaboost_train,
                       bootstrap_mine, svm_objective, svm_score, svm_train)
from .datasets import (DatasetStats, GroundTruthBox, ManifestEntry,
                       extract_positives, parse_inria_annotation,
                       parse_manifest, parse_voc_annotation,
                       sample_negative_rects, sample_negatives, stats)
from .detector import (DetectConfig, Detection, DetectStats, detect,
                       format_detection_line, map_to_original, nms,
                       pyramid_build, scan, window_grid)
from .errors import InputFormatError, ModelVersionError, PedscanError
from .estimators import HogSvmDetector, LbpAdaBoostDetector, as_patch_stack
from .evaluation import (EvalReport, MatchResult, evaluate, is_match,
                         match_one_image, speed_quality_point)
from .hog import (GradientLut, HogConfig, cell_histograms,
                  descriptors_for_patches, descriptors_for_windows, get_lut,
                  gradients, level_block_grid, lut_build, split_votes,
                  window_descriptor, window_descriptor_direct)
from .images import (OpCounter, Rect, as_gray, batch_sum_field, integral_build,
                     rect_sum, resize, to_grayscale)
from .lbp import (LbpConfig, LbpFeature, codes_for_features, feature_pool,
                  lbp_code, lbp_map_classic, lbp_map_direct, lbp_map_integral)
from .modelio import load_model, loads_model, save_model

__version__ = "0.1.0"
