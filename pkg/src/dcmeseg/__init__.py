"""Instance segmentation by center-of-mass displacement fields and grid classification."""

from .codec import (CenterOfMass, DecodeParams, Detection, center_of_mass,
                    decode, encode, magnitude_map)
from .core import (BACKGROUND, CLASS_IDS, CLASS_NAMES, BlockCoord, ClassGrid,
                   Dims, GridSpec, InstanceLabelMap, PixelCoord,
                   ValidationError, VectorField)
from .evaluation import (AccuracyReport, ApThresholds, EvalReport,
                         average_precision, class_oracle_eval,
                         classification_accuracy, detection_accuracy,
                         evaluate, evaluate_many, halfres_roundtrip_eval,
                         instance_oracle_eval, iou)
from .grid import (block_to_image_origin, build_class_grid, class_of_instance,
                   derive_priority, grid_size, image_to_block)
from .loss import (BatchShape, LossConfig, LossResult, clip_error,
                   clip_error_grad, decoder_loss, mse, sample_count)
from .synth import SceneSpec, generate_scene

__version__ = "0.1.0"
