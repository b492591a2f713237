"""Seam defect inspection: path recognition, thread-color rule checking,
defect reporting, and synthetic scene generation for closed-loop verification."""

from .binarization import (Polarity, ThresholdResult, binarize, class_stats,
                           histogram, otsu_threshold)
from .config import (ColorBand, ColorClass, GeometryMode, HoughSettings,
                     InspectionConfig, StitchRule, StitchType, default_config,
                     load_config)
from .errors import (ConfigError, DegenerateHistogram, EmptyImage, KernelTooLarge,
                     MalformedFile, NoSupport, OverlappingBands, PathOutsideImage,
                     SeamcheckError, SpecInvalid, UnsupportedFormat)
from .hough import (CircleParams, CircularPath, LineAccumulator, LinearPath,
                    LineParams, LinePeak, SeamPath, extract_line_peaks,
                    hough_circles, hough_lines, line_extent,
                    midpoint_circle_offsets)
from .imagekit import (decode_image, encode_image, encode_pgm, encode_png,
                       gaussian_kernel, gaussian_smooth, hsv_to_rgb, rgb_to_hsv,
                       to_grayscale)
from .inspection import (Defect, DefectKind, InspectionReport, PathReport,
                         PathSample, SampleSequence, Verdict, annotate,
                         classify_pixel, detect_missing, detect_skipped,
                         detect_superimposed, inspect, run_pipeline, sample_path)
from .synthgen import (EvalResult, GroundTruth, InjectedDefect, ScenePath,
                       SceneSpec, circular_path, evaluate, gaussian_field,
                       linear_path_from_endpoints, render_scene, scene_from_dict,
                       scene_to_dict, splitmix64_stream, truth_from_dict,
                       truth_to_dict)

__version__ = "0.1.0"
