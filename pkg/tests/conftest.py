"""Shared fixture builders: synthetic scenes paired with matching configs."""

from __future__ import annotations

import dataclasses

import numpy as np

from seamcheck import (GeometryMode, HoughSettings, InjectedDefect, ScenePath,
                       SceneSpec, StitchRule, StitchType, circular_path,
                       default_config, linear_path_from_endpoints)
from seamcheck.inspection import DefectKind

PITCH = 16.0
THREAD_WIDTH = 9
CIRCLE_RADIUS = 40.0

# spans chosen so every detector has margin: missing/skipped cover 3 stitch
# cells, superimposed 5 (its sliding window needs > 2 cells of overlap)
DEFECT_SPANS = {
    DefectKind.MISSING_STITCH: (64.0, 112.0),
    DefectKind.SKIPPED_STITCH: (64.0, 112.0),
    DefectKind.SUPERIMPOSED_SEAM: (64.0, 144.0),
}


def make_rule(stitch_type: StitchType) -> StitchRule:
    return StitchRule(stitch_type, pitch=PITCH)


def line_scene(stitch_type: StitchType, defect: DefectKind | None = None, *,
               seed: int = 0, noise: float = 0.0) -> SceneSpec:
    rule = make_rule(stitch_type)
    geom = linear_path_from_endpoints((20.0, 120.0), (300.0, 120.0))
    injected = () if defect is None else (InjectedDefect(defect, DEFECT_SPANS[defect]),)
    path = ScenePath(geometry=geom, rule=rule, thread_width=THREAD_WIDTH, injected=injected)
    return SceneSpec(width=320, height=240, fabric_noise_sigma=noise,
                     paths=(path,), rng_seed=seed)


def circle_scene(stitch_type: StitchType, defect: DefectKind | None = None, *,
                 seed: int = 0, noise: float = 0.0) -> SceneSpec:
    rule = make_rule(stitch_type)
    geom = circular_path((160.0, 120.0), CIRCLE_RADIUS)
    injected = () if defect is None else (InjectedDefect(defect, DEFECT_SPANS[defect]),)
    path = ScenePath(geometry=geom, rule=rule, thread_width=THREAD_WIDTH, injected=injected)
    return SceneSpec(width=320, height=240, fabric_noise_sigma=noise,
                     paths=(path,), rng_seed=seed)


def config_for(spec: SceneSpec):
    """Inspection config matched to a single-path scene: the seam geometry and
    stitch type are production knowledge, so the config encodes them."""
    path = spec.paths[0]
    is_circle = hasattr(path.geometry, "circle")
    if is_circle:
        radius = path.geometry.circle.radius
        hough = HoughSettings(r_min=radius - 3, r_max=radius + 3, r_step=1.0,
                              circle_vote_fraction=0.35, max_circles=1)
        return dataclasses.replace(default_config(), circle_rule=path.rule,
                                   geometry=GeometryMode.CIRCLES, hough=hough)
    hough = HoughSettings(max_lines=1)
    return dataclasses.replace(default_config(), line_rule=path.rule, hough=hough)


def scene_matrix(noise: float = 0.0) -> list[tuple[str, SceneSpec]]:
    """Twelve scenes covering geometry x stitch type x defect kinds."""
    lock, chain = StitchType.LOCKSTITCH_301, StitchType.CHAINSTITCH_401
    missing = DefectKind.MISSING_STITCH
    skipped = DefectKind.SKIPPED_STITCH
    doubled = DefectKind.SUPERIMPOSED_SEAM
    combos = [
        ("line-lock-conforming", line_scene, lock, None),
        ("line-lock-missing", line_scene, lock, missing),
        ("line-lock-skipped", line_scene, lock, skipped),
        ("line-chain-conforming", line_scene, chain, None),
        ("line-chain-superimposed", line_scene, chain, doubled),
        ("line-chain-missing", line_scene, chain, missing),
        ("circle-lock-conforming", circle_scene, lock, None),
        ("circle-lock-skipped", circle_scene, lock, skipped),
        ("circle-lock-superimposed", circle_scene, lock, doubled),
        ("circle-chain-conforming", circle_scene, chain, None),
        ("circle-chain-missing", circle_scene, chain, missing),
        ("circle-chain-skipped", circle_scene, chain, skipped),
    ]
    return [(name, builder(stitch, defect, seed=31 * i + 1, noise=noise))
            for i, (name, builder, stitch, defect) in enumerate(combos)]


def random_histogram(rng: np.random.Generator) -> np.ndarray:
    """Mixture of 1-4 roughly Gaussian intensity clusters."""
    counts = np.zeros(256, dtype=np.int64)
    idx = np.arange(256, dtype=np.float64)
    for _ in range(int(rng.integers(1, 5))):
        center = rng.uniform(0.0, 255.0)
        sigma = rng.uniform(2.0, 40.0)
        amplitude = rng.uniform(5.0, 250.0)
        counts += np.round(amplitude * np.exp(-((idx - center) ** 2) / (2 * sigma * sigma))).astype(np.int64)
    if np.count_nonzero(counts) < 2:
        counts[40] += 7
        counts[210] += 9
    return counts
