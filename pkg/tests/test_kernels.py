import os
import subprocess
import sys

import numpy as np
import pytest

from alluvial_lab import _kernels
from oracles import brute_force_crossings

needs_numba = pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not installed")


def flows_from_positions(gap, src, tgt):
    # positions become slots under identity orderings
    return [((int(g), int(s)), (int(g) + 1, int(t))) for g, s, t in zip(gap, src, tgt)]


@needs_numba
def test_crossing_backends_agree_with_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        f = int(rng.integers(0, 60))
        gap = rng.integers(0, 4, f)
        src = rng.integers(0, 6, f)
        tgt = rng.integers(0, 6, f)
        orderings = [list(range(6))] * 5
        expected = brute_force_crossings(flows_from_positions(gap, src, tgt), orderings)
        assert _kernels.crossings_numba(gap, src, tgt) == expected
        assert _kernels.crossings_numpy(gap, src, tgt) == expected


@needs_numba
def test_likelihood_backends_agree():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 4)) * 20
    means = rng.normal(size=(3, 4))
    var = rng.uniform(1e-6, 4, size=(3, 4))
    lp = np.log([0.2, 0.3, 0.5])
    np.testing.assert_allclose(
        _kernels.joint_log_likelihood_numba(X, means, var, lp),
        _kernels.joint_log_likelihood_numpy(X, means, var, lp),
        rtol=1e-12,
    )


def test_empty_inputs():
    assert _kernels.crossings_numpy([], [], []) == 0
    assert _kernels.count_gap_crossings([0], [0], [0]) == 0


def test_env_flag_selects_numpy():
    env = dict(os.environ, ALLUVIAL_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from alluvial_lab import _kernels; print(_kernels.USE_NUMBA)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "False"


def test_pipeline_identical_across_backends(tmp_path):
    script = (
        "from alluvial_lab.generator import GeneratorConfig, generate_corpus\n"
        "from alluvial_lab.layout import layout\n"
        "from alluvial_lab.render import render_svg\n"
        "for d in generate_corpus(GeneratorConfig(seed=4), 6): print(render_svg(layout(d)))\n"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, ALLUVIAL_NO_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-c", script], env=env, capture_output=True, check=True).stdout)
    assert outs[0] == outs[1]
