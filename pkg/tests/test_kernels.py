import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gridcompress import _kernels

from oracles import bbox, bfs_components, partition_key

BACKENDS = [
    pytest.param((_kernels.greedy_rect_cover_py, _kernels.label_components_py), id="python"),
    pytest.param((_kernels.greedy_rect_cover, _kernels.label_components), id=_kernels.BACKEND),
]

code_grids = arrays(np.int32, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.integers(0, 3))


def check_cover(codes, rects):
    covered = np.zeros(codes.shape, dtype=np.int32)
    for v, t, l, b, r in rects:
        block = codes[t:b + 1, l:r + 1]
        assert v != 0 and (block == v).all()
        covered[t:b + 1, l:r + 1] += 1
    assert ((covered == 1) == (codes != 0)).all()
    assert covered.max(initial=0) <= 1


@pytest.mark.parametrize("impl", BACKENDS)
class TestRectCover:
    def test_runs(self, impl):
        codes = np.array([[1, 1, 2], [1, 1, 2], [0, 3, 3]], dtype=np.int32)
        rects = impl[0](codes).tolist()
        assert rects == [[1, 0, 0, 1, 1], [2, 0, 2, 1, 2], [3, 2, 1, 2, 2]]

    def test_checkerboard_has_no_merges(self, impl):
        codes = np.array([[1, 2], [2, 1]], dtype=np.int32)
        assert len(impl[0](codes)) == 4

    def test_all_empty(self, impl):
        assert impl[0](np.zeros((3, 4), dtype=np.int32)).shape == (0, 5)

    @settings(max_examples=200)
    @given(codes=code_grids)
    def test_exact_cover(self, impl, codes):
        check_cover(codes, impl[0](codes))


@pytest.mark.parametrize("impl", BACKENDS)
class TestLabeling:
    def test_two_stacked_columns(self, impl):
        keys = np.array([[1, 1], [1, 1], [2, 2]], dtype=np.int32)
        labels, boxes = impl[1](keys)
        assert labels.tolist() == [[0, 0], [0, 0], [1, 1]]
        assert boxes.tolist() == [[0, 0, 1, 1], [2, 0, 2, 1]]

    def test_u_shape_box_exceeds_component(self, impl):
        keys = np.array([[1, 2, 1], [1, 2, 1], [1, 1, 1]], dtype=np.int32)
        labels, boxes = impl[1](keys)
        assert boxes[labels[0, 0]].tolist() == [0, 0, 2, 2]
        assert (labels == labels[0, 0]).sum() == 7

    @settings(max_examples=200)
    @given(codes=code_grids)
    def test_matches_bfs(self, impl, codes):
        labels, boxes = impl[1](codes)
        comps = {}
        for (i, j), lab in np.ndenumerate(labels):
            comps.setdefault(int(lab), set()).add((i, j))
        assert partition_key(comps.values()) == partition_key(bfs_components(codes.tolist()))
        for lab, cells in comps.items():
            assert tuple(boxes[lab]) == bbox(cells)
        # labels are numbered in row-major seed order
        seeds = [min(c) for _, c in sorted(comps.items())]
        assert seeds == sorted(seeds)


@settings(max_examples=100)
@given(codes=code_grids)
def test_backends_agree(codes):
    assert np.array_equal(_kernels.greedy_rect_cover_py(codes), _kernels.greedy_rect_cover(codes))
    a, b = _kernels.label_components_py(codes), _kernels.label_components(codes)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_env_flag_selects_python_backend():
    code = ("from gridcompress import _kernels as k, index; "
            "print(k.BACKEND, index.invert(__import__('gridcompress').Sheet.from_values([['a','a']])).entries)")
    env = dict(os.environ, GRIDCOMPRESS_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split()[0] == "python"
    assert "CellRange(top=0, left=0, bottom=0, right=1)" in out.stdout


def test_benchmark_script_runs():
    script = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, script, "--sizes", "6x5", "--repeat", "1", "--json"],
                         capture_output=True, text=True, check=True)
    rows = json.loads(out.stdout)
    assert {r["kernel"] for r in rows} == {"rect_cover", "label_components"}
