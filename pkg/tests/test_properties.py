import numpy as np
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from cwpower.diagnostics import reference_eigenpair, report_from_json, report_to_json
from cwpower.grid import GridDomain, format_mask, parse_mask
from cwpower.iteration import collatz_wielandt, residual, IterationState, variable_lambda_power
from cwpower.operators import DenseMatrix

from conftest import random_primitive, spectral_radius

PROFILE = settings(max_examples=60, deadline=None, derandomize=True)
seeds = st.integers(0, 2**32 - 1)


@PROFILE
@given(seeds, st.integers(1, 8))
def test_sandwich_small(seed, n):
    rng = np.random.default_rng(seed)
    A = random_primitive(rng, n)
    y = rng.uniform(1e-3, 1.0, n)
    b = collatz_wielandt(DenseMatrix(A), y)
    rho = spectral_radius(A)
    assert b.lower <= rho * (1 + 1e-12) and rho <= b.upper * (1 + 1e-12)


@PROFILE
@given(seeds, st.integers(2, 12))
def test_reference_sandwich(seed, n):
    op = DenseMatrix(random_primitive(np.random.default_rng(seed), n))
    lam, v = reference_eigenpair(op)
    b = collatz_wielandt(op, v)
    assert b.lower <= lam <= b.upper
    assert b.gap < 1e-14


@PROFILE
@given(seeds, st.integers(2, 15), st.floats(1e-3, 1e3))
def test_residual_scale_invariant(seed, n, s):
    rng = np.random.default_rng(seed)
    op = DenseMatrix(random_primitive(rng, n))
    y = rng.uniform(0.1, 1.0, n)
    lam = collatz_wielandt(op, y).upper
    r1 = residual(op, IterationState(0, lam, y / np.linalg.norm(y)))
    r2 = residual(op, IterationState(0, lam, (s * y) / np.linalg.norm(s * y)))
    assert abs(r1 - r2) <= 1e-12 * max(1.0, r1)


@PROFILE
@given(seeds, st.integers(2, 15))
def test_json_roundtrip_random_runs(seed, n):
    rng = np.random.default_rng(seed)
    op = DenseMatrix(random_primitive(rng, n))
    rep = variable_lambda_power(op, rng.uniform(0.1, 1.0, n)).with_reference(spectral_radius(op.entries))
    again = report_from_json(report_to_json(rep))
    assert again == rep
    assert np.array_equal(again.vector, rep.vector)


@PROFILE
@given(st.integers(1, 7), st.integers(1, 7), seeds)
def test_mask_format_roundtrip(nx, ny, seed):
    mask = np.random.default_rng(seed).uniform(size=(ny, nx)) < 0.7
    labels, count = ndimage.label(mask)
    if count == 0:
        mask[0, 0] = True
        labels, count = ndimage.label(mask)
    keep = labels == 1 + int(np.argmax(np.bincount(labels.ravel())[1:]))
    d = GridDomain(0.125, keep)
    assert parse_mask(format_mask(d)) == d
