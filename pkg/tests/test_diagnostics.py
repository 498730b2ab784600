import math
from pathlib import Path

import numpy as np
import pytest

from cwpower.diagnostics import (
    emit_report,
    estimate_order,
    machine_floor,
    mesh_order,
    quadratic_ratios,
    reference_eigenpair,
    report_from_json,
    report_to_json,
)
from cwpower.errors import DomainError, InsufficientDataError, NoConvergenceError
from cwpower.grid import unit_square
from cwpower.iteration import Criterion, SolverConfig, StoppingRule, collatz_wielandt, variable_lambda_power
from cwpower.operators import DenseMatrix, InverseLaplacian, hilbert_matrix
from cwpower.report import ConvergenceReport, StepRecord, StopReason

from conftest import discrete_square_lambda, random_primitive

GOLDEN = Path(__file__).parent / "golden"


def test_order_squaring_sequence():
    est = estimate_order([1e-1, 1e-2, 1e-4, 1e-8])
    assert est.values[:2] == (None, None)
    np.testing.assert_allclose(est.defined(), [2.0, 2.0], rtol=1e-12)


def test_order_geometric_sequence():
    np.testing.assert_allclose(estimate_order([1e-1, 1e-2, 1e-3, 1e-4]).defined(), [1.0, 1.0], rtol=1e-12)


def test_order_errors():
    with pytest.raises(InsufficientDataError):
        estimate_order([0.1, 0.01])
    with pytest.raises(DomainError):
        estimate_order([0.1, -0.01, 0.001])
    with pytest.raises(DomainError):
        estimate_order([0.1, 0.0, 0.001])
    with pytest.raises(InsufficientDataError):
        estimate_order([1e-1, 1e-2, 1e-15], floor=1e-13)


def test_order_floor_masks():
    est = estimate_order([1e-1, 1e-2, 1e-4, 1e-8, 1e-16], floor=1e-13)
    assert est.masked == (False, False, False, False, True)
    assert est.values[-1] is None


def test_order_scale_invariant():
    e = [0.5, 0.2, 0.03, 8e-4]
    a = estimate_order(e).defined()
    b = estimate_order([7.3 * x for x in e]).defined()
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_mesh_order_exact_h2():
    assert mesh_order(0.0, [(1 / 2, 1 / 4), (1 / 4, 1 / 16)]) == [pytest.approx(2.0)]


def test_mesh_order_unit_square_tends_to_two():
    lam = 1 / (2 * math.pi**2)
    pairs = [(h, discrete_square_lambda(h)) for h in (1 / 4, 1 / 8, 1 / 16, 1 / 32)]
    orders = mesh_order(lam, pairs)
    assert all(abs(o - 2.0) < 0.05 for o in orders)
    assert abs(orders[-1] - 2.0) < abs(orders[0] - 2.0)


def test_mesh_order_errors():
    with pytest.raises(DomainError):
        mesh_order(0.0, [(0.5, 0.25), (0.5, 0.1)])
    with pytest.raises(InsufficientDataError):
        mesh_order(0.0, [(0.5, 0.25)])


def test_machine_floor():
    assert machine_floor(0.5) == 1e-13
    assert machine_floor(-20.0) == pytest.approx(2e-12)


def test_reference_two_by_two():
    lam, v = reference_eigenpair(DenseMatrix([[2, 1], [1, 2]]), v0=[1.0, 0.5])
    assert lam == pytest.approx(3.0, rel=1e-14)
    np.testing.assert_allclose(v, [2**-0.5, 2**-0.5], rtol=1e-13)


def test_reference_hilbert3():
    lam, _ = reference_eigenpair(hilbert_matrix(3))
    assert lam == pytest.approx(1.40832, abs=1e-5)
    assert lam == pytest.approx(np.linalg.eigvalsh(hilbert_matrix(3).entries).max(), rel=1e-13)


def test_reference_grid_h16():
    lam, _ = reference_eigenpair(InverseLaplacian(unit_square(1 / 16)))
    assert lam == pytest.approx(1 / (8 * 256 * math.sin(math.pi / 32) ** 2), rel=1e-12)
    assert lam == pytest.approx(0.0508237, abs=1e-7)


def test_reference_dense_cross_check():
    rng = np.random.default_rng(21)
    for n in range(2, 13):
        A = random_primitive(rng, n)
        op = DenseMatrix(A)
        lam, v = reference_eigenpair(op)
        rho = np.max(np.abs(np.linalg.eigvals(A)))
        assert lam == pytest.approx(rho, rel=1e-12)
        b = collatz_wielandt(op, v)
        assert b.lower <= lam <= b.upper and b.gap < 1e-14


def test_reference_no_convergence():
    with pytest.raises(NoConvergenceError):
        reference_eigenpair(hilbert_matrix(20), max_iters=2)


def test_quadratic_ratios_window():
    errs = [0.5, 1e-2, 1e-4, 1e-8, 1e-16]
    assert quadratic_ratios(errs) == [pytest.approx(1.0), pytest.approx(1.0)]


def _small_report(n_records):
    records = tuple(StepRecord(k + 1, 3.0 + 10.0 ** -(2 ** k), 1e-3, 1e-4, 1e-3) for k in range(n_records))
    return ConvergenceReport(
        algorithm="cw-sup",
        criterion="sc1",
        epsilon=1e-14,
        initial_lambda=5.0,
        records=records,
        stop_reason=StopReason.CRITERION_MET,
        lam=records[-1].lam if records else 5.0,
        vector=np.array([0.6, 0.8]),
    )


def test_emit_empty_csv():
    assert emit_report(_small_report(0), fmt="csv") == "n,lambda,error,order,criterion,residual\n"


def test_emit_three_rows():
    rep = _small_report(3).with_reference(3.0)
    lines = emit_report(rep, fmt="csv").splitlines()
    assert len(lines) == 4
    assert lines[1].split(",")[3] == "" and lines[2].split(",")[3] == ""
    assert float(lines[3].split(",")[3]) == pytest.approx(2.0, rel=1e-4)


def test_emit_markdown():
    text = emit_report(_small_report(2), fmt="md")
    assert "| n | lambda | error | order | sc1 | residual |" in text


def test_report_invariant_increasing_n():
    with pytest.raises(ValueError):
        ConvergenceReport("x", "sc1", 1e-3, 1.0, (StepRecord(2, 1.0), StepRecord(1, 1.0)), StopReason.MAX_ITERS, 1.0,
                          np.ones(1))


def test_json_roundtrip():
    H = hilbert_matrix(30)
    rep = variable_lambda_power(H, np.ones(30)).with_reference(reference_eigenpair(H)[0])
    again = report_from_json(report_to_json(rep))
    assert again == rep
    assert np.array_equal(again.vector, rep.vector)


def test_hilbert1000_golden_csv():
    H = hilbert_matrix(1000)
    rep = variable_lambda_power(H, np.ones(1000), SolverConfig(StoppingRule(Criterion.LAMBDA_DIFF, 1e-14)))
    rep = rep.with_reference(reference_eigenpair(H)[0], relative=True)
    # compare numerically rather than byte-for-byte: the last digits depend on the BLAS build
    got = [line.split(",") for line in emit_report(rep, fmt="csv").splitlines()]
    want = [line.split(",") for line in (GOLDEN / "hilbert1000.csv").read_text().splitlines()]
    assert got[0] == want[0]
    assert len(got) == len(want) == 9
    for g, w in zip(got[1:], want[1:]):
        assert g[0] == w[0]
        assert float(g[1]) == pytest.approx(float(w[1]), rel=1e-5)
        # errors and orders: 3 significant digits down to the round-off floor
        for a, b in ((g[2], w[2]), (g[3], w[3]), (g[4], w[4])):
            if b and float(b) > 1e-12:
                assert float(a) == pytest.approx(float(b), rel=1e-3)
