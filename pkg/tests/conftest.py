import numpy as np
import pytest

from epruning.nn import DenseLayer, Network, init_network


def finite_difference_grads(net: Network, loss_fn, h: float = 1e-5):
    """Central differences of ``loss_fn()`` w.r.t. every weight and bias."""
    grads = []
    for layer in net.layers:
        pair = []
        for param in (layer.weights, layer.biases):
            g = np.zeros_like(param)
            flat, gflat = param.reshape(-1), g.reshape(-1)
            for j in range(flat.size):
                old = flat[j]
                flat[j] = old + h
                up = loss_fn()
                flat[j] = old - h
                down = loss_fn()
                flat[j] = old
                gflat[j] = (up - down) / (2 * h)
            pair.append(g)
        grads.append(tuple(pair))
    return grads


def net_232(unit_norms=None) -> Network:
    """2-3-2 network; optional per-unit L1 norms for incoming weights + bias."""
    w1 = np.array([[1.0, -1.0], [2.0, 0.5], [-0.5, 1.5]])
    b1 = np.array([0.1, -0.2, 0.3])
    if unit_norms is not None:
        half = np.asarray(unit_norms, dtype=float) / 2
        w1 = np.column_stack([half, -half])
        b1 = np.zeros(3)
    w2 = np.array([[0.3, -0.7, 1.1], [0.9, 0.4, -0.6]])
    b2 = np.array([0.05, -0.05])
    return Network([DenseLayer(w1, b1, "relu", True), DenseLayer(w2, b2, "identity", False)])


@pytest.fixture
def small_net():
    return init_network(3, [5, 4], 3, seed=7)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
