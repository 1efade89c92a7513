import numpy as np
import pytest

from qsd.ansatz import (
    CircuitKind,
    Discriminator,
    ParameterCountError,
    build_u,
    build_v,
    run_discriminator,
)
from qsd.discrimination import state_a, state_b
from qsd.engine import DensityMatrix, ZeroBranch, apply_unitary, project, pure_state, random_density_matrix
from qsd.noise import NoiseConfig

# --- independent state-vector oracle -------------------------------------------------

_I = np.eye(2)
_X = np.array([[0, 1], [1, 0]])
_P0 = np.diag([1, 0])
_P1 = np.diag([0, 1])
_PAULI = {"RX": _X, "RY": np.array([[0, -1j], [1j, 0]]), "RZ": np.diag([1, -1])}


def _rot(kind, theta):
    return np.cos(theta / 2) * _I - 1j * np.sin(theta / 2) * _PAULI[kind]


def _full(op_on, n=4):
    """Kron of per-qubit 2x2 operators; qubit 0 is the leftmost factor."""
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, op_on.get(q, _I))
    return out


def _gate_matrix(gate, thetas):
    if gate.kind == "CNOT":
        c, t = gate.targets
        return _full({c: _P0}) + _full({c: _P1, t: _X})
    return _full({gate.targets[0]: _rot(gate.kind, thetas[gate.param_index])})


def _block(gates, thetas):
    u = np.eye(16, dtype=complex)
    for g in gates:
        u = _gate_matrix(g, thetas) @ u
    return u


def oracle_branching(psi_in, kind, thetas):
    """Noiseless pipeline with a pure input, 16x16 products on state vectors."""
    psi = np.kron(np.kron([1, 0], [1, 0]), psi_in).astype(complex)
    psi = _block(build_u(kind), thetas) @ psi
    v = {1: _block(build_v(kind, 1), thetas), 2: _block(build_v(kind, 2), thetas)}
    dist = {}
    for m0, which in ((0, 2), (1, 1)):
        branch = v[which] @ (_full({0: _P0 if m0 == 0 else _P1}) @ psi)
        for m1 in (0, 1):
            proj = _full({1: _P0 if m1 == 0 else _P1})
            dist[f"{m0}{m1}"] = float(np.linalg.norm(proj @ branch) ** 2)
    return dist


def oracle_deferred(psi_in, kind, thetas):
    """Same distribution with the classical control replaced by quantum control."""
    psi = np.kron(np.kron([1, 0], [1, 0]), psi_in).astype(complex)
    w = _full({0: _P0}) @ _block(build_v(kind, 2), thetas) + _full({0: _P1}) @ _block(build_v(kind, 1), thetas)
    final = w @ _block(build_u(kind), thetas) @ psi
    probs = np.abs(final) ** 2
    idx = np.arange(16)
    return {f"{m0}{m1}": float(probs[((idx >> 3) & 1 == m0) & ((idx >> 2) & 1 == m1)].sum())
            for m0 in (0, 1) for m1 in (0, 1)}


def _vec(d):
    return np.array([d["00"], d["01"], d["10"], d["11"]])


# --- structure -----------------------------------------------------------------------


def test_parameter_counts():
    assert CircuitKind.LONG.n_params == 30
    assert CircuitKind.SHORT.n_params == 12


def _count(gates, kind):
    return sum(g.kind == kind for g in gates)


def test_short_u_structure():
    u = build_u("short")
    assert _count(u, "CNOT") == 4
    assert sum(g.is_rotation for g in u) == 6
    assert [g.targets for g in u[:4]] == [(3, 0), (3, 1), (2, 0), (2, 1)]
    assert [(g.kind, g.targets[0], g.param_index) for g in u[4:]] == [
        ("RX", 0, 0), ("RZ", 0, 1), ("RX", 0, 2), ("RX", 1, 3), ("RZ", 1, 4), ("RX", 1, 5)]
    for data in (2, 3):
        assert sum(data in g.targets for g in u if g.kind == "CNOT") == 2


def test_long_u_structure():
    u = build_u("long")
    assert _count(u, "CNOT") == 4
    assert sum(g.is_rotation for g in u) == 12
    assert [g.param_index for g in u[:12]] == list(range(12))
    assert [g.targets for g in u[12:]] == [(0, 1), (0, 2), (0, 3), (3, 0)]


def test_short_v_structure():
    v1, v2 = build_v("short", 1), build_v("short", 2)
    assert [g.targets for g in v1[:2]] == [(3, 1), (2, 1)]
    assert [g.param_index for g in v1[2:]] == [6, 7, 8]
    assert [g.param_index for g in v2[2:]] == [9, 10, 11]
    assert [(g.kind, g.targets) for g in v1] == [(g.kind, g.targets) for g in v2]
    for data in (2, 3):
        assert sum(data in g.targets for g in v1 if g.kind == "CNOT") == 1


def test_long_v_structure():
    v1, v2 = build_v("long", 1), build_v("long", 2)
    assert [g.param_index for g in v1 if g.is_rotation] == list(range(12, 21))
    assert [g.param_index for g in v2 if g.is_rotation] == list(range(21, 30))
    assert [g.targets for g in v1 if g.kind == "CNOT"] == [(1, 2), (1, 3), (3, 1)]
    assert all(0 not in g.targets for g in v1 + v2)


@pytest.mark.parametrize("kind", list(CircuitKind))
def test_slot_injectivity(kind):
    gates = build_u(kind) + build_v(kind, 1) + build_v(kind, 2)
    slots = [g.param_index for g in gates if g.is_rotation]
    assert sorted(slots) == list(range(kind.n_params))


def test_parameter_count_errors():
    with pytest.raises(ParameterCountError):
        build_u("short", np.zeros(11))
    with pytest.raises(ParameterCountError):
        run_discriminator(DensityMatrix.basis("00"), "long", np.zeros(12))
    with pytest.raises(ParameterCountError):
        Discriminator("short").probabilities(np.eye(4) / 4, np.zeros(30))


def test_invalid_input_rejected():
    bad = np.diag([1.0, 0.5, 0, 0])
    with pytest.raises(ValueError):
        run_discriminator(bad, "short", np.zeros(12))


# --- pipeline ------------------------------------------------------------------------


def test_zero_angles_against_straight_line_oracle():
    rho = DensityMatrix.basis("00")
    got = run_discriminator(rho, "short", np.zeros(12), NoiseConfig(0.0))
    want = oracle_branching(np.array([1, 0, 0, 0]), "short", np.zeros(12))
    assert np.max(np.abs(_vec(got) - _vec(want))) <= 1e-10
    assert sum(got.values()) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("kind", list(CircuitKind))
def test_random_angles_against_oracles(kind, rng, backend):
    for _ in range(5):
        thetas = rng.uniform(0, 2 * np.pi, kind.n_params)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        got = run_discriminator(pure_state(psi), kind, thetas)
        branching = oracle_branching(psi, kind, thetas)
        deferred = oracle_deferred(psi, kind, thetas)
        fast = Discriminator(kind).probabilities(pure_state(psi).data, thetas)
        assert np.max(np.abs(_vec(got) - _vec(branching))) <= 1e-10
        assert np.max(np.abs(_vec(got) - _vec(deferred))) <= 1e-9
        assert np.max(np.abs(_vec(got) - fast)) <= 1e-12


@pytest.mark.parametrize("kind", list(CircuitKind))
@pytest.mark.parametrize("p", [0.001, 0.05])
def test_batched_matches_reference_with_noise(kind, p, rng, backend):
    noise = NoiseConfig(p)
    thetas = rng.uniform(0, 2 * np.pi, (3, kind.n_params))
    inputs = np.array([random_density_matrix(2, rng).data for _ in range(2)])
    fast = Discriminator(kind, noise).probabilities(inputs, thetas)
    assert fast.shape == (3, 2, 4)
    for b in range(3):
        for m in range(2):
            ref = run_discriminator(DensityMatrix(inputs[m]), kind, thetas[b], noise)
            assert np.max(np.abs(_vec(ref) - fast[b, m])) <= 1e-12


def test_batched_is_linear_in_input(rng):
    model = Discriminator("short", NoiseConfig(0.02))
    thetas = rng.uniform(0, 2 * np.pi, 12)
    r1, r2 = random_density_matrix(2, rng).data, random_density_matrix(2, rng).data
    joint = model.probabilities(0.3 * r1 + 0.7 * r2, thetas)
    split = 0.3 * model.probabilities(r1, thetas) + 0.7 * model.probabilities(r2, thetas)
    np.testing.assert_allclose(joint, split, atol=1e-14)


@pytest.mark.parametrize("kind", list(CircuitKind))
def test_distribution_normalized_under_noise(kind, rng):
    for p in (0.0, 0.01, 0.1):
        d = run_discriminator(random_density_matrix(2, rng), kind,
                              rng.uniform(0, 6, kind.n_params), NoiseConfig(p))
        assert sum(d.values()) == pytest.approx(1.0, abs=1e-9)
        assert min(d.values()) >= -1e-12


def test_zero_branch_contributes_nothing():
    # all-zero SHORT angles with input |00>: parity 0 keeps qubit 0 in |0>
    d = run_discriminator(DensityMatrix.basis("00"), "short", np.zeros(12))
    assert d["10"] == 0.0 and d["11"] == 0.0
    assert d["00"] == pytest.approx(1.0)


def test_noiseless_branches_stay_pure(rng):
    thetas = rng.uniform(0, 2 * np.pi, 12)
    rho = DensityMatrix(np.kron(np.kron(np.diag([1, 0]), np.diag([1, 0])), pure_state(state_a(0.4)).data))
    for g in build_u("short", thetas):
        rho = apply_unitary(rho, g)
    weights = []
    for m0, which in ((0, 2), (1, 1)):
        w, branch = project(rho, 0, m0)
        weights.append(w)
        for g in build_v("short", which, thetas):
            branch = apply_unitary(branch, g)
        assert np.sort(branch.eigenvalues())[-2] <= 1e-9
    assert sum(weights) == pytest.approx(1.0, abs=1e-9)


def test_b_states_at_zero_angles():
    d = run_discriminator(pure_state(state_b(1)), "short", np.zeros(12))
    assert sum(d.values()) == pytest.approx(1.0)
    with pytest.raises(ZeroBranch):
        project(DensityMatrix.basis("0000"), 0, 1)
