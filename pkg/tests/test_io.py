import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locind import io
from locind.circuits import Connectivity, apply_circuit, random_circuit
from locind.lll import DependencyGraph, Event, JointDistribution
from locind.mps import aklt_tensor
from locind.wstate import w_code


def test_circuit_example_format():
    data = {"n": 4, "connectivity": {"kind": "lattice", "D": 1, "dims": [4], "periodic": True},
            "layers": [[{"gate": "H", "qubits": [0]}], [{"gate": "CX", "qubits": [0, 1]}]]}
    c = io.circuit_from_dict(data)
    assert c.n == 4 and c.depth == 2 and c.connectivity.periodic
    assert io.circuit_to_dict(c) == data


def test_circuit_round_trip_with_unitaries(rng):
    c = random_circuit(4, 2, Connectivity.line(4), rng)
    back = io.circuit_from_dict(json.loads(json.dumps(io.circuit_to_dict(c))))
    np.testing.assert_allclose(apply_circuit(back), apply_circuit(c), atol=1e-15)


def test_bad_inputs():
    with pytest.raises(io.FormatError):
        io.circuit_from_dict({"layers": []})
    with pytest.raises(io.FormatError):
        io.decode_complex([1.0, 2.0, 3.0])
    with pytest.raises(io.FormatError):
        io.connectivity_from_dict({"kind": "lattice", "D": 2, "dims": [4]})
    with pytest.raises(ValueError):
        io.circuit_from_dict({"n": 2, "layers": [[{"gate": "NOPE", "qubits": [0]}]]})


def test_code_round_trip_and_circuit_basis():
    code = w_code(3)
    back = io.code_from_dict(io.code_to_dict(code))
    np.testing.assert_allclose(back.basis, code.basis)
    data = {"n": 2, "k": 1, "basis": [{"circuit": {"n": 2, "layers": []}},
                                      {"circuit": {"n": 2, "layers": [[{"gate": "X", "qubits": [0]},
                                                                       {"gate": "X", "qubits": [1]}]]}}]}
    code = io.code_from_dict(data)
    assert code.n == 2 and code.k == 1
    assert len(io.code_circuits(data)) == 2
    with pytest.raises(io.FormatError):
        io.code_from_dict(dict(data, n=3))


def test_mps_round_trip():
    t = aklt_tensor()
    d = io.mps_to_dict(t)
    assert (d["phys_dim"], d["bond_dim"]) == (3, 2)
    np.testing.assert_allclose(io.mps_from_dict(d).matrices, t.matrices)
    with pytest.raises(io.FormatError):
        io.mps_from_dict(dict(d, bond_dim=3))


def test_distribution_and_graph_round_trip():
    dist = JointDistribution([0.25, 0.75], [Event("A", [1])])
    back = io.distribution_from_dict(io.distribution_to_dict(dist))
    np.testing.assert_allclose(back.probs, dist.probs)
    assert back.events == dist.events
    g = DependencyGraph(({1}, {0}, set()))
    assert io.graph_from_dict(io.graph_to_dict(g)) == g


def test_dumps_is_deterministic_and_plain():
    obj = {"b": np.float64(1.5), "a": [np.int64(2), True, 1 + 2j], "c": np.arange(2)}
    text = io.dumps(obj)
    assert text == '{"a":[2,true,[1.0,2.0]],"b":1.5,"c":[0,1]}\n'


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=1,
                max_size=12))
def test_complex_encoding_round_trip(vals):
    a = np.array(vals, dtype=complex)
    np.testing.assert_array_equal(io.decode_complex(io.encode_complex(a)), a)
