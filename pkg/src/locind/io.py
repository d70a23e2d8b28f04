"""JSON readers and writers for circuits, codes, MPS tensors and LLL inputs.

Complex numbers are stored as ``[re, im]`` pairs; matrices are row-major
nested lists of such pairs.
"""

import json

import numpy as np

from .aqec import Code
from .circuits import NAMED_GATES, Circuit, Connectivity, Gate, apply_circuit
from .lll import DependencyGraph, Event, JointDistribution
from .mps import MPSTensor


class FormatError(ValueError):
    pass


def encode_complex(a):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(data):
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise FormatError("complex arrays must be given as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def connectivity_to_dict(conn):
    if conn.kind == "all-to-all":
        return {"kind": "all-to-all"}
    return {"kind": "lattice", "D": conn.dimension, "dims": list(conn.dims), "periodic": conn.periodic}


def connectivity_from_dict(data):
    if data is None:
        return Connectivity.all_to_all()
    kind = _require(data, "kind", "connectivity")
    if kind in ("all-to-all", "all"):
        return Connectivity.all_to_all()
    dims = _require(data, "dims", "connectivity")
    if "D" in data and int(data["D"]) != len(dims):
        raise FormatError("connectivity: D does not match the number of dims")
    return Connectivity("lattice", tuple(dims), bool(data.get("periodic", False)))


def circuit_to_dict(circuit):
    layers = []
    for layer in circuit.layers:
        out = []
        for g in layer:
            entry = {"gate": g.name, "qubits": list(g.qubits)}
            if g.name not in NAMED_GATES or not np.array_equal(g.matrix, NAMED_GATES[g.name]):
                entry["matrix"] = encode_complex(g.matrix)
            out.append(entry)
        layers.append(out)
    return {"n": circuit.n, "connectivity": connectivity_to_dict(circuit.connectivity), "layers": layers}


def circuit_from_dict(data):
    n = int(_require(data, "n", "circuit"))
    layers = []
    for layer in _require(data, "layers", "circuit"):
        gates = []
        for g in layer:
            matrix = decode_complex(g["matrix"]) if "matrix" in g else None
            gates.append(Gate(_require(g, "gate", "gate"), _require(g, "qubits", "gate"), matrix))
        layers.append(gates)
    return Circuit(n, layers, connectivity_from_dict(data.get("connectivity")))


def code_from_dict(data):
    """Code from explicit amplitudes or preparation circuits (one per basis state)."""
    basis = []
    for entry in _require(data, "basis", "code"):
        if "amplitudes" in entry:
            basis.append(decode_complex(entry["amplitudes"]))
        elif "circuit" in entry:
            basis.append(apply_circuit(circuit_from_dict(entry["circuit"])))
        else:
            raise FormatError("code basis entries need 'amplitudes' or 'circuit'")
    code = Code(np.array(basis))
    if "n" in data and int(data["n"]) != code.n:
        raise FormatError(f"code declares n={data['n']} but states have {code.n} qubits")
    if "k" in data and int(data["k"]) != code.k:
        raise FormatError(f"code declares k={data['k']} but has {code.k} logical qubits")
    return code


def code_to_dict(code):
    return {"n": code.n, "k": code.k, "basis": [{"amplitudes": encode_complex(b)} for b in code.basis]}


def code_circuits(data):
    """Preparation circuits listed in a code file, or None when amplitudes are used."""
    entries = _require(data, "basis", "code")
    if all("circuit" in e for e in entries):
        return [circuit_from_dict(e["circuit"]) for e in entries]
    return None


def mps_to_dict(tensor):
    return {"phys_dim": tensor.phys_dim, "bond_dim": tensor.bond_dim,
            "matrices": encode_complex(tensor.matrices)}


def mps_from_dict(data):
    t = MPSTensor(decode_complex(_require(data, "matrices", "mps")))
    if int(data.get("phys_dim", t.phys_dim)) != t.phys_dim or int(data.get("bond_dim", t.bond_dim)) != t.bond_dim:
        raise FormatError("declared dimensions do not match the matrices")
    return t


def distribution_to_dict(dist):
    return {"probs": dist.probs.tolist(),
            "events": [{"name": e.name, "outcomes": sorted(e.outcomes)} for e in dist.events]}


def distribution_from_dict(data):
    events = [Event(_require(e, "name", "event"), _require(e, "outcomes", "event"))
              for e in data.get("events", [])]
    return JointDistribution(_require(data, "probs", "distribution"), events)


def graph_to_dict(graph):
    return {"gamma": [sorted(g) for g in graph.gamma]}


def graph_from_dict(data):
    return DependencyGraph(tuple(_require(data, "gamma", "graph")))


def load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc


def dumps(obj):
    """Deterministic JSON text (sorted keys, compact separators)."""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":")) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj
