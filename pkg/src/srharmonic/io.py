"""File formats: algebra and domain JSON, field/form/map/trajectory CSV.

All CSV files carry a header row. Node positions are written as a zero-based
multi-index ``i0, i1, ...`` so files can be read back onto a domain of the
same shape in any row order.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .algebra import LeftInvariantStructure, LieAlgebra, abelian_structure, heisenberg_algebra, so3_algebra
from .domain import GridDomain
from .errors import InputError

COORD_NAMES = ("x", "y", "z")


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    return data


def _get(data: dict, key: str, where: str, default=...):
    if key in data:
        return data[key]
    if default is ...:
        raise InputError(f"{where}: missing key {key!r}")
    return default


# algebras ---------------------------------------------------------------

def structure_from_dict(data: dict, where: str = "algebra") -> LeftInvariantStructure:
    """Build a structure from ``{"preset": ...}`` or explicit structure constants.

    Presets: ``heisenberg:N``, ``abelian:DIM[:K]`` (first ``K`` coordinate
    directions horizontal, all of them by default), ``so3`` (``e1, e2``
    horizontal). Explicit form::

        {"dim": 3, "entries": [[0, 1, 2, 1.0]], "horizontal_basis": [[1,0,0],[0,1,0]],
         "metric": [[1,0],[0,1]], "auxiliary_extension": null, "labels": ["A","B","C"]}

    ``entries`` lists ``[i, j, k, c_ij^k]`` for ``i < j`` (zero-based);
    ``horizontal_basis`` lists the spanning vectors of ``e``.
    """
    preset = data.get("preset")
    if preset is not None:
        name, _, arg = str(preset).partition(":")
        try:
            if name == "heisenberg":
                return heisenberg_algebra(int(arg or 1))[1]
            if name == "abelian":
                dim, _, k = (arg or "2").partition(":")
                return abelian_structure(int(dim), range(int(k or dim)))
            if name == "so3":
                return LeftInvariantStructure(so3_algebra(), np.eye(3)[:, :2], name="so3")
        except ValueError as exc:
            raise InputError(f"{where}.preset: {exc}") from exc
        raise InputError(f"{where}.preset: unknown preset {preset!r}")
    try:
        dim = int(_get(data, "dim", where))
        entries = [(int(i), int(j), int(k), float(v)) for i, j, k, v in _get(data, "entries", where)]
        labels = data.get("labels")
        alg = LieAlgebra.from_entries(dim, entries)
        if labels is not None:
            alg = LieAlgebra(alg.structure_constants, tuple(labels))
        E = np.array(_get(data, "horizontal_basis", where), dtype=float).T
        metric = data.get("metric")
        aux = data.get("auxiliary_extension")
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from exc
    return LeftInvariantStructure(alg, E, metric, aux, name=str(data.get("name", "")))


def structure_to_dict(structure: LeftInvariantStructure) -> dict:
    alg = structure.algebra
    return {
        "dim": alg.dim,
        "labels": list(alg.labels),
        "entries": [[i, j, k, v] for i, j, k, v in alg.entries()],
        "horizontal_basis": structure.horizontal_basis.T.tolist(),
        "metric": structure.metric.tolist(),
        "auxiliary_extension": structure.auxiliary_extension.tolist(),
        "name": structure.name,
    }


def read_structure(path) -> LeftInvariantStructure:
    return structure_from_dict(load_json(path), str(path))


def write_structure(path, structure: LeftInvariantStructure):
    Path(path).write_text(json.dumps(structure_to_dict(structure), indent=2) + "\n")


# domains ----------------------------------------------------------------

def _symbols(m: int):
    import sympy
    names = COORD_NAMES[:m] if m <= 3 else tuple(f"x{j}" for j in range(m))
    return sympy.symbols(names, real=True)


def _expression(text, m: int, where: str):
    """Vectorized callable of the coordinates from a sympy-parsable string."""
    import sympy
    from sympy.parsing.sympy_parser import parse_expr

    syms = _symbols(m)
    try:
        expr = parse_expr(str(text), local_dict={s.name: s for s in syms} | {"pi": sympy.pi})
    except Exception as exc:  # sympy raises assorted types on bad input
        raise InputError(f"{where}: cannot parse expression {text!r} ({exc})") from exc
    extra = expr.free_symbols - set(syms)
    if extra:
        raise InputError(f"{where}: unknown symbols {sorted(map(str, extra))} in {text!r}")
    fn = sympy.lambdify(syms, expr, "numpy")
    return lambda *coords: np.broadcast_to(np.asarray(fn(*coords), dtype=float), coords[0].shape)


def _field_or_expression(value, m, where, base: Path):
    if isinstance(value, dict):
        return ("file", base / _get(value, "file", where))
    if isinstance(value, (int, float)):
        return ("const", float(value))
    return ("expr", _expression(value, m, where))


def domain_from_dict(data: dict, where: str = "domain", base: Path = Path(".")) -> GridDomain:
    """``{"kind", "shape", "lengths" | "spacing", "frames", "density"}``.

    ``frames`` is a list of ``k`` vectors whose ``m`` entries are numbers or
    coordinate expressions (``x, y, z``; ``x0, x1, ...`` beyond three axes),
    or ``{"file": path}`` holding a tabulated frame CSV. ``density`` is a
    number, an expression or ``{"file": path}`` with a scalar-field CSV.
    """
    kind = _get(data, "kind", where)
    if kind not in ("torus", "box", "interval"):
        raise InputError(f"{where}.kind: expected torus, box or interval, got {kind!r}")
    try:
        shape = tuple(int(s) for s in np.atleast_1d(_get(data, "shape", where)))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}.shape: {exc}") from exc
    m = len(shape)
    if kind == "interval" and m != 1:
        raise InputError(f"{where}.shape: an interval has one axis")
    if "spacing" in data:
        h = np.broadcast_to(np.asarray(data["spacing"], dtype=float), (m,))
        n_eff = np.array(shape) if kind == "torus" else np.array(shape) - 1
        lengths = h * n_eff
    else:
        lengths = data.get("lengths", 1.0)
    skeleton = GridDomain.build(kind, shape, lengths)

    frames = data.get("frames")
    if isinstance(frames, dict):
        frames = read_frames_csv(base / _get(frames, "file", f"{where}.frames"), skeleton)
    elif frames is not None:
        rows = []
        for i, vec in enumerate(frames):
            if len(vec) != m:
                raise InputError(f"{where}.frames[{i}]: expected {m} entries, got {len(vec)}")
            comps = []
            for j, entry in enumerate(vec):
                kind_, val = _field_or_expression(entry, m, f"{where}.frames[{i}][{j}]", base)
                if kind_ == "file":
                    raise InputError(f"{where}.frames[{i}][{j}]: use a frame CSV for tabulated frames")
                comps.append(np.full(shape, val) if kind_ == "const" else val(*skeleton.coordinates))
            rows.append(np.stack(comps, axis=-1))
        frames = np.stack(rows)

    density = data.get("density")
    if density is not None:
        kind_, val = _field_or_expression(density, m, f"{where}.density", base)
        if kind_ == "file":
            density = read_scalar_csv(val, skeleton)
        elif kind_ == "expr":
            density = val(*skeleton.coordinates)
        else:
            density = val
    return GridDomain.build(kind, shape, lengths, frames, density)


def read_domain(path) -> GridDomain:
    path = Path(path)
    return domain_from_dict(load_json(path), str(path), path.parent)


# CSV --------------------------------------------------------------------

def _index_header(m: int):
    return [f"i{j}" for j in range(m)]


def _node_indices(shape):
    return np.stack(np.unravel_index(np.arange(int(np.prod(shape))), shape), axis=-1)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else int(x) for x in row])


def _read_table(path, min_cols: int):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise InputError(f"{path}: empty file")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header) or len(row) < min_cols:
                    raise InputError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
                try:
                    rows.append([float(x) for x in row])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def _place(path, table, shape, trailing: tuple, n_index_cols: int):
    """Scatter rows ``(multi-index, trailing-index..., value)`` into an array."""
    out = np.full(tuple(shape) + trailing, np.nan)
    idx = table[:, :n_index_cols].astype(int)
    full = tuple(shape) + trailing
    if np.any(idx < 0) or np.any(idx >= np.array(full)):
        raise InputError(f"{path}: index out of range for shape {full}")
    out[tuple(idx.T)] = table[:, n_index_cols]
    if np.isnan(out).any():
        raise InputError(f"{path}: {int(np.isnan(out).sum())} entries missing for shape {full}")
    return out


def write_scalar_csv(path, dom: GridDomain, values):
    """Columns ``i0.., x0.., value``."""
    values = np.asarray(values, dtype=float)
    m = dom.dim_m
    idx = _node_indices(dom.shape)
    coords = np.stack([c.ravel() for c in dom.coordinates], axis=-1)
    header = _index_header(m) + [f"x{j}" for j in range(m)] + ["value"]
    _write_rows(path, header, np.column_stack([idx, coords, values.ravel()]))


def read_scalar_csv(path, dom: GridDomain) -> np.ndarray:
    m = dom.dim_m
    _, table = _read_table(path, 2 * m + 1)
    return _place(path, np.column_stack([table[:, :m], table[:, -1]]), dom.shape, (), m)


def write_form_csv(path, dom: GridDomain, values):
    """Columns ``i0.., component, algebra_index, value`` for a ``(*grid, c, d)`` array."""
    values = np.asarray(values, dtype=float)
    idx = np.stack(np.unravel_index(np.arange(values.size), values.shape), axis=-1)
    _write_rows(path, _index_header(dom.dim_m) + ["component", "algebra_index", "value"],
                np.column_stack([idx, values.ravel()]))


def read_form_csv(path, dom: GridDomain, components: int, dim: int) -> np.ndarray:
    _, table = _read_table(path, dom.dim_m + 3)
    return _place(path, table, dom.shape, (components, dim), dom.dim_m + 2)


def write_frames_csv(path, dom: GridDomain):
    """Frames as ``i0.., frame, axis, value`` (same layout as a form file)."""
    write_form_csv(path, dom, np.moveaxis(dom.frames, 0, -2))


def read_frames_csv(path, dom: GridDomain) -> np.ndarray:
    _, table = _read_table(path, dom.dim_m + 3)
    k = int(table[:, dom.dim_m].max()) + 1 if len(table) else 0
    return np.moveaxis(_place(path, table, dom.shape, (k, dom.dim_m), dom.dim_m + 2), -2, 0)


def write_map_csv(path, dom: GridDomain, f, labels: Optional[tuple] = None):
    """Columns ``i0.., g0..`` (or the algebra labels) for a ``(*grid, d)`` map field."""
    f = np.asarray(f, dtype=float)
    d = f.shape[-1]
    names = [f"g_{lab}" for lab in labels] if labels else [f"g{a}" for a in range(d)]
    _write_rows(path, _index_header(dom.dim_m) + names,
                np.column_stack([_node_indices(dom.shape), f.reshape(-1, d)]))


def read_map_csv(path, dom: GridDomain, dim: Optional[int] = None) -> np.ndarray:
    m = dom.dim_m
    header, table = _read_table(path, m + 1)
    d = len(header) - m
    if dim is not None and d != dim:
        raise InputError(f"{path}: expected {dim} group coordinates, found {d}")
    out = np.full(dom.shape + (d,), np.nan)
    idx = table[:, :m].astype(int)
    if np.any(idx < 0) or np.any(idx >= np.array(dom.shape)):
        raise InputError(f"{path}: node index out of range for grid {dom.shape}")
    out[tuple(idx.T)] = table[:, m:]
    if np.isnan(out).any():
        raise InputError(f"{path}: missing nodes for grid {dom.shape}")
    return out


def write_heisenberg_csv(path, dom: GridDomain, hmap):
    """Columns ``i0.., u_1..u_n, v_1..v_n, w``."""
    n = hmap.n
    header = _index_header(dom.dim_m) + [f"u_{j + 1}" for j in range(n)] + [f"v_{j + 1}" for j in range(n)] + ["w"]
    _write_rows(path, header, np.column_stack([_node_indices(dom.shape), hmap.to_map_field().reshape(-1, 2 * n + 1)]))


def read_heisenberg_csv(path, dom: GridDomain):
    from .heisenberg import HeisenbergMap
    return HeisenbergMap.from_map_field(read_map_csv(path, dom))


def write_trajectory_csv(path, traj, labels: Optional[tuple] = None):
    """Columns ``t, g_.., lam_..``."""
    d = traj.g.shape[1]
    labels = labels or tuple(str(a) for a in range(d))
    header = ["t"] + [f"g_{lab}" for lab in labels] + [f"lam_{lab}" for lab in labels]
    _write_rows(path, header, np.column_stack([traj.t, traj.g, traj.lam]))


def read_trajectory_csv(path):
    """Returns ``(t, g, lam)``."""
    header, table = _read_table(path, 3)
    d = (len(header) - 1) // 2
    return table[:, 0], table[:, 1:1 + d], table[:, 1 + d:]


def write_json(path, data: dict):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n")
