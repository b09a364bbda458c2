"""
Reading and writing chains, lumpings, channels and graphs as JSON / CSV / DOT
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import networkx as nx
import numpy as np
import pandas as pd

from graphs.graph import Graph, to_networkx
from graphs.partition import CliquePartition
from lumping.lump import LumpingFunction
from markov.chain import TransitionMatrix
from sources.jointsource import JointDistribution
from utils.errors import InputFormatError, ValidationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"File '{path}' tidak ditemukan")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InputFormatError(f"Cannot parse '{path}': {e.msg}", line=e.lineno, offset=e.colno) from e


def _read_csv_matrix(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InputFormatError(f"File '{path}' tidak ditemukan")
    try:
        frame = pd.read_csv(path, header=None, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFormatError(f"Cannot parse '{path}': {e}") from e

    values = frame.apply(pd.to_numeric, errors='coerce')
    if values.isna().any().any():
        row, col = next(zip(*np.nonzero(values.isna().to_numpy())))
        raise InputFormatError(f"Non-numeric or missing entry in '{path}'", line=int(row) + 1, offset=int(col) + 1)
    return values.to_numpy(dtype=float)


def _field(data: Dict[str, Any], key: str, path: PathLike) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise InputFormatError(f"'{path}' is missing the \"{key}\" field")
    return data[key]


def load_chain(path: PathLike) -> TransitionMatrix:
    """Chain JSON {"states", "P", "labels"} or an N×N CSV without header"""
    if Path(path).suffix.lower() == '.csv':
        return TransitionMatrix(_read_csv_matrix(path))

    data = _read_json(path)
    rows = _field(data, 'P', path)
    states = data.get('states')
    if states is not None and states != len(rows):
        raise ValidationError(f"'{path}' declares {states} states but P has {len(rows)} rows")
    chain = TransitionMatrix(rows, labels=data.get('labels'))
    logger.debug(f"Loaded {chain.n_states}-state chain from {path}")
    return chain


def load_lumping(path: PathLike) -> LumpingFunction:
    """Lumping JSON, bare or nested under "lumping" as the lump report writes it"""
    data = _read_json(path)
    if isinstance(data, dict) and isinstance(data.get('lumping'), dict):
        data = data['lumping']
    mapping = _field(data, 'map', path)
    n_in = data.get('n_in', len(mapping))
    n_out = data.get('n_out', max(mapping) + 1 if mapping else 0)
    return LumpingFunction(n_in, n_out, tuple(mapping))


def load_joint(path: PathLike) -> JointDistribution:
    data = _read_json(path)
    q = np.array(_field(data, 'q', path), dtype=float)
    if q.shape != (data.get('nx', q.shape[0]), data.get('nz', q.shape[-1])):
        raise ValidationError(f"'{path}' declares a shape that does not match q {q.shape}")
    return JointDistribution(q)


def load_channel(path: PathLike) -> np.ndarray:
    """{"W": [[...], ...]} or a CSV matrix"""
    if Path(path).suffix.lower() == '.csv':
        return _read_csv_matrix(path)
    return np.array(_field(_read_json(path), 'W', path), dtype=float)


def load_observations(path: PathLike) -> Dict[str, Any]:
    """{"x1": state, "y": [y_2, ...]}; an optional "x" carries the true states"""
    data = _read_json(path)
    return {
        'x1': int(_field(data, 'x1', path)),
        'y': [int(y) for y in _field(data, 'y', path)],
        'x': [int(x) for x in data['x']] if 'x' in data else None,
    }


def lumping_to_dict(g: LumpingFunction) -> Dict[str, Any]:
    return {'n_in': g.n_in, 'n_out': g.n_out, 'map': list(g.map)}


def partition_to_dict(partition: CliquePartition) -> Dict[str, Any]:
    return {'size': partition.size, 'blocks': [list(block) for block in partition.blocks]}


def graph_to_edge_list(G: Graph) -> str:
    return ''.join(f"{line}\n" for line in nx.generate_edgelist(to_networkx(G), data=False))


def graph_to_dot(G: Graph, name: str = 'G', labels: Optional[List[str]] = None) -> str:
    lines = [f"graph {name} {{"]
    for v in range(G.n_vertices):
        label = labels[v] if labels else str(v)
        lines.append(f'  {v} [label="{label}"];')
    lines.extend(f"  {u} -- {v};" for u, v in G.edges())
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(payload: Any, path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dump_json(payload))
    logger.info(f"Wrote {path}")


def records_to_csv(records: Iterable[Dict[str, Any]]) -> str:
    return pd.DataFrame(list(records)).to_csv(index=False)
