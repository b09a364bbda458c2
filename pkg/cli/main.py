"""
Command Line Interface for the zero-error lumping toolkit
"""
import argparse
import json
import logging
import sys
from math import log
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import pydantic
from pydantic import BaseModel, field_validator

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).parent.parent))

from config.settings import LumpingConfig
from data.converter import (
    dump_json,
    graph_to_dot,
    graph_to_edge_list,
    load_chain,
    load_channel,
    load_joint,
    load_lumping,
    load_observations,
    lumping_to_dict,
    partition_to_dict,
    records_to_csv,
)
from graphs.graph import characteristic_graph_pair, conormal_product, edge_difference, epsilon_characteristic_graph
from graphs.partition import solve_clique_partition
from lumping.blockcode import (
    JointBlockSource,
    block_analysis,
    sideinfo_characteristic_graph_direct,
    sideinfo_characteristic_graph_formula,
)
from lumping.lump import certify_lossless, dmax_lower_bound, lossy_lump, reconstruct, simulate_chain
from markov.chain import adjacency, entropy_rate, marginal_entropy, spectral_radius, stationary, validate_chain
from sources.jointsource import check_prop1, prop1_sweep
from utils.errors import AmbiguityError, ImpossibleObservationError, LumpingError, ResourceCapError, ValidationError
from utils.logging_config import setup_logging

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    command: Literal['analyze', 'lump', 'block', 'decode', 'check-prop1', 'sideinfo', 'simulate']
    input_path: Optional[Path] = None
    epsilon: Optional[float] = None
    K: Optional[int] = None
    seed: int = 0
    solver: Literal['exact', 'greedy', 'auto'] = 'auto'
    output_path: Optional[Path] = None
    format: Literal['json', 'csv', 'dot'] = 'json'
    bits: bool = False

    @field_validator('epsilon')
    @classmethod
    def _epsilon_range(cls, value):
        if value is not None and not 0.0 <= value < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {value}")
        return value

    @field_validator('K')
    @classmethod
    def _block_length(cls, value):
        if value is not None and value < 1:
            raise ValueError(f"K must be ≥ 1, got {value}")
        return value


class ChainReport(BaseModel):
    N: int
    irreducible: bool
    aperiodic: bool
    period: int
    mu: Optional[List[float]] = None
    entropy_rate_nats: Optional[float] = None
    marginal_entropy_nats: Optional[float] = None
    log_lambda_nats: Optional[float] = None
    d_max: int
    labels: Optional[List[str]] = None
    units: str = 'nats'


class DecodeReport(BaseModel):
    success: bool
    states: List[int] = []
    position: Optional[int] = None
    candidates: Optional[List[int]] = None
    matches_truth: Optional[bool] = None


class SideInfoReport(BaseModel):
    K: int
    n_vertices: int
    direct_edges: int
    formula_edges: int
    equal: bool
    conormal_edges: int
    unrealizable_only_edges: int
    gamma: int
    exact: bool
    zero_rate: bool


def create_cli():
    """Create command line interface"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', dest='output_path', help='Write the report here instead of stdout')
    common.add_argument('--format', choices=['json', 'csv', 'dot'], default='json', help='Output format')
    common.add_argument('--bits', action='store_true', help='Report entropies in bits')
    common.add_argument('--solver', choices=['exact', 'greedy', 'auto'], default='auto', help='Clique partition solver')
    common.add_argument('--seed', type=int, help='Random seed')
    common.add_argument('--log-level', help='Logging level')

    parser = argparse.ArgumentParser(description="Zero-error lumping of Markov chains")
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    analyze_parser = subparsers.add_parser('analyze', parents=[common], help='Structure, μ, entropy rate, log λ, d_max')
    analyze_parser.add_argument('chain', help='Chain file (JSON or CSV)')

    lump_parser = subparsers.add_parser('lump', parents=[common], help='Lump a chain by a clique partition')
    lump_parser.add_argument('chain', help='Chain file (JSON or CSV)')
    lump_parser.add_argument('--epsilon', type=float, default=0.0, help='Transition threshold for lossy lumping')

    block_parser = subparsers.add_parser('block', parents=[common], help='Blocked lumping sweep K = 1..K')
    block_parser.add_argument('chain', help='Chain file (JSON or CSV)')
    block_parser.add_argument('--K', type=int, default=1, help='Largest block length')

    decode_parser = subparsers.add_parser('decode', parents=[common], help='Reconstruct states from lumped symbols')
    decode_parser.add_argument('chain', help='Chain file (JSON or CSV)')
    decode_parser.add_argument('--lumping', required=True, help='Lumping JSON')
    decode_parser.add_argument('--observations', required=True, help='Observation JSON {"x1":, "y": [...]}')
    decode_parser.add_argument('--x1', type=int, help='Initial state overriding the observation file')

    prop1_parser = subparsers.add_parser('check-prop1', parents=[common], help='Edge inclusion vs H(X|Y,Z) = 0')
    prop1_parser.add_argument('--joint', help='Joint distribution JSON')
    prop1_parser.add_argument('--channel', help='Channel JSON or CSV')
    prop1_parser.add_argument('--sweep', action='store_true', help='Exhaustive sweep on 3×2 supports')
    prop1_parser.add_argument('--draws', type=int, default=5, help='Random magnitudes per support pattern')

    sideinfo_parser = subparsers.add_parser('sideinfo', parents=[common], help='Blocked side-information graph')
    sideinfo_parser.add_argument('chain', help='Chain file (JSON or CSV)')
    sideinfo_parser.add_argument('--channel', required=True, help='Channel JSON or CSV')
    sideinfo_parser.add_argument('--K', type=int, default=1, help='Block length')

    simulate_parser = subparsers.add_parser('simulate', parents=[common], help='Simulate and lump a trajectory')
    simulate_parser.add_argument('chain', help='Chain file (JSON or CSV)')
    simulate_parser.add_argument('--lumping', required=True, help='Lumping JSON')
    simulate_parser.add_argument('--length', type=int, default=1000, help='Trajectory length')

    return parser


def to_bits(payload: Any) -> Any:
    """Rename *_nats keys to *_bits and rescale by 1/ln 2"""
    if isinstance(payload, list):
        return [to_bits(item) for item in payload]
    if not isinstance(payload, dict):
        return payload
    out = {}
    for key, value in payload.items():
        if key.endswith('_nats'):
            out[key[:-len('_nats')] + '_bits'] = value / log(2) if value is not None else None
        elif key == 'units':
            out[key] = 'bits'
        else:
            out[key] = to_bits(value)
    return out


def _dump(model: BaseModel) -> Dict[str, Any]:
    return model.model_dump(by_alias=True)


def cmd_analyze(args, config: LumpingConfig) -> Tuple[str, int]:
    chain = load_chain(args.chain)
    structure = validate_chain(chain, positivity=config.positivity_threshold)
    A = adjacency(chain, positivity=config.positivity_threshold)
    report = ChainReport(
        N=chain.n_states,
        irreducible=structure.irreducible,
        aperiodic=structure.aperiodic,
        period=structure.period,
        d_max=dmax_lower_bound(A),
        labels=list(chain.labels) if chain.labels else None,
    )
    if structure.irreducible:
        report.mu = stationary(chain, positivity=config.positivity_threshold).mu.tolist()
        report.entropy_rate_nats = entropy_rate(chain, positivity=config.positivity_threshold)
        report.marginal_entropy_nats = marginal_entropy(chain, positivity=config.positivity_threshold)
        report.log_lambda_nats = log(spectral_radius(A, config.power_iteration_tolerance,
                                                     config.power_iteration_max_iter))
    else:
        logger.warning("Chain is reducible; stationary quantities are left empty")
    return _render(_dump(report), args), 0


def cmd_lump(args, config: LumpingConfig) -> Tuple[str, int]:
    chain = load_chain(args.chain)
    g, loss = lossy_lump(chain, args.epsilon, solver=args.solver, exact_cap=config.exact_solver_cap,
                         positivity=config.positivity_threshold,
                         lossless_tolerance=config.lossless_tolerance)
    certificate = certify_lossless(chain, g, positivity=config.positivity_threshold,
                                   lossless_tolerance=config.lossless_tolerance)
    graph = epsilon_characteristic_graph(chain, args.epsilon, positivity=config.positivity_threshold)
    code = 0 if certificate.lossless else 1

    if args.format == 'dot':
        return graph_to_dot(graph, name='characteristic', labels=chain.labels), code
    if args.format == 'csv':
        return records_to_csv({'state': x, 'symbol': y} for x, y in enumerate(g.map)), code

    partition, _ = solve_clique_partition(graph, solver=args.solver, exact_cap=config.exact_solver_cap)
    payload = {
        'lumping': lumping_to_dict(g),
        'partition': partition_to_dict(partition),
        'loss': _dump(loss),
        'certificate': {
            'lossless': certificate.lossless,
            'witness_edge': list(certificate.witness_edge) if certificate.witness_edge else None,
            'accessor': certificate.accessor,
        },
        'characteristic_graph': graph_to_edge_list(graph).splitlines(),
    }
    return _render(payload, args), code


def cmd_block(args, config: LumpingConfig) -> Tuple[str, int]:
    chain = load_chain(args.chain)
    records, code = [], 0
    try:
        for K in range(1, args.K + 1):
            records.append(_dump(block_analysis(
                chain, K, solver=args.solver, exact_cap=config.exact_solver_cap,
                enumeration_cap=config.enumeration_cap, positivity=config.positivity_threshold,
            )))
    except ResourceCapError as e:
        logger.error(f"Sweep stopped at K={len(records) + 1}: {e}")
        code = e.exit_code

    if args.bits:
        records = to_bits(records)
    if args.format == 'csv':
        return records_to_csv(records), code
    return ''.join(json.dumps(record, sort_keys=True) + '\n' for record in records), code


def cmd_decode(args, config: LumpingConfig) -> Tuple[str, int]:
    chain = load_chain(args.chain)
    g = load_lumping(args.lumping)
    observations = load_observations(args.observations)
    x1 = args.x1 if args.x1 is not None else observations['x1']
    A = adjacency(chain, positivity=config.positivity_threshold)

    try:
        states = reconstruct(A, g, x1, observations['y'])
    except ImpossibleObservationError as e:
        logger.error(str(e))
        return _render(_dump(DecodeReport(success=False, position=e.position)), args), e.exit_code
    except AmbiguityError as e:
        logger.error(str(e))
        report = DecodeReport(success=False, position=e.position, candidates=list(e.candidates))
        return _render(_dump(report), args), e.exit_code

    truth = observations['x']
    report = DecodeReport(success=True, states=states,
                          matches_truth=None if truth is None else truth == states)
    return _render(_dump(report), args), 0 if report.matches_truth in (None, True) else 1


def cmd_check_prop1(args, config: LumpingConfig) -> Tuple[str, int]:
    if args.sweep:
        report = prop1_sweep(draws=args.draws, seed=args.seed, positivity=config.positivity_threshold,
                             lossless_tolerance=config.lossless_tolerance)
    elif args.joint and args.channel:
        report = check_prop1(load_joint(args.joint), load_channel(args.channel),
                             positivity=config.positivity_threshold,
                             lossless_tolerance=config.lossless_tolerance)
    else:
        raise ValidationError("check-prop1 needs --joint and --channel, or --sweep")
    return _render(_dump(report), args), 0 if report.consistent else 1


def cmd_sideinfo(args, config: LumpingConfig) -> Tuple[str, int]:
    source = JointBlockSource(load_chain(args.chain), load_channel(args.channel), args.K)
    kwargs = dict(enumeration_cap=config.enumeration_cap, positivity=config.positivity_threshold)
    direct = sideinfo_characteristic_graph_direct(source, **kwargs)
    formula = sideinfo_characteristic_graph_formula(source, **kwargs)
    single = characteristic_graph_pair(source.single_letter_joint(positivity=config.positivity_threshold),
                                       positivity=config.positivity_threshold)
    product = conormal_product(single, args.K, enumeration_cap=config.enumeration_cap)
    partition, exact = solve_clique_partition(formula, solver=args.solver, exact_cap=config.exact_solver_cap)

    if args.format == 'dot':
        return graph_to_dot(formula, name='sideinfo'), 0
    report = SideInfoReport(
        K=args.K,
        n_vertices=formula.n_vertices,
        direct_edges=direct.n_edges,
        formula_edges=formula.n_edges,
        equal=direct == formula,
        conormal_edges=product.n_edges,
        unrealizable_only_edges=len(edge_difference(formula, product)),
        gamma=partition.size,
        exact=exact,
        zero_rate=partition.size == 1,
    )
    return _render(_dump(report), args), 0 if report.equal else 1


def cmd_simulate(args, config: LumpingConfig) -> Tuple[str, int]:
    chain = load_chain(args.chain)
    g = load_lumping(args.lumping)
    states = simulate_chain(chain, args.length, seed=args.seed, positivity=config.positivity_threshold)
    payload = {'x1': states[0], 'y': g.apply(states[1:]), 'x': states}
    return _render(payload, args), 0


HANDLERS = {
    'analyze': cmd_analyze,
    'lump': cmd_lump,
    'block': cmd_block,
    'decode': cmd_decode,
    'check-prop1': cmd_check_prop1,
    'sideinfo': cmd_sideinfo,
    'simulate': cmd_simulate,
}


def _render(payload: Dict[str, Any], args) -> str:
    if args.bits:
        payload = to_bits(payload)
    return dump_json(payload)


def _emit(text: str, output_path: Optional[str]):
    if output_path:
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        logger.info(f"Report written to {path}")
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    """Main function"""
    parser = create_cli()
    args = parser.parse_args(argv)

    try:
        config = LumpingConfig.from_env()
    except LumpingError as e:
        setup_logging()
        logger.error(str(e))
        return e.exit_code
    setup_logging(getattr(args, 'log_level', None) or config.log_level,
                  config.log_file, config.logs_dir)

    if args.command is None:
        parser.print_help()
        return 2

    if args.seed is None:
        args.seed = config.default_seed

    try:
        RunConfig(
            command=args.command,
            input_path=getattr(args, 'chain', None),
            epsilon=getattr(args, 'epsilon', None),
            K=getattr(args, 'K', None),
            seed=args.seed,
            solver=args.solver,
            output_path=args.output_path,
            format=args.format,
            bits=args.bits,
        )
    except pydantic.ValidationError as e:
        logger.error(f"Invalid arguments: {e}")
        return ValidationError.exit_code

    try:
        text, code = HANDLERS[args.command](args, config)
    except LumpingError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code

    _emit(text, args.output_path)
    return code


if __name__ == "__main__":
    sys.exit(main())
