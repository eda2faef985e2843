"""
`ehrhart` and `volume`: the limiting polytope of a model.
"""
import logging
import sys

from commands.common import add_model_argument, load_model, provenance
from services.polytope import VOLUME_METHODS, ehrhart_fit, lattice_point_count, volume
from utils.errors import QsiSetError
from utils.logger import log_run_event
from utils.output import emit_document

logger = logging.getLogger(__name__)


def _add_document_output(parser):
    parser.add_argument('--out', default=None, help='Output JSON file; a .meta.json sidecar is written next to it')


def register_ehrhart_command(subparsers):
    parser = subparsers.add_parser('ehrhart', help='Fit and verify the Ehrhart quasi-polynomial of a rational model')
    add_model_argument(parser)
    parser.add_argument('--period', type=int, default=None, help='Force the period (no escalation)')
    parser.add_argument('--max-verify', type=int, default=None, help='Held-out dilations to verify at least')
    _add_document_output(parser)
    parser.set_defaults(handler=cmd_ehrhart)
    return parser


def register_volume_command(subparsers):
    parser = subparsers.add_parser('volume', help='Volume of the limiting set P')
    add_model_argument(parser)
    parser.add_argument('--method', default='auto', choices=VOLUME_METHODS, help='Volume method')
    parser.add_argument('--tol', type=float, default=None, help='Relative tolerance of lattice scaling')
    _add_document_output(parser)
    parser.set_defaults(handler=cmd_volume)
    return parser


def cmd_ehrhart(args):
    model = load_model(args)
    qp = ehrhart_fit(model, max_verify=args.max_verify, period=args.period)
    document = qp.to_dict()
    try:
        document['sigma'] = lattice_point_count(model)
    except QsiSetError as e:
        logger.warning(f"No lattice point count for {model.model_id}: {e.message}")
    log_run_event('ehrhart', {'model': model.model_id, 'q': qp.q})
    emit_document(document, out=args.out, provenance=provenance(args, model=model.to_dict()),
                  stream=None if args.out else sys.stdout)
    return 0


def cmd_volume(args):
    model = load_model(args)
    result = volume(model, method=args.method, tol=args.tol)
    log_run_event('volume', {'model': model.model_id, 'method': result.method, 'volume': result.volume})
    emit_document(result.to_dict(), out=args.out, provenance=provenance(args, model=model.to_dict()),
                  stream=None if args.out else sys.stdout)
    return 0
