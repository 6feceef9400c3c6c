"""
Command-line surface

    tunnelkit fig2|decay|beta|analytics|transmission|validate-config
              [--config PATH] [--preset desk|paper3d] [--out DIR]
              [--threads N] [--seed S] [--set section.key=value ...]
    tunnelkit slice FIELD.npz [--out CSV]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import sys
from typing import List, Optional

from tunnelkit.config.config import logger
from tunnelkit.grid.io import export_density
from tunnelkit.harness.config import PRESETS, load_config, validate
from tunnelkit.harness import runner
from tunnelkit.utils.errors import ConfigError, NonConfiningTrapError, TunnelkitError
from tunnelkit.utils.helpers import dump_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='TOML run configuration')
    parser.add_argument('--preset', choices=PRESETS, help='built-in preset applied before --config')
    parser.add_argument('--out', help='output directory for this run')
    parser.add_argument('--threads', type=int, help='worker processes for sweeps')
    parser.add_argument('--seed', type=int, help='seed for noise injection')
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help='override a single config value (repeatable)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='tunnelkit', description='BEC tunneling simulations and analysis')
    commands = parser.add_subparsers(dest='command', required=True)

    _common(commands.add_parser('fig2', help='μ against N, analytic and GPE'))

    decay = commands.add_parser('decay', help='ramp, propagate and analyse one decay curve')
    _common(decay)
    decay.add_argument('--barrier', type=float, help='final barrier height in nK (default: first swept)')

    beta = commands.add_parser('beta', help='β against barrier height, GPE and transfer matrix')
    _common(beta)
    beta.add_argument('--transfer-only', action='store_true', help='skip the GPE decay runs')

    analytics = commands.add_parser('analytics', help='closed-form estimates as JSON')
    _common(analytics)
    analytics.add_argument('--atoms', type=float, help='atom number (default: first swept)')
    analytics.add_argument('--barrier', type=float, help='barrier height in nK')

    transmission = commands.add_parser('transmission', help='T(E) through the saddle-point barrier')
    _common(transmission)
    transmission.add_argument('--barrier', type=float, help='barrier height in nK (default: first swept)')
    transmission.add_argument('--e-min', type=float, help='lowest energy in nK')
    transmission.add_argument('--e-max', type=float, help='highest energy in nK')
    transmission.add_argument('--points', type=int, default=41, help='number of energies')

    _common(commands.add_parser('validate-config', help='resolve and validate, print the config and hash'))

    slice_cmd = commands.add_parser('slice', help='density CSV from a dumped field snapshot')
    slice_cmd.add_argument('field', help='.npz field written by decay --set run.dump_times_ms=[...]')
    slice_cmd.add_argument('--out', help='CSV path (default: next to the field)')
    return parser


def _dispatch(args: argparse.Namespace) -> object:
    if args.command == 'slice':
        return export_density(args.field, args.out)
    config = validate(load_config(args.config, args.preset, args.overrides, args.out, args.threads, args.seed))
    command = args.command

    if command == 'validate-config':
        return {'config_hash': config.config_hash, 'config': config.to_dict()}
    if command == 'analytics':
        return runner.run_analytics(config, args.atoms, args.barrier)
    if command == 'fig2':
        return runner.run_figure2(config, args.out).directory
    if command == 'decay':
        return runner.run_decay(config, args.barrier, args.out).directory
    if command == 'beta':
        return runner.run_beta_comparison(config, args.out, include_gpe=not args.transfer_only).directory
    if command == 'transmission':
        energy_range = None
        if args.e_min is not None or args.e_max is not None:
            if args.e_min is None or args.e_max is None or not args.e_max > args.e_min:
                raise ConfigError("--e-min and --e-max must be given together with e_max > e_min")
            energy_range = (args.e_min, args.e_max)
        if args.points < 2:
            raise ConfigError("--points must be at least 2")
        return runner.run_transmission(config, args.out, args.barrier, energy_range, args.points).directory
    raise ConfigError(f"Unknown command '{command}'")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = _dispatch(args)
    except (ConfigError, NonConfiningTrapError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (ValueError, OSError) as e:
        # domain preconditions that only surface once a run starts, e.g. N = 0 for decay or a missing field file
        logger.error(f"Invalid input: {e}")
        return EXIT_CONFIG
    except TunnelkitError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_NUMERIC

    if isinstance(result, str):
        print(result)
    else:
        sys.stdout.write(dump_json(result))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
