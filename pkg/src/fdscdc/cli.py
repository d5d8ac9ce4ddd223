"""Command line front end: ``fdscdc {sweep,trial,selftest}``.

Exit codes: 0 success, 1 invalid flags or configuration, 2 runtime failure.
"""
import argparse
import logging
import sys
from dataclasses import fields

from . import harness
from .selftest import run_checks

log = logging.getLogger('fdscdc')


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser():
    p = _Parser(prog='fdscdc', description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest='command', required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument('--config', metavar='PATH',
                        help='scenario file (defaults apply when omitted)')
        sp.add_argument('--seed', type=_u64, help='master seed (overrides '
                        'the config)')
        sp.add_argument('--set', action='append', default=[],
                        metavar='KEY=VALUE', dest='overrides',
                        help='override one config key; repeatable')

    s = sub.add_parser('sweep', help='run a parameter sweep to CSV')
    common(s)
    s.add_argument('--out', required=True, metavar='PATH')
    s.add_argument('--workers', type=int, default=1, metavar='N')

    t = sub.add_parser('trial', help='run one seeded trial of one scheme')
    common(t)
    t.add_argument('--scheme', required=True, metavar='NAME',
                   help='scdc, scdc-<taps>, sbfd, hd or ideal')
    t.add_argument('--out', metavar='PATH',
                   help='write the outcome here instead of stdout')

    sub.add_parser('selftest', help='run the built-in closed-form checks')
    return p


def _load(args):
    text = ''
    if args.config:
        with open(args.config, encoding='utf-8') as fh:
            text = fh.read()
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f'seed={args.seed}')
    return harness.load_config(text, overrides)


def _sweep(args):
    if args.workers < 1:
        raise harness.ConfigError("--workers must be >= 1")
    cfg = _load(args)
    result = harness.run_sweep(cfg, workers=args.workers)
    side = harness.write_outputs(result, args.out)
    log.info("wrote %s and %s", args.out, side)


def _trial(args):
    cfg = _load(args)
    try:
        spec = harness.SchemeSpec.parse(args.scheme)
    except ValueError as exc:
        raise harness.ConfigError(str(exc)) from None
    harness.validate_point(cfg.with_scheme(spec), spec)
    try:
        out = harness.trial_outcome(cfg, spec, cfg.seed, 0)
    except Exception as exc:
        raise harness.PointError(f"{spec.label(cfg.n_b)} failed at trial 0 "
                                 f"(seed {cfg.seed}): {exc}") from exc
    lines = [f"{f.name} = {getattr(out, f.name)}" for f in fields(out)
             if f.name != 'scheme']
    lines.insert(0, f"scheme = {spec.label(cfg.n_b)}")
    lines.insert(1, f"taps = {spec.tap_count(cfg.n_b, cfg.taps)}")
    text = '\n'.join(lines) + '\n'
    resolved = harness.dump_config(cfg)
    if args.out:
        with open(harness.sidecar_path(args.out), 'w',
                  encoding='utf-8') as fh:
            fh.write(resolved)
        with open(args.out, 'w', encoding='utf-8') as fh:
            fh.write(text)
    else:
        sys.stdout.write(''.join(f'# {ln}\n' for ln in resolved.splitlines()))
        sys.stdout.write(text)


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format='%(message)s',
                        stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        if args.command == 'selftest':
            return 0 if run_checks(sys.stdout) == 0 else 2
        if args.command == 'sweep':
            _sweep(args)
        else:
            _trial(args)
    except (harness.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())
