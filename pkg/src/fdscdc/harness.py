"""Monte Carlo engine, parameter sweeps, scenario configuration and CSV
export.

Random streams are counter-based (Philox) and keyed by ``(seed, trial,
purpose)`` only, so every scheme and every sweep point sees the same channel
realizations for a given trial index and results do not depend on how work is
spread over processes.
"""
import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .cancellation import QuantizerSpec
from .channel import ChannelParams
from .link import SchemeParams, draw_trial, run_trial
from .numerics import db_to_linear, dbm_to_mw

__all__ = ['ConfigError', 'PointError', 'ScenarioConfig', 'SchemeSpec',
           'SweepRow', 'SweepResult', 'trial_streams', 'run_point',
           'run_sweep', 'load_config', 'dump_config', 'write_csv', 'validate',
           'validate_point', 'trial_outcome', 'sidecar_path',
           'write_outputs', 'CSV_HEADER', 'SWEEP_VARIABLES']

log = logging.getLogger(__name__)

CSV_HEADER = ['sweep_var', 'sweep_value', 'scheme', 'taps',
              'mean_rate_bits_per_use', 'std_error', 'infeasible_fraction',
              'runs', 'seed']
SWEEP_VARIABLES = ('P_b_dBm', 'K', 'f_d')

_STREAM_CHANNELS = 0
_STREAM_SCHEME = 1


class ConfigError(ValueError):
    """Malformed or invalid scenario configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PointError(RuntimeError):
    """A module error while simulating one sweep point."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _parse_int(text):
    return int(text, 0)


def _parse_m_b(text):
    return None if text.lower() == 'auto' else int(text)


def _parse_list(text):
    return tuple(s.strip() for s in text.split(',') if s.strip())


def _parse_floats(text):
    return tuple(float(s) for s in _parse_list(text))


def _fmt(value):
    if value is None:
        return 'auto'
    if isinstance(value, tuple):
        return ', '.join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# section -> ordered (key, field name, parser)
_SCHEMA = {
    'channel': [
        ('N_b', 'n_b', int),
        ('K', 'k_users', int),
        ('pathloss_dB', 'pathloss_db', float),
        ('si_pathloss_bs_dB', 'si_pathloss_bs_db', float),
        ('si_pathloss_ue_dB', 'si_pathloss_ue_db', float),
        ('inter_node_pathloss_dB', 'inter_node_pathloss_db', float),
        ('kappa_dB', 'kappa_db', float),
        ('f_d', 'f_d', float),
        ('T_c', 't_c', float),
    ],
    'link': [
        ('P_b_dBm', 'p_b_dbm', float),
        ('P_k_dBm', 'p_k_dbm', float),
        ('noise_bs_dBm', 'noise_bs_dbm', float),
        ('noise_ue_dBm', 'noise_ue_dbm', float),
        ('lambda_b_dBm', 'lambda_b_dbm', float),
        ('lambda_k_dBm', 'lambda_k_dbm', float),
        ('N', 'taps', int),
        ('T', 'T', int),
        ('training_fraction', 'training_fraction', float),
        ('m_b', 'm_b', _parse_m_b),
        ('tap_placement', 'tap_placement', str),
        ('tau_si', 'tau_si', float),
    ],
    'quantizer': [
        ('attenuation_step', 'attenuation_step', float),
        ('phase_step', 'phase_step', float),
    ],
    'run': [
        ('schemes', 'schemes', _parse_list),
        ('runs', 'runs', int),
        ('seed', 'seed', _parse_int),
    ],
    'sweep': [
        ('variable', 'sweep_variable', str),
        ('values', 'sweep_values', _parse_floats),
    ],
}

_KEYS = {(sec, key): (name, parser)
         for sec, entries in _SCHEMA.items() for key, name, parser in entries}
_BARE = {}
for _sec, _key in _KEYS:
    _BARE.setdefault(_key, []).append(_sec)


@dataclass(frozen=True)
class SchemeSpec:
    """One curve of a figure: a scheme and, for SCDC, its tap budget."""
    scheme: str
    taps: int = None

    @classmethod
    def parse(cls, text):
        name, _, taps = text.strip().lower().partition('-')
        if name not in ('scdc', 'sbfd', 'hd', 'ideal'):
            raise ValueError(f"unknown scheme {text!r}")
        if taps and name != 'scdc':
            raise ValueError(f"only scdc takes a tap budget: {text!r}")
        return cls(name, int(taps) if taps else None)

    def label(self, n_b):
        if self.scheme == 'scdc':
            return f"scdc-{self.tap_count(n_b)}" if self.taps is not None \
                else 'scdc'
        return self.scheme

    def tap_count(self, n_b, default=None):
        if self.scheme == 'scdc':
            return self.taps if self.taps is not None else default
        if self.scheme == 'hd':
            return 0
        return n_b * n_b


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete scenario in configuration units (dB, dBm, Hz, s).

    Defaults are the baseline operating point (8 BS antennas, 4 UEs, 110 dB
    pathloss, 40 dB SI pathloss, -100 dBm noise, -50 dBm saturation) with a
    10-40 dBm DL transmit power sweep.
    """
    n_b: int = 8
    k_users: int = 4
    pathloss_db: float = 110.0
    si_pathloss_bs_db: float = 40.0
    si_pathloss_ue_db: float = 40.0
    inter_node_pathloss_db: float = 110.0
    kappa_db: float = 30.0
    f_d: float = 50.0
    t_c: float = 1e-3
    p_b_dbm: float = 40.0
    p_k_dbm: float = 10.0
    noise_bs_dbm: float = -100.0
    noise_ue_dbm: float = -100.0
    lambda_b_dbm: float = -50.0
    lambda_k_dbm: float = -50.0
    taps: int = 64
    T: int = 400
    training_fraction: float = 0.1
    m_b: int = None
    tap_placement: str = 'search'
    tau_si: float = 0.0
    attenuation_step: float = 0.02
    phase_step: float = 0.13
    schemes: tuple = ('scdc-64', 'scdc-32', 'scdc-8', 'sbfd', 'hd', 'ideal')
    runs: int = 1000
    seed: int = 1
    sweep_variable: str = 'P_b_dBm'
    sweep_values: tuple = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)

    @property
    def channel(self):
        return ChannelParams(
            n_b=self.n_b, k_users=self.k_users,
            l_K=db_to_linear(-self.pathloss_db),
            l_bb=db_to_linear(-self.si_pathloss_bs_db),
            l_kk=db_to_linear(-self.si_pathloss_ue_db),
            l_IN=db_to_linear(-self.inter_node_pathloss_db),
            kappa=db_to_linear(self.kappa_db), f_d=self.f_d, T_c=self.t_c)

    @property
    def scheme_params(self):
        return SchemeParams(
            P_b=dbm_to_mw(self.p_b_dbm), P_k=dbm_to_mw(self.p_k_dbm),
            sigma_b_sq=dbm_to_mw(self.noise_bs_dbm),
            sigma_K_sq=dbm_to_mw(self.noise_ue_dbm),
            lambda_b=dbm_to_mw(self.lambda_b_dbm),
            lambda_k=dbm_to_mw(self.lambda_k_dbm),
            N=self.taps, T=self.T, training_fraction=self.training_fraction,
            m_b=self.m_b,
            quantizer=QuantizerSpec(self.attenuation_step, self.phase_step),
            placement=self.tap_placement, tau_si=self.tau_si)

    @property
    def scheme_specs(self):
        return tuple(SchemeSpec.parse(s) for s in self.schemes)

    def at(self, sweep_value):
        """Configuration of one sweep point."""
        if self.sweep_variable == 'P_b_dBm':
            return replace(self, p_b_dbm=float(sweep_value))
        if self.sweep_variable == 'K':
            return replace(self, k_users=int(round(sweep_value)))
        return replace(self, f_d=float(sweep_value))

    def with_scheme(self, spec):
        if spec.scheme == 'scdc' and spec.taps is not None:
            return replace(self, taps=spec.taps)
        return self


def validate_point(cfg, spec):
    ch = cfg.channel
    sp = cfg.scheme_params
    if cfg.tap_placement not in ('search', 'greedy'):
        raise ValueError("tap_placement must be 'search' or 'greedy'")
    if cfg.m_b is not None and not 1 <= cfg.m_b <= min(ch.k_users, ch.n_b):
        raise ValueError(f"m_b={cfg.m_b} outside [1, min(K, N_b)]")
    taps = spec.tap_count(ch.n_b, cfg.taps)
    if not 0 <= taps <= ch.n_b ** 2:
        raise ValueError(f"tap budget {taps} outside [0, N_b^2]")
    if spec.scheme == 'scdc' and sp.T < ch.k_users:
        raise ValueError(f"T={sp.T} < K={ch.k_users}")
    if spec.scheme in ('hd', 'sbfd') and sp.training_symbols < ch.k_users:
        raise ValueError("training_fraction * T must be >= K")


def validate(cfg):
    """Check every invariant of `cfg` and of each derived sweep point."""
    if cfg.runs < 1:
        raise ConfigError("runs must be >= 1 (key 'runs')")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer "
                          "(key 'seed')")
    if cfg.sweep_variable not in SWEEP_VARIABLES:
        raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
    vals = cfg.sweep_values
    if not vals:
        raise ConfigError("sweep values must be nonempty (key 'values')")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("sweep values must be strictly increasing "
                          "(key 'values')")
    if cfg.sweep_variable == 'K' and any(v != int(v) or v < 1 for v in vals):
        raise ConfigError("K sweep values must be positive integers")
    if not cfg.schemes:
        raise ConfigError("at least one scheme is required (key 'schemes')")
    try:
        specs = cfg.scheme_specs
        for v in vals:
            point = cfg.at(v)
            for spec in specs:
                validate_point(point.with_scheme(spec), spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _resolve_key(key, section, line):
    if '.' in key:
        section, key = key.split('.', 1)
    if section is not None:
        if (section, key) not in _KEYS:
            raise ConfigError(f"unknown key {key!r} in section [{section}]",
                              line)
        return _KEYS[section, key]
    secs = _BARE.get(key)
    if not secs:
        raise ConfigError(f"unknown key {key!r}", line)
    if len(secs) > 1:
        raise ConfigError(f"ambiguous key {key!r}; qualify it as "
                          f"section.{key}", line)
    return _KEYS[secs[0], key]


def _apply(values, key, raw, section, line):
    name, parser = _resolve_key(key, section, line)
    try:
        values[name] = parser(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value {raw.strip()!r} for {key!r}: {exc}",
                          line) from None


def load_config(source='', overrides=()):
    """
    Parse a scenario from ``key = value`` text with ``[section]`` headers.

    Omitted keys keep their defaults, so empty text gives the baseline
    scenario. `overrides` are ``key=value`` strings applied after the text
    with the same parser (keys may be bare or ``section.key``). Comments
    start with ``#`` or ``;``.

    Parameters
    ----------
    source : str or path-like
        Config text, or a path to a file holding it.

    Raises
    ------
    ConfigError
        Unknown key, unparsable value or violated invariant; carries the
        offending line number when there is one.
    """
    text = source
    if isinstance(source, os.PathLike) or (
            source and '\n' not in source and os.path.isfile(source)):
        with open(source, encoding='utf-8') as fh:
            text = fh.read()
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].split(';', 1)[0].strip()
        if not line:
            continue
        if line.startswith('['):
            if not line.endswith(']'):
                raise ConfigError(f"malformed section header {raw!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if '=' not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", lineno)
        key, val = line.split('=', 1)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno)
        _apply(values, key.strip(), val, section, lineno)
    for item in overrides:
        if '=' not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, val = item.split('=', 1)
        _apply(values, key.strip(), val, None, None)
    try:
        cfg = ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return validate(cfg)


def dump_config(cfg):
    """Serialize every field of `cfg`; ``load_config(dump_config(c)) == c``."""
    by_name = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    out = io.StringIO()
    for sec, entries in _SCHEMA.items():
        out.write(f"[{sec}]\n")
        for key, name, _ in entries:
            out.write(f"{key} = {_fmt(by_name[name])}\n")
        out.write("\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# Monte Carlo engine
# ---------------------------------------------------------------------------

def trial_streams(seed, trial):
    """Independent generators for the channel draws and the scheme-side
    randomness (pilots, noise) of one trial."""
    def gen(purpose):
        ss = np.random.SeedSequence(seed, spawn_key=(trial, purpose))
        return np.random.Generator(np.random.Philox(ss))
    return gen(_STREAM_CHANNELS), gen(_STREAM_SCHEME)


def trial_outcome(cfg_point, spec, seed, trial):
    """Run one trial of one scheme; returns the SlotOutcome."""
    cfg_point = cfg_point.with_scheme(spec)
    chan = cfg_point.channel
    sp = cfg_point.scheme_params
    rng_ch, rng_s = trial_streams(seed, trial)
    channels = draw_trial(chan, sp, rng_ch)
    return run_trial(spec.scheme, sp, chan, channels, rng_s)


def run_point(cfg_point, spec, seed, runs=None):
    """
    Average the DL rate of one scheme over independent trials.

    Infeasible designs score rate 0 and are counted separately.

    Returns
    -------
    mean : float
    std_error : float
        Sample standard deviation over ``sqrt(runs)`` (0 for one run).
    infeasible_fraction : float
    """
    runs = cfg_point.runs if runs is None else runs
    rates = np.empty(runs)
    infeasible = 0
    for t in range(runs):
        try:
            out = trial_outcome(cfg_point, spec, seed, t)
        except Exception as exc:
            raise PointError(f"{spec.label(cfg_point.n_b)} failed at trial "
                             f"{t} (seed {seed}): {exc}") from exc
        rates[t] = out.rate_bits_per_use if out.feasible else 0.0
        infeasible += not out.feasible
    mean = float(np.mean(rates))
    se = float(np.std(rates, ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return mean, se, infeasible / runs


@dataclass(frozen=True)
class SweepRow:
    sweep_var: str
    sweep_value: float
    scheme: str
    taps: int
    mean_rate: float
    std_error: float
    infeasible_fraction: float
    runs: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple = ()
    config: ScenarioConfig = None


def _point_task(args):
    cfg, i, j = args
    value = cfg.sweep_values[i]
    spec = cfg.scheme_specs[j]
    point = cfg.at(value)
    mean, se, infeas = run_point(point, spec, cfg.seed)
    row = SweepRow(sweep_var=cfg.sweep_variable, sweep_value=value,
                   scheme=spec.label(point.n_b),
                   taps=spec.tap_count(point.n_b, point.taps),
                   mean_rate=mean, std_error=se,
                   infeasible_fraction=infeas, runs=cfg.runs, seed=cfg.seed)
    return (i, j), row


def run_sweep(cfg, workers=1):
    """Evaluate every (sweep value, scheme) pair of `cfg`.

    Rows come back sorted by sweep value, then by scheme order in the
    config, regardless of `workers`.
    """
    validate(cfg)
    tasks = [(cfg, i, j) for i in range(len(cfg.sweep_values))
             for j in range(len(cfg.schemes))]
    results = {}
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, row in pool.map(_point_task, tasks):
                results[key] = row
                _log_row(row)
    else:
        for task in tasks:
            key, row = _point_task(task)
            results[key] = row
            _log_row(row)
    rows = tuple(results[k] for k in sorted(results))
    return SweepResult(rows=rows, config=cfg)


def _log_row(row):
    log.info("%s=%g %-8s mean=%.4f se=%.4f infeasible=%.3f", row.sweep_var,
             row.sweep_value, row.scheme, row.mean_rate, row.std_error,
             row.infeasible_fraction)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _g6(x):
    return f"{x:.6g}"


def write_csv(result, destination):
    """Write `result` as CSV to a path or a text stream.

    Numbers carry 6 significant digits; an empty result gives a header-only
    file.
    """
    rows = sorted(result.rows, key=lambda r: r.sweep_value)  # stable
    if hasattr(destination, 'write'):
        _write_rows(destination, rows)
        return
    with open(destination, 'w', newline='', encoding='utf-8') as fh:
        _write_rows(fh, rows)


def _write_rows(fh, rows):
    w = csv.writer(fh, lineterminator='\n')
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.sweep_var, _g6(r.sweep_value), r.scheme, r.taps,
                    _g6(r.mean_rate), _g6(r.std_error),
                    _g6(r.infeasible_fraction), r.runs, r.seed])


def sidecar_path(out_path):
    return f"{out_path}.cfg"


def write_outputs(result, out_path):
    """Write the CSV and, next to it, the resolved configuration that
    produced it. Returns the sidecar path."""
    side = sidecar_path(out_path)
    with open(side, 'w', encoding='utf-8') as fh:
        fh.write(dump_config(result.config))
    write_csv(result, out_path)
    return side
