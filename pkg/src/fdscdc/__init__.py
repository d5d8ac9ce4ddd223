"""Link-level Monte Carlo simulator for full-duplex multi-user MIMO with
simultaneous channel estimation and data transmission (SCDC), jointly
designed precoder and limited-tap analog self-interference cancellation, and
the half-duplex, sequential-beamforming and ideal baselines."""
from .cancellation import CancellerState, QuantizerSpec
from .channel import ChannelParams, ChannelSet, jakes_rho
from .estimation import EstimateReport, compute_mse
from .harness import (ConfigError, ScenarioConfig, dump_config, load_config,
                      run_point, run_sweep, write_csv, write_outputs)
from .link import Scheme, SchemeParams, SlotOutcome, run_trial
from .precoder import PrecoderDesign, design, zf_precoder

__version__ = '0.1.0'

__all__ = ['CancellerState', 'QuantizerSpec', 'ChannelParams', 'ChannelSet',
           'jakes_rho', 'EstimateReport', 'compute_mse', 'ConfigError',
           'ScenarioConfig', 'dump_config', 'load_config', 'run_point',
           'run_sweep', 'write_csv', 'write_outputs', 'Scheme',
           'SchemeParams', 'SlotOutcome', 'run_trial', 'PrecoderDesign',
           'design', 'zf_precoder']
