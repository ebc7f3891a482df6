"""MCMC data association for multiple target tracking."""

import json

try:
    from . import _mtt
except ImportError:
    import _mtt

ModelParams = _mtt.ModelParams
ObservationKind = _mtt.ObservationKind
Track = _mtt.Track
ValidationError = _mtt.ValidationError
bearing_range_benchmark_params = _mtt.bearing_range_benchmark_params
kalman_log_marginal = _mtt.kalman_log_marginal
linear_benchmark_params = _mtt.linear_benchmark_params
log_density = _mtt.log_density
ospa = _mtt.ospa
pf_log_likelihood = _mtt.pf_log_likelihood
simulate = _mtt.simulate
theta_names = _mtt.theta_names

__version__ = _mtt.__version__


def resolve_config(config=None):
    """Config dict with every default filled in."""
    return json.loads(_mtt._config_resolved(json.dumps(config or {})))


def config_hash(config=None):
    return _mtt._config_hash(json.dumps(config or {}))


def track(scans, config=None, seed=1):
    """Association sampling with fixed parameters from the all-clutter state.

    Returns a dict with the per-sweep log density, per-move proposed/accepted
    counts, stored samples and the MAP sample.
    """
    return _mtt._run(scans, json.dumps(config or {}), seed, False)


def learn(scans, config=None, seed=1):
    """Joint association and parameter sampling. The result also holds `theta`."""
    return _mtt._run(scans, json.dumps(config or {}), seed, True)
