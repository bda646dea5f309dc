#!/usr/bin/env python
"""
Contains the ExperimentConfig class definition

Please note that this module is private. The ExperimentConfig class is
available in the main ``Anderson_phi42`` namespace - use that instead.
"""
import re
import copy
import json
import pathlib
import hashlib
import logging
from pprint import pformat

from astropy.utils import classproperty

from .constants import *
from .utils import ConfigurationError, compare_given_and_required
from .lattice import TorusGrid
from .Noise import RngStream, sample_space_white_noise
from .Hamiltonian import AndersonOperator, renorm_constant
from .Solver import SolverConfig

__all__ = ['ExperimentConfig', 'canonical_json']

logger = logging.getLogger(__name__)


def canonical_json(obj):
    """Sorted keys, compact separators"""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), allow_nan=False)


def _locate(text, path):
    """Line of the deepest key of the dotted path found in the JSON text"""
    if text is None:
        return None
    _position, _found = 0, None
    for _key in path.split('.'):
        _match = re.compile(f'"{re.escape(_key)}"\\s*:').search(text, _position)
        if _match is None:
            break
        _position = _found = _match.start()
    return None if _found is None else text.count('\n', 0, _found) + 1


class ExperimentConfig:
    _M_prop = (CTAGS.M, "Points per side of the lattice, a power of two")
    _L_prop = (CTAGS.L, "Side length of the torus")
    _mass_floor_prop = (CTAGS.mass_floor, "Spectral floor λ_min the operator is shifted to")
    _renorm_prop = (CTAGS.renorm, "Renormalization constant, 'auto' or a number")
    _dt_prop = (CTAGS.dt, "Time step")
    _T_prop = (CTAGS.T, "Time horizon")
    _N_prop = (CTAGS.N, "Spectral truncation of the noise, null for every mode")
    _n_prop = (CTAGS.n, "Paraproduct truncation block")
    _scheme_prop = (CTAGS.scheme, f"Time integrator, one of {SCHEMES}")
    _eps_prop = (CTAGS.eps, "Regularity loss ε of the C^{-ε} norms")
    _sigma_prop = (CTAGS.sigma, "Regularity σ of the K_t constants")
    _p_prop = (CTAGS.p, "Even diagnostic exponent p")
    _q_prop = (CTAGS.q, "Time integrability q of the K_tilde constant")
    _a_prop = (CTAGS.a, "Time power a of the K_tilde constant")
    _b_prop = (CTAGS.b, "Outer power b of the K_tilde constant")
    _samples_prop = (CTAGS.samples, "Monte Carlo sample count")
    _t_prop = (CTAGS.t, "Evaluation time")
    _times_prop = (CTAGS.times, "List of evaluation times")
    _scales_prop = (CTAGS.scales, "List of initial-datum scales")
    _seeds_prop = (CTAGS.seeds, "List of noise seeds")
    _observables_prop = (CTAGS.observables, f"List of observables, each a dict with kind among {OBSERVABLE_KINDS}")
    _eps_box_prop = (CTAGS.eps_box, "Size of the low-mode conditioning box")
    _N_cond_prop = (CTAGS.N_cond, "Number of conditioned modes minus one")
    _eps_targets_prop = (CTAGS.eps_targets, "List of relaxation targets")
    _max_tries_prop = (CTAGS.max_tries, "Rejection-sampling budget of the conditioning")
    _horizon_prop = (CTAGS.horizon, "Largest time explored by the relaxation probe")
    _kappa_prop = (CTAGS.kappa, "Regularity loss κ of the C^{1-κ} norm")
    _nonlinear_prop = (CTAGS.nonlinear, "Keeps the cubic nonlinearity")
    _initial_norm_prop = (CTAGS.initial_norm, "L² norm of the nonzero initial datum")
    _fd_delta_prop = (CTAGS.fd_delta, "Step of the finite-difference reference")
    _use_feynman_kac_prop = (CTAGS.use_feynman_kac, "Selects the Feynman–Kac derivative estimator")
    _potential_prop = (CTAGS.potential, "Feynman–Kac potential parameters c_tilde, p, eps")
    _checkpoints_prop = (CTAGS.checkpoints, "Times of the running averages")
    _trajectories_prop = (CTAGS.trajectories, "Number of long trajectories")
    _modes_prop = (CTAGS.modes, "List of truncations N")
    _stat_prop = (CTAGS.stat, f"Wick statistic, one of {WICK_STATS}")
    _snapshot_times_prop = (CTAGS.snapshot_times, "Times of the binary snapshots")
    _seed_prop = (CTAGS.seed, "Master seed")
    _output_prop = (CTAGS.output, "Output directory")
    def __init__(self, config: dict, text: str = None) -> None:
        """
            Validated experiment configuration.

            Call signatures::

                config = ExperimentConfig(config_dict)

                config = ExperimentConfig.from_file(path)

                config = ExperimentConfig.from_json(text)

            Parameters
            ----------
            config : dict
                Blocks {_blocks}, and scalars {_scalars}. Only {_grid_M} is
                required, missing keys take their default in
                {DEFAULT_CONFIG}
                Unknown keys are rejected.

            text : string
                JSON source of config, used to point errors at a line.
        """
        if not isinstance(config, dict):
            raise ConfigurationError("Configuration must be a JSON object", line=1 if text else None)
        try:
            self.__config = self.__validate(config)
        except ConfigurationError as _error:
            if _error.line is None and _error.key is not None:
                raise ConfigurationError(str(_error), key=_error.key, line=_locate(text, _error.key)) from None
            raise

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(hash={self.config_hash[:12]})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    @classproperty
    def _grid_properties(cls):
        return {cls._M_prop, cls._L_prop}

    @classproperty
    def _hamiltonian_properties(cls):
        return {cls._mass_floor_prop, cls._renorm_prop}

    @classproperty
    def _solver_properties(cls):
        return {cls._dt_prop, cls._T_prop, cls._N_prop, cls._n_prop, cls._scheme_prop, cls._eps_prop,
                cls._sigma_prop, cls._p_prop, cls._q_prop, cls._a_prop, cls._b_prop}

    @classproperty
    def _experiment_properties(cls):
        return {cls._samples_prop, cls._t_prop, cls._times_prop, cls._scales_prop, cls._seeds_prop,
                cls._observables_prop, cls._eps_box_prop, cls._N_cond_prop, cls._eps_targets_prop,
                cls._max_tries_prop, cls._horizon_prop, cls._kappa_prop, cls._nonlinear_prop,
                cls._initial_norm_prop, cls._fd_delta_prop, cls._use_feynman_kac_prop, cls._potential_prop,
                cls._checkpoints_prop, cls._trajectories_prop, cls._modes_prop, cls._stat_prop,
                cls._snapshot_times_prop}

    @classproperty
    def _top_level_properties(cls):
        return {cls._seed_prop, cls._output_prop}

    @classproperty
    def _schema(cls):
        return {CTAGS.grid: cls._grid_properties,
                CTAGS.hamiltonian: cls._hamiltonian_properties,
                CTAGS.solver: cls._solver_properties,
                CTAGS.experiment: cls._experiment_properties}

    @classproperty
    def _required_keys(cls):
        return {CTAGS.grid: {CTAGS.M}}

    @staticmethod
    def _keys(properties):
        return {_property[0] for _property in properties}

    @classmethod
    def describe(cls):
        """Dotted key and description of every accepted key"""
        _described = {f"{_block}.{_key}": _desc for _block, _properties in cls._schema.items()
                      for _key, _desc in _properties}
        _described.update({_key: _desc for _key, _desc in cls._top_level_properties})
        return dict(sorted(_described.items()))

    def __validate(self, config):
        compare_given_and_required(config.keys(), {CTAGS.grid},
                                   (set(CTAGS.blocks) | self._keys(self._top_level_properties)) - {CTAGS.grid},
                                   error_message="Configuration covers wrong set of keys")
        _merged = copy.deepcopy(DEFAULT_CONFIG)
        for _block, _properties in self._schema.items():
            _given = config.get(_block, {})
            if not isinstance(_given, dict):
                raise ConfigurationError(f"Block {_block} must be a JSON object", key=_block)
            _required = self._required_keys.get(_block, set())
            compare_given_and_required(_given.keys(), _required, self._keys(_properties) - _required,
                                       error_message=f"Block {_block} covers wrong set of keys", prefix=f"{_block}.")
            _merged[_block].update(copy.deepcopy(_given))
        for _key, _ in self._top_level_properties:
            if _key in config:
                _merged[_key] = config[_key]
        self.__check_values(_merged)
        return _merged

    @staticmethod
    def __check_type(value, types, key, what):
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigurationError(f"{key} must be {what}, got {value!r}", key=key)

    def __check_values(self, config):
        _M_key = f"{CTAGS.grid}.{CTAGS.M}"
        self.__check_type(config[CTAGS.grid][CTAGS.M], int, _M_key, "an integer")
        self.__check_type(config[CTAGS.grid][CTAGS.L], (int, float), f"{CTAGS.grid}.{CTAGS.L}", "a number")
        TorusGrid(config[CTAGS.grid][CTAGS.M], config[CTAGS.grid][CTAGS.L])
        self.__check_type(config[CTAGS.hamiltonian][CTAGS.mass_floor], (int, float),
                          f"{CTAGS.hamiltonian}.{CTAGS.mass_floor}", "a number")
        _renorm = config[CTAGS.hamiltonian][CTAGS.renorm]
        if _renorm != 'auto':
            self.__check_type(_renorm, (int, float), f"{CTAGS.hamiltonian}.{CTAGS.renorm}", "'auto' or a number")
        for _key, _value in config[CTAGS.solver].items():
            if _key == CTAGS.scheme or (_key == CTAGS.N and _value is None):
                continue
            self.__check_type(_value, int if _key in (CTAGS.N, CTAGS.n, CTAGS.p) else (int, float),
                              f"{CTAGS.solver}.{_key}", "an integer" if _key in (CTAGS.N, CTAGS.n, CTAGS.p) else "a number")
        self.__check_type(config[CTAGS.seed], int, CTAGS.seed, "an integer")
        if config[CTAGS.seed] < 0:
            raise ConfigurationError(f"Seed must be nonnegative, got {config[CTAGS.seed]}", key=CTAGS.seed)
        self.__check_type(config[CTAGS.output], str, CTAGS.output, "a string")
        self.__check_experiment(config[CTAGS.experiment])
        self.__solver_config(config)

    def __check_experiment(self, experiment):
        _prefix = f"{CTAGS.experiment}."
        for _key in (CTAGS.samples, CTAGS.N_cond, CTAGS.max_tries, CTAGS.trajectories):
            if _key in experiment:
                self.__check_type(experiment[_key], int, _prefix+_key, "an integer")
                if experiment[_key] < 0:
                    raise ConfigurationError(f"{_prefix+_key} must be nonnegative", key=_prefix+_key)
        for _key in (CTAGS.t, CTAGS.eps_box, CTAGS.horizon, CTAGS.kappa, CTAGS.initial_norm, CTAGS.fd_delta):
            if _key in experiment:
                self.__check_type(experiment[_key], (int, float), _prefix+_key, "a number")
        for _key in (CTAGS.times, CTAGS.scales, CTAGS.seeds, CTAGS.eps_targets, CTAGS.checkpoints, CTAGS.modes,
                     CTAGS.snapshot_times):
            if _key in experiment:
                if not isinstance(experiment[_key], list) or not experiment[_key]:
                    raise ConfigurationError(f"{_prefix+_key} must be a nonempty list", key=_prefix+_key)
                for _value in experiment[_key]:
                    self.__check_type(_value, int if _key in (CTAGS.seeds, CTAGS.modes) else (int, float),
                                      _prefix+_key, "a list of numbers")
        for _key in (CTAGS.nonlinear, CTAGS.use_feynman_kac):
            if _key in experiment and not isinstance(experiment[_key], bool):
                raise ConfigurationError(f"{_prefix+_key} must be a boolean", key=_prefix+_key)
        if CTAGS.stat in experiment and experiment[CTAGS.stat] not in WICK_STATS:
            raise ConfigurationError(f"{_prefix+CTAGS.stat} must be one of {WICK_STATS}", key=_prefix+CTAGS.stat)
        if CTAGS.potential in experiment:
            _potential = experiment[CTAGS.potential]
            if not isinstance(_potential, dict):
                raise ConfigurationError(f"{_prefix+CTAGS.potential} must be an object", key=_prefix+CTAGS.potential)
            compare_given_and_required(_potential.keys(), optional=set(DEFAULT_POTENTIAL),
                                       error_message="Potential covers wrong set of keys",
                                       prefix=f"{_prefix}{CTAGS.potential}.")
        if CTAGS.observables in experiment:
            _observables = experiment[CTAGS.observables]
            if not isinstance(_observables, list) or not _observables:
                raise ConfigurationError(f"{_prefix+CTAGS.observables} must be a nonempty list",
                                         key=_prefix+CTAGS.observables)
            for _entry in _observables:
                if not isinstance(_entry, dict) or _entry.get('kind') not in OBSERVABLE_KINDS:
                    raise ConfigurationError(f"Each observable needs a kind among {OBSERVABLE_KINDS}, got {_entry!r}",
                                             key=_prefix+CTAGS.observables)

    @staticmethod
    def __solver_config(config):
        return SolverConfig(lambda_min=config[CTAGS.hamiltonian][CTAGS.mass_floor], **config[CTAGS.solver])

    @classmethod
    def from_json(cls, text: str):
        try:
            _config = json.loads(text)
        except json.JSONDecodeError as _error:
            raise ConfigurationError(f"Invalid JSON: {_error.msg}", line=_error.lineno) from None
        return cls(_config, text)

    @classmethod
    def from_file(cls, path):
        path = pathlib.Path(path)
        try:
            _text = path.read_text()
        except OSError as _error:
            raise ConfigurationError(f"Cannot read configuration {path}: {_error}") from None
        logger.info("Loaded configuration from %s", path)
        return cls.from_json(_text)

    @classmethod
    def default(cls, M=DEFAULT_CONFIG[CTAGS.grid][CTAGS.M]):
        return cls({CTAGS.grid: {CTAGS.M: M}})

    def to_dict(self):
        return copy.deepcopy(self.__config)

    def to_json(self, indent=2):
        return json.dumps(self.__config, sort_keys=True, indent=indent)

    def replace(self, **blocks):
        """Copy with the given blocks or scalars merged over the current ones"""
        _config = self.to_dict()
        for _key, _value in blocks.items():
            if isinstance(_value, dict) and isinstance(_config.get(_key), dict):
                _config[_key].update(_value)
            else:
                _config[_key] = _value
        return ExperimentConfig(_config)

    @property
    def config_hash(self):
        return hashlib.sha256(canonical_json(self.__config).encode()).hexdigest()

    @property
    def grid(self):
        return TorusGrid(self.__config[CTAGS.grid][CTAGS.M], self.__config[CTAGS.grid][CTAGS.L])

    @property
    def solver(self):
        return self.__solver_config(self.__config)

    @property
    def experiment(self):
        return copy.deepcopy(self.__config[CTAGS.experiment])

    @property
    def mass_floor(self):
        return self.__config[CTAGS.hamiltonian][CTAGS.mass_floor]

    @property
    def renorm(self):
        return self.__config[CTAGS.hamiltonian][CTAGS.renorm]

    @property
    def seed(self):
        return self.__config[CTAGS.seed]

    @property
    def output(self):
        return pathlib.Path(self.__config[CTAGS.output])

    def rng(self, purpose='default', index=0):
        return RngStream(self.seed, purpose, index)

    def build_operator(self, rng: RngStream = None):
        """
        Samples the potential ξ from the 'potential' stream and returns the
        operator shifted to the configured spectral floor.
        """
        _grid = self.grid
        rng = self.rng('potential') if rng is None else rng
        _c = renorm_constant(_grid) if self.renorm == 'auto' else float(self.renorm)
        return AndersonOperator.assemble(_grid, sample_space_white_noise(_grid, rng), _c).ensure_positive(self.mass_floor)


ExperimentConfig.__init__.__doc__ = ExperimentConfig.__init__.__doc__.format(
    _blocks=list(CTAGS.blocks), _scalars=[CTAGS.seed, CTAGS.output], _grid_M=f"{CTAGS.grid}.{CTAGS.M}",
    DEFAULT_CONFIG=pformat(DEFAULT_CONFIG))


if __name__ == '__main__':
    pass
