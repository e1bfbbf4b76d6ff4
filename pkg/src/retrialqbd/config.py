"""Experiment configuration: INI files plus command-line overrides.

Schema (all sections optional unless noted):

    [model]             ; required
    lambda = 3.5        ; direct arrival rate ...
    rho_star = 0.7      ; ... or traffic intensity lambda/nu_K (exactly one)
    mu = 1.0
    p = 0.7
    q = 0.7
    r = 0.5
    c = 5
    K = 5
    nu = linear         ; nu_i = i, or an explicit list of K+1 values

    [sweep]
    rho_star = 0.1, 0.2, 0.3   ; replaces the model's single arrival rate

    [run]
    N = 100
    tol = 1e-10

    [expand]
    orders = 1, 2, 3

    [tail]
    k = 0, 5
    window = 50
    bound_factor = 10
    drift_limit = 0.01

    [output]
    path = out.csv

Command-line flags win over file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .errors import ConfigError
from .model import ModelParams, linear_service_rates, validate

DEFAULT_N = 100
DEFAULT_TOL = 1e-10
DEFAULT_ORDERS = (1, 2, 3)
DEFAULT_TAIL_K = (0,)
DEFAULT_WINDOW = 50
DEFAULT_BOUND_FACTOR = 10.0
DEFAULT_DRIFT_LIMIT = 0.01


@dataclass
class ExperimentConfig:
    """Resolved configuration for one CLI invocation."""

    mu: float
    p: float
    q: float
    r: float
    servers: int
    capacity: int
    service_rates: tuple[float, ...]
    arrival_rate: float | None      # set when [model] gives lambda or rho_star
    sweep: tuple[float, ...] = ()   # rho* points; empty means single model
    horizon_N: int = DEFAULT_N
    tol: float = DEFAULT_TOL
    orders: tuple[int, ...] = DEFAULT_ORDERS
    out_path: str | None = None
    tail_k: tuple[int, ...] = DEFAULT_TAIL_K
    tail_window: int = DEFAULT_WINDOW
    bound_factor: float = DEFAULT_BOUND_FACTOR
    drift_limit: float = DEFAULT_DRIFT_LIMIT

    def __post_init__(self):
        if self.horizon_N < 1:
            raise ConfigError("N must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol must be > 0")
        if not self.orders or any(m < 1 for m in self.orders):
            raise ConfigError("orders must be a nonempty list of integers >= 1")
        self.tail_k = tuple(sorted(set(self.tail_k)))  # rows sort by (rho*, n, k)
        if self.arrival_rate is None and not self.sweep:
            raise ConfigError("model needs lambda or rho_star, or a [sweep] section")
        if self.arrival_rate is not None and self.sweep:
            raise ConfigError("[sweep] rho_star and a direct model rate are mutually exclusive")

    def _params(self, lam: float) -> ModelParams:
        params = ModelParams(lam, self.mu, self.p, self.q, self.r,
                             self.servers, self.capacity, self.service_rates)
        report = validate(params)
        if not report.ok:
            raise ConfigError(f"invalid model: {report}")
        return params

    def models(self) -> list[tuple[float, ModelParams]]:
        """(rho_star, params) per experiment point, sorted by rho_star."""
        nu_k = self.service_rates[-1]
        if self.sweep:
            if nu_k <= 0:
                raise ConfigError("rho_star sweep needs nu[K] > 0")
            return [(rs, self._params(rs * nu_k)) for rs in sorted(self.sweep)]
        lam = float(self.arrival_rate)
        rho_star = lam / nu_k if nu_k > 0 else float("nan")
        return [(rho_star, self._params(lam))]


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from exc


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"expected a list of integers, got {text!r}") from exc


def load_config(path: str | None, overrides: dict | None = None) -> ExperimentConfig:
    """Read an INI file (optional) and apply command-line overrides."""
    if path is None:
        raise ConfigError("a config file is required (--config PATH)")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path!r}: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    if not cp.has_section("model"):
        raise ConfigError("config needs a [model] section")
    overrides = overrides or {}

    def get(section: str, key: str, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key)
        return default

    try:
        mu = float(get("model", "mu", "1.0"))
        p = float(get("model", "p", "1.0"))
        q = float(get("model", "q", "1.0"))
        r = float(get("model", "r", "1.0"))
        servers = int(get("model", "c"))
        capacity = int(get("model", "K"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad or missing [model] entry: {exc}") from exc

    nu_text = (get("model", "nu", "linear") or "").strip()
    if nu_text == "linear":
        service_rates = linear_service_rates(capacity)
    else:
        service_rates = _float_list(nu_text)

    lam_text = get("model", "lambda")
    rho_text = get("model", "rho_star")
    if lam_text is not None and rho_text is not None:
        raise ConfigError("[model] lambda and rho_star are mutually exclusive")
    arrival = None
    try:
        if lam_text is not None:
            arrival = float(lam_text)
        elif rho_text is not None:
            if service_rates[-1] <= 0:
                raise ConfigError("rho_star needs nu[K] > 0")
            arrival = float(rho_text) * service_rates[-1]
    except ValueError as exc:
        raise ConfigError(f"bad arrival-rate entry: {exc}") from exc

    sweep: tuple[float, ...] = ()
    if cp.has_option("sweep", "rho_star"):
        sweep = _float_list(cp.get("sweep", "rho_star"))
        arrival = None  # sweep supersedes any single-point rate

    try:
        cfg = dict(
            mu=mu, p=p, q=q, r=r, servers=servers, capacity=capacity,
            service_rates=service_rates, arrival_rate=arrival, sweep=sweep,
            horizon_N=int(get("run", "N", DEFAULT_N)),
            tol=float(get("run", "tol", DEFAULT_TOL)),
            orders=_int_list(get("expand", "orders", "1 2 3")),
            out_path=get("output", "path"),
            tail_k=_int_list(get("tail", "k", "0")),
            tail_window=int(get("tail", "window", DEFAULT_WINDOW)),
            bound_factor=float(get("tail", "bound_factor", DEFAULT_BOUND_FACTOR)),
            drift_limit=float(get("tail", "drift_limit", DEFAULT_DRIFT_LIMIT)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    try:
        return ExperimentConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
