"""Flat ``key = value`` experiment configuration.

Recognized keys
---------------
objective     power_quadratic | F1 | F2 | norm_cubed   (default power_quadratic)
n             dimension
p             exponent of ``(x^T Q x)^p`` (power_quadratic only)
q             random | identity                       (default random)
eigen_mean    mean of the exponential eigenvalues of a random Q (default 5)
q_scale       multiple of the identity when ``q = identity`` (default 1)
algo          szgd | gd | proximal
k             direction count (szgd)
eta           step size
T             iteration count
runs          number of independent runs (default 10)
seed          base seed
delta0        initial granularity (default 0.1)
delta_floor   granularity clamp (default 1e-5)
x0_radius     radius of the random starting sphere (default 10)
x0            fixed start as comma-separated numbers; overrides x0_radius
record_every  iterate thinning stride (default 1)
radius_guard  divergence guard (default 1e6)
inner_tol     proximal certificate tolerance (default 1e-12)
workers       threads used to execute runs (default 1)

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..errors import SZGDError

OBJECTIVES = ("power_quadratic", "F1", "F2", "norm_cubed")
ALGORITHMS = ("szgd", "gd", "proximal")
Q_KINDS = ("random", "identity")


class ConfigError(SZGDError, ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    algo: str
    n: int
    eta: float
    T: int
    objective: str = "power_quadratic"
    p: float = 1.0
    q: str = "random"
    eigen_mean: float = 5.0
    q_scale: float = 1.0
    k: int | None = None
    runs: int = 10
    seed: int = 0
    delta0: float = 0.1
    delta_floor: float = 1e-5
    x0_radius: float = 10.0
    x0: tuple[float, ...] | None = None
    record_every: int = 1
    radius_guard: float = 1e6
    inner_tol: float = 1e-12
    workers: int = 1
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algo {self.algo!r}; expected one of {ALGORITHMS}")
        if self.q not in Q_KINDS:
            raise ConfigError(f"unknown q {self.q!r}; expected one of {Q_KINDS}")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.T < 1:
            raise ConfigError("T must be at least 1")
        if not self.eta > 0:
            raise ConfigError("eta must be positive")
        if self.algo == "szgd":
            if self.k is None:
                raise ConfigError("szgd needs k")
            if not 1 <= self.k <= self.n:
                raise ConfigError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.x0 is not None and len(self.x0) != self.n:
            raise ConfigError(f"x0 has {len(self.x0)} entries, n = {self.n}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def label(self) -> str:
        """Legend label: ``k = <k>`` for SZGD, upper-case name otherwise."""
        if self.algo == "szgd":
            return f"k = {self.k}"
        return "GD" if self.algo == "gd" else "proximal"

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "extra":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_format(value)}")
        for key in sorted(self.extra):
            lines.append(f"{key} = {self.extra[key]}")
        return "\n".join(lines) + "\n"


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_INT_KEYS = {"n", "k", "T", "runs", "seed", "record_every", "workers"}
_FLOAT_KEYS = {"p", "eigen_mean", "q_scale", "eta", "delta0", "delta_floor", "x0_radius",
               "radius_guard", "inner_tol"}
_STR_KEYS = {"objective", "algo", "q"}


def _int(key: str, text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(value)


def parse_config(text: str, strict: bool = True) -> ExperimentConfig:
    """Parse ``key = value`` lines. Unknown keys are an error when ``strict``."""
    values: dict = {}
    extra: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = _int(key, value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _STR_KEYS:
                values[key] = value
            elif key == "x0":
                values[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif strict:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            else:
                extra[key] = value
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    for required in ("algo", "n", "eta", "T"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")
    return ExperimentConfig(**values, extra=extra)


def load_config(path, strict: bool = True) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), strict=strict)
