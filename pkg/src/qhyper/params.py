"""Parameter sets: sampling, genericity checks, restricted configurations,
convergence margins and JSON persistence."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, GenericityError
from .qseries import lattice_distance

DEFAULT_MARGIN = 1e-4


@dataclass(frozen=True)
class MagnitudeProfile:
    """Bands for the moduli of sampled parameters (phases are uniform)."""

    p_max: float = 0.3
    p_min: float = 0.05
    eta: tuple[float, float] = (1.5, 3.0)
    x: tuple[float, float] = (0.3, 0.7)
    y: tuple[float, float] = (1.5, 3.0)
    alpha: tuple[float, float] = (0.5, 2.0)
    # cap on the estimated geometric ratio of every Jackson sum the pairings need
    jackson_ratio_max: float = 0.5
    max_draws: int = 2000


DEFAULT_PROFILE = MagnitudeProfile()


@dataclass(frozen=True)
class ParameterSet:
    p: complex
    eta: complex
    alpha: complex
    x: tuple
    y: tuple
    n: int
    ell: int
    lattice_margin: float = DEFAULT_MARGIN
    flags: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "p", complex(self.p))
        object.__setattr__(self, "eta", complex(self.eta))
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "x", tuple(complex(v) for v in self.x))
        object.__setattr__(self, "y", tuple(complex(v) for v in self.y))
        object.__setattr__(self, "flags", dict(self.flags))
        if self.n < 1 or self.ell < 0:
            raise ConfigError(f"need n >= 1 and ell >= 0, got n={self.n}, ell={self.ell}")
        if len(self.x) != self.n or len(self.y) != self.n:
            raise ConfigError(f"x and y must have n = {self.n} entries")
        if not abs(self.p) < 1:
            raise ConfigError(f"|p| must be below 1, got {abs(self.p)}")
        if self.p == 0:
            raise ConfigError("p must be nonzero")
        for name in ("eta", "alpha"):
            if getattr(self, name) == 0:
                raise ConfigError(f"{name} must be nonzero")
        if any(v == 0 for v in self.x + self.y):
            raise ConfigError("x and y entries must be nonzero")

    def replace(self, **changes) -> "ParameterSet":
        return replace(self, **changes)

    def shifted(self, m: int, power: int = 1) -> "ParameterSet":
        """Multiply x_j and y_j by p^power for j <= m (1-based)."""
        if not 1 <= m <= self.n:
            raise ConfigError(f"shift index must be in 1..{self.n}")
        f = self.p**power
        x = tuple(v * f if j < m else v for j, v in enumerate(self.x))
        y = tuple(v * f if j < m else v for j, v in enumerate(self.y))
        return self.replace(x=x, y=y)

    @property
    def restricted_bounds(self):
        return self.flags.get("restricted")

    def digest(self) -> str:
        return hashlib.sha256(to_json(self).encode()).hexdigest()[:16]


def _enc(z: complex) -> list:
    return [z.real, z.imag]


def to_dict(ps: ParameterSet) -> dict:
    return {
        "p": _enc(ps.p),
        "eta": _enc(ps.eta),
        "alpha": _enc(ps.alpha),
        "x": [_enc(v) for v in ps.x],
        "y": [_enc(v) for v in ps.y],
        "n": ps.n,
        "ell": ps.ell,
        "lattice_margin": ps.lattice_margin,
        "flags": ps.flags,
    }


def _dec(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise ConfigError(f"complex numbers must be encoded as [re, im], got {v!r}")


def from_dict(d: dict) -> ParameterSet:
    try:
        return ParameterSet(
            p=_dec(d["p"]),
            eta=_dec(d["eta"]),
            alpha=_dec(d["alpha"]),
            x=tuple(_dec(v) for v in d["x"]),
            y=tuple(_dec(v) for v in d["y"]),
            n=int(d["n"]),
            ell=int(d["ell"]),
            lattice_margin=float(d.get("lattice_margin", DEFAULT_MARGIN)),
            flags=d.get("flags", {}),
        )
    except KeyError as exc:
        raise ConfigError(f"parameter file is missing field {exc}") from None


def to_json(ps: ParameterSet) -> str:
    # repr-level float formatting in json gives a bit-exact round trip
    return json.dumps(to_dict(ps), sort_keys=True)


def from_json(text: str) -> ParameterSet:
    try:
        return from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed parameter JSON: {exc}") from None


def save(ps: ParameterSet, path) -> None:
    Path(path).write_text(to_json(ps) + "\n")


def load(path) -> ParameterSet:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file: {exc}") from None
    return from_json(text)


@dataclass(frozen=True)
class Violation:
    condition: str
    value: complex
    distance: float


def _probe(out, label, q, p, margin):
    d = lattice_distance(q, p)
    if d < margin:
        out.append(Violation(label, complex(q), d))


def _base_conditions(ps: ParameterSet, out: list, full_xy: bool, bounds=None):
    p, eta, x, y, n, ell, margin = ps.p, ps.eta, ps.x, ps.y, ps.n, ps.ell, ps.lattice_margin
    for r in range(ell):
        _probe(out, f"eta^{r + 1}", eta ** (r + 1), p, margin)
        for k in range(n):
            for m in range(n):
                for sgn in ((1, -1) if r else (1,)):
                    e = eta ** (sgn * r)
                    if k != m:
                        _probe(out, f"eta^{sgn * r} x{k + 1}/x{m + 1}", e * x[k] / x[m], p, margin)
                        _probe(out, f"eta^{sgn * r} y{k + 1}/y{m + 1}", e * y[k] / y[m], p, margin)
                    if full_xy or (k != m and sgn == -1) or (k != m and r == 0):
                        _probe(out, f"eta^{sgn * r} x{k + 1}/y{m + 1}", e * x[k] / y[m], p, margin)
    if not full_xy:
        for m in range(n):
            for s in range(bounds[m]):
                _probe(out, f"eta^{-s} x{m + 1}/y{m + 1}", eta ** (-s) * x[m] / y[m], p, margin)


def check_generic(ps: ParameterSet) -> list[Violation]:
    """Every violated p-lattice avoidance condition, with its measured distance."""
    out: list[Violation] = []
    _base_conditions(ps, out, full_xy=True)
    return out


def check_restricted(ps: ParameterSet, ell_bounds: Sequence[int]) -> list[Violation]:
    """The weaker conditions allowing x_m = eta^{l_m} y_m for bounds l_m < ell."""
    if len(ell_bounds) != ps.n or not all(1 <= b <= ps.ell for b in ell_bounds):
        raise ConfigError(f"bounds must be n = {ps.n} integers in 1..{ps.ell}")
    out: list[Violation] = []
    _base_conditions(ps, out, full_xy=False, bounds=list(ell_bounds))
    return out


def check_alpha(ps: ParameterSet) -> list[Violation]:
    """Conditions on alpha making the elliptic weight functions a basis and the
    elliptic Shapovalov pairing nondegenerate."""
    p, eta, a, margin = ps.p, ps.eta, ps.alpha, ps.lattice_margin
    out: list[Violation] = []
    ratio = 1
    for m in range(ps.n - 1):
        ratio *= ps.x[m] / ps.y[m]
        for r in range(2 * ps.ell - 1):
            _probe(out, f"alpha eta^{-r} prod_(l<={m + 1}) x/y", a * eta ** (-r) * ratio, p, margin)
    full = np.prod(np.array(ps.x) / np.array(ps.y))
    for r in range(ps.ell):
        _probe(out, f"alpha eta^{-r}", a * eta ** (-r), p, margin)
        _probe(out, f"alpha eta^{r + 2 - 2 * ps.ell} prod x/y", a * eta ** (r + 2 - 2 * ps.ell) * full, p, margin)
    return out


def jackson_ratios(ps: ParameterSet) -> dict:
    """Estimated geometric decay ratio of each Jackson sum used by the pairings.

    Keys name the pairing and the ladder side; values below 1 mean convergent.
    """
    a_eta = abs(ps.eta)
    pa = abs(ps.p)
    full = abs(complex(np.prod(np.array(ps.x) / np.array(ps.y))))
    big = max(1.0, a_eta ** (ps.ell - 1))
    al = abs(ps.alpha)
    a_hat = al * a_eta ** (1 - ps.ell) * full  # modulus of alpha eta^{1-l} prod x/y
    return {
        "I:x": pa * al,
        "I:y": big / a_hat if a_hat else math.inf,
        "I':x": max(1.0, a_eta ** (ps.ell - 1)) / al,
        "I':y": pa * a_hat,
    }


def convergence_margin(ps: ParameterSet, A: complex, M: int, side: str) -> float:
    """Slack of the Jackson-sum convergence inequality; above 1 means admissible.

    x side: min(1, |eta|^{1-l}) / |p^n A prod x^{-1}|.
    y side: |p^M A prod y^{-1}| / max(1, |eta|^{l-1}).
    """
    ae = abs(ps.eta)
    if side == "x":
        val = abs(ps.p**ps.n * A / complex(np.prod(ps.x)))
        bound = min(1.0, ae ** (1 - ps.ell))
        return math.inf if val == 0 else bound / val
    if side == "y":
        val = abs(ps.p**M * A / complex(np.prod(ps.y)))
        return val / max(1.0, ae ** (ps.ell - 1))
    raise ConfigError(f"side must be 'x' or 'y', got {side!r}")


def _polar(rng, band):
    r = rng.uniform(*band)
    return complex(r * np.exp(2j * np.pi * rng.uniform()))


def sample_generic(n: int, ell: int, seed: int, profile: MagnitudeProfile = DEFAULT_PROFILE,
                   lattice_margin: float = DEFAULT_MARGIN, alpha=None) -> ParameterSet:
    """Rejection-sample a generic parameter set with the given magnitude profile.

    Besides the genericity conditions the draw must satisfy the alpha conditions and
    have every pairing sum converge on at least one side with ratio at most
    ``profile.jackson_ratio_max``.
    """
    if n < 1 or ell < 0:
        raise ConfigError(f"need n >= 1 and ell >= 0, got n={n}, ell={ell}")
    rng = np.random.default_rng(seed)
    worst = None
    for _ in range(profile.max_draws):
        p = _polar(rng, (profile.p_min, profile.p_max))
        eta = _polar(rng, profile.eta)
        x = tuple(_polar(rng, profile.x) for _ in range(n))
        y = tuple(_polar(rng, profile.y) for _ in range(n))
        a = _polar(rng, profile.alpha) if alpha is None else complex(alpha)
        ps = ParameterSet(p, eta, a, x, y, n, ell, lattice_margin, {"generic": True, "seed": int(seed)})
        bad = check_generic(ps) + check_alpha(ps)
        if ell > 0:
            rat = jackson_ratios(ps)
            if min(rat["I:x"], rat["I:y"]) > profile.jackson_ratio_max:
                bad.append(Violation("pairing I sum ratio", 0j, min(rat["I:x"], rat["I:y"])))
            if min(rat["I':x"], rat["I':y"]) > profile.jackson_ratio_max:
                bad.append(Violation("pairing I' sum ratio", 0j, min(rat["I':x"], rat["I':y"])))
        if not bad:
            return ps
        worst = bad[0]
    raise GenericityError(f"no admissible draw in {profile.max_draws} tries; last violation: {worst}")


ZONE_PROFILE = MagnitudeProfile(x=(0.6, 0.9), y=(1.1, 1.6), eta=(1.3, 2.0), alpha=(1.5, 3.0), p_max=0.2)
ZONE_SEPARATION = 0.02


def sample_zone_template(n: int, ell: int, seed: int, separation: float = ZONE_SEPARATION,
                         profile: MagnitudeProfile = ZONE_PROFILE) -> ParameterSet:
    """Coefficients (c, d) for the asymptotic path x_m = c_m rho^{n-m}, y_m = d_m rho^{n-m}.

    Block m is scaled by separation^(n-m) on top of a draw with comparable moduli,
    so the cross-block ratios that drive the leading O(rho) correction start small.
    """
    ps = sample_generic(n, ell, seed, profile)
    f = [separation ** (n - 1 - m) for m in range(n)]
    q = ps.replace(x=tuple(v * f[m] for m, v in enumerate(ps.x)), y=tuple(v * f[m] for m, v in enumerate(ps.y)))
    q.flags["zone_template"] = True
    bad = check_generic(q) + check_alpha(q)
    if bad:
        raise GenericityError(f"zone template violates {bad[0]}")
    return q


def build_restricted(y: Sequence, eta, ell_bounds: Sequence[int], alpha, p, x_free: Sequence | None = None,
                     ell: int | None = None, lattice_margin: float = DEFAULT_MARGIN) -> ParameterSet:
    """Parameter set with x_m = eta^{l_m} y_m for every bound l_m < ell.

    ``x_free`` supplies x_m where l_m = ell; ``ell`` defaults to max(ell_bounds).
    """
    n = len(y)
    bounds = [int(b) for b in ell_bounds]
    if len(bounds) != n:
        raise ConfigError("need one bound per coordinate")
    ell = max(bounds) if ell is None else int(ell)
    eta = complex(eta)
    x = []
    for m in range(n):
        if bounds[m] < ell:
            x.append(eta ** bounds[m] * complex(y[m]))
        else:
            if x_free is None:
                raise ConfigError(f"x_{m + 1} is unconstrained and must be supplied")
            x.append(complex(x_free[m]))
    ps = ParameterSet(p, eta, alpha, tuple(x), tuple(complex(v) for v in y), n, ell, lattice_margin,
                      {"restricted": bounds})
    bad = check_restricted(ps, bounds)
    if bad:
        raise GenericityError(f"restricted parameters violate {bad[0]}")
    return ps


def sample_restricted(n: int, ell: int, ell_bounds: Sequence[int], seed: int,
                      profile: MagnitudeProfile = DEFAULT_PROFILE) -> ParameterSet:
    """Rejection-sample y, eta, alpha, p and free x entries for a restricted set."""
    rng = np.random.default_rng(seed)
    worst = None
    for _ in range(profile.max_draws):
        p = _polar(rng, (profile.p_min, profile.p_max))
        eta = _polar(rng, profile.eta)
        y = [_polar(rng, profile.y) for _ in range(n)]
        xf = [_polar(rng, profile.x) for _ in range(n)]
        a = _polar(rng, profile.alpha)
        try:
            ps = build_restricted(y, eta, ell_bounds, a, p, xf, ell)
        except GenericityError as exc:
            worst = exc
            continue
        ps.flags["seed"] = int(seed)
        bad = check_alpha(ps)
        rat = jackson_ratios(ps)
        if min(rat["I:x"], rat["I:y"]) > profile.jackson_ratio_max or \
                min(rat["I':x"], rat["I':y"]) > profile.jackson_ratio_max:
            bad.append(Violation("pairing sum ratio", 0j, 1.0))
        if not bad:
            return ps
        worst = bad[0]
    raise GenericityError(f"no admissible restricted draw in {profile.max_draws} tries; last: {worst}")
