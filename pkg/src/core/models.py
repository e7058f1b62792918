"""
Data models: potentials, frequencies, orbit generators and operator specs.

All models are frozen dataclasses; operations on them live in
``src.core.orbits`` and the business modules.
"""
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.arithmetic import ContinuedFraction, continued_fraction, resolve_frequency
from src.core.errors import DomainError, SpecError

MultiIndex = Tuple[int, ...]

GEOMETRIES = ("line", "strip", "box")
ORBIT_KINDS = ("shift", "skew", "monomial")


def _reduce(value: float) -> float:
    reduced = math.fmod(float(value), 1.0)
    if reduced < 0.0:
        reduced += 1.0
    return 0.0 if reduced >= 1.0 else reduced


@dataclass(frozen=True)
class FourierPotential:
    """Real trigonometric polynomial f on the b-torus.

    f(theta) = sum_k c_k exp(2 pi i k.theta), stored as a finitely supported
    map from multi-index k to complex amplitude c_k with c_{-k} = conj(c_k),
    so evaluation is real.
    """
    harmonics: Tuple[Tuple[MultiIndex, complex], ...]
    dimension: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise SpecError(f"frequency dimension must be positive, got {self.dimension}")
        table: Dict[MultiIndex, complex] = {}
        for index, amplitude in self.harmonics:
            index = tuple(int(i) for i in index)
            if len(index) != self.dimension:
                raise SpecError(f"harmonic {index} does not match dimension {self.dimension}")
            table[index] = table.get(index, 0j) + complex(amplitude)
        for index, amplitude in list(table.items()):
            mirror = tuple(-i for i in index)
            if mirror not in table:
                table[mirror] = amplitude.conjugate()
            elif abs(table[mirror] - amplitude.conjugate()) > 1e-12 * max(1.0, abs(amplitude)):
                raise SpecError(f"harmonics {index} and {mirror} are not complex conjugates")
        zero = (0,) * self.dimension
        if zero in table:
            table[zero] = complex(table[zero].real, 0.0)
        table = {k: v for k, v in table.items() if v != 0}
        if not any(k != zero for k in table):
            raise SpecError("potential must have at least one nonzero non-constant harmonic")
        object.__setattr__(self, "harmonics", tuple(sorted(table.items())))

    @classmethod
    def cosine(cls, amplitude: float = 1.0) -> "FourierPotential":
        """The almost Mathieu potential amplitude * cos(2 pi theta)."""
        return cls.from_cos_sin([amplitude])

    @classmethod
    def from_cos_sin(cls, cos: Sequence[float], sin: Sequence[float] = (),
                     constant: float = 0.0) -> "FourierPotential":
        """constant + sum_j cos[j-1] cos(2 pi j theta) + sin[j-1] sin(2 pi j theta)."""
        order = max(len(cos), len(sin))
        harmonics = [((0,), complex(constant))] if constant else []
        for j in range(1, order + 1):
            a = cos[j - 1] if j <= len(cos) else 0.0
            b = sin[j - 1] if j <= len(sin) else 0.0
            if a or b:
                harmonics.append(((j,), complex(a, -b) / 2.0))
        return cls(tuple(harmonics), 1)

    @classmethod
    def from_mapping(cls, mapping: Mapping[MultiIndex, complex], dimension: int) -> "FourierPotential":
        return cls(tuple(mapping.items()), dimension)

    @property
    def indices(self) -> np.ndarray:
        return np.array([k for k, _ in self.harmonics], dtype=float).reshape(-1, self.dimension)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c for _, c in self.harmonics], dtype=complex)

    @property
    def sup_bound(self) -> float:
        """Upper bound on max |f|: the sum of absolute amplitudes."""
        return float(np.sum(np.abs(self.amplitudes)))

    @property
    def order(self) -> int:
        return int(max(max(abs(i) for i in k) for k, _ in self.harmonics))

    def to_dict(self) -> Dict[str, Any]:
        if self.dimension == 1:
            cos = [0.0] * self.order
            sin = [0.0] * self.order
            constant = 0.0
            for (k,), c in self.harmonics:
                if k == 0:
                    constant = c.real
                elif k > 0:
                    cos[k - 1] = 2.0 * c.real
                    sin[k - 1] = -2.0 * c.imag
            return {"cos": cos, "sin": sin, "constant": constant}
        return {
            "dimension": self.dimension,
            "harmonics": [[list(k), [c.real, c.imag]] for k, c in self.harmonics],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FourierPotential":
        if "harmonics" in data:
            dimension = int(data.get("dimension", 1))
            harmonics = []
            for index, amplitude in data["harmonics"]:
                if isinstance(amplitude, (list, tuple)):
                    amplitude = complex(amplitude[0], amplitude[1])
                harmonics.append((tuple(index), complex(amplitude)))
            return cls(tuple(harmonics), dimension)
        if "cos" in data or "sin" in data:
            return cls.from_cos_sin(data.get("cos", ()), data.get("sin", ()), data.get("constant", 0.0))
        raise SpecError(f"potential needs 'cos'/'sin' or 'harmonics': {dict(data)!r}")


@dataclass(frozen=True)
class FrequencyVector:
    components: Tuple[float, ...]

    def __post_init__(self):
        if not self.components:
            raise SpecError("frequency vector must have at least one component")
        reduced = tuple(_reduce(resolve_frequency(c)) for c in self.components)
        object.__setattr__(self, "components", reduced)

    @classmethod
    def of(cls, *components: Union[float, str]) -> "FrequencyVector":
        return cls(tuple(components))

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)

    def continued_fraction(self, depth: int = 20) -> ContinuedFraction:
        if self.dimension != 1:
            raise DomainError("continued fractions are defined for one-component frequencies")
        return continued_fraction(self.components[0], depth)


@dataclass(frozen=True)
class OrbitGenerator:
    """How the phase moves from site to site.

    shift:    theta_n = theta + n omega            (any dimension)
    skew:     T(x1, x2) = (x1 + omega, x2 + x1), potential reads x2
    monomial: theta_n = n**sigma * alpha + theta, n >= 0
    """
    kind: str = "shift"
    omega: Tuple[float, ...] = ()
    sigma: float = 2.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ORBIT_KINDS:
            raise SpecError(f"unknown orbit kind {self.kind!r}; expected one of {ORBIT_KINDS}")
        object.__setattr__(self, "omega", tuple(resolve_frequency(w) for w in self.omega))
        if self.kind == "skew" and len(self.omega) != 1:
            raise SpecError("skew shift takes exactly one frequency")
        if self.kind == "monomial" and self.sigma <= 1.0:
            raise SpecError(f"monomial phase needs sigma > 1, got {self.sigma}")

    @classmethod
    def shift(cls, *omega: float) -> "OrbitGenerator":
        return cls("shift", tuple(omega))

    @classmethod
    def skew(cls, omega: float) -> "OrbitGenerator":
        return cls("skew", (omega,))

    @classmethod
    def monomial(cls, sigma: float, alpha: float) -> "OrbitGenerator":
        return cls("monomial", (), sigma, alpha)

    @property
    def phase_dimension(self) -> int:
        """Dimension of the torus point carried along the orbit."""
        if self.kind == "skew":
            return 2
        if self.kind == "monomial":
            return 1
        return len(self.omega)

    @property
    def potential_dimension(self) -> int:
        """Dimension of the argument passed to the potential."""
        return 1 if self.kind in ("skew", "monomial") else len(self.omega)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "shift":
            return {"kind": "shift"}
        if self.kind == "skew":
            return {"kind": "skew", "omega": self.omega[0]}
        return {"kind": "monomial", "sigma": self.sigma, "alpha": self.alpha}


@dataclass(frozen=True)
class OperatorSpec:
    """H = Delta + lambda V on a line, a strip Z x {0..m-1}, or a 2D box.

    ``potentials`` holds one function for line and box geometries and the
    per-row family f_s for strips. ``diagonal`` selects the lambda^{-1} = 0
    limit where the Laplacian is dropped.
    """
    geometry: str
    coupling: float
    potentials: Tuple[FourierPotential, ...]
    frequency: FrequencyVector
    phase: Tuple[float, ...]
    orbit: Optional[OrbitGenerator] = None
    diagonal: bool = False

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise SpecError(f"unknown geometry {self.geometry!r}; expected one of {GEOMETRIES}")
        if self.coupling < 0 or not math.isfinite(self.coupling):
            raise SpecError(f"coupling must be finite and >= 0, got {self.coupling}")
        if not self.potentials:
            raise SpecError("at least one potential function is required")
        if self.geometry != "strip" and len(self.potentials) != 1:
            raise SpecError(f"{self.geometry} geometry takes exactly one potential")

        orbit = self.orbit
        if orbit is None:
            orbit = OrbitGenerator.shift(*self.frequency.components)
            object.__setattr__(self, "orbit", orbit)
        elif orbit.kind == "shift" and tuple(_reduce(w) for w in orbit.omega) != self.frequency.components:
            raise SpecError("shift orbit frequency differs from the spec frequency")

        phase = tuple(_reduce(p) for p in self.phase)
        if len(phase) != orbit.phase_dimension:
            raise SpecError(f"phase has {len(phase)} components, orbit needs {orbit.phase_dimension}")
        object.__setattr__(self, "phase", phase)

        for f in self.potentials:
            if f.dimension != orbit.potential_dimension:
                raise SpecError(f"potential dimension {f.dimension} does not match orbit dimension "
                                f"{orbit.potential_dimension}")
        if self.geometry == "box":
            if self.frequency.dimension != 2 or orbit.kind != "shift":
                raise SpecError("box geometry requires a two-component frequency and a shift orbit")

    @classmethod
    def almost_mathieu(cls, coupling: float, omega: Union[float, str] = "golden", theta: float = 0.0,
                       **kwargs) -> "OperatorSpec":
        return cls("line", coupling, (FourierPotential.cosine(),), FrequencyVector.of(omega), (theta,), **kwargs)

    @property
    def potential(self) -> FourierPotential:
        return self.potentials[0]

    @property
    def width(self) -> int:
        """Number of strip rows (1 for line and box geometries)."""
        return len(self.potentials) if self.geometry == "strip" else 1

    @property
    def lattice_dimension(self) -> int:
        return 2 if self.geometry == "box" else 1

    def with_phase(self, *phase: float) -> "OperatorSpec":
        return replace(self, phase=tuple(phase))

    def with_coupling(self, coupling: float) -> "OperatorSpec":
        return replace(self, coupling=coupling)

    def with_frequency(self, *omega: float) -> "OperatorSpec":
        frequency = FrequencyVector(tuple(omega))
        orbit = self.orbit
        if orbit is not None and orbit.kind == "shift":
            orbit = OrbitGenerator.shift(*frequency.components)
        return replace(self, frequency=frequency, orbit=orbit)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "geometry": self.geometry,
            "coupling": self.coupling,
            "potentials": [f.to_dict() for f in self.potentials],
            "frequency": list(self.frequency.components),
            "phase": list(self.phase),
            "orbit": self.orbit.to_dict() if self.orbit else {"kind": "shift"},
            "diagonal": self.diagonal,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "OperatorSpec":
        try:
            potentials = data.get("potentials")
            if potentials is None:
                potentials = [data.get("potential", {"cos": [1.0]})]
            frequency = data["frequency"]
            if not isinstance(frequency, (list, tuple)):
                frequency = [frequency]
            phase = data.get("phase", [0.0] * len(frequency))
            if not isinstance(phase, (list, tuple)):
                phase = [phase]
            orbit_data = data.get("orbit", {"kind": "shift"})
            kind = orbit_data.get("kind", "shift")
            if kind == "shift":
                orbit = OrbitGenerator.shift(*FrequencyVector(tuple(frequency)).components)
            elif kind == "skew":
                orbit = OrbitGenerator.skew(resolve_frequency(orbit_data["omega"]))
            else:
                orbit = OrbitGenerator.monomial(float(orbit_data["sigma"]), float(orbit_data["alpha"]))
            return cls(
                geometry=data.get("geometry", "line"),
                coupling=float(data["coupling"]),
                potentials=tuple(FourierPotential.from_dict(p) for p in potentials),
                frequency=FrequencyVector(tuple(frequency)),
                phase=tuple(float(p) for p in phase),
                orbit=orbit,
                diagonal=bool(data.get("diagonal", False)),
            )
        except KeyError as exc:
            raise SpecError(f"operator spec is missing field {exc.args[0]!r}") from exc
        except (TypeError, AttributeError) as exc:
            raise SpecError(f"malformed operator spec: {exc}") from exc


@dataclass(frozen=True)
class KickedRotorSpec:
    """Kick strength kappa and free-evolution coefficients a, b."""
    kappa: float
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kappa < 0 or not math.isfinite(self.kappa):
            raise SpecError(f"kick strength must be finite and >= 0, got {self.kappa}")

    def to_dict(self) -> Dict[str, Any]:
        return {"kappa": self.kappa, "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "KickedRotorSpec":
        try:
            return cls(float(data["kappa"]), float(data["a"]), float(data.get("b", 0.0)))
        except KeyError as exc:
            raise SpecError(f"kicked rotor spec is missing field {exc.args[0]!r}") from exc


AnySpec = Union[OperatorSpec, KickedRotorSpec]


def spec_from_dict(data: Mapping[str, Any]) -> AnySpec:
    """Build whichever spec type the document describes."""
    if "kappa" in data:
        return KickedRotorSpec.from_dict(data)
    return OperatorSpec.from_dict(data)


def load_spec(path: Union[str, Path]) -> AnySpec:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec {path} is not valid JSON: {exc}") from exc
    if "spec" in data:
        data = data["spec"]
    return spec_from_dict(data)


def dump_spec(spec: AnySpec) -> str:
    return json.dumps(spec.to_dict(), indent=2)
