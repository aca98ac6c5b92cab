"""Experiment harness: regularity probes, the exponent scan and calibration sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid, GridField, read_bfld
from .oracles import RadialStretch, radial_stretch_oracle
from .solver import ConvergenceError, SolverConfig, commutator, solve, validate_coefficients
from .spaces import (
    Criticality,
    SobolevIndex,
    admissible_q_threshold,
    classify,
    difference_norm,
    tl_norm,
)
from .spaces.exponents import extremal_exponent
from .spectral import disk_indicator, fft2, fractional_derivative, ifft2, mollify

__all__ = [
    "ProbeError",
    "CoefficientFamily",
    "ProbeSpec",
    "ProbeResult",
    "run_probe",
    "astala_exponent_scan",
    "CorpusMember",
    "DEFAULT_CORPUS",
    "DEFAULT_INDICES",
    "calibration_sweep",
    "load_calibration",
    "CALIBRATION_PATH",
    "resample",
    "smooth_pair",
    "commutator_ratio",
    "growth_per_doubling",
    "classify_growth",
    "check_monotone",
]

STABLE_GROWTH = 0.03
GROWING_GROWTH = 0.10

CALIBRATION_PATH = Path(__file__).with_name("data") / "calibration.json"


class ProbeError(RuntimeError):
    """A probe violated one of its run-level invariants."""


# -- coefficient families ------------------------------------------------------

FAMILIES = ("disk-indicator", "radial-stretch", "mollified", "custom")


@dataclass(frozen=True)
class CoefficientFamily:
    kind: str
    k: float = 0.0
    base: "CoefficientFamily | None" = None
    n_moll: int = 0
    path: str | None = None
    nu_path: str | None = None

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown coefficient family {self.kind!r}; expected one of {FAMILIES}")
        if self.kind in ("disk-indicator", "radial-stretch") and not 0 < self.k < 1:
            raise ValueError(f"{self.kind}: k must lie in (0, 1), got {self.k}")
        if self.kind == "mollified":
            if self.base is None or self.base.kind == "mollified":
                raise ValueError("mollified family needs a non-mollified base family")
            if int(self.n_moll) != self.n_moll or self.n_moll < 1:
                raise ValueError(f"n_moll must be a positive integer, got {self.n_moll}")
        if self.kind == "custom" and not self.path:
            raise ValueError("custom family needs a BFLD1 path for mu")

    @classmethod
    def disk_indicator(cls, k):
        return cls("disk-indicator", k=k)

    @classmethod
    def radial_stretch(cls, k):
        return cls("radial-stretch", k=k)

    @classmethod
    def mollified(cls, base, n_moll):
        return cls("mollified", base=base, n_moll=int(n_moll))

    @classmethod
    def custom(cls, path, nu_path=None):
        return cls("custom", path=str(path), nu_path=None if nu_path is None else str(nu_path))

    @property
    def nominal_kappa(self) -> float | None:
        if self.kind == "mollified":
            return self.base.nominal_kappa
        if self.kind == "custom":
            return None
        return self.k

    @property
    def discontinuous(self) -> bool:
        return self.kind in ("disk-indicator", "radial-stretch") or (
            self.kind == "custom"
        )

    def build(self, grid: Grid) -> tuple[GridField, GridField]:
        """``(mu, nu)`` on ``grid``."""
        if self.kind == "disk-indicator":
            return disk_indicator(grid) * self.k, grid.zeros()
        if self.kind == "radial-stretch":
            mu, _, _ = radial_stretch_oracle(self.k, grid)
            return mu, grid.zeros()
        if self.kind == "mollified":
            mu, nu = self.base.build(grid)
            return mollify(mu, self.n_moll), mollify(nu, self.n_moll)
        mu = resample(read_bfld(self.path), grid)
        nu = resample(read_bfld(self.nu_path), grid) if self.nu_path else grid.zeros()
        return mu, nu

    def describe(self) -> str:
        if self.kind == "mollified":
            return f"mollified({self.base.describe()}, n_moll={self.n_moll})"
        if self.kind == "custom":
            return f"custom({self.path})"
        return f"{self.kind}(k={self.k})"


def resample(src: GridField, grid: Grid) -> GridField:
    """Fourier interpolation (or truncation) of ``src`` onto ``grid``; the boxes must agree."""
    if src.grid == grid:
        return src
    if src.grid.half_side != grid.half_side:
        raise ValueError(
            f"cannot resample: half_side {src.grid.half_side} differs from {grid.half_side}"
        )
    n0, n1 = src.grid.n, grid.n
    spec = np.fft.fftshift(fft2(src.values))
    out = np.zeros((n1, n1), dtype=complex)
    m = min(n0, n1)
    a0, a1 = (n0 - m) // 2, (n1 - m) // 2
    out[a1:a1 + m, a1:a1 + m] = spec[a0:a0 + m, a0:a0 + m]
    vals = ifft2(np.fft.ifftshift(out)) * (n1 / n0) ** 2
    return GridField(grid, vals)


# -- probe ---------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeSpec:
    family: CoefficientFamily
    index: SobolevIndex
    kappa: float
    q_grid: tuple
    refinement_levels: tuple
    half_side: float = 4.0
    fine_index: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "q_grid", tuple(float(q) for q in self.q_grid))
        object.__setattr__(self, "refinement_levels", tuple(int(n) for n in self.refinement_levels))
        if not self.q_grid:
            raise ValueError("q_grid must not be empty")
        bad = [q for q in self.q_grid if not q > 1]
        if bad:
            raise ValueError(f"q_grid entries must exceed 1 (got {bad})")
        levels = self.refinement_levels
        if not levels:
            raise ValueError("refinement_levels must not be empty")
        for n in levels:
            if n < 16 or n & (n - 1):
                raise ValueError(f"refinement levels must be powers of two >= 16, got {n}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"refinement levels must be strictly increasing, got {list(levels)}")
        if not 0 < self.kappa < 1:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")

    def smoothness_budget_ok(self) -> bool:
        """Indicator functions lie in ``W^{s,p}`` only for ``s p < 1``."""
        if self.family.kind != "disk-indicator":
            return True
        return float(self.index.s) * float(self.index.p) < 1


@dataclass
class ProbeResult:
    spec: ProbeSpec
    reports: dict  # (q, n) -> NormReport
    threshold: object  # QThreshold or None when the index is supercritical
    growth_rates: dict  # q -> per-doubling growth of the total
    verdicts: dict  # q -> stable | growing | inconclusive
    lq_norms: dict = field(default_factory=dict)  # (q, n) -> ||h||_{L^q}
    iterations: dict = field(default_factory=dict)  # n -> solver iterations
    measured_kappa: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def protected(self, q) -> bool | None:
        return None if self.threshold is None else self.threshold.admits(q)

    def rows(self) -> list[dict]:
        out = []
        for q in self.spec.q_grid:
            for n in self.spec.refinement_levels:
                r = self.reports[(q, n)]
                out.append({
                    "q": q,
                    "n": n,
                    "total": r.total,
                    "lq_norm": self.lq_norms[(q, n)],
                    "truncation_flag": int(r.truncation_flag),
                    "iterations": self.iterations[n],
                    "growth": self.growth_rates[q],
                    "verdict": self.verdicts[q],
                })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def summary(self) -> dict:
        th = None if self.threshold is None else self.threshold.as_dict()
        return {
            "family": self.spec.family.describe(),
            "index": {"s": float(self.spec.index.s), "p": float(self.spec.index.p)},
            "kappa": self.spec.kappa,
            "criticality": classify(self.spec.index).value,
            "threshold": th,
            "levels": list(self.spec.refinement_levels),
            "verdicts": {repr(q): v for q, v in self.verdicts.items()},
            "growth": {repr(q): g for q, g in self.growth_rates.items()},
            "protected": {repr(q): self.protected(q) for q in self.spec.q_grid},
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)


def growth_per_doubling(levels, totals) -> float:
    """``2^slope - 1`` for the least-squares slope of ``log2 total`` against ``log2 n``."""
    if len(levels) < 2:
        return math.nan
    x = np.log2(np.asarray(levels, dtype=float))
    y = np.log2(np.asarray(totals, dtype=float))
    slope = np.polyfit(x, y, 1)[0]
    return float(2.0**slope - 1.0)


def classify_growth(growth: float, truncated: bool) -> str:
    if truncated or not np.isfinite(growth):
        return "inconclusive"
    if growth <= STABLE_GROWTH:
        return "stable"
    if growth >= GROWING_GROWTH:
        return "growing"
    return "inconclusive"


def check_monotone(q_grid, verdicts) -> None:
    """A stable verdict at ``q2`` forbids a growing verdict at any ``q1 < q2``."""
    for q2 in q_grid:
        if verdicts[q2] != "stable":
            continue
        for q1 in q_grid:
            if q1 < q2 and verdicts[q1] == "growing":
                raise ProbeError(
                    f"verdict monotonicity violated: q={q2} stable but q={q1} growing"
                )


def _probe_level(spec: ProbeSpec, config: SolverConfig, n: int):
    grid = Grid(n, spec.half_side)
    mu, nu = spec.family.build(grid)
    coeffs = validate_coefficients(mu, nu, rescale=spec.family.kind in ("mollified", "custom"))
    if coeffs.kappa > spec.kappa + 1e-12:
        raise ProbeError(
            f"n={n}: measured kappa {coeffs.kappa:.6g} exceeds the declared {spec.kappa}"
        )
    try:
        sol = solve(coeffs, config)
    except ConvergenceError as exc:
        raise ConvergenceError(f"probe level n={n}: {exc}", exc.history) from exc
    reports, lq = {}, {}
    for q in spec.q_grid:
        idx = SobolevIndex(spec.index.s, q, spec.fine_index)
        reports[q] = tl_norm(sol.h, idx)
        lq[q] = sol.h.norm(q)
    return n, sol.iterations, coeffs.kappa, reports, lq


def run_probe(spec: ProbeSpec, config: SolverConfig | None = None, *, strict: bool = False,
              workers: int = 1) -> ProbeResult:
    """Solve at every refinement level, measure ``||h||_{F^s_{q,2}}`` for each ``q`` and
    classify the growth of the totals under refinement."""
    config = config or SolverConfig()
    flags = []
    if not spec.smoothness_budget_ok():
        msg = (f"disk-indicator coefficients lie in W^(s,p) only for s*p < 1; "
               f"claimed s*p = {float(spec.index.s) * float(spec.index.p):.4g}")
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        flags.append("smoothness-budget-exceeded")

    if classify(spec.index) is Criticality.SUPERCRITICAL:
        threshold = None
        flags.append("supercritical-index")
    else:
        threshold = admissible_q_threshold(spec.index, spec.kappa)

    levels = spec.refinement_levels
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda n: _probe_level(spec, config, n), levels))
    else:
        results = [_probe_level(spec, config, n) for n in levels]

    reports, lq, iterations, kappas = {}, {}, {}, {}
    for n, its, kap, reps, norms in results:
        iterations[n] = its
        kappas[n] = kap
        for q in spec.q_grid:
            reports[(q, n)] = reps[q]
            lq[(q, n)] = norms[q]

    growth, verdicts = {}, {}
    for q in spec.q_grid:
        totals = [reports[(q, n)].total for n in levels]
        truncated = any(reports[(q, n)].truncation_flag for n in levels)
        growth[q] = growth_per_doubling(levels, totals)
        verdicts[q] = classify_growth(growth[q], truncated)
    check_monotone(spec.q_grid, verdicts)
    return ProbeResult(spec, reports, threshold, growth, verdicts, lq, iterations, kappas, flags)


# -- exponent scan -----------------------------------------------------------------

SCAN_P = (1.5, 2.0, 3.0, 4.0, 6.0)


def astala_exponent_scan(k_grid, grid: Grid, p_grid=SCAN_P, config: SolverConfig | None = None) -> list[dict]:
    """``||h||_{L^p}`` of the radial stretch for each ``k`` next to ``p_kappa = 1 + 1/k``.

    ``|h| = (alpha/2)|z|^alpha`` is bounded, so every norm is finite; the
    table is descriptive.  ``slope`` is the least-squares slope of
    ``log ||h||_p`` against ``1/p``.
    """
    rows = []
    for k in k_grid:
        k = float(k)
        if not 0 < k <= 0.8:
            raise ValueError(f"k must lie in (0, 0.8], got {k}")
        mu, _, _ = radial_stretch_oracle(k, grid)
        coeffs = validate_coefficients(mu)
        cfg = config or SolverConfig(1e-10, max(60, SolverConfig(1e-10).iteration_bound(coeffs.kappa)))
        sol = solve(coeffs, cfg)
        rs = RadialStretch(k)
        measured = [sol.h.norm(p) for p in p_grid]
        slope = float(np.polyfit([1 / p for p in p_grid], np.log(measured), 1)[0])
        rows.append({
            "k": k,
            "p_kappa": float(extremal_exponent(k)),
            "norms": {repr(float(p)): v for p, v in zip(p_grid, measured)},
            "oracle_norms": {repr(float(p)): rs.h_norm(p) for p in p_grid},
            "slope": slope,
            "iterations": sol.iterations,
        })
    return rows


# -- calibration -------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusMember:
    """A named test field; ``make(grid, lam)`` samples ``f(lam * z)``."""

    name: str
    make: object
    homogeneous: bool = False  # high-frequency dominated: dilation scaling applies


def _gauss(width, shift=0j, freq=0.0):
    def make(grid, lam=1.0):
        z = lam * grid.z
        v = np.exp(-np.pi * np.abs(z - shift) ** 2 / width**2)
        if freq:
            v = v * np.exp(2j * np.pi * freq * z.real)
        return grid.field(v)
    return make


def _wave(freq, width):
    def make(grid, lam=1.0):
        z = lam * grid.z
        return grid.field(np.exp(-np.pi * np.abs(z) ** 2 / width**2) * np.cos(2 * np.pi * freq * z.real))
    return make


def _disk(grid, lam=1.0):
    return disk_indicator(grid, 1.0 / lam)


def _mollified_disk(grid, lam=1.0):
    return mollify(disk_indicator(grid, 1.0 / lam), 8)


def _stretch_h(grid, lam=1.0):
    if lam != 1.0:
        raise ValueError("radial-stretch member has no dilated form")
    return RadialStretch(0.3).sampled(grid)[2]


DEFAULT_CORPUS = (
    CorpusMember("gauss-1", _gauss(1.0)),
    CorpusMember("gauss-0.5", _gauss(0.5)),
    CorpusMember("gauss-0.25", _gauss(0.25)),
    CorpusMember("gauss-shifted", _gauss(0.5, shift=0.3 - 0.2j)),
    CorpusMember("wave-2", _wave(2.0, 1.0), homogeneous=True),
    CorpusMember("wave-4", _wave(4.0, 1.0), homogeneous=True),
    CorpusMember("wave-4-narrow", _wave(4.0, 0.5), homogeneous=True),
    CorpusMember("disk-indicator", _disk),
    CorpusMember("disk-indicator-mollified", _mollified_disk),
    CorpusMember("radial-stretch-h", _stretch_h),
)

DEFAULT_INDICES = (SobolevIndex(0.5, 2, 2), SobolevIndex(0.3, 4, 2), SobolevIndex(1.0, 2, 2))

CROSS_INDEX = SobolevIndex(0.5, 2, 2)
COMMUTATOR_S = 0.5
COMMUTATOR_PAIRS = 6
CALIBRATION_GRID = (256, 4.0)


def _resolve_corpus(corpus):
    registry = {m.name: m for m in DEFAULT_CORPUS}
    members = []
    for item in corpus:
        if isinstance(item, CorpusMember):
            members.append(item)
        elif isinstance(item, str):
            if item not in registry:
                raise KeyError(f"unknown corpus member {item!r}")
            members.append(registry[item])
        else:
            raise TypeError(f"corpus entries must be names or CorpusMember, got {type(item).__name__}")
    return members


PAIR_BASE_N = 64


def smooth_pair(grid: Grid, seed: int) -> tuple[GridField, GridField]:
    """Deterministic smooth ``(mu, f)``: random low-frequency content under Gaussian envelopes.

    The random spectrum is drawn on a fixed 64-point grid and Fourier-interpolated,
    so the same seed gives the same functions at every resolution.
    """
    if grid.n < PAIR_BASE_N:
        raise ValueError(f"smooth_pair needs n >= {PAIR_BASE_N}")
    rng = np.random.default_rng(seed)
    base = Grid(PAIR_BASE_N, grid.half_side)
    lat = base.lattice
    out = []
    for width in (0.6, 1.0):
        spec = rng.standard_normal(lat.xi.shape) + 1j * rng.standard_normal(lat.xi.shape)
        spec *= np.exp(-(lat.modulus / 2.0) ** 2)
        spec[:, base.n // 2] = 0.0  # no unpaired Nyquist content
        spec[base.n // 2, :] = 0.0
        coarse = ifft2(spec)
        v = resample(GridField(base, coarse), grid).values / np.abs(coarse).max()
        v = v * np.exp(-np.pi * np.abs(grid.z) ** 2 / width**2)
        out.append(grid.field(v))
    return out[0], out[1]


def commutator_ratio(mu: GridField, f: GridField, s: float = COMMUTATOR_S) -> float:
    """``||[mu, D^s] f||_2 / (||D^s mu||_4 ||f||_4)``."""
    num = commutator(mu, s, f).norm(2)
    den = fractional_derivative(mu, s).norm(4) * f.norm(4)
    return num / den


def calibration_sweep(corpus=None, indices=None, path=None) -> dict:
    """Measure the norm-equivalence ratios on ``corpus`` and freeze them as constants.

    Writes a sorted-key JSON file (bit-identical on rerun) when ``path`` is
    given and returns the constants.
    """
    corpus = DEFAULT_CORPUS if corpus is None else corpus
    indices = DEFAULT_INDICES if indices is None else tuple(indices)
    members = _resolve_corpus(corpus)
    if not members:
        raise ValueError("calibration corpus is empty")
    grid = Grid(*CALIBRATION_GRID)

    f0 = SobolevIndex(0, 2, 2)
    f0_ratio, cross_raw, scaling = {}, {}, {}
    for m in members:
        fld = m.make(grid)
        f0_ratio[m.name] = tl_norm(fld, f0).total / fld.norm(2)
        cross_raw[m.name] = difference_norm(fld, CROSS_INDEX, M=1).total / tl_norm(fld, CROSS_INDEX).total
        if m.homogeneous:
            dil = m.make(grid, 2.0)
            for idx in indices:
                key = f"{m.name}@s={float(idx.s)!r},p={float(idx.p)!r}"
                ratio = tl_norm(dil, idx).total / tl_norm(fld, idx).total
                scaling[key] = {
                    "ratio": ratio,
                    "expected": 2.0 ** (float(idx.s) - 2.0 / float(idx.p)),
                }
    vals = np.array(list(cross_raw.values()))
    centre = float(np.sqrt(vals.min() * vals.max()))

    comm = {}
    for seed in range(COMMUTATOR_PAIRS):
        per_n = []
        for n in (256, 512):
            mu, f = smooth_pair(Grid(n, 4.0), seed)
            per_n.append(commutator_ratio(mu, f))
        comm[str(seed)] = per_n
    comm_max = max(max(v) for v in comm.values())

    constants = {
        "grid": {"n": grid.n, "half_side": grid.half_side},
        "members": [m.name for m in members],
        "f0_l2_ratio": {
            "values": f0_ratio,
            "min": min(f0_ratio.values()),
            "max": max(f0_ratio.values()),
        },
        "tl_difference_ratio": {
            "index": [float(CROSS_INDEX.s), float(CROSS_INDEX.p), float(CROSS_INDEX.q)],
            "M": 1,
            "raw": cross_raw,
            "centre": centre,
            "normalised": {k: v / centre for k, v in cross_raw.items()},
        },
        "scaling": scaling,
        "commutator": {
            "s": COMMUTATOR_S,
            "exponents": {"q": 2, "r": 4, "p": 4},
            "ratios": comm,
            "constant": 1.25 * comm_max,
        },
    }
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(constants, sort_keys=True, indent=2) + "\n")
        os.replace(tmp, path)
    return constants


def load_calibration(path=None) -> dict:
    path = CALIBRATION_PATH if path is None else Path(path)
    if not path.exists():
        raise FileNotFoundError(
            f"calibration constants not found at {path}; run `beltrami-lab calibrate`"
        )
    return json.loads(path.read_text())
