"""Input decks, ASCII output files and the binary restart format."""
import logging
import math
import re
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError, RestartError
from .fock import ConfigurationBasis, Statistics
from .grid import build_grid
from .mctdh import HamiltonianSpec, ManyBodyState
from .model import (InteractionKind, InteractionSpec, PotentialKind, PotentialSpec,
                    evaluate_potential)
from .analysis import density_x
from .solver import PROPAGATE, CoefficientsIntegrator, Guess, RunConfig

log = logging.getLogger(__name__)

NUMBER_FORMAT = "{:.14E}"  # 15 significant digits
RESTART_MAGIC = b"MQDX0001"
_HEADER = struct.Struct("<8s4q3d")

RUN_KEYS = {
    "JOB_TYPE", "Npar", "Morb", "xlambda_0", "mass", "Job_Prefactor", "GUESS",
    "Binary_Start_Time", "DIM_MCTDH", "NDVR_X", "NDVR_Y", "NDVR_Z", "x_initial", "x_final",
    "y_initial", "y_final", "z_initial", "z_final", "Time_Begin", "Time_Final",
    "Output_TimeStep", "Integration_Stepsize", "Write_ASCII", "Coefficients_Integrator",
    "Orbital_Integrator", "whichpot", "Interaction_Type", "which_interaction",
}
ANALYSIS_KEYS = {
    "Total_Energy", "Time_From", "Time_To", "Time_Points", "Density_x", "Density_k",
    "Correlations_X", "xstart", "xend",
}
_INDEXED_KEYS = re.compile(r"^(parameter([1-9]|[12][0-9]|30)|Interaction_Parameter[1-9][0-9]*)$")

RELAX_REQUIRED = ("JOB_TYPE", "Npar", "Morb", "NDVR_X", "x_initial", "x_final",
                  "Time_Final", "Integration_Stepsize")
ANALYSIS_REQUIRED = ("Time_From", "Time_To", "Time_Points")


class UnknownKeyWarning(UserWarning):
    pass


def known_key(key):
    return key in RUN_KEYS or key in ANALYSIS_KEYS or bool(_INDEXED_KEYS.match(key))


# ---------------------------------------------------------------- literals

_INT = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eEdD][+-]?\d+)?$")
_COMPLEX = re.compile(r"^\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)$")
_BOOL = {".T.": True, ".TRUE.": True, "T": True, ".F.": False, ".FALSE.": False, "F": False}


def _parse_float(text):
    if not _FLOAT.match(text):
        raise ValueError(text)
    return float(text.replace("d", "e").replace("D", "e"))


def parse_literal(text):
    """Fortran-flavoured literal: int, real (d-exponents), (re,im), .T./.F. or string."""
    text = text.strip()
    if not text:
        raise ValueError("empty value")
    if text[0] in "'\"":
        if len(text) < 2 or text[-1] != text[0]:
            raise ValueError(f"unterminated string {text}")
        return text[1:-1]
    if text.upper() in _BOOL:
        return _BOOL[text.upper()]
    if _INT.match(text):
        return int(text)
    if _FLOAT.match(text):
        return _parse_float(text)
    m = _COMPLEX.match(text)
    if m:
        return complex(_parse_float(m.group(1).strip()), _parse_float(m.group(2).strip()))
    if re.match(r"^[A-Za-z_][\w+\-.]*$", text):
        return text
    raise ValueError(f"malformed literal {text!r}")


def format_literal(value):
    if isinstance(value, bool):
        return ".T." if value else ".F."
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value).replace("e", "d") if "e" in repr(value) else repr(value) + "d0"
    if isinstance(value, complex):
        return f"({format_literal(value.real)},{format_literal(value.imag)})"
    return "'" + str(value) + "'"


def _strip_comment(line):
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "!":
            return line[:i]
    return line


# ---------------------------------------------------------------- decks

@dataclass
class InputDeck:
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    path: Path = None

    def __contains__(self, key):
        return key in self.values

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, *keys):
        missing = [k for k in keys if k not in self.values]
        if missing:
            where = f" in {self.path}" if self.path else ""
            raise ParseError(f"missing required key(s){where}: {', '.join(missing)}")

    def number(self, key, default=None):
        value = self.values.get(key, default)
        if value is None:
            self.require(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"{key} must be a real number, got {value!r}", self.lines.get(key))
        return float(value)

    def integer(self, key, default=None):
        value = self.values.get(key, default)
        if value is None:
            self.require(key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"{key} must be an integer, got {value!r}", self.lines.get(key))
        return value

    def flag(self, key, default=False):
        value = self.values.get(key, default)
        if not isinstance(value, bool):
            raise ParseError(f"{key} must be .T. or .F., got {value!r}", self.lines.get(key))
        return value

    # -- builders

    def statistics(self):
        self.require("JOB_TYPE")
        try:
            return Statistics(str(self["JOB_TYPE"]).upper())
        except ValueError:
            raise ParseError(f"JOB_TYPE must be BOS or FER, got {self['JOB_TYPE']!r}",
                             self.lines.get("JOB_TYPE")) from None

    def basis(self):
        return ConfigurationBasis(self.statistics(), self.integer("Npar"), self.integer("Morb"))

    def grid(self):
        dim = self.integer("DIM_MCTDH", 1)
        if dim != 1:
            raise ConfigurationError(f"DIM_MCTDH must be 1, got {dim}")
        return build_grid(self.integer("NDVR_X"), self.number("x_initial"),
                          self.number("x_final"))

    def potential(self):
        name = str(self.get("whichpot", "HO1D"))
        p = [self.number(f"parameter{i}", 0.0) for i in range(1, 7)]
        try:
            kind = PotentialKind(name)
        except ValueError:
            raise ConfigurationError(f"unsupported whichpot {name!r}") from None
        omega = p[0] if "parameter1" in self else 1.0
        if kind is PotentialKind.HO1D:
            return PotentialSpec(kind, omega, p[1])
        return PotentialSpec(kind, omega, p[1], p[2], p[3], p[4], p[5])

    def interaction(self):
        w0 = self.number("xlambda_0", 0.0)
        itype = self.integer("Interaction_Type", 0)
        name = str(self.get("which_interaction", "delta"))
        alpha = self.number("Interaction_Parameter1", 0.0)
        beta = self.number("Interaction_Parameter2", 0.0)
        if itype == 0:
            if name != "delta":
                warnings.warn(f"Interaction_Type=0 selects contact interaction; "
                              f"ignoring which_interaction={name!r}", UserWarning)
            return InteractionSpec(InteractionKind.CONTACT, w0)
        try:
            kind = InteractionKind(name)
        except ValueError:
            raise ConfigurationError(f"unsupported which_interaction {name!r}") from None
        return InteractionSpec(kind, w0, alpha, beta)

    def hamiltonian(self):
        return HamiltonianSpec(self.potential(), self.interaction(), self.number("mass", 1.0))

    def prefactor(self):
        value = self.get("Job_Prefactor", complex(-1.0, 0.0))
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = complex(value)
        if not isinstance(value, complex):
            raise ParseError(f"Job_Prefactor must be a pair (re,im), got {value!r}",
                             self.lines.get("Job_Prefactor"))
        return value

    def run_config(self):
        self.require(*RELAX_REQUIRED)
        prefactor = self.prefactor()
        propagating = prefactor == PROPAGATE
        if not propagating and prefactor != complex(-1.0, 0.0):
            raise ConfigurationError(
                f"Job_Prefactor must be (-1,0) or (0,-1), got {prefactor}")
        default_integrator = "MCS" if propagating else "DAV"
        coeff = str(self.get("Coefficients_Integrator", default_integrator)).upper()
        try:
            coeff = CoefficientsIntegrator(coeff)
        except ValueError:
            raise ConfigurationError(f"unsupported Coefficients_Integrator {coeff!r}") from None
        if propagating and coeff is not CoefficientsIntegrator.MCS:
            raise ConfigurationError("propagation needs Coefficients_Integrator='MCS'")
        if not propagating and coeff is not CoefficientsIntegrator.DAV:
            raise ConfigurationError("relaxation needs Coefficients_Integrator='DAV'")
        try:
            guess = Guess(str(self.get("GUESS", "HAND")).upper())
        except ValueError:
            raise ConfigurationError(f"unsupported GUESS {self.get('GUESS')!r}") from None
        return RunConfig(
            job_prefactor=prefactor,
            time_begin=self.number("Time_Begin", 0.0),
            time_final=self.number("Time_Final"),
            output_timestep=self.number("Output_TimeStep", 1.0),
            integration_stepsize=self.number("Integration_Stepsize"),
            guess=guess,
            binary_start_time=self.number("Binary_Start_Time", 0.0),
            coefficients_integrator=coeff,
            orbital_integrator=str(self.get("Orbital_Integrator", "RK")),
        )

    def analysis_times(self):
        self.require(*ANALYSIS_REQUIRED)
        t0, t1 = self.number("Time_From"), self.number("Time_To")
        n = self.integer("Time_Points")
        if n < 1:
            raise ConfigurationError(f"Time_Points must be positive, got {n}")
        if n == 1:
            return np.array([t0])
        return np.linspace(t0, t1, n)


def parse_deck_text(text, path=None):
    deck = InputDeck(path=Path(path) if path else None)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("!"):
            continue
        line = _strip_comment(line).strip().rstrip(",").strip()
        # namelist group delimiters are tolerated
        if not line or line.startswith("&") or line == "/":
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = line.split("=", 1)
        key = key.strip()
        if not re.match(r"^[A-Za-z_]\w*$", key):
            raise ParseError(f"invalid key {key!r}", lineno)
        try:
            parsed = parse_literal(value)
        except ValueError as err:
            raise ParseError(f"{key}: {err}", lineno) from None
        if not known_key(key):
            warnings.warn(f"line {lineno}: unknown key {key!r} ignored by this program",
                          UnknownKeyWarning)
        deck.values[key] = parsed
        deck.lines[key] = lineno
    return deck


def parse_input(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"cannot read deck {path}: {err}") from err
    return parse_deck_text(text, path)


def format_deck(values):
    return "".join(f"{k} = {format_literal(v)}\n" for k, v in values.items())


# ---------------------------------------------------------------- ASCII outputs

def _fmt_row(values):
    return " ".join(NUMBER_FORMAT.format(float(v)) for v in values) + "\n"


def time_label(t):
    return f"{t:.7f}"


def orbs_filename(t):
    return f"{time_label(t)}orbs.dat"


def correlations_filename(t, N, M):
    return f"{time_label(t)}N{N}M{M}x-correlations.dat"


def no_pr_row(record):
    return _fmt_row([record.time, *record.occupations, record.energy])


def write_no_pr(trajectory, M, path):
    """time, M normalized occupations (ascending), energy; one row per record."""
    if not trajectory.records:
        raise ConfigurationError("trajectory has no records")
    with open(path, "w") as fh:
        for rec in trajectory.records:
            if len(rec.occupations) != M:
                raise ConfigurationError(f"record has {len(rec.occupations)} occupations, M={M}")
            fh.write(no_pr_row(rec))


def write_orbs(state, spec, t, path):
    """x, y=0, z=0, two reserved zeros, normalized density, V(x, t), Re/Im of each orbital."""
    x = state.grid.points
    cols = [x, np.zeros_like(x), np.zeros_like(x), np.zeros_like(x), np.zeros_like(x),
            density_x(state), evaluate_potential(spec.potential, x, t)]
    for phi in state.orbitals:
        cols += [phi.real, phi.imag]
    table = np.column_stack(cols)
    with open(path, "w") as fh:
        for row in table:
            fh.write(_fmt_row(row))


def write_correlations(records, N, M, t, path):
    """Blocks of constant x separated by blank lines (gnuplot pm3d layout)."""
    n = int(round(math.sqrt(len(records))))
    if n * n != len(records):
        raise ConfigurationError("correlation records do not cover a square grid product")
    zeros = np.zeros(len(records))
    table = np.column_stack([records["x"], zeros, zeros, records["x_prime"], zeros, zeros,
                             records["rho_x"], records["rho1_re"], records["rho1_im"],
                             records["rho_xp"], records["rho2_diag"]])
    with open(path, "w") as fh:
        for i in range(n):
            for row in table[i * n:(i + 1) * n]:
                fh.write(_fmt_row(row))
            fh.write("\n")


def write_density_k(k, rho_k, path):
    with open(path, "w") as fh:
        for row in zip(k, rho_k):
            fh.write(_fmt_row(row))


# ---------------------------------------------------------------- restart files

def restart_filename(t):
    return f"restart_{time_label(t)}.mqdx"


_KIND_CODE = {Statistics.BOSON: 0, Statistics.FERMION: 1}


def write_restart(state, path):
    grid = state.grid
    header = _HEADER.pack(RESTART_MAGIC, _KIND_CODE[state.basis.kind], state.n_particles,
                          state.n_orbitals, grid.n_points, grid.x_min, grid.x_max,
                          float(state.time))
    tmp = Path(str(path) + ".part")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.orbitals, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.coefficients, dtype="<c16").tobytes())
    tmp.replace(path)


def read_restart(path, expect=None):
    """Load a restart file; `expect` maps header fields (kind, N, M, n_points) to required values."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as err:
        raise RestartError(f"cannot read restart file {path}: {err}") from err
    if len(data) < _HEADER.size:
        raise RestartError(f"{path}: truncated header")
    magic, kind, N, M, n, x_min, x_max, t = _HEADER.unpack_from(data)
    if magic != RESTART_MAGIC:
        raise RestartError(f"{path}: bad magic {magic!r}, expected {RESTART_MAGIC!r}")
    kinds = {v: k for k, v in _KIND_CODE.items()}
    if kind not in kinds:
        raise RestartError(f"{path}: unknown particle kind code {kind}")
    header = {"kind": kinds[kind], "N": N, "M": M, "n_points": n}
    for key, want in (expect or {}).items():
        if header[key] != want:
            raise RestartError(f"{path}: restart has {key}={header[key]}, deck requires {want}")
    basis = ConfigurationBasis(kinds[kind], N, M)
    grid = build_grid(n, x_min, x_max)
    n_orb, n_coef = M * n, basis.size
    expected = _HEADER.size + 16 * (n_orb + n_coef)
    if len(data) != expected:
        raise RestartError(f"{path}: size {len(data)} bytes, expected {expected}")
    body = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    orbitals = body[:n_orb].reshape(M, n).astype(complex)
    coefficients = body[n_orb:].astype(complex)
    return ManyBodyState(grid, basis, orbitals, coefficients, t)


def find_snapshot(directory, t, atol=1e-6):
    """Restart file in `directory` closest to time t; (path, time, exact)."""
    directory = Path(directory)
    candidates = []
    for p in directory.glob("restart_*.mqdx"):
        try:
            candidates.append((float(p.stem[len("restart_"):]), p))
        except ValueError:
            continue
    if not candidates:
        raise RestartError(f"no restart files in {directory}")
    ts, p = min(candidates, key=lambda c: abs(c[0] - t))
    return p, ts, abs(ts - t) <= atol
