"""
Config-driven experiment runner behind the CLI.

A config is a JSON object with the sections ``model``, ``channel``,
``projectors``, ``times``, ``outputs`` and ``tolerances`` (see README).
Relative file paths inside the config resolve against the config's
directory.
"""

from __future__ import annotations

import json
import os
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from .bounds import (
    VIOL_TOL,
    cross_overlap,
    derivation_chain,
    first_dip_time,
    mean_return_probability,
    per_state_return,
    powerlaw_fit,
    ramp_onset_time,
    reference_sff,
    scrambling_check,
    sustained_scrambling_time,
    verify_speed_limit,
)
from .dynamics import (
    CHANNEL_TOL,
    KRAUS_PROVIDERS,
    FilteredUnitaryChannel,
    UnitaryChannel,
    validate_channel,
)
from .errors import ConfigError, DimensionMismatch, InputError
from .io import (
    canonical_json,
    load_matrix,
    load_vector,
    read_spectrum_csv,
    sha256_of,
    write_csv,
    write_histogram_csv,
    write_json,
    write_spectrum_csv,
)
from .projectors import (
    PROJECTOR_TOL,
    dft_eigenbasis_states,
    hadamard_eigenbasis_states,
    haar_random_subsystem_projectors,
    microcanonical_projectors,
    perturb_projector_set,
    subsystem_basis_projectors,
    validate_projector_set,
)
from .randommatrix import gue_matrix, random_complex_hadamard
from .spectra import diagonalize, dos_histogram, mt_envelope, sff_plateau, spectral_variance
from .syk import SykModel, build_syk_model, subsystem_fock_projectors

__all__ = [
    "OUTPUT_ENV",
    "EXIT_OK",
    "EXIT_INVALID",
    "EXIT_VIOLATION",
    "ExperimentConfig",
    "Experiment",
    "RunResult",
    "load_config",
    "parse_config",
    "build_experiment",
    "time_grid",
    "run",
    "verify",
    "resolve_output_dir",
    "describe_error",
]

OUTPUT_ENV = "SFFBOUND_OUTPUT_DIR"
DEFAULT_OUTPUT = "sffbound_out"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VIOLATION = 2

DEFAULT_TOLERANCES = {
    "viol_tol": VIOL_TOL,
    "projector_tol": PROJECTOR_TOL,
    "channel_tol": CHANNEL_TOL,
}

_MODEL_TYPES = ("syk", "gue", "spectrum-file", "hamiltonian-file")
_CHANNEL_TYPES = ("unitary", "filtered", "kraus")
_PROJECTOR_TYPES = ("subsystem", "hadamard", "dft", "haar", "microcanonical")


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    channel: dict
    projectors: dict
    times: dict
    outputs: dict
    tolerances: dict
    base_dir: str = "."

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "channel": self.channel,
            "projectors": self.projectors,
            "times": self.times,
            "outputs": self.outputs,
            "tolerances": self.tolerances,
        }


def _section(cfg: dict, name: str, required: bool = True) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"config is missing the '{name}' section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"'{name}' must be an object")
    return dict(sec)


def _require(sec: dict, key: str, where: str):
    if key not in sec:
        raise ConfigError(f"{where}: missing '{key}'")
    return sec[key]


def parse_config(cfg: dict, base_dir: str = ".") -> ExperimentConfig:
    """Validate the structure of a config dict. Raises ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - {"model", "channel", "projectors", "times", "outputs", "tolerances"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    model = _section(cfg, "model")
    channel = _section(cfg, "channel", required=False) or {"type": "unitary"}
    proj = _section(cfg, "projectors")
    times = _section(cfg, "times")
    outputs = _section(cfg, "outputs", required=False)
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(_section(cfg, "tolerances", required=False))

    if model.get("type") not in _MODEL_TYPES:
        raise ConfigError(f"model.type must be one of {_MODEL_TYPES}")
    if channel.get("type") not in _CHANNEL_TYPES:
        raise ConfigError(f"channel.type must be one of {_CHANNEL_TYPES}")
    if proj.get("type") not in _PROJECTOR_TYPES:
        raise ConfigError(f"projectors.type must be one of {_PROJECTOR_TYPES}")
    if channel["type"] == "kraus" and channel.get("provider") not in KRAUS_PROVIDERS:
        raise ConfigError(f"channel.provider must be one of {sorted(KRAUS_PROVIDERS)}")
    if channel["type"] == "filtered":
        _require(channel, "weights_file", "channel")

    for key in ("t_min", "t_max", "points"):
        _require(times, key, "times")
    if int(times["points"]) < 2:
        raise ConfigError("times.points must be at least 2")
    if not float(times["t_max"]) > float(times["t_min"]):
        raise ConfigError("times.t_max must exceed times.t_min")
    spacing = times.setdefault("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigError("times.spacing must be 'linear' or 'log'")
    if spacing == "log" and not float(times["t_min"]) > 0:
        raise ConfigError("log spacing needs t_min > 0")
    times.setdefault("include_zero", False)
    return ExperimentConfig(model, channel, proj, times, outputs, tols, base_dir)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(cfg, os.path.dirname(os.path.abspath(path)))


def time_grid(times: dict) -> np.ndarray:
    """Linear or geometric grid, optionally with t = 0 prepended."""
    lo, hi, n = float(times["t_min"]), float(times["t_max"]), int(times["points"])
    if times.get("spacing", "linear") == "log":
        t = np.geomspace(lo, hi, n)
    else:
        t = np.linspace(lo, hi, n)
    if times.get("include_zero") and t[0] > 0:
        t = np.concatenate(([0.0], t))
    return t


@dataclass
class Experiment:
    config: ExperimentConfig
    spec: object
    channel: object
    projectors: object
    times: np.ndarray
    model: SykModel | None = None
    D_S: int | None = None
    D_E: int | None = None
    manifest: dict = field(default_factory=dict)

    @property
    def manifest_hash(self) -> str:
        return sha256_of(canonical_json(self.manifest))


def _path(cfg: ExperimentConfig, p: str) -> str:
    return p if os.path.isabs(p) else os.path.join(cfg.base_dir, p)


def _build_model(cfg: ExperimentConfig):
    m = cfg.model
    kind = m["type"]
    if kind == "syk":
        model = build_syk_model(int(_require(m, "N", "model")), int(m.get("q", 4)), float(m.get("J", 1.0)), m.get("seed", 0))
        return model.spectrum, model, model.manifest()
    if kind == "gue":
        D, seed = int(_require(m, "D", "model")), m.get("seed", 0)
        return diagonalize(gue_matrix(D, seed)), None, {"model": "gue", "D": D, "seed": seed}
    if kind == "spectrum-file":
        path = _path(cfg, _require(m, "path", "model"))
        return read_spectrum_csv(path), None, {"model": "spectrum-file", "path": m["path"]}
    path = _path(cfg, _require(m, "path", "model"))
    return diagonalize(load_matrix(path)), None, {"model": "hamiltonian-file", "path": m["path"]}


def _build_channel(cfg: ExperimentConfig, spec):
    c = cfg.channel
    if c["type"] == "unitary":
        return UnitaryChannel(spec)
    if c["type"] == "filtered":
        return FilteredUnitaryChannel(spec, load_vector(_path(cfg, c["weights_file"])))
    params = dict(c.get("params", {}))
    try:
        return KRAUS_PROVIDERS[c["provider"]](spec, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for provider {c['provider']}: {exc}") from exc


def _build_projectors(cfg: ExperimentConfig, spec, model):
    p = cfg.projectors
    kind = p["type"]
    D = spec.dimension
    D_S = D_E = None
    if kind == "subsystem":
        if model is not None and "N_S" in p:
            pset = subsystem_fock_projectors(model, int(p["N_S"]))
        else:
            if "N_S" in p:
                D_S = 2 ** int(p["N_S"])
            else:
                D_S = int(_require(p, "D_S", "projectors"))
            if D_S < 1 or D % D_S:
                raise DimensionMismatch(f"D_S = {D_S} does not divide D = {D}")
            pset = subsystem_basis_projectors(D_S, D // D_S, dimension=D)
    elif kind == "hadamard":
        pset = hadamard_eigenbasis_states(spec, random_complex_hadamard(D, p.get("seed", 0)))
    elif kind == "dft":
        pset = dft_eigenbasis_states(spec)
    elif kind == "haar":
        D_S = int(_require(p, "D_S", "projectors"))
        if D_S < 1 or D % D_S:
            raise DimensionMismatch(f"D_S = {D_S} does not divide D = {D}")
        pset = haar_random_subsystem_projectors(D_S, D // D_S, p.get("seed", 0))
    else:
        pset = microcanonical_projectors(
            spec, float(_require(p, "E_lo", "projectors")), float(_require(p, "E_hi", "projectors")),
            p.get("partition", "singletons"),
        )
    pert = p.get("perturbation")
    if pert:
        pset = perturb_projector_set(pset, float(pert.get("noise", 0.0)), pert.get("seed", 0))
    dims = set(pset.dims)
    D_S = pset.count
    D_E = dims.pop() if len(dims) == 1 else None
    return pset, D_S, D_E


def build_experiment(cfg: ExperimentConfig) -> Experiment:
    spec, model, model_man = _build_model(cfg)
    channel = _build_channel(cfg, spec)
    pset, D_S, D_E = _build_projectors(cfg, spec, model)
    if channel.dimension != pset.total_dim:
        raise DimensionMismatch(f"channel dimension {channel.dimension} != projector dimension {pset.total_dim}")
    t = time_grid(cfg.times)
    manifest = {
        "config": cfg.as_dict(),
        "model": model_man,
        "channel": {"kind": channel.kind, "kraus_count": channel.kraus_count},
        "projectors": {k: v for k, v in pset.manifest().items() if k != "metadata"},
        "tolerances": cfg.tolerances,
        "versions": {
            "sffbound": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    return Experiment(cfg, spec, channel, pset, t, model, D_S, D_E, manifest)


# --- validation ----------------------------------------------------------------


def _validations(exp: Experiment) -> tuple[dict, list[str]]:
    tol = exp.config.tolerances
    failures = []
    prep = validate_projector_set(exp.projectors, float(tol["projector_tol"]))
    if not prep.ok:
        failures.append(
            "projector set failed validation: "
            f"isometry {prep.isometry_residual:.3e}, orthogonality {prep.orthogonality_residual:.3e}, "
            f"completeness {prep.completeness_residual:.3e} (tol {prep.tol:.0e})"
        )
    sample = exp.times[:: max(1, exp.times.size // 5)][:5]
    crep = validate_channel(exp.channel, sample, float(tol["channel_tol"]))
    if exp.channel.kind != "filtered" and getattr(exp.channel, "trace_preserving", True) and not crep.ok:
        failures.append(f"channel not trace preserving: deviation {crep.max_deviation:.3e} (tol {crep.tol:.0e})")
    report = {
        "projectors": prep.as_dict(),
        "channel": {
            "kind": crep.kind,
            "max_deviation": crep.max_deviation,
            "trace_preserving": crep.trace_preserving,
            "tol": crep.tol,
        },
    }
    return report, failures


# --- run -----------------------------------------------------------------------


@dataclass
class RunResult:
    exit_code: int
    summary: dict
    messages: list[str]
    output_dir: str | None = None


def resolve_output_dir(cfg: ExperimentConfig, override: str | None = None) -> str:
    if override:
        return override
    d = cfg.outputs.get("directory")
    if d:
        return _path(cfg, d)
    return os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT


def _fit_window(k, outputs: dict):
    fit = outputs.get("fit", "auto")
    if fit is None or fit is False:
        return None
    if fit == "auto":
        lo = first_dip_time(k)
        hi = ramp_onset_time(k)
        if lo is None or hi is None:
            return None
        return lo, hi
    if isinstance(fit, (list, tuple)) and len(fit) == 2:
        return float(fit[0]), float(fit[1])
    raise ConfigError("outputs.fit must be 'auto', null or [t_lo, t_hi]")


def _compute(exp: Experiment) -> dict:
    tol = exp.config.tolerances
    out = exp.config.outputs
    t = exp.times
    ps = mean_return_probability(exp.channel, exp.projectors, t)
    k = reference_sff(exp.channel, exp.projectors, t)
    rep = verify_speed_limit(ps, k, float(tol["viol_tol"]))
    summary = {
        "manifest_sha256": exp.manifest_hash,
        "D": exp.projectors.total_dim,
        "D_sub": exp.projectors.subspace_dim,
        "D_S": exp.D_S,
        "D_E": exp.D_E,
        "points": int(t.size),
        "bound": rep.as_dict(),
        "max_abs_ps_minus_k": float(np.max(np.abs(rep.margin))),
        "ps_final": float(ps.values[-1]),
        "k_final": float(k.values[-1]),
    }
    if exp.channel.kind in ("unitary", "filtered"):
        summary["sigma_E"] = float(np.sqrt(spectral_variance(exp.spec)))
        summary["sff_plateau"] = sff_plateau(exp.spec)
    thresholds = out.get("ds_thresholds")
    if thresholds is None:
        thresholds = [exp.D_S] if exp.D_S else []
    horizon = float(t[-1])
    summary["sustained_scrambling_time"] = {
        str(int(d)): sustained_scrambling_time(k, int(d), horizon) for d in thresholds
    }
    if exp.D_E:
        ok = scrambling_check(ps, exp.D_S, D_E=exp.D_E)
        late = t >= 0.1 * horizon
        summary["scrambled_fraction_late"] = float(ok[late].mean()) if late.any() else None
        summary["ds_ps_late_mean"] = float(exp.D_S * ps.values[late].mean()) if late.any() else None
    fit = None
    window = _fit_window(k, out)
    if window is not None:
        try:
            fit = powerlaw_fit(k, *window).as_dict()
        except InputError as exc:
            fit = {"error": f"{type(exc).__name__}: {exc}"}
    summary["powerlaw_fit"] = fit
    return {"ps": ps, "k": k, "report": rep, "summary": summary}


def _write_outputs(exp: Experiment, res: dict, outdir: str) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    h = exp.manifest_hash
    out = exp.config.outputs
    t = exp.times
    ps, k, rep = res["ps"], res["k"], res["report"]
    header = ["t", "K", "P_S", "margin"]
    cols = [t, k.values, ps.values, rep.margin]
    if out.get("mt_envelope", True) and exp.channel.kind == "unitary" and exp.projectors.support is None:
        sigma = np.sqrt(spectral_variance(exp.spec))
        if sigma > 0:
            header.append("mt_envelope")
            cols.append(mt_envelope(sigma, t).values)
    written = ["series.csv"]
    write_csv(os.path.join(outdir, "series.csv"), header, cols, h)

    per_state = out.get("per_state") or []
    if per_state:
        cols = [t] + [per_state_return(exp.channel, exp.projectors, int(i), t).values for i in per_state]
        write_csv(os.path.join(outdir, "per_state.csv"), ["t"] + [f"P_{int(i)}" for i in per_state], cols, h)
        written.append("per_state.csv")
    pairs = out.get("cross_pairs") or []
    if pairs:
        cols = [t] + [cross_overlap(exp.channel, exp.projectors, int(a), int(b), t).values for a, b in pairs]
        write_csv(os.path.join(outdir, "cross.csv"), ["t"] + [f"Q_{int(a)}_{int(b)}" for a, b in pairs], cols, h)
        written.append("cross.csv")
    if out.get("chain") and exp.channel.kind == "unitary":
        ch = derivation_chain(exp.spec, exp.projectors, t)
        write_csv(
            os.path.join(outdir, "chain.csv"),
            ["t", "stage1", "stage2", "stage3", "stage4"],
            [t, ch.stage1, ch.stage2, ch.stage3, ch.stage4],
            h,
        )
        written.append("chain.csv")
    if out.get("spectrum"):
        write_spectrum_csv(os.path.join(outdir, "spectrum.csv"), exp.spec, h)
        written.append("spectrum.csv")
    bw = out.get("dos_bin_width")
    if bw:
        write_histogram_csv(os.path.join(outdir, "dos.csv"), dos_histogram(exp.spec, float(bw)), h)
        written.append("dos.csv")
    write_json(os.path.join(outdir, "manifest.json"), dict(exp.manifest, manifest_sha256=h))
    written.append("manifest.json")
    write_json(os.path.join(outdir, "summary.json"), res["summary"])
    written.append("summary.json")
    return written


def _exit_for(failures: list[str], violated: bool) -> int:
    if failures:
        return EXIT_INVALID
    return EXIT_VIOLATION if violated else EXIT_OK


def run(cfg: ExperimentConfig, output_dir: str | None = None) -> RunResult:
    """Build, validate, sweep and write artifacts.

    Returns exit code 1 (and writes nothing) if the channel or projector set
    fails validation, 2 if P_S < K - viol_tol anywhere, else 0.
    """
    exp = build_experiment(cfg)
    vrep, failures = _validations(exp)
    if failures:
        return RunResult(EXIT_INVALID, {"validation": vrep}, failures)
    res = _compute(exp)
    summary = res["summary"]
    summary["validation"] = vrep
    outdir = resolve_output_dir(cfg, output_dir)
    files = _write_outputs(exp, res, outdir)
    msgs = [f"wrote {', '.join(files)} to {outdir}"]
    if res["report"].violated:
        msgs.append(f"bound violated: min(P_S - K) = {res['report'].min_margin:.3e}")
    return RunResult(_exit_for([], res["report"].violated), summary, msgs, outdir)


def verify(cfg: ExperimentConfig) -> RunResult:
    """Validation suite for the configured objects; nothing is written."""
    exp = build_experiment(cfg)
    vrep, failures = _validations(exp)
    res = _compute(exp)
    rep = res["report"]
    msgs = list(failures)
    if rep.violated:
        msgs.append(f"bound violated: min(P_S - K) = {rep.min_margin:.3e}")
    ps, k = res["ps"].values, res["k"].values
    if np.all(np.abs(k - 1) < 1e-12) and np.all(np.abs(ps - 1) < 1e-12):
        msgs.append("note: K = 1 and P_S = 1 on the whole grid (trivial dynamics)")
    summary = dict(res["summary"], validation=vrep)
    code = _exit_for(failures, rep.violated)
    msgs.insert(0, "PASS" if code == EXIT_OK else "FAIL")
    return RunResult(code, summary, msgs)


def describe_error(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"

