"""Config ingestion and deterministic CSV output.

Configs are TOML with one flat section per subsystem ([run], [link],
[source], [memory], [sweep], [rng]).  Every key has a default except
``rng.seed``, which the stochastic commands require.  Unknown keys and
out-of-range values are rejected with their section.key path, and all
violations are reported at once.  ``render_config`` inverts
``parse_config`` exactly, and identical configs always serialize to
byte-identical CSV.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import tomli

from .errors import ConfigError
from .link import LinkConfig
from .montecarlo import RngSpec
from .optimizer import SweepSpec
from .spdc import MemoryConfig, SourceConfig

COMMANDS = ("evaluate", "sweep", "validate", "mc")

CSV_HEADER = (
    "distance_m", "mode", "m", "n", "lambda", "t_cut_s", "p_T", "p_ent",
    "avg_attempts", "avg_attempts_stderr", "rate_hz", "avg_fidelity",
    "avg_fidelity_stderr", "feasible", "source", "agree",
)


@dataclass(frozen=True)
class RunConfig:
    """Composition of every subsystem config plus run plumbing."""

    link: LinkConfig
    source: SourceConfig
    memory: MemoryConfig
    sweep: SweepSpec
    rng: RngSpec | None
    command: str = "evaluate"
    output_path: str = "results.csv"
    trials: int = 100_000
    partitions: int = 1


@dataclass(frozen=True)
class ResultRow:
    """One CSV output row; None fields render as empty cells."""

    distance_m: float
    mode: str
    m: int
    n: int
    lambda_: float | None
    t_cut_s: float | str | None
    p_T: float | None
    p_ent: float | None
    avg_attempts: float | None
    rate_hz: float
    avg_fidelity: float | None
    feasible: bool
    source: str
    avg_attempts_stderr: float | None = None
    avg_fidelity_stderr: float | None = None
    agree: bool | None = None


class _SectionReader:
    def __init__(self, name: str, data: dict, errors: list[str]):
        self.name = name
        self.data = dict(data)
        self.errors = errors

    def error(self, key: str, message: str) -> None:
        self.errors.append(f"{self.name}.{key}: {message}")

    def take(self, key: str, default):
        return self.data.pop(key, default)

    def number(self, key: str, default: float | None) -> float | None:
        raw = self.take(key, default)
        if raw is None:
            return default
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.error(key, f"expected a number, got {type(raw).__name__}")
            return default
        return float(raw)

    def integer(self, key: str, default: int | None) -> int | None:
        raw = self.take(key, default)
        if raw is None:
            return default
        if isinstance(raw, bool) or not isinstance(raw, int):
            self.error(key, f"expected an integer, got {type(raw).__name__}")
            return default
        return raw

    def string(self, key: str, default: str | None, choices=None) -> str | None:
        raw = self.take(key, default)
        if raw is None:
            return default
        if not isinstance(raw, str):
            self.error(key, f"expected a string, got {type(raw).__name__}")
            return default
        if choices is not None and raw not in choices:
            self.error(key, f"expected one of {choices}, got {raw!r}")
            return default
        return raw

    def number_or_none(self, key: str, default):
        raw = self.take(key, default)
        if raw is None:
            return default
        if isinstance(raw, str):
            if raw == "none":
                return None
            self.error(key, "expected a number or the string 'none'")
            return default
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.error(key, "expected a number or the string 'none'")
            return default
        return float(raw)

    def finish(self) -> None:
        for key in self.data:
            self.error(key, "unknown key")


def _float_tuple(reader: _SectionReader, key: str, default):
    raw = reader.take(key, None)
    if raw is None:
        return default
    if not isinstance(raw, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        reader.error(key, "expected a list of numbers")
        return default
    return tuple(float(v) for v in raw)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a TOML config; raises ConfigError with every issue."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"config: invalid TOML ({exc})"]) from None

    errors: list[str] = []
    known = {"run", "link", "source", "memory", "sweep", "rng"}
    for section in doc:
        if section not in known:
            errors.append(f"{section}: unknown section")
        elif not isinstance(doc[section], dict):
            errors.append(f"{section}: expected a table")

    run = _SectionReader("run", doc.get("run", {}), errors)
    command = run.string("command", "evaluate", choices=COMMANDS)
    output_path = run.string("output_path", "results.csv")
    trials = run.integer("trials", 100_000)
    partitions = run.integer("partitions", 1)
    if trials is not None and trials < 1:
        run.error("trials", "must be at least 1")
    if partitions is not None and partitions < 1:
        run.error("partitions", "must be at least 1")
    run.finish()

    link_r = _SectionReader("link", doc.get("link", {}), errors)
    anchors_raw = link_r.take("p_T_by_distance", None)
    anchors = None
    if anchors_raw is not None:
        ok = (isinstance(anchors_raw, list)
              and all(isinstance(p, list) and len(p) == 2
                      and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                              for v in p)
                      for p in anchors_raw))
        if ok:
            anchors = tuple((float(d), float(p)) for d, p in anchors_raw)
        else:
            link_r.error("p_T_by_distance", "expected a list of [distance_m, p_T] pairs")
    link_kwargs = dict(
        mode=link_r.string("mode", "direct", choices=("direct", "parametric")),
        p_T_direct=link_r.number("p_T_direct", 8e-3),
        ground_separation=link_r.number("ground_separation", 600e3),
        satellite_altitude=link_r.number("satellite_altitude", 500e3),
        transmitter_aperture=link_r.number("transmitter_aperture", 0.3),
        receiver_aperture=link_r.number("receiver_aperture", 1.0),
        wavelength=link_r.number("wavelength", 810e-9),
        pointing_jitter=link_r.number("pointing_jitter", 1e-6),
        atmospheric_transmittance_zenith=link_r.number(
            "atmospheric_transmittance_zenith", 0.8),
        heralding_time_override=link_r.number_or_none("heralding_time_override", None),
        p_T_by_distance=anchors,
    )
    link_r.finish()

    src_r = _SectionReader("source", doc.get("source", {}), errors)
    src_kwargs = dict(
        lambda_=src_r.number("lambda", 0.05),
        r_rep=src_r.number("r_rep", 1e7),
        m=src_r.integer("m", 2),
        n=src_r.integer("n", 1),
        mode=src_r.string("mode", "qudit", choices=("qubit", "qudit")),
    )
    src_r.finish()

    mem_r = _SectionReader("memory", doc.get("memory", {}), errors)
    mem_kwargs = dict(
        eta=mem_r.number("eta", 0.5),
        T_A=mem_r.number("T_A", 10.0),
        T_B=mem_r.number("T_B", 10.0),
        eps_1=mem_r.number("eps_1", 0.25),
        eps_x=mem_r.number("eps_x", 0.25),
        eps_y=mem_r.number("eps_y", 0.25),
        eps_z=mem_r.number("eps_z", 0.25),
        p_dark=mem_r.number("p_dark", 1.6e-5),
        t_cut=mem_r.number_or_none("t_cut", None),
    )
    mem_r.finish()

    sweep_r = _SectionReader("sweep", doc.get("sweep", {}), errors)
    t_cut_grid_raw = sweep_r.take("t_cut_grid", None)
    t_cut_grid = None
    if t_cut_grid_raw is not None:
        if not isinstance(t_cut_grid_raw, list):
            sweep_r.error("t_cut_grid", "expected a list of numbers and/or 'none'")
        else:
            t_cut_grid = []
            for v in t_cut_grid_raw:
                if isinstance(v, str) and v == "none":
                    t_cut_grid.append(None)
                elif isinstance(v, (int, float)) and not isinstance(v, bool):
                    t_cut_grid.append(float(v))
                else:
                    sweep_r.error("t_cut_grid", f"bad entry {v!r}")
            t_cut_grid = tuple(t_cut_grid)
    modes_raw = sweep_r.take("modes", None)
    modes = None
    if modes_raw is not None:
        if (isinstance(modes_raw, list)
                and all(isinstance(v, str) for v in modes_raw)):
            modes = tuple(modes_raw)
        else:
            sweep_r.error("modes", "expected a list of strings")
    n_values_raw = sweep_r.take("n_values", None)
    n_values = None
    if n_values_raw is not None:
        if (isinstance(n_values_raw, list)
                and all(isinstance(v, int) and not isinstance(v, bool) for v in n_values_raw)):
            n_values = tuple(n_values_raw)
        else:
            sweep_r.error("n_values", "expected a list of integers")
    sweep_kwargs: dict[str, Any] = dict(
        fidelity_floor=sweep_r.number("fidelity_floor", 0.9),
    )
    lam_grid = _float_tuple(sweep_r, "lambda_grid", None)
    if lam_grid is not None:
        sweep_kwargs["lambda_grid"] = lam_grid
    dist = _float_tuple(sweep_r, "distance_points", None)
    if dist is not None:
        sweep_kwargs["distance_points"] = dist
    if t_cut_grid is not None:
        sweep_kwargs["t_cut_grid"] = t_cut_grid
    if modes is not None:
        sweep_kwargs["modes"] = modes
    if n_values is not None:
        sweep_kwargs["n_values"] = n_values
    sweep_r.finish()

    rng_r = _SectionReader("rng", doc.get("rng", {}), errors)
    seed = rng_r.integer("seed", None)
    algorithm = rng_r.string("algorithm_id", "philox", choices=("philox", "pcg64"))
    rng_r.finish()
    if seed is None and command in ("mc", "validate"):
        errors.append(f"rng.seed: missing required key (command {command!r} is stochastic)")

    def build(section: str, ctor, kwargs):
        try:
            return ctor(**kwargs)
        except (ValueError, TypeError) as exc:
            errors.append(f"{section}: {exc}")
            return None

    link = build("link", LinkConfig, link_kwargs)
    source = build("source", SourceConfig, src_kwargs)
    memory = build("memory", MemoryConfig, mem_kwargs)
    sweep = build("sweep", SweepSpec, sweep_kwargs)
    rng = None
    if seed is not None:
        rng = build("rng", RngSpec, dict(seed=seed, algorithm_id=algorithm))

    if errors:
        raise ConfigError(errors)
    return RunConfig(link=link, source=source, memory=memory, sweep=sweep, rng=rng,
                     command=command, output_path=output_path,
                     trials=trials, partitions=partitions)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _toml_value(value) -> str:
    if value is None:
        return '"none"'
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        return text if any(c in text for c in ".eE") else text + ".0"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__}")


def render_config(cfg: RunConfig) -> str:
    """Serialize a RunConfig; parse_config(render_config(cfg)) == cfg."""
    lines: list[str] = []

    def section(name: str, pairs):
        lines.append(f"[{name}]")
        for key, value in pairs:
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")

    section("run", [
        ("command", cfg.command),
        ("output_path", cfg.output_path),
        ("trials", cfg.trials),
        ("partitions", cfg.partitions),
    ])
    link_pairs = [
        ("mode", cfg.link.mode),
        ("p_T_direct", cfg.link.p_T_direct),
        ("ground_separation", cfg.link.ground_separation),
        ("satellite_altitude", cfg.link.satellite_altitude),
        ("transmitter_aperture", cfg.link.transmitter_aperture),
        ("receiver_aperture", cfg.link.receiver_aperture),
        ("wavelength", cfg.link.wavelength),
        ("pointing_jitter", cfg.link.pointing_jitter),
        ("atmospheric_transmittance_zenith", cfg.link.atmospheric_transmittance_zenith),
    ]
    if cfg.link.heralding_time_override is not None:
        link_pairs.append(("heralding_time_override", cfg.link.heralding_time_override))
    if cfg.link.p_T_by_distance is not None:
        link_pairs.append(("p_T_by_distance",
                           [list(anchor) for anchor in cfg.link.p_T_by_distance]))
    section("link", link_pairs)
    section("source", [
        ("lambda", cfg.source.lambda_),
        ("r_rep", cfg.source.r_rep),
        ("m", cfg.source.m),
        ("n", cfg.source.n),
        ("mode", cfg.source.mode),
    ])
    section("memory", [
        ("eta", cfg.memory.eta),
        ("T_A", cfg.memory.T_A),
        ("T_B", cfg.memory.T_B),
        ("eps_1", cfg.memory.eps_1),
        ("eps_x", cfg.memory.eps_x),
        ("eps_y", cfg.memory.eps_y),
        ("eps_z", cfg.memory.eps_z),
        ("p_dark", cfg.memory.p_dark),
        ("t_cut", cfg.memory.t_cut),
    ])
    section("sweep", [
        ("lambda_grid", list(cfg.sweep.lambda_grid)),
        ("t_cut_grid", list(cfg.sweep.t_cut_grid)),
        ("fidelity_floor", cfg.sweep.fidelity_floor),
        ("distance_points", list(cfg.sweep.distance_points)),
        ("modes", list(cfg.sweep.modes)),
        ("n_values", list(cfg.sweep.n_values)),
    ])
    if cfg.rng is not None:
        section("rng", [
            ("seed", cfg.rng.seed),
            ("algorithm_id", cfg.rng.algorithm_id),
        ])
    return "\n".join(lines)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return f"{value:.12g}"


def write_results(rows: list[ResultRow], output_path: str) -> None:
    """Write rows as CSV: fixed header, 12 significant digits, LF endings.

    Rows are ordered by (mode, n, distance, source) so identical inputs
    always produce byte-identical files.
    """
    ordered = sorted(rows, key=lambda r: (r.mode, r.n, r.distance_m, r.source))
    lines = [",".join(CSV_HEADER)]
    for row in ordered:
        lines.append(",".join(_format_cell(v) for v in (
            row.distance_m, row.mode, row.m, row.n, row.lambda_, row.t_cut_s,
            row.p_T, row.p_ent, row.avg_attempts, row.avg_attempts_stderr,
            row.rate_hz, row.avg_fidelity, row.avg_fidelity_stderr,
            row.feasible, row.source, row.agree,
        )))
    with open(output_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
