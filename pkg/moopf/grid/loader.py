from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Mapping

import yaml
from pydantic import ValidationError

from moopf.constants import BUNDLED_CASES, CASE_SCHEMA_VERSION
from moopf.errors import CaseFormatError, TopologyError
from moopf.grid.schema import CaseFile
from moopf.grid.types import Branch, Bus, Generator, GridCase, RenewableCoeffs, ThermalCoeffs

_LOGGER = logging.getLogger(__name__)
_CASES_DIR = Path(__file__).parent / "cases"
_MAX_CASE_BYTES = 1024 * 1024

DEFAULT_RENEWABLE_COST = {"direct": 1.6, "h_r": 3.0, "h_p": 1.5}
DEFAULT_AVAILABILITY = {
    "wind": {"shape": 2.0, "scale": 9.0, "cut_in": 3.0, "rated_speed": 16.0, "cut_out": 25.0},
    "solar": {"mu": 6.0, "sigma": 0.6, "standard_irradiance": 800.0},
}


def case_path(name: str) -> Path:
    """Resolve a bundled case short name (``case33``) to its file."""
    key = name.strip().lower()
    if key not in BUNDLED_CASES:
        raise CaseFormatError(f"unknown bundled case '{name}' (have: {', '.join(BUNDLED_CASES)})")
    return _CASES_DIR / f"{key}.yaml"


def _read_case_payload(path: Path) -> Any:
    if not path.exists():
        raise CaseFormatError(f"case file not found: {path}")
    if path.stat().st_size > _MAX_CASE_BYTES:
        raise CaseFormatError(f"{path} exceeds {_MAX_CASE_BYTES} byte limit")
    try:
        with path.open("r", encoding="utf-8") as handle:
            return yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise CaseFormatError(f"{path}: not parsable as YAML: {exc}") from exc


def load_case(path: str | Path) -> GridCase:
    """Load and validate a case file, or a bundled case by short name."""
    p = Path(path)
    if not p.suffix and str(path).strip().lower() in BUNDLED_CASES:
        p = case_path(str(path))
    payload = _read_case_payload(p)
    return case_from_mapping(payload, source=str(p))


def case_from_mapping(payload: Any, *, source: str = "<mapping>") -> GridCase:
    if not isinstance(payload, Mapping):
        raise CaseFormatError(f"{source}: top level must be a mapping")
    version = payload.get("schema_version")
    if version != CASE_SCHEMA_VERSION:
        raise CaseFormatError(
            f"{source}: unsupported schema_version {version!r} (expected {CASE_SCHEMA_VERSION!r})"
        )
    try:
        parsed = CaseFile.model_validate(payload)
    except ValidationError as exc:
        raise CaseFormatError(f"{source}: {exc}") from exc
    return _build_case(parsed, source)


def _build_case(parsed: CaseFile, source: str) -> GridCase:
    ids = [b.id for b in parsed.buses]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise TopologyError(f"{source}: duplicate bus ids {dupes}")
    known = set(ids)
    slack_ids = [b.id for b in parsed.buses if b.slack]
    if len(slack_ids) != 1:
        raise TopologyError(f"{source}: need exactly one slack bus, found {len(slack_ids)}")

    gen_buses = [g.bus for g in parsed.generators]
    for bus_id in gen_buses:
        if bus_id not in known:
            raise TopologyError(f"{source}: generator attached to unknown bus {bus_id}")
    if len(set(gen_buses)) != len(gen_buses):
        raise TopologyError(f"{source}: more than one generator on a bus")

    base_kv = parsed.base.kv
    base_mva = parsed.base.mva
    z_base = base_kv**2 / base_mva
    i_base_a = 1000.0 * base_mva / (math.sqrt(3.0) * base_kv)

    branches = []
    for br in parsed.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in known:
                raise TopologyError(f"{source}: branch references unknown bus {end}")
        branches.append(
            Branch(
                from_bus=br.from_bus,
                to_bus=br.to_bus,
                resistance=br.r / z_base,
                reactance=br.x / z_base,
                s_max=br.smax,
                i_thermal=br.imax / i_base_a,
            )
        )

    hosted = set(gen_buses) - set(slack_ids)
    buses = tuple(
        Bus(
            id=b.id,
            kind="slack" if b.slack else ("generator" if b.id in hosted else "load"),
            load_p=b.p,
            load_q=b.q,
            v_min=b.vmin,
            v_max=b.vmax,
        )
        for b in parsed.buses
    )
    generators = tuple(_build_generator(g) for g in parsed.generators)
    case = GridCase(
        name=parsed.name,
        buses=buses,
        branches=tuple(branches),
        generators=generators,
        base_kv=base_kv,
        base_mva=base_mva,
    )
    _check_radial(case, source)
    if parsed.header is not None:
        _check_header(case, parsed, source)
    _LOGGER.debug(
        "case loaded",
        extra={"case": case.name, "buses": case.n_buses, "generators": case.n_generators},
    )
    return case


def _build_generator(g: Any) -> Generator:
    if g.kind == "thermal":
        cost = ThermalCoeffs(
            a=g.cost["a"], b=g.cost["b"], c=g.cost["c"], d=g.cost.get("d", 0.0), e=g.cost.get("e", 0.0)
        )
        availability: dict[str, float] = {}
    else:
        direct_key = "f" if g.kind == "wind" else "g"
        cost = RenewableCoeffs(
            direct=g.cost.get(direct_key, DEFAULT_RENEWABLE_COST["direct"]),
            reserve=g.cost.get("h_r", DEFAULT_RENEWABLE_COST["h_r"]),
            penalty=g.cost.get("h_p", DEFAULT_RENEWABLE_COST["h_p"]),
        )
        availability = {**DEFAULT_AVAILABILITY[g.kind], **g.availability}
    return Generator(
        kind=g.kind,
        bus=g.bus,
        p_min=g.pmin,
        p_max=g.pmax,
        q_min=g.qmin,
        q_max=g.qmax,
        cost=cost,
        availability=availability,
    )


def _check_radial(case: GridCase, source: str) -> None:
    if case.n_branches != case.n_buses - 1:
        raise TopologyError(
            f"{source}: not radial: {case.n_branches} branches for {case.n_buses} buses"
        )
    reached = len(case.tree.order)
    if reached != case.n_buses:
        raise TopologyError(f"{source}: disconnected: {case.n_buses - reached} buses unreachable from slack")


def _check_header(case: GridCase, parsed: CaseFile, source: str) -> None:
    header = parsed.header
    assert header is not None
    declared = {
        "buses": (header.buses, case.n_buses),
        "branches": (header.branches, case.n_branches),
        "thermal": (header.thermal, case.n_thermal),
        "wind": (header.wind, case.n_wind),
        "solar": (header.solar, case.n_solar),
    }
    bad = {k: v for k, v in declared.items() if v[0] != v[1]}
    if bad:
        detail = ", ".join(f"{k} declared {d} found {f}" for k, (d, f) in bad.items())
        raise TopologyError(f"{source}: count mismatch vs header: {detail}")
