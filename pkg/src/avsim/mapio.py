"""Map codec registry and lossy-import accounting.

Codecs are keyed by format name so further formats can be added without
touching call sites. Importers take bytes and return (HdMap, FormatReport);
exporters take an HdMap and return (bytes, FormatReport).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import MapFormatError
from .mapcore import HdMap, load_native, save_native


@dataclass(frozen=True)
class FormatWarning:
    locator: str
    message: str
    dropped: bool = False

    def __str__(self) -> str:
        tag = " [dropped]" if self.dropped else ""
        return f"{self.locator}: {self.message}{tag}"


@dataclass
class FormatReport:
    warnings: list[FormatWarning] = field(default_factory=list)

    def warn(self, locator: str, message: str, dropped: bool = False) -> None:
        self.warnings.append(FormatWarning(locator, message, dropped))

    @property
    def dropped_elements(self) -> int:
        return sum(1 for w in self.warnings if w.dropped)

    def summary(self) -> str:
        lines = [f"{len(self.warnings)} warning(s), {self.dropped_elements} element(s) dropped"]
        lines += [f"  {w}" for w in self.warnings]
        return "\n".join(lines)


_IMPORTERS: dict[str, object] = {}
_EXPORTERS: dict[str, object] = {}

_EXTENSIONS = {".json": "native", ".osm": "lanelet2", ".xodr": "opendrive"}


def register_importer(name: str, fn) -> None:
    _IMPORTERS[name] = fn


def register_exporter(name: str, fn) -> None:
    _EXPORTERS[name] = fn


def format_for_path(path) -> str:
    ext = Path(path).suffix.lower()
    if ext not in _EXTENSIONS:
        raise MapFormatError(f"unsupported map extension {ext!r} ({path})")
    return _EXTENSIONS[ext]


def import_map(data: bytes, fmt: str) -> tuple[HdMap, FormatReport]:
    _ensure_codecs()
    if fmt not in _IMPORTERS:
        raise MapFormatError(f"no importer for format {fmt!r}")
    return _IMPORTERS[fmt](data)


def export_map(hd_map: HdMap, fmt: str) -> tuple[bytes, FormatReport]:
    _ensure_codecs()
    if fmt not in _EXPORTERS:
        raise MapFormatError(f"no exporter for format {fmt!r}")
    return _EXPORTERS[fmt](hd_map)


def load_map_file(path) -> tuple[HdMap, FormatReport]:
    data = Path(path).read_bytes()
    return import_map(data, format_for_path(path))


def _ensure_codecs() -> None:
    if "native" in _IMPORTERS:
        return
    from . import lanelet2_io, opendrive_io

    register_importer("native", lambda data: (load_native(data), FormatReport()))
    register_exporter("native", lambda m: (save_native(m), FormatReport()))
    register_importer("lanelet2", lanelet2_io.import_lanelet2)
    register_exporter("lanelet2", lanelet2_io.export_lanelet2)
    register_importer("opendrive", opendrive_io.import_opendrive)
    register_exporter("opendrive", opendrive_io.export_opendrive)
