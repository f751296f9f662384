"""Kernel backend selection.

The compiled extension is preferred when importable; the NumPy fallback is
always available. BGIOPT_KERNEL=python|compiled overrides the choice (useful
for benchmarking and for verifying that both backends agree).
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import kernel_py

try:
    from . import _kernel as _compiled
except ImportError:
    _compiled = None


def available_backends() -> dict[str, object]:
    out: dict[str, object] = {"python": kernel_py.run_simulation}
    if _compiled is not None:
        out["compiled"] = _compiled.run_simulation
    return out


def kernel_name() -> str:
    choice = os.environ.get("BGIOPT_KERNEL", "").strip().lower()
    if choice == "python":
        return "python"
    if choice == "compiled":
        if _compiled is None:
            raise ConfigError("BGIOPT_KERNEL=compiled but the extension is not built")
        return "compiled"
    if choice not in ("", "auto"):
        raise ConfigError(f"unknown BGIOPT_KERNEL value {choice!r}")
    return "compiled" if _compiled is not None else "python"


def get_kernel():
    return available_backends()[kernel_name()]
