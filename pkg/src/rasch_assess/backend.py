"""Kernel backend selection.

Prefers the compiled extension (``rasch_assess._core``) and falls back to the
numpy implementation when the extension is absent. Override with the
environment variable ``RASCH_ASSESS_BACKEND`` set to ``pure`` or ``compiled``
(``compiled`` raises if the extension did not build). Both backends expose
the same function set; parity is covered by the test suite and measured by
``benchmarks/bench_backends.py``.
"""

from __future__ import annotations

import os

from . import _purekernels

_requested = os.environ.get("RASCH_ASSESS_BACKEND", "auto").strip().lower()
if _requested not in {"auto", "pure", "compiled"}:
    raise ValueError(
        f"RASCH_ASSESS_BACKEND={_requested!r} not one of auto, pure, compiled"
    )

if _requested == "pure":
    _impl = _purekernels
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "compiled backend requested but rasch_assess._core is not "
                "built; reinstall without RASCH_ASSESS_SKIP_EXT"
            ) from None
        _impl = _purekernels

ACTIVE_BACKEND: str = _impl.NAME

prob_table = _impl.prob_table
esw = _impl.esw
person_loglik = _impl.person_loglik
item_loglik = _impl.item_loglik
total_loglik = _impl.total_loglik
beta_profile = _impl.beta_profile
delta_profile = _impl.delta_profile
tau_profile = _impl.tau_profile


def available_backends() -> tuple[str, ...]:
    """Names of importable backends, compiled first when present."""
    try:
        from . import _core  # noqa: F401
    except ImportError:
        return ("pure",)
    return ("compiled", "pure")
