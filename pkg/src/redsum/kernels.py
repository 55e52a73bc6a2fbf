"""Backend selection for the hot kernels.

Prefers the compiled Cython extension; falls back to the pure-Python twin
when the extension was not built. ``BACKEND`` names the active one. Set
``REDSUM_KERNELS=python`` (or ``cython``) to force a backend, e.g. for the
benchmark or to test the fallback.
"""

import os

_forced = os.environ.get("REDSUM_KERNELS", "").strip().lower()

if _forced == "python":
    from redsum import _pykernels as _impl

    BACKEND = "python"
elif _forced == "cython":
    from redsum import _ckernels as _impl

    BACKEND = "cython"
elif _forced:
    raise ImportError(f"REDSUM_KERNELS={_forced!r}: expected 'python' or 'cython'")
else:
    try:
        from redsum import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built on this install
        from redsum import _pykernels as _impl

        BACKEND = "python"

lcs_length_ids = _impl.lcs_length
ngram_overlap_ids = _impl.ngram_overlap
