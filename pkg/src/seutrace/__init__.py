"""Backward tracing of single-bit upsets in a small RISC-V core by model checking.

Subpackages: ``ir`` (bit-level netlists), ``rv32`` (core, ISA model,
lockstep), ``props`` (assertion language and property families), ``sat``
(solvers), ``bmc`` (bounded checks and k-induction) and ``campaign``
(classification runs, reports, CLI).  ``fault``, ``env`` and ``oracle`` sit
at the top level.
"""

__version__ = "0.1.0"
