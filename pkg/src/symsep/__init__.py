"""Symmetric separation of unit vectors: norms, certificates and searches."""

__version__ = "0.1.0"

from symsep.vectors import CoordVector, add, basis, restrict, staircase_c0, strictly_before
from symsep.norms import (
    AuerbachRenorm,
    BiorthogonalSystem,
    Functional,
    Lp,
    MaxOf,
    PhiRenorm,
    Sup,
    Tsirelson,
    dual_norm,
    norm,
    norming_functional,
    parse_norm,
)
from symsep.tsirelson import l1_spreading_certificate, tsirelson_norm, tsirelson_oracle
from symsep.separation import SeparationReport, disjoint_block_certificate, symmetric_separation
from symsep.search import (
    NoExtension,
    SearchConfig,
    empirical_kottman,
    greedy_chain,
    greedy_extension,
    xbox_chain,
)

__all__ = [
    "AuerbachRenorm",
    "BiorthogonalSystem",
    "CoordVector",
    "Functional",
    "Lp",
    "MaxOf",
    "NoExtension",
    "PhiRenorm",
    "SearchConfig",
    "SeparationReport",
    "Sup",
    "Tsirelson",
    "add",
    "basis",
    "disjoint_block_certificate",
    "dual_norm",
    "empirical_kottman",
    "greedy_chain",
    "greedy_extension",
    "l1_spreading_certificate",
    "norm",
    "norming_functional",
    "parse_norm",
    "restrict",
    "staircase_c0",
    "strictly_before",
    "symmetric_separation",
    "tsirelson_norm",
    "tsirelson_oracle",
    "xbox_chain",
]
