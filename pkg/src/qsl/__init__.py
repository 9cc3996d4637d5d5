"""Spectral solver for q-Sturm-Liouville problems on the lattice {q^n}.

Submodules: ``lattice`` (grid functions and q-calculus), ``potential``,
``solve`` (fundamental solutions), ``weyl`` (disks and the m-function),
``spectrum`` (eigenpairs), ``expand`` (expansions and the resolvent) and
``cli``.
"""
from .config import RunConfig, parse_config
from .errors import (ContractError, IngestionError, LatticeRangeError, NumericFailure, PreconditionError,
                     QslError, StaleEigenvalueError, ValidationError)
from .expand import GreenKernel, membership_check, parseval_report, reconstruct, resolvent_suite
from .lattice import GridFunction, LatticeSpec, Scaled, bilinear_pairing, jackson_integral, wronskian
from .potential import PotentialSpec, load_table, materialize
from .solve import SolutionPair, apply_L, solution_pair
from .spectrum import EigenPair, SpectrumResult, dense_oracle, find_eigenvalues
from .weyl import Method, Verdict, classify, m_function, weyl_disk

__version__ = "0.1.0"
