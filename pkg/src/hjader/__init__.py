"""ADER discontinuous Galerkin schemes for Hamilton-Jacobi equations."""

from __future__ import annotations

from hjader.basis import (
    BasisError,
    BasisSpec,
    PredictorTables,
    assemble_predictor_tables,
    build_basis,
    default_tables,
    third_order_2d_tables,
)
from hjader.hamiltonian import CASE_NAMES, HamiltonianModel, ProblemCase, catalog, exact_solution
from hjader.mesh import Mesh1D, Mesh2D, ModalField, SolverConfig, StepError, project_initial
from hjader.predictor import PredictorError, predict
from hjader.solver1d import run, step

__all__ = [
    "CASE_NAMES",
    "BasisError",
    "BasisSpec",
    "HamiltonianModel",
    "Mesh1D",
    "Mesh2D",
    "ModalField",
    "PredictorError",
    "PredictorTables",
    "ProblemCase",
    "SolverConfig",
    "StepError",
    "assemble_predictor_tables",
    "build_basis",
    "catalog",
    "default_tables",
    "exact_solution",
    "predict",
    "project_initial",
    "run",
    "step",
    "third_order_2d_tables",
]
