"""Flux tubes, spectral flow and Fredholm indices for 2D tight-binding models."""
from .lattice import LatticeSpace, Region, build_lattice, centered_lattice
from .models import FluxFamily, multi_flux_family, named_model
from .spectral import kernel_index, spectral_flow, spectral_flow_trace
from .topology import chern_realspace, index_pfp, verify_sf_equals_index

__all__ = [
    "LatticeSpace", "Region", "build_lattice", "centered_lattice",
    "FluxFamily", "named_model", "multi_flux_family",
    "spectral_flow", "spectral_flow_trace", "kernel_index",
    "chern_realspace", "index_pfp", "verify_sf_equals_index",
]
