"""AC power flow over grid tables."""

from .kernels import NAME as KERNEL
from .solver import (
    AdmittanceMatrix, BusResult, ExtGridResult, LineResult, PowerFlowResult, TrafoResult,
    build_ybus, bus_injections, dump_result, load_result, solve,
)

__all__ = [
    "KERNEL", "AdmittanceMatrix", "BusResult", "ExtGridResult", "LineResult", "PowerFlowResult",
    "TrafoResult", "build_ybus", "bus_injections", "dump_result", "load_result", "solve",
]
