"""Decentralized agent controllers driven only by the broadcast error e."""

from __future__ import annotations

from dataclasses import replace

from app.schemas.agent import AgentParams, AgentState, ControllerKind, GainMode
from app.utils.exceptions import ControllerKindError


def gain(params: AgentParams, phi: float, e: float) -> float:
    """Variable gain K_i(φ, e): k_hi when φ·e < 0, k_lo otherwise."""
    if params.kind is ControllerKind.INTEGRAL or params.gains is None:
        raise ControllerKindError("integral agents use their fixed gain k, not a schedule")
    sched = params.gains
    if phi * e >= 0:
        return sched.k_lo
    if sched.mode is GainMode.STAIRCASE and phi <= 0:
        # φ < 0, e > 0 falls in the "φ <= 0 and e >= 0" branch
        return sched.k_lo
    return sched.k_hi


def asc_output(phi: float, params: AgentParams) -> float:
    return params.u_p if phi > 0 else params.u_n


def assc_output(phi: float, params: AgentParams) -> float:
    if phi >= params.phi_p:
        return params.u_p
    if phi <= params.phi_n:
        return params.u_n
    return params.u_n + params.slope * (phi - params.phi_n)


def integral_output(phi: float, params: AgentParams) -> float:
    return min(max(phi, params.u_n), params.u_p)


_OUTPUTS = {
    ControllerKind.ASC: asc_output,
    ControllerKind.ASSC: assc_output,
    ControllerKind.INTEGRAL: integral_output,
}


def role_output(phi: float, params: AgentParams) -> float:
    """σ_i(φ) for the agent's kind, ignoring faults."""
    return _OUTPUTS[params.kind](phi, params)


def agent_output(state: AgentState, params: AgentParams) -> float:
    if state.faulted:
        return 0.0
    return role_output(state.phi, params)


def phase_rate(state: AgentState, params: AgentParams, e: float) -> float:
    k = params.k if params.kind is ControllerKind.INTEGRAL else gain(params, state.phi, e)
    return k * e


def agent_step(state: AgentState, params: AgentParams, e: float, dt: float) -> AgentState:
    """Explicit Euler step of φ' = K(φ, e)·e, gain taken at the pre-step values."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if e == 0:
        return state
    return replace(state, phi=state.phi + phase_rate(state, params, e) * dt)
