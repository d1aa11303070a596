from dataclasses import replace

from .exceptions import ScheduleError
from .types import TIME_TOLERANCE, GateMode, PulseSchedule, Segment


def compile(schedule: PulseSchedule) -> list[Segment]:
    """Lower a schedule to constant-coefficient segments.

    Normally (tau1, on), (gap, off), (tau2 + tail, on). With no gap and
    identical pulses the two pulses merge into one segment."""
    first = complex(schedule.probe_amp)
    second = schedule.second_probe
    last = schedule.tau2 + schedule.tail

    if schedule.gap == 0:
        if first == second:
            return [Segment(schedule.tau1 + last, True, first)]
        return [Segment(schedule.tau1, True, first), Segment(last, True, second)]

    return [
        Segment(schedule.tau1, True, first),
        Segment(schedule.gap, False, 0j),
        Segment(last, True, second),
    ]


def first_pulse_gate(schedule: PulseSchedule, t_prime: float) -> PulseSchedule:
    """Move the gate inside the first pulse, t_prime after its onset."""
    if t_prime < 0 or t_prime + schedule.gate_len > schedule.tau1 + TIME_TOLERANCE:
        raise ScheduleError(
            f"gate [{t_prime}, {t_prime + schedule.gate_len}] does not fit inside "
            f"the first pulse [0, {schedule.tau1}]"
        )
    return replace(schedule, gate_start=t_prime, gate_mode=GateMode.FIRST_PULSE)


def breakpoints(schedule: PulseSchedule) -> list[float]:
    """Segment boundaries and gate edges, sorted and de-duplicated."""
    edges = {0.0, schedule.horizon, schedule.gate_start, schedule.gate_end}
    t = 0.0
    for segment in compile(schedule):
        t += segment.duration
        edges.add(t)

    ordered = sorted(edges)
    merged = [ordered[0]]
    for edge in ordered[1:]:
        if edge - merged[-1] > TIME_TOLERANCE:
            merged.append(edge)
    return merged
