"""Measurement-engineered oscillator dynamics.

A driven harmonic oscillator is coupled to a three-level meter that is
reset and destructively read out after every interaction interval;
selective pulses on addressed Fock levels turn the repeated measurements
into tunable dissipation, confinement, and memory effects. The package
provides the exact piecewise engine, the matching coarse-grained master
equation, distance-based non-Markovianity measures, and reproducible
parameter sweeps with a command-line front end.
"""
__version__ = "0.1.0"

from .statespace import (
    BIPARTITE, DensityOperator, HermitianPropagator, InvariantError, Ket,
    METER, METER_LEVELS, OSCILLATOR, SpaceConfig, apply_kraus,
    embed_with_meter, fock_state, linear_entropy, meter_state,
    partial_trace_meter, trace_distance, unitary_from_hamiltonian,
)
from .model import (
    ModelParams, ZenoPulse, annihilation_operator, dressed_state,
    drive_hamiltonian, frame_compensation, jaynes_cummings_hamiltonian,
    total_hamiltonian, zeno_pulse_hamiltonian,
)
from .dynamics import (
    ConditionalOps, IntervalChannels, ProtocolSpec, Schedule, Trajectory,
    TruncationError, conditional_step_operators, derive_schedule,
    interval_step_operators, piecewise_samples, rabi_closed_form,
    run_piecewise,
)
from .lindblad import (
    LindbladParams, RateCoefficients, drive_unitary, first_order_kraus,
    kraus_step, lindblad_rhs, propagate_lindblad, rates_from_angle,
)
from .measures import (
    BlochAngles, BlochScanResult, DistanceSeries, StatePair, bloch_scan,
    bloch_state, blp_from_distance_series, blp_measure, distance_series,
    escape_population, lindblad_blp, lindblad_distance_series,
    lower_envelope, optimal_pair_phase, pair_from_angles, rotation_axis,
    standard_pair,
)
from .experiments import (
    ComparisonRow, EngineComparison, SweepResult, SweepRow, SweepSpec,
    TurningPoint, addressability_margin, compare_engines, emit_plot_script,
    read_results, smoke_spec, sweep_single_pulse, sweep_two_pulse,
    write_manifest, write_results,
)
