"""Digit statistics of concatenation constants 0.a(1)a(2)... and an exact
C^1 interpolant of the prime-counting function."""

from .blocks import (
    BlockCensus,
    FrequencyReport,
    benford_leading,
    census,
    census_parallel,
    count_overlapping,
    frequency_report,
)
from .digits import Block, Kind, StreamSpec, digits_of, prefix, stream_digits
from .eta import EtaSample, eta_f_sample, eta_fprime_sample, eta_sweep, rh_lower_sample
from .primes import PrimeTables, build_tables, cramer_stats, dusart_check
from .svfun import SvFunction, SvParams, check_construction, interval_coeffs

__version__ = "0.1.0"
