"""Sequential detection of an emerging supercritical spike in a stream of
deformed Wigner matrices ``M_t = s_t x_t x_t^T + W_t / sqrt(n)``.

The monitor tracks the largest eigenvalue of each matrix and raises an alarm
when a self-normalized partial-sum statistic exceeds a Monte Carlo critical
value.
"""

from .core import (EigenSeries, MonitorVerdict, ParseError, QuantileRow, QuantileTable,
                   SymMatrix, read_matrix_stream, read_quantile_table, write_matrix_stream,
                   write_quantile_table)
from .detector import (DegenerateNormalizerError, DetectorState, compute_dm, compute_vm,
                       gamma, gamma_path, monitor)
from .eigen import EigenOptions, IterationLimitError, largest_eigenvalue, largest_eigenvalues
from .quantiles import QuantileRequest, cached_quantiles, quantiles_of_L, simulate_L
from .synth import SignalSpec, WignerStreamSpec, gen_phi, gen_spike, gen_stream, next_wigner

__version__ = "0.1.0"
