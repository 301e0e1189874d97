"""Two-point connectivity of Bernoulli bond percolation on finite boxes of Z^d."""
from .lattice import BoxSpec, LatticeGraph, axis_pair, boundary_vertices, box_graph, build_box
from .rng import RngStream
from .core import (BondConfig, cluster, connected, connected_bfs, sample_config, truncated_event,
                   TWO_POINT, TRUNCATED, PROXY_NOTE)
from .oracle import ConnectivityPolynomial, Event, connectivity_counts, eval_polynomial, exact_curve
from .estimators import (Estimate, PairedCurve, XiEstimate, estimate_curve, estimate_xi,
                         sweep_estimate)
from .analysis import (BoundParams, check_bounds, check_monotone, fit_oz, lemma2_bounds, lemma4_bounds,
                       lemma6_bounds, odds_ratio, ratio_diagnostic, scan_monotonicity)

__version__ = "0.1.0"
