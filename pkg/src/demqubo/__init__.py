"""Direct expectation minimization for QUBO, with classical baselines and a benchmark harness."""

from .qubo import (Convention, QuboInstance, WeightedGraph, brute_force, from_maxcut,
                   from_subset_sum, gen_random_gaussian, objective, read_instance,
                   to_plus_minus_one, to_zero_one, write_instance)
from .rounding import expected_value, gw_round, hyperplane_partitions_rank2
from .dem import DemRcParams, dc_minimize, dem_rc, exact_dem

__version__ = "0.1.0"
