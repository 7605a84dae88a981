"""Interval and fat Cantor sets, discrete Lipschitz-derivative estimators, and
explicit functions whose local Lipschitz derivative is an indicator."""
from .constructors import (BallBasis, BallFamily, Bracket, MeasurePrimitive, RadialComposition, Region, TentSum,
                           measure_primitive_eval, pack_regular_closed, radial_eval, tent_eval, tent_sum_eval)
from .density import (complement_connected, density_profile, is_quasi_dense, quasi_dense_core,
                      witness_balls)
from .lipest import (GridFunction, LipEstimate, LipField, big_lip_estimate, check_lip_one_set, llip_estimate,
                     llip_field, little_lip_estimate, radius_sweep)
from .realsets import (CantorSet, GeometricAlpha, IntervalSet, PrefixAlpha, cantor_measure, cantor_stage,
                       cantor_window_measure, fat_cantor, intersect, make_interval_set, measure)

__all__ = [name for name in dir() if not name.startswith("_")]
