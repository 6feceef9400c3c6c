"""
Single-particle transmission routes
"""
import numpy as np
from flask import Blueprint, jsonify, request

from tunnelkit.config.config import logger
from tunnelkit.trap.models import TrapConfig
from tunnelkit.trap.saddle import find_geometry
from tunnelkit.transmission.models import (
    attempt_rate, beta_slope, default_energy_window, saddle_profile, transmission_curve
)
from tunnelkit.utils.errors import NonConfiningTrapError, TunnelkitError
from tunnelkit.utils.helpers import query_float, to_jsonable

# Create Blueprint
transmission_bp = Blueprint('transmission', __name__, url_prefix='/api/transmission')


@transmission_bp.route('', methods=['GET'])
def get_transmission():
    """(E, T, ln T) through the saddle-point barrier plus the slope β"""
    convention = request.args.get('convention', 'waist')
    try:
        barrier = query_float(request.args, 'barrier_nk')
        points = int(query_float(request.args, 'points', 41.0))
        cfg = TrapConfig(barrier_height=barrier)
        geometry = find_geometry(cfg)
        window = default_energy_window(geometry.trap_depth)
        e_min = query_float(request.args, 'e_min', window[0])
        e_max = query_float(request.args, 'e_max', window[1])
        if points < 2 or not e_max > e_min:
            raise ValueError("Need points >= 2 and e_max > e_min")
        profile = saddle_profile(cfg, geometry, convention)
    except (ValueError, NonConfiningTrapError) as e:
        return jsonify({'error': str(e)}), 400
    except TunnelkitError as e:
        logger.error(f"Transmission request failed: {e}")
        return jsonify({'error': str(e)}), 422

    try:
        curve = transmission_curve(profile, np.linspace(e_min, e_max, points))
        beta = beta_slope(profile, window)
    except ValueError as e:
        return jsonify({'error': str(e)}), 400
    except TunnelkitError as e:
        logger.error(f"Transmission calculation failed: {e}")
        return jsonify({'error': str(e)}), 422

    return jsonify(to_jsonable({
        'barrier_nk': barrier,
        'trap_depth_nk': geometry.trap_depth,
        'saddle_waist_um': geometry.saddle_waist * 1e6,
        'convention': convention,
        'beta_per_nk': beta,
        'beta_window_nk': window,
        'attempt_rate_hz': attempt_rate(cfg),
        'curve': [{'energy_nk': e, 'transmission': t, 'log_transmission': lt}
                  for e, t, lt in curve.to_rows()],
    }))
