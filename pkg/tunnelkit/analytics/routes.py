"""
Analytic estimate routes
"""
from flask import Blueprint, jsonify, request

from tunnelkit.analytics.models import estimate
from tunnelkit.config.config import logger
from tunnelkit.trap.models import TrapConfig
from tunnelkit.utils.errors import NonConfiningTrapError
from tunnelkit.utils.helpers import query_float, to_jsonable

# Create Blueprint
analytics_bp = Blueprint('analytics', __name__, url_prefix='/api/analytics')


@analytics_bp.route('', methods=['GET'])
def get_estimates():
    """μ, ε₀, densities and Γ_3b for a barrier height and atom number"""
    try:
        barrier = query_float(request.args, 'barrier_nk')
        atoms = query_float(request.args, 'atoms')
        result = estimate(TrapConfig(barrier_height=barrier), atoms)
    except (ValueError, NonConfiningTrapError) as e:
        logger.error(f"Bad analytics request: {e}")
        return jsonify({'error': str(e)}), 400

    return jsonify(to_jsonable(result.to_dict()))
