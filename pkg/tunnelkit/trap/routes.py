"""
Trap geometry routes
"""
from flask import Blueprint, jsonify, request

from tunnelkit.config.config import logger
from tunnelkit.trap.models import TrapConfig
from tunnelkit.trap.saddle import find_geometry
from tunnelkit.utils.errors import GeometryError, NonConfiningTrapError
from tunnelkit.utils.helpers import query_float

# Create Blueprint
trap_bp = Blueprint('trap', __name__, url_prefix='/api/trap')


@trap_bp.route('/geometry', methods=['GET'])
def get_geometry():
    """Minimum, saddle points and trap depth for a barrier height"""
    try:
        barrier = query_float(request.args, 'barrier_nk')
        cfg = TrapConfig(barrier_height=barrier)
    except ValueError as e:
        return jsonify({'error': str(e)}), 400

    try:
        geometry = find_geometry(cfg)
    except NonConfiningTrapError as e:
        return jsonify({'error': str(e)}), 400
    except GeometryError as e:
        logger.error(f"Geometry search failed at {barrier} nK: {e}")
        return jsonify({'error': str(e)}), 422

    return jsonify(geometry.to_dict())
