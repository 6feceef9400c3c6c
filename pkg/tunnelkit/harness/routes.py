"""
Run manifest routes
"""
import os

from flask import Blueprint, current_app, jsonify, request

from tunnelkit.harness.manifest import find_manifests

# Create Blueprint
runs_bp = Blueprint('runs', __name__, url_prefix='/api/runs')


@runs_bp.route('', methods=['GET'])
def get_runs():
    """Manifests under the output root (or a subdirectory given as output_dir), newest first"""
    base = os.path.realpath(current_app.config['OUTPUT_DIR'])
    root = os.path.realpath(os.path.join(base, request.args.get('output_dir', '')))
    if os.path.commonpath([base, root]) != base:
        return jsonify({'error': 'output_dir must lie inside the output root'}), 400
    if not os.path.isdir(root):
        return jsonify({'error': f"Output directory '{os.path.relpath(root, base)}' not found"}), 400

    manifests = find_manifests(root)
    status = request.args.get('status')
    if status:
        manifests = [m for m in manifests if m.status == status]

    return jsonify([{
        'directory': m.diagnostics.get('directory'),
        'command': m.command,
        'label': m.label,
        'config_hash': m.config_hash,
        'tool_version': m.tool_version,
        'status': m.status,
        'started_at': m.started_at,
        'finished_at': m.finished_at,
        'duration_seconds': m.duration_seconds,
        'outputs': m.outputs,
    } for m in manifests])
