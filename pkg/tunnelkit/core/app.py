"""
Core application module
"""
from flask import Flask, jsonify
from flask_cors import CORS

from tunnelkit.config.config import OUTPUT_DIR, TOOL_VERSION


def create_app():
    """Initialize the Flask application"""
    app = Flask(__name__)
    app.config['OUTPUT_DIR'] = OUTPUT_DIR
    CORS(app)

    # Register blueprints
    from tunnelkit.analytics.routes import analytics_bp
    from tunnelkit.trap.routes import trap_bp
    from tunnelkit.transmission.routes import transmission_bp
    from tunnelkit.harness.routes import runs_bp

    app.register_blueprint(analytics_bp)
    app.register_blueprint(trap_bp)
    app.register_blueprint(transmission_bp)
    app.register_blueprint(runs_bp)

    @app.route('/')
    def index():
        return jsonify({
            'name': 'tunnelkit',
            'version': TOOL_VERSION,
            'output_dir': app.config['OUTPUT_DIR'],
            'endpoints': sorted(str(rule) for rule in app.url_map.iter_rules()
                                if str(rule).startswith('/api/')),
        })

    return app
