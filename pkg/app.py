"""
HTTP entry point
"""
from tunnelkit.core.app import create_app
from tunnelkit.config.config import DEBUG

app = create_app()

if __name__ == '__main__':
    app.run(debug=DEBUG)
