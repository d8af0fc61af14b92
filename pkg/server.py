"""grouplaw API Flask app server. Initializes the Flask app and its error handlers."""

from flask import Flask
from flask_cors import CORS
from loguru import logger
from werkzeug.exceptions import HTTPException

from errors import GroupLawError
from models import GeneralResponse

# Initialize Flask app
app = Flask(__name__)
CORS(app)


@app.errorhandler(GroupLawError)
def handle_grouplaw_error(e: GroupLawError):
    """Report bad laws, descriptors and configs to the caller."""
    logger.warning(f"Rejected request: {e}")
    return GeneralResponse(message=str(e)).model_dump(), 400


@app.errorhandler(Exception)
def handle_exception(e):
    """Log all unhandled exceptions."""
    if isinstance(e, HTTPException):
        return e
    logger.exception("Unhandled exception occurred")
    return "Internal Server Error", 500
