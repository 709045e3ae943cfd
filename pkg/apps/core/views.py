"""
Project error handlers.

Every view of the project answers JSON, so the error pages do too.
"""
from django.http import HttpRequest, JsonResponse
import logging

logger = logging.getLogger(__name__)


def _error(request: HttpRequest, status: int, message: str) -> JsonResponse:
    return JsonResponse(
        {'error': {'status': status, 'message': message, 'path': request.path}},
        status=status,
    )


def error_400(request: HttpRequest, exception=None) -> JsonResponse:
    """Handle 400 Bad Request errors."""
    logger.warning(f"400 error for {request.path}")
    return _error(request, 400, 'Bad request')


def error_403(request: HttpRequest, exception=None) -> JsonResponse:
    """Handle 403 Forbidden errors."""
    logger.warning(f"403 error for {request.path}")
    return _error(request, 403, 'Forbidden')


def error_404(request: HttpRequest, exception=None) -> JsonResponse:
    """Handle 404 Not Found errors."""
    logger.info(f"404 error for {request.path}")
    return _error(request, 404, 'Not found')


def error_500(request: HttpRequest) -> JsonResponse:
    """Handle 500 Internal Server errors."""
    logger.error(f"500 error for {request.path}")
    return _error(request, 500, 'Internal server error')
