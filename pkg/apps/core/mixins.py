"""
Common mixins for views and management commands.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import CommandError
from django.core.paginator import EmptyPage, PageNotAnInteger, Paginator
from django.db.models import Q

from .exceptions import ClemsError, UnreadableInputError

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
RUNTIME_ERROR = 1


class PaginationMixin:
    """Mixin to handle pagination consistently."""

    paginate_by = settings.EXPERIMENTS_PER_PAGE
    page_kwarg = 'page'

    def paginate_queryset(self, queryset, page_size=None):
        """Paginate the queryset."""
        if page_size is None:
            page_size = self.paginate_by

        paginator = Paginator(queryset, page_size)
        page = self.request.GET.get(self.page_kwarg)

        try:
            page_obj = paginator.page(page)
        except PageNotAnInteger:
            page_obj = paginator.page(1)
        except EmptyPage:
            page_obj = paginator.page(paginator.num_pages)

        return page_obj

    def get_pagination_context(self, page_obj) -> Dict[str, Any]:
        return {
            'page': page_obj.number,
            'num_pages': page_obj.paginator.num_pages,
            'count': page_obj.paginator.count,
        }


class FilterMixin:
    """Mixin to handle filtering consistently."""

    filter_fields = []
    search_fields = []

    def filter_queryset(self, queryset):
        """Apply filters to the queryset."""
        search = self.request.GET.get('search')
        if search and self.search_fields:
            search_q = Q()
            for field in self.search_fields:
                search_q |= Q(**{f"{field}__icontains": search})
            queryset = queryset.filter(search_q)

        for field in self.filter_fields:
            value = self.request.GET.get(field)
            if value:
                queryset = queryset.filter(**{field: value})

        return queryset

    def get_filter_context(self) -> Dict[str, Any]:
        return {
            'search': self.request.GET.get('search', ''),
            'filters': {
                field: self.request.GET.get(field, '')
                for field in self.filter_fields
            }
        }


def _message(exc: BaseException) -> str:
    if isinstance(exc, ValidationError):
        if hasattr(exc, 'error_dict'):
            return '; '.join(f"{field}: {' '.join(messages)}" for field, messages in exc.message_dict.items())
        return ' '.join(exc.messages)
    return str(exc)


class CommandErrorsMixin:
    """
    Shared plumbing for the command-line entry points.

    Domain failures surface as ``CommandError`` with a one-line
    ``error[<kind>]: <message>`` text. Missing or unreadable inputs exit with
    the usage code 2, everything else with 1.
    """

    @contextmanager
    def domain_errors(self):
        try:
            yield
        except CommandError:
            raise
        except FileNotFoundError as exc:
            raise CommandError(f"error[usage]: {exc}", returncode=USAGE_ERROR) from exc
        except UnreadableInputError as exc:
            raise CommandError(f"error[usage]: {exc}", returncode=USAGE_ERROR) from exc
        except (ClemsError, ValidationError) as exc:
            raise CommandError(f"error[{type(exc).__name__}]: {_message(exc)}", returncode=RUNTIME_ERROR) from exc

    def require_path(self, value: str | None, flag: str, must_exist: bool = True) -> Path:
        if not value:
            raise CommandError(f"error[usage]: {flag} is required", returncode=USAGE_ERROR)
        path = Path(value)
        if must_exist and not path.exists():
            raise CommandError(f"error[usage]: {flag} {value} does not exist", returncode=USAGE_ERROR)
        return path

    def write_json(self, text: str, out: str | None) -> None:
        if out:
            Path(out).write_text(text, encoding='utf-8')
            self.stdout.write(self.style.SUCCESS(f"Wrote {out}"))
        else:
            self.stdout.write(text)
