#!/usr/bin/env python
"""Command-line entry point for curveflow: curveflow_run, curveflow_sweep, curveflow_check, curveflow_audit and test."""
import os
import sys


def main():
    settings_module = 'config.test_settings' if sys.argv[1:2] == ['test'] else 'config.settings'
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', settings_module)
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the packages in requirements.txt "
            "into the active environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
