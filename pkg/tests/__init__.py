"""Tests for the ik4_core library, the command line and the web service."""
